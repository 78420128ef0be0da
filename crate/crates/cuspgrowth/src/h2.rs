//! Exact orbit counting for Γ(2) ⊂ PSL(2,ℤ) acting on the upper half-plane,
//! with the parabolic subgroup P = ⟨z ↦ z + 2⟩ fixing ∞.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asymptotics::CuspModel;
use crate::convolution::{counting_band, BandParams, VGammaModel};
use crate::error::{invalid, Error, Result};
use crate::series::{estimate_exponents, Anchor, log_grid, par_map, ExponentEstimate, GrowthSeries, WindowPolicy};

/// Default enumeration cap on `d(i, γi)`.
pub const R_CAP: f64 = 14.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HPoint {
    pub re: f64,
    pub im: f64,
}

impl HPoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(im > 0.0 && im.is_finite() && re.is_finite()) {
            return Err(invalid(format!("not a point of the upper half-plane: {re} + {im}i")));
        }
        Ok(HPoint { re, im })
    }

    pub const I: HPoint = HPoint { re: 0.0, im: 1.0 };
}

pub fn h2_distance(z: HPoint, w: HPoint) -> f64 {
    let (dx, dy) = (z.re - w.re, z.im - w.im);
    let q = (dx * dx + dy * dy) / (2.0 * z.im * w.im);
    // acosh(1 + q) without cancellation for small q
    (q + (q * (q + 2.0)).sqrt()).ln_1p()
}

/// Busemann function at ∞.
pub fn busemann_inf(x: HPoint, y: HPoint) -> f64 {
    // difference of logs keeps b(x,y) = −b(y,x) exact
    y.im.ln() - x.im.ln()
}

/// Alignment time at ∞: the flow time after which the two points, brought to
/// the same horocycle, are at horocyclic distance below 1.
pub fn t_xi(x: HPoint, y: HPoint) -> f64 {
    let gap = (x.re - y.re).abs();
    if gap == 0.0 {
        return 0.0;
    }
    (gap.ln() - x.im.max(y.im).ln()).max(0.0)
}

/// `ε(a, θ) = (1/a)·ln(2/(1 − cos θ))`.
pub fn eps_theta(a: f64, theta: f64) -> f64 {
    (2.0 / (1.0 - theta.cos())).ln() / a
}

/// Element of Γ(2), sign-normalised so that `a > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MoebiusElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl MoebiusElement {
    pub const IDENTITY: MoebiusElement = MoebiusElement { a: 1, b: 0, c: 0, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a * d - b * c != 1 {
            return Err(invalid(format!("determinant of ({a} {b}; {c} {d}) is not 1")));
        }
        if a.rem_euclid(2) != 1 || d.rem_euclid(2) != 1 || b.rem_euclid(2) != 0 || c.rem_euclid(2) != 0 {
            return Err(invalid(format!("({a} {b}; {c} {d}) is not congruent to the identity mod 2")));
        }
        Ok(Self::canonical(a, b, c, d))
    }

    fn canonical(a: i64, b: i64, c: i64, d: i64) -> Self {
        let first = [a, b, c, d].into_iter().find(|&v| v != 0).unwrap_or(1);
        if first < 0 {
            MoebiusElement { a: -a, b: -b, c: -c, d: -d }
        } else {
            MoebiusElement { a, b, c, d }
        }
    }

    pub fn mul(&self, o: &MoebiusElement) -> MoebiusElement {
        Self::canonical(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn inverse(&self) -> MoebiusElement {
        Self::canonical(self.d, -self.b, -self.c, self.a)
    }

    /// `a² + b² + c² + d² = 2 cosh d(i, γi)`.
    pub fn norm(&self) -> i64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn displacement(&self) -> f64 {
        let q = (self.norm() - 2) as f64 / 2.0;
        (q + (q * (q + 2.0)).sqrt()).ln_1p()
    }

    pub fn apply(&self, z: HPoint) -> HPoint {
        let (a, b, c, d) = (self.a as f64, self.b as f64, self.c as f64, self.d as f64);
        let (nr, ni) = (a * z.re + b, a * z.im);
        let (dr, di) = (c * z.re + d, c * z.im);
        let den = dr * dr + di * di;
        HPoint {
            re: (nr * dr + ni * di) / den,
            im: z.im / den,
        }
    }

    pub fn in_p(&self) -> bool {
        self.c == 0
    }
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

fn norm_bound(r: f64) -> i64 {
    (2.0 * r.cosh() * (1.0 + 1e-12)).floor() as i64
}

fn check_cap(r: f64, cap: f64) -> Result<()> {
    if r > cap {
        return Err(Error::AboveCap { r, cap });
    }
    if !(r >= 0.0) {
        return Err(invalid(format!("radius must be >= 0, got {r}")));
    }
    Ok(())
}

/// All γ ∈ Γ(2) with `d(i, γi) ≤ R`, sorted, by direct entry enumeration.
pub fn enumerate_group(r: f64) -> Result<Vec<MoebiusElement>> {
    enumerate_group_capped(r, R_CAP)
}

pub fn enumerate_group_capped(r: f64, cap: f64) -> Result<Vec<MoebiusElement>> {
    check_cap(r, cap)?;
    Ok(enumerate_norm(norm_bound(r)))
}

fn enumerate_norm(n_max: i64) -> Vec<MoebiusElement> {
    let a_max = (n_max as f64).sqrt() as i64 + 1;
    let a_values: Vec<i64> = (1..=a_max).step_by(2).collect();
    let chunks = par_map(&a_values, |&a| {
        let mut out = Vec::new();
        let rest = n_max - a * a;
        if rest < 1 {
            return out;
        }
        let b_max = (rest as f64).sqrt() as i64 + 1;
        let mut b = -b_max - (b_max & 1);
        while b <= b_max {
            let m = rest - b * b;
            if m >= 1 {
                let (g, x, y) = ext_gcd(a, b.abs());
                if g == 1 {
                    // a·d0 − b·c0 = 1
                    let (d0, c0) = (x, if b >= 0 { -y } else { y });
                    solutions(a, b, c0, d0, m, &mut out);
                }
            }
            b += 2;
        }
        out
    });
    let mut all: Vec<MoebiusElement> = chunks.into_iter().flatten().collect();
    all.sort();
    all
}

/// `(c, d) = (c0 + ka, d0 + kb)` with `c` even and `c² + d² ≤ m`.
fn solutions(a: i64, b: i64, c0: i64, d0: i64, m: i64, out: &mut Vec<MoebiusElement>) {
    let (qa, qb, qc) = ((a * a + b * b) as f64, (a * c0 + b * d0) as f64, (c0 * c0 + d0 * d0 - m) as f64);
    let disc = qb * qb - qa * qc;
    if disc < 0.0 {
        return;
    }
    let lo = ((-qb - disc.sqrt()) / qa).floor() as i64 - 1;
    let hi = ((-qb + disc.sqrt()) / qa).ceil() as i64 + 1;
    for k in lo..=hi {
        let (c, d) = (c0 + k * a, d0 + k * b);
        if c.rem_euclid(2) == 0 && c * c + d * d <= m {
            out.push(MoebiusElement { a, b, c, d });
        }
    }
}

fn generators() -> [MoebiusElement; 4] {
    let a = MoebiusElement { a: 1, b: 2, c: 0, d: 1 };
    let b = MoebiusElement { a: 1, b: 0, c: 2, d: 1 };
    [a, a.inverse(), b, b.inverse()]
}

/// All reduced words of length `≤ len` in the free generators of Γ(2).
pub fn bfs_group(len: usize) -> HashSet<MoebiusElement> {
    let gens = generators();
    let mut seen = HashSet::from([MoebiusElement::IDENTITY]);
    let mut frontier = vec![MoebiusElement::IDENTITY];
    for _ in 0..len {
        let mut next = Vec::new();
        for g in &frontier {
            for s in &gens {
                let h = g.mul(s);
                if seen.insert(h) {
                    next.push(h);
                }
            }
        }
        frontier = next;
    }
    seen
}

/// Write γ as a word in the generators by alternating Euclidean reduction,
/// `γ = A^{k₁} B^{k₂} ⋯`; `None` if γ is not in the group they generate.
pub fn decompose(g: &MoebiusElement) -> Option<Vec<(usize, i64)>> {
    let (mut a, mut b, mut c, mut d) = (g.a, g.b, g.c, g.d);
    let mut word = Vec::new();
    for _ in 0..256 {
        if c == 0 {
            if a.abs() != 1 || b % 2 != 0 {
                return None;
            }
            let k = b / (2 * a);
            if k != 0 {
                word.push((0, k));
            }
            return Some(word);
        }
        if a.abs() > c.abs() {
            // left multiply by A^{-k}: a ← a − 2kc
            let k = (a as f64 / (2.0 * c as f64)).round() as i64;
            a -= 2 * k * c;
            b -= 2 * k * d;
            word.push((0, k));
        } else {
            let k = (c as f64 / (2.0 * a as f64)).round() as i64;
            if k == 0 {
                return None;
            }
            c -= 2 * k * a;
            d -= 2 * k * b;
            word.push((2, k));
        }
    }
    None
}

fn evaluate(word: &[(usize, i64)]) -> MoebiusElement {
    let gens = generators();
    let mut g = MoebiusElement::IDENTITY;
    for &(i, k) in word {
        let s = if k >= 0 { gens[i] } else { gens[i + 1] };
        for _ in 0..k.abs() {
            g = g.mul(&s);
        }
    }
    g
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub r: f64,
    pub enumerated: usize,
    pub bfs_in_ball: usize,
    /// BFS elements in the ball missing from the enumeration.
    pub missed: usize,
    /// Enumerated elements that fail to reduce to a word in the generators.
    pub unreduced: usize,
    pub invalid: usize,
}

impl CompletenessReport {
    pub fn discrepancies(&self) -> usize {
        self.missed + self.unreduced + self.invalid
    }
}

/// Cross-check entry enumeration against generator words of length `≤ len`.
pub fn completeness_check(r: f64, len: usize) -> Result<CompletenessReport> {
    let elems = enumerate_group(r)?;
    let set: HashSet<MoebiusElement> = elems.iter().copied().collect();
    let bound = norm_bound(r);
    let bfs: Vec<MoebiusElement> = bfs_group(len).into_iter().filter(|g| g.norm() <= bound).collect();
    let missed = bfs.iter().filter(|g| !set.contains(g)).count();
    let unreduced = elems
        .iter()
        .filter(|g| decompose(g).map(|w| evaluate(&w)) != Some(**g))
        .count();
    let invalid = elems
        .iter()
        .filter(|g| MoebiusElement::new(g.a, g.b, g.c, g.d).ok() != Some(**g))
        .count();
    Ok(CompletenessReport {
        r,
        enumerated: elems.len(),
        bfs_in_ball: bfs.len(),
        missed,
        unreduced,
        invalid,
    })
}

/// Orbit and coset norms (as `a²+b²+c²+d²` minima) for the ball of radius `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetNorms {
    pub r: f64,
    pub group: Vec<i64>,
    /// `|Pγ|` per right coset `Pγ`.
    pub right: Vec<i64>,
    /// `|γP|` per left coset `γP`.
    pub left: Vec<i64>,
    /// `|PγP|` per double coset with γ ∉ P.
    pub double: Vec<i64>,
}

fn row_key(c: i64, d: i64) -> (i64, i64) {
    if c < 0 || (c == 0 && d < 0) {
        (-c, -d)
    } else {
        (c, d)
    }
}

fn double_key(g: &MoebiusElement) -> (i64, i64, i64) {
    let (a, c, d) = if g.c < 0 { (-g.a, -g.c, -g.d) } else { (g.a, g.c, g.d) };
    (c, a.rem_euclid(2 * c), d.rem_euclid(2 * c))
}

impl CosetNorms {
    /// Every coset meeting the ball has its minimal representative in it, so
    /// grouping the enumerated elements gives exact coset norms.
    pub fn new(r: f64) -> Result<Self> {
        let elems = enumerate_group(r)?;
        let mut right: HashMap<(i64, i64), i64> = HashMap::new();
        let mut left: HashMap<(i64, i64), i64> = HashMap::new();
        let mut double: HashMap<(i64, i64, i64), i64> = HashMap::new();
        fn keep_min<K: std::hash::Hash + Eq>(m: &mut HashMap<K, i64>, k: K, n: i64) {
            let e = m.entry(k).or_insert(n);
            *e = (*e).min(n);
        }
        for g in &elems {
            let n = g.norm();
            keep_min(&mut right, row_key(g.c, g.d), n);
            keep_min(&mut left, (g.a, g.c), n);
            if !g.in_p() {
                keep_min(&mut double, double_key(g), n);
            }
        }
        let sorted = |v: Vec<i64>| {
            let mut v = v;
            v.sort_unstable();
            v
        };
        Ok(CosetNorms {
            r,
            group: sorted(elems.iter().map(|g| g.norm()).collect()),
            right: sorted(right.into_values().collect()),
            left: sorted(left.into_values().collect()),
            double: sorted(double.into_values().collect()),
        })
    }

    fn ball(norms: &[i64], r: f64) -> usize {
        if r < 0.0 {
            return 0;
        }
        let b = norm_bound(r);
        norms.partition_point(|&n| n <= b)
    }

    /// `v(R + Δ/2) − v(R − Δ/2)`; empty for `Δ < 0`.
    fn annulus(&self, norms: &[i64], r: f64, delta: f64) -> Result<usize> {
        if delta < 0.0 {
            return Ok(0);
        }
        let hi = r + delta / 2.0;
        if hi > self.r * (1.0 + 1e-12) {
            return Err(Error::AboveCap { r: hi, cap: self.r });
        }
        Ok(Self::ball(norms, hi) - Self::ball(norms, r - delta / 2.0))
    }

    pub fn v_group(&self, r: f64) -> usize {
        Self::ball(&self.group, r)
    }
    pub fn v_right(&self, r: f64) -> usize {
        Self::ball(&self.right, r)
    }
    pub fn v_left(&self, r: f64) -> usize {
        Self::ball(&self.left, r)
    }
    pub fn v_double(&self, r: f64) -> usize {
        Self::ball(&self.double, r)
    }
    pub fn va_group(&self, r: f64, delta: f64) -> Result<usize> {
        self.annulus(&self.group, r, delta)
    }
    pub fn va_right(&self, r: f64, delta: f64) -> Result<usize> {
        self.annulus(&self.right, r, delta)
    }
    pub fn va_left(&self, r: f64, delta: f64) -> Result<usize> {
        self.annulus(&self.left, r, delta)
    }
    pub fn va_double(&self, r: f64, delta: f64) -> Result<usize> {
        self.annulus(&self.double, r, delta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountRow {
    pub r: f64,
    pub v_group: usize,
    pub va_group: usize,
    pub v_right: usize,
    pub v_left: usize,
    pub v_double: usize,
}

/// Counts at the multiples of `Δ` up to `R`; annuli need `R + Δ/2 ≤ R_cap`.
pub fn coset_counts(r: f64, delta: f64) -> Result<Vec<CountRow>> {
    if !(delta > 0.0) {
        return Err(invalid(format!("gauge must be > 0, got {delta}")));
    }
    check_cap(r + delta / 2.0, R_CAP)?;
    let cn = CosetNorms::new(r + delta / 2.0)?;
    let steps = (r / delta + 1e-9).floor() as usize;
    (1..=steps)
        .map(|k| {
            let x = k as f64 * delta;
            Ok(CountRow {
                r: x,
                v_group: cn.v_group(x),
                va_group: cn.va_group(x, delta)?,
                v_right: cn.v_right(x),
                v_left: cn.v_left(x),
                v_double: cn.v_double(x),
            })
        })
        .collect()
}

pub fn counts_csv(rows: &[CountRow]) -> String {
    let mut s = String::from("R,v_Gamma,vDelta_Gamma,v_P\\Gamma,v_Gamma/P,v_P\\Gamma/P\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.r, r.v_group, r.va_group, r.v_right, r.v_left, r.v_double
        ));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub samples: usize,
    pub seed: u64,
    pub triangle_checked: usize,
    pub triangle_violations: usize,
    pub horoball_checked: usize,
    pub horoball_violations: usize,
    /// Largest `d(x,z₁) + d(z₁,z₂) + d(z₂,y) − d(x,y)` seen.
    pub horoball_max_defect: f64,
    /// Fitted `ε₀`: largest `|d − (2t_ξ + |b_ξ|)|`.
    pub eps0: f64,
    /// Largest defect for `d ∈ [5, 10)` and `d ∈ [10, 14]`.
    pub eps0_mid: f64,
    pub eps0_far: f64,
    pub stable: bool,
    pub passes: bool,
}

fn random_point(rng: &mut ChaCha8Rng) -> HPoint {
    HPoint {
        re: rng.random_range(-50.0..=50.0),
        im: rng.random_range(-5.0f64..=5.0).exp(),
    }
}

/// Angle at `z` of the triangle `xzy`, by the hyperbolic law of cosines.
fn angle_at(z: HPoint, x: HPoint, y: HPoint) -> Option<f64> {
    let (p, q, r) = (h2_distance(z, x), h2_distance(z, y), h2_distance(x, y));
    if p < 1e-6 || q < 1e-6 {
        return None;
    }
    let c = (p.cosh() * q.cosh() - r.cosh()) / (p.sinh() * q.sinh());
    Some(c.clamp(-1.0, 1.0).acos())
}

/// Triangle defect bound, horoball additivity and the approximation
/// `d ≈ 2t_ξ + |b_ξ|` on seeded random configurations.
pub fn verify_lemmas(samples: usize, seed: u64) -> Result<LemmaReport> {
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = LemmaReport {
        samples,
        seed,
        triangle_checked: 0,
        triangle_violations: 0,
        horoball_checked: 0,
        horoball_violations: 0,
        horoball_max_defect: 0.0,
        eps0: 0.0,
        eps0_mid: 0.0,
        eps0_far: 0.0,
        stable: false,
        passes: false,
    };
    for _ in 0..samples {
        // triangle
        let (x, y, z) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        if let Some(theta) = angle_at(z, x, y) {
            if theta > 1e-3 {
                let defect = h2_distance(x, z) + h2_distance(z, y) - h2_distance(x, y);
                let scale = 1e-9 * (h2_distance(x, z) + h2_distance(z, y)).max(1.0);
                rep.triangle_checked += 1;
                if defect > eps_theta(1.0, theta) + scale {
                    rep.triangle_violations += 1;
                }
            }
        }

        // horoballs {im ≥ H} and the disc tangent at p with radius ρ
        let gap = rng.random_range(0.5..3.0f64);
        let rho = rng.random_range(0.05..2.0f64);
        let p = rng.random_range(-10.0..10.0f64);
        let height = 2.0 * rho * gap.exp();
        let z1 = HPoint { re: p, im: height };
        let z2 = HPoint { re: p, im: 2.0 * rho };
        let hx = HPoint {
            re: p + rng.random_range(-20.0..20.0),
            im: height * rng.random_range(0.0..4.0f64).exp(),
        };
        // point of the disc: angle φ from its centre, shrunk radially
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let s = rho * rng.random_range(0.0..1.0f64);
        let hy = HPoint {
            re: p + s * phi.cos(),
            im: rho + s * phi.sin(),
        };
        let total = h2_distance(hx, z1) + gap + h2_distance(z2, hy);
        let dist = h2_distance(hx, hy);
        let defect = total - dist;
        let eps1 = eps_theta(1.0, gap.sinh().atan()) + eps_theta(1.0, std::f64::consts::FRAC_PI_2);
        rep.horoball_checked += 1;
        rep.horoball_max_defect = rep.horoball_max_defect.max(defect);
        if defect < -1e-9 * total.max(1.0) || defect > eps1 {
            rep.horoball_violations += 1;
        }

        // approximation lemma
        let (u, v) = (random_point(&mut rng), random_point(&mut rng));
        let d = h2_distance(u, v);
        let e = (d - (2.0 * t_xi(u, v) + busemann_inf(u, v).abs())).abs();
        rep.eps0 = rep.eps0.max(e);
        if (5.0..10.0).contains(&d) {
            rep.eps0_mid = rep.eps0_mid.max(e);
        } else if (10.0..=14.0).contains(&d) {
            rep.eps0_far = rep.eps0_far.max(e);
        }
    }
    rep.stable = rep.eps0_far <= rep.eps0_mid + 0.1;
    rep.passes = rep.triangle_violations == 0 && rep.horoball_violations == 0 && rep.stable;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftFit {
    pub name: &'static str,
    /// Fitted on `R ≤ R_cap/2`.
    pub shift: f64,
    /// Smallest shift that works on the full range.
    pub full_range_shift: f64,
    pub holds_beyond_fit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CosetBoundsReport {
    pub r: f64,
    pub delta: f64,
    pub checked: usize,
    /// `v^Δ_{P∖Γ} ≤ v^Δ_Γ` failures.
    pub right_ii_failures: usize,
    /// `v^Δ_{P∖Γ/P} ≤ v^Δ_Γ` failures.
    pub right_iv_failures: usize,
    /// Smallest `δ` with `v^Δ_{Γ/P} ≤ v^{Δ+δ}_{P∖Γ}` on the whole range.
    pub right_i_shift: f64,
    pub left: Vec<ShiftFit>,
    pub passes: bool,
}

const SHIFT_STEP: f64 = 0.05;

fn smallest_shift(max: f64, ok: impl Fn(f64) -> Result<bool>) -> Result<f64> {
    let steps = (max / SHIFT_STEP).ceil() as usize;
    for k in 0..=steps {
        let s = k as f64 * SHIFT_STEP;
        if ok(s)? {
            return Ok(s);
        }
    }
    Ok(f64::INFINITY)
}

/// Exact right-hand inequalities of the coset comparison on `R ≤ R_max`, and
/// fit-then-freeze shifts for the left-hand ones.
pub fn verify_coset_bounds(r_max: f64, delta: f64) -> Result<CosetBoundsReport> {
    if !(delta > 0.0) {
        return Err(invalid(format!("gauge must be > 0, got {delta}")));
    }
    // room for the widest annulus used below
    let max_shift = delta + 2.0;
    check_cap(r_max, R_CAP)?;
    let reach = r_max + (delta + max_shift) / 2.0;
    let cn = CosetNorms::new(reach.min(R_CAP))?;
    let top = cn.r;
    let grid: Vec<f64> = (1..).map(|k| k as f64 * 0.125).take_while(|&x| x <= r_max).collect();
    let split = r_max / 2.0;
    let fits = |x: f64, w: f64| x + w.max(0.0) / 2.0 <= top * (1.0 + 1e-12);

    let mut right_ii = 0;
    let mut right_iv = 0;
    let mut checked = 0;
    for &x in grid.iter().filter(|&&x| fits(x, delta)) {
        let g = cn.va_group(x, delta)?;
        right_ii += (cn.va_right(x, delta)? > g) as usize;
        right_iv += (cn.va_double(x, delta)? > g) as usize;
        checked += 1;
    }
    let right_i_shift = smallest_shift(max_shift, |s| {
        for &x in grid.iter().filter(|&&x| fits(x, delta + s)) {
            if cn.va_left(x, delta)? > cn.va_right(x, delta + s)? {
                return Ok(false);
            }
        }
        Ok(true)
    })?;

    type Ineq<'a> = Box<dyn Fn(f64, f64) -> Result<bool> + 'a>;
    let cases: Vec<(&'static str, Ineq)> = vec![
        (
            "i: v^{D-s}_{P\\G} <= v^D_{G/P}",
            Box::new(|x, s| Ok(cn.va_right(x, delta - s)? <= cn.va_left(x, delta)?)),
        ),
        (
            "ii: v^{D-s}_G / 2 <= v^D_{P\\G}",
            Box::new(|x, s| Ok(cn.va_group(x, delta - s)? <= 2 * cn.va_right(x, delta)?)),
        ),
        (
            "iii: v^{D-s}_G / 2 <= v^D_{G/P}",
            Box::new(|x, s| Ok(cn.va_group(x, delta - s)? <= 2 * cn.va_left(x, delta)?)),
        ),
        (
            "iv: v^{D-s}_G / 4 <= v^D_{P\\G/P}",
            Box::new(|x, s| Ok(cn.va_group(x, delta - s)? <= 4 * cn.va_double(x, delta)?)),
        ),
    ];
    let mut left = Vec::new();
    for (name, ineq) in &cases {
        let on = |lo: f64, hi: f64, s: f64| -> Result<bool> {
            for &x in grid.iter().filter(|&&x| x > lo && x <= hi && fits(x, delta)) {
                if !ineq(x, s)? {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        let shift = smallest_shift(max_shift, |s| on(0.0, split, s))?;
        let full_range_shift = smallest_shift(max_shift, |s| on(0.0, r_max, s))?;
        let holds_beyond_fit = shift.is_finite() && on(split, r_max, shift)?;
        left.push(ShiftFit {
            name,
            shift,
            full_range_shift,
            holds_beyond_fit,
        });
    }
    let passes = right_ii == 0 && right_iv == 0 && left.iter().all(|f| f.holds_beyond_fit);
    Ok(CosetBoundsReport {
        r: r_max,
        delta,
        checked,
        right_ii_failures: right_ii,
        right_iv_failures: right_iv,
        right_i_shift,
        left,
        passes,
    })
}

/// Critical exponent of Γ(2) from `v_Γ` sampled on `[4, R_cap]`.
pub fn estimate_delta(r_cap: f64) -> Result<(ExponentEstimate, GrowthSeries)> {
    check_cap(r_cap, R_CAP)?;
    let cn = CosetNorms::new(r_cap)?;
    let grid = log_grid(4.0, r_cap, 32);
    let s = GrowthSeries::from_fn(grid, "v_Gamma", |r| Ok((cn.v_group(r) as f64).ln()))?;
    // lattice counts are noisiest at small R
    let policy = WindowPolicy {
        windows: 2,
        tol: 0.02,
        r_floor: 4.0,
        anchor: Anchor::Top { min_span: 2.0 },
    };
    Ok((estimate_exponents(&s, &policy)?, s))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingCheck {
    pub h_y: f64,
    pub fit_max: f64,
    /// Fitted band constant.
    pub c: f64,
    /// Constant needed on the assertion range alone.
    pub c_assert_range: f64,
    pub checked: usize,
    pub outside: usize,
    pub passes: bool,
}

/// `#{γ : d(i, γy) ≤ R}` for `y = e^{h}·i`, with elements enumerated up to `R + h`.
pub fn point_counts(h: f64, radii: &[f64]) -> Result<Vec<usize>> {
    let r_top = radii.iter().copied().fold(0.0, f64::max);
    let elems = enumerate_group(r_top + h)?;
    let y = HPoint::new(0.0, h.exp())?;
    let mut ds: Vec<f64> = elems.iter().map(|g| h2_distance(HPoint::I, g.apply(y))).collect();
    ds.sort_by(|a, b| a.total_cmp(b));
    Ok(radii.iter().map(|&r| ds.partition_point(|&d| d <= r)).collect())
}

/// Empirical `v_Γ(x, y, R)` against the counting band with `D₀ = 0`: the band
/// constant is fitted on `R ≤ fit_max` and frozen on `(fit_max, r_max]`.
pub fn counting_cross_check(h_y: f64, fit_max: f64, r_max: f64) -> Result<CountingCheck> {
    let vg = VGammaModel::constant(1.0, 1.0)?;
    let cusp = CuspModel::hyperbolic(2)?;
    let start = h_y + 1.0;
    let radii: Vec<f64> = (0..).map(|k| start + 0.25 * k as f64).take_while(|&r| r <= r_max + 1e-9).collect();
    let counts = point_counts(h_y, &radii)?;
    let mids = radii
        .iter()
        .map(|&r| counting_band(&vg, &cusp, h_y, r, &BandParams::default()).map(|b| b.log_mid))
        .collect::<Result<Vec<_>>>()?;
    let log_ratio = |i: usize| ((counts[i] as f64).ln() - mids[i]).abs();
    let fit: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] <= fit_max).collect();
    let rest: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] > fit_max).collect();
    let c = fit.iter().map(|&i| log_ratio(i)).fold(0.0, f64::max).exp();
    let c_rest = rest.iter().map(|&i| log_ratio(i)).fold(0.0, f64::max).exp();
    let params = BandParams {
        c,
        ..BandParams::default()
    };
    let mut outside = 0;
    for &i in &rest {
        let b = counting_band(&vg, &cusp, h_y, radii[i], &params)?;
        if !b.contains_log((counts[i] as f64).ln()) {
            outside += 1;
        }
    }
    Ok(CountingCheck {
        h_y,
        fit_max,
        c,
        c_assert_range: c_rest,
        checked: rest.len(),
        outside,
        passes: outside == 0 && !rest.is_empty(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(re: f64, im: f64) -> HPoint {
        HPoint::new(re, im).unwrap()
    }

    #[test]
    fn distances() {
        assert!((h2_distance(pt(0.0, 1.0), pt(0.0, 2.0)) - 2f64.ln()).abs() < 1e-15);
        assert!((h2_distance(pt(0.0, 1.0), pt(1.0, 1.0)) - 1.5f64.acosh()).abs() < 1e-15);
        assert_eq!(h2_distance(pt(3.0, 0.5), pt(3.0, 0.5)), 0.0);
    }

    #[test]
    fn busemann_values() {
        let (x, y) = (pt(0.0, 1.0), pt(7.0, 2.0));
        assert!((busemann_inf(x, y) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(busemann_inf(x, x), 0.0);
        assert_eq!(busemann_inf(x, y), -busemann_inf(y, x));
    }

    #[test]
    fn alignment_time() {
        let (x, y) = (pt(0.0, 1.0), pt(5.0, 1.0));
        assert!((t_xi(x, y) - 5f64.ln()).abs() < 1e-15);
        let defect = h2_distance(x, y) - 2.0 * t_xi(x, y);
        assert!((h2_distance(x, y) - 13.5f64.acosh()).abs() < 1e-12);
        assert!(defect > 0.07 && defect < 0.08, "{defect}");
        assert_eq!(t_xi(pt(2.0, 1.0), pt(2.0, 9.0)), 0.0);
        // z ↦ λz preserves d and b, and t_ξ
        let l = 7.5;
        let (xs, ys) = (pt(0.0, l), pt(5.0 * l, l));
        assert!((t_xi(xs, ys) - t_xi(x, y)).abs() < 1e-12);
    }

    #[test]
    fn eps_right_angle() {
        assert!((eps_theta(1.0, std::f64::consts::FRAC_PI_2) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn small_balls() {
        assert_eq!(enumerate_group(1.0).unwrap(), vec![MoebiusElement::IDENTITY]);
        let two = enumerate_group(2.0).unwrap();
        assert_eq!(two.len(), 5);
        assert!(two.contains(&MoebiusElement::new(1, 2, 0, 1).unwrap()));
        assert!(two.contains(&MoebiusElement::new(1, 0, -2, 1).unwrap()));
        assert!(matches!(enumerate_group(15.0), Err(Error::AboveCap { .. })));
    }

    #[test]
    fn elements_are_valid_and_distances_agree() {
        for g in enumerate_group(7.0).unwrap() {
            assert_eq!(g.a * g.d - g.b * g.c, 1);
            assert_eq!(MoebiusElement::new(g.a, g.b, g.c, g.d).unwrap(), g);
            let d = h2_distance(HPoint::I, g.apply(HPoint::I));
            assert!((d - g.displacement()).abs() < 1e-12 * d.max(1.0), "{g:?}");
        }
    }

    #[test]
    fn bfs_and_reduction_agree() {
        let rep = completeness_check(6.0, 6).unwrap();
        assert_eq!(rep.discrepancies(), 0, "{rep:?}");
        assert!(rep.bfs_in_ball > 100);
    }

    #[test]
    fn coset_examples() {
        let cn = CosetNorms::new(8.0).unwrap();
        assert_eq!(cn.v_left(2.0), 3);
        for k in 1..=16 {
            let r = k as f64 * 0.5;
            assert!(cn.v_double(r) <= cn.v_left(r) && cn.v_left(r) <= cn.v_group(r));
            assert!(cn.v_right(r) <= cn.v_group(r));
        }
        assert_eq!(cn.right.len(), cn.left.len());
    }

    #[test]
    fn right_coset_norm_matches_inverse_left() {
        // |Pγ| = |γ⁻¹P|
        let elems = enumerate_group(6.0).unwrap();
        let min_right = |g: &MoebiusElement| {
            elems
                .iter()
                .filter(|h| row_key(h.c, h.d) == row_key(g.c, g.d))
                .map(|h| h.norm())
                .min()
        };
        let min_left = |g: &MoebiusElement| {
            elems
                .iter()
                .filter(|h| (h.a, h.c) == (g.a, g.c))
                .map(|h| h.norm())
                .min()
        };
        for g in elems.iter().take(200) {
            assert_eq!(min_right(g), min_left(&g.inverse()));
        }
    }

    #[test]
    fn degenerate_triangle_has_no_defect() {
        let (x, z, y) = (pt(0.0, 1.0), pt(0.0, 2.0), pt(0.0, 4.0));
        let defect = h2_distance(x, z) + h2_distance(z, y) - h2_distance(x, y);
        assert!(defect.abs() < 1e-15);
    }

    #[test]
    fn right_angle_triangles() {
        // vertical geodesic meets the unit circle at i at a right angle
        for s in [0.3, 1.0, 4.0] {
            for phi in [0.2, 0.9, 1.4] {
                let x = pt(0.0, f64::exp(s));
                let y = pt(f64::cos(phi), f64::sin(phi));
                let z = HPoint::I;
                let theta = angle_at(z, x, y).unwrap();
                assert!((theta - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
                let defect = h2_distance(x, z) + h2_distance(z, y) - h2_distance(x, y);
                assert!(defect <= 2f64.ln());
            }
        }
    }

    #[test]
    fn lemma_report_is_deterministic() {
        let a = verify_lemmas(500, 7).unwrap();
        assert_eq!(a, verify_lemmas(500, 7).unwrap());
        assert_eq!(a.triangle_violations, 0);
        assert_eq!(a.horoball_violations, 0);
    }

    #[test]
    fn delta_near_one() {
        let (e, s) = estimate_delta(12.0).unwrap();
        assert!(e.converged, "{e:?}");
        assert!((e.rate() - 1.0).abs() < 0.05);
        assert!(s.log_values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn coset_bounds_small() {
        let rep = verify_coset_bounds(8.0, 1.0).unwrap();
        assert_eq!(rep.right_ii_failures + rep.right_iv_failures, 0);
        assert!(rep.checked > 0);
        assert!(matches!(verify_coset_bounds(14.5, 1.0), Err(Error::AboveCap { .. })));
    }

    #[test]
    fn point_counts_at_origin_match_group() {
        let radii = [1.0, 2.0, 3.0, 5.0];
        let pc = point_counts(0.0, &radii).unwrap();
        let cn = CosetNorms::new(5.0).unwrap();
        for (r, n) in radii.iter().zip(pc) {
            assert_eq!(n, cn.v_group(*r));
        }
    }

    #[test]
    fn csv_rows() {
        let rows = coset_counts(4.0, 1.0).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[1].v_group, 5);
        assert_eq!(rows[1].v_left, 3);
        assert_eq!(counts_csv(&rows).lines().count(), 5);
        assert!(coset_counts(14.0, 1.0).is_err());
    }
}
