//! Horospherical areas, parabolic orbital functions, cuspidal functions and
//! tail-convergence tests for a single cusp.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::profiles::Profile;
use crate::quad::{log_integrate, LogSum, QuadOptions};
use crate::series::{estimate_exponents, log_grid, ExponentEstimate, GrowthSeries, WindowPolicy};

/// A cusp: profile, basepoint height and area normalisation.
#[derive(Clone, Debug, PartialEq)]
pub struct CuspModel {
    pub profile: Profile,
    pub h: f64,
    pub c_norm: f64,
}

impl CuspModel {
    pub fn new(profile: Profile, h: f64, c_norm: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(invalid(format!("basepoint height must be >= 0, got {h}")));
        }
        if !(c_norm > 0.0 && c_norm.is_finite()) {
            return Err(invalid(format!("area normalisation must be > 0, got {c_norm}")));
        }
        Ok(CuspModel { profile, h, c_norm })
    }

    /// `h = 0`, `c_norm = 1`.
    pub fn from_profile(profile: Profile) -> Self {
        CuspModel {
            profile,
            h: 0.0,
            c_norm: 1.0,
        }
    }

    /// Constant curvature −1 cusp in dimension `n`.
    pub fn hyperbolic(n: u32) -> Result<Self> {
        Ok(Self::from_profile(Profile::pure_exp(1.0, n)?))
    }

    fn dim(&self) -> f64 {
        self.profile.bounds.dim_factor()
    }

    /// Default validity floor `10/a`.
    pub fn r0(&self) -> f64 {
        10.0 / self.profile.bounds.a
    }
}

/// `ln A(t) = ln c_norm + (n−1)·ln T(t)`.
pub fn log_horo_area(cusp: &CuspModel, t: f64) -> Result<f64> {
    Ok(cusp.c_norm.ln() + cusp.dim() * cusp.profile.eval_log(t)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AreaRatioReport {
    pub passes: bool,
    pub delta: f64,
    pub checked: usize,
    /// Smallest `ln ratio − lower bound`.
    pub worst_lower_margin: f64,
    /// Smallest `upper bound − ln ratio`.
    pub worst_upper_margin: f64,
    pub worst_at: f64,
}

/// Check `e^{−(n−1)bΔ} ≤ A(R+Δ)/A(R) ≤ e^{−(n−1)aΔ}` with the profile's slack.
pub fn area_ratio_check(cusp: &CuspModel, delta: f64, grid: &[f64]) -> AreaRatioReport {
    let (a_eff, b_eff) = cusp.profile.bounds.rate_range();
    let lo = -cusp.dim() * b_eff * delta;
    let hi = -cusp.dim() * a_eff * delta;
    let mut rep = AreaRatioReport {
        passes: delta > 0.0,
        delta,
        checked: 0,
        worst_lower_margin: f64::INFINITY,
        worst_upper_margin: f64::INFINITY,
        worst_at: f64::NAN,
    };
    if !(delta > 0.0) {
        return rep;
    }
    for &r in grid {
        let (Ok(x), Ok(y)) = (log_horo_area(cusp, r), log_horo_area(cusp, r + delta)) else {
            continue;
        };
        let l = y - x;
        let tol = 1e-9 * x.abs().max(y.abs()).max(1.0);
        let (ml, mu) = (l - lo, hi - l);
        if ml.min(mu) < rep.worst_lower_margin.min(rep.worst_upper_margin) {
            rep.worst_at = r;
        }
        rep.worst_lower_margin = rep.worst_lower_margin.min(ml);
        rep.worst_upper_margin = rep.worst_upper_margin.min(mu);
        rep.passes &= ml >= -tol && mu >= -tol;
        rep.checked += 1;
    }
    rep
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitalEstimate {
    pub log_value: f64,
    /// Set when `R` lies below `h_y + R₀`.
    pub extrapolated: bool,
}

/// `ln v_P(R) ≈ −ln A((R + h_y)/2)`.
pub fn log_orbital_parabolic(cusp: &CuspModel, r: f64, h_y: f64) -> Result<OrbitalEstimate> {
    log_orbital_parabolic_with_floor(cusp, r, h_y, cusp.r0())
}

pub fn log_orbital_parabolic_with_floor(cusp: &CuspModel, r: f64, h_y: f64, r0: f64) -> Result<OrbitalEstimate> {
    Ok(OrbitalEstimate {
        log_value: -log_horo_area(cusp, 0.5 * (r + h_y))?,
        extrapolated: r < h_y + r0,
    })
}

fn cuspidal_breaks(profile: &Profile, r: f64) -> Vec<f64> {
    let bp = profile.breakpoints();
    let mut out: Vec<f64> = bp.iter().copied().filter(|&t| t < r).collect();
    out.extend(bp.iter().map(|&t| 2.0 * t - r).filter(|&t| t > 0.0 && t < r));
    out
}

/// `ln 𝓕(R) = ln ∫_{t₀}^R A(t)/A((R+t)/2) dt`.
pub fn log_cuspidal(cusp: &CuspModel, r: f64) -> Result<f64> {
    log_cuspidal_opts(cusp, r, &QuadOptions::default())
}

pub fn log_cuspidal_opts(cusp: &CuspModel, r: f64, opts: &QuadOptions) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid(format!("R must be > 0, got {r}")));
    }
    let t0 = cusp.profile.t_start();
    if r <= t0 {
        return Ok(f64::NEG_INFINITY);
    }
    let p = &cusp.profile;
    let n1 = cusp.dim();
    let breaks = cuspidal_breaks(p, r);
    log_integrate(
        |t| n1 * (p.eval_log(t).unwrap_or(f64::NEG_INFINITY) - p.eval_log(0.5 * (r + t)).unwrap_or(f64::NAN)),
        t0,
        r,
        &breaks,
        opts,
    )
}

/// Weight multiplying the Poincaré-series integrand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Weight {
    None,
    Linear,
}

/// `ln ∫_a^b w(t)·e^{−st}/A(t/2) dt`.
pub fn log_weighted_integral(cusp: &CuspModel, s: f64, weight: Weight, a: f64, b: f64) -> Result<f64> {
    let p = &cusp.profile;
    let lo = a.max(2.0 * p.t_start());
    if !(b > lo) {
        return Ok(f64::NEG_INFINITY);
    }
    let n1 = cusp.dim();
    let lc = cusp.c_norm.ln();
    let breaks: Vec<f64> = p.breakpoints().iter().map(|t| 2.0 * t).collect();
    log_integrate(
        |t| {
            let w = match weight {
                Weight::None => 0.0,
                Weight::Linear => t.ln(),
            };
            w - s * t - lc - n1 * p.eval_log(0.5 * t).unwrap_or(f64::NAN)
        },
        lo,
        b,
        &breaks,
        &QuadOptions::default(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    /// `None` when the segment test is inconclusive.
    pub converges: Option<bool>,
    /// Log of the integral over the inspected range plus a geometric tail when convergent.
    pub log_tail: f64,
    pub tail_bound: f64,
    pub critical_value: Option<f64>,
    /// Segment growth factor that produced the verdict.
    pub factor: f64,
    /// Ratios of consecutive segment integrals, last four.
    pub ratios: Vec<f64>,
}

const SEGMENT_FACTORS: [f64; 4] = [2.0, 4.0, 16.0, 256.0];

fn segment_verdict(cusp: &CuspModel, s: f64, weight: Weight, factor: f64) -> Result<ConvergenceVerdict> {
    let p = &cusp.profile;
    let t_lo = (2.0 * p.t_start()).max(1.0);
    let reach = (2f64.powi(40)).max(2.0 * p.tail_start() * 256.0);
    let mut edges = vec![t_lo];
    while *edges.last().unwrap() < reach || edges.len() < 6 {
        let next = edges.last().unwrap() * factor;
        edges.push(next);
    }
    let segs = edges
        .windows(2)
        .map(|w| log_weighted_integral(cusp, s, weight, w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = segs
        .windows(2)
        .map(|w| {
            if w[1] == f64::NEG_INFINITY {
                0.0
            } else {
                (w[1] - w[0]).exp()
            }
        })
        .collect();
    let last: Vec<f64> = ratios[ratios.len() - 4..].to_vec();
    let converges = if last.iter().all(|&r| r <= 0.9) {
        Some(true)
    } else if last.iter().all(|&r| r >= 1.0) {
        Some(false)
    } else {
        None
    };
    let mut total = LogSum::new();
    for &v in &segs {
        total.push(v);
    }
    if converges == Some(true) {
        let r = last.iter().copied().fold(0.0, f64::max);
        if r > 0.0 {
            total.push(segs[segs.len() - 1] + (r / (1.0 - r)).ln());
        }
    }
    let log_tail = if converges == Some(false) {
        f64::INFINITY
    } else {
        total.value()
    };
    Ok(ConvergenceVerdict {
        converges,
        log_tail,
        tail_bound: log_tail.exp(),
        critical_value: None,
        factor,
        ratios: last,
    })
}

/// Convergence of `∫^∞ w(t)·e^{−st}/A(t/2) dt` by doubling-segment ratios,
/// retrying coarser segments when the profile oscillates.
pub fn series_convergence_at(cusp: &CuspModel, s: f64, weight: Weight) -> Result<ConvergenceVerdict> {
    if !(s > 0.0) {
        return Err(invalid(format!("s must be > 0, got {s}")));
    }
    let mut last = None;
    for f in SEGMENT_FACTORS {
        let v = segment_verdict(cusp, s, weight, f)?;
        if v.converges.is_some() {
            return Ok(v);
        }
        last = Some(v);
    }
    Ok(last.unwrap())
}

/// Abscissa of convergence of `∫ e^{−st}/A(t/2) dt`, by bisection on `s`.
pub fn poincare_abscissa(cusp: &CuspModel) -> Result<f64> {
    poincare_abscissa_tol(cusp, 1e-9)
}

pub fn poincare_abscissa_tol(cusp: &CuspModel, tol: f64) -> Result<f64> {
    let (_, b_eff) = cusp.profile.bounds.rate_range();
    let mut hi = cusp.dim() * b_eff / 2.0 + 1.0;
    let mut lo = 0.0;
    if series_convergence_at(cusp, hi, Weight::None)?.converges != Some(true) {
        return Err(Error::Bracket(format!("no convergence at s = {hi}")));
    }
    let probe = 1e-6;
    if series_convergence_at(cusp, probe, Weight::None)?.converges != Some(false) {
        return Err(Error::Bracket(format!("no divergence at s = {probe}")));
    }
    lo = f64::max(lo, probe);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match series_convergence_at(cusp, mid, Weight::None)?.converges {
            Some(true) => hi = mid,
            Some(false) => lo = mid,
            None => return Ok(mid),
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Growth series of `v_P` and `𝓕` on `[1, R_max]`.
pub fn orbital_series(cusp: &CuspModel, r_max: f64, h_y: f64) -> Result<GrowthSeries> {
    GrowthSeries::from_fn(log_grid(1.0, r_max, 32), "v_P", |r| Ok(log_orbital_parabolic(cusp, r, h_y)?.log_value))
}

pub fn cuspidal_series(cusp: &CuspModel, r_max: f64) -> Result<GrowthSeries> {
    cuspidal_series_on(cusp, log_grid(1.0, r_max, 32))
}

pub fn cuspidal_series_on(cusp: &CuspModel, grid: Vec<f64>) -> Result<GrowthSeries> {
    GrowthSeries::from_fn(grid, "F", |r| log_cuspidal(cusp, r))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub holds: bool,
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub omega_minus_f: f64,
    pub omega_plus_f: f64,
    /// `max{δ⁺, 2(δ⁺ − δ⁻)}`.
    pub bound: f64,
    pub tol: f64,
    /// `[δ⁻ ≤ ω⁻(𝓕), ω⁻(𝓕) ≤ ω⁺(𝓕), ω⁺(𝓕) ≤ bound]`.
    pub links: [bool; 3],
    pub error: Option<String>,
}

impl ChainReport {
    fn failed(msg: String) -> Self {
        ChainReport {
            holds: false,
            delta_minus: f64::NAN,
            delta_plus: f64::NAN,
            omega_minus_f: f64::NAN,
            omega_plus_f: f64::NAN,
            bound: f64::NAN,
            tol: f64::NAN,
            links: [false; 3],
            error: Some(msg),
        }
    }
}

/// `δ⁻ ≤ ω⁻(𝓕) ≤ ω⁺(𝓕) ≤ max{δ⁺, 2(δ⁺−δ⁻)}` from sampled series.
///
/// `delta_plus` overrides the sampled upper rate of `v_p` (pass the Poincaré
/// abscissa, which the sampled limsup only approaches slowly).
pub fn chain_from_series(
    v_p: &GrowthSeries,
    f: &GrowthSeries,
    delta_plus: Option<f64>,
    policy: &WindowPolicy,
) -> ChainReport {
    let est = |s: &GrowthSeries| -> Result<ExponentEstimate> { estimate_exponents(s, policy) };
    let (dp, ff) = match (est(v_p), est(f)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return ChainReport::failed(e.to_string()),
    };
    let (dm, dpl) = (dp.omega_minus, delta_plus.unwrap_or(dp.omega_plus));
    let bound = dpl.max(2.0 * (dpl - dm));
    let tol = policy.tol;
    let links = [
        dm <= ff.omega_minus + tol,
        ff.omega_minus <= ff.omega_plus + tol,
        ff.omega_plus <= bound + tol,
    ];
    ChainReport {
        holds: links.iter().all(|&x| x),
        delta_minus: dm,
        delta_plus: dpl,
        omega_minus_f: ff.omega_minus,
        omega_plus_f: ff.omega_plus,
        bound,
        tol,
        links,
        error: None,
    }
}

/// The exponent chain for one cusp on `[1, R_max]`, with rates anchored at `R₀`
/// and `δ⁺` taken from [`poincare_abscissa`].
pub fn exponent_chain_check(cusp: &CuspModel, r_max: f64) -> ChainReport {
    let b = &cusp.profile.bounds;
    let policy = WindowPolicy {
        r_floor: cusp.r0(),
        ..WindowPolicy::for_bounds(b.a, b.b)
    };
    exponent_chain_check_with(cusp, r_max, &policy)
}

pub fn exponent_chain_check_with(cusp: &CuspModel, r_max: f64, policy: &WindowPolicy) -> ChainReport {
    if !(r_max > 1.0) {
        return ChainReport::failed(Error::TooFewPoints { need: 8, got: 1 }.to_string());
    }
    let delta_plus = match poincare_abscissa(cusp) {
        Ok(d) => d,
        Err(e) => return ChainReport::failed(e.to_string()),
    };
    match (orbital_series(cusp, r_max, 0.0), cuspidal_series(cusp, r_max)) {
        (Ok(v), Ok(f)) => chain_from_series(&v, &f, Some(delta_plus), policy),
        (Err(e), _) | (_, Err(e)) => ChainReport::failed(e.to_string()),
    }
}

/// `2·T^{−1}(T(t₀)/d_ξ)`.
pub fn distance_from_horodistance(profile: &Profile, d_xi: f64) -> Result<f64> {
    if !(d_xi > 0.0 && d_xi.is_finite()) {
        return Err(invalid(format!("horocyclic distance must be > 0, got {d_xi}")));
    }
    let t0 = profile.t_start();
    let target = profile.eval_log(t0)? - d_xi.ln();
    if d_xi < 1.0 {
        return Err(Error::Domain {
            t: f64::NAN,
            start: t0,
        });
    }
    if d_xi == 1.0 {
        return Ok(2.0 * t0);
    }
    let mut lo = t0;
    let mut hi = t0 + 1.0;
    while profile.eval_log(hi)? > target {
        lo = hi;
        hi = t0 + 2.0 * (hi - t0);
        if !hi.is_finite() {
            return Err(Error::Bracket("profile does not reach the target".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if profile.eval_log(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyp() -> CuspModel {
        CuspModel::hyperbolic(2).unwrap()
    }

    #[test]
    fn horo_area_values() {
        assert_eq!(log_horo_area(&hyp(), 4.0).unwrap(), -4.0);
        let c3 = CuspModel::hyperbolic(3).unwrap();
        assert_eq!(log_horo_area(&c3, 4.0).unwrap(), -8.0);
        let c = CuspModel::from_profile(Profile::poly_exp(3.0, 3.0, 1.0, 2).unwrap());
        assert!((log_horo_area(&c, 10.0).unwrap() + 23.0922).abs() < 1e-4);
    }

    #[test]
    fn orbital_values() {
        let v = log_orbital_parabolic(&hyp(), 10.0, 0.0).unwrap();
        assert_eq!(v.log_value, 5.0);
        assert!(!v.extrapolated);
        assert_eq!(log_orbital_parabolic(&hyp(), 10.0, 2.0).unwrap().log_value, 6.0);
        assert!(log_orbital_parabolic(&hyp(), 3.0, 0.0).unwrap().extrapolated);
    }

    #[test]
    fn cuspidal_closed_form_at_ten() {
        let v = log_cuspidal(&hyp(), 10.0).unwrap();
        assert!((v - (2.0 * (5f64.exp() - 1.0)).ln()).abs() < 1e-8);
        assert!((v.exp() - 294.83).abs() < 0.01);
    }

    #[test]
    fn cuspidal_vanishes_at_zero() {
        assert!(log_cuspidal(&hyp(), 1e-8).unwrap() < -15.0);
    }

    #[test]
    fn area_ratio_tight_for_constant_rate() {
        let r = area_ratio_check(&hyp(), 1.0, &[1.0, 5.0, 50.0]);
        assert!(r.passes);
        assert!(r.worst_lower_margin.abs() < 1e-12 && r.worst_upper_margin.abs() < 1e-12);
    }

    #[test]
    fn abscissa_of_hyperbolic_cusp() {
        assert!((poincare_abscissa(&hyp()).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn abscissa_with_convergence_at_the_edge() {
        let c = CuspModel::from_profile(Profile::poly_exp(3.0, 3.0, 1.0, 2).unwrap());
        assert!((poincare_abscissa(&c).unwrap() - 1.5).abs() < 1e-6);
        assert_eq!(series_convergence_at(&c, 1.5, Weight::None).unwrap().converges, Some(true));
    }

    #[test]
    fn convergence_verdicts() {
        assert_eq!(series_convergence_at(&hyp(), 1.0, Weight::None).unwrap().converges, Some(true));
        assert_eq!(series_convergence_at(&hyp(), 0.5, Weight::None).unwrap().converges, Some(false));
        let c = CuspModel::from_profile(Profile::poly_exp(1.5, 3.0, 1.0, 2).unwrap());
        assert_eq!(series_convergence_at(&c, 1.5, Weight::Linear).unwrap().converges, Some(false));
    }

    #[test]
    fn hyperbolic_chain_is_flat() {
        let r = exponent_chain_check(&hyp(), 200.0);
        assert!(r.holds, "{r:?}");
        assert!((r.delta_minus - 0.5).abs() < 1e-9 && (r.delta_plus - 0.5).abs() < 1e-6);
    }

    #[test]
    fn degenerate_chain_reports_error() {
        let r = exponent_chain_check(&hyp(), 1.0);
        assert!(!r.holds && r.error.is_some());
    }

    #[test]
    fn horodistance_inversion() {
        let p = Profile::pure_exp(1.0, 2).unwrap();
        assert!((distance_from_horodistance(&p, 5f64.exp()).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(distance_from_horodistance(&p, 1.0).unwrap(), 0.0);
        let q = Profile::poly_exp(3.0, 3.0, 1.0, 2).unwrap();
        let d = distance_from_horodistance(&q, 1e3).unwrap();
        let want = q.eval_log(1.0).unwrap() - 1e3f64.ln();
        assert!(((q.eval_log(d / 2.0).unwrap() - want) / want).abs() < 1e-10);
        assert!(distance_from_horodistance(&p, 0.5).is_err());
    }
}
