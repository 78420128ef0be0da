//! The example cusp profiles: a sparse oscillating cusp, two exotic cusps and
//! two critical (exactly half-pinched) cusps.
//!
//! Transition bands are filled by [`build_bridge`]. Where the nominal band
//! layout leaves too little room for a bridge at the given slack, the band
//! edge is moved by bisection to the nearest constructible position.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{build_bridge, BridgeRequest, CurvatureBounds, Envelope, PieceForm, Profile, ProfilePiece};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExampleId {
    Sparse,
    ExoticConvergent,
    ExoticDivergent,
    CriticalFinite,
    CriticalInfinite,
}

impl ExampleId {
    pub const ALL: [ExampleId; 5] = [
        ExampleId::Sparse,
        ExampleId::ExoticConvergent,
        ExampleId::ExoticDivergent,
        ExampleId::CriticalFinite,
        ExampleId::CriticalInfinite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExampleId::Sparse => "sparse-5.2",
            ExampleId::ExoticConvergent => "exotic-conv-5.3a",
            ExampleId::ExoticDivergent => "exotic-div-5.3b",
            ExampleId::CriticalFinite => "critical-finite-5.4a",
            ExampleId::CriticalInfinite => "critical-infinite-5.4b",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::UnknownExample(s.to_string()))
    }
}

/// Parameters of the example constructions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatalogParams {
    /// Scale ratio between oscillation periods.
    pub m: f64,
    pub mu: f64,
    pub b: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Length of the initial hyperbolic band.
    pub depth: f64,
    /// Length of the intermediate `e^{-bt}` band.
    pub band: f64,
    /// Nominal bridge length after the initial band.
    pub offset: f64,
    /// Ratio slack used when building bridges.
    pub eps: f64,
    pub periods: usize,
}

impl Default for CatalogParams {
    fn default() -> Self {
        CatalogParams {
            m: 3.0,
            mu: 1.0 / 16.0,
            b: 3.0,
            beta: 2.2,
            gamma: 0.5,
            depth: 1.0,
            band: 2.0,
            offset: 3.0,
            eps: 6.0,
            periods: 7,
        }
    }
}

impl CatalogParams {
    fn check(&self, id: ExampleId) -> Result<()> {
        let fin = [self.m, self.mu, self.b, self.beta, self.gamma, self.depth, self.band, self.offset, self.eps];
        if fin.iter().any(|x| !x.is_finite()) {
            return Err(invalid("catalog parameters must be finite"));
        }
        if !(self.eps >= 0.0) || !(self.depth > 0.0) || !(self.band > 0.0) || !(self.offset > 0.0) {
            return Err(invalid("need eps >= 0 and positive A, B, D"));
        }
        if self.periods == 0 {
            return Err(invalid("need at least one period"));
        }
        let b_min = if id == ExampleId::CriticalFinite { 1.0 } else { 2.0 };
        if !(self.b > b_min) {
            return Err(Error::Inadmissible(format!("{id} needs b > {b_min}, got {}", self.b)));
        }
        match id {
            ExampleId::Sparse => {
                if !(self.m > 1.0) {
                    return Err(Error::Inadmissible(format!("M must exceed 1, got {}", self.m)));
                }
            }
            ExampleId::ExoticConvergent => {
                if !(self.beta > 1.0) {
                    return Err(Error::Inadmissible(format!("beta must exceed 1, got {}", self.beta)));
                }
            }
            ExampleId::ExoticDivergent => {}
            ExampleId::CriticalFinite | ExampleId::CriticalInfinite => {
                if !(self.m > 1.0) {
                    return Err(Error::Inadmissible(format!("M must exceed 1, got {}", self.m)));
                }
                if !(self.gamma > 0.0 && self.gamma < 1.0) {
                    return Err(Error::Inadmissible(format!("gamma must lie in (0,1), got {}", self.gamma)));
                }
                if !(self.mu > 0.0 && self.mu * (4.0 - 2.0 / self.m) < 1.0) {
                    return Err(Error::Inadmissible(format!(
                        "mu = {} leaves no room between the bands for M = {}",
                        self.mu, self.m
                    )));
                }
                if id == ExampleId::CriticalInfinite && !(self.beta > 1.0 + self.gamma && self.beta < 2.0 + self.gamma) {
                    return Err(Error::Inadmissible(format!(
                        "need 1+gamma < beta < 2+gamma, got beta = {}",
                        self.beta
                    )));
                }
            }
        }
        Ok(())
    }

    fn bounds(&self) -> CurvatureBounds {
        CurvatureBounds {
            a: 1.0,
            b: self.b,
            n: 2,
            eps: self.eps,
        }
    }
}

const CARVE_STEPS: usize = 60;

fn bridge_piece(req: &BridgeRequest) -> Result<ProfilePiece> {
    let b = build_bridge(req)?;
    Ok(ProfilePiece {
        t0: req.q,
        t1: req.r,
        form: PieceForm::Bridge(Box::new(b)),
    })
}

/// Largest `q ∈ (q_min, q_max]` for which a bridge on `[q, r]` exists.
fn carve_start(
    start: Envelope,
    end: Envelope,
    p: f64,
    q_min: f64,
    q_max: f64,
    r: f64,
    s: f64,
    eps: f64,
) -> Result<ProfilePiece> {
    let req = |q: f64| BridgeRequest { p, q, r, s, start, end, eps };
    if let Ok(piece) = bridge_piece(&req(q_max)) {
        return Ok(piece);
    }
    let (mut lo, mut hi) = (q_min, q_max);
    let mut good = bridge_piece(&req(lo)).map_err(|e| {
        Error::Inadmissible(format!("no bridge fits into [{q_min}, {r}]: {e}"))
    })?;
    for _ in 0..CARVE_STEPS {
        if hi - lo <= 1e-9 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match bridge_piece(&req(mid)) {
            Ok(piece) => {
                good = piece;
                lo = mid;
            }
            Err(_) => hi = mid,
        }
    }
    Ok(good)
}

/// Smallest `r ∈ [r_min, r_max)` for which a bridge on `[q, r]` exists.
fn carve_end(
    start: Envelope,
    end: Envelope,
    p: f64,
    q: f64,
    r_min: f64,
    r_max: f64,
    eps: f64,
) -> Result<ProfilePiece> {
    let req = |r: f64| BridgeRequest {
        p,
        q,
        r,
        s: r_max.max(r) * 1.5 + 1.0,
        start,
        end,
        eps,
    };
    if let Ok(piece) = bridge_piece(&req(r_min)) {
        return Ok(piece);
    }
    let (mut lo, mut hi) = (r_min, r_max);
    let mut good = bridge_piece(&req(hi)).map_err(|e| {
        Error::Inadmissible(format!("no bridge fits into [{q}, {r_max}]: {e}"))
    })?;
    for _ in 0..CARVE_STEPS {
        if hi - lo <= 1e-9 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match bridge_piece(&req(mid)) {
            Ok(piece) => {
                good = piece;
                hi = mid;
            }
            Err(_) => lo = mid,
        }
    }
    Ok(good)
}

fn band(t0: f64, t1: f64, env: Envelope) -> Result<ProfilePiece> {
    ProfilePiece::from_envelope(t0, t1, env)
}

/// Replace the final piece's right end by infinity.
fn close(mut pieces: Vec<ProfilePiece>) -> Vec<ProfilePiece> {
    if let Some(last) = pieces.last_mut() {
        last.t1 = f64::INFINITY;
    }
    pieces
}

fn sparse(pp: &CatalogParams) -> Result<Vec<ProfilePiece>> {
    let (m, b, eps) = (pp.m, pp.b, pp.eps);
    let up = Envelope::pure(1.0);
    let lo = Envelope::pure(b);
    let mut pieces = Vec::new();
    let mut band_start = 0.0;
    for n in 1..=pp.periods {
        let k = 4.0 * n as f64;
        let big = m.powf(k + 1.0);
        let (p, q) = (m.powf(k), 2.0 * m.powf(k));
        let (r, s) = (0.5 * (p + big), 0.5 * (q + big));
        let q_max = q.min(r / (1.0 + 1e-6));
        let down = carve_start(up, lo, band_start, band_start + 1e-6 * r.max(1.0), q_max, r, s, eps)?;
        pieces.push(band(band_start, down.t0, up)?);
        pieces.push(down);
        pieces.push(band(r, s, lo)?);
        if n < pp.periods {
            let next = m.powf(k + 2.0);
            let next_q = 2.0 * m.powf(k + 4.0);
            let rise = carve_end(lo, up, r, s, next.max(s * (1.0 + 1e-6)), next_q, eps)?;
            band_start = rise.t1;
            pieces.push(rise);
        }
    }
    Ok(close(pieces))
}

fn initial_descent(pp: &CatalogParams, end: Envelope) -> Result<Vec<ProfilePiece>> {
    let up = Envelope::pure(1.0);
    let (a, d) = (pp.depth, pp.offset);
    let bridge = carve_end(up, end, 0.0, a, a + d, a + 64.0 * d, pp.eps)?;
    Ok(vec![band(0.0, a, up)?, bridge])
}

fn exotic_convergent(pp: &CatalogParams) -> Result<Vec<ProfilePiece>> {
    let tail = Envelope::poly(pp.beta, pp.b);
    let mut pieces = initial_descent(pp, tail)?;
    let t = pieces.last().unwrap().t1;
    pieces.push(band(t, f64::INFINITY, tail)?);
    Ok(pieces)
}

fn exotic_divergent(pp: &CatalogParams) -> Result<Vec<ProfilePiece>> {
    let lo = Envelope::pure(pp.b);
    let tail = Envelope::poly(3.0, pp.b);
    let mut pieces = initial_descent(pp, lo)?;
    let t = pieces.last().unwrap().t1;
    let s = t + pp.band;
    pieces.push(band(t, s, lo)?);
    let rise = carve_end(lo, tail, t, s, s * (1.0 + 1e-3), 100.0 * s, pp.eps)?;
    let r = rise.t1;
    pieces.push(rise);
    pieces.push(band(r, f64::INFINITY, tail)?);
    Ok(pieces)
}

/// Oscillation between `t e^{-(b/2)t}` and `t^lower_power e^{-bt}`.
fn critical_cusp(pp: &CatalogParams, lower_power: f64) -> Result<Vec<ProfilePiece>> {
    let (m, mu, eps) = (pp.m, pp.mu, pp.eps);
    let first = Envelope::pure(pp.b);
    let up = Envelope::poly(1.0, 0.5 * pp.b);
    let lo = Envelope::poly(lower_power, pp.b);
    let mut pieces = initial_descent(pp, first)?;
    let mut cursor = pieces.last().unwrap().t1;
    let mut prev = first;
    let mut prev_start = cursor;
    let end_first = cursor + pp.band;
    pieces.push(band(cursor, end_first, first)?);
    cursor = end_first;
    let mut periods = 0;
    for n in 0.. {
        if periods == pp.periods {
            break;
        }
        let big = m.powf(4.0 * n as f64 + 3.0);
        let (p, q) = (mu * big / m, mu * big);
        let (r, s) = (0.5 * (p + 0.5 * big), 0.5 * (q + big));
        if p < 1.5 * cursor || p <= up.decreasing_from() || r <= lo.decreasing_from() {
            if n > 64 {
                return Err(Error::Inadmissible("no admissible oscillation period".into()));
            }
            continue;
        }
        let rise = carve_end(prev, up, prev_start, cursor, p, q / (1.0 + 1e-6), eps)?;
        let start = rise.t1;
        pieces.push(rise);
        let down = carve_start(up, lo, start, start * (1.0 + 1e-6), q, r, s, eps)?;
        pieces.push(band(start, down.t0, up)?);
        pieces.push(down);
        pieces.push(band(r, s, lo)?);
        prev = lo;
        prev_start = r;
        cursor = s;
        periods += 1;
    }
    Ok(close(pieces))
}

fn cusp_pieces(id: ExampleId, pp: &CatalogParams) -> Result<Vec<Vec<ProfilePiece>>> {
    pp.check(id)?;
    Ok(match id {
        ExampleId::Sparse => vec![sparse(pp)?],
        ExampleId::ExoticConvergent => vec![exotic_convergent(pp)?],
        ExampleId::ExoticDivergent => vec![exotic_divergent(pp)?],
        ExampleId::CriticalFinite => vec![critical_cusp(pp, 2.0 + pp.gamma)?],
        ExampleId::CriticalInfinite => {
            let second = Envelope::poly(1.0 + pp.gamma, pp.b);
            let mut tail = initial_descent(pp, second)?;
            let t = tail.last().unwrap().t1;
            tail.push(band(t, f64::INFINITY, second)?);
            vec![critical_cusp(pp, pp.beta)?, tail]
        }
    })
}

/// The modified (non-hyperbolic) cusp profiles of an example.
pub fn catalog_cusps(id: ExampleId, params: &CatalogParams) -> Result<Vec<Profile>> {
    cusp_pieces(id, params)?
        .into_iter()
        .map(|pieces| Profile::new(params.bounds(), pieces))
        .collect()
}

/// The principal modified cusp profile of an example.
pub fn catalog_profile(id: ExampleId, params: &CatalogParams) -> Result<Profile> {
    Ok(catalog_cusps(id, params)?.remove(0))
}
