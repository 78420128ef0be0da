//! Analytic cusp profiles `T(t)`, evaluated in the log domain `L = ln T`.
//!
//! A profile is a contiguous list of pieces covering `[t_start, ∞)`. Pieces
//! are exact exponentials `e^{-ct}`, power-exponentials `t^α e^{-ct}`, or
//! bridges joining two such envelopes with a C² monotone interpolant.

mod bridge;
mod catalog;
mod text;
mod validate;

pub use bridge::{build_bridge, Bridge, BridgeRequest};
pub use catalog::{catalog_cusps, catalog_profile, CatalogParams, ExampleId};
pub use validate::{validate_profile, JoinReport, PieceReport, ValidationReport};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative tolerance for log-continuity at piece joints.
pub const JOIN_TOL: f64 = 1e-9;
/// Slack added to ε when certifying the curvature ratio.
pub const RATIO_TOL: f64 = 1e-6;

/// Pinching data `−b² ≤ K ≤ −a²` in dimension `n`, with construction slack `eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    pub a: f64,
    pub b: f64,
    pub n: u32,
    pub eps: f64,
}

impl CurvatureBounds {
    pub fn new(a: f64, b: f64, n: u32, eps: f64) -> Result<Self> {
        let cb = CurvatureBounds { a, b, n, eps };
        cb.check()?;
        Ok(cb)
    }

    pub fn hyperbolic() -> Self {
        CurvatureBounds {
            a: 1.0,
            b: 1.0,
            n: 2,
            eps: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b >= self.a && self.a.is_finite() && self.b.is_finite()) {
            return Err(invalid(format!("need 0 < a <= b, got a={} b={}", self.a, self.b)));
        }
        if self.n < 2 {
            return Err(invalid(format!("dimension must be >= 2, got {}", self.n)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(invalid(format!("eps must be >= 0, got {}", self.eps)));
        }
        Ok(())
    }

    /// Allowed range of `T''/T`.
    pub fn ratio_range(&self) -> (f64, f64) {
        (self.a * self.a - self.eps, self.b * self.b + self.eps)
    }

    /// Effective decay rates `(√max(a²−ε,0), √(b²+ε))`.
    pub fn rate_range(&self) -> (f64, f64) {
        let (lo, hi) = self.ratio_range();
        (lo.max(0.0).sqrt(), hi.sqrt())
    }

    pub fn dim_factor(&self) -> f64 {
        (self.n - 1) as f64
    }
}

/// `t^power · e^{−rate·t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub power: f64,
    pub rate: f64,
}

impl Envelope {
    pub fn pure(rate: f64) -> Self {
        Envelope { power: 0.0, rate }
    }

    pub fn poly(power: f64, rate: f64) -> Self {
        Envelope { power, rate }
    }

    pub fn log(&self, t: f64) -> f64 {
        if self.power == 0.0 {
            -self.rate * t
        } else {
            self.power * t.ln() - self.rate * t
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        if self.power == 0.0 {
            -self.rate
        } else {
            self.power / t - self.rate
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        if self.power == 0.0 {
            0.0
        } else {
            -self.power / (t * t)
        }
    }

    pub fn derivs(&self, t: f64) -> (f64, f64, f64) {
        (self.log(t), self.d1(t), self.d2(t))
    }

    /// Point after which the envelope is strictly decreasing.
    pub fn decreasing_from(&self) -> f64 {
        if self.power > 0.0 {
            self.power / self.rate
        } else {
            f64::NEG_INFINITY
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(invalid(format!("rate must be > 0, got {}", self.rate)));
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(invalid(format!("power must be >= 0, got {}", self.power)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PieceForm {
    PureExp { rate: f64 },
    PolyExp { power: f64, rate: f64 },
    Bridge(Box<Bridge>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfilePiece {
    pub t0: f64,
    pub t1: f64,
    pub form: PieceForm,
}

impl ProfilePiece {
    pub fn pure_exp(t0: f64, t1: f64, rate: f64) -> Result<Self> {
        Envelope::pure(rate).check()?;
        check_interval(t0, t1)?;
        Ok(ProfilePiece {
            t0,
            t1,
            form: PieceForm::PureExp { rate },
        })
    }

    pub fn poly_exp(t0: f64, t1: f64, power: f64, rate: f64) -> Result<Self> {
        Envelope::poly(power, rate).check()?;
        check_interval(t0, t1)?;
        if power > 0.0 && t0 <= 0.0 {
            return Err(invalid("a power-exponential piece must start at t > 0"));
        }
        Ok(ProfilePiece {
            t0,
            t1,
            form: PieceForm::PolyExp { power, rate },
        })
    }

    pub fn from_envelope(t0: f64, t1: f64, env: Envelope) -> Result<Self> {
        if env.power == 0.0 {
            Self::pure_exp(t0, t1, env.rate)
        } else {
            Self::poly_exp(t0, t1, env.power, env.rate)
        }
    }

    /// The same piece on a sub-interval (bridges keep their interpolant).
    pub fn restricted(&self, t0: f64, t1: f64) -> Result<Self> {
        check_interval(t0, t1)?;
        Ok(ProfilePiece {
            t0,
            t1,
            form: self.form.clone(),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self.form {
            PieceForm::PureExp { .. } => "pure_exp",
            PieceForm::PolyExp { .. } => "poly_exp",
            PieceForm::Bridge(_) => "bridge",
        }
    }

    /// `(ln T, (ln T)', (ln T)'')` at `t`, without a domain check.
    pub fn derivs(&self, t: f64) -> (f64, f64, f64) {
        match &self.form {
            PieceForm::PureExp { rate } => (-rate * t, -rate, 0.0),
            PieceForm::PolyExp { power, rate } => Envelope::poly(*power, *rate).derivs(t),
            PieceForm::Bridge(b) => b.derivs(t),
        }
    }

    pub fn log_value(&self, t: f64) -> f64 {
        self.derivs(t).0
    }

    /// Interior points where the piece changes character.
    pub fn features(&self) -> Vec<f64> {
        match &self.form {
            PieceForm::Bridge(b) => b
                .features()
                .into_iter()
                .filter(|&x| x > self.t0 && x < self.t1)
                .collect(),
            _ => Vec::new(),
        }
    }
}

fn check_interval(t0: f64, t1: f64) -> Result<()> {
    if !(t0.is_finite() && t1 > t0) {
        return Err(invalid(format!("piece interval [{t0}, {t1}] is empty or invalid")));
    }
    Ok(())
}

/// Piecewise analytic cusp profile on `[t_start, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub bounds: CurvatureBounds,
    pieces: Vec<ProfilePiece>,
}

impl Profile {
    pub fn new(bounds: CurvatureBounds, pieces: Vec<ProfilePiece>) -> Result<Self> {
        bounds.check()?;
        if pieces.is_empty() {
            return Err(invalid("profile needs at least one piece"));
        }
        for w in pieces.windows(2) {
            let gap = (w[0].t1 - w[1].t0).abs();
            if gap > 1e-12 * w[1].t0.abs().max(1.0) {
                return Err(invalid(format!(
                    "pieces are not contiguous at {} / {}",
                    w[0].t1, w[1].t0
                )));
            }
        }
        if pieces.last().unwrap().t1 != f64::INFINITY {
            return Err(invalid("the final piece must extend to infinity"));
        }
        Ok(Profile { bounds, pieces })
    }

    /// Single-piece profile `e^{−ct}` on `[0, ∞)`.
    pub fn pure_exp(rate: f64, n: u32) -> Result<Self> {
        let bounds = CurvatureBounds::new(rate, rate, n, 0.0)?;
        Profile::new(bounds, vec![ProfilePiece::pure_exp(0.0, f64::INFINITY, rate)?])
    }

    /// Single-piece profile `t^α e^{−ct}` on `[t0, ∞)`.
    pub fn poly_exp(power: f64, rate: f64, t0: f64, n: u32) -> Result<Self> {
        let bounds = CurvatureBounds::new(rate, rate, n, 0.0)?;
        Profile::new(bounds, vec![ProfilePiece::poly_exp(t0, f64::INFINITY, power, rate)?])
    }

    pub fn pieces(&self) -> &[ProfilePiece] {
        &self.pieces
    }

    pub fn t_start(&self) -> f64 {
        self.pieces[0].t0
    }

    fn locate(&self, t: f64) -> usize {
        match self
            .pieces
            .binary_search_by(|p| p.t0.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    pub fn piece_at(&self, t: f64) -> Result<&ProfilePiece> {
        if !(t >= self.t_start()) {
            return Err(Error::Domain {
                t,
                start: self.t_start(),
            });
        }
        Ok(&self.pieces[self.locate(t)])
    }

    /// `ln T(t)`.
    pub fn eval_log(&self, t: f64) -> Result<f64> {
        Ok(self.piece_at(t)?.log_value(t))
    }

    /// `(ln T, (ln T)', (ln T)'')` at `t`.
    pub fn derivs(&self, t: f64) -> Result<(f64, f64, f64)> {
        Ok(self.piece_at(t)?.derivs(t))
    }

    /// `T''/T = (ln T)'' + ((ln T)')²`.
    pub fn ratio(&self, t: f64) -> Result<f64> {
        let (_, d1, d2) = self.derivs(t)?;
        Ok(d2 + d1 * d1)
    }

    /// Joints between pieces plus interior bridge features, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                out.push(p.t0);
            }
            out.extend(p.features());
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    /// Start of the final (infinite) piece.
    pub fn tail_start(&self) -> f64 {
        self.pieces.last().unwrap().t0
    }

    pub fn to_text(&self) -> String {
        text::to_text(self)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        text::from_text(s)
    }
}

/// `ln T(t)` for a profile.
pub fn eval_log_profile(profile: &Profile, t: f64) -> Result<f64> {
    profile.eval_log(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_exp_value() {
        let p = Profile::pure_exp(1.0, 2).unwrap();
        assert_eq!(eval_log_profile(&p, 3.0).unwrap(), -3.0);
    }

    #[test]
    fn poly_exp_value() {
        let p = Profile::poly_exp(3.0, 3.0, 1.0, 2).unwrap();
        let v = eval_log_profile(&p, 10.0).unwrap();
        assert!((v - (3.0 * 10f64.ln() - 30.0)).abs() < 1e-12);
        assert!((v + 23.092).abs() < 1e-3);
    }

    #[test]
    fn below_domain_is_error() {
        let p = Profile::poly_exp(3.0, 3.0, 1.0, 2).unwrap();
        assert!(matches!(p.eval_log(0.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn evaluation_is_repeatable() {
        let p = Profile::poly_exp(2.5, 3.0, 1.0, 2).unwrap();
        let a = p.eval_log(17.25).unwrap();
        let b = p.eval_log(17.25).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn non_contiguous_rejected() {
        let b = CurvatureBounds::hyperbolic();
        let r = Profile::new(
            b,
            vec![
                ProfilePiece::pure_exp(0.0, 1.0, 1.0).unwrap(),
                ProfilePiece::pure_exp(2.0, f64::INFINITY, 1.0).unwrap(),
            ],
        );
        assert!(r.is_err());
    }

    #[test]
    fn ratio_of_pure_exp_is_rate_squared() {
        let p = Profile::pure_exp(2.0, 2).unwrap();
        assert_eq!(p.ratio(5.0).unwrap(), 4.0);
    }
}
