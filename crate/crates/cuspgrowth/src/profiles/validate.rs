use serde::Serialize;

use super::{PieceForm, Profile, ProfilePiece, JOIN_TOL, RATIO_TOL};

const SAMPLES: usize = 1024;
const RAMP_SAMPLES: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PieceReport {
    pub index: usize,
    pub kind: &'static str,
    pub t0: f64,
    pub t1: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub max_slope: f64,
    pub monotone: bool,
    pub convex: bool,
    pub ratio_ok: bool,
    /// `t1/t0` for bridges.
    pub span_ratio: Option<f64>,
    pub descending: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JoinReport {
    pub t: f64,
    pub jump: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passes: bool,
    pub monotone: bool,
    pub convex: bool,
    pub ratio_ok: bool,
    pub joins_ok: bool,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub worst_join: f64,
    pub ratio_range: (f64, f64),
    pub pieces: Vec<PieceReport>,
    pub joins: Vec<JoinReport>,
}

impl ValidationReport {
    /// Largest `r/q` over descending bridges.
    pub fn max_descent_span(&self) -> Option<f64> {
        self.pieces
            .iter()
            .filter(|p| p.descending == Some(true))
            .filter_map(|p| p.span_ratio)
            .reduce(f64::max)
    }
}

fn samples(piece: &ProfilePiece) -> Vec<f64> {
    let (t0, t1) = (piece.t0, piece.t1);
    let mut ts = Vec::with_capacity(SAMPLES + 4 * RAMP_SAMPLES);
    if t1.is_finite() {
        ts.extend((0..=SAMPLES).map(|i| t0 + (t1 - t0) * i as f64 / SAMPLES as f64));
    } else {
        let span = 100f64.max(1e3 * t0.abs());
        ts.extend((0..=SAMPLES).map(|i| t0 + span * i as f64 / SAMPLES as f64));
        ts.extend((1..=SAMPLES).map(|i| t0 + span.powf(i as f64 / SAMPLES as f64) - 1.0));
    }
    if let PieceForm::Bridge(b) = &piece.form {
        for (a, z) in [(b.q, b.q + b.ramp), (b.r - b.ramp, b.r)] {
            ts.extend((0..=RAMP_SAMPLES).map(|i| a + (z - a) * i as f64 / RAMP_SAMPLES as f64));
        }
    }
    ts.retain(|&t| t >= t0 && t <= t1);
    ts
}

/// Certify monotonicity, convexity, the curvature-ratio range and continuity.
pub fn validate_profile(profile: &Profile) -> ValidationReport {
    let (lo, hi) = profile.bounds.ratio_range();
    let mut pieces = Vec::new();
    for (index, piece) in profile.pieces().iter().enumerate() {
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio = f64::NEG_INFINITY;
        let mut max_slope = f64::NEG_INFINITY;
        for t in samples(piece) {
            let (_, d1, d2) = piece.derivs(t);
            let ratio = d2 + d1 * d1;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            max_slope = max_slope.max(d1);
        }
        let (span_ratio, descending) = match &piece.form {
            PieceForm::Bridge(b) => (Some(piece.t1 / piece.t0), Some(b.is_descending())),
            _ => (None, None),
        };
        pieces.push(PieceReport {
            index,
            kind: piece.kind(),
            t0: piece.t0,
            t1: piece.t1,
            min_ratio,
            max_ratio,
            max_slope,
            monotone: max_slope < 0.0,
            convex: min_ratio >= -RATIO_TOL,
            ratio_ok: min_ratio >= lo - RATIO_TOL && max_ratio <= hi + RATIO_TOL,
            span_ratio,
            descending,
        });
    }
    let joins: Vec<JoinReport> = profile
        .pieces()
        .windows(2)
        .map(|w| {
            let t = w[1].t0;
            let (l, r) = (w[0].log_value(t), w[1].log_value(t));
            let jump = (l - r).abs();
            JoinReport {
                t,
                jump,
                ok: jump <= JOIN_TOL * l.abs().max(1.0),
            }
        })
        .collect();
    let monotone = pieces.iter().all(|p| p.monotone);
    let convex = pieces.iter().all(|p| p.convex);
    let ratio_ok = pieces.iter().all(|p| p.ratio_ok);
    let joins_ok = joins.iter().all(|j| j.ok);
    ValidationReport {
        passes: monotone && convex && ratio_ok && joins_ok,
        monotone,
        convex,
        ratio_ok,
        joins_ok,
        min_ratio: pieces.iter().map(|p| p.min_ratio).fold(f64::INFINITY, f64::min),
        max_ratio: pieces.iter().map(|p| p.max_ratio).fold(f64::NEG_INFINITY, f64::max),
        worst_join: joins.iter().map(|j| j.jump).fold(0.0, f64::max),
        ratio_range: (lo, hi),
        pieces,
        joins,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{CurvatureBounds, Profile, ProfilePiece};
    use super::*;

    #[test]
    fn hyperbolic_cusp_passes() {
        let r = validate_profile(&Profile::pure_exp(1.0, 2).unwrap());
        assert!(r.passes);
        assert_eq!(r.min_ratio, 1.0);
    }

    #[test]
    fn jump_is_flagged() {
        let b = CurvatureBounds::new(1.0, 3.0, 2, 6.0).unwrap();
        let p = Profile::new(
            b,
            vec![
                ProfilePiece::pure_exp(0.0, 2.0, 1.0).unwrap(),
                ProfilePiece::pure_exp(2.0, f64::INFINITY, 3.0).unwrap(),
            ],
        )
        .unwrap();
        let r = validate_profile(&p);
        assert!(!r.joins_ok && !r.passes);
        assert!((r.worst_join - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_outside_bounds_is_flagged() {
        let b = CurvatureBounds::new(1.0, 1.0, 2, 0.0).unwrap();
        let p = Profile::new(b, vec![ProfilePiece::pure_exp(0.0, f64::INFINITY, 2.0).unwrap()]).unwrap();
        let r = validate_profile(&p);
        assert!(r.monotone && r.convex && !r.ratio_ok);
    }

    #[test]
    fn increasing_poly_piece_is_not_monotone() {
        let b = CurvatureBounds::new(1.0, 3.0, 2, 6.0).unwrap();
        let p = Profile::new(b, vec![ProfilePiece::poly_exp(0.1, f64::INFINITY, 3.0, 3.0).unwrap()]).unwrap();
        assert!(!validate_profile(&p).monotone);
    }
}
