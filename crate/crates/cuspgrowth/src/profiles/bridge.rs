//! C² monotone bridges between two envelopes.
//!
//! The log-derivative `u = L'` is blended from the start envelope into a
//! constant cruise slope and then into the end envelope with quintic
//! smoothsteps of width `ramp`. The cruise slope is fixed by requiring
//! `∫_q^r u = L_end(r) − L_start(q)`. `L` is stored as a residual against the
//! chord through the endpoints and interpolated by quintic Hermite splines.

use serde::{Deserialize, Serialize};

use super::Envelope;
use crate::error::{invalid, Error, Result};
use crate::quad::gauss_legendre;

const KNOTS_PER_RAMP: usize = 48;
const MAX_DOUBLINGS: usize = 8;
const GRID_UNIFORM: usize = 1 << 12;
const GRID_RAMP: usize = 1 << 10;
const RATIO_SLACK: f64 = 1e-9;

/// Join `start` on `[p, q]` to `end` on `[r, s]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BridgeRequest {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub start: Envelope,
    pub end: Envelope,
    pub eps: f64,
}

impl BridgeRequest {
    /// From the slower-decaying envelope down to the faster one.
    pub fn descending(p: f64, q: f64, r: f64, s: f64, upper: Envelope, lower: Envelope, eps: f64) -> Self {
        BridgeRequest { p, q, r, s, start: upper, end: lower, eps }
    }

    /// From the faster-decaying envelope back up to the slower one.
    pub fn ascending(p: f64, q: f64, r: f64, s: f64, lower: Envelope, upper: Envelope, eps: f64) -> Self {
        BridgeRequest { p, q, r, s, start: lower, end: upper, eps }
    }

    /// `(lower, upper)`: lower has the larger rate, ties broken by smaller power.
    pub fn lower_upper(&self) -> (Envelope, Envelope) {
        let (x, y) = (self.start, self.end);
        let x_lower = x.rate > y.rate || (x.rate == y.rate && x.power <= y.power);
        if x_lower {
            (x, y)
        } else {
            (y, x)
        }
    }

    /// Allowed range of `T''/T` on the bridge.
    pub fn ratio_range(&self) -> (f64, f64) {
        let (lower, upper) = self.lower_upper();
        (
            (upper.rate * upper.rate - self.eps).max(0.0),
            lower.rate * lower.rate + self.eps,
        )
    }

    fn check(&self) -> Result<()> {
        let Self { p, q, r, s, .. } = *self;
        if !(p.is_finite() && s.is_finite() && p < q && q < r && r < s) {
            return Err(invalid(format!("need p < q < r < s, got {p}, {q}, {r}, {s}")));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(invalid(format!("eps must be >= 0, got {}", self.eps)));
        }
        self.start.check()?;
        self.end.check()?;
        for (env, from, to) in [(self.start, p, q), (self.end, r, s)] {
            if env.power > 0.0 && !(from > env.decreasing_from()) {
                return Err(invalid(format!(
                    "envelope t^{} e^(-{}t) is not decreasing on [{from}, {to}]",
                    env.power, env.rate
                )));
            }
        }
        let (lower, upper) = self.lower_upper();
        for i in 0..=256 {
            let t = p + (s - p) * i as f64 / 256.0;
            let (lo, up) = (lower.log(t), upper.log(t));
            if lo.is_finite() && up.is_finite() && lo > up + super::JOIN_TOL * up.abs().max(1.0) {
                return Err(invalid(format!("envelopes are not ordered at t = {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    pub start: Envelope,
    pub end: Envelope,
    pub q: f64,
    pub r: f64,
    pub log_q: f64,
    pub log_r: f64,
    pub ramp: f64,
    pub cruise: f64,
    /// `[t, residual, residual', L'']` against the chord from `(q, log_q)` to `(r, log_r)`.
    pub knots: Vec<[f64; 4]>,
}

impl Bridge {
    fn chord_slope(&self) -> f64 {
        (self.log_r - self.log_q) / (self.r - self.q)
    }

    /// `(L, L', L'')`; outside the knot range the envelopes are used directly.
    pub fn derivs(&self, t: f64) -> (f64, f64, f64) {
        let first = self.knots[0][0];
        let last = self.knots[self.knots.len() - 1][0];
        if t <= first {
            return self.start.derivs(t);
        }
        if t >= last {
            return self.end.derivs(t);
        }
        let i = self.knots.partition_point(|k| k[0] <= t).clamp(1, self.knots.len() - 1) - 1;
        let (k0, k1) = (self.knots[i], self.knots[i + 1]);
        let (res, d1, d2) = hermite(k0, k1, t);
        let m = self.chord_slope();
        (self.log_q + m * (t - self.q) + res, m + d1, d2)
    }

    pub fn features(&self) -> Vec<f64> {
        let mut f = vec![self.q, self.q + self.ramp, self.r - self.ramp, self.r];
        f.dedup();
        f
    }

    /// `r / q`.
    pub fn span_ratio(&self) -> f64 {
        self.r / self.q
    }

    pub fn is_descending(&self) -> bool {
        self.end.rate > self.start.rate || (self.end.rate == self.start.rate && self.end.power < self.start.power)
    }
}

fn hermite(k0: [f64; 4], k1: [f64; 4], t: f64) -> (f64, f64, f64) {
    let h = k1[0] - k0[0];
    let s = (t - k0[0]) / h;
    let (s2, s3) = (s * s, s * s * s);
    let (s4, s5) = (s3 * s, s3 * s2);
    let b = [
        1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
        s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
        0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5),
        10.0 * s3 - 15.0 * s4 + 6.0 * s5,
        -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
        0.5 * (s3 - 2.0 * s4 + s5),
    ];
    let b1 = [
        -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
        1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
        0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4),
        30.0 * s2 - 60.0 * s3 + 30.0 * s4,
        -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
        0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4),
    ];
    let b2 = [
        -60.0 * s + 180.0 * s2 - 120.0 * s3,
        -36.0 * s + 96.0 * s2 - 60.0 * s3,
        0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3),
        60.0 * s - 180.0 * s2 + 120.0 * s3,
        -24.0 * s + 84.0 * s2 - 60.0 * s3,
        0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3),
    ];
    let c = [k0[1], h * k0[2], h * h * k0[3], k1[1], h * k1[2], h * h * k1[3]];
    let dot = |w: &[f64; 6]| -> f64 { w.iter().zip(&c).map(|(a, b)| a * b).sum() };
    (dot(&b), dot(&b1) / h, dot(&b2) / (h * h))
}

/// Quintic smoothstep clipped to [0, 1] and its derivative.
fn smooth(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0)
    } else if x >= 1.0 {
        (1.0, 0.0)
    } else {
        let y = 1.0 - x;
        (x * x * x * (10.0 - 15.0 * x + 6.0 * x * x), 30.0 * x * x * y * y)
    }
}

struct Blend<'a> {
    req: &'a BridgeRequest,
    ramp: f64,
    cruise: f64,
}

impl Blend<'_> {
    /// `(u, u')` at `t`.
    fn u(&self, t: f64) -> (f64, f64) {
        let BridgeRequest { q, r, start, end, .. } = *self.req;
        let l = self.ramp;
        let (e1, s1) = smooth((t - q) / l);
        let (e2, s2) = smooth((r - t) / l);
        let (d1, d2) = (s1 / l, -s2 / l);
        let (mut u, mut du) = (e1 * e2 * self.cruise, (d1 * e2 + e1 * d2) * self.cruise);
        if e1 < 1.0 {
            u += (1.0 - e1) * start.d1(t);
            du += -d1 * start.d1(t) + (1.0 - e1) * start.d2(t);
        }
        if e2 < 1.0 {
            u += (1.0 - e2) * end.d1(t);
            du += -d2 * end.d1(t) + (1.0 - e2) * end.d2(t);
        }
        (u, du)
    }
}

fn gl_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
    rule.0.iter().zip(&rule.1).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Build a bridge, widening the ramps until the curvature ratio fits.
pub fn build_bridge(req: &BridgeRequest) -> Result<Bridge> {
    req.check()?;
    let len = req.r - req.q;
    let mut ramp = 0.5f64.min(0.5 * len);
    let mut best: Option<(f64, String)> = None;
    for _ in 0..=MAX_DOUBLINGS {
        match attempt(req, ramp) {
            Ok(b) => return Ok(b),
            Err((worst, what)) => {
                if best.as_ref().map_or(true, |(w, _)| worst < *w) {
                    best = Some((worst, what));
                }
            }
        }
        if ramp >= 0.5 * len {
            break;
        }
        ramp = (2.0 * ramp).min(0.5 * len);
    }
    let (worst, what) = best.unwrap();
    Err(Error::Construction {
        q: req.q,
        r: req.r,
        worst,
        what,
    })
}

fn attempt(req: &BridgeRequest, ramp: f64) -> std::result::Result<Bridge, (f64, String)> {
    let (q, r) = (req.q, req.r);
    let len = r - q;
    let rule = gauss_legendre(16);
    let (log_q, log_r) = (req.start.log(q), req.end.log(r));
    let gap = log_r - log_q;

    let sub = 8;
    let mut i_start = 0.0;
    let mut i_end = 0.0;
    for k in 0..sub {
        let a = q + ramp * k as f64 / sub as f64;
        let b = q + ramp * (k + 1) as f64 / sub as f64;
        i_start += gl_integral(|t| (1.0 - smooth((t - q) / ramp).0) * req.start.d1(t), a, b, &rule);
        let a = r - ramp * (k + 1) as f64 / sub as f64;
        let b = r - ramp * k as f64 / sub as f64;
        i_end += gl_integral(|t| (1.0 - smooth((r - t) / ramp).0) * req.end.d1(t), a, b, &rule);
    }
    let cruise = (gap - i_start - i_end) / (len - ramp);
    if !(cruise < 0.0) {
        return Err((cruise.abs() + 1.0, format!("non-negative cruise slope {cruise:.4}")));
    }
    let blend = Blend { req, ramp, cruise };
    let m = gap / len;

    let mut ts: Vec<f64> = (0..=KNOTS_PER_RAMP)
        .map(|i| q + ramp * i as f64 / KNOTS_PER_RAMP as f64)
        .collect();
    for i in 0..=KNOTS_PER_RAMP {
        let t = r - ramp + ramp * i as f64 / KNOTS_PER_RAMP as f64;
        if t > *ts.last().unwrap() {
            ts.push(t);
        }
    }
    *ts.last_mut().unwrap() = r;

    let gl8 = gauss_legendre(8);
    let cruise_a = q + ramp;
    let cruise_b = r - ramp;
    let mut knots = Vec::with_capacity(ts.len());
    let mut res = 0.0;
    for (i, &t) in ts.iter().enumerate() {
        if i > 0 {
            let t0 = ts[i - 1];
            if t0 >= cruise_a && t <= cruise_b {
                res += (cruise - m) * (t - t0);
            } else {
                res += gl_integral(|x| blend.u(x).0 - m, t0, t, &gl8);
            }
        }
        let (u, du) = blend.u(t);
        knots.push([t, res, u - m, du]);
    }
    let drift = res;
    for k in knots.iter_mut() {
        k[1] -= drift * (k[0] - q) / len;
        k[2] -= drift / len;
    }

    let bridge = Bridge {
        start: req.start,
        end: req.end,
        q,
        r,
        log_q,
        log_r,
        ramp,
        cruise,
        knots,
    };

    let (lo, hi) = req.ratio_range();
    let (lower, upper) = req.lower_upper();
    let mut worst = 0.0f64;
    let mut what = String::new();
    let mut note = |v: f64, msg: &dyn Fn() -> String| {
        if v > worst {
            worst = v;
            what = msg();
        }
    };
    let grid = (0..=GRID_UNIFORM)
        .map(|i| q + len * i as f64 / GRID_UNIFORM as f64)
        .chain((0..=GRID_RAMP).map(|i| q + ramp * i as f64 / GRID_RAMP as f64))
        .chain((0..=GRID_RAMP).map(|i| r - ramp * i as f64 / GRID_RAMP as f64));
    for t in grid {
        let (l, d1, d2) = bridge.derivs(t);
        let ratio = d2 + d1 * d1;
        let slack = RATIO_SLACK * hi;
        note(lo - ratio - slack, &|| format!("ratio {ratio:.5} below {lo:.5} at t = {t}"));
        note(ratio - hi - slack, &|| format!("ratio {ratio:.5} above {hi:.5} at t = {t}"));
        if d1 >= 0.0 {
            note(d1 + f64::MIN_POSITIVE, &|| format!("non-decreasing at t = {t}"));
        }
        let tol = super::JOIN_TOL * l.abs().max(1.0);
        note(l - upper.log(t) - tol, &|| format!("above the upper envelope at t = {t}"));
        note(lower.log(t) - l - tol, &|| format!("below the lower envelope at t = {t}"));
    }
    if worst > 0.0 {
        Err((worst, what))
    } else {
        Ok(bridge)
    }
}
