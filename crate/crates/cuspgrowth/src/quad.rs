//! Log-domain summation and adaptive Simpson quadrature.
//!
//! Integrands are passed as their logarithm `φ(t) = ln f(t)` so that values
//! spanning thousands of e-folds can be integrated without overflow.

use crate::error::{Error, Result};

/// `ln(e^a + e^b)`.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; `-inf` when they coincide.
pub fn log_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// Streaming log-sum-exp accumulator.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    max: f64,
    acc: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.acc += (x - self.max).exp();
        } else {
            self.acc = self.acc * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.acc == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.acc.ln()
        }
    }
}

/// Log of a sum of exponentials.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = LogSum::new();
    for x in xs {
        s.push(x);
    }
    s.value()
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Smallest resolvable feature length; end refinement stops here.
    pub feature_scale: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-8,
            max_panels: 1 << 20,
            feature_scale: 0.25,
        }
    }
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson_log(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    let w = ((b - a) / 6.0).ln();
    w + log_sum_exp([fa, fm + 4f64.ln(), fb])
}

/// `ln ∫_a^b exp(φ(t)) dt` by adaptive Simpson with log-sum-exp accumulation.
///
/// `breaks` are points where φ may have kinks; panels are seeded there and
/// geometrically towards both ends of the interval. Panels are accepted
/// against a running reference for the integral; if the first pass ends far
/// below its reference (a coarse overestimate), it is repeated once.
pub fn log_integrate<F>(phi: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(b > a) {
        return Ok(f64::NEG_INFINITY);
    }
    let nodes = seed_nodes(a, b, breaks, opts.feature_scale);

    let eval = |t: f64| -> f64 {
        let v = phi(t);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let fvals: Vec<f64> = nodes.iter().map(|&t| eval(t)).collect();
    let mut seed = Vec::with_capacity(nodes.len());
    let mut estimate = LogSum::new();
    for i in 0..nodes.len() - 1 {
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        let fm = eval(0.5 * (x0 + x1));
        let whole = simpson_log(x0, x1, fvals[i], fm, fvals[i + 1]);
        estimate.push(whole);
        seed.push(Panel {
            a: x0,
            b: x1,
            fa: fvals[i],
            fm,
            fb: fvals[i + 1],
            whole,
        });
    }

    let first = refine(&eval, seed.clone(), estimate.value(), opts)?;
    if first > f64::NEG_INFINITY && first < estimate.value() - 2f64.ln() {
        return refine(&eval, seed, first, opts);
    }
    Ok(first)
}

fn refine(eval: &impl Fn(f64) -> f64, mut stack: Vec<Panel>, reference: f64, opts: &QuadOptions) -> Result<f64> {
    let log_tol_base = opts.rel_tol.ln();
    let mut reference = reference;
    let mut total = LogSum::new();
    let mut panels = stack.len();

    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = eval(lm);
        let frm = eval(rm);
        let left = simpson_log(p.a, m, p.fa, flm, p.fm);
        let right = simpson_log(m, p.b, p.fm, frm, p.fb);
        let two = log_add(left, right);
        let (err, refined) = if two >= p.whole {
            let e = log_sub(two, p.whole);
            (e, log_add(two, e - 15f64.ln()))
        } else {
            let e = log_sub(p.whole, two);
            (e, log_sub(two, e - 15f64.ln()))
        };
        let width_floor = 1e-13 * p.a.abs().max(p.b.abs()).max(1.0);
        if two == f64::NEG_INFINITY || err <= log_tol_base + reference || (p.b - p.a) < width_floor {
            total.push(refined);
            let current = total.value();
            if current > reference {
                reference = current;
            }
            continue;
        }
        panels += 2;
        if panels > opts.max_panels {
            total.push(refined);
            for q in &stack {
                total.push(q.whole);
            }
            return Err(Error::Quadrature {
                panels,
                partial: total.value(),
            });
        }
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        });
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        });
    }
    Ok(total.value())
}

fn seed_nodes(a: f64, b: f64, breaks: &[f64], feature: f64) -> Vec<f64> {
    let len = b - a;
    let mut nodes = Vec::with_capacity(64 + breaks.len());
    for i in 0..=16 {
        nodes.push(a + len * i as f64 / 16.0);
    }
    let mut h = len / 32.0;
    while h > feature && nodes.len() < 512 {
        nodes.push(a + h);
        nodes.push(b - h);
        h *= 0.5;
    }
    if a > 0.0 && b / a > 64.0 {
        let mut t = a * 2.0;
        while t < b {
            nodes.push(t);
            t *= 2.0;
        }
    }
    for &x in breaks {
        if x > a && x < b {
            nodes.push(x);
        }
    }
    nodes.push(a);
    nodes.push(b);
    nodes.retain(|x| x.is_finite() && *x >= a && *x <= b);
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    nodes.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * x.abs().max(1.0));
    nodes
}

/// Nodes and weights of n-point Gauss–Legendre quadrature on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct() {
        let v = log_add(1.0f64.ln(), 2.0f64.ln());
        assert!((v - 3.0f64.ln()).abs() < 1e-15);
        assert_eq!(log_add(f64::NEG_INFINITY, 0.5), 0.5);
    }

    #[test]
    fn log_sum_rescales() {
        let mut s = LogSum::new();
        s.push(-1000.0);
        s.push(1000.0);
        s.push(1000.0);
        assert!((s.value() - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn constant_integrand() {
        let v = log_integrate(|_| 0.0, 0.0, 7.0, &[], &QuadOptions::default()).unwrap();
        assert!((v.exp() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn steep_exponential() {
        // ∫_0^1000 e^{t} dt = e^1000 - 1
        let v = log_integrate(|t| t, 0.0, 1000.0, &[], &QuadOptions::default()).unwrap();
        assert!((v - 1000.0).abs() < 1e-8);
    }

    #[test]
    fn narrow_interior_peak_at_break() {
        // tent exp(-|t-c|) on a long interval, peak announced as a break
        let c = 123_456.789;
        let v = log_integrate(
            |t| -(t - c).abs(),
            0.0,
            1e6,
            &[c],
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-7, "{v}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }
}
