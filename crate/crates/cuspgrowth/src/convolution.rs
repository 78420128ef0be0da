//! Gauge and continuous convolutions, the Counting and Volume bands, and
//! growth-type classification.

use serde::Serialize;

use crate::asymptotics::{log_cuspidal, log_orbital_parabolic, CuspModel};
use crate::error::{invalid, Error, Result};
use crate::quad::{log_add, log_integrate, LogSum, QuadOptions};
use crate::series::{log_grid, par_map, GrowthSeries, WindowStat};

/// Subexponential factor `o_Γ(R)` of the orbit count `v_Γ ≈ o_Γ(R)·e^{δR}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GrowthFactor {
    Constant(f64),
    /// `(1 + R)^{−γ}`.
    PowerDecay(f64),
    /// `ln o_Γ` sampled on a grid, log-linear in between.
    Sampled(GrowthSeries),
}

/// Model of the orbital function `v_Γ(R)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VGammaModel {
    pub delta: f64,
    pub factor: GrowthFactor,
}

impl VGammaModel {
    pub fn new(delta: f64, factor: GrowthFactor) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("critical exponent must be > 0, got {delta}")));
        }
        match &factor {
            GrowthFactor::Constant(c) if !(*c > 0.0 && c.is_finite()) => {
                return Err(invalid(format!("constant factor must be > 0, got {c}")))
            }
            GrowthFactor::PowerDecay(g) if !(*g > 0.0 && g.is_finite()) => {
                return Err(invalid(format!("decay power must be > 0, got {g}")))
            }
            _ => {}
        }
        Ok(VGammaModel { delta, factor })
    }

    pub fn constant(delta: f64, c: f64) -> Result<Self> {
        Self::new(delta, GrowthFactor::Constant(c))
    }

    pub fn power_decay(delta: f64, gamma: f64) -> Result<Self> {
        Self::new(delta, GrowthFactor::PowerDecay(gamma))
    }

    pub fn log_factor(&self, r: f64) -> f64 {
        match &self.factor {
            GrowthFactor::Constant(c) => c.ln(),
            GrowthFactor::PowerDecay(g) => -g * (1.0 + r.max(0.0)).ln(),
            GrowthFactor::Sampled(s) => s.interpolate(r),
        }
    }

    /// `ln v_Γ(R)`; `−∞` for `R < 0`.
    pub fn log_value(&self, r: f64) -> f64 {
        if r < 0.0 {
            return f64::NEG_INFINITY;
        }
        self.delta * r + self.log_factor(r)
    }
}

fn lookup(s: &GrowthSeries, t: f64) -> Result<f64> {
    let i = s.grid.partition_point(|&g| g < t - 1e-9 * t.abs().max(1.0));
    match s.grid.get(i) {
        Some(&g) if (g - t).abs() <= 1e-9 * t.abs().max(1.0) => Ok(s.log_values[i]),
        _ => Err(Error::MissingGridPoint(t)),
    }
}

fn gauge_count(delta: f64, r: f64) -> Result<usize> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("gauge must be > 0, got {delta}")));
    }
    if !(r >= 0.0) {
        return Ok(0);
    }
    Ok((r / delta * (1.0 + 1e-12)).floor() as usize)
}

/// `ln Σ_{h+k=⌊R/Δ⌋, h,k≥1} f(hΔ)·g(kΔ)` for log-valued `f`, `g`.
///
/// Terms are sorted before summation so that swapping `f` and `g` gives the
/// same bits.
pub fn log_conv_gauge_with(
    f: impl Fn(f64) -> Result<f64>,
    g: impl Fn(f64) -> Result<f64>,
    delta: f64,
    r: f64,
) -> Result<f64> {
    let n = gauge_count(delta, r)?;
    if n < 2 {
        return Ok(f64::NEG_INFINITY);
    }
    let mut terms = Vec::with_capacity(n - 1);
    for h in 1..n {
        terms.push(f(h as f64 * delta)? + g((n - h) as f64 * delta)?);
    }
    terms.sort_by(|a, b| a.total_cmp(b));
    let mut s = LogSum::new();
    for t in terms {
        s.push(t);
    }
    Ok(s.value())
}

/// Gauge convolution of two series sampled on the multiples of `Δ`.
pub fn conv_gauge(f: &GrowthSeries, g: &GrowthSeries, delta: f64, r: f64) -> Result<f64> {
    log_conv_gauge_with(|t| lookup(f, t), |t| lookup(g, t), delta, r)
}

/// `ln ∫₀^R f(t)·g(R−t) dt` for log-valued `f`, `g`.
pub fn conv_continuous(
    log_f: impl Fn(f64) -> f64,
    log_g: impl Fn(f64) -> f64,
    r: f64,
    breaks: &[f64],
) -> Result<f64> {
    if !(r > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    log_integrate(|t| log_f(t) + log_g(r - t), 0.0, r, breaks, &QuadOptions::default())
}

/// Right-continuous step function `f(t) = values[⌊t/step⌋]`, constant past
/// the last value. Values are linear (not log).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepFn {
    pub step: f64,
    pub values: Vec<f64>,
}

impl StepFn {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid(format!("step must be > 0, got {step}")));
        }
        if values.is_empty() {
            return Err(Error::TooFewPoints { need: 1, got: 0 });
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid(format!("step value {i} is negative or not finite")));
        }
        Ok(StepFn { step, values })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(1.0, vec![c])
    }

    pub fn at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let i = ((t / self.step) as usize).min(self.values.len() - 1);
        self.values[i]
    }

    pub fn first_decrease(&self) -> Option<usize> {
        self.values.windows(2).position(|w| w[1] < w[0]).map(|i| i + 1)
    }

    /// Exact `∫₀^R f(t)·g(R−t) dt`.
    pub fn convolve(&self, other: &StepFn, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let mut cuts = vec![0.0, r];
        let last = |s: &StepFn| (s.values.len() - 1) as f64 * s.step;
        let mut t = self.step;
        while t < r && t <= last(self) {
            cuts.push(t);
            t += self.step;
        }
        let mut u = other.step;
        while u < r && u <= last(other) {
            cuts.push(r - u);
            u += other.step;
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();
        cuts.windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                (w[1] - w[0]) * self.at(m) * other.at(r - m)
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub holds: bool,
    /// `ln Δ·(f∗_Δ g)(R−Δ)`.
    pub log_lower: f64,
    pub log_conv: f64,
    /// `ln 2Δ·(f∗_Δ g)(R+2Δ)`.
    pub log_upper: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

fn sandwich(log_lower: f64, log_conv: f64, log_upper: f64) -> SandwichReport {
    let slack = 1e-12 * log_conv.abs().max(1.0);
    let margin = |hi: f64, lo: f64| if lo == f64::NEG_INFINITY { f64::INFINITY } else { hi - lo };
    let lower_margin = margin(log_conv, log_lower);
    let upper_margin = margin(log_upper, log_conv);
    let ok = |m: f64| m >= -slack;
    SandwichReport {
        holds: ok(lower_margin) && ok(upper_margin),
        log_lower,
        log_conv,
        log_upper,
        lower_margin,
        upper_margin,
    }
}

/// `Δ·(f∗_Δ g)(R−Δ) ≤ (f∗g)(R) ≤ 2Δ·(f∗_Δ g)(R+2Δ)` for nondecreasing step functions.
pub fn sandwich_check(f: &StepFn, g: &StepFn, delta: f64, r: f64) -> Result<SandwichReport> {
    for s in [f, g] {
        if let Some(i) = s.first_decrease() {
            return Err(Error::NonMonotone(i));
        }
    }
    let lf = |t: f64| Ok(f.at(t).ln());
    let lg = |t: f64| Ok(g.at(t).ln());
    let lower = delta.ln() + log_conv_gauge_with(lf, lg, delta, r - delta)?;
    let upper = (2.0 * delta).ln() + log_conv_gauge_with(lf, lg, delta, r + 2.0 * delta)?;
    Ok(sandwich(lower, f.convolve(g, r).ln(), upper))
}

/// The same inequality for log-valued functions, with the integral by quadrature.
/// Monotonicity is checked on a grid of step `Δ/16`.
pub fn sandwich_check_log(
    log_f: impl Fn(f64) -> f64 + Copy,
    log_g: impl Fn(f64) -> f64 + Copy,
    delta: f64,
    r: f64,
) -> Result<SandwichReport> {
    let n = ((r + 2.0 * delta) / delta * 16.0).ceil() as usize;
    let check = |h: &dyn Fn(f64) -> f64| {
        let vals: Vec<f64> = (0..=n).map(|i| h(i as f64 * delta / 16.0)).collect();
        match vals.windows(2).position(|w| w[1] < w[0]) {
            Some(i) => Err(Error::NonMonotone(i + 1)),
            None => Ok(()),
        }
    };
    check(&log_f)?;
    check(&log_g)?;
    let lf = |t: f64| Ok(log_f(t));
    let lg = |t: f64| Ok(log_g(t));
    let lower = delta.ln() + log_conv_gauge_with(lf, lg, delta, r - delta)?;
    let upper = (2.0 * delta).ln() + log_conv_gauge_with(lf, lg, delta, r + 2.0 * delta)?;
    Ok(sandwich(lower, conv_continuous(log_f, log_g, r, &[])?, upper))
}

/// Shift and multiplicative constant of a two-sided band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandParams {
    pub d0: f64,
    /// Band constant `C ≥ 1`: lower divides by it, upper multiplies.
    pub c: f64,
    /// Volume of the compact core.
    pub vol_k: f64,
}

impl Default for BandParams {
    fn default() -> Self {
        BandParams {
            d0: 0.0,
            c: 1.0,
            vol_k: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Band {
    pub r: f64,
    pub log_lower: f64,
    pub log_mid: f64,
    pub log_upper: f64,
}

impl Band {
    pub fn contains_log(&self, v: f64) -> bool {
        v >= self.log_lower && v <= self.log_upper
    }
}

/// `ln [v_Γ ∗ v_P(·, y)](R)` with `ln v_P(u) = −ln A((u + h_y)/2)`.
pub fn log_counting_conv(vg: &VGammaModel, cusp: &CuspModel, h_y: f64, r: f64) -> Result<f64> {
    let vp = |u: f64| log_orbital_parabolic(cusp, u, h_y).map(|e| e.log_value).unwrap_or(f64::NEG_INFINITY);
    let breaks: Vec<f64> = cusp
        .profile
        .breakpoints()
        .iter()
        .map(|t| r - (2.0 * t - h_y))
        .filter(|t| *t > 0.0 && *t < r)
        .collect();
    conv_continuous(|t| vg.log_value(t) - vg.delta * r, vp, r, &breaks).map(|v| v + vg.delta * r)
}

/// Two-sided band `[conv(R−D₀)/C, C·conv(R+D₀)]` for `v_Γ(x, y, R)`.
pub fn counting_band(vg: &VGammaModel, cusp: &CuspModel, h_y: f64, r: f64, params: &BandParams) -> Result<Band> {
    let at = |x: f64| if x > 0.0 { log_counting_conv(vg, cusp, h_y, x) } else { Ok(f64::NEG_INFINITY) };
    let lc = params.c.ln();
    Ok(Band {
        r,
        log_lower: at(r - params.d0)? - lc,
        log_mid: at(r)?,
        log_upper: at(r + params.d0)? + lc,
    })
}

/// `ln 𝓕(t) − ρt` sampled on a log grid, linear in `t` between samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuspidalTable {
    pub rate: f64,
    pub grid: Vec<f64>,
    pub reduced: Vec<f64>,
}

impl CuspidalTable {
    const LO: f64 = 1e-3;

    pub fn new(cusp: &CuspModel, r_max: f64, rate: f64) -> Result<Self> {
        if !(r_max > 1.0) {
            return Err(invalid(format!("R_max must be > 1, got {r_max}")));
        }
        let grid = log_grid(Self::LO, r_max, 32);
        let reduced = par_map(&grid, |&t| log_cuspidal(cusp, t).map(|v| v - rate * t))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(CuspidalTable { rate, grid, reduced })
    }

    pub fn r_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// `ln 𝓕(t) − ρt`; linear in `t` below the first sample (`𝓕(t) ≈ t`).
    pub fn reduced_at(&self, t: f64) -> f64 {
        let g = &self.grid;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if t < g[0] {
            return self.reduced[0] + (t / g[0]).ln() - self.rate * (t - g[0]);
        }
        let i = g.partition_point(|&x| x <= t).clamp(1, g.len() - 1);
        let w = (t - g[i - 1]) / (g[i] - g[i - 1]);
        self.reduced[i - 1] + w * (self.reduced[i] - self.reduced[i - 1])
    }

    pub fn log_value(&self, t: f64) -> f64 {
        self.reduced_at(t) + self.rate * t
    }
}

/// `v_X` model: `v_Γ` convolved against the summed cuspidal functions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeModel {
    pub vgamma: VGammaModel,
    pub tables: Vec<CuspidalTable>,
    pub params: BandParams,
}

impl VolumeModel {
    /// Tabulates each cusp's 𝓕 up to `r_max + 2D₀`.
    pub fn new(vgamma: VGammaModel, cusps: &[CuspModel], r_max: f64, params: BandParams) -> Result<Self> {
        let reach = r_max + 2.0 * params.d0.max(0.0);
        let tables = cusps
            .iter()
            .map(|c| CuspidalTable::new(c, reach, vgamma.delta))
            .collect::<Result<Vec<_>>>()?;
        Ok(VolumeModel { vgamma, tables, params })
    }

    fn reduced_sum(&self, t: f64) -> f64 {
        let mut s = LogSum::new();
        for tb in &self.tables {
            s.push(tb.reduced_at(t) + (tb.rate - self.vgamma.delta) * t);
        }
        s.value()
    }

    /// `ln [v_Γ ∗ Σ𝓕](R) − δR`.
    pub fn reduced_conv(&self, r: f64) -> Result<f64> {
        if self.tables.is_empty() || !(r > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        let reach = self.tables[0].r_max();
        if r > reach * (1.0 + 1e-12) {
            return Err(invalid(format!("R = {r} exceeds the tabulated range {reach}")));
        }
        let mut breaks: Vec<f64> = self.tables[0].grid.iter().copied().filter(|&t| t < r).collect();
        breaks.push(r - 1.0);
        let vg = &self.vgamma;
        log_integrate(
            |t| vg.log_factor(r - t) + self.reduced_sum(t),
            0.0,
            r,
            &breaks,
            &QuadOptions::default(),
        )
    }

    pub fn log_conv(&self, r: f64) -> Result<f64> {
        Ok(self.reduced_conv(r)? + self.vgamma.delta * r)
    }

    fn log_core(&self, r: f64) -> f64 {
        self.params.vol_k.ln() + self.vgamma.log_value(r)
    }

    /// The cusp convolution, or the core term alone when there are no cusps.
    fn log_main(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            Ok(f64::NEG_INFINITY)
        } else if self.tables.is_empty() {
            Ok(self.log_core(x))
        } else {
            self.log_conv(x)
        }
    }

    /// Band for `v_X(R)`: `main(R−2D₀)/C ≤ v_X ≤ C·(vol(K)·v_Γ + main)(R+2D₀)`.
    pub fn band(&self, r: f64) -> Result<Band> {
        let lc = self.params.c.ln();
        let d = 2.0 * self.params.d0;
        let x = r + d;
        let upper = if self.tables.is_empty() || x <= 0.0 {
            self.log_main(x)?
        } else {
            log_add(self.log_core(x), self.log_conv(x)?)
        };
        Ok(Band {
            r,
            log_lower: self.log_main(r - d)? - lc,
            log_mid: self.log_main(r)?,
            log_upper: upper + lc,
        })
    }

    /// Band midpoints on a grid.
    pub fn midpoint_series(&self, grid: Vec<f64>, label: &str) -> Result<GrowthSeries> {
        GrowthSeries::from_fn(grid, label, |r| self.band(r).map(|b| b.log_mid))
    }
}

/// One-shot band for `v_X(R)`; tabulates the cuspidal functions on every call.
pub fn volume_band(vg: &VGammaModel, cusps: &[CuspModel], r: f64, params: &BandParams) -> Result<Band> {
    VolumeModel::new(vg.clone(), cusps, r.max(2.0), *params)?.band(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GrowthKind {
    PurelyExponential,
    LowerExponential,
    UpperExponential,
    Indeterminate,
}

impl GrowthKind {
    pub fn label(self) -> &'static str {
        match self {
            GrowthKind::PurelyExponential => "purely",
            GrowthKind::LowerExponential => "lower",
            GrowthKind::UpperExponential => "upper",
            GrowthKind::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassifyOptions {
    /// Trend threshold `τ`.
    pub tau: f64,
    /// Oscillation bound `B` for purely exponential growth.
    pub oscillation: f64,
    /// Windows must lie above this radius.
    pub r_floor: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tau: 10f64.ln(),
            oscillation: 100f64.ln(),
            r_floor: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthClass {
    pub kind: GrowthKind,
    pub omega: f64,
    /// Largest rise of the windowed maximum of `ln f − ωR`, inner to outer,
    /// over the outer half of the windows.
    pub max_rise: f64,
    /// Largest fall of the windowed minimum.
    pub min_fall: f64,
    pub oscillation: f64,
    /// Doubling windows of `ln f − ωR`, outermost first.
    pub windows: Vec<WindowStat>,
}

/// Growth type of `f` relative to `e^{ωR}` from doubling windows of `ln f − ωR`.
pub fn classify_growth(series: &GrowthSeries, omega: f64, opts: &ClassifyOptions) -> Result<GrowthClass> {
    let r_max = *series.grid.last().ok_or(Error::TooFewPoints { need: 8, got: 0 })?;
    let mut windows = Vec::new();
    let mut hi = r_max;
    while hi / 2.0 >= opts.r_floor.max(series.grid[0]) * (1.0 - 1e-12) {
        let lo = hi / 2.0;
        let mut w = WindowStat {
            lo,
            hi,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            points: 0,
        };
        for (r, v) in series.points().filter(|&(r, _)| r >= lo && r <= hi) {
            let g = v - omega * r;
            w.min = w.min.min(g);
            w.max = w.max.max(g);
            w.points += 1;
        }
        if w.points > 0 {
            windows.push(w);
        }
        hi = lo;
    }
    if windows.len() < 4 {
        return Err(Error::TooFewPoints {
            need: 4,
            got: windows.len(),
        });
    }
    // trends and oscillation are read on the outer half only, so that the
    // start-up transient of a convolution does not count as growth
    let tail = &windows[..windows.len().div_ceil(2)];
    let (mut max_rise, mut min_fall) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut lowest_max, mut highest_min) = (f64::INFINITY, f64::NEG_INFINITY);
    for w in tail.iter().rev() {
        max_rise = max_rise.max(w.max - lowest_max);
        min_fall = min_fall.min(w.min - highest_min);
        lowest_max = lowest_max.min(w.max);
        highest_min = highest_min.max(w.min);
    }
    let top = tail.iter().map(|w| w.max).fold(f64::NEG_INFINITY, f64::max);
    let bottom = tail.iter().map(|w| w.min).fold(f64::INFINITY, f64::min);
    let oscillation = top - bottom;
    let kind = if max_rise >= opts.tau {
        GrowthKind::UpperExponential
    } else if min_fall <= -opts.tau {
        GrowthKind::LowerExponential
    } else if oscillation <= opts.oscillation {
        GrowthKind::PurelyExponential
    } else {
        GrowthKind::Indeterminate
    };
    Ok(GrowthClass {
        kind,
        omega,
        max_rise,
        min_fall,
        oscillation,
        windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(delta: f64, n: usize) -> GrowthSeries {
        let g = (0..=n).map(|i| i as f64 * delta).collect();
        GrowthSeries::new(g, vec![0.0; n + 1], "one").unwrap()
    }

    #[test]
    fn gauge_counts_pairs() {
        let v = conv_gauge(&ones(1.0, 10), &ones(1.0, 10), 1.0, 5.0).unwrap();
        assert!((v.exp() - 4.0).abs() < 1e-12);
        let g: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let lin = GrowthSeries::new(g.clone(), g.iter().map(|h| h.max(1e-300).ln()).collect(), "h").unwrap();
        let v = conv_gauge(&lin, &ones(1.0, 10), 1.0, 4.0).unwrap();
        assert!((v.exp() - 6.0).abs() < 1e-12);
        assert_eq!(conv_gauge(&ones(1.0, 10), &ones(1.0, 10), 1.0, 1.5).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn gauge_missing_point() {
        let s = GrowthSeries::new(vec![0.0, 1.0, 3.0], vec![0.0; 3], "gap").unwrap();
        assert_eq!(conv_gauge(&s, &s, 1.0, 3.0), Err(Error::MissingGridPoint(2.0)));
    }

    #[test]
    fn gauge_is_symmetric() {
        let g: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
        let a = GrowthSeries::new(g.clone(), g.iter().map(|t| (t * 1.3).sin() + t).collect(), "a").unwrap();
        let b = GrowthSeries::new(g.clone(), g.iter().map(|t| 0.1 * t * t).collect(), "b").unwrap();
        for r in [3.0, 7.7, 19.9] {
            assert_eq!(conv_gauge(&a, &b, 0.5, r).unwrap(), conv_gauge(&b, &a, 0.5, r).unwrap());
        }
    }

    #[test]
    fn continuous_closed_forms() {
        let e = conv_continuous(|t| t, |t| t, 1.0, &[]).unwrap();
        assert!((e - 1.0).abs() < 1e-10);
        let seven = conv_continuous(|_| 0.0, |_| 0.0, 7.0, &[]).unwrap();
        assert!((seven.exp() - 7.0).abs() < 1e-9);
        let r: f64 = 10.0;
        let exact = 2.0 * r.exp() * (2.0 * (1.0 - (-r / 2.0).exp()) - (1.0 - (-r).exp()));
        let f = |t: f64| 2f64.ln() + (0.5 * t).exp_m1().ln();
        let v = conv_continuous(|t| t, f, r, &[]).unwrap();
        assert!((v - exact.ln()).abs() < 1e-8);
        assert!((exact - 43461.0).abs() < 1.0);
    }

    #[test]
    fn step_sandwich_small() {
        let one = StepFn::constant(1.0).unwrap();
        let rep = sandwich_check(&one, &one, 1.0, 5.0).unwrap();
        assert!(rep.holds);
        assert!((rep.log_lower.exp() - 3.0).abs() < 1e-12);
        assert!((rep.log_conv.exp() - 5.0).abs() < 1e-12);
        assert!((rep.log_upper.exp() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn sandwich_rejects_decreasing() {
        let f = StepFn::new(1.0, vec![2.0, 1.0]).unwrap();
        let one = StepFn::constant(1.0).unwrap();
        assert_eq!(sandwich_check(&f, &one, 1.0, 5.0), Err(Error::NonMonotone(1)));
    }

    #[test]
    fn sandwich_exponentials() {
        let rep = sandwich_check_log(|t| t, |t| t, 0.5, 10.0).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!(rep.lower_margin > 0.0 && rep.upper_margin > 0.0);
    }

    #[test]
    fn step_convolution_exact() {
        // f = 1 on [0,1), 3 after; g ≡ 2
        let f = StepFn::new(1.0, vec![1.0, 3.0]).unwrap();
        let g = StepFn::constant(2.0).unwrap();
        assert!((f.convolve(&g, 2.5) - (2.0 + 3.0 * 2.0 * 1.5)).abs() < 1e-12);
        assert!((g.convolve(&f, 2.5) - f.convolve(&g, 2.5)).abs() < 1e-12);
    }

    fn hyperbolic_model(r_max: f64) -> VolumeModel {
        VolumeModel::new(
            VGammaModel::constant(1.0, 1.0).unwrap(),
            &[CuspModel::hyperbolic(2).unwrap()],
            r_max,
            BandParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn volume_band_hyperbolic_midpoint() {
        let b = hyperbolic_model(10.0).band(10.0).unwrap();
        assert!((b.log_mid.exp() / 43461.0 - 1.0).abs() < 1e-3, "{}", b.log_mid.exp());
        assert!(b.log_lower <= b.log_mid && b.log_mid <= b.log_upper);
    }

    #[test]
    fn volume_band_without_cusps() {
        let vg = VGammaModel::constant(1.0, 2.0).unwrap();
        let b = volume_band(&vg, &[], 7.0, &BandParams::default()).unwrap();
        assert!((b.log_mid - (7.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(b.log_lower, b.log_mid);
        assert_eq!(b.log_upper, b.log_mid);
    }

    #[test]
    fn volume_band_shift_orders_bounds() {
        let mut m = hyperbolic_model(40.0);
        m.params = BandParams {
            d0: 1.0,
            c: 3.0,
            vol_k: 1.0,
        };
        let mut prev = f64::NEG_INFINITY;
        for r in [5.0, 10.0, 20.0, 35.0] {
            let b = m.band(r).unwrap();
            assert!(b.log_lower <= b.log_mid && b.log_mid <= b.log_upper);
            assert!(b.log_lower >= prev);
            prev = b.log_lower;
        }
    }

    #[test]
    fn hyperbolic_midpoint_is_purely_exponential() {
        let m = hyperbolic_model(400.0);
        let s = m.midpoint_series(log_grid(1.0, 400.0, 16), "v_X").unwrap();
        let c = classify_growth(&s, 1.0, &ClassifyOptions::default()).unwrap();
        assert_eq!(c.kind, GrowthKind::PurelyExponential);
    }

    #[test]
    fn counting_band_hyperbolic() {
        let vg = VGammaModel::constant(1.0, 1.0).unwrap();
        let cusp = CuspModel::hyperbolic(2).unwrap();
        // ∫₀^R e^{R−t} e^{t/2} dt = 2e^R(1 − e^{−R/2})
        let b = counting_band(&vg, &cusp, 0.0, 12.0, &BandParams::default()).unwrap();
        let exact = (2.0 * 12f64.exp() * (1.0 - (-6f64).exp())).ln();
        assert!((b.log_mid - exact).abs() < 1e-7);
        assert_eq!(b.log_lower, b.log_mid);
        let shifted = counting_band(&vg, &cusp, 4.0, 12.0, &BandParams::default()).unwrap();
        assert!((shifted.log_mid - b.log_mid - 2.0).abs() < 1e-7);
    }

    fn series(f: impl Fn(f64) -> f64) -> GrowthSeries {
        let g = log_grid(1.0, 1e6, 16);
        let v = g.iter().map(|&r| f(r)).collect();
        GrowthSeries::new(g, v, "s").unwrap()
    }

    #[test]
    fn classify_examples() {
        let o = ClassifyOptions::default();
        let k = |f: &dyn Fn(f64) -> f64| classify_growth(&series(f), 2.0, &o).unwrap().kind;
        assert_eq!(k(&|r| 2.0 * r), GrowthKind::PurelyExponential);
        assert_eq!(k(&|r| 0.5 * r.ln() + 2.0 * r), GrowthKind::UpperExponential);
        assert_eq!(k(&|r| 2.0 * r - r.ln()), GrowthKind::LowerExponential);
    }

    #[test]
    fn classify_needs_windows() {
        let g = log_grid(1.0, 8.0, 8);
        let s = GrowthSeries::new(g.clone(), g.clone(), "s").unwrap();
        assert!(matches!(
            classify_growth(&s, 1.0, &ClassifyOptions::default()),
            Err(Error::TooFewPoints { need: 4, got: 3 })
        ));
    }

    #[test]
    fn power_decay_model() {
        let m = VGammaModel::power_decay(1.5, 0.5).unwrap();
        assert!((m.log_value(3.0) - (4.5 - 0.5 * 4f64.ln())).abs() < 1e-15);
        assert!(VGammaModel::power_decay(1.0, 0.0).is_err());
        assert!(VGammaModel::constant(0.0, 1.0).is_err());
    }
}
