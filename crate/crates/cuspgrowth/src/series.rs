//! Sampled growth functions and exponential-rate estimation.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// `ln f` sampled on a strictly increasing radius grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthSeries {
    pub grid: Vec<f64>,
    pub log_values: Vec<f64>,
    pub label: String,
}

impl GrowthSeries {
    pub fn new(grid: Vec<f64>, log_values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if grid.len() != log_values.len() {
            return Err(invalid(format!(
                "grid has {} points but {} values",
                grid.len(),
                log_values.len()
            )));
        }
        if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(invalid(format!("grid is not strictly increasing at index {}", i + 1)));
        }
        if let Some(i) = log_values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite log value at R = {}", grid[i])));
        }
        Ok(GrowthSeries {
            grid,
            log_values,
            label: label.into(),
        })
    }

    /// Sample `ln f` on `grid`.
    pub fn from_fn(grid: Vec<f64>, label: impl Into<String>, f: impl Fn(f64) -> Result<f64> + Sync) -> Result<Self> {
        let values = par_map(&grid, |&r| f(r)).into_iter().collect::<Result<Vec<_>>>()?;
        GrowthSeries::new(grid, values, label)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.iter().copied().zip(self.log_values.iter().copied())
    }

    /// Add `c` to every log value (multiply `f` by `e^c`).
    pub fn shifted(&self, c: f64) -> Self {
        GrowthSeries {
            grid: self.grid.clone(),
            log_values: self.log_values.iter().map(|v| v + c).collect(),
            label: self.label.clone(),
        }
    }

    /// Log-linear interpolation, clamped to the end values.
    pub fn interpolate(&self, r: f64) -> f64 {
        let n = self.grid.len();
        if r <= self.grid[0] {
            return self.log_values[0];
        }
        if r >= self.grid[n - 1] {
            return self.log_values[n - 1];
        }
        let i = self.grid.partition_point(|&g| g <= r) - 1;
        let w = (r - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.log_values[i] + w * (self.log_values[i + 1] - self.log_values[i])
    }

    /// Two-column table with a label header.
    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\nR,ln_f\n", self.label);
        for (r, v) in self.points() {
            out.push_str(&format!("{r},{v}\n"));
        }
        out
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        let label = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::Parse("missing `# label` header".into()))?
            .to_string();
        if lines.next().map(str::trim) != Some("R,ln_f") {
            return Err(Error::Parse("missing `R,ln_f` column header".into()));
        }
        let (mut grid, mut vals) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut cols = line.split(',');
            let mut next = || -> Result<f64> {
                cols.next()
                    .and_then(|c| c.trim().parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad row {}: `{line}`", i + 3)))
            };
            grid.push(next()?);
            vals.push(next()?);
        }
        GrowthSeries::new(grid, vals, label).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Log-spaced grid from `lo` to `hi` with `per_doubling` points per factor 2.
pub fn log_grid(lo: f64, hi: f64, per_doubling: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && per_doubling > 0);
    let steps = ((hi / lo).log2() * per_doubling as f64).ceil() as usize;
    let mut g: Vec<f64> = (0..steps).map(|i| lo * (hi / lo).powf(i as f64 / steps as f64)).collect();
    g.push(hi);
    g
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, U: Send>(xs: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    xs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, U: Send>(xs: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    xs.iter().map(f).collect()
}

/// Which tail windows the estimator inspects.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowPolicy {
    /// Number of doubling windows `[R_max/2^{j+1}, R_max/2^j]`.
    pub windows: usize,
    /// Agreement required between the two outermost windows.
    pub tol: f64,
    /// Points below this radius are ignored.
    pub r_floor: f64,
    pub anchor: Anchor,
}

/// Where secant slopes are anchored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub enum Anchor {
    /// First grid point at or above `r_floor`.
    #[default]
    Floor,
    /// Last grid point; points closer than `min_span` to it are skipped.
    /// Suits counts whose relative noise decays with R.
    Top { min_span: f64 },
}

impl WindowPolicy {
    /// Four windows, tolerance `0.02·(b/a)`.
    pub fn for_bounds(a: f64, b: f64) -> Self {
        WindowPolicy {
            windows: 4,
            tol: 0.02 * b / a,
            r_floor: 0.0,
            anchor: Anchor::Floor,
        }
    }
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy::for_bounds(1.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowStat {
    pub lo: f64,
    pub hi: f64,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub omega_minus: f64,
    pub omega_plus: f64,
    /// Outermost window first.
    pub windows: Vec<WindowStat>,
    pub converged: bool,
    pub anchor: f64,
}

impl ExponentEstimate {
    /// Midpoint of the outermost window.
    pub fn rate(&self) -> f64 {
        let w = &self.windows[0];
        0.5 * (w.min + w.max)
    }
}

/// Windowed growth rates of a series.
///
/// The rate at `R` is the secant slope `(ln f(R) − ln f(R₀))/(R − R₀)` from the
/// anchor `R₀` (by default the first grid point `≥ r_floor`), so constant
/// factors cancel exactly.
pub fn estimate_exponents(series: &GrowthSeries, policy: &WindowPolicy) -> Result<ExponentEstimate> {
    if series.len() < 8 {
        return Err(Error::TooFewPoints {
            need: 8,
            got: series.len(),
        });
    }
    if policy.windows == 0 {
        return Err(invalid("window policy needs at least one window"));
    }
    let (r0, v0, span) = match policy.anchor {
        Anchor::Floor => {
            let (r, v) = series
                .points()
                .find(|&(r, _)| r >= policy.r_floor)
                .ok_or(Error::TooFewPoints { need: 8, got: 0 })?;
            (r, v, 0.0)
        }
        Anchor::Top { min_span } => {
            let (r, v) = series.points().last().ok_or(Error::TooFewPoints { need: 8, got: 0 })?;
            (r, v, min_span.max(0.0))
        }
    };
    let r_max = *series.grid.last().unwrap();
    let mut windows = Vec::with_capacity(policy.windows);
    for j in 0..policy.windows {
        let hi = r_max / 2f64.powi(j as i32);
        let lo = hi / 2.0;
        let mut stat = WindowStat {
            lo,
            hi,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            points: 0,
        };
        for (r, v) in series.points() {
            let far = match policy.anchor {
                Anchor::Floor => r > r0,
                Anchor::Top { .. } => r < r0 && r0 - r >= span,
            };
            if r >= lo && r <= hi && far && r >= policy.r_floor {
                let w = (v - v0) / (r - r0);
                stat.min = stat.min.min(w);
                stat.max = stat.max.max(w);
                stat.points += 1;
            }
        }
        if stat.points > 0 {
            windows.push(stat);
        }
    }
    if windows.is_empty() {
        return Err(Error::TooFewPoints { need: 1, got: 0 });
    }
    let omega_plus = windows.iter().map(|w| w.max).fold(f64::NEG_INFINITY, f64::max);
    let omega_minus = windows.iter().map(|w| w.min).fold(f64::INFINITY, f64::min);
    let converged = windows.len() >= 2
        && (windows[0].max - windows[1].max).abs() <= policy.tol
        && (windows[0].min - windows[1].min).abs() <= policy.tol;
    Ok(ExponentEstimate {
        omega_minus,
        omega_plus,
        windows,
        converged,
        anchor: r0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> GrowthSeries {
        let g = log_grid(lo, hi, 32);
        let v = g.iter().map(|&r| f(r)).collect();
        GrowthSeries::new(g, v, "test").unwrap()
    }

    #[test]
    fn pure_exponential_rate_is_exact() {
        let e = estimate_exponents(&series(|r| 2.0 * r, 1.0, 100.0), &WindowPolicy::default()).unwrap();
        assert!((e.omega_plus - 2.0).abs() < 1e-9 && (e.omega_minus - 2.0).abs() < 1e-9);
        assert!(e.converged);
    }

    #[test]
    fn polynomial_factor_is_suppressed() {
        let e = estimate_exponents(&series(|r| r.ln() + 2.0 * r, 1.0, 1e4), &WindowPolicy::default()).unwrap();
        assert!((e.omega_plus - 2.0).abs() < 0.02 && (e.omega_minus - 2.0).abs() < 0.02);
    }

    #[test]
    fn too_few_points() {
        let s = GrowthSeries::new(vec![1.0, 2.0], vec![0.0, 1.0], "x").unwrap();
        assert!(matches!(
            estimate_exponents(&s, &WindowPolicy::default()),
            Err(Error::TooFewPoints { need: 8, got: 2 })
        ));
    }

    #[test]
    fn text_round_trip() {
        let s = series(|r| 0.1 * r + r.sin(), 1.0, 50.0);
        assert_eq!(GrowthSeries::from_text(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn rejects_unsorted_grid() {
        assert!(GrowthSeries::new(vec![1.0, 1.0], vec![0.0, 0.0], "x").is_err());
    }

    #[test]
    fn interpolation_is_log_linear() {
        let s = GrowthSeries::new(vec![1.0, 3.0], vec![0.0, 4.0], "x").unwrap();
        assert_eq!(s.interpolate(2.0), 2.0);
        assert_eq!(s.interpolate(9.0), 4.0);
    }
}
