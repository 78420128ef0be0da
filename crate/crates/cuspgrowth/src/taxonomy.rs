//! Lattice classification (sparse, exotic, pinching class) and the example
//! runner that checks predicted growth types against computed bands.

use std::fmt::Write as _;

use serde::Serialize;

use crate::asymptotics::{orbital_series, poincare_abscissa, series_convergence_at, CuspModel, Weight};
use crate::convolution::{
    classify_growth, BandParams, ClassifyOptions, GrowthClass, GrowthKind, VGammaModel, VolumeModel,
};
use crate::error::{Error, Result};
use crate::profiles::{catalog_cusps, CatalogParams, CurvatureBounds, ExampleId};
use crate::series::{estimate_exponents, log_grid, GrowthSeries, WindowPolicy};

/// A lattice described by its cusps and a model of `v_Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub cusps: Vec<CuspModel>,
    pub vgamma: VGammaModel,
    /// Nominal curvature bounds of the manifold.
    pub bounds: CurvatureBounds,
    /// Cusps asserted to satisfy `δ⁺(P) = δ(Γ)`.
    pub dominant: Vec<bool>,
    /// Declared divergence of the Poincaré series of Γ; `None` lets the
    /// classifier infer it (groups without dominant cusps are divergent).
    pub divergent: Option<bool>,
}

impl LatticeSpec {
    /// Non-exotic lattice with the given cusps.
    pub fn regular(cusps: Vec<CuspModel>, vgamma: VGammaModel, bounds: CurvatureBounds) -> Self {
        let n = cusps.len();
        LatticeSpec {
            cusps,
            vgamma,
            bounds,
            dominant: vec![false; n],
            divergent: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TaxonomyOptions {
    /// Radius up to which `v_P` is sampled for `δ⁻`.
    pub exponent_radius: f64,
    pub windows: usize,
    /// Relative tolerance of the equality tests, as a fraction of `δ(Γ)`.
    pub rel_tol: f64,
}

impl Default for TaxonomyOptions {
    fn default() -> Self {
        TaxonomyOptions {
            exponent_radius: 1e12,
            windows: 8,
            rel_tol: 0.02,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CuspExponents {
    pub delta_minus: f64,
    pub delta_plus: f64,
}

/// `δ⁺` from the Poincaré abscissa, `δ⁻` from the windowed lower rate of `v_P`.
pub fn cusp_exponents(cusp: &CuspModel, opts: &TaxonomyOptions) -> Result<CuspExponents> {
    let v = orbital_series(cusp, opts.exponent_radius, 0.0)?;
    let policy = WindowPolicy {
        windows: opts.windows,
        tol: opts.rel_tol,
        r_floor: cusp.r0(),
        ..WindowPolicy::default()
    };
    Ok(CuspExponents {
        delta_minus: estimate_exponents(&v, &policy)?.omega_minus,
        delta_plus: poincare_abscissa(cusp)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PinchClass {
    StrictlyHalfPinched,
    ExactlyHalfPinched,
    NotHalfPinched,
}

impl PinchClass {
    pub fn label(self) -> &'static str {
        match self {
            PinchClass::StrictlyHalfPinched => "strictly-half-pinched",
            PinchClass::ExactlyHalfPinched => "exactly-half-pinched",
            PinchClass::NotHalfPinched => "not-half-pinched",
        }
    }
}

/// Expected behaviour; `None` entries are unconstrained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub vgamma: Option<GrowthKind>,
    pub vx: Option<GrowthKind>,
    pub bm_finite: Option<bool>,
    pub margulis_function: bool,
    pub note: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmVerdict {
    pub finite: bool,
    pub divergent: bool,
    /// Divergence was declared rather than derived.
    pub declared: bool,
    /// Per dominant cusp: does `∫ t·e^{−δt}/A(t/2) dt` converge.
    pub linear_weight: Vec<Option<bool>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuarterPinchReport {
    pub applies: bool,
    /// `(n−1)a/2` and `(n−1)b/2`.
    pub delta_range: (f64, f64),
    pub entropy_floor_ok: bool,
    /// `δ⁺(P) ≤ (n−1)b/2 < δ(Γ)`; `None` when the gate does not apply.
    pub critical_gap: Option<bool>,
    pub consistent: bool,
}

/// The ¼-pinching gate: `b² ≤ 4a² + ε` forces `δ⁺(P) < δ(Γ)` once `δ(Γ) > (n−1)a`.
pub fn quarter_pinch_gate(bounds: &CurvatureBounds, delta_gamma: f64) -> QuarterPinchReport {
    let n1 = bounds.dim_factor();
    let applies = bounds.b * bounds.b <= 4.0 * bounds.a * bounds.a + bounds.eps;
    let entropy_floor_ok = delta_gamma >= n1 * bounds.a;
    let cap = n1 * bounds.b / 2.0;
    let critical_gap = (applies && delta_gamma > n1 * bounds.a).then_some(cap < delta_gamma);
    QuarterPinchReport {
        applies,
        delta_range: (n1 * bounds.a / 2.0, cap),
        entropy_floor_ok,
        critical_gap,
        consistent: entropy_floor_ok && critical_gap != Some(false),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaxonomyReport {
    pub delta_gamma: f64,
    pub exponents: Vec<CuspExponents>,
    pub sparse: bool,
    pub exotic: bool,
    pub pinch_class: PinchClass,
    pub quarter_pinched: bool,
    pub gate: QuarterPinchReport,
    pub bm: BmVerdict,
    pub prediction: Prediction,
}

pub fn classify_lattice(spec: &LatticeSpec) -> Result<TaxonomyReport> {
    classify_lattice_with(spec, &TaxonomyOptions::default())
}

pub fn classify_lattice_with(spec: &LatticeSpec, opts: &TaxonomyOptions) -> Result<TaxonomyReport> {
    if spec.cusps.is_empty() {
        return Err(Error::Specification("a lattice needs at least one cusp".into()));
    }
    if spec.dominant.len() != spec.cusps.len() {
        return Err(Error::Specification(format!(
            "{} dominance flags for {} cusps",
            spec.dominant.len(),
            spec.cusps.len()
        )));
    }
    let delta = spec.vgamma.delta;
    let tol = opts.rel_tol * delta;
    let exponents = spec
        .cusps
        .iter()
        .map(|c| cusp_exponents(c, opts))
        .collect::<Result<Vec<_>>>()?;
    for (i, (e, &dom)) in exponents.iter().zip(&spec.dominant).enumerate() {
        if e.delta_plus > delta + tol {
            return Err(Error::Specification(format!(
                "cusp {i}: δ⁺ = {:.4} exceeds δ(Γ) = {delta}",
                e.delta_plus
            )));
        }
        if dom && (e.delta_plus - delta).abs() > tol {
            return Err(Error::Specification(format!(
                "cusp {i} is flagged dominant but δ⁺ = {:.4} ≠ δ(Γ) = {delta}",
                e.delta_plus
            )));
        }
    }
    let excess = exponents
        .iter()
        .map(|e| e.delta_plus - 2.0 * e.delta_minus)
        .fold(f64::NEG_INFINITY, f64::max);
    let sparse = excess > tol;
    let pinch_class = if excess < -tol {
        PinchClass::StrictlyHalfPinched
    } else if sparse {
        PinchClass::NotHalfPinched
    } else {
        PinchClass::ExactlyHalfPinched
    };
    let exotic = spec.dominant.iter().any(|&d| d);

    let declared = spec.divergent.is_some();
    let divergent = spec.divergent.unwrap_or(!exotic);
    let linear_weight = spec
        .cusps
        .iter()
        .zip(&spec.dominant)
        .filter(|(_, &d)| d)
        .map(|(c, _)| series_convergence_at(c, delta, Weight::Linear).map(|v| v.converges))
        .collect::<Result<Vec<_>>>()?;
    let finite = divergent && linear_weight.iter().all(|&v| v == Some(true));
    let bm = BmVerdict {
        finite,
        divergent,
        declared,
        linear_weight,
    };

    let gate = quarter_pinch_gate(&spec.bounds, delta);
    let prediction = predict(sparse, exotic, pinch_class, finite);
    Ok(TaxonomyReport {
        delta_gamma: delta,
        exponents,
        sparse,
        exotic,
        pinch_class,
        quarter_pinched: gate.applies,
        gate,
        bm,
        prediction,
    })
}

fn predict(sparse: bool, exotic: bool, pinch: PinchClass, bm_finite: bool) -> Prediction {
    use GrowthKind::*;
    let (vg, vx) = if bm_finite { (PurelyExponential, PurelyExponential) } else { (LowerExponential, LowerExponential) };
    if sparse {
        return Prediction {
            vgamma: None,
            vx: None,
            bm_finite: None,
            margulis_function: false,
            note: "sparse: any behaviour of v_X, ω⁺(X) > δ(Γ) possible",
        };
    }
    if !exotic {
        return Prediction {
            vgamma: Some(PurelyExponential),
            vx: Some(PurelyExponential),
            bm_finite: Some(true),
            margulis_function: true,
            note: "regular: v_X ≍ v_Γ purely exponential, Margulis function exists",
        };
    }
    match pinch {
        PinchClass::StrictlyHalfPinched => Prediction {
            vgamma: Some(vg),
            vx: Some(vx),
            bm_finite: Some(bm_finite),
            margulis_function: bm_finite,
            note: "exotic, δ⁺ < 2δ⁻: v_X ≍ v_Γ, purely or lower exponential with μ_BM",
        },
        _ => Prediction {
            vgamma: Some(vg),
            vx: Some(UpperExponential),
            bm_finite: Some(bm_finite),
            margulis_function: false,
            note: "exotic, δ⁺ = 2δ⁻: v_X upper-exponential",
        },
    }
}

/// Per-example modelling choices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleSetup {
    pub delta_gamma: f64,
    /// Declared divergence of Γ, when the construction tunes it.
    pub divergent: Option<bool>,
    /// Power of `(1+R)^{−γ}` used for `v_Γ` when μ_BM is infinite.
    pub decay: f64,
    pub default_r_max: f64,
    /// Total number of cusps; missing ones are hyperbolic.
    pub cusp_count: usize,
}

pub fn example_setup(id: ExampleId, params: &CatalogParams) -> ExampleSetup {
    let half = params.b / 2.0;
    let (delta_gamma, divergent, decay, default_r_max) = match id {
        ExampleId::Sparse => (half + 0.01, None, 1.0, 600.0),
        ExampleId::ExoticConvergent => (half, Some(false), 1.2, 4000.0),
        ExampleId::ExoticDivergent => (half, Some(true), 1.0, 60.0),
        ExampleId::CriticalFinite => (half, Some(true), 1.0, 1e12),
        ExampleId::CriticalInfinite => (half, Some(true), 1.0 - params.gamma, 1e12),
    };
    ExampleSetup {
        delta_gamma,
        divergent,
        decay,
        default_r_max,
        cusp_count: 3,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

impl Claim {
    fn new(name: &str, expected: impl ToString, observed: impl ToString, pass: bool) -> Self {
        Claim {
            name: name.into(),
            expected: expected.to_string(),
            observed: observed.to_string(),
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleReport {
    pub id: ExampleId,
    pub params: CatalogParams,
    pub r_max: f64,
    pub taxonomy: TaxonomyReport,
    pub vgamma: VGammaModel,
    pub vgamma_class: GrowthClass,
    pub vx_class: GrowthClass,
    pub omega_x: (f64, f64),
    /// Band midpoints for `v_X`.
    pub vx_series: GrowthSeries,
    pub claims: Vec<Claim>,
    pub passes: bool,
}

/// Build the example lattice, classify it and compare computed growth
/// classes of `v_Γ` and `v_X` with the prediction.
pub fn run_example(id: ExampleId, params: &CatalogParams, r_max: Option<f64>) -> Result<ExampleReport> {
    let setup = example_setup(id, params);
    let r_max = r_max.unwrap_or(setup.default_r_max);
    if !(r_max >= 16.0 && r_max.is_finite()) {
        return Err(crate::error::invalid(format!("R_max must be >= 16, got {r_max}")));
    }
    let modified = catalog_cusps(id, params)?;
    let n = modified.len();
    let mut cusps: Vec<CuspModel> = modified.into_iter().map(CuspModel::from_profile).collect();
    while cusps.len() < setup.cusp_count {
        cusps.push(CuspModel::hyperbolic(2)?);
    }
    let exotic = id != ExampleId::Sparse;
    let dominant: Vec<bool> = (0..cusps.len()).map(|i| exotic && i < n).collect();
    let bounds = CurvatureBounds::new(1.0, params.b, 2, 0.1)?;

    // the v_Γ model depends on the BM verdict, which does not depend on it
    let probe = LatticeSpec {
        cusps,
        vgamma: VGammaModel::constant(setup.delta_gamma, 1.0)?,
        bounds,
        dominant,
        divergent: setup.divergent,
    };
    let mut taxonomy = classify_lattice(&probe)?;
    let vgamma = if taxonomy.bm.finite {
        VGammaModel::constant(setup.delta_gamma, 1.0)?
    } else {
        VGammaModel::power_decay(setup.delta_gamma, setup.decay)?
    };
    taxonomy.prediction = predict(taxonomy.sparse, taxonomy.exotic, taxonomy.pinch_class, taxonomy.bm.finite);

    let grid = log_grid(1.0, r_max, 32);
    let copts = ClassifyOptions {
        r_floor: (r_max / 16.0).min(10.0),
        ..ClassifyOptions::default()
    };
    let vg_series = GrowthSeries::from_fn(grid.clone(), "v_Gamma", |r| Ok(vgamma.log_value(r)))?;
    let vgamma_class = classify_growth(&vg_series, vgamma.delta, &copts)?;
    let model = VolumeModel::new(vgamma.clone(), &probe.cusps, r_max, BandParams::default())?;
    let vx_series = model.midpoint_series(grid, "v_X")?;
    let vx_class = classify_growth(&vx_series, vgamma.delta, &copts)?;
    let policy = WindowPolicy {
        r_floor: copts.r_floor,
        ..WindowPolicy::for_bounds(1.0, params.b)
    };
    let est = estimate_exponents(&vx_series, &policy)?;
    let omega_x = (est.omega_minus, est.omega_plus);

    let mut claims = Vec::new();
    let pred = &taxonomy.prediction;
    let kind = |k: Option<GrowthKind>| k.map_or("any", GrowthKind::label);
    match id {
        ExampleId::Sparse => {
            claims.push(Claim::new("sparse", true, taxonomy.sparse, taxonomy.sparse));
            let gap = omega_x.1 - vgamma.delta;
            claims.push(Claim::new(
                "omega_plus_X_exceeds_delta",
                ">= 0.05",
                format!("{gap:.4}"),
                gap >= 0.05,
            ));
        }
        _ => {
            claims.push(Claim::new("exotic", true, taxonomy.exotic, taxonomy.exotic));
            let want = if matches!(id, ExampleId::CriticalFinite | ExampleId::CriticalInfinite) {
                PinchClass::ExactlyHalfPinched
            } else {
                PinchClass::StrictlyHalfPinched
            };
            claims.push(Claim::new(
                "pinch_class",
                want.label(),
                taxonomy.pinch_class.label(),
                taxonomy.pinch_class == want,
            ));
        }
    }
    if let Some(bm) = pred.bm_finite {
        claims.push(Claim::new("bm_finite", bm, taxonomy.bm.finite, bm == taxonomy.bm.finite));
    }
    if let Some(k) = pred.vgamma {
        claims.push(Claim::new("v_Gamma_class", k.label(), vgamma_class.kind.label(), k == vgamma_class.kind));
    }
    if let Some(k) = pred.vx {
        claims.push(Claim::new("v_X_class", kind(Some(k)), vx_class.kind.label(), k == vx_class.kind));
    }
    let passes = claims.iter().all(|c| c.pass);
    Ok(ExampleReport {
        id,
        params: *params,
        r_max,
        taxonomy,
        vgamma,
        vgamma_class,
        vx_class,
        omega_x,
        vx_series,
        claims,
        passes,
    })
}

impl ExampleReport {
    /// `(v_Γ class, v_X class, μ_BM finite)`.
    pub fn triple(&self) -> (GrowthKind, GrowthKind, bool) {
        (self.vgamma_class.kind, self.vx_class.kind, self.taxonomy.bm.finite)
    }

    pub fn to_text(&self) -> String {
        let t = &self.taxonomy;
        let mut s = String::new();
        let _ = writeln!(s, "example {}  R_max = {}", self.id, self.r_max);
        let _ = writeln!(s, "\n[taxonomy]");
        let _ = writeln!(s, "delta_gamma = {}", t.delta_gamma);
        let _ = writeln!(s, "sparse = {}  exotic = {}  pinch = {}", t.sparse, t.exotic, t.pinch_class.label());
        let _ = writeln!(s, "quarter_pinched = {}", t.quarter_pinched);
        let _ = writeln!(s, "prediction: {}", t.prediction.note);
        let _ = writeln!(s, "\n[exponents]");
        for (i, e) in t.exponents.iter().enumerate() {
            let _ = writeln!(s, "cusp {i}: delta- = {:.4}  delta+ = {:.4}", e.delta_minus, e.delta_plus);
        }
        let _ = writeln!(s, "omega(X) in [{:.4}, {:.4}]", self.omega_x.0, self.omega_x.1);
        let _ = writeln!(s, "\n[bm]");
        let _ = writeln!(
            s,
            "divergent = {}{}  finite = {}  linear-weight = {:?}",
            t.bm.divergent,
            if t.bm.declared { " (declared)" } else { "" },
            t.bm.finite,
            t.bm.linear_weight
        );
        let _ = writeln!(s, "\n[growth]");
        for (name, c) in [("v_Gamma", &self.vgamma_class), ("v_X", &self.vx_class)] {
            let _ = writeln!(
                s,
                "{name}: {}  rise = {:.3}  fall = {:.3}  oscillation = {:.3}",
                c.kind.label(),
                c.max_rise,
                c.min_fall,
                c.oscillation
            );
        }
        let _ = writeln!(s, "\n[claims]");
        for c in &self.claims {
            let _ = writeln!(
                s,
                "{:<28} expected {:<12} observed {:<12} {}",
                c.name,
                c.expected,
                c.observed,
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        s
    }

    /// `example,claim,expected,observed,pass` rows, no header.
    pub fn to_csv(&self) -> String {
        self.claims
            .iter()
            .map(|c| format!("{},{},{},{},{}\n", self.id, c.name, c.expected, c.observed, c.pass))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyp() -> CuspModel {
        CuspModel::hyperbolic(2).unwrap()
    }

    #[test]
    fn two_hyperbolic_cusps_are_regular() {
        let spec = LatticeSpec::regular(
            vec![hyp(), hyp()],
            VGammaModel::constant(1.0, 1.0).unwrap(),
            CurvatureBounds::hyperbolic(),
        );
        let r = classify_lattice(&spec).unwrap();
        assert!(!r.sparse && !r.exotic);
        assert_eq!(r.pinch_class, PinchClass::StrictlyHalfPinched);
        assert!(r.prediction.margulis_function);
        assert_eq!(r.prediction.vx, Some(GrowthKind::PurelyExponential));
        assert!(r.bm.finite);
    }

    #[test]
    fn bad_dominance_flag() {
        let mut spec = LatticeSpec::regular(
            vec![hyp()],
            VGammaModel::constant(1.0, 1.0).unwrap(),
            CurvatureBounds::hyperbolic(),
        );
        spec.dominant = vec![true];
        assert!(matches!(classify_lattice(&spec), Err(Error::Specification(_))));
        spec.dominant = vec![];
        assert!(matches!(classify_lattice(&spec), Err(Error::Specification(_))));
    }

    #[test]
    fn gate_examples() {
        let b2 = CurvatureBounds::new(1.0, 2.0, 2, 0.0).unwrap();
        let g = quarter_pinch_gate(&b2, 1.2);
        assert!(g.applies && g.consistent && g.critical_gap == Some(true));
        let g = quarter_pinch_gate(&b2, 0.9);
        assert!(!g.entropy_floor_ok && !g.consistent);
        let b3 = CurvatureBounds::new(1.0, 3.0, 2, 0.1).unwrap();
        assert!(!quarter_pinch_gate(&b3, 1.6).applies);
    }

    #[test]
    fn sparse_never_strict() {
        for (s, e, p) in [(true, false, PinchClass::NotHalfPinched), (false, true, PinchClass::ExactlyHalfPinched)] {
            let pr = predict(s, e, p, true);
            assert!(!(s && pr.margulis_function));
        }
    }
}
