use std::fmt::Write as _;
use std::path::PathBuf;

use cuspgrowth::asymptotics::*;
use cuspgrowth::convolution::VGammaModel;
use cuspgrowth::h2;
use cuspgrowth::profiles::{catalog_cusps, validate_profile, CurvatureBounds, ExampleId, Profile};
use cuspgrowth::series::{estimate_exponents, WindowPolicy};
use cuspgrowth::taxonomy::{classify_lattice_with, run_example, LatticeSpec, TaxonomyOptions, TaxonomyReport};
use serde::Deserialize;

use crate::config::{parse_toml, read_input, Inputs, Tolerances};
use crate::output::Run;
use crate::CliError;

fn example_id(name: &str) -> Result<ExampleId, CliError> {
    Ok(name.parse::<ExampleId>()?)
}

/// Profiles named by `--profile` or `--name` (all cusps of the example).
fn profiles(inputs: &Inputs) -> Result<Vec<(String, Profile)>, CliError> {
    match (&inputs.profile, &inputs.name) {
        (Some(path), None) => {
            let p = Profile::from_text(&read_input(path)?)?;
            Ok(vec![(path.display().to_string(), p)])
        }
        (None, Some(name)) => {
            let id = example_id(name)?;
            let ps = catalog_cusps(id, &inputs.catalog_params())?;
            let n = ps.len();
            Ok(ps
                .into_iter()
                .enumerate()
                .map(|(i, p)| (if n == 1 { name.clone() } else { format!("{name}#{i}") }, p))
                .collect())
        }
        (Some(_), Some(_)) => Err(CliError::Config("give either --profile or --name, not both".into())),
        (None, None) => Err(CliError::Config("a profile is required: --profile <file> or --name <example>".into())),
    }
}

pub fn profile_validate(inputs: &Inputs, run: &mut Run) -> Result<(), CliError> {
    let mut csv = String::from("profile,piece,kind,t0,t1,min_ratio,max_ratio,monotone,convex,ratio_ok\n");
    for (i, (label, p)) in profiles(inputs)?.into_iter().enumerate() {
        let rep = validate_profile(&p);
        run.write(&format!("profile_{i}.toml"), &p.to_text())?;
        for pc in &rep.pieces {
            let _ = writeln!(
                csv,
                "{label},{},{},{},{},{},{},{},{},{}",
                pc.index, pc.kind, pc.t0, pc.t1, pc.min_ratio, pc.max_ratio, pc.monotone, pc.convex, pc.ratio_ok
            );
        }
        run.line(format!("[{label}]"));
        run.line(format!(
            "pieces = {}  ratio range = [{:.4}, {:.4}] within [{:.4}, {:.4}]",
            rep.pieces.len(),
            rep.min_ratio,
            rep.max_ratio,
            rep.ratio_range.0,
            rep.ratio_range.1
        ));
        run.line(format!(
            "monotone = {}  convex = {}  ratio_ok = {}  joins_ok = {} (worst jump {:.2e})",
            rep.monotone, rep.convex, rep.ratio_ok, rep.joins_ok, rep.worst_join
        ));
        let failed: Vec<&str> = [
            ("monotone", rep.monotone),
            ("convex", rep.convex),
            ("ratio", rep.ratio_ok),
            ("joins", rep.joins_ok),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| n)
        .collect();
        let detail = if failed.is_empty() {
            "all conditions hold".to_string()
        } else {
            format!("violated: {}", failed.join(" "))
        };
        run.check(format!("{label}: admissible"), rep.passes, detail);
    }
    run.write("validation.csv", &csv)
}

pub fn cusp_analyze(inputs: &Inputs, tol: &Tolerances, run: &mut Run) -> Result<(), CliError> {
    let r_max = inputs.r_max.unwrap_or(500.0);
    for (i, (label, p)) in profiles(inputs)?.into_iter().enumerate() {
        let cusp = CuspModel::from_profile(p);
        let b = cusp.profile.bounds;
        let policy = WindowPolicy {
            tol: tol.window_tol * b.b / b.a,
            r_floor: cusp.r0(),
            ..WindowPolicy::default()
        };
        let v = orbital_series(&cusp, r_max, 0.0)?;
        let f = cuspidal_series(&cusp, r_max)?;
        run.table(&format!("cusp{i}_orbital.csv"), &v.to_text())?;
        run.table(&format!("cusp{i}_cuspidal.csv"), &f.to_text())?;
        let delta_plus = poincare_abscissa_tol(&cusp, tol.abscissa_tol)?;
        let ev = estimate_exponents(&v, &policy)?;
        let chain = chain_from_series(&v, &f, Some(delta_plus), &policy);
        run.line(format!("[{label}]  R_max = {r_max}"));
        run.line(format!("delta+ (abscissa) = {delta_plus:.6}"));
        run.line(format!(
            "v_P rates: omega- = {:.4}  omega+ = {:.4}  converged = {}",
            ev.omega_minus, ev.omega_plus, ev.converged
        ));
        run.line(format!(
            "cuspidal rates: omega- = {:.4}  omega+ = {:.4}  bound = {:.4}",
            chain.omega_minus_f, chain.omega_plus_f, chain.bound
        ));
        if let Some(d) = inputs.delta {
            for (w, name) in [(Weight::None, "plain"), (Weight::Linear, "linear")] {
                let verdict = series_convergence_at(&cusp, d, w)?;
                let word = match verdict.converges {
                    Some(true) => "converges",
                    Some(false) => "diverges",
                    None => "inconclusive",
                };
                run.line(format!("{name} series at s = {d}: {word}"));
            }
        }
        run.line("");
        let detail = match &chain.error {
            Some(e) => e.clone(),
            None => format!("links {:?}", chain.links),
        };
        run.check(format!("{label}: exponent chain"), chain.holds, detail);
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum FactorDoc {
    Constant(f64),
    PowerDecay(f64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsDoc {
    a: f64,
    b: f64,
    #[serde(default = "two")]
    n: u32,
    #[serde(default)]
    eps: f64,
}

fn two() -> u32 {
    2
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CuspDoc {
    #[serde(default)]
    example: Option<String>,
    #[serde(default)]
    profile: Option<PathBuf>,
    #[serde(default)]
    hyperbolic: bool,
    #[serde(default)]
    dominant: bool,
    #[serde(default)]
    h: f64,
    #[serde(default = "one")]
    c_norm: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeDoc {
    delta: f64,
    factor: FactorDoc,
    #[serde(default)]
    divergent: Option<bool>,
    bounds: BoundsDoc,
    cusps: Vec<CuspDoc>,
}

fn lattice_spec(inputs: &Inputs) -> Result<LatticeSpec, CliError> {
    let path = inputs
        .lattice
        .as_ref()
        .ok_or_else(|| CliError::Config("lattice-classify needs --lattice <file>".into()))?;
    let doc: LatticeDoc = parse_toml(path)?;
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    let params = inputs.catalog_params();
    let mut cusps = Vec::new();
    let mut dominant = Vec::new();
    for (i, c) in doc.cusps.iter().enumerate() {
        let profile = match (&c.example, &c.profile, c.hyperbolic) {
            (Some(name), None, false) => catalog_cusps(example_id(name)?, &params)?.remove(0),
            (None, Some(p), false) => Profile::from_text(&read_input(&base.join(p))?)?,
            (None, None, true) => Profile::pure_exp(1.0, doc.bounds.n)?,
            _ => {
                return Err(CliError::Config(format!(
                    "cusp {i}: set exactly one of `example`, `profile`, `hyperbolic = true`"
                )))
            }
        };
        cusps.push(CuspModel::new(profile, c.h, c.c_norm)?);
        dominant.push(c.dominant);
    }
    let vgamma = match doc.factor {
        FactorDoc::Constant(c) => VGammaModel::constant(doc.delta, c)?,
        FactorDoc::PowerDecay(g) => VGammaModel::power_decay(doc.delta, g)?,
    };
    Ok(LatticeSpec {
        cusps,
        vgamma,
        bounds: CurvatureBounds::new(doc.bounds.a, doc.bounds.b, doc.bounds.n, doc.bounds.eps)?,
        dominant,
        divergent: doc.divergent,
    })
}

fn taxonomy_text(t: &TaxonomyReport, run: &mut Run) {
    let opt = |k: Option<cuspgrowth::convolution::GrowthKind>| k.map_or("unpredicted", |k| k.label());
    run.line(format!("delta_gamma = {}", t.delta_gamma));
    run.line(format!("sparse = {}  exotic = {}  pinch = {}", t.sparse, t.exotic, t.pinch_class.label()));
    run.line(format!(
        "bm_finite = {}  divergent = {} (declared = {})",
        t.bm.finite, t.bm.divergent, t.bm.declared
    ));
    run.line(format!(
        "quarter_pinched = {}  gate consistent = {}",
        t.quarter_pinched, t.gate.consistent
    ));
    run.line(format!(
        "prediction: v_Gamma {}, v_X {}, margulis function {}: {}",
        opt(t.prediction.vgamma),
        opt(t.prediction.vx),
        t.prediction.margulis_function,
        t.prediction.note
    ));
}

pub fn lattice_classify(inputs: &Inputs, tol: &Tolerances, run: &mut Run) -> Result<(), CliError> {
    let spec = lattice_spec(inputs)?;
    let opts = TaxonomyOptions {
        rel_tol: tol.sparse_rel_tol,
        ..TaxonomyOptions::default()
    };
    let t = classify_lattice_with(&spec, &opts)?;
    taxonomy_text(&t, run);
    let mut csv = String::from("cusp,delta_minus,delta_plus,dominant\n");
    for (i, e) in t.exponents.iter().enumerate() {
        let _ = writeln!(csv, "{i},{},{},{}", e.delta_minus, e.delta_plus, spec.dominant[i]);
    }
    run.table("exponents.csv", &csv)?;
    run.check("quarter_pinch_gate", t.gate.consistent, format!("{:?}", t.gate));
    Ok(())
}

pub fn example_run(inputs: &Inputs, run: &mut Run) -> Result<(), CliError> {
    let name = inputs
        .name
        .as_ref()
        .ok_or_else(|| CliError::Config("example-run needs --name <example>".into()))?;
    let id = example_id(name)?;
    let rep = run_example(id, &inputs.catalog_params(), inputs.r_max)?;
    run.report.push_str(&rep.to_text());
    run.write("claims.csv", &format!("example,claim,expected,observed,pass\n{}", rep.to_csv()))?;
    run.table("vx_series.csv", &rep.vx_series.to_text())?;
    for c in &rep.claims {
        run.check(c.name.clone(), c.pass, format!("expected {}, observed {}", c.expected, c.observed));
    }
    Ok(())
}

pub fn oracle_verify(inputs: &Inputs, seed: u64, tol: &Tolerances, run: &mut Run) -> Result<(), CliError> {
    let r_cap = inputs.r_cap.unwrap_or(12.0);
    let delta = inputs.delta.unwrap_or(1.0);
    let samples = inputs.samples.unwrap_or(10_000);
    if !(r_cap > 4.0 && r_cap <= h2::R_CAP) {
        return Err(CliError::Config(format!("--Rcap must lie in (4, {}]", h2::R_CAP)));
    }
    if !(delta > 0.0 && delta <= 4.0) {
        return Err(CliError::Config("--delta must lie in (0, 4]".into()));
    }
    let mut constants = String::from("constant,value\n");

    let rows = h2::coset_counts(r_cap.min(h2::R_CAP - delta / 2.0), delta)?;
    run.table("counts.csv", &h2::counts_csv(&rows))?;

    let cr = h2::completeness_check(r_cap.min(8.0), 6)?;
    run.line(format!(
        "enumeration R = {}: {} elements, {} BFS words in ball",
        cr.r, cr.enumerated, cr.bfs_in_ball
    ));
    run.check(
        "enumeration_complete",
        cr.discrepancies() == 0,
        format!("missed {}, unreduced {}, invalid {}", cr.missed, cr.unreduced, cr.invalid),
    );
    let v2 = h2::enumerate_group(2.0)?.len();
    run.check("v_Gamma(2) = 5", v2 == 5, format!("{v2}"));

    let lem = h2::verify_lemmas(samples, seed)?;
    let _ = writeln!(constants, "eps0,{}", lem.eps0);
    let _ = writeln!(constants, "eps0_d5_10,{}", lem.eps0_mid);
    let _ = writeln!(constants, "eps0_d10_14,{}", lem.eps0_far);
    let _ = writeln!(constants, "horoball_max_defect,{}", lem.horoball_max_defect);
    run.check(
        "triangle_defect",
        lem.triangle_violations == 0,
        format!("{} violations in {}", lem.triangle_violations, lem.triangle_checked),
    );
    run.check(
        "horoball_additivity",
        lem.horoball_violations == 0,
        format!("{} violations in {}", lem.horoball_violations, lem.horoball_checked),
    );
    run.check(
        "approximation_defect_stable",
        lem.eps0_far <= lem.eps0_mid + tol.lemma_growth,
        format!("[5,10) max {:.4}, [10,14] max {:.4}", lem.eps0_mid, lem.eps0_far),
    );

    let p = h2::verify_coset_bounds(r_cap, delta)?;
    let _ = writeln!(constants, "right_i_shift,{}", p.right_i_shift);
    run.check(
        "coset_right_ii_exact",
        p.right_ii_failures == 0,
        format!("{} failures in {}", p.right_ii_failures, p.checked),
    );
    run.check(
        "coset_right_iv_exact",
        p.right_iv_failures == 0,
        format!("{} failures in {}", p.right_iv_failures, p.checked),
    );
    for (i, f) in p.left.iter().enumerate() {
        let _ = writeln!(constants, "left_shift_{},{}", i + 1, f.shift);
        run.check(
            format!("coset_left_{}_shift_stable", i + 1),
            f.holds_beyond_fit,
            format!("{}: fitted {:.2}, full range {:.2}", f.name, f.shift, f.full_range_shift),
        );
    }

    let (est, series) = h2::estimate_delta(r_cap)?;
    run.table("v_gamma.csv", &series.to_text())?;
    let d = est.rate();
    let _ = writeln!(constants, "delta_hat,{d}");
    run.check(
        "critical_exponent",
        (d - 1.0).abs() <= tol.delta_tol,
        format!("{d:.4} (windows converged = {})", est.converged),
    );

    let top = r_cap.min(h2::R_CAP - 2.0);
    let cc = h2::counting_cross_check(2.0, top / 2.0, top)?;
    let _ = writeln!(constants, "counting_band_c,{}", cc.c);
    run.check(
        "counting_band",
        cc.passes,
        format!("C'' = {:.3}, {} of {} outside (R <= {top})", cc.c, cc.outside, cc.checked),
    );
    run.write("constants.csv", &constants)?;
    run.line(format!("R_cap = {r_cap}  gauge = {delta}  seed = {seed}  samples = {samples}"));
    Ok(())
}

