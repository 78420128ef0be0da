use std::process::ExitCode;
use std::time::{Duration, Instant};

use cuspgrowth::asymptotics::*;
use cuspgrowth::convolution::{sandwich_check, GrowthKind, StepFn};
use cuspgrowth::h2;
use cuspgrowth::profiles::{catalog_cusps, CatalogParams, ExampleId, Profile};
use cuspgrowth::taxonomy::run_example;
use cuspgrowth::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String)>;

fn cuspidal_closed_form() -> Outcome {
    let cusp = CuspModel::hyperbolic(2)?;
    let mut worst: f64 = 0.0;
    for r in [1.0, 5.0, 10.0, 50.0, 100.0, 200.0] {
        let exact = (2.0 * (f64::exp(r / 2.0) - 1.0)).ln();
        worst = worst.max((log_cuspidal(&cusp, r)? - exact).abs());
    }
    Ok((worst <= 1e-6, format!("max |err| = {worst:.2e}")))
}

fn abscissa_pure_exp() -> Outcome {
    let mut worst: f64 = 0.0;
    for c in [1.0, 2.0, 3.0] {
        for n in [2u32, 3] {
            let cusp = CuspModel::from_profile(Profile::pure_exp(c, n)?);
            let want = c * (n - 1) as f64 / 2.0;
            worst = worst.max((poincare_abscissa(&cusp)? - want).abs());
        }
    }
    Ok((worst <= 1e-6, format!("max |err| = {worst:.2e}")))
}

fn finiteness_tail() -> Outcome {
    // A(t) = t³e^{−3t}: at s = 1.5 the weighted integrand is exactly 8/t²
    let cusp = CuspModel::from_profile(Profile::poly_exp(3.0, 3.0, 2.0, 2)?);
    let conv = series_convergence_at(&cusp, 1.5, Weight::Linear)?.converges == Some(true);
    let mut ok = conv;
    let mut detail = format!("converges = {conv}");
    for t in [50.0, 100.0] {
        let tail = log_weighted_integral(&cusp, 1.5, Weight::Linear, t, 1e12)?.exp();
        let seg = log_weighted_integral(&cusp, 1.5, Weight::Linear, t, 2.0 * t)?.exp();
        let (e_tail, e_seg) = (tail * t / 8.0 - 1.0, seg * t / 4.0 - 1.0);
        ok &= e_tail.abs() <= 0.1 && e_seg.abs() <= 0.1;
        detail += &format!("; T={t}: tail/(8/T)-1 = {e_tail:+.1e}, [T,2T]/(4/T)-1 = {e_seg:+.1e}");
    }
    let verdicts = catalog_cusps(ExampleId::CriticalInfinite, &CatalogParams::default())?
        .into_iter()
        .map(|p| series_convergence_at(&CuspModel::from_profile(p), 1.5, Weight::Linear).map(|v| v.converges))
        .collect::<Result<Vec<_>>>()?;
    let diverges = verdicts.contains(&Some(false)) && !verdicts.contains(&Some(true));
    ok &= diverges;
    detail += &format!("; critical-infinite-5.4b verdicts {verdicts:?}");
    Ok((ok, detail))
}

fn random_steps(rng: &mut ChaCha8Rng) -> Result<StepFn> {
    let len = rng.random_range(1..40);
    let mut v = rng.random_range(0.01..2.0);
    let values = (0..len)
        .map(|_| {
            v += rng.random_range(0.0..3.0) * rng.random_range(0.0..1.0f64).powi(2);
            v
        })
        .collect();
    StepFn::new(rng.random_range(0.05..4.0), values)
}

fn sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut checked, mut failures) = (0, 0);
    for _ in 0..100 {
        let (f, g) = (random_steps(&mut rng)?, random_steps(&mut rng)?);
        for delta in [0.5, 1.0, 2.0] {
            let r = rng.random_range(5.0..=50.0);
            checked += 1;
            failures += !sandwich_check(&f, &g, delta, r)?.holds as usize;
        }
    }
    Ok((failures == 0, format!("{checked} checks, {failures} failures")))
}

fn group_counts() -> Outcome {
    let c = h2::completeness_check(8.0, 6)?;
    let v2 = h2::enumerate_group(2.0)?.len();
    let (est, _) = h2::estimate_delta(12.0)?;
    let d = est.rate();
    let ok = c.discrepancies() == 0 && v2 == 5 && (0.85..=1.15).contains(&d) && est.converged;
    Ok((
        ok,
        format!(
            "discrepancies = {}, v(2) = {v2}, delta = {d:.4} (converged = {})",
            c.discrepancies(),
            est.converged
        ),
    ))
}

fn approximation_lemma() -> Outcome {
    let rep = h2::verify_lemmas(10_000, 11)?;
    let ok = rep.triangle_violations == 0 && rep.stable && rep.eps0.is_finite();
    Ok((
        ok,
        format!(
            "eps0 = {:.4}, [5,10) max {:.4}, [10,14] max {:.4}, triangle violations {}",
            rep.eps0, rep.eps0_mid, rep.eps0_far, rep.triangle_violations
        ),
    ))
}

fn coset_inequalities() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for delta in [1.0, 2.0] {
        let rep = h2::verify_coset_bounds(12.0, delta)?;
        ok &= rep.passes;
        let shifts: Vec<String> = rep.left.iter().map(|f| format!("{:.2}", f.shift)).collect();
        detail.push(format!(
            "D={delta}: right failures {}, left shifts [{}]",
            rep.right_ii_failures + rep.right_iv_failures,
            shifts.join(", ")
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn counting_band() -> Outcome {
    let rep = h2::counting_cross_check(2.0, 6.0, 12.0)?;
    Ok((
        rep.passes,
        format!("C'' = {:.3} fitted, {} of {} outside on (6,12]", rep.c, rep.outside, rep.checked),
    ))
}

fn exponent_chain() -> Outcome {
    let params = CatalogParams::default();
    let mut ok = true;
    let mut bad = Vec::new();
    for id in ExampleId::ALL {
        for p in catalog_cusps(id, &params)? {
            let rep = exponent_chain_check(&CuspModel::from_profile(p), 500.0);
            if !rep.holds {
                ok = false;
                bad.push(id.name());
            }
        }
    }
    Ok((ok, if bad.is_empty() { "all profiles".into() } else { format!("fails: {bad:?}") }))
}

fn dispatch() -> Outcome {
    use GrowthKind::*;
    let params = CatalogParams::default();
    let want = [
        (ExampleId::ExoticDivergent, (PurelyExponential, PurelyExponential, true)),
        (ExampleId::ExoticConvergent, (LowerExponential, LowerExponential, false)),
        (ExampleId::CriticalFinite, (PurelyExponential, UpperExponential, true)),
        (ExampleId::CriticalInfinite, (LowerExponential, UpperExponential, false)),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (id, triple) in want {
        let rep = run_example(id, &params, None)?;
        let got = rep.triple();
        ok &= got == triple && rep.passes;
        detail.push(format!("{}: ({}, {}, {})", id.name(), got.0.label(), got.1.label(), got.2));
    }
    let sparse = run_example(ExampleId::Sparse, &params, None)?;
    let gap = sparse.omega_x.1 - sparse.vgamma.delta;
    ok &= gap >= 0.05 && sparse.passes;
    detail.push(format!("sparse-5.2: omega+(X) - delta = {gap:.4}"));
    Ok((ok, detail.join("; ")))
}

fn main() -> ExitCode {
    type Crit = (&'static str, u64, fn() -> Outcome);
    let criteria: [Crit; 10] = [
        ("cuspidal closed form, constant curvature", 1, cuspidal_closed_form),
        ("Poincare abscissa of pure exponential profiles", 5, abscissa_pure_exp),
        ("finiteness integral tail and critical divergence", 5, finiteness_tail),
        ("gauge convolution sandwich", 10, sandwich),
        ("Gamma(2) enumeration and critical exponent", 300, group_counts),
        ("approximation lemma stability", 60, approximation_lemma),
        ("coset counting inequalities", 300, coset_inequalities),
        ("counting band with frozen constants", 300, counting_band),
        ("exponent chain on catalog profiles", 30, exponent_chain),
        ("example dispatch", 120, dispatch),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = run();
        let took = t.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let (pass, detail) = match res {
            Ok((p, d)) => (p && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!(
            "criterion {:>2} {}: {name} ({:.2}s of {budget}s) {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
