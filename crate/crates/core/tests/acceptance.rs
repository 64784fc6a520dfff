//! One pass/fail line per acceptance criterion.

mod common;

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use homoclinic::functional::{energy_defect, grad_phi, phi, phi_split, FunctionalContext};
use homoclinic::lattice::{BlockVector, PeriodicCoefficients, Window};
use homoclinic::nonlinearity::{
    check_hypotheses, family_log_saturating, family_quadratic, family_radial_rational, SamplingPlan,
};
use homoclinic::operators::{apply_a, assemble};
use homoclinic::solver::{multi_start, SolveOptions};
use homoclinic::spectral::{band_structure, eigendecompose, floquet_union, inclusion_violation};
use homoclinic::verify::{residual_dhs, verify_orbit, VerifyTolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let elapsed = t.elapsed();
    o.detail = format!("{}; {:.2}s", o.detail, elapsed.as_secs_f64());
    if let Some(l) = limit {
        if elapsed >= l {
            o.passed = false;
            o.detail.push_str(&format!(" exceeds {}s", l.as_secs()));
        }
    }
    o
}

fn operator_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_a: f64 = f64::NEG_INFINITY;
    let mut worst_full: f64 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(1..=3);
        let t = rng.random_range(1..=3);
        let m = rng.random_range(0..=64);
        let coeffs = common::random_coefficients(&mut rng, n, t);
        let window = Window::zero_pad(m);
        let op = assemble(window, &coeffs).unwrap();
        let x = common::random_vector(&mut rng, window, n);
        let nx = x.l2_norm();
        worst_a = worst_a.max(apply_a(&x).l2_norm() - 2.0 * nx);
        worst_full =
            worst_full.max(op.apply(&x).unwrap().l2_norm() - (2.0 + coeffs.big_lambda0()) * nx);
    }
    outcome(
        worst_a <= 1e-12 && worst_full <= 1e-12,
        format!("max |Ax|-2|x| = {worst_a:.3e}, max |(A+S)x|-(2+L0)|x| = {worst_full:.3e}"),
    )
}

fn spectral_inclusion() -> Outcome {
    let mut worst: f64 = 0.0;
    for (_, cfg) in common::bundled() {
        let coeffs = cfg.coefficients().unwrap();
        let window = Window::periodic_cells(64 / coeffs.period(), coeffs.period()).unwrap();
        let dec = eigendecompose(&assemble(window, &coeffs).unwrap()).unwrap();
        worst = worst.max(inclusion_violation(
            dec.eigenvalues(),
            coeffs.lambda0(),
            coeffs.big_lambda0(),
        ));
    }
    let bands = band_structure(&PeriodicCoefficients::model(), 256).unwrap();
    let (mut lo_min, mut lo_max, mut up_min, mut up_max) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for b in &bands {
        lo_min = lo_min.min(b.eigenvalues[0]);
        lo_max = lo_max.max(b.eigenvalues[0]);
        up_min = up_min.min(b.eigenvalues[1]);
        up_max = up_max.max(b.eigenvalues[1]);
    }
    let extrema_err = [(lo_min, -3.0), (lo_max, -1.0), (up_min, 1.0), (up_max, 3.0)]
        .iter()
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-9 && extrema_err <= 1e-9,
        format!("inclusion violation {worst:.3e}, model extrema error {extrema_err:.3e}"),
    )
}

fn floquet_cross_validation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut sizes_ok = true;
    for (_, cfg) in common::bundled() {
        let coeffs = cfg.coefficients().unwrap();
        let op = assemble(Window::periodic_cells(8, coeffs.period()).unwrap(), &coeffs).unwrap();
        let dec = eigendecompose(&op).unwrap();
        let union = floquet_union(&coeffs, 8);
        sizes_ok &= union.len() == dec.eigenvalues().len();
        for (a, b) in dec.eigenvalues().iter().zip(&union) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        sizes_ok && worst < 1e-9,
        format!("max mismatch {worst:.3e}"),
    )
}

fn functional_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_fd: f64 = 0.0;
    let mut worst_split: f64 = 0.0;
    for (_, cfg) in common::bundled() {
        let ctx = cfg.context_on(Window::zero_pad(16)).unwrap();
        let n = ctx.block_dim();
        let x = common::random_vector(&mut rng, ctx.window(), n).scaled(0.7);
        let g = grad_phi(&ctx, &x).unwrap();
        let h = 1e-6;
        for _ in 0..20 {
            let y = common::random_vector(&mut rng, ctx.window(), n);
            let mut p = x.clone();
            p.axpy(h, &y).unwrap();
            let mut m = x.clone();
            m.axpy(-h, &y).unwrap();
            let fd = (phi(&ctx, &p).unwrap() - phi(&ctx, &m).unwrap()) / (2.0 * h);
            let exact = g.l2_inner(&y).unwrap();
            worst_fd = worst_fd.max((fd - exact).abs() / exact.abs().max(1e-12));
        }
        let coeffs = cfg.coefficients().unwrap();
        let periodic = cfg
            .context_on(Window::periodic_cells(8, coeffs.period()).unwrap())
            .unwrap();
        for _ in 0..20 {
            let x = common::random_vector(&mut rng, periodic.window(), n);
            let d = phi(&periodic, &x).unwrap();
            let s = phi_split(&periodic, &x).unwrap().phi();
            worst_split = worst_split.max((d - s).abs());
        }
    }
    let coeffs = PeriodicCoefficients::model();
    let ctxs = [
        common::context(
            &coeffs,
            Window::zero_pad(16),
            Arc::new(family_radial_rational(4.0).unwrap()),
        ),
        common::context(
            &coeffs,
            Window::zero_pad(16),
            Arc::new(family_log_saturating(4.0).unwrap()),
        ),
    ];
    let mut worst_defect: f64 = 0.0;
    for i in 0..1000 {
        let ctx = &ctxs[i % 2];
        let scale = 10f64.powf(rng.random_range(-2.0..1.0));
        let x = common::random_vector(&mut rng, ctx.window(), 1).scaled(scale);
        worst_defect = worst_defect.max(energy_defect(ctx, &x).unwrap().abs());
    }
    outcome(
        worst_fd < 1e-6 && worst_defect < 1e-10 && worst_split <= 1e-9,
        format!(
            "gradient rel. error {worst_fd:.3e}, energy defect {worst_defect:.3e}, split mismatch {worst_split:.3e}"
        ),
    )
}

fn hypothesis_checker() -> Outcome {
    let model = PeriodicCoefficients::model();
    let plan = SamplingPlan::with_seed(0);
    let good = check_hypotheses(&family_radial_rational(4.0).unwrap(), &model, &plan);
    let weak = check_hypotheses(&family_radial_rational(2.5).unwrap(), &model, &plan);
    let quad = check_hypotheses(&family_quadratic(4.0).unwrap(), &model, &plan);
    let again = check_hypotheses(&family_radial_rational(4.0).unwrap(), &model, &plan);
    let delta0 = good.delta0_estimate.unwrap_or(0.0);
    let gap_only = weak.failed() == ["R3"]
        && weak.entry("R3").unwrap().findings.iter().any(|f| {
            f.check.contains("2 + Lambda0") && f.status == homoclinic::nonlinearity::Status::Fail
        });
    let deterministic =
        serde_json::to_string(&good).unwrap() == serde_json::to_string(&again).unwrap();
    outcome(
        good.is_clean() && delta0 > 0.0 && gap_only && quad.failed() == ["R2"] && deterministic,
        format!(
            "nu=4 clean={} delta0={delta0:.4}; nu=2.5 fails {:?}; quadratic fails {:?}; deterministic={deterministic}",
            good.is_clean(),
            weak.failed(),
            quad.failed()
        ),
    )
}

fn end_to_end() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let ctx = common::model_context(64, 4.0);
    let opts = SolveOptions {
        starts: SolveOptions::default_starts(),
        ..SolveOptions::default()
    };
    let orbits = pool.install(|| multi_start(&ctx, &opts)).unwrap();
    let good: Vec<_> = orbits
        .iter()
        .filter(|r| {
            let v = r.verification.as_ref().unwrap();
            r.grad_inf_norm < 1e-10
                && v.dhs_residual_inf < 1e-9
                && v.linf_norm > 1e-3
                && r.phi_value > 0.0
                && v.energy_identity_defect < 1e-8
                && v.decay.rate < 1.0
                && v.decay.r_squared > 0.99
                && v.window_stability_inf().is_some_and(|d| d < 1e-8)
        })
        .collect();
    let detail = match good.first() {
        Some(r) => {
            let v = r.verification.as_ref().unwrap();
            format!(
                "{} orbits; lowest phi={:.6} linf={:.4} grad={:.1e} dhs={:.1e} energy={:.1e} rate={:.4} r2={:.6} drift={:.1e}",
                good.len(),
                r.phi_value,
                v.linf_norm,
                r.grad_inf_norm,
                v.dhs_residual_inf,
                v.energy_identity_defect,
                v.decay.rate,
                v.decay.r_squared,
                v.window_stability_inf().unwrap()
            )
        }
        None => format!("no qualifying orbit among {} results", orbits.len()),
    };
    outcome(!good.is_empty() && good.len() == orbits.len(), detail)
}

fn manufactured_solution() -> Outcome {
    let coeffs = PeriodicCoefficients::model();
    let window = Window::zero_pad(20);
    let nl = Arc::new(common::manufactured(&coeffs));
    let ctx = FunctionalContext::new(assemble(window, &coeffs).unwrap(), nl).unwrap();
    let x = BlockVector::from_fn(window, 1, |n, b| b.copy_from_slice(&common::target(n)));
    let res = residual_dhs(&coeffs, ctx.nonlinearity(), &x);
    let report = verify_orbit(
        &ctx,
        &x,
        &VerifyTolerances::default(),
        Some(&SolveOptions::default()),
    )
    .unwrap();
    outcome(
        res.inf_norm < 1e-12 && report.passed,
        format!(
            "residual {:.3e}, report passed={}",
            res.inf_norm, report.passed
        ),
    )
}

fn determinism_and_closure() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_homoclinic");
    let model = common::example("model.json");
    let dirs = [
        tempfile::TempDir::new().unwrap(),
        tempfile::TempDir::new().unwrap(),
    ];
    let runs: Vec<_> = dirs
        .iter()
        .map(|d| {
            Command::new(bin)
                .args(["solve", "--config"])
                .arg(&model)
                .arg("--out")
                .arg(d.path())
                .output()
                .unwrap()
        })
        .collect();
    if runs.iter().any(|r| r.status.code() != Some(0)) {
        return outcome(false, "solve did not exit 0");
    }
    let identical = runs[0].stdout == runs[1].stdout;
    let v: Value = serde_json::from_slice(&runs[0].stdout).unwrap();
    let files: Vec<String> = v["orbits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["file"].as_str().unwrap().to_string())
        .collect();
    let mut verified = 0;
    for f in &files {
        let same = std::fs::read(dirs[0].path().join(f)).unwrap()
            == std::fs::read(dirs[1].path().join(f)).unwrap();
        let out = Command::new(bin)
            .args(["verify", "--config"])
            .arg(&model)
            .arg(dirs[0].path().join(f))
            .output()
            .unwrap();
        if same && out.status.code() == Some(0) {
            verified += 1;
        }
    }
    outcome(
        identical && !files.is_empty() && verified == files.len(),
        format!(
            "byte-identical={identical}, {verified}/{} orbits verify",
            files.len()
        ),
    )
}

/// Name, runtime limit in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("operator bounds", Some(10), operator_bounds),
        ("spectral inclusion", Some(30), spectral_inclusion),
        ("Floquet cross-validation", None, floquet_cross_validation),
        ("functional correctness", None, functional_correctness),
        ("hypothesis checker", None, hypothesis_checker),
        ("end-to-end homoclinic", Some(60), end_to_end),
        ("manufactured solution", None, manufactured_solution),
        (
            "determinism and pipeline closure",
            None,
            determinism_and_closure,
        ),
    ];
    let mut failures = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let o = timed(limit.map(Duration::from_secs), f);
        if !o.passed {
            failures += 1;
        }
        println!(
            "criterion {}: {} [{name}] {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
