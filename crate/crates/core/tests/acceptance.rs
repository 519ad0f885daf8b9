//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Runs at full scale (n = 10^6), so build with
//! optimizations: `cargo test --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use carnot_core::holo::{random_homogeneous, random_poly, HoloPoly};
use carnot_core::mc::{sample_heat_kernel, SampleBatch};
use carnot_core::verify::{run, run_with_batch, Check, Experiment, ExperimentConfig, Report};
use carnot_core::{Complex64, StratifiedAlgebra};

const H3: &str = "heisenberg:1";
const N: usize = 1_000_000;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn failing(checks: &[&Check]) -> String {
    let bad: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .take(5)
        .map(|c| {
            format!(
                "{} = {:.6} ± {:.1e} vs {:.6}",
                c.name, c.estimate, c.stderr, c.threshold
            )
        })
        .collect();
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", bad.join(", "))
    }
}

fn all_pass(checks: &[&Check]) -> bool {
    !checks.is_empty() && checks.iter().all(|c| c.pass)
}

fn row<'a>(report: &'a Report, name: &str) -> &'a Check {
    report
        .check(name)
        .unwrap_or_else(|| panic!("{} report has no row {name}", report.experiment))
}

fn eigen_action() -> Outcome {
    let start = Instant::now();
    let alg = Arc::new(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
    let mut worst: f64 = 0.0;
    for k in 0..=5u32 {
        for seed in 0..4 {
            let f = random_homogeneous(&alg, k, 100 * k as u64 + seed);
            for a in [0.5, 1.0, 3.0] {
                let bf = f.apply_b(a).unwrap();
                worst = worst.max(bf.max_coeff_diff(&f.scale(Complex64::new(2.0 * k as f64 / a, 0.0))));
                for t in [0.0, 0.1, 0.7, 2.5] {
                    let e = f.semigroup_b(t, a).unwrap();
                    let want = f.scale(Complex64::new((-2.0 * t * k as f64 / a).exp(), 0.0));
                    worst = worst.max(e.max_coeff_diff(&want));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 1e-12 && secs < 1.0,
        format!("max coefficient error {worst:.1e}, {secs:.3} s"),
    )
}

fn janson_point() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(Experiment::Shc, "abelian:1");
    cfg.n = N;
    cfg.q = Some(2.0);
    cfg.p = Some(4.0);
    cfg.c = Some(0.5);
    cfg.f = Some("z1".into());
    let report = run(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let t_j = row(&report, "t_J").estimate;
    let ratio = row(&report, "f0/ratio@t_J");
    let want = 2f64.powf(-0.25);
    let pass = (t_j - 0.25 * 2f64.ln()).abs() < 1e-12
        && (ratio.estimate - want).abs() <= 3.0 * ratio.stderr
        && ratio.stderr <= 0.003
        && secs < 60.0;
    Outcome::new(
        pass,
        format!(
            "t_J = {t_j:.6}, ratio {:.5} ± {:.5} vs 2^(-1/4) = {want:.5}, {secs:.1} s",
            ratio.estimate, ratio.stderr
        ),
    )
}

fn identities(report: &Report) -> Outcome {
    let rows: Vec<&Check> = report.checks.iter().filter(|c| c.name.starts_with("pair")).collect();
    let pairs = rows.iter().filter(|c| c.name.ends_with("/z_symmetry")).count();
    Outcome::new(
        all_pass(&rows) && pairs == 20 && report.walltime_s < 300.0,
        format!(
            "{} rows over {pairs} pairs, {:.1} s{}",
            rows.len(),
            report.walltime_s,
            failing(&rows)
        ),
    )
}

fn orthogonality(report: &Report) -> Outcome {
    let rows: Vec<&Check> = report
        .checks
        .iter()
        .filter(|c| c.name.starts_with("orthogonality"))
        .collect();
    let worst = rows.iter().map(|c| c.estimate / c.threshold).fold(0.0, f64::max);
    Outcome::new(
        all_pass(&rows) && rows.len() == 10,
        format!(
            "{} pairs, largest |<f,g>|/3σ = {worst:.2}{}",
            rows.len(),
            failing(&rows)
        ),
    )
}

fn contractivity(batch: &SampleBatch) -> Outcome {
    let report = run_with_batch(&ExperimentConfig::new(Experiment::Contractivity, H3), batch).unwrap();
    let rows: Vec<&Check> = report.checks.iter().collect();
    Outcome::new(
        all_pass(&rows) && rows.len() == 5 * 4 * 9,
        format!("{} norms, {:.1} s{}", rows.len(), report.walltime_s, failing(&rows)),
    )
}

fn conditional_shc(batch: &SampleBatch) -> Outcome {
    let probe = run_with_batch(&ExperimentConfig::new(Experiment::LsiProbe, H3), batch).unwrap();
    let c_emp = row(&probe, "c_emp");
    let mut detail = format!("c_emp = {:.4} ± {:.4}", c_emp.estimate, c_emp.stderr);
    let mut pass = probe.passed();
    for (q, p) in [(2.0, 4.0), (1.0, 2.0), (0.5, 1.0)] {
        let mut cfg = ExperimentConfig::new(Experiment::Shc, H3);
        cfg.q = Some(q);
        cfg.p = Some(p);
        cfg.c_from_probe = true;
        let report = run_with_batch(&cfg, batch).unwrap();
        let rows: Vec<&Check> = report.checks.iter().filter(|c| c.name.contains("/ratio@")).collect();
        let used = row(&report, "c_emp").estimate;
        let at_tj = rows
            .iter()
            .filter(|c| c.name.ends_with("@t_J"))
            .map(|c| c.estimate)
            .fold(0.0, f64::max);
        pass &= all_pass(&rows) && rows.iter().filter(|c| c.name.ends_with("@t_J")).count() == 5;
        pass &= (used - c_emp.estimate).abs() < 1e-12;
        detail += &format!(
            "; (q,p) = ({q},{p}): t_J = {:.4}, max ratio at t_J {at_tj:.3}{}",
            row(&report, "t_J").estimate,
            failing(&rows)
        );
    }
    Outcome::new(pass, detail)
}

fn kernel(batch: &SampleBatch) -> Outcome {
    let report = run_with_batch(&ExperimentConfig::new(Experiment::KernelCheck, H3), batch).unwrap();
    let named = |prefix: &str| report.checks.iter().filter(|c| c.name.starts_with(prefix)).count();
    let kde_worst = report
        .checks
        .iter()
        .filter(|c| c.name.starts_with("kde"))
        .map(|c| c.estimate)
        .fold(0.0, f64::max);
    let rows: Vec<&Check> = report.checks.iter().collect();
    Outcome::new(
        report.passed() && named("kde") == 5 && named("scaling") == 1 && named("symmetry") == 1,
        format!(
            "normalization error {:.1e}, scaling {:.1e}, symmetry {:.1e}, worst KDE error {:.1}%, {:.1} s{}",
            row(&report, "normalization").estimate,
            row(&report, "scaling").estimate,
            row(&report, "symmetry").estimate,
            100.0 * kde_worst,
            report.walltime_s,
            failing(&rows)
        ),
    )
}

fn nonholomorphy() -> Outcome {
    let report = run(&ExperimentConfig::new(Experiment::Nonholo, H3)).unwrap();
    let residual = row(&report, "witness/residual");
    let baseline = row(&report, "witness/holomorphic_baseline").estimate;
    let rows: Vec<&Check> = report.checks.iter().collect();
    Outcome::new(
        report.passed() && row(&report, "zf_at_center").estimate == 2.0,
        format!(
            "Zf = {}, |Af| = {:.1e}, residual {:.3} vs holomorphic baseline {baseline:.1e}{}",
            row(&report, "zf_at_center").estimate,
            row(&report, "af_at_center").estimate,
            residual.estimate,
            failing(&rows)
        ),
    )
}

/// Fejér kernel `(1/n) (sin(nθ/2) / sin(θ/2))²`, computed without the
/// `1 - k/n` series.
fn fejer_kernel(n: u32, theta: f64) -> f64 {
    let d = (theta / 2.0).sin();
    if d.abs() < 1e-12 {
        return n as f64;
    }
    let r = (n as f64 * theta / 2.0).sin() / d;
    r * r / n as f64
}

fn fejer() -> Outcome {
    let alg = Arc::new(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
    let nodes = 64;
    let thetas: Vec<f64> = (0..nodes).map(|m| 2.0 * PI * m as f64 / nodes as f64).collect();
    let mut series_err: f64 = 0.0;
    let mut weight_err: f64 = 0.0;
    let mut quad_err: f64 = 0.0;
    for seed in 0..5 {
        let f = random_poly(&alg, 8, 900 + seed);
        let parts = f.homogeneous_decompose();
        let rotated: Vec<HoloPoly> = thetas
            .iter()
            .map(|&t| f.dilate_pullback(Complex64::from_polar(1.0, t)).unwrap())
            .collect();
        for n in 1..=8u32 {
            let projected = f.fejer_project(n).unwrap();
            let mut series = HoloPoly::zero(&alg);
            for part in &parts {
                if part.degree < n {
                    series = &series
                        + &part
                            .poly
                            .scale(Complex64::new(1.0 - part.degree as f64 / n as f64, 0.0));
                }
            }
            series_err = series_err.max(projected.max_coeff_diff(&series));

            let mut averaged = HoloPoly::zero(&alg);
            for (t, g) in thetas.iter().zip(&rotated) {
                averaged = &averaged + &g.scale(Complex64::new(fejer_kernel(n, -*t) / nodes as f64, 0.0));
            }
            quad_err = quad_err.max(projected.max_coeff_diff(&averaged));

            for k in 0..12u32 {
                let w: Complex64 = thetas
                    .iter()
                    .map(|&t| Complex64::from_polar(fejer_kernel(n, t) / nodes as f64, k as f64 * t))
                    .sum();
                let want = if k < n { 1.0 - k as f64 / n as f64 } else { 0.0 };
                weight_err = weight_err.max((w - want).norm());
            }
        }
    }
    Outcome::new(
        series_err <= 1e-12 && weight_err <= 1e-10 && quad_err <= 1e-10,
        format!(
            "series error {series_err:.1e}, quadrature weights {weight_err:.1e}, quadrature projection {quad_err:.1e}"
        ),
    )
}

fn structural() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in 1..=3 {
        let mut cfg = ExperimentConfig::new(Experiment::Validate, &format!("heisenberg:{n}"));
        cfg.inner_product = Some("euclidean".into());
        cfg.require_h_type = true;
        let report = run(&cfg).unwrap();
        pass &= report.passed() && row(&report, "h_type").pass;
        notes.push(format!("heisenberg:{n} {:?}", report.verdict).to_lowercase());
    }
    let filiform = run(&ExperimentConfig::new(Experiment::Validate, "filiform:3")).unwrap();
    let assoc = row(&filiform, "bch_associativity");
    pass &= filiform.passed() && row(&filiform, "step").estimate == 3.0 && assoc.estimate < 1e-12;
    notes.push(format!("step-3 associativity {:.1e}", assoc.estimate));

    let mut identical = true;
    for experiment in [Experiment::Identities, Experiment::Contractivity, Experiment::LsiProbe] {
        let mut cfg = ExperimentConfig::new(experiment, H3);
        cfg.n = 20_000;
        cfg.pairs = 3;
        cfg.held_out = 2;
        cfg.family_size = 4;
        let mut reference = None;
        for workers in [1, 4, 16] {
            cfg.workers = Some(workers);
            let json = run(&cfg).unwrap().canonical_json().unwrap();
            match &reference {
                None => reference = Some(json),
                Some(r) => identical &= *r == json,
            }
        }
    }
    pass &= identical;
    notes.push(format!("reports at 1/4/16 workers identical: {identical}"));
    Outcome::new(pass, notes.join(", "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let alg = Arc::new(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
    let cfg = ExperimentConfig::new(Experiment::Sample, H3);
    let batch = sample_heat_kernel(&alg, &cfg.sampler(cfg.a)).unwrap();
    println!(
        "shared batch: {H3}, a = 1, n = {}, {} steps, {:.1} s",
        batch.len(),
        cfg.steps,
        start.elapsed().as_secs_f64()
    );
    let ident = run_with_batch(&ExperimentConfig::new(Experiment::Identities, H3), &batch).unwrap();

    let criteria: Vec<Criterion> = vec![
        ("eigen-action exactness", Box::new(eigen_action)),
        ("abelian Janson point", Box::new(janson_point)),
        ("identity suite", Box::new(|| identities(&ident))),
        ("orthogonality", Box::new(|| orthogonality(&ident))),
        ("contractivity sweep", Box::new(|| contractivity(&batch))),
        ("conditional SHC", Box::new(|| conditional_shc(&batch))),
        ("kernel validation", Box::new(|| kernel(&batch))),
        ("non-holomorphy witness", Box::new(nonholomorphy)),
        ("Fejér exactness", Box::new(fejer)),
        ("structural suite", Box::new(structural)),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        if !outcome.pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail
        );
    }
    println!(
        "{} of {} criteria passed in {:.0} s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
