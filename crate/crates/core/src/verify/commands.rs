use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::report::Check;
use crate::error::{Error, Result};
use crate::holo::{monomials, random_homogeneous, random_poly, HoloPoly, HorizontalGradient, PolyBank};
use crate::kernel::{dbar_residual, radial_kde, HeatKernel, KernelModel, KernelQuadratureConfig};
use crate::lie::{GroupElement, HorizontalFrame, RealInnerProduct, StratifiedAlgebra};
use crate::mc::{column, inner_product, lp_from_powers, sample_rows, McEstimate, SampleBatch};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// independent seed streams
const IDENTITY_STREAM: u64 = 1;
const ORTHOGONALITY_STREAM: u64 = 2;
const PROBE_STREAM: u64 = 3;
const HELD_OUT_STREAM: u64 = 4;
const GEOMETRY_STREAM: u64 = 5;

const ORTHOGONALITY_MAX_DEGREE: u32 = 4;
const DEFAULT_PS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
const DERIVATIVE_STEP: f64 = 0.01;
const DERIVATIVE_REL_TOL: f64 = 0.01;
const PERTURBATION: f64 = 0.1;

fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `|mean|` against `sigmas · stderr`.
fn vanishes(name: String, m: &McEstimate, sigmas: f64) -> Check {
    Check::at_most(name, m.mean.norm(), m.stderr, sigmas * m.stderr)
}

pub(super) fn validate_checks(cfg: &ExperimentConfig, alg: &Arc<StratifiedAlgebra>) -> Result<Vec<Check>> {
    let mut checks = vec![
        Check::info("dim", alg.dim() as f64, 0.0),
        Check::info("step", alg.step() as f64, 0.0),
        Check::info("homogeneous_dim", alg.homogeneous_dim() as f64, 0.0),
    ];
    let violations = alg.validate();
    checks.push(Check::at_most("law_violations", violations.len() as f64, 0.0, 0.0));

    let mut r = rng(cfg.seed, GEOMETRY_STREAM, 0);
    let d = alg.dim();
    let mut point = || {
        GroupElement::new(
            (0..d)
                .map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
                .collect(),
        )
    };
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (x, y, z) = (point(), point(), point());
        let left = alg.bch_product(&alg.bch_product(&x, &y)?, &z)?;
        let right = alg.bch_product(&x, &alg.bch_product(&y, &z)?)?;
        worst = worst.max(left.max_distance(&right));
    }
    checks.push(Check::at_most("bch_associativity", worst, 0.0, 1e-12));

    let ip = match cfg.inner_product.as_deref() {
        Some(spec) => Some(parse_inner_product(spec, d)?),
        None if cfg.require_h_type => Some(RealInnerProduct::euclidean(d)),
        None => None,
    };
    if let Some(ip) = ip {
        let outcome = alg.h_type_check(&ip)?;
        let flag = if outcome.pass { 1.0 } else { 0.0 };
        if cfg.require_h_type {
            checks.push(Check::at_least("h_type", flag, 0.0, 1.0));
        } else {
            checks.push(Check::info("h_type", flag, 0.0));
        }
        checks.push(Check::info("h_type/isometry_defect", outcome.max_isometry_defect, 0.0));
    }
    Ok(checks)
}

/// `euclidean`, or a JSON file holding the Gram matrix as a list of rows.
fn parse_inner_product(spec: &str, dim: usize) -> Result<RealInnerProduct> {
    if spec == "euclidean" {
        return Ok(RealInnerProduct::euclidean(dim));
    }
    let rows: Vec<Vec<f64>> = serde_json::from_str(&std::fs::read_to_string(spec)?)?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("Gram matrix in {spec} is not square")));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    RealInnerProduct::new(DMatrix::from_row_slice(n, n, &flat))
}

pub(super) fn sample_checks(cfg: &ExperimentConfig, batch: &SampleBatch) -> Result<Vec<Check>> {
    let alg = batch.algebra();
    let s = batch.s();
    let first = alg.layer_range(1);
    let d1 = first.len();
    let last = alg.layer_range(alg.step());
    let rows = sample_rows(batch, 2, |z, row: &mut [f64]| {
        row[0] = z[first.clone()].iter().map(|v| v.norm_sqr()).sum();
        row[1] = z[last.clone()].iter().map(|v| v.norm_sqr()).sum();
    })?;
    let horizontal = McEstimate::from_real(&column(&rows, 2, 0));
    let mut checks = vec![
        Check::info("n", batch.len() as f64, 0.0),
        Check::at_most(
            "first_layer_second_moment",
            horizontal.value(),
            horizontal.stderr,
            d1 as f64 * s + cfg.sigmas * horizontal.stderr,
        ),
        Check::at_least(
            "first_layer_second_moment/lower",
            horizontal.value(),
            horizontal.stderr,
            d1 as f64 * s - cfg.sigmas * horizontal.stderr,
        ),
    ];
    if alg.step() > 1 {
        let top = McEstimate::from_real(&column(&rows, 2, 1));
        checks.push(Check::info("top_layer_second_moment", top.value(), top.stderr));
    }
    Ok(checks)
}

/// `E[z^α conj(z^β)] = δ_{αβ} α! s^{|α|}` under the Gaussian `ρ_s` of an abelian group.
fn gaussian_inner_product(f: &HoloPoly, g: &HoloPoly, s: f64) -> Complex64 {
    let mut acc = ZERO;
    for (e, cf) in f.terms() {
        let cg = g.coeff(e);
        if cg == ZERO {
            continue;
        }
        let mut w = 1.0;
        for &k in e {
            for j in 1..=k {
                w *= j as f64 * s;
            }
        }
        acc += cf * cg.conj() * w;
    }
    acc
}

pub(super) fn identity_checks(cfg: &ExperimentConfig, batch: &SampleBatch) -> Result<Vec<Check>> {
    let alg = batch.algebra();
    let s = batch.s();
    let a = cfg.a;
    let k = cfg.sigmas;
    let up = c((1.0 + DERIVATIVE_STEP).sqrt());
    let down = c((1.0 - DERIVATIVE_STEP).sqrt());
    let mut checks = Vec::new();
    for pair in 0..cfg.pairs as u64 {
        let f = random_poly(alg, cfg.degree, derive_seed(cfg.seed, IDENTITY_STREAM, 2 * pair));
        let g = random_poly(alg, cfg.degree, derive_seed(cfg.seed, IDENTITY_STREAM, 2 * pair + 1));
        let (zf, zg) = (f.euler_z(), g.euler_z());
        let (f_up, f_down) = (f.dilate_pullback(up)?, f.dilate_pullback(down)?);
        let (g_up, g_down) = (g.dilate_pullback(up)?, g.dilate_pullback(down)?);
        let (grad_f, grad_g) = (HorizontalGradient::new(&f), HorizontalGradient::new(&g));
        let h = grad_f.parts().len();
        let polys: Vec<&HoloPoly> = [&f, &g, &zf, &zg, &f_up, &f_down, &g_up, &g_down]
            .into_iter()
            .chain(grad_f.parts())
            .chain(grad_g.parts())
            .collect();
        let bank = PolyBank::new(&polys);
        const COLS: usize = 7;
        let rows = sample_rows(batch, COLS, |z, row: &mut [Complex64]| {
            let v = bank.eval(z);
            let zf_g = v[2] * v[1].conj();
            let f_zg = v[0] * v[3].conj();
            let mut quarter_laplacian = ZERO;
            for j in 0..h {
                quarter_laplacian += v[8 + j] * v[8 + h + j].conj();
            }
            let pairing = quarter_laplacian * HorizontalFrame::NORMALIZATION;
            let derivative = (v[4] * v[6].conj() - v[5] * v[7].conj()) / (2.0 * DERIVATIVE_STEP * s);
            row[0] = zf_g - f_zg;
            row[1] = pairing - zf_g * (2.0 / a);
            row[2] = I * (zf_g - f_zg);
            row[3] = derivative - quarter_laplacian;
            row[4] = derivative - (zf_g + f_zg) / (2.0 * s);
            row[5] = quarter_laplacian;
            row[6] = v[0] * v[1].conj();
        })?;
        let est = |j: usize| McEstimate::from_values(&column(&rows, COLS, j));
        let tag = format!("pair{pair}");
        checks.push(vanishes(format!("{tag}/z_symmetry"), &est(0), k));
        checks.push(vanishes(format!("{tag}/zb_pairing"), &est(1), k));
        checks.push(vanishes(format!("{tag}/y_integral"), &est(2), k));
        let scale = est(5).mean.norm();
        for (j, name) in [(3, "ds_laplacian"), (4, "ds_x")] {
            let m = est(j);
            checks.push(Check::at_most(
                format!("{tag}/{name}"),
                m.mean.norm(),
                m.stderr,
                (k * m.stderr).max(DERIVATIVE_REL_TOL * scale),
            ));
        }
        if alg.is_abelian() {
            let m = est(6);
            let exact = gaussian_inner_product(&f, &g, s);
            checks.push(Check::at_most(
                format!("{tag}/gaussian_oracle"),
                (m.mean - exact).norm(),
                m.stderr,
                k * m.stderr,
            ));
        }
    }
    for i in 0..cfg.orthogonality_pairs as u64 {
        let mut r = rng(cfg.seed, ORTHOGONALITY_STREAM, i);
        let j = r.random_range(0..=ORTHOGONALITY_MAX_DEGREE);
        let l = (j + r.random_range(1..=ORTHOGONALITY_MAX_DEGREE)) % (ORTHOGONALITY_MAX_DEGREE + 1);
        let f = random_homogeneous(alg, j, r.random());
        let g = random_homogeneous(alg, l, r.random());
        let m = inner_product(&f, &g, batch)?;
        checks.push(vanishes(format!("orthogonality{i}/degrees_{j}_{l}"), &m, k));
    }
    Ok(checks)
}

/// `--f` when given, else `held_out` seeded random polynomials.
fn test_polys(cfg: &ExperimentConfig, alg: &Arc<StratifiedAlgebra>) -> Result<Vec<HoloPoly>> {
    match &cfg.f {
        Some(text) => Ok(vec![HoloPoly::parse(alg, text)?]),
        None => Ok((0..cfg.held_out as u64)
            .map(|i| random_poly(alg, cfg.degree, derive_seed(cfg.seed, HELD_OUT_STREAM, i)))
            .collect()),
    }
}

pub(super) fn contractivity_checks(cfg: &ExperimentConfig, batch: &SampleBatch) -> Result<Vec<Check>> {
    let alg = batch.algebra();
    let ps: Vec<f64> = cfg.p.map_or(DEFAULT_PS.to_vec(), |p| vec![p]);
    let ts = &cfg.t_grid;
    let mut checks = Vec::new();
    for (fi, f) in test_polys(cfg, alg)?.iter().enumerate() {
        let pulled: Vec<HoloPoly> = ts
            .iter()
            .map(|t| f.dilate_pullback(c((-t).exp())))
            .collect::<Result<_>>()?;
        let refs: Vec<&HoloPoly> = pulled.iter().collect();
        let bank = PolyBank::new(&refs);
        let m = ts.len();
        let moduli = sample_rows(batch, m, |z, row: &mut [f64]| {
            for (slot, v) in row.iter_mut().zip(bank.eval(z)) {
                *slot = v.norm();
            }
        })?;
        for &p in &ps {
            let norms: Vec<McEstimate> = (0..m)
                .map(|j| {
                    let powers: Vec<f64> = moduli.iter().skip(j).step_by(m).map(|v| v.powf(p)).collect();
                    lp_from_powers(&powers, p)
                })
                .collect();
            for (j, t) in ts.iter().enumerate() {
                let name = format!("f{fi}/p={p}/t={t}");
                let now = &norms[j];
                if j == 0 {
                    checks.push(Check::info(name, now.value(), now.stderr));
                    continue;
                }
                let prev = &norms[j - 1];
                let slack = cfg.slack * now.stderr.max(prev.stderr);
                checks.push(Check::at_most(name, now.value(), now.stderr, prev.value() + slack));
            }
        }
    }
    Ok(checks)
}

/// Result of the LSI probe: one informational ratio per family member and
/// the largest of them.
#[derive(Debug, Clone)]
pub struct Probe {
    pub checks: Vec<Check>,
    pub c_emp: McEstimate,
}

/// Estimates `c_emp = max_u (∫|u|² log|u| - ‖u‖² log‖u‖) / Q(u)` over a
/// seeded family: every monomial `m` of weighted degree `1..=degree`, its
/// near-constant perturbation `1 + εm`, `family_size` random polynomials, and
/// the real parts of all of these. This is a lower bound on the LSI constant.
///
/// For holomorphic `f` the energy density is `2 Σ_j |Z_j f|²`; for `u = Re f`
/// it is `Σ_j |Z_j f|²`.
pub fn lsi_probe(cfg: &ExperimentConfig, batch: &SampleBatch) -> Result<Probe> {
    let alg = batch.algebra();
    let mut base: Vec<(String, HoloPoly)> = Vec::new();
    let one = HoloPoly::constant(alg, c(1.0));
    for k in 1..=cfg.degree {
        for m in monomials(alg, k) {
            let near = &one + &m.scale(c(PERTURBATION));
            base.push((format!("{m}"), m));
            base.push((format!("{near}"), near));
        }
    }
    for i in 0..cfg.family_size as u64 {
        let f = random_poly(alg, cfg.degree, derive_seed(cfg.seed, PROBE_STREAM, i));
        base.push((format!("random{i}"), f));
    }
    let mut checks = Vec::new();
    let mut best: Option<McEstimate> = None;
    for (label, f) in &base {
        let grad = HorizontalGradient::new(f);
        let polys: Vec<&HoloPoly> = std::iter::once(f).chain(grad.parts()).collect();
        let bank = PolyBank::new(&polys);
        let rows = sample_rows(batch, 3, |z, row: &mut [f64]| {
            let v = bank.eval(z);
            row[0] = v[0].norm_sqr();
            row[1] = v[0].re * v[0].re;
            row[2] = v[1..].iter().map(|w| w.norm_sqr()).sum::<f64>();
        })?;
        for (real, name) in [(false, label.clone()), (true, format!("re({label})"))] {
            let u = column(&rows, 3, if real { 1 } else { 0 });
            let energy_scale = if real { 1.0 } else { HorizontalFrame::NORMALIZATION };
            let q: Vec<f64> = column(&rows, 3, 2).iter().map(|x| x * energy_scale).collect();
            if let Some(est) = entropy_ratio(&u, &q) {
                checks.push(Check::info(format!("ratio/{name}"), est.value(), est.stderr));
                if best.is_none_or(|b| est.value() > b.value()) {
                    best = Some(est);
                }
            }
        }
    }
    let c_emp = best.ok_or_else(|| Error::Domain("probe family has no member with Q(f) > 0".into()))?;
    if alg.is_abelian() {
        // Gaussian LSI constant a/2
        let bound = 0.5 * cfg.a + cfg.sigmas * c_emp.stderr;
        checks.push(Check::at_most("c_emp", c_emp.value(), c_emp.stderr, bound));
    } else {
        checks.push(Check::at_least("c_emp", c_emp.value(), c_emp.stderr, 0.0));
    }
    Ok(Probe { checks, c_emp })
}

/// `(E[½u log u] - ½E[u] log E[u]) / E[q]` for `u = |f|²` and energy density
/// `q`, with a delta-method standard error. `None` when `E[q]` or `E[u]` vanish.
fn entropy_ratio(u: &[f64], q: &[f64]) -> Option<McEstimate> {
    let ul: Vec<f64> = u
        .iter()
        .map(|&x| if x > 0.0 { 0.5 * x * x.ln() } else { 0.0 })
        .collect();
    let (mu, mul, mq) = (
        McEstimate::from_real(u).value(),
        McEstimate::from_real(&ul).value(),
        McEstimate::from_real(q).value(),
    );
    if mq == 0.0 || mu == 0.0 {
        return None;
    }
    let ratio = (mul - 0.5 * mu * mu.ln()) / mq;
    let slope = 0.5 * (mu.ln() + 1.0);
    let influence: Vec<f64> = (0..u.len())
        .map(|i| (ul[i] - slope * u[i] - ratio * q[i]) / mq)
        .collect();
    Some(McEstimate {
        mean: c(ratio),
        stderr: McEstimate::from_real(&influence).stderr,
        n: u.len(),
    })
}

pub(super) fn shc_checks(cfg: &ExperimentConfig, batch: &SampleBatch) -> Result<Vec<Check>> {
    let alg = batch.algebra();
    let (q, p) = match (cfg.q, cfg.p) {
        (Some(q), Some(p)) => (q, p),
        _ => return Err(Error::Domain("shc needs both q and p".into())),
    };
    let mut checks = Vec::new();
    let c_lsi = match (cfg.c, cfg.c_from_probe) {
        (Some(c), false) => c,
        (None, true) => {
            let probe = lsi_probe(cfg, batch)?;
            checks.push(Check::info("c_emp", probe.c_emp.value(), probe.c_emp.stderr));
            probe.c_emp.value()
        }
        (Some(_), true) => return Err(Error::Domain("give either c or c-from-probe, not both".into())),
        (None, false) => {
            return Err(Error::Domain(
                "the LSI constant c is required: pass c or use c-from-probe".into(),
            ))
        }
    };
    if !(c_lsi > 0.0) {
        return Err(Error::Domain(format!("LSI constant must be > 0, got {c_lsi}")));
    }
    let t_janson = 0.5 * c_lsi * (p / q).ln();
    let m_pq = (2.0 * cfg.beta * (1.0 / q - 1.0 / p)).exp();
    checks.push(Check::info("t_J", t_janson, 0.0));
    checks.push(Check::info("M", m_pq, 0.0));

    let mut grid: Vec<(f64, bool)> = cfg
        .t_grid
        .iter()
        .filter(|t| (**t - t_janson).abs() > 1e-12)
        .map(|t| (*t, false))
        .collect();
    grid.push((t_janson, true));
    grid.sort_by(|x, y| x.0.total_cmp(&y.0));

    for (fi, f) in test_polys(cfg, alg)?.iter().enumerate() {
        let evolved: Vec<HoloPoly> = grid
            .iter()
            .map(|(t, _)| f.semigroup_b(*t, cfg.a))
            .collect::<Result<_>>()?;
        let refs: Vec<&HoloPoly> = std::iter::once(f).chain(evolved.iter()).collect();
        let bank = PolyBank::new(&refs);
        let m = refs.len();
        let moduli = sample_rows(batch, m, |z, row: &mut [f64]| {
            for (slot, v) in row.iter_mut().zip(bank.eval(z)) {
                *slot = v.norm();
            }
        })?;
        let v: Vec<f64> = moduli.iter().step_by(m).map(|x| x.powf(q)).collect();
        let mean_v = McEstimate::from_real(&v).value();
        if mean_v == 0.0 {
            continue;
        }
        for (j, (t, is_janson)) in grid.iter().enumerate() {
            let u: Vec<f64> = moduli.iter().skip(j + 1).step_by(m).map(|x| x.powf(p)).collect();
            let mean_u = McEstimate::from_real(&u).value();
            let ratio = mean_u.powf(1.0 / p) / mean_v.powf(1.0 / q);
            let influence: Vec<f64> = u
                .iter()
                .zip(&v)
                .map(|(ui, vi)| ratio * (ui / (p * mean_u) - vi / (q * mean_v)))
                .collect();
            let stderr = if mean_u > 0.0 {
                McEstimate::from_real(&influence).stderr
            } else {
                0.0
            };
            let name = if *is_janson {
                format!("f{fi}/ratio@t_J")
            } else {
                format!("f{fi}/ratio@t={t}")
            };
            if *t >= t_janson {
                let rel = if ratio > 0.0 { stderr / ratio } else { 0.0 };
                checks.push(Check::at_most(name, ratio, stderr, m_pq * (1.0 + cfg.slack * rel)));
            } else {
                checks.push(Check::info(name, ratio, stderr));
            }
        }
    }
    Ok(checks)
}

fn random_point(r: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<Complex64> {
    (0..dim)
        .map(|_| Complex64::new(r.random_range(-scale..scale), r.random_range(-scale..scale)))
        .collect()
}

/// Points near the mode of the radial density, where the KDE has the
/// smallest relative variance.
fn kde_points(model: KernelModel, dim: usize, s: f64) -> Vec<Vec<Complex64>> {
    let shape = [(0.7, 0.3), (0.85, 0.45), (0.65, 0.25), (1.0, 0.5), (0.8, 0.35)];
    shape
        .iter()
        .map(|&(r, cc)| {
            let mut x = vec![ZERO; dim];
            match model {
                KernelModel::Abelian { n } => x[0] = c(r * (n as f64 * s).sqrt()),
                KernelModel::Heisenberg { n } => {
                    x[0] = c(r * (2.0 * n as f64 * s).sqrt());
                    x[2 * n] = c(cc * s * (n as f64).sqrt());
                }
            }
            x
        })
        .collect()
}

pub(super) fn kernel_checks(cfg: &ExperimentConfig, batch: &SampleBatch) -> Result<Vec<Check>> {
    let alg = batch.algebra();
    let kernel = HeatKernel::new(alg, KernelQuadratureConfig::default())?;
    let s = cfg.a;
    let d = alg.dim();
    let mut checks = Vec::new();

    let total = kernel.normalization(s)?;
    checks.push(Check::at_most("normalization", (total - 1.0).abs(), 0.0, 1e-3));

    let mut r = rng(cfg.seed, GEOMETRY_STREAM, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = random_point(&mut r, d, s.sqrt());
        let minus: Vec<Complex64> = x.iter().map(|z| -z).collect();
        worst = worst.max((kernel.rho(s, &x)? - kernel.rho(s, &minus)?).abs());
    }
    checks.push(Check::at_most("symmetry", worst, 0.0, 1e-9));

    let big_d = alg.homogeneous_dim() as i32;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let t = s * r.random_range(0.5..2.0);
        let lam = Complex64::from_polar(r.random_range(0.7..1.4), r.random_range(0.0..std::f64::consts::TAU));
        let x = GroupElement::new(random_point(&mut r, d, 0.8 * t.sqrt()));
        let dx = alg.dilate(lam, &x)?;
        let lhs = lam.norm().powi(2 * big_d) * kernel.rho(t, &dx.coords)?;
        let rhs = kernel.rho(t / lam.norm_sqr(), &x.coords)?;
        worst = worst.max((lhs - rhs).abs());
    }
    checks.push(Check::at_most("scaling", worst, 0.0, 1e-6));

    for (i, x) in kde_points(kernel.model(), d, s).iter().enumerate() {
        let exact = kernel.rho(s, x)?;
        let kde = radial_kde(&kernel, batch, x, cfg.bandwidth * s.sqrt())?;
        checks.push(Check::at_most(
            format!("kde{i}/relative_error"),
            (kde.value() / exact - 1.0).abs(),
            kde.stderr / exact,
            0.05,
        ));
    }

    let ts: Vec<f64> = (0..=30).map(|i| -1.5 + 0.1 * i as f64).collect();
    for ray in 0..10 {
        let x = GroupElement::new(random_point(&mut r, d, 1.0));
        let unit = alg.dilate(c(s.sqrt() / alg.homogeneous_norm(&x)?), &x)?;
        let profile = kernel.decay_profile(s, &unit, &ts, 1e-6)?;
        let tag = format!("decay{ray}");
        checks.push(Check::at_least(
            format!("{tag}/reliable_points"),
            profile.len() as f64,
            0.0,
            12.0,
        ));
        if profile.len() < 2 {
            continue;
        }
        let tail = &profile[profile.len() / 2..];
        let rises = tail.windows(2).filter(|w| w[1].1 >= w[0].1).count();
        checks.push(Check::at_most(format!("{tag}/tail_increases"), rises as f64, 0.0, 0.0));
        let ratios: Vec<f64> = tail.iter().map(|(t, l)| (profile[0].1 - l) / (2.0 * t).exp()).collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::at_least(format!("{tag}/min_ratio"), lo, 0.0, f64::MIN_POSITIVE));
        checks.push(Check::at_most(
            format!("{tag}/ratio_band"),
            hi / lo.max(f64::MIN_POSITIVE),
            0.0,
            10.0,
        ));
    }

    let at_identity = kernel.grad_log_rho(s, &vec![ZERO; d])?;
    let worst = at_identity.iter().map(|v| v.norm()).fold(0.0, f64::max);
    checks.push(Check::at_most("grad_log_rho/identity", worst, 0.0, 1e-6));
    let x = random_point(&mut r, d, 0.5 * s.sqrt());
    let spacing = kernel.config().fd_spacing;
    let coarse = kernel.grad_log_rho_with_spacing(s, &x, spacing)?;
    let fine = kernel.grad_log_rho_with_spacing(s, &x, 0.5 * spacing)?;
    let worst = coarse
        .iter()
        .zip(&fine)
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("grad_log_rho/stencil", worst, 0.0, 1e-6));
    Ok(checks)
}

pub(super) fn nonholo_checks(cfg: &ExperimentConfig, alg: &Arc<StratifiedAlgebra>) -> Result<Vec<Check>> {
    let kernel = HeatKernel::new(alg, KernelQuadratureConfig::default())?;
    if !matches!(kernel.model(), KernelModel::Heisenberg { .. }) {
        return Err(Error::Domain("nonholo needs a Heisenberg group".into()));
    }
    let a = cfg.a;
    let d = alg.dim();
    let center = d - 1;
    let f = match &cfg.f {
        Some(text) => HoloPoly::parse(alg, text)?,
        None => HoloPoly::var(alg, center),
    };
    let mut e_c = vec![ZERO; d];
    e_c[center] = c(1.0);
    let mut checks = Vec::new();

    let zf = f.euler_z().evaluate(&e_c);
    let bf = f.apply_b(a)?.evaluate(&e_c);
    if cfg.f.is_none() {
        checks.push(Check::equals("zf_at_center", zf.re, 2.0, 0.0));
        checks.push(Check::equals("bf_at_center", bf.re, 4.0 / a, 1e-12 / a));
        checks.push(Check::at_most(
            "center_values_imaginary",
            zf.im.abs().max(bf.im.abs()),
            0.0,
            0.0,
        ));
    } else {
        checks.push(Check::info("zf_at_center", zf.re, 0.0));
        checks.push(Check::info("bf_at_center", bf.re, 0.0));
    }
    let af = kernel.apply_a(&f, a, &e_c)?;
    checks.push(Check::at_most("af_at_center", af.norm(), 0.0, 1e-6));

    let witness = kernel.nonholomorphy_witness(&f, a)?;
    let h = kernel.config().dbar_spacing;
    let mut baselines = vec![f.clone(), f.apply_b(a)?, f.euler_z()];
    for i in 0..3 {
        baselines.push(random_poly(alg, 3, derive_seed(cfg.seed, GEOMETRY_STREAM, 100 + i)));
    }
    let mut baseline: f64 = 0.0;
    for g in &baselines {
        let r = dbar_residual(|y| Ok(g.evaluate(y)), &witness.point.coords, alg, h)?;
        baseline = baseline.max(r);
    }
    checks.push(Check::info("witness/evaluations", witness.evaluated as f64, 0.0));
    checks.push(Check::info("witness/holomorphic_baseline", baseline, 0.0));
    checks.push(Check::at_least(
        "witness/residual",
        witness.residual,
        0.0,
        10.0 * baseline,
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{sample_heat_kernel, SamplerConfig};
    use crate::verify::config::Experiment;

    fn batch(alg: &Arc<StratifiedAlgebra>, s: f64, n: usize, seed: u64) -> SampleBatch {
        sample_heat_kernel(alg, &SamplerConfig::new(s, n, seed).with_steps(32)).unwrap()
    }

    #[test]
    fn seeds_are_spread() {
        let a = derive_seed(1, IDENTITY_STREAM, 0);
        assert_ne!(a, derive_seed(1, IDENTITY_STREAM, 1));
        assert_ne!(a, derive_seed(1, PROBE_STREAM, 0));
        assert_ne!(a, derive_seed(2, IDENTITY_STREAM, 0));
        assert_eq!(a, derive_seed(1, IDENTITY_STREAM, 0));
    }

    #[test]
    fn gaussian_oracle_matches_moments() {
        let alg = Arc::new(StratifiedAlgebra::abelian(2).unwrap());
        let f = HoloPoly::parse(&alg, "z1^2*z2 + 2*z1").unwrap();
        let g = HoloPoly::parse(&alg, "z1^2*z2 + (0,-1)*z1").unwrap();
        // 2!·1!·s³ + 2·conj(-i)·s
        let v = gaussian_inner_product(&f, &g, 0.5);
        assert!((v - Complex64::new(0.25, 1.0)).norm() < 1e-15, "{v}");
    }

    #[test]
    fn validate_flags_h_type_only_on_request() {
        let alg = Arc::new(StratifiedAlgebra::abelian(2).unwrap());
        let mut cfg = ExperimentConfig::new(Experiment::Validate, "abelian:2");
        cfg.inner_product = Some("euclidean".into());
        let checks = validate_checks(&cfg, &alg).unwrap();
        assert!(checks.iter().all(|c| c.pass));
        let h = checks.iter().find(|c| c.name == "h_type").unwrap();
        assert_eq!(h.estimate, 0.0);
        cfg.require_h_type = true;
        assert!(!validate_checks(&cfg, &alg).unwrap().iter().all(|c| c.pass));
    }

    #[test]
    fn identities_hold_on_abelian_groups() {
        let alg = Arc::new(StratifiedAlgebra::abelian(1).unwrap());
        let mut cfg = ExperimentConfig::new(Experiment::Identities, "abelian:1");
        cfg.pairs = 4;
        cfg.orthogonality_pairs = 4;
        let checks = identity_checks(&cfg, &batch(&alg, 1.0, 40_000, 3)).unwrap();
        assert_eq!(checks.len(), 4 * 6 + 4);
        for ch in &checks {
            assert!(ch.pass, "{ch:?}");
        }
    }

    #[test]
    fn contractivity_constant_is_flat() {
        let alg = Arc::new(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
        let mut cfg = ExperimentConfig::new(Experiment::Contractivity, "heisenberg:1");
        cfg.f = Some("(2,-1)".into());
        let checks = contractivity_checks(&cfg, &batch(&alg, 1.0, 2_000, 1)).unwrap();
        assert_eq!(checks.len(), 4 * 9);
        for ch in &checks {
            assert!(ch.pass);
            assert!((ch.estimate - 5f64.sqrt()).abs() < 1e-12);
            assert!(ch.stderr < 1e-12);
        }
    }

    #[test]
    fn shc_needs_an_lsi_constant() {
        let alg = Arc::new(StratifiedAlgebra::abelian(1).unwrap());
        let b = batch(&alg, 1.0, 1_000, 1);
        let mut cfg = ExperimentConfig::new(Experiment::Shc, "abelian:1");
        cfg.q = Some(2.0);
        cfg.p = Some(4.0);
        assert!(matches!(shc_checks(&cfg, &b), Err(Error::Domain(_))));
        cfg.c = Some(0.5);
        cfg.c_from_probe = true;
        assert!(matches!(shc_checks(&cfg, &b), Err(Error::Domain(_))));
    }

    #[test]
    fn shc_at_time_zero_with_equal_exponents_is_exact() {
        let alg = Arc::new(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
        let mut cfg = ExperimentConfig::new(Experiment::Shc, "heisenberg:1");
        cfg.q = Some(2.0);
        cfg.p = Some(2.0);
        cfg.c = Some(1.0);
        cfg.t_grid = vec![0.0, 0.5];
        cfg.f = Some("z1 + z3".into());
        let checks = shc_checks(&cfg, &batch(&alg, 1.0, 2_000, 1)).unwrap();
        let at_zero = checks.iter().find(|c| c.name == "f0/ratio@t_J").unwrap();
        assert_eq!(at_zero.estimate, 1.0);
        assert_eq!(at_zero.stderr, 0.0);
        assert!(at_zero.pass);
        assert!(checks.iter().all(|c| c.pass));
    }

    #[test]
    fn probe_scales_with_a() {
        let alg = Arc::new(StratifiedAlgebra::abelian(1).unwrap());
        let mut cfg = ExperimentConfig::new(Experiment::LsiProbe, "abelian:1");
        cfg.family_size = 0;
        let one = lsi_probe(&cfg, &batch(&alg, 1.0, 50_000, 9)).unwrap();
        cfg.a = 2.0;
        let two = lsi_probe(&cfg, &batch(&alg, 2.0, 50_000, 9)).unwrap();
        assert!(one.checks.iter().all(|c| c.pass));
        assert!(two.checks.iter().all(|c| c.pass));
        let spread = (two.c_emp.stderr.powi(2) + 4.0 * one.c_emp.stderr.powi(2)).sqrt();
        assert!((two.c_emp.value() - 2.0 * one.c_emp.value()).abs() < 3.0 * spread);
        // near-constant real perturbations approach the sharp constant a/2
        assert!(one.c_emp.value() > 0.45, "{:?}", one.c_emp);
        // z, z², z³, each perturbed, each with its real part
        assert_eq!(one.checks.len(), 3 * 2 * 2 + 1);
        // f = z: |z|² is exponential with mean a, giving a(1 - γ)/4
        let z = one.checks.iter().find(|c| c.name == "ratio/(1,0)*z1").unwrap();
        let exact = 0.25 * (1.0 - 0.577_215_664_901_532_9);
        assert!((z.estimate - exact).abs() < 4.0 * z.stderr, "{z:?}");
    }

    #[test]
    fn nonholo_rejects_other_groups() {
        let alg = Arc::new(StratifiedAlgebra::abelian(1).unwrap());
        let cfg = ExperimentConfig::new(Experiment::Nonholo, "abelian:1");
        assert!(matches!(nonholo_checks(&cfg, &alg), Err(Error::Domain(_))));
    }
}
