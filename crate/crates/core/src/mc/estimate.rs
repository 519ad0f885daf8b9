use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::SampleBatch;
use crate::error::{Error, Result};
use crate::holo::{HoloPoly, HorizontalGradient, PolyBank};
use crate::lie::GroupElement;
use crate::lie::HorizontalFrame;

/// Sample mean with its standard error `sample-std / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn exact(mean: Complex64, n: usize) -> Self {
        Self { mean, stderr: 0.0, n }
    }

    pub fn from_values(values: &[Complex64]) -> Self {
        let n = values.len();
        let mut re = Kahan::default();
        let mut im = Kahan::default();
        for v in values {
            re.add(v.re);
            im.add(v.im);
        }
        let mean = Complex64::new(re.sum() / n as f64, im.sum() / n as f64);
        Self {
            mean,
            stderr: stderr_about(values.iter().map(|v| (v - mean).norm_sqr()), n),
            n,
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut acc = Kahan::default();
        for v in values {
            acc.add(*v);
        }
        let mean = acc.sum() / n as f64;
        Self {
            mean: Complex64::new(mean, 0.0),
            stderr: stderr_about(values.iter().map(|v| (v - mean).powi(2)), n),
            n,
        }
    }

    /// Real part of the mean.
    pub fn value(&self) -> f64 {
        self.mean.re
    }

    /// `|mean - target|` in units of `stderr`; infinite when `stderr = 0`
    /// and the difference is nonzero.
    pub fn z_score(&self, target: Complex64) -> f64 {
        let d = (self.mean - target).norm();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

fn stderr_about(sq_dev: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let mut acc = Kahan::default();
    for v in sq_dev {
        acc.add(v);
    }
    (acc.sum() / (n - 1) as f64 / n as f64).sqrt()
}

#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum
    }
}

/// Evaluates `f` at every batch point in parallel, returning values in index
/// order. A non-finite value poisons the whole evaluation.
pub fn sample_values<T, F>(batch: &SampleBatch, f: F) -> Result<Vec<T>>
where
    T: Send + Copy + Finite,
    F: Fn(&[Complex64]) -> T + Sync,
{
    let d = batch.algebra().dim();
    let values: Vec<T> = batch.raw().par_chunks(d).map(&f).collect();
    match values.iter().position(|v| !v.is_finite_value()) {
        Some(index) => Err(Error::PoisonedEstimate { index }),
        None => Ok(values),
    }
}

/// Evaluates `m` outputs per batch point in parallel into a row-major
/// `n × m` matrix. A non-finite entry poisons the evaluation.
pub fn sample_rows<T, F>(batch: &SampleBatch, m: usize, f: F) -> Result<Vec<T>>
where
    T: Send + Copy + Default + Finite,
    F: Fn(&[Complex64], &mut [T]) + Sync,
{
    let d = batch.algebra().dim();
    let mut out = vec![T::default(); batch.len() * m];
    if m == 0 {
        return Ok(out);
    }
    out.par_chunks_mut(m)
        .zip(batch.raw().par_chunks(d))
        .for_each(|(row, z)| f(z, row));
    match out.iter().position(|v| !v.is_finite_value()) {
        Some(pos) => Err(Error::PoisonedEstimate { index: pos / m }),
        None => Ok(out),
    }
}

/// Column `j` of a row-major matrix with `m` columns.
pub fn column<T: Copy>(rows: &[T], m: usize, j: usize) -> Vec<T> {
    rows.iter().skip(j).step_by(m).copied().collect()
}

pub trait Finite {
    fn is_finite_value(&self) -> bool;
}

impl Finite for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Finite for Complex64 {
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<A: Finite, B: Finite> Finite for (A, B) {
    fn is_finite_value(&self) -> bool {
        self.0.is_finite_value() && self.1.is_finite_value()
    }
}

impl<A: Finite, B: Finite, C: Finite> Finite for (A, B, C) {
    fn is_finite_value(&self) -> bool {
        self.0.is_finite_value() && self.1.is_finite_value() && self.2.is_finite_value()
    }
}

pub fn mc_integral<F>(f: F, batch: &SampleBatch) -> Result<McEstimate>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    Ok(McEstimate::from_values(&sample_values(batch, f)?))
}

/// `(∫|f|^p ρ_s)^{1/p}` with a delta-method standard error.
pub fn lp_norm(f: &HoloPoly, p: f64, batch: &SampleBatch) -> Result<McEstimate> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("p must be > 0, got {p}")));
    }
    let bank = PolyBank::new(&[f]);
    let values = sample_values(batch, |z| bank.eval(z)[0].norm().powf(p))?;
    Ok(lp_from_powers(&values, p))
}

/// `(mean of |f|^p)^{1/p}` with a delta-method standard error, from the
/// per-sample values `|f|^p`.
pub fn lp_from_powers(values: &[f64], p: f64) -> McEstimate {
    let m = McEstimate::from_real(values);
    let mean = m.value();
    if mean == 0.0 {
        return McEstimate::exact(Complex64::new(0.0, 0.0), m.n);
    }
    McEstimate {
        mean: Complex64::new(mean.powf(1.0 / p), 0.0),
        stderr: mean.powf(1.0 / p - 1.0) / p * m.stderr,
        n: m.n,
    }
}

/// `⟨f, g⟩ = ∫ f ḡ ρ_s`.
pub fn inner_product(f: &HoloPoly, g: &HoloPoly, batch: &SampleBatch) -> Result<McEstimate> {
    let bank = PolyBank::new(&[f, g]);
    mc_integral(
        |z| {
            let v = bank.eval(z);
            v[0] * v[1].conj()
        },
        batch,
    )
}

/// `Q(f, g) = ∫ h(df, dḡ) ρ_s`.
pub fn dirichlet_form(f: &HoloPoly, g: &HoloPoly, batch: &SampleBatch) -> Result<McEstimate> {
    let gf = HorizontalGradient::new(f);
    let gg = HorizontalGradient::new(g);
    let k = gf.parts().len();
    let polys: Vec<&HoloPoly> = gf.parts().iter().chain(gg.parts()).collect();
    let bank = PolyBank::new(&polys);
    mc_integral(
        |z| {
            let v = bank.eval(z);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..k {
                acc += v[j] * v[k + j].conj();
            }
            acc * HorizontalFrame::NORMALIZATION
        },
        batch,
    )
}

/// `c Q(f) + β‖f‖² + ‖f‖² log‖f‖ - ∫|f|² log|f| ρ`, with `0 log 0 = 0`.
///
/// The standard error is propagated through the influence function
/// `c|∇f|² + β|f|² + ½(log E|f|² + 1)|f|² - |f|² log|f|`.
pub fn entropy_gap(f: &HoloPoly, c: f64, beta: f64, batch: &SampleBatch) -> Result<McEstimate> {
    if !(c > 0.0) || !(beta >= 0.0) || !c.is_finite() || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "need c > 0 and beta >= 0, got c = {c}, beta = {beta}"
        )));
    }
    let grad = HorizontalGradient::new(f);
    let polys: Vec<&HoloPoly> = std::iter::once(f).chain(grad.parts()).collect();
    let bank = PolyBank::new(&polys);
    let parts = sample_values(batch, |z| {
        let v = bank.eval(z);
        let u = v[0].norm_sqr();
        let ulog = if u > 0.0 { 0.5 * u * u.ln() } else { 0.0 };
        let q: f64 = v[1..].iter().map(|w| w.norm_sqr()).sum();
        (HorizontalFrame::NORMALIZATION * q, u, ulog)
    })?;
    let q: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let u: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let ulog: Vec<f64> = parts.iter().map(|p| p.2).collect();
    let eq = McEstimate::from_real(&q).value();
    let eu = McEstimate::from_real(&u).value();
    let eulog = McEstimate::from_real(&ulog).value();
    let norm_term = if eu > 0.0 { 0.5 * eu * eu.ln() } else { 0.0 };
    let gap = c * eq + beta * eu + norm_term - eulog;
    let slope = if eu > 0.0 { 0.5 * (eu.ln() + 1.0) } else { 0.0 };
    let influence: Vec<f64> = parts
        .iter()
        .map(|&(q, u, ul)| c * q + beta * u + slope * u - ul)
        .collect();
    Ok(McEstimate {
        mean: Complex64::new(gap, 0.0),
        stderr: McEstimate::from_real(&influence).stderr,
        n: parts.len(),
    })
}

/// `(P_t f)(x) = E f(δ_{e^{-βt}} x · δ_{√(1-e^{-2βt})} y)` with `y ~ ρ_a`,
/// `β = 2/a`.
pub fn mehler_apply(f: &HoloPoly, t: f64, a: f64, x: &GroupElement, y_batch: &SampleBatch) -> Result<McEstimate> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    if !(a > 0.0) {
        return Err(Error::Domain(format!("a must be > 0, got {a}")));
    }
    if (y_batch.s() - a).abs() > 1e-12 * a {
        return Err(Error::Domain(format!(
            "Mehler sampling needs a batch at s = a = {a}, got s = {}",
            y_batch.s()
        )));
    }
    let alg = y_batch.algebra();
    alg.check_len(x.dim())?;
    if t == 0.0 {
        return Ok(McEstimate::exact(f.evaluate(&x.coords), y_batch.len()));
    }
    let beta = 2.0 / a;
    let shrink = (-beta * t).exp();
    let spread = (-(-2.0 * beta * t).exp_m1()).sqrt();
    let x_shrunk = alg.dilate(Complex64::new(shrink, 0.0), x)?;
    let powers = alg.weight_powers(Complex64::new(spread, 0.0));
    let weights = alg.weights();
    let d = alg.dim();
    let bank = PolyBank::new(&[f]);
    let values = sample_values(y_batch, |y| {
        let mut ys = vec![Complex64::new(0.0, 0.0); d];
        for k in 0..d {
            ys[k] = y[k] * powers[weights[k] as usize];
        }
        let mut prod = vec![Complex64::new(0.0, 0.0); d];
        alg.bch_into(&x_shrunk.coords, &ys, &mut prod);
        bank.eval(&prod)[0]
    })?;
    Ok(McEstimate::from_values(&values))
}

/// Applies `δ_λ` to every point; the result is a batch at `s|λ|²`.
pub fn dilate_batch(batch: &SampleBatch, lambda: Complex64) -> Result<SampleBatch> {
    batch.dilate(lambda)
}

/// Product-Gaussian kernel density estimate of `ρ_s(x)` in adapted
/// coordinates, bandwidth `h^{c_j}` on coordinate `j`. Bias is `O(h²)`.
pub fn kde_estimate(batch: &SampleBatch, x: &GroupElement, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::Domain(format!("bandwidth must be > 0, got {bandwidth}")));
    }
    let alg = batch.algebra();
    alg.check_len(x.dim())?;
    let inv_var: Vec<f64> = alg.weights().iter().map(|&c| bandwidth.powi(-2 * c as i32)).collect();
    // each complex coordinate is a 2D Gaussian with variance h^{2c_j}
    let log_norm: f64 = inv_var.iter().map(|iv| (iv / (2.0 * std::f64::consts::PI)).ln()).sum();
    let values = sample_values(batch, |y| {
        let q: f64 = y
            .iter()
            .zip(&x.coords)
            .zip(&inv_var)
            .map(|((yk, xk), iv)| (yk - xk).norm_sqr() * iv)
            .sum();
        (log_norm - 0.5 * q).exp()
    })?;
    Ok(McEstimate::from_real(&values).value().max(0.0))
}
