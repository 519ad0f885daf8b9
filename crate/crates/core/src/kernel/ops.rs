use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{sphere_area, HeatKernel, KernelModel};
use crate::error::{Error, Result};
use crate::holo::HoloPoly;
use crate::lie::{GroupElement, HorizontalFrame};
use crate::mc::{sample_values, McEstimate, SampleBatch};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fourth-order central difference of `g` at 0.
fn stencil(g: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    Ok((-g(2.0 * h)? + 8.0 * g(h)? - 8.0 * g(-h)? + g(-2.0 * h)?) / (12.0 * h))
}

fn stencil_c(g: impl Fn(f64) -> Result<Complex64>, h: f64) -> Result<Complex64> {
    Ok((-g(2.0 * h)? + g(h)? * 8.0 - g(-h)? * 8.0 + g(-2.0 * h)?) / (12.0 * h))
}

impl HeatKernel {
    /// `Z̄_j log ρ_s(x) = ½(X_j + iY_j) log ρ_s(x)` for each horizontal frame
    /// direction, with `X_j`, `Y_j` differenced along `t ↦ x·exp(t e_j)` and
    /// `t ↦ x·exp(it e_j)`.
    pub fn grad_log_rho(&self, s: f64, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.grad_log_rho_with_spacing(s, x, self.cfg.fd_spacing)
    }

    pub fn grad_log_rho_with_spacing(&self, s: f64, x: &[Complex64], spacing: f64) -> Result<Vec<Complex64>> {
        self.alg.check_len(x.len())?;
        let h = spacing * s.sqrt();
        let d = self.alg.dim();
        let frame = HorizontalFrame::new(&self.alg);
        let mut out = Vec::with_capacity(frame.len());
        for j in 0..frame.len() {
            let mut dir = [0.0; 2];
            for (slot, unit) in dir.iter_mut().zip([Complex64::new(1.0, 0.0), I]) {
                let e = frame.vector(j, d);
                *slot = stencil(
                    |t| {
                        let step: Vec<Complex64> = e.iter().map(|v| v * unit * t).collect();
                        let mut buf = vec![Complex64::new(0.0, 0.0); d];
                        self.alg.bch_into(x, &step, &mut buf);
                        self.log_rho(s, &buf)
                    },
                    h,
                )?;
            }
            out.push(Complex64::new(dir[0], dir[1]) * 0.5);
        }
        Ok(out)
    }

    /// `(Af)(x) = -h(df, d log ρ_a)(x) = -2 Σ_j Z_j f(x) · Z̄_j log ρ_a(x)`
    /// for holomorphic `f`, where `Δf = 0`.
    pub fn apply_a(&self, f: &HoloPoly, a: f64, x: &[Complex64]) -> Result<Complex64> {
        if **f.algebra() != *self.alg {
            return Err(Error::IncompatibleAlgebra);
        }
        self.alg.check_len(x.len())?;
        let frame = HorizontalFrame::new(&self.alg);
        let zf: Vec<Complex64> = (0..frame.len())
            .map(|j| {
                f.left_invariant_derivative(&frame.vector(j, self.alg.dim()))
                    .map(|p| p.evaluate(x))
            })
            .collect::<Result<_>>()?;
        if zf.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let grad = self.grad_log_rho(a, x)?;
        let sum: Complex64 = zf.iter().zip(&grad).map(|(p, q)| p * q).sum();
        Ok(-sum * HorizontalFrame::NORMALIZATION)
    }

    /// `(t, log ρ_s(δ_{e^t} x))` over `ts`, stopping at the first point where
    /// the quadrature cannot reach relative accuracy `rel_tol` (the κ-integral
    /// cancels catastrophically once `ρ` is many orders below its peak).
    pub fn decay_profile(&self, s: f64, x: &GroupElement, ts: &[f64], rel_tol: f64) -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::with_capacity(ts.len());
        for &t in ts {
            let y = self.alg.dilate(Complex64::new(t.exp(), 0.0), x)?;
            match self.rho_tol(s, &y.coords, 0.0, rel_tol) {
                Ok(v) => out.push((t, v.ln())),
                Err(Error::Quadrature { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Searches the unit `|·|_1`-ball for a point where `x ↦ (Af)(x)` has a
    /// large Cauchy–Riemann residual: a coarse grid over the real parts of
    /// the coordinates and the imaginary part of the center, then a shrinking
    /// pattern search in all real directions.
    pub fn nonholomorphy_witness(&self, f: &HoloPoly, a: f64) -> Result<Witness> {
        let d = self.alg.dim();
        let residual = |x: &[Complex64]| dbar_residual(|y| self.apply_a(f, a, y), x, &self.alg, self.cfg.dbar_spacing);
        let inside = |x: &[Complex64]| self.alg.homogeneous_norm_slice(x) <= 1.0;
        let levels = [-0.5, 0.0, 0.5];
        let mut best: Option<(Vec<Complex64>, f64)> = None;
        let mut evaluated = 0;
        let real_axes = d + 1;
        let total = levels.len().pow(real_axes as u32);
        for code in 0..total {
            let mut x = vec![Complex64::new(0.0, 0.0); d];
            let mut rest = code;
            for k in 0..real_axes {
                let v = levels[rest % levels.len()];
                rest /= levels.len();
                if k < d {
                    x[k].re = v;
                } else {
                    x[d - 1].im = v;
                }
            }
            if !inside(&x) {
                continue;
            }
            let r = residual(&x)?;
            evaluated += 1;
            if best.as_ref().is_none_or(|(_, b)| r > *b) {
                best = Some((x, r));
            }
        }
        let (mut point, mut value) = best.expect("the origin is always on the grid");
        let mut step = 0.25;
        for _ in 0..3 {
            let mut improved = true;
            while improved {
                improved = false;
                for k in 0..2 * d {
                    for sign in [-1.0, 1.0] {
                        let mut y = point.clone();
                        if k % 2 == 0 {
                            y[k / 2].re += sign * step;
                        } else {
                            y[k / 2].im += sign * step;
                        }
                        if !inside(&y) {
                            continue;
                        }
                        let r = residual(&y)?;
                        evaluated += 1;
                        if r > value {
                            point = y;
                            value = r;
                            improved = true;
                        }
                    }
                }
            }
            step /= 2.0;
        }
        Ok(Witness {
            point: GroupElement::new(point),
            residual: value,
            evaluated,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: GroupElement,
    pub residual: f64,
    pub evaluated: usize,
}

/// `max_j |∂F/∂x_j + i ∂F/∂y_j| / 2` over first-layer coordinates `z_j = x_j + i y_j`,
/// by fourth-order central differences in ambient coordinates.
pub fn dbar_residual(
    f: impl Fn(&[Complex64]) -> Result<Complex64>,
    x: &[Complex64],
    alg: &crate::lie::StratifiedAlgebra,
    h: f64,
) -> Result<f64> {
    alg.check_len(x.len())?;
    let mut worst: f64 = 0.0;
    let shifted = |j: usize, unit: Complex64, t: f64| {
        let mut y = x.to_vec();
        y[j] += unit * t;
        f(&y)
    };
    for j in alg.layer_range(1) {
        let dx = stencil_c(|t| shifted(j, Complex64::new(1.0, 0.0), t), h)?;
        let dy = stencil_c(|t| shifted(j, I, t), h)?;
        worst = worst.max((dx + I * dy).norm() / 2.0);
    }
    Ok(worst)
}

/// Density estimate of `ρ_s(x)` from the radial statistics `(|w|, |c|)`.
///
/// Each sample is weighted by the inverse Jacobian of the radial map, so the
/// window is two-dimensional whatever the dimension of `G`. The window is the
/// fourth-order Gaussian kernel `½(3 - u²)φ(u)` in each radial variable,
/// which makes the smoothing bias `O(h⁴)`.
pub fn radial_kde(kernel: &HeatKernel, batch: &SampleBatch, x: &[Complex64], bandwidth: f64) -> Result<McEstimate> {
    if !(bandwidth > 0.0) {
        return Err(Error::Domain(format!("bandwidth must be > 0, got {bandwidth}")));
    }
    if **batch.algebra() != **kernel.algebra() {
        return Err(Error::IncompatibleAlgebra);
    }
    kernel.algebra().check_len(x.len())?;
    let (r2, c0) = kernel.radial(x);
    let r0 = r2.sqrt();
    let (horizontal_real, central) = match kernel.model() {
        KernelModel::Abelian { n } => (2 * n, false),
        KernelModel::Heisenberg { n } => (4 * n, true),
    };
    let sphere = sphere_area(horizontal_real);
    let window = |d: f64| {
        let u2 = (d / bandwidth).powi(2);
        if u2 > 80.0 {
            return 0.0;
        }
        0.5 * (3.0 - u2) * (-0.5 * u2).exp() / ((2.0 * PI).sqrt() * bandwidth)
    };
    let values = sample_values(batch, |y| {
        let (yr2, yc) = kernel.radial(y);
        let yr = yr2.sqrt();
        let mut w = window(yr - r0);
        if w == 0.0 {
            return 0.0;
        }
        let mut jac = sphere * yr.powi(horizontal_real as i32 - 1);
        if central {
            w *= window(yc - c0);
            jac *= 2.0 * PI * yc;
        }
        if w == 0.0 {
            0.0
        } else {
            w / jac
        }
    })?;
    Ok(McEstimate::from_real(&values))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::kernel::KernelQuadratureConfig;
    use crate::lie::StratifiedAlgebra;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn kernel(alg: StratifiedAlgebra) -> HeatKernel {
        HeatKernel::new(&Arc::new(alg), KernelQuadratureConfig::default()).unwrap()
    }

    #[test]
    fn gradient_vanishes_at_identity() {
        let k = kernel(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
        for v in k.grad_log_rho(1.0, &[c(0.0, 0.0); 3]).unwrap() {
            assert!(v.norm() < 1e-6);
        }
    }

    #[test]
    fn abelian_gradient_closed_form() {
        let k = kernel(StratifiedAlgebra::abelian(2).unwrap());
        let x = [c(0.4, -0.3), c(-1.1, 0.2)];
        let s = 0.8;
        let g = k.grad_log_rho(s, &x).unwrap();
        for (gj, xj) in g.iter().zip(&x) {
            assert!((gj + xj / s).norm() < 1e-6, "{gj} vs {}", -xj / s);
        }
    }

    #[test]
    fn stencil_converges() {
        let k = kernel(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
        let x = [c(0.3, 0.2), c(-0.4, 0.1), c(0.25, -0.15)];
        let coarse = k.grad_log_rho(1.0, &x).unwrap();
        let fine = k.grad_log_rho_with_spacing(1.0, &x, 0.5e-4).unwrap();
        for (p, q) in coarse.iter().zip(&fine) {
            assert!((p - q).norm() < 1e-6, "{p} vs {q}");
        }
    }

    #[test]
    fn apply_a_examples() {
        let alg = Arc::new(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
        let k = HeatKernel::new(&alg, KernelQuadratureConfig::default()).unwrap();
        let z3 = HoloPoly::var(&alg, 2);
        let e3 = [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        assert!(k.apply_a(&z3, 1.0, &e3).unwrap().norm() < 1e-6);
        assert_eq!(z3.euler_z().evaluate(&e3), c(2.0, 0.0));
        let konst = HoloPoly::constant(&alg, c(2.0, -1.0));
        assert_eq!(k.apply_a(&konst, 1.0, &[c(0.3, 0.1); 3]).unwrap(), c(0.0, 0.0));

        let ab = Arc::new(StratifiedAlgebra::abelian(1).unwrap());
        let ka = HeatKernel::new(&ab, KernelQuadratureConfig::default()).unwrap();
        let z = HoloPoly::var(&ab, 0);
        for a in [0.5, 1.0, 2.0] {
            let x = [c(0.7, -0.4)];
            let v = ka.apply_a(&z, a, &x).unwrap();
            assert!((v - x[0] * (2.0 / a)).norm() < 1e-6, "{v}");
        }
        assert_eq!(k.apply_a(&z, 1.0, &e3), Err(Error::IncompatibleAlgebra));
    }

    #[test]
    fn dbar_examples() {
        let alg = StratifiedAlgebra::heisenberg_weyl(1).unwrap();
        let x = [c(0.3, -0.2), c(0.1, 0.4), c(-0.5, 0.2)];
        let holo = dbar_residual(|z| Ok(z[2] * z[0] + z[1] * z[1] * z[1]), &x, &alg, 1e-3).unwrap();
        assert!(holo < 1e-8);
        let anti = dbar_residual(|z| Ok(z[0].conj()), &x, &alg, 1e-3).unwrap();
        assert!((anti - 1.0).abs() < 1e-9);
    }

    #[test]
    fn a_is_not_holomorphic_off_the_center() {
        let alg = Arc::new(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
        let k = HeatKernel::new(&alg, KernelQuadratureConfig::default()).unwrap();
        let z3 = HoloPoly::var(&alg, 2);
        let x = [c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.5)];
        let r = dbar_residual(|y| k.apply_a(&z3, 1.0, y), &x, &alg, 1e-3).unwrap();
        assert!(r > 1e-2, "{r}");
    }

    #[test]
    fn decay_profiles_are_gaussian_type() {
        let k = kernel(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
        let x = GroupElement::new(vec![c(0.3, 0.2), c(-0.1, 0.3), c(0.2, -0.3)]);
        let ts: Vec<f64> = (0..=30).map(|i| -1.5 + 0.1 * i as f64).collect();
        let p = k.decay_profile(1.0, &x, &ts, 1e-6).unwrap();
        assert!(p.len() > 15);
        let tail = &p[p.len() / 2..];
        assert!(tail.windows(2).all(|w| w[1].1 < w[0].1));
        let ratios: Vec<f64> = tail.iter().map(|(t, l)| (p[0].1 - l) / (2.0 * t).exp()).collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi / lo < 4.0, "{ratios:?}");
    }

    #[test]
    fn radial_kde_abelian() {
        use crate::mc::{sample_heat_kernel, SamplerConfig};
        let alg = Arc::new(StratifiedAlgebra::abelian(2).unwrap());
        let k = HeatKernel::new(&alg, KernelQuadratureConfig::default()).unwrap();
        let batch = sample_heat_kernel(&alg, &SamplerConfig::new(1.0, 200_000, 3).with_steps(1)).unwrap();
        let x = [c(0.5, 0.3), c(-0.4, 0.6)];
        let est = radial_kde(&k, &batch, &x, 0.05).unwrap();
        let exact = k.rho(1.0, &x).unwrap();
        assert!(est.z_score(c(exact, 0.0)) < 3.0, "{est:?} vs {exact}");
        assert!(radial_kde(&k, &batch, &x, 0.0).is_err());
    }
}
