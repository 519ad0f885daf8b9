//! Pointwise evaluation of the heat kernel `ρ_s` of `Δ/4` on the complex
//! Heisenberg–Weyl groups, finite-difference horizontal derivatives of
//! `log ρ_s`, and the operator `A = -Δ - h(d·, d log ρ_a)`.
//!
//! Writing `x = (w, c)` with `w ∈ C^{2n}` horizontal and `c ∈ C` central,
//!
//! ```text
//! ρ_s(w, c) = 8 / (π s²(πs)^{2n}) ∫_0^∞ J0(4κ|c|/s) (κ / sinh κ)^{2n} exp(-|w|² κ coth κ / s) κ dκ
//! ```
//!
//! On abelian groups the kernel is the Gaussian `(πs)^{-n} exp(-|z|²/s)`.

mod ops;
mod quad;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::StratifiedAlgebra;

pub use ops::{dbar_residual, radial_kde, Witness};
pub use quad::{bessel_j0, integrate, Quadrature};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelQuadratureConfig {
    /// Absolute tolerance on `ρ`.
    pub abs_tol: f64,
    /// Relative tolerance used when differencing `log ρ`.
    pub rel_tol: f64,
    /// Upper bound for the truncation radius of the κ-integral.
    pub kappa_max: f64,
    pub max_segments: usize,
    /// Step of the horizontal stencil for `log ρ`, relative to `√s`.
    pub fd_spacing: f64,
    /// Step of the ambient stencil in `dbar_residual`.
    pub dbar_spacing: f64,
}

impl Default for KernelQuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-12,
            kappa_max: 40.0,
            max_segments: 4000,
            fd_spacing: 1e-4,
            dbar_spacing: 1e-3,
        }
    }
}

impl KernelQuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.abs_tol,
            self.rel_tol,
            self.kappa_max,
            self.fd_spacing,
            self.dbar_spacing,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || self.max_segments == 0 {
            return Err(Error::Domain(format!("invalid kernel quadrature config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelModel {
    /// `heisenberg_weyl(n)`: horizontal dimension `2n`, one central coordinate.
    Heisenberg {
        n: usize,
    },
    Abelian {
        n: usize,
    },
}

#[derive(Debug, Clone)]
pub struct HeatKernel {
    alg: Arc<StratifiedAlgebra>,
    model: KernelModel,
    cfg: KernelQuadratureConfig,
}

impl HeatKernel {
    /// Accepts any algebra equal (up to naming) to `heisenberg_weyl(n)` or
    /// `abelian(n)`.
    pub fn new(alg: &Arc<StratifiedAlgebra>, cfg: KernelQuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        let layers = alg.layers();
        let model = if alg.step() == 1 {
            KernelModel::Abelian { n: layers[0] }
        } else if layers.len() == 2 && layers[1] == 1 && layers[0].is_multiple_of(2) {
            let n = layers[0] / 2;
            if **alg != StratifiedAlgebra::heisenberg_weyl(n)? {
                return Err(Error::Domain(format!(
                    "{} is not isomorphic in adapted coordinates to heisenberg:{n}",
                    alg.name()
                )));
            }
            KernelModel::Heisenberg { n }
        } else {
            return Err(Error::Domain(format!(
                "heat kernel formula needs a Heisenberg-Weyl or abelian group, got {}",
                alg.name()
            )));
        };
        Ok(Self {
            alg: Arc::clone(alg),
            model,
            cfg,
        })
    }

    pub fn algebra(&self) -> &Arc<StratifiedAlgebra> {
        &self.alg
    }

    pub fn model(&self) -> KernelModel {
        self.model
    }

    pub fn config(&self) -> &KernelQuadratureConfig {
        &self.cfg
    }

    /// `ρ_s(x)`.
    pub fn rho(&self, s: f64, x: &[Complex64]) -> Result<f64> {
        self.rho_tol(s, x, self.cfg.abs_tol, 0.0)
    }

    pub fn log_rho(&self, s: f64, x: &[Complex64]) -> Result<f64> {
        if let KernelModel::Abelian { n } = self.model {
            check_time(s)?;
            self.alg.check_len(x.len())?;
            let r2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            return Ok(-(n as f64) * (PI * s).ln() - r2 / s);
        }
        Ok(self.rho_tol(s, x, 0.0, self.cfg.rel_tol)?.ln())
    }

    fn rho_tol(&self, s: f64, x: &[Complex64], abs_tol: f64, rel_tol: f64) -> Result<f64> {
        check_time(s)?;
        self.alg.check_len(x.len())?;
        let (r2, c) = self.radial(x);
        self.rho_radial(s, r2, c, abs_tol, rel_tol)
    }

    /// `(|w|², |c|)` of a point.
    pub fn radial(&self, x: &[Complex64]) -> (f64, f64) {
        match self.model {
            KernelModel::Abelian { .. } => (x.iter().map(|z| z.norm_sqr()).sum(), 0.0),
            KernelModel::Heisenberg { n } => (x[..2 * n].iter().map(|z| z.norm_sqr()).sum(), x[2 * n].norm()),
        }
    }

    /// `ρ_s` as a function of `|w|²` and `|c|`. A result that is not
    /// strictly positive is reported as a quadrature failure.
    pub fn rho_radial(&self, s: f64, r2: f64, c: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
        self.rho_radial_inner(s, r2, c, abs_tol, rel_tol, true)
    }

    /// As [`HeatKernel::rho_radial`] but returns the raw quadrature value,
    /// which may round to zero or below in the far tail.
    pub fn rho_radial_unchecked(&self, s: f64, r2: f64, c: f64, abs_tol: f64) -> Result<f64> {
        self.rho_radial_inner(s, r2, c, abs_tol, 0.0, false)
    }

    fn rho_radial_inner(&self, s: f64, r2: f64, c: f64, abs_tol: f64, rel_tol: f64, positive: bool) -> Result<f64> {
        match self.model {
            KernelModel::Abelian { n } => Ok((PI * s).powi(-(n as i32)) * (-r2 / s).exp()),
            KernelModel::Heisenberg { n } => {
                let pre = 8.0 / (PI * s * s) * (PI * s).powi(-2 * n as i32);
                let m = 2 * n as i32;
                let integrand = |k: f64| {
                    let (ratio, kcoth) = if k < 1e-4 {
                        let k2 = k * k;
                        (1.0 - k2 / 6.0, 1.0 + k2 / 3.0)
                    } else {
                        (k / k.sinh(), k / k.tanh())
                    };
                    bessel_j0(4.0 * k * c / s) * ratio.powi(m) * (-r2 * kcoth / s).exp() * k
                };
                // stop once κ (2κ e^{-κ})^{2n} e^{-|w|²(κ-1)/s} < 1e-18
                let mut kappa_max = 4.0;
                while kappa_max < self.cfg.kappa_max {
                    let log_tail = kappa_max.ln() + m as f64 * (2.0 * kappa_max).ln()
                        - m as f64 * kappa_max
                        - r2 * (kappa_max - 1.0) / s;
                    if log_tail < -18.0 * std::f64::consts::LN_10 {
                        break;
                    }
                    kappa_max += 1.0;
                }
                let kappa_max = kappa_max.min(self.cfg.kappa_max);
                let pieces = 8 + (4.0 * c / s * kappa_max / PI) as usize / 4;
                let q = integrate(
                    integrand,
                    0.0,
                    kappa_max,
                    pieces.min(self.cfg.max_segments / 2),
                    abs_tol / pre,
                    rel_tol,
                    self.cfg.max_segments,
                )
                .map_err(|e| match e {
                    Error::Quadrature { estimate, error } => Error::Quadrature {
                        estimate: estimate * pre,
                        error: error * pre,
                    },
                    other => other,
                })?;
                let rho = q.value * pre;
                if !(rho > 0.0) && positive {
                    return Err(Error::Quadrature {
                        estimate: rho,
                        error: q.error * pre,
                    });
                }
                Ok(rho)
            }
        }
    }

    /// `∫ ρ_s dm` by nested radial quadrature over `(|w|, |c|)`.
    pub fn normalization(&self, s: f64) -> Result<f64> {
        check_time(s)?;
        let (horizontal_real, central) = match self.model {
            KernelModel::Abelian { n } => (2 * n, false),
            KernelModel::Heisenberg { n } => (4 * n, true),
        };
        let sphere = sphere_area(horizontal_real);
        let r_max = 8.0 * s.sqrt();
        let tol = 1e-7;
        let inner = |r: f64| -> Result<f64> {
            let shell = sphere * r.powi(horizontal_real as i32 - 1);
            if !central {
                return self.rho_radial_unchecked(s, r * r, 0.0, tol).map(|v| v * shell);
            }
            let failure = std::cell::Cell::new(None);
            let q = integrate(
                |c| match self.rho_radial_unchecked(s, r * r, c, 1e-10) {
                    Ok(v) => v * 2.0 * PI * c,
                    Err(e) => {
                        failure.set(Some(e));
                        f64::NAN
                    }
                },
                0.0,
                10.0 * s,
                4,
                tol,
                0.0,
                400,
            );
            if let Some(e) = failure.take() {
                return Err(e);
            }
            Ok(q?.value * shell)
        };
        let failure = std::cell::RefCell::new(None);
        let q = integrate(
            |r| match inner(r) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().replace(e);
                    f64::NAN
                }
            },
            0.0,
            r_max,
            4,
            1e-7,
            0.0,
            400,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(q?.value)
    }
}

fn check_time(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("s must be > 0, got {s}")))
    }
}

/// Surface area of the unit sphere in `R^m`.
pub(crate) fn sphere_area(m: usize) -> f64 {
    // 2π^{m/2} / Γ(m/2), evaluated by the recurrence |S^{m+1}| = 2π/m |S^{m-1}|
    let (mut area, mut k) = if m.is_multiple_of(2) { (2.0 * PI, 2) } else { (2.0, 1) };
    while k < m {
        area *= 2.0 * PI / k as f64;
        k += 2;
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn h(n: usize) -> HeatKernel {
        let alg = Arc::new(StratifiedAlgebra::heisenberg_weyl(n).unwrap());
        HeatKernel::new(&alg, KernelQuadratureConfig::default()).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<Complex64> {
        (0..dim)
            .map(|_| c(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
            .collect()
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(8) - PI.powi(4) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unsupported_groups_are_rejected() {
        let fil = Arc::new(StratifiedAlgebra::filiform(3).unwrap());
        assert!(HeatKernel::new(&fil, KernelQuadratureConfig::default()).is_err());
        let bad = KernelQuadratureConfig {
            abs_tol: 0.0,
            ..Default::default()
        };
        let alg = Arc::new(StratifiedAlgebra::heisenberg_weyl(1).unwrap());
        assert!(HeatKernel::new(&alg, bad).is_err());
        let k = h(1);
        assert!(k.rho(0.0, &[c(0.0, 0.0); 3]).is_err());
        assert!(k.rho(1.0, &[c(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn abelian_mode_is_gaussian() {
        let alg = Arc::new(StratifiedAlgebra::abelian(2).unwrap());
        let k = HeatKernel::new(&alg, KernelQuadratureConfig::default()).unwrap();
        let x = [c(0.3, -0.1), c(0.2, 0.5)];
        let r2 = 0.09 + 0.01 + 0.04 + 0.25;
        let expected = (PI * 0.7).powi(-2) * (-r2 / 0.7f64).exp();
        assert!((k.rho(0.7, &x).unwrap() - expected).abs() < 1e-15);
        assert!((k.normalization(0.7).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn heisenberg_normalization() {
        for (n, s) in [(1, 1.0), (1, 0.5), (2, 1.0)] {
            let total = h(n).normalization(s).unwrap();
            assert!((total - 1.0).abs() < 1e-3, "n={n} s={s}: {total}");
        }
    }

    #[test]
    fn center_marginal_second_moment() {
        // E|c|² = s²/4 on heisenberg:1, matching the sampler's closed form
        let k = h(1);
        let s: f64 = 1.3;
        let sphere = sphere_area(4);
        let moment = integrate(
            |r| {
                integrate(
                    |cc| k.rho_radial_unchecked(s, r * r, cc, 1e-13).unwrap() * 2.0 * PI * cc.powi(3),
                    0.0,
                    10.0 * s,
                    4,
                    1e-10,
                    0.0,
                    400,
                )
                .unwrap()
                .value
                    * sphere
                    * r.powi(3)
            },
            0.0,
            8.0 * s.sqrt(),
            4,
            1e-8,
            0.0,
            400,
        )
        .unwrap()
        .value;
        assert!((moment - s * s / 4.0).abs() < 1e-5, "{moment}");
    }

    #[test]
    fn symmetry_and_positivity() {
        let k = h(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = random_point(&mut rng, 3, 1.0);
            let minus: Vec<_> = x.iter().map(|z| -z).collect();
            let a = k.rho(1.0, &x).unwrap();
            assert!(a > 0.0);
            assert!((a - k.rho(1.0, &minus).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn dilation_scaling_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [1, 2] {
            let k = h(n);
            let alg = k.algebra().clone();
            let big_d = alg.homogeneous_dim() as i32;
            for _ in 0..10 {
                let s = rng.random_range(0.5..2.0);
                let lam = Complex64::from_polar(rng.random_range(0.7..1.4), rng.random_range(0.0..TAU));
                let x = crate::lie::GroupElement::new(random_point(&mut rng, alg.dim(), 0.8));
                let dx = alg.dilate(lam, &x).unwrap();
                let lhs = lam.norm().powi(2 * big_d) * k.rho(s, &dx.coords).unwrap();
                let rhs = k.rho(s / lam.norm_sqr(), &x.coords).unwrap();
                assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
            }
        }
    }
}
