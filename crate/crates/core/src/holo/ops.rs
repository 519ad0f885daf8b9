//! Grading, the Euler operator, `B`, its semigroup, dilations and the Fejér projection.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HoloPoly, MultiIndex};
use crate::error::{Error, Result};
use crate::lie::StratifiedAlgebra;

/// The weighted-homogeneous part of degree `degree` of a polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousComponent {
    pub degree: u32,
    pub poly: HoloPoly,
}

impl HoloPoly {
    /// Splits `f` into weighted-homogeneous parts, ordered by degree.
    /// The zero polynomial has no components.
    pub fn homogeneous_decompose(&self) -> Vec<HomogeneousComponent> {
        let mut parts: BTreeMap<u32, HoloPoly> = BTreeMap::new();
        for (e, c) in self.terms() {
            let k = self.weighted_degree(e);
            parts
                .entry(k)
                .or_insert_with(|| HoloPoly::zero(self.algebra()))
                .add_term(e.clone(), *c);
        }
        parts
            .into_iter()
            .map(|(degree, poly)| HomogeneousComponent { degree, poly })
            .collect()
    }

    /// `true` when every monomial has weighted degree `k`.
    pub fn is_homogeneous_of(&self, k: u32) -> bool {
        self.terms().all(|(e, _)| self.weighted_degree(e) == k)
    }

    /// Multiplies each monomial of weighted degree `k` by `weight(k)`.
    fn map_by_degree(&self, weight: impl Fn(u32) -> Complex64) -> HoloPoly {
        let mut out = HoloPoly::zero(self.algebra());
        for (e, c) in self.terms() {
            out.add_term(e.clone(), c * weight(self.weighted_degree(e)));
        }
        out
    }

    /// Euler operator `Zf = Σ_k k f_k`.
    pub fn euler_z(&self) -> HoloPoly {
        self.map_by_degree(|k| Complex64::new(k as f64, 0.0))
    }

    /// Euler operator in coordinate form `Σ_j c_j z_j ∂f/∂z_j`.
    pub fn euler_z_coordinate(&self) -> HoloPoly {
        let alg = Arc::clone(self.algebra());
        let mut out = HoloPoly::zero(&alg);
        for (j, &cj) in alg.weights().iter().enumerate() {
            let term = &HoloPoly::var(&alg, j) * &self.partial(j);
            out = &out + &term.scale(Complex64::new(cj as f64, 0.0));
        }
        out
    }

    /// `Bf = (2/a) Zf`.
    pub fn apply_b(&self, a: f64) -> Result<HoloPoly> {
        check_a(a)?;
        Ok(self.map_by_degree(|k| Complex64::new(2.0 * k as f64 / a, 0.0)))
    }

    /// `e^{-tB} f`: the degree-`k` part is scaled by `e^{-2tk/a}`.
    pub fn semigroup_b(&self, t: f64, a: f64) -> Result<HoloPoly> {
        check_a(a)?;
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("semigroup time must be >= 0, got {t}")));
        }
        Ok(self.map_by_degree(|k| Complex64::new((-2.0 * t * k as f64 / a).exp(), 0.0)))
    }

    /// Pullback `f ∘ δ_λ`: the degree-`k` part is scaled by `λ^k`.
    pub fn dilate_pullback(&self, lambda: Complex64) -> Result<HoloPoly> {
        if lambda == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("dilation by 0 is not an automorphism".into()));
        }
        Ok(self.map_by_degree(|k| lambda.powu(k)))
    }

    /// Fejér (Cesàro) projection `Σ_{k<n} (1 - k/n) f_k`.
    pub fn fejer_project(&self, n: u32) -> Result<HoloPoly> {
        if n == 0 {
            return Err(Error::Domain("Fejér index must be >= 1".into()));
        }
        Ok(self.map_by_degree(|k| {
            let w = if k < n { 1.0 - k as f64 / n as f64 } else { 0.0 };
            Complex64::new(w, 0.0)
        }))
    }
}

fn check_a(a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("heat-kernel time a must be > 0, got {a}")));
    }
    Ok(())
}

/// All multi-indices of weighted degree exactly `k`, in lexicographic order.
pub(crate) fn multi_indices_of_degree(weights: &[u32], k: u32) -> Vec<MultiIndex> {
    fn rec(weights: &[u32], pos: usize, left: u32, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if pos == weights.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for e in 0..=left / weights[pos] {
            cur[pos] = e;
            rec(weights, pos + 1, left - e * weights[pos], cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0; weights.len()];
    rec(weights, 0, k, &mut cur, &mut out);
    out.sort();
    out
}

/// `dim P_k`: the number of monomials of weighted degree `k`.
pub fn dim_pk(alg: &StratifiedAlgebra, k: u32) -> usize {
    multi_indices_of_degree(alg.weights(), k).len()
}

/// Seeded polynomial with every monomial of weighted degree `<= max_degree`
/// and coefficients uniform on the unit disc.
pub fn random_poly(alg: &Arc<StratifiedAlgebra>, max_degree: u32, seed: u64) -> HoloPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = HoloPoly::zero(alg);
    for k in 0..=max_degree {
        for e in multi_indices_of_degree(alg.weights(), k) {
            let r = rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            out.add_term(e, Complex64::from_polar(r, theta));
        }
    }
    out
}

/// The monomials `z^α` of weighted degree `k`, in lexicographic order.
pub fn monomials(alg: &Arc<StratifiedAlgebra>, k: u32) -> Vec<HoloPoly> {
    multi_indices_of_degree(alg.weights(), k)
        .into_iter()
        .map(|e| HoloPoly::monomial(alg, e, Complex64::new(1.0, 0.0)))
        .collect()
}

/// Seeded polynomial in `P_k` only.
pub fn random_homogeneous(alg: &Arc<StratifiedAlgebra>, k: u32, seed: u64) -> HoloPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = HoloPoly::zero(alg);
    for e in multi_indices_of_degree(alg.weights(), k) {
        let r = rng.random::<f64>().sqrt();
        let theta = std::f64::consts::TAU * rng.random::<f64>();
        out.add_term(e, Complex64::from_polar(r, theta));
    }
    out
}
