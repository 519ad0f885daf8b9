//! The simply connected group `G = g` in exponential coordinates of the first kind.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::algebra::StratifiedAlgebra;
use super::bch::Letter;
use crate::error::{Error, Result};

/// A point of `G`, stored as its exponential coordinates in the adapted basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub coords: Vec<Complex64>,
}

impl GroupElement {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Self { coords }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            coords: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    pub fn from_real(coords: &[f64]) -> Self {
        Self {
            coords: coords.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// `g^{-1} = -g`.
    pub fn inverse(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|z| -z).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Max-norm distance between coordinate vectors.
    pub fn max_distance(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<Complex64>> for GroupElement {
    fn from(coords: Vec<Complex64>) -> Self {
        Self { coords }
    }
}

impl StratifiedAlgebra {
    /// Group product `x · y`.
    pub fn bch_product(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check_len(x.dim())?;
        self.check_len(y.dim())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.bch_into(&x.coords, &y.coords, &mut out);
        Ok(GroupElement::new(out))
    }

    /// Unchecked group product on coordinate slices.
    ///
    /// Uses `x + y + [x, y]/2` for step at most two and the truncated Dynkin
    /// series otherwise.
    pub(crate) fn bch_into(&self, x: &[Complex64], y: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim();
        for k in 0..n {
            out[k] = x[k] + y[k];
        }
        if self.is_abelian() {
            return;
        }
        if self.step() <= 2 {
            for sc in self.structure_constants() {
                out[sc.k] += 0.5 * x[sc.i] * y[sc.j] * sc.value;
            }
            return;
        }
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        for word in self.dynkin().words() {
            if word.letters.len() < 2 {
                continue;
            }
            let pick = |l: Letter| if l == Letter::X { x } else { y };
            let last = word.letters.len() - 1;
            acc.copy_from_slice(pick(word.letters[last]));
            for &l in word.letters[..last].iter().rev() {
                self.bracket_into(pick(l), &acc, &mut tmp);
                std::mem::swap(&mut acc, &mut tmp);
            }
            let c = *word.coeff.numer() as f64 / *word.coeff.denom() as f64;
            for k in 0..n {
                out[k] += c * acc[k];
            }
        }
    }

    /// Dilation `δ_λ`: coordinate `j` is scaled by `λ^{c_j}`. `λ = 0` is rejected.
    pub fn dilate(&self, lambda: Complex64, x: &GroupElement) -> Result<GroupElement> {
        self.check_len(x.dim())?;
        if lambda == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("dilation by 0 is not an automorphism".into()));
        }
        let powers = self.weight_powers(lambda);
        Ok(GroupElement::new(
            x.coords
                .iter()
                .zip(self.weights())
                .map(|(z, &w)| z * powers[w as usize])
                .collect(),
        ))
    }

    /// `[1, λ, λ^2, ..., λ^m]`.
    pub(crate) fn weight_powers(&self, lambda: Complex64) -> Vec<Complex64> {
        let mut p = Vec::with_capacity(self.step() + 1);
        let mut acc = Complex64::new(1.0, 0.0);
        for _ in 0..=self.step() {
            p.push(acc);
            acc *= lambda;
        }
        p
    }

    /// Homogeneous norm `|x|_1 = Σ_k |x_k|^{1/k}` with `|x_k|` the Euclidean
    /// norm of the layer-`k` block.
    pub fn homogeneous_norm(&self, x: &GroupElement) -> Result<f64> {
        self.check_len(x.dim())?;
        Ok(self.homogeneous_norm_slice(&x.coords))
    }

    pub(crate) fn homogeneous_norm_slice(&self, x: &[Complex64]) -> f64 {
        (1..=self.step())
            .map(|k| {
                let block: f64 = x[self.layer_range(k)].iter().map(|z| z.norm_sqr()).sum();
                block.sqrt().powf(1.0 / k as f64)
            })
            .sum()
    }
}
