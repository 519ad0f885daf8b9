//! Horizontal frame, real inner products on the realification, and the
//! H-type test.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::algebra::StratifiedAlgebra;
use crate::error::{Error, Result};

/// First-layer directions `e_1, ..., e_{d_1}` with the normalization
/// `h_e(dz_j, dz̄_j) = 2`, i.e. `dx_j, dy_j` orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalFrame {
    directions: Vec<usize>,
}

impl HorizontalFrame {
    pub const NORMALIZATION: f64 = 2.0;

    pub fn new(alg: &StratifiedAlgebra) -> Self {
        Self {
            directions: alg.layer_range(1).collect(),
        }
    }

    /// Coordinate indices of the frame directions.
    pub fn directions(&self) -> &[usize] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// The complex basis vector of the `j`-th frame direction.
    pub fn vector(&self, j: usize, dim: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[self.directions[j]] = Complex64::new(1.0, 0.0);
        v
    }
}

/// Positive definite inner product on the realification of `g`.
///
/// Real coordinates are interleaved: index `2k` is `Re z_k`, `2k + 1` is `Im z_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealInnerProduct {
    gram: DMatrix<f64>,
}

impl RealInnerProduct {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(Error::Structural("Gram matrix is not square".into()));
        }
        let asym = (&gram - gram.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::Structural(format!("Gram matrix is not symmetric ({asym:e})")));
        }
        if gram.clone().cholesky().is_none() {
            return Err(Error::Structural("Gram matrix is not positive definite".into()));
        }
        Ok(Self { gram })
    }

    pub fn euclidean(complex_dim: usize) -> Self {
        Self {
            gram: DMatrix::identity(2 * complex_dim, 2 * complex_dim),
        }
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    fn dot(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.gram * v)[(0, 0)]
    }
}

/// Outcome of [`StratifiedAlgebra::h_type_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HTypeOutcome {
    pub pass: bool,
    /// Real dimension of the center.
    pub center_dim: usize,
    /// Largest `|J_u^T J_u - I|` entry over all tested unit `u` (0 if not reached).
    pub max_isometry_defect: f64,
    pub failure: Option<HTypeFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HTypeFailure {
    pub condition: String,
    /// Witness in real interleaved coordinates.
    pub witness: Vec<f64>,
}

const RANDOM_CENTERS: usize = 16;
const ISOMETRY_TOL: f64 = 1e-10;
const NULL_TOL: f64 = 1e-10;

impl StratifiedAlgebra {
    /// Real bracket of realified vectors.
    fn real_bracket(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let cu = to_complex(u);
        let cv = to_complex(v);
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.bracket_into(&cu, &cv, &mut out);
        to_real(&out)
    }

    /// Checks the H-type conditions for `ip`: with `z` the center and
    /// `v = z^⊥`, `span [v, v] = z` and `J_u` (given by `<J_u v, w> = <u, [v, w]>`)
    /// is an isometry of `v` for every unit `u ∈ z`.
    ///
    /// The isometry is checked on an orthonormal basis of the center and on
    /// 16 seeded random unit centers.
    pub fn h_type_check(&self, ip: &RealInnerProduct) -> Result<HTypeOutcome> {
        let n = 2 * self.dim();
        if ip.gram.nrows() != n {
            return Err(Error::Structural(format!(
                "inner product has dimension {}, expected {n}",
                ip.gram.nrows()
            )));
        }
        let basis: Vec<DVector<f64>> = (0..n).map(|i| unit(n, i)).collect();

        // center = kernel of u -> ([u, b_q])_q
        let mut ad = DMatrix::<f64>::zeros(n * n, n);
        for (p, bp) in basis.iter().enumerate() {
            for (q, bq) in basis.iter().enumerate() {
                let b = self.real_bracket(bp, bq);
                for r in 0..n {
                    ad[(q * n + r, p)] = b[r];
                }
            }
        }
        let center = orthonormalize(ip, null_space(&(ad.transpose() * &ad)));
        // v = G-orthogonal complement of the center
        let mut constraints = DMatrix::<f64>::zeros(center.len().max(1), n);
        for (r, z) in center.iter().enumerate() {
            let row = (z.transpose() * &ip.gram).transpose();
            constraints.set_row(r, &row.transpose());
        }
        let horizontal = if center.is_empty() {
            orthonormalize(ip, basis.clone())
        } else {
            orthonormalize(ip, null_space(&(constraints.transpose() * &constraints)))
        };

        let fail = |condition: &str, witness: &DVector<f64>, defect: f64| HTypeOutcome {
            pass: false,
            center_dim: center.len(),
            max_isometry_defect: defect,
            failure: Some(HTypeFailure {
                condition: condition.into(),
                witness: witness.iter().copied().collect(),
            }),
        };

        // span [v, v] = z
        let mut brackets = Vec::new();
        for a in 0..horizontal.len() {
            for b in a + 1..horizontal.len() {
                let w = self.real_bracket(&horizontal[a], &horizontal[b]);
                let residual = &w - project(ip, &center, &w);
                if residual.amax() > NULL_TOL {
                    return Ok(fail("[v, v] is not contained in the center", &w, 0.0));
                }
                brackets.push(w);
            }
        }
        let spanned = if brackets.is_empty() {
            0
        } else {
            let mut m = DMatrix::<f64>::zeros(n, brackets.len());
            for (c, w) in brackets.iter().enumerate() {
                m.set_column(c, w);
            }
            m.rank(NULL_TOL)
        };
        if spanned != center.len() {
            let witness = center.first().cloned().unwrap_or_else(|| DVector::zeros(n));
            return Ok(fail("[v, v] does not span the center", &witness, 0.0));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0x48_5459_5045);
        let mut probes = center.clone();
        for _ in 0..RANDOM_CENTERS {
            let mut u = DVector::<f64>::zeros(n);
            for z in &center {
                let g: f64 = rng.sample(StandardNormal);
                u += z * g;
            }
            let norm = ip.dot(&u, &u).sqrt();
            if norm > 0.0 {
                probes.push(u / norm);
            }
        }
        let k = horizontal.len();
        let mut defect: f64 = 0.0;
        for u in &probes {
            let mut j = DMatrix::<f64>::zeros(k, k);
            for a in 0..k {
                for b in 0..k {
                    j[(b, a)] = ip.dot(u, &self.real_bracket(&horizontal[a], &horizontal[b]));
                }
            }
            let d = (j.transpose() * &j - DMatrix::<f64>::identity(k, k)).amax();
            defect = defect.max(d);
            if d > ISOMETRY_TOL {
                return Ok(fail("J_u is not an isometry of v", u, defect));
            }
        }
        Ok(HTypeOutcome {
            pass: true,
            center_dim: center.len(),
            max_isometry_defect: defect,
            failure: None,
        })
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

fn to_complex(u: &DVector<f64>) -> Vec<Complex64> {
    u.as_slice().chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

fn to_real(u: &[Complex64]) -> DVector<f64> {
    DVector::from_iterator(2 * u.len(), u.iter().flat_map(|z| [z.re, z.im]))
}

/// Orthonormal basis of the kernel of a symmetric positive semidefinite matrix.
fn null_space(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let scale = m.amax().max(1.0);
    let eig = SymmetricEigen::new(m.clone());
    (0..m.nrows())
        .filter(|&i| eig.eigenvalues[i].abs() <= NULL_TOL * scale)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect()
}

/// Gram–Schmidt with respect to `ip`, dropping dependent vectors.
fn orthonormalize(ip: &RealInnerProduct, vs: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for mut v in vs {
        for q in &out {
            let c = ip.dot(q, &v);
            v -= q * c;
        }
        let norm = ip.dot(&v, &v).sqrt();
        if norm > NULL_TOL {
            out.push(v / norm);
        }
    }
    out
}

fn project(ip: &RealInnerProduct, onto: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for q in onto {
        out += q * ip.dot(q, v);
    }
    out
}
