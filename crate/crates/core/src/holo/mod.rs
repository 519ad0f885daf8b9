//! Holomorphic polynomials on a stratified group, graded by weighted degree.

mod bank;
mod fields;
mod ops;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::StratifiedAlgebra;

pub use bank::PolyBank;
pub use fields::{HorizontalGradient, XyPair};
pub use ops::{dim_pk, monomials, random_homogeneous, random_poly, HomogeneousComponent};

/// Exponent tuple `(k_1, ..., k_N)` of a monomial `z_1^{k_1} ... z_N^{k_N}`.
pub type MultiIndex = Vec<u32>;

/// Coefficient tolerance used by [`HoloPoly::approx_eq`] for "exact" comparisons.
pub const COEFF_TOL: f64 = 1e-12;

/// A sparse holomorphic polynomial in the exponential coordinates of `G`.
///
/// Terms are kept in lexicographic multi-index order, which fixes the
/// summation order of [`HoloPoly::evaluate`] and the serialization order.
/// Zero coefficients are never stored.
#[derive(Clone)]
pub struct HoloPoly {
    alg: Arc<StratifiedAlgebra>,
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl fmt::Debug for HoloPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HoloPoly({self})")
    }
}

impl PartialEq for HoloPoly {
    fn eq(&self, other: &Self) -> bool {
        self.same_algebra(other) && self.terms == other.terms
    }
}

impl HoloPoly {
    pub fn zero(alg: &Arc<StratifiedAlgebra>) -> Self {
        Self {
            alg: Arc::clone(alg),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(alg: &Arc<StratifiedAlgebra>, c: Complex64) -> Self {
        Self::monomial(alg, vec![0; alg.dim()], c)
    }

    /// The coordinate function `z_j` (0-based `j`).
    pub fn var(alg: &Arc<StratifiedAlgebra>, j: usize) -> Self {
        let mut exps = vec![0; alg.dim()];
        exps[j] = 1;
        Self::monomial(alg, exps, Complex64::new(1.0, 0.0))
    }

    pub fn monomial(alg: &Arc<StratifiedAlgebra>, exps: MultiIndex, c: Complex64) -> Self {
        assert_eq!(exps.len(), alg.dim(), "multi-index length must match the algebra");
        let mut p = Self::zero(alg);
        p.add_term(exps, c);
        p
    }

    /// Builds a polynomial from `(multi-index, coefficient)` pairs, summing repeats.
    pub fn from_terms(
        alg: &Arc<StratifiedAlgebra>,
        terms: impl IntoIterator<Item = (MultiIndex, Complex64)>,
    ) -> Result<Self> {
        let mut p = Self::zero(alg);
        for (exps, c) in terms {
            if exps.len() != alg.dim() {
                return Err(Error::Dimension {
                    expected: alg.dim(),
                    got: exps.len(),
                });
            }
            p.add_term(exps, c);
        }
        Ok(p)
    }

    pub(crate) fn add_term(&mut self, exps: MultiIndex, c: Complex64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                if c != Complex64::new(0.0, 0.0) {
                    // adding +0 clears negative zeros
                    v.insert(c + Complex64::new(0.0, 0.0));
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == Complex64::new(0.0, 0.0) {
                    o.remove();
                }
            }
        }
    }

    pub fn algebra(&self) -> &Arc<StratifiedAlgebra> {
        &self.alg
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u32]) -> Complex64 {
        self.terms.get(exps).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn same_algebra(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg
    }

    /// Weighted degree `Σ k_j c_j` of a multi-index.
    pub fn weighted_degree(&self, exps: &[u32]) -> u32 {
        exps.iter().zip(self.alg.weights()).map(|(k, c)| k * c).sum()
    }

    /// Largest weighted degree of a stored monomial, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| self.weighted_degree(e)).max()
    }

    /// Value at `z`; monomials are summed in lexicographic multi-index order.
    pub fn evaluate(&self, z: &[Complex64]) -> Complex64 {
        debug_assert_eq!(z.len(), self.alg.dim());
        let mut sum = Complex64::new(0.0, 0.0);
        for (exps, c) in &self.terms {
            let mut m = *c;
            for (zj, &k) in z.iter().zip(exps) {
                if k > 0 {
                    m *= zj.powu(k);
                }
            }
            sum += m;
        }
        sum
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(&self.alg);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    /// Complex partial derivative `∂f/∂z_j`.
    pub fn partial(&self, j: usize) -> Self {
        let mut out = Self::zero(&self.alg);
        for (e, c) in &self.terms {
            if e[j] > 0 {
                let mut d = e.clone();
                d[j] -= 1;
                out.add_term(d, c * e[j] as f64);
            }
        }
        out
    }

    /// Coefficient-wise comparison with absolute tolerance `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_coeff_diff(other) <= tol
    }

    /// Largest coefficient difference (infinite for different algebras).
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        if !self.same_algebra(other) {
            return f64::INFINITY;
        }
        let mut d: f64 = 0.0;
        for (e, c) in &self.terms {
            d = d.max((c - other.coeff(e)).norm());
        }
        for (e, c) in &other.terms {
            if !self.terms.contains_key(e) {
                d = d.max(c.norm());
            }
        }
        d
    }

    /// Canonical JSON form `{"terms": [{"exps": [...], "re": .., "im": ..}, ...]}`.
    pub fn to_json(&self) -> PolyJson {
        PolyJson {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson {
                    exps: e.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }

    pub fn from_json(alg: &Arc<StratifiedAlgebra>, json: &PolyJson) -> Result<Self> {
        Self::from_terms(
            alg,
            json.terms.iter().map(|t| (t.exps.clone(), Complex64::new(t.re, t.im))),
        )
    }

    /// Parses the text grammar, e.g. `z1^2 + (0,1)*z3 - 2.5*z1*z2`.
    /// Variable indices are 1-based.
    pub fn parse(alg: &Arc<StratifiedAlgebra>, text: &str) -> Result<Self> {
        parse::parse_poly(alg, text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyJson {
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exps: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

impl fmt::Display for HoloPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({},{})", c.re, c.im)?;
            for (j, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*z{}", j + 1)?,
                    _ => write!(f, "*z{}^{k}", j + 1)?,
                }
            }
        }
        Ok(())
    }
}

impl Add for &HoloPoly {
    type Output = HoloPoly;
    fn add(self, rhs: &HoloPoly) -> HoloPoly {
        assert!(self.same_algebra(rhs), "polynomials over different algebras");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &HoloPoly {
    type Output = HoloPoly;
    fn sub(self, rhs: &HoloPoly) -> HoloPoly {
        assert!(self.same_algebra(rhs), "polynomials over different algebras");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Neg for &HoloPoly {
    type Output = HoloPoly;
    fn neg(self) -> HoloPoly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &HoloPoly {
    type Output = HoloPoly;
    fn mul(self, rhs: &HoloPoly) -> HoloPoly {
        assert!(self.same_algebra(rhs), "polynomials over different algebras");
        let mut out = HoloPoly::zero(&self.alg);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}
