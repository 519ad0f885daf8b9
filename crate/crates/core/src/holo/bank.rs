use num_complex::Complex64;

use super::HoloPoly;

/// Several polynomials on the same algebra flattened for fast repeated
/// evaluation: one table of coordinate powers per point is shared by all
/// of them.
#[derive(Debug, Clone)]
pub struct PolyBank {
    dim: usize,
    /// Start of the powers of `z_j` in the table; entry `offset[j] + k` is `z_j^k`.
    offsets: Vec<usize>,
    max_exp: Vec<u32>,
    table_len: usize,
    coeffs: Vec<Complex64>,
    /// Table indices of the factors of each term, delimited by `term_ends`.
    factors: Vec<usize>,
    term_ends: Vec<usize>,
    /// Number of terms in each polynomial, in order.
    poly_ends: Vec<usize>,
}

impl PolyBank {
    pub fn new(polys: &[&HoloPoly]) -> Self {
        let dim = polys.first().map_or(0, |p| p.algebra().dim());
        let mut max_exp = vec![0u32; dim];
        for p in polys {
            debug_assert_eq!(p.algebra().dim(), dim);
            for (e, _) in p.terms() {
                for (m, &k) in max_exp.iter_mut().zip(e) {
                    *m = (*m).max(k);
                }
            }
        }
        let mut offsets = Vec::with_capacity(dim);
        let mut table_len = 0;
        for &m in &max_exp {
            offsets.push(table_len);
            table_len += m as usize + 1;
        }
        let mut bank = Self {
            dim,
            offsets,
            max_exp,
            table_len,
            coeffs: Vec::new(),
            factors: Vec::new(),
            term_ends: Vec::new(),
            poly_ends: Vec::new(),
        };
        for p in polys {
            for (e, c) in p.terms() {
                bank.coeffs.push(*c);
                for (j, &k) in e.iter().enumerate() {
                    if k > 0 {
                        bank.factors.push(bank.offsets[j] + k as usize);
                    }
                }
                bank.term_ends.push(bank.factors.len());
            }
            bank.poly_ends.push(bank.coeffs.len());
        }
        bank
    }

    pub fn len(&self) -> usize {
        self.poly_ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poly_ends.is_empty()
    }

    /// Values of every polynomial at `z`, in the order given to [`PolyBank::new`].
    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        self.eval_into(z, &mut out);
        out
    }

    pub fn eval_into(&self, z: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(z.len(), self.dim);
        let mut table = vec![Complex64::new(1.0, 0.0); self.table_len];
        for (j, zj) in z.iter().enumerate() {
            let base = self.offsets[j];
            for k in 1..=self.max_exp[j] as usize {
                table[base + k] = table[base + k - 1] * zj;
            }
        }
        let mut term = 0;
        let mut start = 0;
        for (slot, &end) in out.iter_mut().zip(&self.poly_ends) {
            let mut sum = Complex64::new(0.0, 0.0);
            while term < end {
                let stop = self.term_ends[term];
                let mut m = self.coeffs[term];
                for &f in &self.factors[start..stop] {
                    m *= table[f];
                }
                sum += m;
                start = stop;
                term += 1;
            }
            *slot = sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::holo::random_poly;
    use crate::lie::StratifiedAlgebra;

    #[test]
    fn matches_direct_evaluation() {
        let alg = Arc::new(StratifiedAlgebra::heisenberg_weyl(2).unwrap());
        let polys: Vec<HoloPoly> = (0..4).map(|s| random_poly(&alg, 2 + s as u32, s)).collect();
        let zero = HoloPoly::zero(&alg);
        let mut refs: Vec<&HoloPoly> = polys.iter().collect();
        refs.insert(2, &zero);
        let bank = PolyBank::new(&refs);
        assert_eq!(bank.len(), 5);
        let z: Vec<Complex64> = (0..5)
            .map(|k| Complex64::new(0.3 * k as f64 - 0.5, 0.7 - 0.2 * k as f64))
            .collect();
        let values = bank.eval(&z);
        for (p, v) in refs.iter().zip(&values) {
            let direct = p.evaluate(&z);
            assert!((direct - v).norm() <= 1e-13 * (1.0 + direct.norm()), "{direct} vs {v}");
        }
        assert_eq!(values[2], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn empty_bank() {
        let bank = PolyBank::new(&[]);
        assert!(bank.is_empty());
        assert!(bank.eval(&[]).is_empty());
    }
}
