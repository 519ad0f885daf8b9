//! Left-invariant holomorphic derivatives and the pointwise sub-Riemannian
//! pairings built from them.

use std::sync::Arc;

use num_complex::Complex64;

use super::HoloPoly;
use crate::error::Result;
use crate::lie::{HorizontalFrame, Letter, StratifiedAlgebra};

impl HoloPoly {
    /// Left-invariant derivative `ξ~ f(z) = d/dw f(z · (w ξ))` at `w = 0`.
    ///
    /// The velocity `d/dw BCH(z, wξ)` is the part of the Dynkin series that is
    /// linear in the right argument; it is built symbolically as a vector of
    /// polynomials in `z` and contracted with `∇f`.
    pub fn left_invariant_derivative(&self, xi: &[Complex64]) -> Result<HoloPoly> {
        let alg = Arc::clone(self.algebra());
        alg.check_len(xi.len())?;
        let velocity = bch_velocity(&alg, xi);
        let mut out = HoloPoly::zero(&alg);
        for (k, v) in velocity.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let d = self.partial(k);
            if d.is_zero() {
                continue;
            }
            out = &out + &(v * &d);
        }
        Ok(out)
    }
}

/// `d/dw BCH(z, wξ)|_{w=0}` as polynomials in `z`, one per coordinate.
pub(crate) fn bch_velocity(alg: &Arc<StratifiedAlgebra>, xi: &[Complex64]) -> Vec<HoloPoly> {
    let n = alg.dim();
    let z: Vec<HoloPoly> = (0..n).map(|j| HoloPoly::var(alg, j)).collect();
    let xi: Vec<HoloPoly> = xi.iter().map(|&c| HoloPoly::constant(alg, c)).collect();
    let mut out: Vec<HoloPoly> = vec![HoloPoly::zero(alg); n];
    for word in alg.dynkin().words() {
        if word.letters.iter().filter(|&&l| l == Letter::Y).count() != 1 {
            continue;
        }
        let pick = |l: Letter| if l == Letter::X { &z } else { &xi };
        let last = word.letters.len() - 1;
        let mut acc = pick(word.letters[last]).clone();
        for &l in word.letters[..last].iter().rev() {
            acc = poly_bracket(alg, pick(l), &acc);
        }
        let c = Complex64::new(*word.coeff.numer() as f64 / *word.coeff.denom() as f64, 0.0);
        for (o, a) in out.iter_mut().zip(&acc) {
            *o = &*o + &a.scale(c);
        }
    }
    out
}

fn poly_bracket(alg: &Arc<StratifiedAlgebra>, u: &[HoloPoly], v: &[HoloPoly]) -> Vec<HoloPoly> {
    let mut out = vec![HoloPoly::zero(alg); alg.dim()];
    for sc in alg.structure_constants() {
        if u[sc.i].is_zero() || v[sc.j].is_zero() {
            continue;
        }
        let term = (&u[sc.i] * &v[sc.j]).scale(sc.value);
        out[sc.k] = &out[sc.k] + &term;
    }
    out
}

/// The horizontal derivatives `Z_1 f, ..., Z_{d_1} f` of a holomorphic
/// polynomial, precomputed for repeated pointwise evaluation.
#[derive(Debug, Clone)]
pub struct HorizontalGradient {
    parts: Vec<HoloPoly>,
}

impl HorizontalGradient {
    pub fn new(f: &HoloPoly) -> Self {
        let alg = f.algebra();
        let frame = HorizontalFrame::new(alg);
        let parts = (0..frame.len())
            .map(|j| {
                f.left_invariant_derivative(&frame.vector(j, alg.dim()))
                    .expect("frame vectors have the algebra's dimension")
            })
            .collect();
        Self { parts }
    }

    pub fn parts(&self) -> &[HoloPoly] {
        &self.parts
    }

    /// `(Z_j f)(z)` for every frame direction.
    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.parts.iter().map(|p| p.evaluate(z)).collect()
    }

    /// `h(df, dḡ)(z) = 2 Σ_j Z_j f(z) conj(Z_j g(z))`.
    pub fn pairing(&self, other: &HorizontalGradient, z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, q) in self.parts.iter().zip(&other.parts) {
            acc += p.evaluate(z) * q.evaluate(z).conj();
        }
        acc * HorizontalFrame::NORMALIZATION
    }

    /// `|∇f|^2(z) = 2 Σ_j |Z_j f(z)|^2`.
    pub fn norm_sq(&self, z: &[Complex64]) -> f64 {
        HorizontalFrame::NORMALIZATION * self.parts.iter().map(|p| p.evaluate(z).norm_sqr()).sum::<f64>()
    }
}

/// `X(f ḡ)`, `Y(f ḡ)` and `Δ(f ḡ)` at a point, for holomorphic `f, g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyPair {
    pub x: Complex64,
    pub y: Complex64,
    pub laplacian: Complex64,
}

impl HoloPoly {
    /// `h(df, dḡ)(z)`.
    pub fn h_pairing(&self, g: &HoloPoly, z: &[Complex64]) -> Complex64 {
        HorizontalGradient::new(self).pairing(&HorizontalGradient::new(g), z)
    }

    /// `|∇f|^2(z)` for holomorphic `f`.
    pub fn grad_sq(&self, z: &[Complex64]) -> f64 {
        HorizontalGradient::new(self).norm_sq(z)
    }

    /// `X(fḡ) = (Zf) ḡ + f conj(Zg)`, `Y(fḡ) = i[(Zf) ḡ - f conj(Zg)]`,
    /// `Δ(fḡ) = 2 h(df, dḡ)`.
    pub fn xy_pair_eval(&self, g: &HoloPoly, z: &[Complex64]) -> XyPair {
        let f0 = self.evaluate(z);
        let g0 = g.evaluate(z);
        let zf = self.euler_z().evaluate(z);
        let zg = g.euler_z().evaluate(z);
        let a = zf * g0.conj();
        let b = f0 * zg.conj();
        XyPair {
            x: a + b,
            y: Complex64::new(0.0, 1.0) * (a - b),
            laplacian: self.h_pairing(g, z) * 2.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holo::ops::random_homogeneous;
    use crate::holo::{random_poly, COEFF_TOL};
    use crate::lie::GroupElement;
    use proptest::prelude::*;

    fn h3() -> Arc<StratifiedAlgebra> {
        Arc::new(StratifiedAlgebra::heisenberg_weyl(1).unwrap())
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn e(n: usize, i: usize) -> Vec<Complex64> {
        let mut v = vec![c(0.0, 0.0); n];
        v[i] = c(1.0, 0.0);
        v
    }

    fn p(alg: &Arc<StratifiedAlgebra>, s: &str) -> HoloPoly {
        HoloPoly::parse(alg, s).unwrap()
    }

    #[test]
    fn heisenberg_frame_fields() {
        let alg = h3();
        let z3 = p(&alg, "z3");
        assert_eq!(z3.left_invariant_derivative(&e(3, 0)).unwrap(), p(&alg, "-0.5*z2"));
        assert_eq!(z3.left_invariant_derivative(&e(3, 1)).unwrap(), p(&alg, "0.5*z1"));
        assert!(p(&alg, "z1").left_invariant_derivative(&e(3, 2)).unwrap().is_zero());
        assert_eq!(z3.left_invariant_derivative(&e(3, 2)).unwrap(), p(&alg, "1"));
    }

    /// Finite-difference oracle: d/dw f(z · (wξ)) along a real w step.
    fn fd_derivative(alg: &StratifiedAlgebra, f: &HoloPoly, z: &[Complex64], xi: &[Complex64]) -> Complex64 {
        let h = 1e-4;
        let at = |w: f64| {
            let y = GroupElement::new(xi.iter().map(|x| x * w).collect());
            let q = alg.bch_product(&GroupElement::new(z.to_vec()), &y).unwrap();
            f.evaluate(&q.coords)
        };
        (-at(2.0 * h) + at(h) * 8.0 - at(-h) * 8.0 + at(-2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn derivative_matches_group_law_on_step_three() {
        let alg = Arc::new(StratifiedAlgebra::filiform(3).unwrap());
        let f = random_poly(&alg, 4, 7);
        let z = [c(0.3, -0.2), c(0.5, 0.1), c(-0.4, 0.6), c(0.2, 0.2)];
        for i in 0..4 {
            let xi = e(4, i);
            let sym = f.left_invariant_derivative(&xi).unwrap().evaluate(&z);
            let fd = fd_derivative(&alg, &f, &z, &xi);
            assert!((sym - fd).norm() < 1e-8, "direction {i}: {sym} vs {fd}");
        }
    }

    #[test]
    fn pairing_examples() {
        let alg = h3();
        let z1 = p(&alg, "z1");
        let z3 = p(&alg, "z3");
        let pt = [c(0.3, 1.0), c(-2.0, 0.5), c(4.0, 1.0)];
        assert!((z1.h_pairing(&z1, &pt) - c(2.0, 0.0)).norm() < 1e-15);
        assert_eq!(p(&alg, "3").h_pairing(&z1, &pt), c(0.0, 0.0));
        let expected = 2.0 * ((-0.5 * pt[1]).norm_sqr() + (0.5 * pt[0]).norm_sqr());
        assert!((z3.h_pairing(&z3, &pt) - c(expected, 0.0)).norm() < 1e-14);
        assert_eq!(z1.grad_sq(&pt), 2.0);
        assert_eq!(p(&alg, "2").grad_sq(&pt), 0.0);
        assert!((z3.grad_sq(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn xy_examples() {
        let alg = h3();
        let z1 = p(&alg, "z1");
        let r = z1.xy_pair_eval(&z1, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!((r.x, r.y, r.laplacian), (c(2.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)));
        let r = z1.xy_pair_eval(&p(&alg, "z2"), &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!((r.x, r.y), (c(2.0, 0.0), c(0.0, 0.0)));
        let f = random_homogeneous(&alg, 3, 5);
        let r = f.xy_pair_eval(&f, &[c(0.2, 0.9), c(-1.0, 0.3), c(0.4, 0.4)]);
        assert!(r.y.norm() < 1e-13);
    }

    proptest! {
        #[test]
        fn degree_law(k in 0u32..6, s in any::<u64>()) {
            let alg = Arc::new(StratifiedAlgebra::filiform(3).unwrap());
            let f = random_homogeneous(&alg, k, s);
            for i in 0..alg.dim() {
                let j = alg.weights()[i];
                let d = f.left_invariant_derivative(&e(4, i)).unwrap();
                if k < j {
                    prop_assert!(d.is_zero());
                } else {
                    prop_assert!(d.is_homogeneous_of(k - j));
                }
            }
        }

        #[test]
        fn frame_fields_are_dilation_covariant(s in any::<u64>(), r in 0.3..2.0f64, th in -3.0..3.0f64) {
            let alg = Arc::new(StratifiedAlgebra::filiform(3).unwrap());
            let f = random_poly(&alg, 4, s);
            let lam = Complex64::from_polar(r, th);
            for j in 0..2 {
                let lhs = f.dilate_pullback(lam).unwrap().left_invariant_derivative(&e(4, j)).unwrap();
                let rhs = f.left_invariant_derivative(&e(4, j)).unwrap().dilate_pullback(lam).unwrap().scale(lam);
                prop_assert!(lhs.approx_eq(&rhs, 1e-11));
            }
        }

        #[test]
        fn x_acts_as_euler_on_polynomials(s in any::<u64>(), a in -1.0..1.0f64, b in -1.0..1.0f64) {
            let alg = h3();
            let f = random_poly(&alg, 3, s);
            let one = HoloPoly::constant(&alg, c(1.0, 0.0));
            let z = [c(a, b), c(b, 0.5), c(-a, 0.2)];
            let r = f.xy_pair_eval(&one, &z);
            prop_assert!((r.x - f.euler_z().evaluate(&z)).norm() < 1e-10);
        }
    }

    #[test]
    fn coeff_tol_is_used_for_exactness() {
        let alg = h3();
        let f = p(&alg, "z1 + z3");
        assert!(f.approx_eq(&f.scale(c(1.0 + 1e-14, 0.0)), COEFF_TOL));
    }
}
