//! Flattened monomial lists for the enumeration hot loops.
//!
//! [`SmallPoly`] evaluates in `i128` when a caller-supplied coordinate bound
//! guarantees no overflow, and modulo `m < 2^63` otherwise. [`FloatPoly`] is
//! the `f64` twin used by quadrature and root finding.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::poly::{multiplicity, CubicPolynomial, IntPoly};

#[derive(Clone, Copy, Debug)]
struct Term {
    coef: i128,
    idx: [u8; 3],
    deg: u8,
}

/// Monomial list with `i128` coefficients.
#[derive(Clone, Debug)]
pub struct SmallPoly {
    n: usize,
    terms: Vec<Term>,
    abs_sum: [f64; 4],
}

impl SmallPoly {
    /// `None` if a coefficient does not fit in `i128` or `n > 255`.
    pub fn new(phi: &CubicPolynomial) -> Option<SmallPoly> {
        Self::from_monomials(phi.n(), &phi.monomials())
    }

    pub fn from_int(phi: &IntPoly) -> Option<SmallPoly> {
        Self::from_monomials(phi.n(), phi.terms())
    }

    pub fn from_monomials(n: usize, monomials: &[(Vec<usize>, BigInt)]) -> Option<SmallPoly> {
        if n > 255 {
            return None;
        }
        let mut terms = Vec::new();
        let mut abs_sum = [0.0f64; 4];
        for (idx, c) in monomials {
            let coef = c.to_i128()?;
            let mut a = [0u8; 3];
            for (slot, &i) in a.iter_mut().zip(idx) {
                *slot = i as u8;
            }
            abs_sum[idx.len()] += (coef as f64).abs();
            terms.push(Term {
                coef,
                idx: a,
                deg: idx.len() as u8,
            });
        }
        Some(SmallPoly {
            n,
            terms,
            abs_sum,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether exact `i128` evaluation is safe for all `|x_i| <= bound`.
    pub fn fits(&self, bound: u64) -> bool {
        let b = bound.max(1) as f64;
        let worst: f64 = (0..4).map(|d| self.abs_sum[d] * b.powi(d as i32)).sum();
        // gradient is bounded by 3 * worst / b for b >= 1, also covered
        worst < 2f64.powi(120)
    }

    #[inline]
    pub fn eval(&self, x: &[i64]) -> i128 {
        let mut s: i128 = 0;
        for t in &self.terms {
            let mut v = t.coef;
            for &i in &t.idx[..t.deg as usize] {
                v *= x[i as usize] as i128;
            }
            s += v;
        }
        s
    }

    /// Value modulo `m` with residues `x_i` in `[0, m)`.
    #[inline]
    pub fn eval_mod(&self, x: &[u64], m: u64) -> u64 {
        let mm = m as u128;
        let mut s: u128 = 0;
        for t in &self.terms {
            let mut v = t.coef.rem_euclid(m as i128) as u128;
            for &i in &t.idx[..t.deg as usize] {
                v = v * (x[i as usize] as u128) % mm;
            }
            s += v;
            if s >= mm {
                s -= mm;
            }
        }
        s as u64
    }

    /// Gradient in `i128` (safe under the same bound as [`SmallPoly::fits`]).
    pub fn gradient(&self, x: &[i64], out: &mut [i128]) {
        out.iter_mut().for_each(|g| *g = 0);
        for t in &self.terms {
            let d = t.deg as usize;
            for pos in 0..d {
                let mut v = t.coef;
                for (q, &i) in t.idx[..d].iter().enumerate() {
                    if q != pos {
                        v *= x[i as usize] as i128;
                    }
                }
                out[t.idx[pos] as usize] += v;
            }
        }
    }

    /// Gradient modulo `m`.
    pub fn gradient_mod(&self, x: &[u64], m: u64, out: &mut [u64]) {
        let mm = m as u128;
        out.iter_mut().for_each(|g| *g = 0);
        for t in &self.terms {
            let d = t.deg as usize;
            let c = t.coef.rem_euclid(m as i128) as u128;
            for pos in 0..d {
                let mut v = c;
                for (q, &i) in t.idx[..d].iter().enumerate() {
                    if q != pos {
                        v = v * (x[i as usize] as u128) % mm;
                    }
                }
                let slot = &mut out[t.idx[pos] as usize];
                *slot = ((*slot as u128 + v) % mm) as u64;
            }
        }
    }

    /// Coefficients `[a0, a1, a2, a3]` of `t -> phi(x with x_var = t)`.
    pub fn fiber(&self, x: &[i64], var: usize) -> [i128; 4] {
        let mut c = [0i128; 4];
        for t in &self.terms {
            let mut v = t.coef;
            let mut power = 0;
            for &i in &t.idx[..t.deg as usize] {
                if i as usize == var {
                    power += 1;
                } else {
                    v *= x[i as usize] as i128;
                }
            }
            c[power] += v;
        }
        c
    }
}

/// Monomial list with `f64` coefficients.
#[derive(Clone, Debug)]
pub struct FloatPoly {
    n: usize,
    terms: Vec<(f64, [usize; 3], usize)>,
}

impl FloatPoly {
    pub fn new(phi: &CubicPolynomial) -> FloatPoly {
        Self::from_monomials(phi.n(), &phi.monomials())
    }

    pub fn from_int(phi: &IntPoly) -> FloatPoly {
        Self::from_monomials(phi.n(), phi.terms())
    }

    pub fn from_monomials(n: usize, monomials: &[(Vec<usize>, BigInt)]) -> FloatPoly {
        let terms = monomials
            .iter()
            .map(|(idx, c)| {
                let mut a = [0usize; 3];
                a[..idx.len()].copy_from_slice(idx);
                (big_to_f64(c), a, idx.len())
            })
            .collect();
        FloatPoly { n, terms }
    }

    /// Homogeneous cubic part only, with tensor expansion.
    pub fn cubic_only(phi: &CubicPolynomial) -> FloatPoly {
        let terms = phi
            .cubic_entries()
            .filter(|(_, c)| !c.is_zero())
            .map(|((i, j, k), c)| (big_to_f64(c) * f64::from(multiplicity(i, j, k)), [i, j, k], 3))
            .collect();
        FloatPoly { n: phi.n(), terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, idx, d)| idx[..*d].iter().fold(*c, |v, &i| v * x[i]))
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for (c, idx, d) in &self.terms {
            for pos in 0..*d {
                let mut v = *c;
                for (q, &i) in idx[..*d].iter().enumerate() {
                    if q != pos {
                        v *= x[i];
                    }
                }
                g[idx[pos]] += v;
            }
        }
        g
    }

    /// Coefficients of `t -> f(x with x_var = t)`.
    pub fn fiber(&self, x: &[f64], var: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (c, idx, d) in &self.terms {
            let mut v = *c;
            let mut power = 0;
            for &i in &idx[..*d] {
                if i == var {
                    power += 1;
                } else {
                    v *= x[i];
                }
            }
            out[power] += v;
        }
        out
    }
}

pub fn big_to_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::watson;

    #[test]
    fn small_poly_matches_exact() {
        let w = watson(4).poly;
        let s = SmallPoly::new(&w).unwrap();
        assert!(s.fits(1000));
        let f = FloatPoly::new(&w);
        for x in [[0, 0, 0, 0], [1, -2, 3, 4], [-7, 5, 0, 2]] {
            let exact = w.evaluate_i64(&x).unwrap();
            assert_eq!(BigInt::from(s.eval(&x)), exact);
            let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            assert!((f.value(&xf) - big_to_f64(&exact)).abs() < 1e-9);
            for m in [2u64, 9, 125, 1_000_003] {
                let r: Vec<u64> = x.iter().map(|&v| v.rem_euclid(m as i64) as u64).collect();
                let expect = exact.clone() % BigInt::from(m);
                let expect = (expect + BigInt::from(m)) % BigInt::from(m);
                assert_eq!(BigInt::from(s.eval_mod(&r, m)), expect);
            }
            let xb: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
            let g = w.gradient(&xb).unwrap();
            let mut gs = vec![0i128; 4];
            s.gradient(&x, &mut gs);
            assert_eq!(gs.iter().map(|&v| BigInt::from(v)).collect::<Vec<_>>(), g);
            let gf = f.gradient(&xf);
            for (a, b) in gf.iter().zip(&g) {
                assert!((a - big_to_f64(b)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fiber_reassembles_value() {
        let w = watson(3).poly;
        let s = SmallPoly::new(&w).unwrap();
        let x = [5, -2, 7];
        let c = s.fiber(&x, 0);
        let t = x[0] as i128;
        assert_eq!(c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t, s.eval(&x));
    }
}
