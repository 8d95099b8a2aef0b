//! Exact cubic polynomials with a symmetric integral coefficient tensor.
//!
//! A polynomial is stored as `C(x) + Q(x) + L(x) + N` where the cubic part is
//! `sum_{i,j,k} c_{ijk} x_i x_j x_k` over all ordered index triples with a fully
//! symmetric tensor `c`. Only the entries with `i <= j <= k` are stored and every
//! read goes through [`CubicPolynomial::c`], which sorts the indices first. The
//! quadratic part is stored by monomial coefficients `q_{ij}` (`i <= j`), so
//! `Q(x) = sum_{i<=j} q_{ij} x_i x_j`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Number of ordered triples represented by the canonical triple `(i, j, k)`.
pub fn multiplicity(i: usize, j: usize, k: usize) -> u32 {
    if i == j && j == k {
        1
    } else if i == j || j == k || i == k {
        3
    } else {
        6
    }
}

fn sort3(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let mut a = [i, j, k];
    a.sort_unstable();
    (a[0], a[1], a[2])
}

fn cubic_len(n: usize) -> usize {
    n * (n + 1) * (n + 2) / 6
}

fn cubic_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i <= j && j <= k && k < n);
    let mut idx = 0;
    for a in 0..i {
        let m = n - a;
        idx += m * (m + 1) / 2;
    }
    for b in i..j {
        idx += n - b;
    }
    idx + (k - j)
}

fn quad_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    let mut idx = 0;
    for a in 0..i {
        idx += n - a;
    }
    idx + (j - i)
}

/// Canonical triples `(i, j, k)` with `i <= j <= k < n` in storage order.
pub fn canonical_triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| (i..n).flat_map(move |j| (j..n).map(move |k| (i, j, k))))
}

/// Canonical pairs `(i, j)` with `i <= j < n` in storage order.
pub fn canonical_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubicPolynomial {
    n: usize,
    cubic: Vec<BigInt>,
    quad: Vec<BigInt>,
    lin: Vec<BigInt>,
    constant: BigInt,
}

/// A polynomial produced from monomial input together with the factor by
/// which it was multiplied to make the cubic tensor integral.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symmetrized {
    pub poly: CubicPolynomial,
    pub scale: u32,
}

/// Symmetric integer matrix `M(x)_{ij} = sum_k c_{ijk} x_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HessianMatrix(pub Vec<Vec<BigInt>>);

impl HessianMatrix {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn mul_vec(&self, y: &[BigInt]) -> Vec<BigInt> {
        self.0
            .iter()
            .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.0[i][j] == self.0[j][i]))
    }

    pub fn rank(&self) -> usize {
        crate::linalg::rank_big(&self.0)
    }
}

impl CubicPolynomial {
    /// The zero polynomial in `n` variables.
    pub fn zero(n: usize) -> Self {
        CubicPolynomial {
            n,
            cubic: vec![BigInt::zero(); cubic_len(n)],
            quad: vec![BigInt::zero(); n * (n + 1) / 2],
            lin: vec![BigInt::zero(); n],
            constant: BigInt::zero(),
        }
    }

    /// Build from tensor entries `((i, j, k), c_ijk)`, quadratic monomial
    /// coefficients `((i, j), q_ij)`, the linear part and the constant.
    /// Indices are 0-based and may be given in any order; repeated entries add up.
    pub fn from_parts(
        n: usize,
        cubic: &[((usize, usize, usize), BigInt)],
        quad: &[((usize, usize), BigInt)],
        lin: &[BigInt],
        constant: BigInt,
    ) -> Result<Self> {
        let mut p = CubicPolynomial::zero(n);
        for ((i, j, k), c) in cubic {
            if *i >= n || *j >= n || *k >= n {
                return Err(LabError::InvalidInput(format!(
                    "cubic index ({}, {}, {}) out of range for n = {n}",
                    i + 1,
                    j + 1,
                    k + 1
                )));
            }
            let (a, b, d) = sort3(*i, *j, *k);
            p.cubic[cubic_index(n, a, b, d)] += c;
        }
        for ((i, j), q) in quad {
            if *i >= n || *j >= n {
                return Err(LabError::InvalidInput(format!(
                    "quadratic index ({}, {}) out of range for n = {n}",
                    i + 1,
                    j + 1
                )));
            }
            let (a, b) = if i <= j { (*i, *j) } else { (*j, *i) };
            p.quad[quad_index(n, a, b)] += q;
        }
        if !lin.is_empty() && lin.len() != n {
            return Err(LabError::DimensionMismatch {
                expected: n,
                got: lin.len(),
            });
        }
        for (i, l) in lin.iter().enumerate() {
            p.lin[i] = l.clone();
        }
        p.constant = constant;
        Ok(p)
    }

    /// Convenience constructor from small integers.
    pub fn from_small(
        n: usize,
        cubic: &[((usize, usize, usize), i64)],
        quad: &[((usize, usize), i64)],
        lin: &[i64],
        constant: i64,
    ) -> Result<Self> {
        let c: Vec<_> = cubic.iter().map(|(t, v)| (*t, BigInt::from(*v))).collect();
        let q: Vec<_> = quad.iter().map(|(t, v)| (*t, BigInt::from(*v))).collect();
        let l: Vec<_> = lin.iter().map(|v| BigInt::from(*v)).collect();
        Self::from_parts(n, &c, &q, &l, BigInt::from(constant))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Tensor entry `c_{ijk}` for any index order.
    pub fn c(&self, i: usize, j: usize, k: usize) -> &BigInt {
        let (a, b, d) = sort3(i, j, k);
        &self.cubic[cubic_index(self.n, a, b, d)]
    }

    pub fn set_c(&mut self, i: usize, j: usize, k: usize, value: BigInt) {
        let (a, b, d) = sort3(i, j, k);
        let idx = cubic_index(self.n, a, b, d);
        self.cubic[idx] = value;
    }

    /// Monomial coefficient of `x_i x_j` in `Q`.
    pub fn q(&self, i: usize, j: usize) -> &BigInt {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &self.quad[quad_index(self.n, a, b)]
    }

    pub fn l(&self, i: usize) -> &BigInt {
        &self.lin[i]
    }

    pub fn lin(&self) -> &[BigInt] {
        &self.lin
    }

    pub fn constant(&self) -> &BigInt {
        &self.constant
    }

    /// Canonical tensor entries with `i <= j <= k`.
    pub fn cubic_entries(&self) -> impl Iterator<Item = ((usize, usize, usize), &BigInt)> + '_ {
        canonical_triples(self.n).zip(self.cubic.iter())
    }

    pub fn quad_entries(&self) -> impl Iterator<Item = ((usize, usize), &BigInt)> + '_ {
        canonical_pairs(self.n).zip(self.quad.iter())
    }

    /// Maximum absolute value of all stored coefficients, recomputed on every call.
    pub fn height(&self) -> BigInt {
        self.cubic
            .iter()
            .chain(self.quad.iter())
            .chain(self.lin.iter())
            .chain(std::iter::once(&self.constant))
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.quad.iter().all(Zero::is_zero)
            && self.lin.iter().all(Zero::is_zero)
            && self.constant.is_zero()
    }

    pub fn cubic_is_zero(&self) -> bool {
        self.cubic.iter().all(Zero::is_zero)
    }

    /// The homogeneous cubic part `C` as a polynomial of its own.
    pub fn cubic_part(&self) -> CubicPolynomial {
        CubicPolynomial {
            cubic: self.cubic.clone(),
            ..CubicPolynomial::zero(self.n)
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n {
            Err(LabError::DimensionMismatch {
                expected: self.n,
                got: len,
            })
        } else {
            Ok(())
        }
    }

    pub fn evaluate_cubic(&self, x: &[BigInt]) -> Result<BigInt> {
        self.check_dim(x.len())?;
        let mut total = BigInt::zero();
        for ((i, j, k), c) in self.cubic_entries() {
            if c.is_zero() {
                continue;
            }
            total += c * BigInt::from(multiplicity(i, j, k)) * &x[i] * &x[j] * &x[k];
        }
        Ok(total)
    }

    pub fn evaluate_quad(&self, x: &[BigInt]) -> Result<BigInt> {
        self.check_dim(x.len())?;
        Ok(self
            .quad_entries()
            .filter(|(_, q)| !q.is_zero())
            .map(|((i, j), q)| q * &x[i] * &x[j])
            .sum())
    }

    pub fn evaluate_lin(&self, x: &[BigInt]) -> Result<BigInt> {
        self.check_dim(x.len())?;
        Ok(self.lin.iter().zip(x).map(|(l, v)| l * v).sum())
    }

    /// Exact value of the polynomial at an integer point.
    pub fn evaluate(&self, x: &[BigInt]) -> Result<BigInt> {
        Ok(self.evaluate_cubic(x)? + self.evaluate_quad(x)? + self.evaluate_lin(x)? + &self.constant)
    }

    pub fn evaluate_i64(&self, x: &[i64]) -> Result<BigInt> {
        let v: Vec<BigInt> = x.iter().map(|&t| BigInt::from(t)).collect();
        self.evaluate(&v)
    }

    /// Real evaluation in floating point.
    pub fn evaluate_f64(&self, x: &[f64]) -> f64 {
        let f = crate::kernel::FloatPoly::new(self);
        f.value(x)
    }

    pub fn hessian(&self, x: &[BigInt]) -> Result<HessianMatrix> {
        self.check_dim(x.len())?;
        let n = self.n;
        let mut m = vec![vec![BigInt::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let v: BigInt = (0..n).map(|k| self.c(i, j, k) * &x[k]).sum();
                m[j][i] = v.clone();
                m[i][j] = v;
            }
        }
        Ok(HessianMatrix(m))
    }

    /// `B_i(x, y) = sum_{j,k} c_{ijk} x_j y_k`.
    pub fn bilinear(&self, x: &[BigInt], y: &[BigInt]) -> Result<Vec<BigInt>> {
        self.check_dim(x.len())?;
        self.check_dim(y.len())?;
        let n = self.n;
        Ok((0..n)
            .map(|i| {
                let mut s = BigInt::zero();
                for j in 0..n {
                    if x[j].is_zero() {
                        continue;
                    }
                    for k in 0..n {
                        let c = self.c(i, j, k);
                        if !c.is_zero() {
                            s += c * &x[j] * &y[k];
                        }
                    }
                }
                s
            })
            .collect())
    }

    /// Gradient of the cubic part, `3 B(x, x)`.
    pub fn gradient_cubic(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        Ok(self
            .bilinear(x, x)?
            .into_iter()
            .map(|b| b * 3)
            .collect())
    }

    /// Full gradient of the polynomial.
    pub fn gradient(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        let mut g = self.gradient_cubic(x)?;
        for i in 0..self.n {
            for j in 0..self.n {
                let q = self.q(i, j);
                if q.is_zero() {
                    continue;
                }
                if i == j {
                    g[i] += q * &x[i] * 2;
                } else {
                    g[i] += q * &x[j];
                }
            }
            g[i] += &self.lin[i];
        }
        Ok(g)
    }

    /// Indices `i` for which `d^2 phi / dx_i^2` vanishes identically.
    pub fn vanishing_second_derivatives(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.q(i, i).is_zero() && (0..self.n).all(|k| self.c(i, i, k).is_zero()))
            .collect()
    }

    /// The cubic form in `n + 1` variables whose value at `(x, 1)` is
    /// `scale * phi(x)`. The new variable is the last one.
    pub fn homogenize(&self) -> Symmetrized {
        let n = self.n;
        let mut monos: Vec<(Vec<usize>, BigInt)> = Vec::new();
        for ((i, j, k), c) in self.cubic_entries() {
            if !c.is_zero() {
                monos.push((vec![i, j, k], c * BigInt::from(multiplicity(i, j, k))));
            }
        }
        for ((i, j), q) in self.quad_entries() {
            if !q.is_zero() {
                monos.push((vec![i, j, n], q.clone()));
            }
        }
        for (i, l) in self.lin.iter().enumerate() {
            if !l.is_zero() {
                monos.push((vec![i, n, n], l.clone()));
            }
        }
        if !self.constant.is_zero() {
            monos.push((vec![n, n, n], self.constant.clone()));
        }
        let s = symmetrize(n + 1, &monos).expect("homogenization stays cubic");
        debug_assert!(s.poly.is_homogeneous());
        s
    }

    /// `phi(U y)` for an integer `n x n` matrix `U`.
    pub fn transform(&self, u: &[Vec<BigInt>]) -> Result<CubicPolynomial> {
        let n = self.n;
        if u.len() != n || u.iter().any(|r| r.len() != n) {
            return Err(LabError::InvalidInput("transform must be n x n".into()));
        }
        let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let mut full = vec![BigInt::zero(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    full[idx(i, j, k)] = self.c(i, j, k).clone();
                }
            }
        }
        // three successive mode products
        let mut t1 = vec![BigInt::zero(); n * n * n];
        for a in 0..n {
            for i in 0..n {
                if u[i][a].is_zero() {
                    continue;
                }
                for j in 0..n {
                    for k in 0..n {
                        let v = &full[idx(i, j, k)];
                        if !v.is_zero() {
                            t1[idx(a, j, k)] += &u[i][a] * v;
                        }
                    }
                }
            }
        }
        let mut t2 = vec![BigInt::zero(); n * n * n];
        for a in 0..n {
            for b in 0..n {
                for j in 0..n {
                    if u[j][b].is_zero() {
                        continue;
                    }
                    for k in 0..n {
                        let v = &t1[idx(a, j, k)];
                        if !v.is_zero() {
                            t2[idx(a, b, k)] += &u[j][b] * v;
                        }
                    }
                }
            }
        }
        let mut out = CubicPolynomial::zero(n);
        for (a, b, c) in canonical_triples(n) {
            let v: BigInt = (0..n).map(|k| &u[k][c] * &t2[idx(a, b, k)]).sum();
            out.set_c(a, b, c, v);
        }
        // quadratic part through the doubled symmetric matrix
        let mut qd = vec![vec![BigInt::zero(); n]; n];
        for ((i, j), q) in self.quad_entries() {
            if i == j {
                qd[i][i] = q * 2;
            } else {
                qd[i][j] = q.clone();
                qd[j][i] = q.clone();
            }
        }
        let mut qu = vec![vec![BigInt::zero(); n]; n];
        for i in 0..n {
            for b in 0..n {
                qu[i][b] = (0..n).map(|j| &qd[i][j] * &u[j][b]).sum();
            }
        }
        for (a, b) in canonical_pairs(n) {
            let v: BigInt = (0..n).map(|i| &u[i][a] * &qu[i][b]).sum();
            let coef = if a == b {
                debug_assert!(v.is_even());
                v / 2
            } else {
                v
            };
            out.quad[quad_index(n, a, b)] = coef;
        }
        for a in 0..n {
            out.lin[a] = (0..n).map(|i| &self.lin[i] * &u[i][a]).sum();
        }
        out.constant = self.constant.clone();
        Ok(out)
    }

    /// `g(y) = phi(shift + step * y)`.
    pub fn affine_substitute(&self, shift: &[BigInt], step: &BigInt) -> Result<CubicPolynomial> {
        self.check_dim(shift.len())?;
        let n = self.n;
        let t2 = step * step;
        let t3 = &t2 * step;
        let mut out = CubicPolynomial::zero(n);
        for (slot, c) in out.cubic.iter_mut().zip(&self.cubic) {
            *slot = c * &t3;
        }
        let hs = self.hessian(shift)?;
        for (i, j) in canonical_pairs(n) {
            let from_cubic = if i == j { &hs.0[i][i] * 3 } else { &hs.0[i][j] * 6 };
            out.quad[quad_index(n, i, j)] = (from_cubic + self.q(i, j)) * &t2;
        }
        let grad = self.gradient(shift)?;
        for i in 0..n {
            out.lin[i] = &grad[i] * step;
        }
        out.constant = self.evaluate(shift)?;
        Ok(out)
    }

    /// Divide every coefficient by `d` when all are divisible.
    pub fn div_exact(&self, d: &BigInt) -> Option<CubicPolynomial> {
        let all = self
            .cubic
            .iter()
            .chain(&self.quad)
            .chain(&self.lin)
            .chain(std::iter::once(&self.constant));
        if all.clone().any(|c| !c.is_multiple_of(d)) {
            return None;
        }
        let div = |v: &Vec<BigInt>| v.iter().map(|c| c / d).collect::<Vec<_>>();
        Some(CubicPolynomial {
            n: self.n,
            cubic: div(&self.cubic),
            quad: div(&self.quad),
            lin: div(&self.lin),
            constant: &self.constant / d,
        })
    }

    pub fn scaled(&self, factor: &BigInt) -> CubicPolynomial {
        let mul = |v: &Vec<BigInt>| v.iter().map(|c| c * factor).collect::<Vec<_>>();
        CubicPolynomial {
            n: self.n,
            cubic: mul(&self.cubic),
            quad: mul(&self.quad),
            lin: mul(&self.lin),
            constant: &self.constant * factor,
        }
    }

    /// Relabel and flip coordinates: new variable `a` is `sign[a] * x_{perm[a]}`.
    pub fn permute_signs(&self, perm: &[usize], signs: &[i8]) -> Result<CubicPolynomial> {
        let n = self.n;
        let mut u = vec![vec![BigInt::zero(); n]; n];
        for a in 0..n {
            u[perm[a]][a] = BigInt::from(signs[a]);
        }
        self.transform(&u)
    }

    /// Monomial coefficients of the whole polynomial keyed by sorted index lists.
    pub fn monomials(&self) -> Vec<(Vec<usize>, BigInt)> {
        let mut out = Vec::new();
        for ((i, j, k), c) in self.cubic_entries() {
            if !c.is_zero() {
                out.push((vec![i, j, k], c * BigInt::from(multiplicity(i, j, k))));
            }
        }
        for ((i, j), q) in self.quad_entries() {
            if !q.is_zero() {
                out.push((vec![i, j], q.clone()));
            }
        }
        for (i, l) in self.lin.iter().enumerate() {
            if !l.is_zero() {
                out.push((vec![i], l.clone()));
            }
        }
        if !self.constant.is_zero() {
            out.push((vec![], self.constant.clone()));
        }
        out
    }
}

impl fmt::Display for CubicPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let monos = self.monomials();
        if monos.is_empty() {
            return write!(f, "0");
        }
        for (t, (idx, c)) in monos.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if t == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let mut powers: BTreeMap<usize, u32> = BTreeMap::new();
            for &i in idx {
                *powers.entry(i).or_default() += 1;
            }
            let vars: Vec<String> = powers
                .iter()
                .map(|(i, e)| if *e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
                .collect();
            if vars.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", a, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Turn monomial coefficients (each monomial a list of 0-based variable
/// indices, length = degree) into a polynomial with a symmetric integral
/// tensor. The polynomial is multiplied by 6 when some tensor entry would
/// otherwise be fractional; the factor is reported.
pub fn symmetrize(n: usize, monomials: &[(Vec<usize>, BigInt)]) -> Result<Symmetrized> {
    let mut cubic: BTreeMap<(usize, usize, usize), BigInt> = BTreeMap::new();
    let mut quad: BTreeMap<(usize, usize), BigInt> = BTreeMap::new();
    let mut lin = vec![BigInt::zero(); n];
    let mut constant = BigInt::zero();
    for (idx, coef) in monomials {
        if idx.len() > 3 {
            return Err(LabError::DegreeTooHigh(idx.len()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(LabError::InvalidInput(format!("variable x{} out of range for n = {n}", bad + 1)));
        }
        let mut s = idx.clone();
        s.sort_unstable();
        match s.len() {
            3 => *cubic.entry((s[0], s[1], s[2])).or_insert_with(BigInt::zero) += coef,
            2 => *quad.entry((s[0], s[1])).or_insert_with(BigInt::zero) += coef,
            1 => lin[s[0]] += coef,
            _ => constant += coef,
        }
    }
    let fractional = cubic
        .iter()
        .any(|(&(i, j, k), c)| !c.is_multiple_of(&BigInt::from(multiplicity(i, j, k))));
    let scale: u32 = if fractional { 6 } else { 1 };
    let s = BigInt::from(scale);
    let c: Vec<_> = cubic
        .into_iter()
        .map(|((i, j, k), v)| ((i, j, k), v * &s / BigInt::from(multiplicity(i, j, k))))
        .collect();
    let q: Vec<_> = quad.into_iter().map(|(t, v)| (t, v * &s)).collect();
    let l: Vec<_> = lin.into_iter().map(|v| v * &s).collect();
    let poly = CubicPolynomial::from_parts(n, &c, &q, &l, constant * &s)?;
    Ok(Symmetrized { poly, scale })
}

impl Symmetrized {
    /// The polynomial before scaling, with integer monomial coefficients.
    pub fn original(&self) -> IntPoly {
        let s = BigInt::from(self.scale);
        let monos = self
            .poly
            .monomials()
            .into_iter()
            .map(|(idx, c)| (idx, c / &s))
            .collect::<Vec<_>>();
        IntPoly::from_monomials(self.poly.n(), &monos).expect("degree at most 3")
    }
}

/// Polynomial of degree at most 3 stored by integer monomial coefficients.
///
/// This is the form used for arithmetic (congruences, exponential sums,
/// counting), where multiplying by the symmetrization factor would change the
/// answer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly {
    n: usize,
    terms: Vec<(Vec<usize>, BigInt)>,
}

impl IntPoly {
    /// Monomials as lists of 0-based variable indices; repeated monomials add up.
    pub fn from_monomials(n: usize, monomials: &[(Vec<usize>, BigInt)]) -> Result<IntPoly> {
        let mut acc: BTreeMap<Vec<usize>, BigInt> = BTreeMap::new();
        for (idx, c) in monomials {
            if idx.len() > 3 {
                return Err(LabError::DegreeTooHigh(idx.len()));
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
                return Err(LabError::InvalidInput(format!("variable x{} out of range for n = {n}", bad + 1)));
            }
            let mut key = idx.clone();
            key.sort_unstable();
            *acc.entry(key).or_insert_with(BigInt::zero) += c;
        }
        let mut terms: Vec<(Vec<usize>, BigInt)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        // cubic terms first, then by indices, matching CubicPolynomial::monomials
        terms.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(IntPoly { n, terms })
    }

    pub fn from_poly(p: &CubicPolynomial) -> IntPoly {
        IntPoly::from_monomials(p.n(), &p.monomials()).expect("cubic")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Vec<usize>, BigInt)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.terms.iter().all(|(idx, _)| idx.len() == 3)
    }

    pub fn height(&self) -> BigInt {
        self.terms.iter().map(|(_, c)| c.abs()).max().unwrap_or_else(BigInt::zero)
    }

    /// Homogeneous part of the given degree.
    pub fn part(&self, degree: usize) -> IntPoly {
        IntPoly {
            n: self.n,
            terms: self.terms.iter().filter(|(i, _)| i.len() == degree).cloned().collect(),
        }
    }

    /// Symmetric-tensor form, multiplied by 6 if needed.
    pub fn symmetrize(&self) -> Symmetrized {
        symmetrize(self.n, &self.terms).expect("degree at most 3")
    }

    pub fn evaluate(&self, x: &[BigInt]) -> Result<BigInt> {
        if x.len() != self.n {
            return Err(LabError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(idx, c)| idx.iter().fold(c.clone(), |v, &i| v * &x[i]))
            .sum())
    }

    pub fn evaluate_i64(&self, x: &[i64]) -> Result<BigInt> {
        self.evaluate(&x.iter().map(|&v| BigInt::from(v)).collect::<Vec<_>>())
    }

    pub fn gradient(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        if x.len() != self.n {
            return Err(LabError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut g = vec![BigInt::zero(); self.n];
        for (idx, c) in &self.terms {
            for pos in 0..idx.len() {
                let v = idx
                    .iter()
                    .enumerate()
                    .filter(|(q, _)| *q != pos)
                    .fold(c.clone(), |v, (_, &i)| v * &x[i]);
                g[idx[pos]] += v;
            }
        }
        Ok(g)
    }

    /// `g(y) = f(shift + step * y)`.
    pub fn affine_substitute(&self, shift: &[BigInt], step: &BigInt) -> IntPoly {
        let mut monos: Vec<(Vec<usize>, BigInt)> = Vec::new();
        for (idx, c) in &self.terms {
            let d = idx.len();
            for mask in 0u32..(1 << d) {
                let mut coef = c.clone();
                let mut vars = Vec::new();
                for (t, &i) in idx.iter().enumerate() {
                    if mask & (1 << t) != 0 {
                        coef *= step;
                        vars.push(i);
                    } else {
                        coef *= &shift[i];
                    }
                }
                if !coef.is_zero() {
                    monos.push((vars, coef));
                }
            }
        }
        IntPoly::from_monomials(self.n, &monos).expect("degree preserved")
    }

    /// Divide all coefficients by `d` when every one is divisible.
    pub fn div_exact(&self, d: &BigInt) -> Option<IntPoly> {
        if self.terms.iter().any(|(_, c)| !c.is_multiple_of(d)) {
            return None;
        }
        Some(IntPoly {
            n: self.n,
            terms: self.terms.iter().map(|(i, c)| (i.clone(), c / d)).collect(),
        })
    }

    /// Add a constant.
    pub fn shifted(&self, k: &BigInt) -> IntPoly {
        let mut monos = self.terms.clone();
        monos.push((vec![], k.clone()));
        IntPoly::from_monomials(self.n, &monos).expect("cubic")
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // reuse CubicPolynomial's printer through a scale-free symmetrization
        let s = self.symmetrize();
        if s.scale == 1 {
            write!(f, "{}", s.poly)
        } else {
            write!(f, "({})/{}", s.poly, s.scale)
        }
    }
}

/// Outcome of the `c_111 > 0, |c_111| >> M` preprocessing.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    /// Transformed polynomial `phi(U y)`.
    pub poly: CubicPolynomial,
    /// Unimodular matrix `U` (first column is the chosen direction).
    pub transform: Vec<Vec<BigInt>>,
    pub c111: BigInt,
    pub height: BigInt,
}

/// Largest entry allowed in the direction searched by [`normalize`].
pub const NORMALIZE_SEARCH_HEIGHT: i64 = 3;

/// Find a unimodular change of coordinates with entries of the first column
/// bounded by 3 (at most three non-zero entries) after which `c_111 > 0` and
/// `c_111 >= M / (10 n^3)` where `M` is the height of the transformed polynomial.
pub fn normalize(phi: &CubicPolynomial) -> Result<Normalization> {
    let n = phi.n;
    if phi.cubic_is_zero() {
        return Err(LabError::Construction("cubic part vanishes identically".into()));
    }
    let h = NORMALIZE_SEARCH_HEIGHT;
    let mut candidates: Vec<(BigInt, Vec<i64>)> = Vec::new();
    let range: Vec<i64> = (-h..=h).filter(|&v| v != 0).collect();
    let mut push = |u: Vec<i64>| {
        let g = u.iter().fold(0i64, |g, &v| g.gcd(&v));
        if g != 1 {
            return;
        }
        let ub: Vec<BigInt> = u.iter().map(|&v| BigInt::from(v)).collect();
        let val = phi.evaluate_cubic(&ub).expect("dimension");
        if !val.is_zero() {
            candidates.push((val, u));
        }
    };
    for i in 0..n {
        for &a in &range {
            let mut u = vec![0; n];
            u[i] = a;
            push(u.clone());
            for j in i + 1..n {
                for &b in &range {
                    let mut v = u.clone();
                    v[j] = b;
                    push(v.clone());
                    for k in j + 1..n {
                        for &c in &range {
                            let mut w = v.clone();
                            w[k] = c;
                            push(w);
                        }
                    }
                }
            }
        }
    }
    // prefer large |C(u)|, then short vectors, then lexicographic order
    candidates.sort_by(|(va, ua), (vb, ub)| {
        vb.abs()
            .cmp(&va.abs())
            .then_with(|| {
                let na = ua.iter().map(|v| v.abs()).max();
                let nb = ub.iter().map(|v| v.abs()).max();
                na.cmp(&nb)
            })
            .then_with(|| ua.cmp(ub))
    });
    let threshold_den = BigInt::from(10 * (n as u64).pow(3));
    for (val, u) in candidates.into_iter().take(64) {
        let u = if val.is_negative() {
            u.iter().map(|v| -v).collect()
        } else {
            u
        };
        let big_u = unimodular_completion(&u);
        let poly = phi.transform(&big_u)?;
        let c111 = poly.c(0, 0, 0).clone();
        let height = poly.height();
        if c111.is_positive() && &c111 * &threshold_den >= height {
            return Ok(Normalization {
                poly,
                transform: big_u,
                c111,
                height,
            });
        }
    }
    Err(LabError::Construction(
        "no direction of height <= 3 makes c_111 >= M/(10 n^3)".into(),
    ))
}

/// Unimodular integer matrix whose first column is the primitive vector `u`.
pub fn unimodular_completion(u: &[i64]) -> Vec<Vec<BigInt>> {
    let n = u.len();
    let mut w: Vec<i64> = u.to_vec();
    let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    // Row operations E on w; keep m = E_1^{-1} ... E_t^{-1}, so m * (E w) = u.
    loop {
        let nz: Vec<usize> = (0..n).filter(|&i| w[i] != 0).collect();
        if nz.len() <= 1 {
            break;
        }
        let piv = *nz.iter().min_by_key(|&&i| (w[i].abs(), i)).unwrap();
        for &j in &nz {
            if j == piv {
                continue;
            }
            let q = w[j].div_euclid(w[piv]);
            if q != 0 {
                w[j] -= q * w[piv];
                // inverse op: column piv += q * column j
                for row in m.iter_mut() {
                    row[piv] += q * row[j];
                }
            }
        }
    }
    let piv = (0..n).find(|&i| w[i] != 0).expect("u must be non-zero");
    assert_eq!(w[piv].abs(), 1, "u must be primitive");
    if piv != 0 {
        w.swap(0, piv);
        for row in m.iter_mut() {
            row.swap(0, piv);
        }
    }
    if w[0] < 0 {
        for row in m.iter_mut() {
            row[0] = -row[0];
        }
    }
    m.into_iter()
        .map(|r| r.into_iter().map(BigInt::from).collect())
        .collect()
}

/// Watson's polynomial `(2x_1 - 1)(1 + x_1^2 + ... + x_n^2) + x_1 x_2`,
/// symmetrized (its tensor is fractional, so the stored polynomial is 6 times it).
pub fn watson(n: usize) -> Symmetrized {
    assert!(n >= 2);
    let b = |v: i64| BigInt::from(v);
    let mut m: Vec<(Vec<usize>, BigInt)> = vec![
        (vec![0, 0, 0], b(2)),
        (vec![0], b(2)),
        (vec![0, 0], b(-1)),
        (vec![], b(-1)),
        (vec![0, 1], b(1)),
    ];
    for i in 1..n {
        m.push((vec![0, i, i], b(2)));
        m.push((vec![i, i], b(-1)));
    }
    symmetrize(n, &m).expect("cubic")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&t| BigInt::from(t)).collect()
    }

    fn mono(idx: &[usize], c: i64) -> (Vec<usize>, BigInt) {
        (idx.to_vec(), BigInt::from(c))
    }

    #[test]
    fn index_layout_is_dense() {
        for n in 1..6 {
            let idx: Vec<usize> = canonical_triples(n).map(|(i, j, k)| cubic_index(n, i, j, k)).collect();
            assert_eq!(idx, (0..cubic_len(n)).collect::<Vec<_>>());
            let q: Vec<usize> = canonical_pairs(n).map(|(i, j)| quad_index(n, i, j)).collect();
            assert_eq!(q, (0..n * (n + 1) / 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn symmetrize_examples() {
        let s = symmetrize(1, &[mono(&[0, 0, 0], 1)]).unwrap();
        assert_eq!(s.scale, 1);
        assert_eq!(s.poly.c(0, 0, 0), &BigInt::from(1));

        let s = symmetrize(3, &[mono(&[0, 1, 2], 1)]).unwrap();
        assert_eq!(s.scale, 6);
        for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
            assert_eq!(s.poly.c(i, j, k), &BigInt::from(1));
        }

        let s = symmetrize(2, &[mono(&[0, 0, 1], 3)]).unwrap();
        assert_eq!(s.scale, 1);
        assert_eq!(s.poly.c(0, 0, 1), &BigInt::from(1));
        assert_eq!(s.poly.c(1, 0, 0), &BigInt::from(1));
        assert_eq!(s.poly.c(0, 1, 0), &BigInt::from(1));

        assert_eq!(
            symmetrize(2, &[mono(&[0, 0, 1, 1], 1)]),
            Err(LabError::DegreeTooHigh(4))
        );
    }

    #[test]
    fn evaluate_examples() {
        let p = CubicPolynomial::from_small(1, &[((0, 0, 0), 1)], &[], &[], 1).unwrap();
        assert_eq!(p.evaluate_i64(&[2]).unwrap(), BigInt::from(9));

        let w = watson(5);
        assert_eq!(w.scale, 6);
        // stored polynomial is 6 * phi; phi(1,0,0,0,0) = (2-1)(1+1) + 0 = 2
        assert_eq!(w.poly.evaluate_i64(&[1, 0, 0, 0, 0]).unwrap(), BigInt::from(12));

        let f = CubicPolynomial::from_small(3, &[((0, 0, 0), 1), ((1, 1, 1), 1), ((2, 2, 2), -1)], &[], &[], 0).unwrap();
        assert_eq!(f.evaluate_i64(&[3, 4, 5]).unwrap(), BigInt::from(-34));
        assert!(f.evaluate_i64(&[1, 2]).is_err());
    }

    #[test]
    fn hessian_examples() {
        let p = CubicPolynomial::from_small(1, &[((0, 0, 0), 1)], &[], &[], 0).unwrap();
        assert_eq!(p.hessian(&big(&[2])).unwrap().0, vec![big(&[2])]);

        let c = CubicPolynomial::from_small(3, &[((0, 1, 2), 1)], &[], &[], 0).unwrap();
        let h = c.hessian(&big(&[1, 0, 0])).unwrap();
        assert_eq!(h.0, vec![big(&[0, 0, 0]), big(&[0, 0, 1]), big(&[0, 1, 0])]);
        let z = c.hessian(&big(&[0, 0, 0])).unwrap();
        assert!(z.0.iter().flatten().all(Zero::is_zero));
        assert!(c.hessian(&big(&[1])).is_err());
    }

    #[test]
    fn bilinear_examples() {
        let c = CubicPolynomial::from_small(3, &[((0, 1, 2), 1)], &[], &[], 0).unwrap();
        assert_eq!(c.bilinear(&big(&[1, 0, 0]), &big(&[0, 1, 0])).unwrap(), big(&[0, 0, 1]));
        assert_eq!(c.bilinear(&big(&[0, 0, 0]), &big(&[0, 0, 0])).unwrap(), big(&[0, 0, 0]));
    }

    #[test]
    fn homogenize_examples() {
        let p = CubicPolynomial::from_small(1, &[((0, 0, 0), 1)], &[], &[], 1).unwrap();
        let h = p.homogenize();
        assert_eq!(h.scale, 1);
        assert_eq!(h.poly.c(0, 0, 0), &BigInt::from(1));
        assert_eq!(h.poly.c(1, 1, 1), &BigInt::from(1));

        let p = CubicPolynomial::from_small(1, &[((0, 0, 0), 1)], &[], &[1], 0).unwrap();
        let h = p.homogenize();
        for x in -5..=5 {
            let lhs = h.poly.evaluate_i64(&[x, 1]).unwrap();
            let rhs = p.evaluate_i64(&[x]).unwrap() * h.scale;
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn display_is_readable() {
        let w = watson(2);
        let s = w.poly.to_string();
        assert!(s.starts_with("12*x1^3"), "{s}");
    }

    #[test]
    fn unimodular_completion_has_first_column() {
        for u in [vec![2, 3, 0], vec![0, 0, 1], vec![-3, 2, 1], vec![3, -2, 0, 2]] {
            let m = unimodular_completion(&u);
            let col: Vec<i64> = m.iter().map(|r| i64::try_from(&r[0]).unwrap()).collect();
            assert_eq!(col, u);
            let det = crate::linalg::det_big(&m);
            assert_eq!(det.abs(), BigInt::one());
        }
    }

    #[test]
    fn normalization_makes_c111_dominant() {
        let c = CubicPolynomial::from_small(3, &[((0, 1, 2), 1)], &[], &[], 0).unwrap();
        let norm = normalize(&c).unwrap();
        assert!(norm.c111 > BigInt::zero());
        assert!(&norm.c111 * BigInt::from(270) >= norm.height);
        // the transform maps the new form back to the old one
        let y = big(&[1, -2, 3]);
        let x: Vec<BigInt> = (0..3)
            .map(|i| (0..3).map(|j| &norm.transform[i][j] * &y[j]).sum())
            .collect();
        assert_eq!(norm.poly.evaluate(&y).unwrap(), c.evaluate(&x).unwrap());
    }

    #[test]
    fn original_form_undoes_scaling() {
        let w = watson(5);
        let phi = w.original();
        assert_eq!(phi.evaluate_i64(&[1, 0, 0, 0, 0]).unwrap(), BigInt::from(2));
        assert_eq!(phi.symmetrize(), w);
        let g = phi.affine_substitute(&big(&[1, 2, 0, -1, 3]), &BigInt::from(7));
        let y = [2, -1, 0, 1, 1];
        let x: Vec<i64> = [1, 2, 0, -1, 3].iter().zip(y).map(|(s, t)| s + 7 * t).collect();
        assert_eq!(g.evaluate_i64(&y).unwrap(), phi.evaluate_i64(&x).unwrap());
        let grad = phi.gradient(&big(&x)).unwrap();
        let tensor_grad = w.poly.gradient(&big(&x)).unwrap();
        for (a, b) in grad.iter().zip(tensor_grad) {
            assert_eq!(a * 6, b);
        }
    }

    #[test]
    fn affine_substitution_matches_evaluation() {
        let w = watson(3).poly;
        let shift = big(&[2, -1, 3]);
        let step = BigInt::from(5);
        let g = w.affine_substitute(&shift, &step).unwrap();
        for y in [[0, 0, 0], [1, 2, -3], [-2, 1, 1]] {
            let x: Vec<BigInt> = (0..3).map(|i| &shift[i] + &step * y[i]).collect();
            assert_eq!(g.evaluate_i64(&y).unwrap(), w.evaluate(&x).unwrap());
        }
    }
}
