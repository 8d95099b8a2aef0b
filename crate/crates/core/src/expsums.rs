//! Complete exponential sums `S(q,a)`, their averages `A(q)`, Weyl sums over
//! lattice boxes, and the counting functions behind the minor-arc estimates.
//!
//! Rational phases are reduced modulo the denominator in integers, so only the
//! final root of unity is a floating-point quantity. Complex accumulation uses
//! Neumaier summation per block and merges blocks in index order.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{factor_u64, gcd_u64, mod_inverse_u64, pow_u64, ramanujan_sum};
use crate::error::{check_budget, LabError, Result};
use crate::exec::Config;
use crate::kernel::{FloatPoly, SmallPoly};
use crate::lattice::IntBox;
use crate::poly::{CubicPolynomial, IntPoly};
use crate::quad;

/// Neumaier-compensated sum of `f64`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(mut self, other: ComplexSum) -> ComplexSum {
        self.re.add(other.re.sum);
        self.re.add(other.re.carry);
        self.im.add(other.im.sum);
        self.im.add(other.im.carry);
        self
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `e(t) = exp(2 pi i t)`.
#[inline]
pub fn e(t: f64) -> Complex64 {
    let a = TAU * (t - t.round());
    Complex64::new(a.cos(), a.sin())
}

/// `e(j/q)` for `j = 0..q`, with `table[q-j] = conj(table[j])` exactly.
pub fn roots_of_unity(q: u64) -> Vec<Complex64> {
    let q = q as usize;
    let mut t = vec![Complex64::new(1.0, 0.0); q];
    for j in 1..=q / 2 {
        // exact values at the quarter points keep e(1/2) real
        let z = match (4 * j == q, 2 * j == q) {
            (true, _) => Complex64::new(0.0, 1.0),
            (_, true) => Complex64::new(-1.0, 0.0),
            _ => e(j as f64 / q as f64),
        };
        t[j] = z;
        t[q - j] = z.conj();
    }
    t
}

/// Distance to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Distance to the nearest integer of an exact rational.
pub fn dist_to_int_rat(x: &BigRational) -> BigRational {
    let f = x - x.floor();
    let g = BigRational::one() - &f;
    if f < g {
        f
    } else {
        g
    }
}

fn small(phi: &IntPoly) -> Result<SmallPoly> {
    SmallPoly::from_int(phi).ok_or_else(|| LabError::InvalidInput("coefficients exceed 128 bits".into()))
}

fn residue_count(q: u64, n: usize) -> u128 {
    (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

/// Walk all residue vectors mod `q` whose first coordinate is `block`.
fn walk_residues<F: FnMut(&[u64])>(n: usize, q: u64, block: usize, mut f: F) {
    if n == 0 {
        f(&[]);
        return;
    }
    let mut r = vec![0u64; n];
    r[0] = block as u64;
    loop {
        f(&r);
        let mut i = n;
        loop {
            if i == 1 {
                return;
            }
            i -= 1;
            r[i] += 1;
            if r[i] < q {
                break;
            }
            r[i] = 0;
        }
    }
}

/// `hist[m] = #{r mod q : phi(r) = m mod q}`.
pub fn value_histogram(phi: &IntPoly, q: u64, cfg: &Config) -> Result<Vec<u64>> {
    if q == 0 {
        return Err(LabError::InvalidInput("modulus must be positive".into()));
    }
    check_budget(residue_count(q, phi.n()), cfg.budget)?;
    let sp = small(phi)?;
    let n = phi.n();
    let blocks = if n == 0 { 1 } else { q as usize };
    let parts = cfg.exec.map_blocks(blocks, |b| {
        let mut h = vec![0u64; q as usize];
        walk_residues(n, q, b, |r| h[sp.eval_mod(r, q) as usize] += 1);
        h
    });
    let mut hist = vec![0u64; q as usize];
    for part in parts {
        for (a, b) in hist.iter_mut().zip(part) {
            *a += b;
        }
    }
    Ok(hist)
}

/// Histogram modulo a divisor `d` of `q`, divided by the `(q/d)^n` lifts of each residue.
pub fn fold_histogram(hist: &[u64], n: usize, d: u64) -> Result<Vec<u64>> {
    let q = hist.len() as u64;
    if d == 0 || q % d != 0 {
        return Err(LabError::InvalidInput(format!("{d} does not divide {q}")));
    }
    let lifts = pow_u64(q / d, n as u32).ok_or_else(|| LabError::InvalidInput("fold overflow".into()))?;
    let mut out = vec![0u64; d as usize];
    for (m, &c) in hist.iter().enumerate() {
        out[m % d as usize] += c;
    }
    for c in &mut out {
        debug_assert_eq!(*c % lifts, 0);
        *c /= lifts;
    }
    Ok(out)
}

/// A Gauss sum evaluated by direct summation and from the value distribution.
#[derive(Clone, Debug, Serialize)]
pub struct GaussSum {
    pub q: u64,
    pub a: u64,
    #[serde(with = "complex")]
    pub direct: Complex64,
    #[serde(with = "complex")]
    pub distribution: Complex64,
    /// True when the modulus was split into coprime factors.
    pub multiplicative: bool,
}

impl GaussSum {
    pub fn value(&self) -> Complex64 {
        self.direct
    }

    /// `|direct - distribution| / max(1, |direct|, |distribution|)`.
    pub fn discrepancy(&self) -> f64 {
        let scale = self.direct.norm().max(self.distribution.norm()).max(1.0);
        (self.direct - self.distribution).norm() / scale
    }
}

mod complex {
    use num_complex::Complex64;
    use serde::ser::SerializeTuple;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&z.re)?;
        t.serialize_element(&z.im)?;
        t.end()
    }
}

fn gauss_direct(sp: &SmallPoly, q: u64, a: u64, table: &[Complex64], cfg: &Config) -> Complex64 {
    let n = sp.n();
    let blocks = if n == 0 { 1 } else { q as usize };
    let a = (a % q) as u128;
    cfg.exec
        .map_blocks(blocks, |b| {
            let mut acc = ComplexSum::default();
            walk_residues(n, q, b, |r| {
                let v = sp.eval_mod(r, q) as u128;
                acc.add(table[(a * v % q as u128) as usize]);
            });
            acc
        })
        .into_iter()
        .fold(ComplexSum::default(), ComplexSum::merge)
        .value()
}

fn gauss_from_histogram(hist: &[u64], a: u64, table: &[Complex64]) -> Complex64 {
    let q = hist.len() as u128;
    let mut acc = ComplexSum::default();
    for (m, &c) in hist.iter().enumerate() {
        if c != 0 {
            acc.add(table[((a as u128 % q) * m as u128 % q) as usize] * c as f64);
        }
    }
    acc.value()
}

/// Split `q` into two coprime factors `> 1`, if possible.
fn coprime_split(q: u64) -> Option<(u64, u64)> {
    let f = factor_u64(q);
    if f.len() < 2 {
        return None;
    }
    let q1 = pow_u64(f[0].0, f[0].1)?;
    Some((q1, q / q1))
}

/// `S(q,a) = sum_{r mod q} e(a phi(r) / q)`.
pub fn gauss_sum(phi: &IntPoly, q: u64, a: u64, cfg: &Config) -> Result<GaussSum> {
    if q == 0 {
        return Err(LabError::InvalidInput("modulus must be positive".into()));
    }
    if gcd_u64(a % q, q) != 1 {
        return Err(LabError::Precondition(format!("gcd({a}, {q}) != 1")));
    }
    if residue_count(q, phi.n()) > cfg.budget as u128 {
        if let Some((q1, q2)) = coprime_split(q) {
            // S(q1 q2, a1 q2 + a2 q1) = S(q1, a1) S(q2, a2)
            let a1 = (a % q1) * mod_inverse_u64(q2 % q1, q1).expect("coprime") % q1;
            let a2 = (a % q2) * mod_inverse_u64(q1 % q2, q2).expect("coprime") % q2;
            let s1 = gauss_sum(phi, q1, a1, cfg)?;
            let s2 = gauss_sum(phi, q2, a2, cfg)?;
            return Ok(GaussSum {
                q,
                a,
                direct: s1.direct * s2.direct,
                distribution: s1.distribution * s2.distribution,
                multiplicative: true,
            });
        }
        check_budget(residue_count(q, phi.n()), cfg.budget)?;
    }
    let sp = small(phi)?;
    let table = roots_of_unity(q);
    let direct = gauss_direct(&sp, q, a, &table, cfg);
    let hist = value_histogram(phi, q, cfg)?;
    let distribution = gauss_from_histogram(&hist, a, &table);
    Ok(GaussSum {
        q,
        a,
        direct,
        distribution,
        multiplicative: false,
    })
}

/// Exact `A(q) = q^{-n} sum_m hist[m] c_q(m)` from a histogram modulo `q = hist.len()`.
pub fn a_from_histogram(hist: &[u64], n: usize) -> BigRational {
    let q = hist.len() as u64;
    let mut num = BigInt::zero();
    for (m, &c) in hist.iter().enumerate() {
        if c != 0 {
            num += BigInt::from(c) * BigInt::from(ramanujan_sum(q, m as u64));
        }
    }
    BigRational::new(num, BigInt::from(q).pow(n as u32))
}

/// Exact `A(q)`; uses multiplicativity when `q^n` exceeds the budget.
pub fn a_of_q(phi: &IntPoly, q: u64, cfg: &Config) -> Result<BigRational> {
    if q == 0 {
        return Err(LabError::InvalidInput("modulus must be positive".into()));
    }
    if residue_count(q, phi.n()) > cfg.budget as u128 {
        if let Some((q1, q2)) = coprime_split(q) {
            return Ok(a_of_q(phi, q1, cfg)? * a_of_q(phi, q2, cfg)?);
        }
    }
    let hist = value_histogram(phi, q, cfg)?;
    Ok(a_from_histogram(&hist, phi.n()))
}

/// `A(q)` summed from the directly evaluated Gauss sums (floating point).
pub fn a_of_q_complex(phi: &IntPoly, q: u64, cfg: &Config) -> Result<Complex64> {
    let mut acc = ComplexSum::default();
    for a in 0..q {
        if gcd_u64(a, q) == 1 {
            acc.add(gauss_sum(phi, q, a, cfg)?.direct);
        }
    }
    Ok(acc.value() / (q as f64).powi(phi.n() as i32))
}

/// `[A(1), A(p), ..., A(p^k)]` from a single histogram modulo `p^k`.
pub fn a_prime_powers(phi: &IntPoly, p: u64, k: u32, cfg: &Config) -> Result<Vec<BigRational>> {
    let q = pow_u64(p, k).ok_or_else(|| LabError::InvalidInput(format!("{p}^{k} overflows")))?;
    let hist = value_histogram(phi, q, cfg)?;
    let mut out = Vec::with_capacity(k as usize + 1);
    for i in 0..=k {
        let d = pow_u64(p, i).expect("divisor");
        out.push(a_from_histogram(&fold_histogram(&hist, phi.n(), d)?, phi.n()));
    }
    Ok(out)
}

/// `alpha = a/q + theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub a: i64,
    pub q: u64,
    pub theta: f64,
}

impl Alpha {
    pub fn new(a: i64, q: u64, theta: f64) -> Result<Alpha> {
        if q == 0 {
            return Err(LabError::InvalidInput("denominator must be positive".into()));
        }
        Ok(Alpha { a, q, theta })
    }

    pub fn rational(a: i64, q: u64) -> Result<Alpha> {
        Alpha::new(a, q, 0.0)
    }

    pub fn value(&self) -> f64 {
        self.a as f64 / self.q as f64 + self.theta
    }

    /// Phase `alpha * v` reduced mod 1, with the rational part exact.
    #[inline]
    fn phase(&self, v: i128) -> (usize, f64) {
        let q = self.q as i128;
        let r = (self.a as i128).rem_euclid(q) * v.rem_euclid(q) % q;
        let t = self.theta * v as f64;
        (r as usize, t - t.floor())
    }
}

/// Weyl sum `sum_{x in box} e(alpha phi(x))`.
///
/// Each term is accurate to about `1e-15 (1 + |theta phi(x)|)`, so the total
/// error stays below `1e-8 * count` while `|theta phi| < 1e6` on the box.
pub fn weyl_sum(phi: &IntPoly, alpha: &Alpha, bx: &IntBox, cfg: &Config) -> Result<Complex64> {
    if bx.dim() != phi.n() {
        return Err(LabError::DimensionMismatch {
            expected: phi.n(),
            got: bx.dim(),
        });
    }
    bx.check_budget(cfg.budget)?;
    if bx.is_empty() {
        return Ok(Complex64::zero());
    }
    let sp = small(phi)?;
    if !sp.fits(bx.sup()) {
        return Err(LabError::Numerical("polynomial values exceed 128 bits on the box".into()));
    }
    let table = (alpha.q <= 1 << 20).then(|| roots_of_unity(alpha.q));
    let q = alpha.q as f64;
    let sum = cfg
        .exec
        .map_blocks(bx.blocks(), |b| {
            let mut acc = ComplexSum::default();
            bx.walk_block(b, |x| {
                let (r, t) = alpha.phase(sp.eval(x));
                let z = match (&table, alpha.theta == 0.0) {
                    (Some(tab), true) => tab[r],
                    (Some(tab), false) => tab[r] * e(t),
                    (None, _) => e(r as f64 / q + t),
                };
                acc.add(z);
                true
            });
            acc
        })
        .into_iter()
        .fold(ComplexSum::default(), ComplexSum::merge);
    Ok(sum.value())
}

/// Frequency for the bilinear counting function.
#[derive(Clone, Debug, PartialEq)]
pub enum Frequency {
    Rational(BigRational),
    Real(f64),
}

/// `#{d : |d| <= p, ||6 alpha B_i(h, d)|| < eps for all i}`; the cubic tensor of `c` defines `B`.
pub fn bilinear_count(
    c: &CubicPolynomial,
    alpha: &Frequency,
    p: u64,
    h: &[i64],
    eps: &BigRational,
    cfg: &Config,
) -> Result<u64> {
    let n = c.n();
    if h.len() != n {
        return Err(LabError::DimensionMismatch {
            expected: n,
            got: h.len(),
        });
    }
    let bx = IntBox::cube(n, p as i64);
    bx.check_budget(cfg.budget)?;
    let hb: Vec<BigInt> = h.iter().map(|&v| BigInt::from(v)).collect();
    let m = c.hessian(&hb)?;
    let mat: Vec<Vec<i128>> = m
        .0
        .iter()
        .map(|row| row.iter().map(|v| v.to_i128().filter(|x| x.abs() < 1 << 60)))
        .map(|row| row.collect::<Option<Vec<_>>>())
        .collect::<Option<_>>()
        .ok_or_else(|| LabError::InvalidInput("Hessian entries too large".into()))?;
    let big = |v: &BigInt| v.to_i128().filter(|x| x.abs() < 1 << 62);
    let (en, ed) = match (big(eps.numer()), big(eps.denom())) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(LabError::InvalidInput("epsilon numerator/denominator too large".into())),
    };
    let eps_f = en as f64 / ed as f64;
    // numerator (times 6) and denominator of a rational frequency
    let rat = match alpha {
        Frequency::Rational(r) => {
            let six = r * BigRational::from_integer(BigInt::from(6));
            match (big(six.numer()), big(six.denom())) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => return Err(LabError::InvalidInput("frequency numerator/denominator too large".into())),
            }
        }
        Frequency::Real(_) => None,
    };
    let real = match alpha {
        Frequency::Real(x) => 6.0 * x,
        Frequency::Rational(_) => 0.0,
    };
    let counts = cfg.exec.map_blocks(bx.blocks(), |b| {
        let mut count = 0u64;
        bx.walk_block(b, |d| {
            let ok = mat.iter().all(|row| {
                let bi: i128 = row.iter().zip(d).map(|(&m, &x)| m * x as i128).sum();
                match rat {
                    Some((num, den)) => {
                        let r = (num.rem_euclid(den) * bi.rem_euclid(den)).rem_euclid(den);
                        r.min(den - r) * ed < en * den
                    }
                    None => dist_to_int(real * bi as f64) < eps_f,
                }
            });
            count += ok as u64;
            true
        });
        count
    });
    Ok(counts.into_iter().sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct ShrinkingReport {
    pub n: usize,
    pub a: f64,
    pub z: f64,
    pub n_one: u64,
    pub n_z: u64,
    /// `N(1) / (Z^{-n} N(Z))`.
    pub ratio: f64,
}

fn shrinking_count(l: &[Vec<f64>], a: f64, z: f64, cfg: &Config) -> Result<u64> {
    let n = l.len();
    let r = (a * z + 1e-12).floor() as i64;
    let bx = IntBox::cube(n, r);
    bx.check_budget(cfg.budget)?;
    let tol = z / a;
    let counts = cfg.exec.map_blocks(bx.blocks(), |b| {
        let mut c = 0u64;
        bx.walk_block(b, |u| {
            let ok = l.iter().all(|row| {
                let v: f64 = row.iter().zip(u).map(|(x, &y)| x * y as f64).sum();
                dist_to_int(v) < tol
            });
            c += ok as u64;
            true
        });
        c
    });
    Ok(counts.into_iter().sum())
}

/// Count `N(Z) = #{u : |u| <= aZ, ||(Lu)_i|| < Z/a}` at `Z` and at 1.
pub fn shrinking_check(l: &[Vec<f64>], a: f64, z: f64, cfg: &Config) -> Result<ShrinkingReport> {
    let n = l.len();
    if l.iter().any(|row| row.len() != n) {
        return Err(LabError::InvalidInput("L must be square".into()));
    }
    if !(z > 0.0 && z <= 1.0) || a <= 0.0 {
        return Err(LabError::Precondition("need 0 < Z <= 1 and a > 0".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if l[i][j] != l[j][i] {
                return Err(LabError::InvalidInput("L must be symmetric".into()));
            }
        }
    }
    let n_one = shrinking_count(l, a, 1.0, cfg)?;
    let n_z = shrinking_count(l, a, z, cfg)?;
    debug_assert!(n_z >= 1);
    Ok(ShrinkingReport {
        n,
        a,
        z,
        n_one,
        n_z,
        ratio: n_one as f64 * z.powi(n as i32) / n_z as f64,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ShrinkingSurvey {
    pub n: usize,
    pub a: f64,
    pub z: f64,
    pub seed: u64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

/// Random symmetric `n x n` matrix with entries uniform in `[-scale, scale]`.
pub fn random_symmetric(n: usize, scale: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-scale..=scale);
            l[i][j] = v;
            l[j][i] = v;
        }
    }
    l
}

/// Shrinking ratios over `trials` random symmetric matrices.
pub fn shrinking_survey(n: usize, a: f64, z: f64, trials: usize, seed: u64, cfg: &Config) -> Result<ShrinkingSurvey> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let l = random_symmetric(n, 1.0, &mut rng);
        ratios.push(shrinking_check(&l, a, z, cfg)?.ratio);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let mean_ratio = ratios.iter().sum::<f64>() / trials.max(1) as f64;
    Ok(ShrinkingSurvey {
        n,
        a,
        z,
        seed,
        ratios,
        max_ratio,
        mean_ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapCase {
    pub a: i64,
    pub q: u64,
    #[serde(with = "crate::serde_rat")]
    pub theta: BigRational,
    pub x: u64,
    #[serde(with = "crate::serde_rat")]
    pub p1: BigRational,
    pub m: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BootstrapOutcome {
    /// `q | m`.
    pub divides: bool,
    /// `X < q` or `|theta| > 1/(q P_1)`, so the conclusion is `m = 0`.
    pub forced_zero: bool,
    /// The conclusion of the lemma holds for this case.
    pub holds: bool,
    /// Every hypothesis is an equality: `P_1 = 2q`, `2qX|theta| = 1`, `|m| = X`, `||alpha m|| = 1/P_1`.
    pub tight: bool,
}

/// Check the divisibility conclusion for one admissible `(alpha, X, P_1, m)`.
pub fn bootstrap_check(case: &BootstrapCase) -> Result<BootstrapOutcome> {
    let BootstrapCase { a, q, theta, x, p1, m } = case;
    let q_i = *q as i64;
    if *q == 0 || (*a).gcd(&q_i) != 1 {
        return Err(LabError::Precondition(format!("gcd({a}, {q}) != 1")));
    }
    let rq = BigRational::from_integer(BigInt::from(*q));
    let rx = BigRational::from_integer(BigInt::from(*x));
    let two = BigRational::from_integer(BigInt::from(2));
    if &two * &rq * &rx * theta.abs() > BigRational::one() {
        return Err(LabError::Precondition("2 q X |theta| > 1".into()));
    }
    if p1 < &(&two * &rq) {
        return Err(LabError::Precondition("P_1 < 2q".into()));
    }
    if m.unsigned_abs() > *x {
        return Err(LabError::Precondition("|m| > X".into()));
    }
    let alpha = BigRational::new(BigInt::from(*a), BigInt::from(*q)) + theta;
    let am = alpha * BigRational::from_integer(BigInt::from(*m));
    let dist = dist_to_int_rat(&am);
    if dist > p1.recip() {
        return Err(LabError::Precondition("||alpha m|| > 1/P_1".into()));
    }
    let tight = p1 == &(&two * &rq)
        && &two * &rq * &rx * theta.abs() == BigRational::one()
        && m.unsigned_abs() == *x
        && dist == p1.recip();
    let divides = m.rem_euclid(q_i) == 0;
    let forced_zero = *x < *q || theta.abs() > (rq * p1).recip();
    Ok(BootstrapOutcome {
        divides,
        forced_zero,
        holds: divides && (!forced_zero || *m == 0),
        tight,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BootstrapGrid {
    pub q_max: u64,
    pub m_max: u64,
    /// Cases meeting every precondition.
    pub checked: u64,
    /// Of those, cases where the conclusion is `m = 0`.
    pub forced_zero: u64,
    pub counterexamples: Vec<BootstrapCase>,
    /// Counterexamples with at least one hypothesis strict.
    pub strict_counterexamples: u64,
}

/// Exhaustive check over `q <= q_max`, `|m| <= m_max` and a rational grid of
/// `theta` values with `2 q X |theta| <= 1`, including the boundary.
pub fn bootstrap_grid(q_max: u64, m_max: u64) -> BootstrapGrid {
    let mut grid = BootstrapGrid {
        q_max,
        m_max,
        checked: 0,
        forced_zero: 0,
        counterexamples: Vec::new(),
        strict_counterexamples: 0,
    };
    let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    for q in 1..=q_max {
        let qi = q as i64;
        let p1s = [r(2 * qi, 1), r(4 * qi + 1, 2), r(3 * qi, 1), r(7 * qi, 1), r(41, 1)];
        for a in 0..qi {
            if a.gcd(&qi) != 1 {
                continue;
            }
            for x in 0..=m_max {
                let mut thetas = vec![BigRational::zero()];
                let cap = if x == 0 { 4 * qi * 41 } else { 2 * qi * x as i64 };
                for j in 1..=8 {
                    thetas.push(r(j, 8 * cap));
                    thetas.push(r(-j, 8 * cap));
                }
                if x == 0 {
                    thetas.push(r(1, 3));
                }
                for p1 in p1s.iter().filter(|p| **p >= r(2 * qi, 1)) {
                    for theta in &thetas {
                        let mm = x.min(m_max) as i64;
                        for m in -mm..=mm {
                            let case = BootstrapCase {
                                a,
                                q,
                                theta: theta.clone(),
                                x,
                                p1: p1.clone(),
                                m,
                            };
                            match bootstrap_check(&case) {
                                Ok(out) => {
                                    grid.checked += 1;
                                    grid.forced_zero += out.forced_zero as u64;
                                    if !out.holds {
                                        grid.strict_counterexamples += !out.tight as u64;
                                        grid.counterexamples.push(case);
                                    }
                                }
                                Err(_) => continue,
                            }
                        }
                    }
                }
            }
        }
    }
    grid
}

/// Right-hand side of the Weyl-differencing bound without implicit constant or `P^eps`:
/// `P^n (1/P^2 + M q |theta| + q/P^3 + min(M, 1/(|theta| P^3))/q + M^{-2 psi})^{7/4}`.
pub fn weyl_bound_rhs(n: usize, p: f64, height: f64, q: u64, theta: f64, psi: f64) -> f64 {
    let q = q as f64;
    let th = theta.abs();
    let tail = if th == 0.0 { height } else { height.min(1.0 / (th * p.powi(3))) };
    let psi_term = if psi.is_infinite() && height > 1.0 { 0.0 } else { height.powf(-2.0 * psi) };
    let inner = 1.0 / (p * p) + height * q * th + q / p.powi(3) + tail / q + psi_term;
    p.powi(n as i32) * inner.powf(1.75)
}

/// One row of a Weyl-bound probe log.
#[derive(Clone, Debug, Serialize)]
pub struct WeylProbe {
    #[serde(rename = "P")]
    pub p: u64,
    pub q: u64,
    pub a: i64,
    pub theta: f64,
    pub abs_s: f64,
    pub bound: f64,
    pub ratio: f64,
    pub points: u64,
}

impl WeylProbe {
    pub const CSV_HEADER: &'static str = "P,q,a,theta,abs_S,bound,ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{:.12e},{:.12e},{:.12e}",
            self.p, self.q, self.a, self.theta, self.abs_s, self.bound, self.ratio
        )
    }
}

/// `|S(alpha)|` over `[-P, P]^n` against [`weyl_bound_rhs`] with `M` the height of `phi`.
pub fn weyl_bound_probe(phi: &IntPoly, alpha: &Alpha, p: u64, psi: f64, cfg: &Config) -> Result<WeylProbe> {
    let bx = IntBox::cube(phi.n(), p as i64);
    let s = weyl_sum(phi, alpha, &bx, cfg)?;
    let height = crate::kernel::big_to_f64(&phi.height()).max(1.0);
    let bound = weyl_bound_rhs(phi.n(), p as f64, height, alpha.q, alpha.theta, psi);
    Ok(WeylProbe {
        p,
        q: alpha.q,
        a: alpha.a,
        theta: alpha.theta,
        abs_s: s.norm(),
        bound,
        ratio: s.norm() / bound,
        points: bx.count() as u64,
    })
}

/// Parameters of one minor-arc piece `alpha = a/q + theta` with `q ~ R`, `|theta| ~ phi`.
#[derive(Clone, Debug, Serialize)]
pub struct MinorArcProbe {
    pub q: u64,
    pub a: u64,
    pub theta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub phi_scale: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub kappa: f64,
    pub eta: f64,
    /// Shrinking factor forcing `B_i(h, d) = 0`.
    pub z1: f64,
    /// Shrinking factor forcing `q | B_i(h, d)`.
    pub z2: f64,
}

fn dyadic(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        2f64.powi(x.log2().floor() as i32)
    }
}

impl MinorArcProbe {
    /// `eta = |theta| + 1/(P^2 H M)`, `kappa = (log P)^2 / (H P^2 M^6)`,
    /// `Z_1 = min(R eta P, 1/(R H M P eta))`, `Z_2 = min(1, 1/(R H M P eta))`.
    pub fn new(q: u64, a: u64, theta: f64, p: f64, h: f64, height: f64) -> Result<MinorArcProbe> {
        if q == 0 || a >= q || gcd_u64(a, q) != 1 {
            return Err(LabError::Precondition(format!("need 0 <= a < q and gcd(a, q) = 1, got a={a}, q={q}")));
        }
        if !(p > 1.0 && h > 0.0 && height > 0.0) || !theta.is_finite() {
            return Err(LabError::InvalidInput("need P > 1, H > 0, M > 0 and finite theta".into()));
        }
        let r = dyadic(q as f64);
        let floor = 1.0 / (p * p * h * height);
        let eta = theta.abs() + floor;
        let kappa = p.ln().powi(2) / (h * p * p * height.powi(6));
        let inv = 1.0 / (r * h * height * p * eta);
        Ok(MinorArcProbe {
            q,
            a,
            theta,
            r,
            phi_scale: dyadic(theta.abs()),
            h,
            kappa,
            eta,
            z1: (r * eta * p).min(inv),
            z2: inv.min(1.0),
        })
    }

    pub fn eta_floor(&self, p: f64, height: f64) -> f64 {
        1.0 / (p * p * self.h * height)
    }
}

/// Lattice sum against integral of `e(lambda f)` on a box with real corners (`n <= 2`).
#[derive(Clone, Debug, Serialize)]
pub struct SumIntegral {
    #[serde(with = "complex")]
    pub sum: Complex64,
    #[serde(with = "complex")]
    pub integral: Complex64,
    pub difference: f64,
    /// `1 - max |lambda grad f|` sampled on a grid; the comparison needs this positive.
    pub margin: f64,
    /// Longest side of the box.
    pub side: f64,
}

/// Compare `sum_{x in box} e(lambda f(x))` with `int_box e(lambda f)`.
pub fn sum_vs_integral(f: &IntPoly, lambda: f64, lo: &[f64], hi: &[f64]) -> Result<SumIntegral> {
    let n = f.n();
    if lo.len() != n || hi.len() != n {
        return Err(LabError::DimensionMismatch {
            expected: n,
            got: lo.len().min(hi.len()),
        });
    }
    if !(1..=2).contains(&n) {
        return Err(LabError::InvalidInput("sum/integral comparison supports n = 1, 2".into()));
    }
    let fp = FloatPoly::from_int(f);
    let ilo: Vec<i64> = lo.iter().map(|v| v.ceil() as i64).collect();
    let ihi: Vec<i64> = hi.iter().map(|v| v.floor() as i64).collect();
    let bx = IntBox::new(ilo, ihi)?;
    let sp = small(f)?;
    let mut acc = ComplexSum::default();
    for b in 0..bx.blocks() {
        bx.walk_block(b, |x| {
            acc.add(e(lambda * sp.eval(x) as f64));
            true
        });
    }
    let g = 64;
    let mut worst = 0.0f64;
    let mut pt = vec![0.0; n];
    for k in 0..(g + 1usize).pow(n as u32) {
        let mut rem = k;
        for i in 0..n {
            pt[i] = lo[i] + (hi[i] - lo[i]) * (rem % (g + 1)) as f64 / g as f64;
            rem /= g + 1;
        }
        let grad = fp.gradient(&pt);
        worst = worst.max(grad.iter().fold(0.0f64, |m, v| m.max((lambda * v).abs())));
    }
    let integral = integrate_phase(&fp, lambda, lo, hi)?;
    let sum = acc.value();
    Ok(SumIntegral {
        sum,
        integral,
        difference: (sum - integral).norm(),
        margin: 1.0 - worst,
        side: lo.iter().zip(hi).map(|(a, b)| b - a).fold(0.0, f64::max),
    })
}

fn integrate_phase(fp: &FloatPoly, lambda: f64, lo: &[f64], hi: &[f64]) -> Result<Complex64> {
    let part = |im: bool| -> Result<f64> {
        let val = |x: &[f64]| {
            let z = e(lambda * fp.value(x));
            if im {
                z.im
            } else {
                z.re
            }
        };
        if lo.len() == 1 {
            return Ok(quad::integrate(|t| val(&[t]), &[lo[0], hi[0]], 1e-11, 0.0, 2_000_000)?.value);
        }
        let mut failure = None;
        let outer = quad::integrate(
            |s| match quad::integrate(|t| val(&[s, t]), &[lo[1], hi[1]], 1e-11, 0.0, 200_000) {
                Ok(r) => r.value,
                Err(err) => {
                    failure.get_or_insert(err);
                    0.0
                }
            },
            &[lo[0], hi[0]],
            1e-10,
            0.0,
            200_000,
        )?;
        match failure {
            Some(err) => Err(err),
            None => Ok(outer.value),
        }
    };
    Ok(Complex64::new(part(false)?, part(true)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;
    use crate::io::parse_polynomial;
    use crate::local::rho;
    use crate::poly::watson;

    fn poly(text: &str) -> IntPoly {
        parse_polynomial(text).unwrap().original()
    }

    fn sum_of_cubes() -> IntPoly {
        poly(r#"{"n":3,"form":"monomial","cubic":[[1,1,1,1],[2,2,2,1],[3,3,3,-1]]}"#)
    }

    fn x_cubed() -> IntPoly {
        poly(r#"{"n":1,"cubic":[[1,1,1,1]]}"#)
    }

    #[test]
    fn gauss_sum_examples() {
        let cfg = Config::default();
        let s = gauss_sum(&x_cubed(), 2, 1, &cfg).unwrap();
        assert!(s.direct.norm() < 1e-12 && s.distribution.norm() < 1e-12);
        let s = gauss_sum(&sum_of_cubes(), 1, 0, &cfg).unwrap();
        assert!((s.direct - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let phi = sum_of_cubes();
        let s = gauss_sum(&phi, 3, 1, &cfg).unwrap();
        // independent oracle: sum of e(v/3) over all 27 residues
        let mut re = 0.0;
        let mut im = 0.0;
        for x in 0..3i64 {
            for y in 0..3i64 {
                for z in 0..3i64 {
                    let v = (x * x * x + y * y * y - z * z * z).rem_euclid(3) as f64;
                    re += (TAU * v / 3.0).cos();
                    im += (TAU * v / 3.0).sin();
                }
            }
        }
        assert!((s.direct - Complex64::new(re, im)).norm() < 1e-12);
        assert!(s.discrepancy() < 1e-12);
    }

    #[test]
    fn conjugate_symmetry_is_exact() {
        let phi = sum_of_cubes();
        let cfg = Config::default();
        for q in 2..=9u64 {
            for a in 1..q {
                if gcd_u64(a, q) == 1 {
                    let s = gauss_sum(&phi, q, a, &cfg).unwrap();
                    let t = gauss_sum(&phi, q, q - a, &cfg).unwrap();
                    assert!((s.direct - t.direct.conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn multiplicative_path_matches_direct() {
        let phi = sum_of_cubes();
        let direct = gauss_sum(&phi, 12, 5, &Config::default()).unwrap();
        let split = gauss_sum(&phi, 12, 5, &Config::default().with_budget(100)).unwrap();
        assert!(split.multiplicative && !direct.multiplicative);
        assert!((direct.direct - split.direct).norm() < 1e-9);
        let a = a_of_q(&phi, 12, &Config::default()).unwrap();
        let b = a_of_q(&phi, 12, &Config::default().with_budget(100)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn a_of_q_examples() {
        let cfg = Config::default();
        assert_eq!(a_of_q(&x_cubed(), 1, &cfg).unwrap(), BigRational::one());
        assert!(a_of_q(&x_cubed(), 2, &cfg).unwrap().is_zero());
        assert!(a_of_q(&sum_of_cubes(), 2, &cfg).unwrap().is_zero());
        let c = a_of_q_complex(&sum_of_cubes(), 9, &cfg).unwrap();
        let x = a_of_q(&sum_of_cubes(), 9, &cfg).unwrap();
        assert!((c.re - crate::arith::rat_to_f64(&x)).abs() < 1e-12 && c.im.abs() < 1e-12);
    }

    #[test]
    fn local_factor_identity() {
        let cfg = Config::default();
        let w = watson(3).original();
        for phi in [sum_of_cubes(), w] {
            let n = phi.n() as u32;
            for (p, k) in [(2u64, 3u32), (3, 3), (5, 2)] {
                let a = a_prime_powers(&phi, p, k, &cfg).unwrap();
                for j in 0..=k {
                    let lhs: BigRational = a[..=j as usize].iter().sum();
                    let r = rho(&phi, p, j, &cfg).unwrap();
                    let rhs = BigRational::new(r, BigInt::from(p).pow(j * (n - 1)));
                    assert_eq!(lhs, rhs, "p={p} k={j}");
                }
            }
        }
    }

    #[test]
    fn histogram_folds_consistently() {
        let phi = sum_of_cubes();
        let cfg = Config::default();
        let h27 = value_histogram(&phi, 27, &cfg).unwrap();
        assert_eq!(fold_histogram(&h27, 3, 3).unwrap(), value_histogram(&phi, 3, &cfg).unwrap());
        assert_eq!(h27.iter().sum::<u64>(), 27u64.pow(3));
    }

    #[test]
    fn weyl_sum_examples() {
        let cfg = Config::default();
        let phi = sum_of_cubes();
        let bx = IntBox::cube(3, 4);
        let s = weyl_sum(&phi, &Alpha::rational(0, 1).unwrap(), &bx, &cfg).unwrap();
        assert!((s - Complex64::new(729.0, 0.0)).norm() < 1e-9);
        // 2 * (x^3 + y^3) takes only even values
        let even = poly(r#"{"n":2,"cubic":[[1,1,1,2],[2,2,2,2]]}"#);
        let s = weyl_sum(&even, &Alpha::rational(1, 2).unwrap(), &IntBox::cube(2, 5), &cfg).unwrap();
        assert!((s - Complex64::new(121.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn weyl_sum_matches_reference_order() {
        let phi = poly(r#"{"n":2,"form":"monomial","cubic":[[1,1,1,2],[1,2,2,1],[2,2,2,-1]],"quad":[[1,2,3]],"lin":[1,0],"constant":-4}"#);
        let bx = IntBox::cube(2, 20);
        let alpha = Alpha::new(1, 7, 3.1e-6).unwrap();
        let seq = weyl_sum(&phi, &alpha, &bx, &Config::sequential()).unwrap();
        let par = weyl_sum(&phi, &alpha, &bx, &Config::default()).unwrap();
        assert_eq!(seq, par);
        let mut re = 0.0;
        let mut im = 0.0;
        for y in (-20..=20i64).rev() {
            for x in (-20..=20i64).rev() {
                let v = phi.evaluate_i64(&[x, y]).unwrap().to_f64().unwrap();
                let t = v / 7.0 + 3.1e-6 * v;
                re += (TAU * t).cos();
                im += (TAU * t).sin();
            }
        }
        assert!((seq - Complex64::new(re, im)).norm() < 1e-8 * 1681.0);
    }

    #[test]
    fn bilinear_count_examples() {
        let cfg = Config::default();
        let c = parse_polynomial(r#"{"n":3,"cubic":[[1,2,3,1]]}"#).unwrap().poly;
        let half = Frequency::Rational(ratio(1, 2));
        let quarter = ratio(1, 4);
        assert_eq!(bilinear_count(&c, &half, 3, &[1, 0, 0], &quarter, &cfg).unwrap(), 343);
        let zero = Frequency::Rational(BigRational::zero());
        assert_eq!(bilinear_count(&c, &zero, 2, &[1, 2, 0], &ratio(1, 100), &cfg).unwrap(), 125);
        // alpha = 1/7: 6 B = (6(2 d3), 6 d3, 6(2 d1 + d2)) / 7 must all be near integers
        let seventh = Frequency::Rational(ratio(1, 7));
        let got = bilinear_count(&c, &seventh, 3, &[1, 2, 0], &ratio(1, 7), &cfg).unwrap();
        let mut oracle = 0;
        for d1 in -3..=3i64 {
            for d2 in -3..=3i64 {
                for d3 in -3..=3i64 {
                    let b = [2 * d3, d3, 2 * d1 + d2];
                    if b.iter().all(|v| {
                        let r = (6 * v).rem_euclid(7);
                        r.min(7 - r) * 7 < 7
                    }) {
                        oracle += 1;
                    }
                }
            }
        }
        assert_eq!(got, oracle);
        let real = bilinear_count(&c, &Frequency::Real(1.0 / 7.0), 3, &[1, 2, 0], &ratio(1, 10), &cfg).unwrap();
        assert_eq!(real, oracle);
        assert_eq!(bilinear_count(&c, &seventh, 3, &[1, 2, 0], &ratio(3, 5), &cfg).unwrap(), 343);
    }

    #[test]
    fn shrinking_examples() {
        let cfg = Config::default();
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let r = shrinking_check(&id, 1.0, 0.5, &cfg).unwrap();
        assert_eq!((r.n_z, r.n_one), (1, 9));
        assert_eq!(r.ratio, 9.0 / 4.0);
        let l = vec![vec![0.3, 0.1], vec![0.1, -0.7]];
        assert_eq!(shrinking_check(&l, 2.0, 1.0, &cfg).unwrap().ratio, 1.0);
        let s = shrinking_survey(3, 2.0, 0.5, 20, 7, &cfg).unwrap();
        assert!(s.max_ratio.is_finite() && s.ratios.len() == 20);
    }

    #[test]
    fn bootstrap_examples() {
        let case = |a, q, x, p1, m| BootstrapCase {
            a,
            q,
            theta: BigRational::zero(),
            x,
            p1: ratio(p1, 1),
            m,
        };
        let out = bootstrap_check(&case(1, 3, 2, 6, 0)).unwrap();
        assert!(out.forced_zero && out.holds);
        assert!(bootstrap_check(&case(1, 3, 2, 6, 1)).is_err());
        let out = bootstrap_check(&case(1, 3, 3, 6, 3)).unwrap();
        assert!(out.divides && !out.forced_zero && out.holds);
        assert!(bootstrap_check(&case(3, 6, 3, 12, 0)).is_err());
    }

    #[test]
    fn bootstrap_grid_fails_only_when_every_hypothesis_is_tight() {
        let g = bootstrap_grid(5, 8);
        assert!(g.checked > 1000 && g.forced_zero > 0);
        assert_eq!(g.strict_counterexamples, 0);
        // alpha = 1/2 + 1/4, m = 1: ||3/4|| = 1/4 = 1/P_1 with P_1 = 4 and 2qX|theta| = 1
        let edge = BootstrapCase {
            a: 1,
            q: 2,
            theta: ratio(1, 4),
            x: 1,
            p1: ratio(4, 1),
            m: 1,
        };
        let out = bootstrap_check(&edge).unwrap();
        assert!(out.tight && !out.holds);
        assert!(g.counterexamples.contains(&edge));
    }

    #[test]
    fn weyl_probe_rows() {
        let cfg = Config::default();
        let phi = sum_of_cubes();
        let p0 = weyl_bound_probe(&phi, &Alpha::rational(0, 1).unwrap(), 3, f64::INFINITY, &cfg).unwrap();
        assert!((p0.abs_s - 343.0).abs() < 1e-9 && p0.ratio.is_finite());
        let p = weyl_bound_probe(&phi, &Alpha::rational(1, 3).unwrap(), 20, 1.0, &cfg).unwrap();
        assert!(p.ratio.is_finite() && p.ratio > 0.0);
        assert_eq!(p.csv_row().split(',').count(), WeylProbe::CSV_HEADER.split(',').count());
    }

    #[test]
    fn minor_arc_probe_invariants() {
        let m = MinorArcProbe::new(7, 3, 1e-5, 100.0, 4.0, 2.0).unwrap();
        assert!(m.eta >= m.eta_floor(100.0, 2.0));
        assert_eq!(m.r, 4.0);
        assert!(m.z1 <= 1.0 && m.z2 <= 1.0);
        assert!(MinorArcProbe::new(6, 3, 0.0, 100.0, 4.0, 2.0).is_err());
        assert!(MinorArcProbe::new(5, 5, 0.0, 100.0, 4.0, 2.0).is_err());
    }

    #[test]
    fn lattice_sum_tracks_integral() {
        let f = poly(r#"{"n":1,"cubic":[[1,1,1,1]]}"#);
        // |lambda f'| = 3 lambda x^2 <= 1/2 on [0, 10]
        let r = sum_vs_integral(&f, 1.0 / 600.0, &[0.0], &[10.0]).unwrap();
        assert!(r.margin >= 0.49);
        assert!(r.difference < 2.0, "{r:?}");
        let g = poly(r#"{"n":2,"cubic":[[1,1,1,1],[2,2,2,1]]}"#);
        let r = sum_vs_integral(&g, 1.0 / 800.0, &[0.0, 0.0], &[10.0, 10.0]).unwrap();
        assert!(r.margin > 0.5);
        assert!(r.difference < 40.0, "{r:?}");
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::default();
        c.add(1e16);
        for _ in 0..1000 {
            c.add(1.0);
        }
        c.add(-1e16);
        assert_eq!(c.value(), 1000.0);
    }
}
