//! Invariants of a cubic form: `Delta(C)`, Hessian rank statistics, the
//! psi-good diagnostic and Siegel-lemma small solutions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{ceil_int, primes_up_to};
use crate::error::{check_budget, LabError, Result};
use crate::exec::Config;
use crate::linalg;
use crate::poly::{canonical_pairs, CubicPolynomial};

/// Trial division bound used when factoring `Delta`.
pub const DELTA_FACTOR_BOUND: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaInvariant {
    #[serde(with = "crate::serde_big")]
    pub value: BigInt,
    /// `p -> v_p(Delta)` for primes up to the trial division bound.
    pub factorization: BTreeMap<u64, u32>,
    /// Part of `Delta` left after trial division (1 when fully factored).
    #[serde(with = "crate::serde_big")]
    pub cofactor: BigInt,
}

impl DeltaInvariant {
    pub fn is_degenerate(&self) -> bool {
        self.value.is_zero()
    }

    /// `v_p(Delta)`; `None` for degenerate forms.
    pub fn valuation(&self, p: u64) -> Option<u32> {
        if self.value.is_zero() {
            return None;
        }
        if let Some(v) = self.factorization.get(&p) {
            return Some(*v);
        }
        if p <= DELTA_FACTOR_BOUND {
            return Some(0);
        }
        crate::arith::valuation(&self.cofactor, p)
    }
}

/// The `n x binom(n+1, 2)` matrix with entry `c_{ijk}` in row `i`, column `(j, k)`.
pub fn coefficient_matrix(c: &CubicPolynomial) -> Vec<Vec<BigInt>> {
    let n = c.n();
    (0..n)
        .map(|i| canonical_pairs(n).map(|(j, k)| c.c(i, j, k).clone()).collect())
        .collect()
}

/// `Delta(C)`: gcd of the maximal minors of [`coefficient_matrix`], computed
/// exactly from a unimodular column echelon form. Only the cubic part is used.
pub fn delta(c: &CubicPolynomial) -> DeltaInvariant {
    let value = linalg::maximal_minor_gcd(&coefficient_matrix(c));
    factor_delta(value)
}

/// `Delta` of the homogenized polynomial.
pub fn delta_phi(phi: &CubicPolynomial) -> DeltaInvariant {
    delta(&phi.homogenize().poly)
}

fn factor_delta(value: BigInt) -> DeltaInvariant {
    let mut factorization = BTreeMap::new();
    let mut rest = value.clone();
    if !rest.is_zero() {
        for p in primes_up_to(DELTA_FACTOR_BOUND) {
            let bp = BigInt::from(p);
            if &bp * &bp > rest {
                break;
            }
            let mut v = 0;
            while (&rest % &bp).is_zero() {
                rest /= &bp;
                v += 1;
            }
            if v > 0 {
                factorization.insert(p, v);
            }
        }
        // a remaining factor below the bound squared is prime
        if rest > BigInt::one() && rest <= BigInt::from(DELTA_FACTOR_BOUND) * BigInt::from(DELTA_FACTOR_BOUND) {
            if let Some(p) = rest.to_u64() {
                *factorization.entry(p).or_insert(0) += 1;
                rest = BigInt::one();
            }
        }
    }
    DeltaInvariant {
        value,
        factorization,
        cofactor: rest,
    }
}

/// gcd of all maximal minors by explicit enumeration of column subsets.
/// Returns `None` when more than `max_subsets` subsets would be needed.
pub fn delta_by_minors(c: &CubicPolynomial, max_subsets: u64) -> Option<BigInt> {
    let a = coefficient_matrix(c);
    let n = c.n();
    let cols = n * (n + 1) / 2;
    let subsets = binomial(cols as u64, n as u64)?;
    if subsets > max_subsets {
        return None;
    }
    let mut g = BigInt::zero();
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let sub: Vec<Vec<BigInt>> = a.iter().map(|row| pick.iter().map(|&j| row[j].clone()).collect()).collect();
        g = g.gcd(&linalg::det_big(&sub));
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return Some(g);
            }
            i -= 1;
            if pick[i] < cols - n + i {
                pick[i] += 1;
                for t in i + 1..n {
                    pick[t] = pick[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > u64::MAX as u128 {
            return None;
        }
    }
    Some(r as u64)
}

/// A non-zero `v mod p` with `sum_i v_i c_{ijk} = 0 mod p` for all `j, k`,
/// found by exhaustive search (the form is then degenerate mod `p`).
pub fn degeneracy_witness_mod_p(c: &CubicPolynomial, p: u64, budget: u64) -> Result<Option<Vec<u64>>> {
    let n = c.n();
    check_budget((p as u128).saturating_pow(n as u32), budget)?;
    let a = coefficient_matrix(c);
    let rows: Vec<Vec<u64>> = a
        .iter()
        .map(|r| r.iter().map(|v| crate::arith::mod_u64(v, p)).collect())
        .collect();
    let cols = rows.first().map_or(0, Vec::len);
    let mut v = vec![0u64; n];
    loop {
        // odometer increment; skips the zero vector
        let mut i = 0;
        while i < n {
            v[i] += 1;
            if v[i] < p {
                break;
            }
            v[i] = 0;
            i += 1;
        }
        if i == n {
            return Ok(None);
        }
        let ok = (0..cols).all(|col| {
            (0..n).map(|r| v[r] as u128 * rows[r][col] as u128).sum::<u128>() % p as u128 == 0
        });
        if ok {
            return Ok(Some(v));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankCensus {
    #[serde(rename = "H")]
    pub h: u64,
    pub prime: Option<u64>,
    /// rank -> number of integer `x` with `|x| < H` and that Hessian rank.
    pub counts: BTreeMap<usize, u64>,
    /// rank -> `log(count) / log(H)` (empty for `H = 1`).
    pub exponent_fit: BTreeMap<usize, f64>,
}

impl RankCensus {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

fn small_tensor(c: &CubicPolynomial) -> Result<Vec<Vec<Vec<i64>>>> {
    let n = c.n();
    let mut out = vec![vec![vec![0i64; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[k][i][j] = c
                    .c(i, j, k)
                    .to_i64()
                    .filter(|v| v.unsigned_abs() < (1 << 40))
                    .ok_or_else(|| LabError::InvalidInput("census needs coefficients below 2^40".into()))?;
            }
        }
    }
    Ok(out)
}

/// Exact Hessian rank counts over `|x_i| < H`, over `Q` or `F_p`.
pub fn rank_census(c: &CubicPolynomial, h: u64, p: Option<u64>, cfg: &Config) -> Result<RankCensus> {
    if h == 0 {
        return Err(LabError::InvalidInput("H must be at least 1".into()));
    }
    if let Some(p) = p {
        if !crate::arith::is_prime(p) {
            return Err(LabError::InvalidInput(format!("{p} is not prime")));
        }
    }
    let n = c.n();
    let side = 2 * h - 1;
    check_budget((side as u128).saturating_pow(n as u32), cfg.budget)?;
    let basis = small_tensor(c)?;
    let lo = -(h as i64 - 1);
    let hi = h as i64 - 1;
    let rank_of = |m: &[Vec<i64>]| match p {
        Some(p) => linalg::rank_mod_p(m, p),
        None => linalg::rank_i64(m),
    };
    let block = |b: usize| -> Vec<u64> {
        let mut counts = vec![0u64; n + 1];
        let mut x = vec![lo; n];
        x[0] = lo + b as i64;
        let mut m = vec![vec![0i64; n]; n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    m[i][j] += basis[k][i][j] * x[k];
                }
            }
        }
        loop {
            counts[rank_of(&m)] += 1;
            // odometer over x_2..x_n with incremental Hessian updates
            let mut k = n;
            for t in 1..n {
                if x[t] < hi {
                    x[t] += 1;
                    for i in 0..n {
                        for j in 0..n {
                            m[i][j] += basis[t][i][j];
                        }
                    }
                    k = t;
                    break;
                }
                let span = hi - lo;
                x[t] = lo;
                for i in 0..n {
                    for j in 0..n {
                        m[i][j] -= basis[t][i][j] * span;
                    }
                }
            }
            if k == n {
                break;
            }
        }
        counts
    };
    let merged = cfg.exec.map_reduce(
        side as usize,
        block,
        vec![0u64; n + 1],
        |mut acc, v| {
            acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
            acc
        },
    );
    let counts: BTreeMap<usize, u64> = merged.into_iter().enumerate().filter(|(_, c)| *c > 0).collect();
    let exponent_fit = if h >= 2 {
        counts.iter().map(|(&r, &c)| (r, (c as f64).ln() / (h as f64).ln())).collect()
    } else {
        BTreeMap::new()
    };
    Ok(RankCensus {
        h,
        prime: p,
        counts,
        exponent_fit,
    })
}

/// Exponent profile used by [`psi_good_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensusProfile {
    /// `#{r(x) = r} << H^{n - 14 + r}`.
    PsiGood,
    /// `#{r(x) = r} << H^r`, the non-singular regime.
    NonSingular,
}

impl CensusProfile {
    pub fn exponent(self, n: usize, r: usize) -> i64 {
        match self {
            CensusProfile::PsiGood => n as i64 - 14 + r as i64,
            CensusProfile::NonSingular => r as i64,
        }
    }

    /// Psi-good for `n >= 14`, non-singular otherwise.
    pub fn default_for(n: usize) -> Self {
        if n >= 14 {
            CensusProfile::PsiGood
        } else {
            CensusProfile::NonSingular
        }
    }
}

/// Default multiplier on the diagonal-form normalization `binom(n, r) 2^r`.
pub const PSI_GOOD_CONSTANT: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsiGoodRow {
    #[serde(rename = "H")]
    pub h: u64,
    pub r: usize,
    pub count: u64,
    /// `count / H^e`.
    pub ratio: f64,
    /// `ratio / (binom(n, r) 2^r)`, compared against the constant.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsiGoodReport {
    pub profile: CensusProfile,
    pub constant: f64,
    pub rows: Vec<PsiGoodRow>,
    pub consistent: bool,
    /// Heath-Brown: every cubic form in at most 14 variables has `h <= 13`.
    pub h_at_most_13_certain: bool,
}

/// Census for `H = 1, 2, 4, ..., H_max` with ratios against the chosen profile.
/// The verdict is a diagnostic, not a proof.
pub fn psi_good_report(
    c: &CubicPolynomial,
    h_max: u64,
    profile: CensusProfile,
    constant: f64,
    cfg: &Config,
) -> Result<PsiGoodReport> {
    let n = c.n();
    let mut rows = Vec::new();
    let mut hs = vec![1u64];
    let mut h = 2;
    while h <= h_max {
        hs.push(h);
        h *= 2;
    }
    for &h in &hs {
        let census = rank_census(c, h, None, cfg)?;
        for (&r, &count) in &census.counts {
            if r > 13 {
                continue;
            }
            let e = profile.exponent(n, r);
            let ratio = count as f64 / (h as f64).powi(e as i32);
            let norm = binomial(n as u64, r as u64).unwrap_or(u64::MAX) as f64 * 2f64.powi(r as i32);
            rows.push(PsiGoodRow {
                h,
                r,
                count,
                ratio,
                normalized: ratio / norm,
            });
        }
    }
    // H = 1 only sees the origin and is consistent by definition
    let consistent = rows.iter().filter(|row| row.h > 1).all(|row| row.normalized <= constant);
    Ok(PsiGoodReport {
        profile,
        constant,
        rows,
        consistent,
        h_at_most_13_certain: n <= 14,
    })
}

/// Non-zero integer solution of `A x = 0` with `|x| <= (n maxentry)^{m/(n-m)}`.
pub fn siegel_solve(a: &[Vec<BigInt>], cfg: &Config) -> Result<Vec<BigInt>> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(LabError::InvalidInput("matrix rows must have equal positive length".into()));
    }
    let kernel = linalg::integer_kernel(a, n);
    if kernel.is_empty() {
        return Err(LabError::Precondition("matrix has full column rank".into()));
    }
    let reduced = linalg::lll(&kernel);
    let mut best: Option<Vec<BigInt>> = None;
    let consider = |v: Vec<BigInt>, best: &mut Option<Vec<BigInt>>| {
        if v.iter().all(Zero::is_zero) {
            return;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let (nv, nb) = (linalg::sup_norm(&v), linalg::sup_norm(b));
                nv < nb || (nv == nb && v > *b)
            }
        };
        if better {
            *best = Some(v);
        }
    };
    for (i, v) in reduced.iter().enumerate() {
        let mut v = v.clone();
        linalg::normalize_sign(&mut v);
        consider(v.clone(), &mut best);
        for w in &reduced[i + 1..] {
            for s in [1, -1] {
                let mut c: Vec<BigInt> = v.iter().zip(w).map(|(x, y)| x + y * BigInt::from(s)).collect();
                linalg::normalize_sign(&mut c);
                consider(c, &mut best);
            }
        }
    }
    let mut x = best.expect("kernel is non-trivial");
    if m < n {
        let bound = siegel_bound(a);
        if BigRational::from_integer(linalg::sup_norm(&x)) > bound {
            let b = bound.floor().to_integer();
            x = bounded_kernel_search(a, &b, cfg)?.ok_or_else(|| {
                LabError::Numerical("no kernel vector within the Siegel bound".into())
            })?;
        }
    }
    Ok(x)
}

/// `(n maxentry)^{m/(n-m)}` as a rational lower estimate (the floor of the
/// real bound is exact when it is an integer, otherwise a lower bound on it).
fn siegel_bound(a: &[Vec<BigInt>]) -> BigRational {
    let m = a.len();
    let n = a[0].len();
    let maxe = a.iter().flatten().map(|v| v.abs()).max().unwrap_or_else(BigInt::zero);
    let base = (BigInt::from(n) * maxe).to_f64().unwrap_or(f64::INFINITY);
    let val = base.powf(m as f64 / (n - m) as f64);
    let fl = BigInt::from(val.floor() as i64);
    // exact integer check on the floor candidate: fl^{n-m} <= base^m
    let lhs = num_traits::pow(fl.clone(), n - m);
    let rhs = num_traits::pow(BigInt::from(n) * a.iter().flatten().map(|v| v.abs()).max().unwrap(), m);
    if lhs <= rhs {
        BigRational::from_integer(fl)
    } else {
        BigRational::from_integer(fl - 1)
    }
}

/// Smallest-norm non-zero kernel vector with `|x| <= bound`, by enumeration.
pub fn bounded_kernel_search(a: &[Vec<BigInt>], bound: &BigInt, cfg: &Config) -> Result<Option<Vec<BigInt>>> {
    let n = a[0].len();
    let b = bound.to_i64().ok_or(LabError::BudgetExceeded {
        required: u128::MAX,
        budget: cfg.budget,
    })?;
    for r in 1..=b {
        let side = (2 * r + 1) as u128;
        check_budget(side.saturating_pow(n as u32), cfg.budget)?;
        let mut x = vec![-r; n];
        loop {
            if x.iter().any(|v| v.abs() == r) && x.iter().find(|v| **v != 0).is_some_and(|v| *v > 0) {
                let ok = a.iter().all(|row| row.iter().zip(&x).map(|(c, v)| c * BigInt::from(*v)).sum::<BigInt>().is_zero());
                if ok {
                    return Ok(Some(x.iter().map(|&v| BigInt::from(v)).collect()));
                }
            }
            let mut i = n;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if x[i] < r {
                    x[i] += 1;
                    for t in i + 1..n {
                        x[t] = -r;
                    }
                    i = usize::MAX;
                    break;
                }
            }
            if i != usize::MAX {
                break;
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubspaceBound {
    #[serde(with = "crate::serde_rat")]
    pub exponent: BigRational,
    #[serde(with = "crate::serde_big")]
    pub exponent_ceiling: BigInt,
    /// `M^{ceil(exponent)}` when it has at most 2^24 bits.
    #[serde(with = "crate::serde_big_opt")]
    pub value: Option<BigInt>,
}

/// Size bound `M^{97 + 91 psi}` for a non-zero point on the rational subspace
/// forced by failure of psi-goodness. Only the exponent is meaningful; no
/// constant is asserted.
pub fn small_subspace_solution_bound(psi: &BigRational, m: &BigInt) -> Result<SubspaceBound> {
    if psi.is_negative() {
        return Err(LabError::InvalidInput("psi must be non-negative".into()));
    }
    if *m < BigInt::from(2) {
        return Err(LabError::InvalidInput("M must be at least 2".into()));
    }
    let exponent = BigRational::from_integer(BigInt::from(97)) + BigRational::from_integer(BigInt::from(91)) * psi;
    let exponent_ceiling = ceil_int(&exponent);
    let bits = exponent_ceiling.to_f64().unwrap_or(f64::INFINITY) * (m.bits() as f64);
    let value = if bits <= (1u64 << 24) as f64 {
        Some(num_traits::pow(m.clone(), exponent_ceiling.to_usize().expect("small")))
    } else {
        None
    };
    Ok(SubspaceBound {
        exponent,
        exponent_ceiling,
        value,
    })
}
