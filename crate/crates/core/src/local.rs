//! p-adic solubility: counts `rho(p^k)`, `rho*(p^k)`, Hensel lifting, lifting
//! levels and certification of the congruence conditions.
//!
//! All functions work on the integer polynomial as given ([`IntPoly`]), never
//! on a rescaled tensor form, since rescaling changes congruence behaviour at
//! 2 and 3.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::arith::{big_pow, is_prime, primes_up_to};
use crate::error::{check_budget, LabError, Result};
use crate::exec::Config;
use crate::invariants::{delta, delta_phi, DeltaInvariant};
use crate::kernel::SmallPoly;
use crate::poly::IntPoly;

/// Residue boxes up to this many points are counted directly in automatic mode.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 20;

/// Evaluations allowed per prime in the certification search.
pub const SEARCH_BUDGET: u64 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMethod {
    /// Direct count when the residue box is small, stratified otherwise.
    Auto,
    BruteForce,
    /// Lift non-singular roots mod p and recurse on the singular ones.
    Stratified,
}

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(LabError::InvalidInput(format!("{p} is not prime")))
    }
}

fn box_size(p: u64, k: u32, n: usize) -> u128 {
    (p as u128).saturating_pow(k.saturating_mul(n as u32))
}

/// Number of `x mod p^k` with `phi(x) = 0 mod p^k`.
pub fn rho(phi: &IntPoly, p: u64, k: u32, cfg: &Config) -> Result<BigInt> {
    rho_with(phi, p, k, CountMethod::Auto, cfg)
}

/// Number of solutions mod `p^k` with `p^{ceil(k/2)}` not dividing the gradient.
/// For `k = 1` this is the usual count of non-singular solutions; for larger `k`
/// the exponent `ceil(k/2)` is the level at which Hensel's lemma applies.
pub fn rho_star(phi: &IntPoly, p: u64, k: u32, cfg: &Config) -> Result<BigInt> {
    rho_star_with(phi, p, k, CountMethod::Auto, cfg)
}

pub fn rho_with(phi: &IntPoly, p: u64, k: u32, method: CountMethod, cfg: &Config) -> Result<BigInt> {
    check_prime(p)?;
    let mut work = 0u128;
    count(phi, p, k, None, method, cfg, &mut work)
}

pub fn rho_star_with(phi: &IntPoly, p: u64, k: u32, method: CountMethod, cfg: &Config) -> Result<BigInt> {
    check_prime(p)?;
    if k == 0 {
        return Err(LabError::InvalidInput("rho* needs k >= 1".into()));
    }
    let mut work = 0u128;
    count(phi, p, k, Some(k.div_ceil(2)), method, cfg, &mut work)
}

/// `p^{-k(n-1)} rho(p^k)` as an exact rational.
pub fn local_factor(phi: &IntPoly, p: u64, k: u32, cfg: &Config) -> Result<BigRational> {
    let r = rho(phi, p, k, cfg)?;
    let n = phi.n() as u32;
    Ok(BigRational::new(r, big_pow(p, k * (n - 1))))
}

/// Counts `y mod p^k` with `g(y) = 0 mod p^k` and, when `c` is given,
/// `p^c` not dividing `grad g(y)`.
fn count(
    g: &IntPoly,
    p: u64,
    k: u32,
    c: Option<u32>,
    method: CountMethod,
    cfg: &Config,
    work: &mut u128,
) -> Result<BigInt> {
    let n = g.n();
    if c == Some(0) {
        return Ok(BigInt::zero());
    }
    if k == 0 {
        // the gradient is constant mod p^c on the single class here
        return Ok(match c {
            None => BigInt::one(),
            Some(c) => {
                let grad = g.gradient(&vec![BigInt::zero(); n])?;
                let pc = big_pow(p, c);
                BigInt::from(u8::from(grad.iter().any(|v| !v.is_multiple_of(&pc))))
            }
        });
    }
    let size = box_size(p, k, n);
    let brute = match method {
        CountMethod::BruteForce => true,
        CountMethod::Stratified => false,
        CountMethod::Auto => size <= BRUTE_FORCE_LIMIT as u128 || k == 1,
    };
    if brute || k == 1 {
        *work += size;
        check_budget(*work, cfg.budget)?;
        return brute_count(g, p, k, c, cfg);
    }
    let bp = BigInt::from(p);
    // g identically divisible by p: every class mod p^{k-1} has p^n lifts
    if let Some(h) = g.div_exact(&bp) {
        let inner = count(&h, p, k - 1, c.map(|c| c - 1), method, cfg, work)?;
        return Ok(inner * big_pow(p, n as u32));
    }
    *work += box_size(p, 1, n);
    check_budget(*work, cfg.budget)?;
    let roots = roots_mod_p(g, p, cfg)?;
    let mut total = BigInt::zero();
    let lifts = big_pow(p, (k - 1) * (n as u32 - 1));
    for (x0, nonsingular) in roots {
        if nonsingular {
            total += &lifts;
        } else {
            let shift: Vec<BigInt> = x0.iter().map(|&v| BigInt::from(v)).collect();
            let h = g
                .affine_substitute(&shift, &bp)
                .div_exact(&bp)
                .expect("singular root gives divisible substitution");
            total += count(&h, p, k - 1, c, method, cfg, work)?;
        }
    }
    Ok(total)
}

/// Roots of `g` mod `p` with a flag for `p` not dividing the gradient.
fn roots_mod_p(g: &IntPoly, p: u64, cfg: &Config) -> Result<Vec<(Vec<u64>, bool)>> {
    let n = g.n();
    let reduced = reduce_mod(g, p);
    let sp = SmallPoly::from_int(&reduced).expect("reduced coefficients are small");
    let blocks = cfg.exec.map_blocks(p as usize, |first| {
        let mut out = Vec::new();
        let mut x = vec![0u64; n];
        x[0] = first as u64;
        let mut grad = vec![0u64; n];
        loop {
            if sp.eval_mod(&x, p) == 0 {
                sp.gradient_mod(&x, p, &mut grad);
                out.push((x.clone(), grad.iter().any(|&v| v != 0)));
            }
            if !odometer(&mut x[1..], p) {
                break;
            }
        }
        out
    });
    Ok(blocks.into_iter().flatten().collect())
}

/// Advance a little-endian-last odometer in `[0, base)`; false after wrap-around.
fn odometer(x: &mut [u64], base: u64) -> bool {
    for v in x.iter_mut().rev() {
        *v += 1;
        if *v < base {
            return true;
        }
        *v = 0;
    }
    false
}

fn reduce_mod(g: &IntPoly, m: u64) -> IntPoly {
    let bm = BigInt::from(m);
    let monos: Vec<(Vec<usize>, BigInt)> = g.terms().iter().map(|(i, c)| (i.clone(), c.mod_floor(&bm))).collect();
    IntPoly::from_monomials(g.n(), &monos).expect("cubic")
}

fn brute_count(g: &IntPoly, p: u64, k: u32, c: Option<u32>, cfg: &Config) -> Result<BigInt> {
    let n = g.n();
    let m = p
        .checked_pow(k)
        .filter(|&m| m < 1 << 62)
        .ok_or_else(|| LabError::InvalidInput(format!("modulus {p}^{k} too large for direct counting")))?;
    let mc = match c {
        Some(c) => Some(p.checked_pow(c).filter(|&m| m < 1 << 62).ok_or_else(|| {
            LabError::InvalidInput(format!("gradient modulus {p}^{c} too large for direct counting"))
        })?),
        None => None,
    };
    // values are taken mod p^k, gradients mod p^c; reduce against their lcm
    let lcm = mc.map_or(m, |mc| mc.max(m));
    let sp = SmallPoly::from_int(&reduce_mod(g, lcm)).expect("reduced coefficients are small");
    let total: u64 = cfg.exec.map_reduce(
        m as usize,
        |first| {
            let mut x = vec![0u64; n];
            x[0] = first as u64;
            let mut grad = vec![0u64; n];
            let mut local = 0u64;
            loop {
                if sp.eval_mod(&x, m) == 0 {
                    match mc {
                        None => local += 1,
                        Some(mc) => {
                            sp.gradient_mod(&x, mc, &mut grad);
                            if grad.iter().any(|&v| v != 0) {
                                local += 1;
                            }
                        }
                    }
                }
                if !odometer(&mut x[1..], m) {
                    break;
                }
            }
            local
        },
        0,
        |a, b| a + b,
    );
    Ok(BigInt::from(total))
}

/// Newton lifting in the coordinate of least gradient valuation.
///
/// Requires `phi(x) = 0 mod p^{2l-1}` and `p^l` not dividing `grad phi(x)`; returns
/// `y = x mod p^l` with `phi(y) = 0 mod p^target`, reduced into `[0, p^target)`.
pub fn hensel_lift(phi: &IntPoly, p: u64, x: &[BigInt], ell: u32, target: u32) -> Result<Vec<BigInt>> {
    check_prime(p)?;
    if ell == 0 {
        return Err(LabError::Precondition("lifting level must be at least 1".into()));
    }
    let bp = BigInt::from(p);
    let val = phi.evaluate(x)?;
    let need = big_pow(p, 2 * ell - 1);
    if !val.is_multiple_of(&need) {
        return Err(LabError::Precondition(format!(
            "phi(x) is not divisible by {p}^{}",
            2 * ell - 1
        )));
    }
    let grad = phi.gradient(x)?;
    let (i, v) = min_valuation(&grad, p, ell).ok_or_else(|| {
        LabError::Precondition(format!("{p}^{ell} divides every partial derivative"))
    })?;
    let modulus = big_pow(p, target.max(ell));
    let mut y: Vec<BigInt> = x.to_vec();
    loop {
        let val = phi.evaluate(&y)?;
        if val.is_multiple_of(&modulus) {
            break;
        }
        let d = phi.gradient(&y)?[i].clone();
        let pv = big_pow(p, v);
        debug_assert!(d.is_multiple_of(&pv) && !d.is_multiple_of(&(&pv * &bp)));
        let unit = (&d / &pv).mod_floor(&modulus);
        let inv = crate::arith::mod_inverse(&unit, &modulus).expect("unit");
        let t = (-(val / &pv) * inv).mod_floor(&modulus);
        y[i] = (&y[i] + t).mod_floor(&modulus);
    }
    let m = big_pow(p, target);
    Ok(y.into_iter().map(|v| v.mod_floor(&m)).collect())
}

/// `(index, v)` of the first partial derivative with least valuation, when `v < cap`.
fn min_valuation(grad: &[BigInt], p: u64, cap: u32) -> Option<(usize, u32)> {
    let bp = BigInt::from(p);
    let mut best: Option<(usize, u32)> = None;
    for (i, g) in grad.iter().enumerate() {
        if g.is_zero() {
            continue;
        }
        let mut v = 0;
        let mut t = g.clone();
        while v < cap && t.is_multiple_of(&bp) {
            t /= &bp;
            v += 1;
        }
        if v < cap && best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Homogeneous,
    Inhomogeneous,
}

/// `l_C(p) = 3 floor(v / (n - 9)) + 3` for forms (`n >= 10`), and
/// `l_phi(p) = 98` if `v = 0`, else `144 v + 2` for polynomials (`n >= 15`).
pub fn lifting_level(kind: Kind, v_delta: u32, n: usize) -> Result<u32> {
    match kind {
        Kind::Homogeneous => {
            if n < 10 {
                return Err(LabError::OutOfRange { n, min: 10 });
            }
            Ok(3 * (v_delta / (n as u32 - 9)) + 3)
        }
        Kind::Inhomogeneous => {
            if n < 15 {
                return Err(LabError::OutOfRange { n, min: 15 });
            }
            Ok(if v_delta == 0 { 98 } else { 144 * v_delta + 2 })
        }
    }
}

/// Largest `t` with `p^t <= P0`.
pub fn log_floor(p: u64, p0: u64) -> u32 {
    let mut t = 0;
    let mut q: u128 = p as u128;
    while q <= p0 as u128 {
        t += 1;
        q *= p as u128;
    }
    t
}

/// `k(p) = max(t, 2 l - 1)` when `p | Delta` and `l` is available, else `t`.
pub fn k_threshold(p: u64, p0: u64, p_divides_delta: bool, ell: Option<u32>) -> u32 {
    let t = log_floor(p, p0);
    match (p_divides_delta, ell) {
        (true, Some(l)) => t.max(2 * l - 1),
        _ => t,
    }
}

/// A solution `x mod p^level` with `p^{v+1}` not dividing the gradient and
/// `2v + 1 <= level`; Hensel lifts it to every power of `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HenselWitness {
    #[serde(with = "crate::serde_big_vec")]
    pub x: Vec<BigInt>,
    pub level: u32,
    pub grad_valuation: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Search {
    /// Deepest level with a solution when the tree was exhausted.
    Exhausted { deepest: u32, solution: Option<Vec<BigInt>> },
    Witness { witness: HenselWitness, solution_at_k: Option<Vec<BigInt>> },
    Budget { deepest: u32, solution: Option<Vec<BigInt>> },
}

/// Depth-first search through solutions mod `p, p^2, ...` in lexicographic
/// digit order, stopping at the first Hensel witness. Records the first
/// solution reaching level `k`.
fn solution_search(phi: &IntPoly, p: u64, k: u32, max_depth: u32, budget: u64) -> Result<Search> {
    let n = phi.n();
    let bp = BigInt::from(p);
    let mut evals = 0u64;
    let mut deepest = 0u32;
    let mut at_k: Option<Vec<BigInt>> = if k == 0 { Some(vec![BigInt::zero(); n]) } else { None };
    // stack of (x mod p^j, j, next digit vector to try)
    struct Frame {
        x: Vec<BigInt>,
        j: u32,
        reduced: SmallPoly,
        digits: Vec<u64>,
        done: bool,
    }
    let frame_for = |x: Vec<BigInt>, j: u32| -> Frame {
        let pj = big_pow(p, j);
        let g = phi.affine_substitute(&x, &pj).div_exact(&pj).expect("x solves mod p^j");
        let reduced = SmallPoly::from_int(&reduce_mod(&g, p)).expect("small");
        Frame {
            x,
            j,
            reduced,
            digits: vec![0; n],
            done: false,
        }
    };
    let mut stack = vec![frame_for(vec![BigInt::zero(); n], 0)];
    while let Some(top) = stack.last_mut() {
        if top.done || top.j >= max_depth {
            stack.pop();
            continue;
        }
        // scan digits for the next root of the reduced fiber polynomial
        let mut found = None;
        loop {
            evals += 1;
            if evals > budget {
                return Ok(Search::Budget { deepest, solution: at_k });
            }
            if top.reduced.eval_mod(&top.digits, p) == 0 {
                found = Some(top.digits.clone());
            }
            if !odometer(&mut top.digits, p) {
                top.done = true;
            }
            if found.is_some() || top.done {
                break;
            }
        }
        let Some(d) = found else { continue };
        let pj = big_pow(p, top.j);
        let x: Vec<BigInt> = top.x.iter().zip(&d).map(|(a, &b)| a + &pj * BigInt::from(b)).collect();
        let j = top.j + 1;
        deepest = deepest.max(j);
        if j == k && at_k.is_none() {
            at_k = Some(x.clone());
        }
        let grad = phi.gradient(&x)?;
        if let Some((_, v)) = min_valuation(&grad, p, j) {
            if 2 * v + 1 <= j {
                let m = &pj * &bp;
                let witness = HenselWitness {
                    x: x.iter().map(|t| t.mod_floor(&m)).collect(),
                    level: j,
                    grad_valuation: v,
                };
                return Ok(Search::Witness { witness, solution_at_k: at_k });
            }
        }
        stack.push(frame_for(x, j));
    }
    Ok(Search::Exhausted { deepest, solution: at_k })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimeCertificate {
    pub p: u64,
    pub v_delta: Option<u32>,
    pub ell: Option<u32>,
    pub k_threshold: u32,
    /// A solution mod `p^k_threshold`, absent on violation.
    #[serde(with = "crate::serde_big_vec_opt")]
    pub solution: Option<Vec<BigInt>>,
    pub witness: Option<HenselWitness>,
    /// True when the witness certifies solubility modulo every power of `p`.
    pub all_powers: bool,
    /// Smallest `k` with no solution mod `p^k`.
    pub violation: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum NccStatus {
    Certified,
    /// The smallest prime power without solutions.
    Violation { p: u64, k: u32 },
    /// Degenerate input: no finite threshold is available.
    UnboundedCheckRequired,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NccCertificate {
    #[serde(rename = "P0")]
    pub p0: u64,
    pub kind: Kind,
    pub delta: DeltaInvariant,
    pub primes: Vec<PrimeCertificate>,
    pub status: NccStatus,
}

/// Kind and `Delta` used for thresholds: `Delta(C)` for forms, otherwise
/// `Delta` of the homogenization, both of the integral symmetric tensor form.
pub fn threshold_delta(phi: &IntPoly) -> (Kind, DeltaInvariant) {
    let sym = phi.symmetrize().poly;
    if phi.is_homogeneous() {
        (Kind::Homogeneous, delta(&sym))
    } else {
        (Kind::Inhomogeneous, delta_phi(&sym))
    }
}

/// Solubility modulo `p^k` for a single prime, with a Hensel witness when one
/// is found within the search depth.
pub fn certify_prime(
    phi: &IntPoly,
    p: u64,
    k: u32,
    max_depth: u32,
    budget: u64,
) -> Result<(Option<Vec<BigInt>>, Option<HenselWitness>, Option<u32>)> {
    check_prime(p)?;
    let m = big_pow(p, k);
    let reduce = |v: Vec<BigInt>| v.into_iter().map(|t| t.mod_floor(&m)).collect::<Vec<_>>();
    match solution_search(phi, p, k, max_depth.max(k), budget)? {
        Search::Witness { witness, solution_at_k } => {
            let sol = match solution_at_k {
                Some(s) => s,
                None => hensel_lift(phi, p, &witness.x, witness.grad_valuation + 1, k)?,
            };
            Ok((Some(reduce(sol)), Some(witness), None))
        }
        Search::Exhausted { deepest, solution } => {
            if deepest >= k {
                Ok((Some(reduce(solution.expect("level k reached"))), None, None))
            } else {
                Ok((None, None, Some(deepest + 1)))
            }
        }
        Search::Budget { deepest, solution } => {
            if deepest >= k {
                Ok((Some(reduce(solution.expect("level k reached"))), None, None))
            } else {
                Err(LabError::BudgetExceeded {
                    required: budget as u128 + 1,
                    budget,
                })
            }
        }
    }
}

/// Check solubility modulo `p^{k(p)}` for every prime `p <= P0`.
pub fn ncc_certify(phi: &IntPoly, p0: u64, cfg: &Config) -> Result<NccCertificate> {
    if phi.n() == 0 {
        return Err(LabError::InvalidInput("polynomial has no variables".into()));
    }
    let (kind, delta) = threshold_delta(phi);
    let n = phi.n();
    let budget = SEARCH_BUDGET.min(cfg.budget);
    let mut primes = Vec::new();
    for p in primes_up_to(p0) {
        let v_delta = delta.valuation(p);
        let divides = v_delta.is_none_or(|v| v > 0);
        let ell = v_delta.and_then(|v| lifting_level(kind, v, n).ok());
        let k = k_threshold(p, p0, divides, ell);
        let max_depth = match ell {
            Some(l) => 2 * l - 1,
            None => 2 * k + 1,
        };
        let (solution, witness, violation) = certify_prime(phi, p, k, max_depth, budget)?;
        primes.push(PrimeCertificate {
            p,
            v_delta,
            ell,
            k_threshold: k,
            all_powers: witness.is_some(),
            solution,
            witness,
            violation,
        });
    }
    let worst = primes
        .iter()
        .filter_map(|c| c.violation.map(|k| (big_pow(c.p, k), c.p, k)))
        .min();
    let status = match worst {
        Some((_, p, k)) => NccStatus::Violation { p, k },
        None if delta.is_degenerate() => NccStatus::UnboundedCheckRequired,
        None => NccStatus::Certified,
    };
    Ok(NccCertificate {
        p0,
        kind,
        delta,
        primes,
        status,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalReport {
    pub p: u64,
    pub v_delta: Option<u32>,
    pub ell: Option<u32>,
    pub k_threshold: u32,
    #[serde(serialize_with = "crate::serde_util::big_map::serialize")]
    pub rho: BTreeMap<u32, BigInt>,
    #[serde(serialize_with = "crate::serde_util::big_map::serialize")]
    pub rho_star: BTreeMap<u32, BigInt>,
    pub witness: Option<HenselWitness>,
}

/// Iterative deepening over [`solution_search`], so a shallow witness is not
/// hidden behind a deep subtree of singular solutions.
fn shallowest_witness(phi: &IntPoly, p: u64, max_depth: u32, budget: u64) -> Result<Option<HenselWitness>> {
    for depth in 1..=max_depth {
        match solution_search(phi, p, 0, depth, budget)? {
            Search::Witness { witness, .. } => return Ok(Some(witness)),
            Search::Exhausted { deepest, .. } if deepest < depth => return Ok(None),
            Search::Exhausted { .. } => {}
            Search::Budget { .. } => return Ok(None),
        }
    }
    Ok(None)
}

/// Per-prime summary with `rho` and `rho*` for `k = 1..=k_max`.
pub fn local_report(phi: &IntPoly, p: u64, p0: u64, k_max: u32, cfg: &Config) -> Result<LocalReport> {
    check_prime(p)?;
    let (kind, delta) = threshold_delta(phi);
    let n = phi.n();
    let v_delta = delta.valuation(p);
    let ell = v_delta.and_then(|v| lifting_level(kind, v, n).ok());
    let k = k_threshold(p, p0, v_delta.is_none_or(|v| v > 0), ell);
    let mut rho_map = BTreeMap::new();
    let mut star_map = BTreeMap::new();
    for j in 1..=k_max {
        rho_map.insert(j, rho(phi, p, j, cfg)?);
        star_map.insert(j, rho_star(phi, p, j, cfg)?);
    }
    let depth = ell.map_or(2 * k.max(1) + 1, |l| 2 * l - 1);
    let witness = shallowest_witness(phi, p, depth, SEARCH_BUDGET.min(cfg.budget))?;
    Ok(LocalReport {
        p,
        v_delta,
        ell,
        k_threshold: k,
        rho: rho_map,
        rho_star: star_map,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::watson;

    fn poly(n: usize, monos: &[(&[usize], i64)]) -> IntPoly {
        let m: Vec<(Vec<usize>, BigInt)> = monos.iter().map(|(i, c)| (i.to_vec(), BigInt::from(*c))).collect();
        IntPoly::from_monomials(n, &m).unwrap()
    }

    fn fermat_minus() -> IntPoly {
        poly(3, &[(&[0, 0, 0], 1), (&[1, 1, 1], 1), (&[2, 2, 2], -1)])
    }

    fn naive_rho(phi: &IntPoly, p: u64, k: u32, star: bool) -> u64 {
        let m = p.pow(k) as i64;
        let n = phi.n();
        let c = k.div_ceil(2);
        let pc = BigInt::from(p.pow(c));
        let mut x = vec![0i64; n];
        let mut total = 0;
        loop {
            let xb: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
            if phi.evaluate(&xb).unwrap().is_multiple_of(&BigInt::from(m))
                && (!star || phi.gradient(&xb).unwrap().iter().any(|g| !g.is_multiple_of(&pc)))
            {
                total += 1;
            }
            let mut i = 0;
            while i < n {
                x[i] += 1;
                if x[i] < m {
                    break;
                }
                x[i] = 0;
                i += 1;
            }
            if i == n {
                return total;
            }
        }
    }

    #[test]
    fn rho_examples() {
        let cfg = Config::sequential();
        let x3 = poly(1, &[(&[0, 0, 0], 1)]);
        assert_eq!(rho(&x3, 5, 1, &cfg).unwrap(), BigInt::one());
        assert_eq!(rho_star(&x3, 5, 1, &cfg).unwrap(), BigInt::zero());
        assert_eq!(rho(&fermat_minus(), 2, 1, &cfg).unwrap(), BigInt::from(4));
        assert_eq!(local_factor(&fermat_minus(), 2, 1, &cfg).unwrap(), BigRational::one());
        assert_eq!(local_factor(&x3, 5, 1, &cfg).unwrap(), BigRational::one());
    }

    #[test]
    fn stratified_matches_brute_force() {
        let cfg = Config::sequential();
        let w = watson(3).original();
        let cases = [
            (fermat_minus(), vec![(2, 4), (3, 3), (5, 2), (7, 2)]),
            (w, vec![(2, 4), (3, 3), (5, 2)]),
            (poly(2, &[(&[0, 0, 0], 4), (&[1, 1, 1], 2), (&[0], 8)]), vec![(2, 6), (3, 3)]),
            (poly(1, &[(&[0, 0, 0], 1)]), vec![(2, 7), (3, 5)]),
        ];
        for (phi, pk) in cases {
            for (p, k) in pk {
                let b = rho_with(&phi, p, k, CountMethod::BruteForce, &cfg).unwrap();
                let s = rho_with(&phi, p, k, CountMethod::Stratified, &cfg).unwrap();
                assert_eq!(b, s, "rho {phi} at {p}^{k}");
                let b = rho_star_with(&phi, p, k, CountMethod::BruteForce, &cfg).unwrap();
                let s = rho_star_with(&phi, p, k, CountMethod::Stratified, &cfg).unwrap();
                assert_eq!(b, s, "rho* {phi} at {p}^{k}");
            }
        }
    }

    #[test]
    fn brute_force_matches_naive() {
        let cfg = Config::sequential();
        let phi = poly(2, &[(&[0, 0, 1], 3), (&[1, 1], -1), (&[], 2)]);
        for (p, k) in [(2, 3), (3, 2), (5, 1)] {
            assert_eq!(rho(&phi, p, k, &cfg).unwrap(), BigInt::from(naive_rho(&phi, p, k, false)));
            assert_eq!(rho_star(&phi, p, k, &cfg).unwrap(), BigInt::from(naive_rho(&phi, p, k, true)));
        }
    }

    #[test]
    fn hensel_examples() {
        let phi = poly(1, &[(&[0, 0, 0], 1), (&[], -1)]);
        let y = hensel_lift(&phi, 5, &[BigInt::one()], 1, 3).unwrap();
        assert_eq!(y, vec![BigInt::one()]);

        let phi = poly(1, &[(&[0, 0, 0], 1), (&[], -2)]);
        // 3^3 = 27 = 2 mod 5; lift to 5^6
        let y = hensel_lift(&phi, 5, &[BigInt::from(3)], 1, 6).unwrap();
        assert!(phi.evaluate(&y).unwrap().is_multiple_of(&BigInt::from(5u64.pow(6))));
        assert_eq!(y[0].mod_floor(&BigInt::from(5)), BigInt::from(3));

        let sq = poly(1, &[(&[0, 0], 1)]);
        assert!(matches!(hensel_lift(&sq, 3, &[BigInt::zero()], 1, 2), Err(LabError::Precondition(_))));
        let off = poly(1, &[(&[0], 1), (&[], 1)]);
        assert!(matches!(hensel_lift(&off, 3, &[BigInt::zero()], 1, 2), Err(LabError::Precondition(_))));
    }

    #[test]
    fn lifting_levels() {
        assert_eq!(lifting_level(Kind::Homogeneous, 0, 10).unwrap(), 3);
        assert_eq!(lifting_level(Kind::Homogeneous, 3, 12).unwrap(), 6);
        assert_eq!(lifting_level(Kind::Inhomogeneous, 0, 15).unwrap(), 98);
        assert_eq!(lifting_level(Kind::Inhomogeneous, 1, 15).unwrap(), 146);
        assert!(lifting_level(Kind::Homogeneous, 0, 9).is_err());
        assert!(lifting_level(Kind::Inhomogeneous, 0, 14).is_err());
        assert_eq!(log_floor(2, 20), 4);
        assert_eq!(log_floor(23, 20), 0);
        assert_eq!(k_threshold(2, 20, true, Some(3)), 5);
        assert_eq!(k_threshold(2, 20, false, Some(3)), 4);
    }

    #[test]
    fn ncc_examples() {
        let cfg = Config::sequential();
        let bad = poly(1, &[(&[0, 0, 0], 2), (&[], 1)]);
        let cert = ncc_certify(&bad, 3, &cfg).unwrap();
        assert_eq!(cert.status, NccStatus::Violation { p: 2, k: 1 });

        let w = watson(5).original();
        let cert = ncc_certify(&w, 20, &cfg).unwrap();
        assert_eq!(cert.status, NccStatus::Certified);
        for pc in &cert.primes {
            let sol = pc.solution.as_ref().unwrap();
            assert!(w.evaluate(sol).unwrap().is_multiple_of(&big_pow(pc.p, pc.k_threshold)));
        }

        let sums = poly(3, &[(&[0, 0, 0], 1), (&[1, 1, 1], 1), (&[2, 2, 2], 1), (&[], -2)]);
        assert_eq!(ncc_certify(&sums, 30, &cfg).unwrap().status, NccStatus::Certified);

        let degenerate = poly(2, &[(&[0, 0, 0], 1)]);
        assert_eq!(ncc_certify(&degenerate, 10, &cfg).unwrap().status, NccStatus::UnboundedCheckRequired);
    }
}
