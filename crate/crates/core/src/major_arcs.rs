//! Real non-singular points, boxes around them, the singular integral and the
//! truncated singular series.

use std::cell::Cell;
use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{pow_u64, primes_up_to, rat_to_f64};
use crate::error::{LabError, Result};
use crate::exec::Config;
use crate::invariants::DeltaInvariant;
use crate::kernel::{big_to_f64, FloatPoly};
use crate::lattice::IntBox;
use crate::linalg;
use crate::local::{k_threshold, lifting_level, local_factor, threshold_delta, Kind};
use crate::poly::{CubicPolynomial, IntPoly};
use crate::quad;

/// How the auxiliary integer vector `y` with `F_1(y) = 0` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointMode {
    /// `h(C) = h` is known: take the first small solution with `F_3(y) != 0`.
    HInvariant(usize),
    /// Use the smallest solution and stop early if it already gives an integer zero.
    NVariable,
}

/// A real zero `(xi, y)` of `C` with `dC/dx_1 > 0` and a second large partial derivative.
#[derive(Clone, Debug, Serialize)]
pub struct RealPoint {
    pub mode: PointMode,
    pub xi: f64,
    #[serde(with = "crate::serde_big_vec")]
    pub y: Vec<BigInt>,
    /// `(xi, y)` in the input coordinates.
    pub z: Vec<f64>,
    #[serde(with = "crate::serde_big")]
    pub f2: BigInt,
    #[serde(with = "crate::serde_big")]
    pub f3: BigInt,
    pub gradient: Vec<f64>,
    pub d1: f64,
    /// Index (0-based) of the coordinate with the largest `|y_j dC/dx_j|`.
    pub second: usize,
    pub d2: f64,
    /// Remaining `(j, |y_j dC/dx_j|)` in decreasing order.
    pub runner_ups: Vec<(usize, f64)>,
    /// `|C(z)|` relative to `a xi^3 + |F_2| xi + |F_3|`.
    pub residual: f64,
    pub profile: Option<PointProfile>,
}

/// Size profile of a real point in powers of the height `M`, with achieved ratios.
#[derive(Clone, Debug, Serialize)]
pub struct PointProfile {
    /// `h - 2` (or `n - 2`).
    pub denominator: usize,
    pub xi_lower: f64,
    pub xi_upper: f64,
    pub d1_floor: f64,
    pub d2_floor: f64,
    /// `xi / xi_lower`, `xi_upper / xi`, `d1 / d1_floor`, `d2 / d2_floor`.
    pub ratios: [f64; 4],
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RealPointResult {
    IntegerSolution {
        #[serde(with = "crate::serde_big_vec")]
        x: Vec<BigInt>,
    },
    Point(RealPoint),
}

/// `C = a x_1^3 + F_1(y) x_1^2 + F_2(y) x_1 + F_3(y)`.
struct Split<'a> {
    c: &'a CubicPolynomial,
    a: BigInt,
    f1: Vec<BigInt>,
}

impl Split<'_> {
    fn f2(&self, y: &[BigInt]) -> BigInt {
        let n = self.c.n();
        let mut s = BigInt::zero();
        for j in 1..n {
            for k in 1..n {
                s += self.c.c(0, j, k) * &y[j - 1] * &y[k - 1];
            }
        }
        s * 3
    }

    fn f3(&self, y: &[BigInt]) -> BigInt {
        let mut x = vec![BigInt::zero()];
        x.extend_from_slice(y);
        self.c.evaluate_cubic(&x).expect("dimension")
    }
}

/// Short integer solutions of `F_1(y) = 0`: an LLL basis and pairwise sums and
/// differences, sorted by sup norm.
fn kernel_candidates(f1: &[BigInt]) -> Vec<Vec<BigInt>> {
    let m = f1.len();
    let basis = if f1.iter().all(Zero::is_zero) {
        linalg::integer_kernel(&[], m)
    } else {
        linalg::integer_kernel(&[f1.to_vec()], m)
    };
    let reduced = linalg::lll(&basis);
    let mut set = BTreeSet::new();
    for (i, v) in reduced.iter().enumerate() {
        set.insert(v.clone());
        for w in &reduced[i + 1..] {
            set.insert(v.iter().zip(w).map(|(a, b)| a + b).collect());
            set.insert(v.iter().zip(w).map(|(a, b)| a - b).collect());
        }
    }
    let mut out: Vec<Vec<BigInt>> = set
        .into_iter()
        .filter(|v: &Vec<BigInt>| v.iter().any(|x| !x.is_zero()))
        .map(|mut v| {
            linalg::normalize_sign(&mut v);
            v
        })
        .collect();
    out.sort_by(|a, b| linalg::sup_norm(a).cmp(&linalg::sup_norm(b)).then_with(|| b.cmp(a)));
    out.dedup();
    out
}

/// Positive root of `a t^3 + f2 t + f3` with `a > 0 > f3`.
fn positive_root(a: f64, f2: f64, f3: f64) -> Result<f64> {
    let f = |t: f64| (a * t * t + f2) * t + f3;
    let mut lo = 0.0;
    let mut hi = 1.0 + (f2.abs() / a).sqrt() + (f3.abs() / a).cbrt();
    if !(f(hi) > 0.0) {
        return Err(LabError::Numerical(format!("cubic-root bracketing failed for a={a}, F2={f2}, F3={f3}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = 3.0 * a * t * t + f2;
        if d > 0.0 {
            let next = t - f(t) / d;
            if next > 0.0 {
                t = next;
            }
        }
    }
    Ok(t)
}

/// Real point on `C = 0` following the construction with `F_1(y) = 0`.
/// Requires `c_111 > 0` (see [`crate::poly::normalize`]).
pub fn real_point(c: &CubicPolynomial, mode: PointMode) -> Result<RealPointResult> {
    let n = c.n();
    if n < 2 {
        return Err(LabError::InvalidInput("need at least two variables".into()));
    }
    let a = c.c(0, 0, 0).clone();
    if !a.is_positive() {
        return Err(LabError::Precondition("c_111 must be positive; normalize first".into()));
    }
    let split = Split {
        c,
        f1: (1..n).map(|j| c.c(0, 0, j) * 3).collect(),
        a,
    };
    let candidates = kernel_candidates(&split.f1);
    let chosen = match mode {
        PointMode::NVariable => {
            if let Some(y) = candidates.iter().find(|y| split.f3(y).is_zero()) {
                let mut x = vec![BigInt::zero()];
                x.extend_from_slice(y);
                return Ok(RealPointResult::IntegerSolution { x });
            }
            candidates.first().cloned()
        }
        PointMode::HInvariant(_) => candidates.iter().find(|y| !split.f3(y).is_zero()).cloned(),
    };
    let mut y = chosen.ok_or_else(|| {
        LabError::Construction("every short solution of F_1(y) = 0 also has F_3(y) = 0".into())
    })?;
    let mut f3 = split.f3(&y);
    if f3.is_positive() {
        y.iter_mut().for_each(|v| *v = -v.clone());
        f3 = -f3;
    }
    let f2 = split.f2(&y);
    let af = big_to_f64(&split.a);
    let xi = positive_root(af, big_to_f64(&f2), big_to_f64(&f3))?;
    let mut z = vec![xi];
    z.extend(y.iter().map(big_to_f64));
    let fp = FloatPoly::cubic_only(c);
    let gradient = fp.gradient(&z);
    let scale = af * xi.powi(3) + big_to_f64(&f2).abs() * xi + big_to_f64(&f3).abs();
    let residual = fp.value(&z).abs() / scale;
    let mut euler: Vec<(usize, f64)> = (1..n)
        .filter(|&j| !y[j - 1].is_zero())
        .map(|j| (j, (z[j] * gradient[j]).abs()))
        .collect();
    euler.sort_by(|p, q| q.1.total_cmp(&p.1).then(p.0.cmp(&q.0)));
    let (second, _) = *euler.first().ok_or_else(|| LabError::Construction("y vanishes".into()))?;
    let runner_ups = euler[1..].to_vec();
    let d1 = gradient[0];
    let d2 = gradient[second].abs();
    let denom = match mode {
        PointMode::HInvariant(h) => h,
        PointMode::NVariable => n,
    };
    let profile = (denom > 2).then(|| {
        let m = big_to_f64(&c.cubic_part().height()).max(1.0);
        let e = 1.0 / (denom - 2) as f64;
        let xi_lower = m.powf(-1.0 - 2.0 * e);
        let xi_upper = m.powf(e);
        let d1_floor = m.powf(-1.0 - 4.0 * e);
        let d2_floor = m.powf(-2.0 - 7.0 * e);
        PointProfile {
            denominator: denom - 2,
            xi_lower,
            xi_upper,
            d1_floor,
            d2_floor,
            ratios: [xi / xi_lower, xi_upper / xi, d1 / d1_floor, d2 / d2_floor],
        }
    });
    Ok(RealPointResult::Point(RealPoint {
        mode,
        xi,
        y,
        z,
        f2,
        f3,
        gradient,
        d1,
        second,
        d2,
        runner_ups,
        residual,
        profile,
    }))
}

/// Closed interval for outward-rounded evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    fn widen(self) -> Interval {
        let pad = 4.0 * f64::EPSILON * self.lo.abs().max(self.hi.abs()) + f64::MIN_POSITIVE;
        Interval {
            lo: self.lo - pad,
            hi: self.hi + pad,
        }
    }

    fn add(self, o: Interval) -> Interval {
        Interval::new(self.lo + o.lo, self.hi + o.hi).widen()
    }

    fn mul(self, o: Interval) -> Interval {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Interval::new(p.iter().copied().fold(f64::INFINITY, f64::min), p.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .widen()
    }

    fn scale(self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval::new(c * self.lo, c * self.hi).widen()
        } else {
            Interval::new(c * self.hi, c * self.lo).widen()
        }
    }

    fn pow(self, k: usize) -> Interval {
        match k {
            0 => Interval::new(1.0, 1.0),
            1 => self,
            2 => {
                let (a, b) = (self.lo * self.lo, self.hi * self.hi);
                let lo = if self.lo <= 0.0 && self.hi >= 0.0 { 0.0 } else { a.min(b) };
                Interval::new(lo, a.max(b)).widen()
            }
            _ => Interval::new(self.lo.powi(k as i32), self.hi.powi(k as i32)).widen(),
        }
    }
}

/// Monomials with exponent vectors, for interval evaluation.
struct IntervalPoly {
    terms: Vec<(f64, Vec<(usize, usize)>)>,
}

impl IntervalPoly {
    fn new(monomials: &[(Vec<usize>, BigInt)]) -> IntervalPoly {
        let terms = monomials
            .iter()
            .map(|(idx, c)| {
                let mut pw: Vec<(usize, usize)> = Vec::new();
                for &i in idx {
                    match pw.iter_mut().find(|(j, _)| *j == i) {
                        Some(e) => e.1 += 1,
                        None => pw.push((i, 1)),
                    }
                }
                (big_to_f64(c), pw)
            })
            .collect();
        IntervalPoly { terms }
    }

    fn derivative(monomials: &[(Vec<usize>, BigInt)], var: usize) -> Vec<(Vec<usize>, BigInt)> {
        let mut out = Vec::new();
        for (idx, c) in monomials {
            let k = idx.iter().filter(|&&i| i == var).count();
            if k == 0 {
                continue;
            }
            let mut rest = idx.clone();
            let pos = rest.iter().position(|&i| i == var).expect("present");
            rest.remove(pos);
            out.push((rest, c * BigInt::from(k)));
        }
        out
    }

    fn eval(&self, x: &[Interval]) -> Interval {
        self.terms.iter().fold(Interval::new(0.0, 0.0), |acc, (c, pw)| {
            let v = pw.iter().fold(Interval::new(1.0, 1.0), |v, &(i, k)| v.mul(x[i].pow(k)));
            acc.add(v.scale(*c))
        })
    }
}

/// Box `prod [z_i - width, z_i + width]` around a scaled real point, in relabelled coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct BoxRegion {
    /// New coordinate `a` is `signs[a] * x_{perm[a]}`.
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
    /// Cubic part in the new coordinates.
    pub cubic: CubicPolynomial,
    pub center: Vec<f64>,
    pub width: f64,
    pub scale: f64,
    /// The power of two `A` in `z = A M^{3 + 8/(n-2)} z~`.
    pub a_const: u64,
    pub center_norm: f64,
    /// `max |C|` on the box from grid search plus ascent.
    pub sigma: f64,
    /// Interval upper bound for `max |C|`.
    pub sigma_upper: f64,
    /// Certified lower bounds for `dC/dx_1`, `dC/dx_2` on the box.
    pub d1: f64,
    pub d2: f64,
    /// Smallest sampled values of the same derivatives.
    pub d1_sampled: f64,
    pub d2_sampled: f64,
}

impl BoxRegion {
    pub fn lo(&self) -> Vec<f64> {
        self.center.iter().map(|c| c - self.width).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.center.iter().map(|c| c + self.width).collect()
    }

    /// Lattice points of `P * B`.
    pub fn lattice(&self, p: f64) -> IntBox {
        IntBox::scaled(&self.center, self.width, p)
    }

    pub fn contains_origin(&self) -> bool {
        self.center.iter().all(|c| c.abs() <= self.width)
    }
}

const MAX_BOX_CONSTANT: u64 = 1 << 10;

fn sample_points(lo: &[f64], hi: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let n = lo.len();
    let mut pts = Vec::new();
    if n <= 8 {
        for k in 0..3usize.pow(n as u32) {
            let mut rem = k;
            pts.push(
                (0..n)
                    .map(|i| {
                        let t = rem % 3;
                        rem /= 3;
                        lo[i] + (hi[i] - lo[i]) * t as f64 / 2.0
                    })
                    .collect(),
            );
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..4096 {
            pts.push((0..n).map(|i| rng.gen_range(lo[i]..=hi[i])).collect());
        }
    }
    pts
}

/// Scale a real point into a box of width 1 whose first two partial
/// derivatives have certified positive floors.
pub fn build_box(c: &CubicPolynomial, point: &RealPoint) -> Result<BoxRegion> {
    let n = c.n();
    if n < 3 {
        return Err(LabError::InvalidInput("box construction needs n >= 3".into()));
    }
    let g = &point.gradient;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| g[j].abs().total_cmp(&g[i].abs()).then(i.cmp(&j)));
    if g[order[1]] == 0.0 {
        return Err(LabError::Construction("only one non-zero partial derivative at the real point".into()));
    }
    let mut perm = vec![order[0], order[1]];
    perm.extend((0..n).filter(|i| *i != order[0] && *i != order[1]));
    let signs: Vec<i8> = perm
        .iter()
        .enumerate()
        .map(|(a, &i)| if a < 2 && g[i] < 0.0 { -1 } else { 1 })
        .collect();
    let cubic = c.cubic_part().permute_signs(&perm, &signs)?;
    let zt: Vec<f64> = perm.iter().zip(&signs).map(|(&i, &s)| f64::from(s) * point.z[i]).collect();
    let m = big_to_f64(&c.cubic_part().height()).max(1.0);
    let growth = m.powf(3.0 + 8.0 / (n - 2) as f64);
    let monos = cubic.monomials();
    let cpoly = IntervalPoly::new(&monos);
    let dpoly = [
        IntervalPoly::new(&IntervalPoly::derivative(&monos, 0)),
        IntervalPoly::new(&IntervalPoly::derivative(&monos, 1)),
    ];
    let fp = FloatPoly::new(&cubic);
    let mut a_const = 4;
    while a_const <= MAX_BOX_CONSTANT {
        let s = a_const as f64 * growth;
        let center: Vec<f64> = zt.iter().map(|v| s * v).collect();
        let center_norm = center.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let grad_c = fp.gradient(&center);
        let iv: Vec<Interval> = center.iter().map(|&v| Interval::new(v - 1.0, v + 1.0)).collect();
        let floors = [dpoly[0].eval(&iv).lo, dpoly[1].eval(&iv).lo];
        let ok = center_norm >= 2.0 && (0..2).all(|i| grad_c[i] > 0.0 && floors[i] >= 0.5 * grad_c[i]);
        if ok {
            let lo: Vec<f64> = center.iter().map(|v| v - 1.0).collect();
            let hi: Vec<f64> = center.iter().map(|v| v + 1.0).collect();
            let pts = sample_points(&lo, &hi, 0x5eed);
            let mut sampled = [f64::INFINITY; 2];
            let mut best = (0.0f64, center.clone());
            for p in &pts {
                let gp = fp.gradient(p);
                sampled[0] = sampled[0].min(gp[0]);
                sampled[1] = sampled[1].min(gp[1]);
                let v = fp.value(p).abs();
                if v > best.0 {
                    best = (v, p.clone());
                }
            }
            if sampled[0] < floors[0] || sampled[1] < floors[1] {
                return Err(LabError::Numerical("sampled derivative below interval floor".into()));
            }
            let sigma = ascend(&fp, &lo, &hi, best.1);
            let ci = cpoly.eval(&iv);
            return Ok(BoxRegion {
                perm,
                signs,
                cubic,
                center,
                width: 1.0,
                scale: 1.0,
                a_const,
                center_norm,
                sigma,
                sigma_upper: ci.lo.abs().max(ci.hi.abs()),
                d1: floors[0],
                d2: floors[1],
                d1_sampled: sampled[0],
                d2_sampled: sampled[1],
            });
        }
        a_const *= 2;
    }
    Err(LabError::Construction(format!(
        "derivative floors not verified for A <= {MAX_BOX_CONSTANT}"
    )))
}

/// Coordinate ascent of `|f|` from `start`, staying in the box.
fn ascend(fp: &FloatPoly, lo: &[f64], hi: &[f64], start: Vec<f64>) -> f64 {
    let mut x = start;
    let mut best = fp.value(&x).abs();
    let mut step = 0.5 * (hi[0] - lo[0]);
    while step > 1e-9 * (hi[0] - lo[0]) {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [-1.0, 1.0] {
                let mut y = x.clone();
                y[i] = (y[i] + dir * step).clamp(lo[i], hi[i]);
                let v = fp.value(&y).abs();
                if v > best {
                    best = v;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegralMethod {
    Tensor,
    MonteCarlo,
    Coarea,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralOptions {
    pub abs_tol: f64,
    pub max_evals: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        IntegralOptions {
            abs_tol: 1e-7,
            max_evals: 200_000_000,
            mc_samples: 400_000,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegralEstimate {
    #[serde(rename = "Z")]
    pub z: f64,
    pub value: f64,
    /// Quadrature error estimate, or the standard error for Monte Carlo.
    pub error: f64,
    pub method: IntegralMethod,
    pub evals: usize,
}

/// `sin(2 pi Z t) / (pi t)`, continuous at `t = 0`.
#[inline]
pub fn sinc_kernel(z: f64, t: f64) -> f64 {
    let w = std::f64::consts::TAU * z * t;
    if w.abs() < 1e-3 {
        let w2 = w * w;
        2.0 * z * (1.0 - w2 / 6.0 + w2 * w2 / 120.0)
    } else {
        w.sin() / (std::f64::consts::PI * t)
    }
}

fn check_box(n: usize, lo: &[f64], hi: &[f64]) -> Result<()> {
    if lo.len() != n || hi.len() != n {
        return Err(LabError::DimensionMismatch {
            expected: n,
            got: lo.len().min(hi.len()),
        });
    }
    if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
        return Err(LabError::InvalidInput("box sides must have lo < hi".into()));
    }
    Ok(())
}

/// Nested adaptive integral of `g` over the box (`n <= 3`), with breakpoints
/// per axis supplied by `cuts(axis, fixed_prefix)`.
fn nested<G, K>(g: &G, cuts: &K, lo: &[f64], hi: &[f64], tol: f64, max_evals: usize) -> Result<(f64, f64, usize)>
where
    G: Fn(&[f64]) -> f64,
    K: Fn(usize, &[f64]) -> Vec<f64>,
{
    let n = lo.len();
    let evals = Cell::new(0usize);
    let inner_err = Cell::new(0.0f64);
    let failure: Cell<Option<LabError>> = Cell::new(None);
    fn level<G, K>(
        axis: usize,
        prefix: &mut Vec<f64>,
        g: &G,
        cuts: &K,
        lo: &[f64],
        hi: &[f64],
        tol: f64,
        max_evals: usize,
        evals: &Cell<usize>,
        inner_err: &Cell<f64>,
        failure: &Cell<Option<LabError>>,
    ) -> Result<quad::QuadResult>
    where
        G: Fn(&[f64]) -> f64,
        K: Fn(usize, &[f64]) -> Vec<f64>,
    {
        let n = lo.len();
        let mut pts = vec![lo[axis]];
        pts.extend(cuts(axis, prefix).into_iter().filter(|c| *c > lo[axis] && *c < hi[axis]));
        pts.push(hi[axis]);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let remaining: f64 = (axis + 1..n).map(|i| hi[i] - lo[i]).product();
        let span = hi[axis] - lo[axis];
        let my_tol = tol / remaining.max(1e-300);
        let r = quad::integrate(
            |t| {
                prefix.push(t);
                let v = if axis + 1 == n {
                    evals.set(evals.get() + 1);
                    g(prefix)
                } else {
                    match level(axis + 1, prefix, g, cuts, lo, hi, tol / (10.0 * span), max_evals, evals, inner_err, failure)
                    {
                        Ok(r) => {
                            inner_err.set(inner_err.get().max(r.error));
                            r.value
                        }
                        Err(e) => {
                            let prev = failure.take();
                            failure.set(Some(prev.unwrap_or(e)));
                            0.0
                        }
                    }
                };
                prefix.pop();
                v
            },
            &pts,
            my_tol,
            0.0,
            max_evals,
        );
        if evals.get() > max_evals {
            return Err(LabError::Numerical(format!("quadrature budget of {max_evals} evaluations exhausted")));
        }
        r
    }
    let mut prefix = Vec::with_capacity(n);
    let r = level(0, &mut prefix, g, cuts, lo, hi, tol, max_evals, &evals, &inner_err, &failure)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let outer_len = hi[0] - lo[0];
    Ok((r.value, r.error + inner_err.get() * outer_len, evals.get()))
}

/// `I(Z) = int_B sin(2 pi Z f(x)) / (pi f(x)) dx`: tensor adaptive quadrature
/// for `n <= 3`, Monte Carlo with standard error beyond.
pub fn singular_integral(f: &IntPoly, lo: &[f64], hi: &[f64], z: f64, opts: &IntegralOptions) -> Result<IntegralEstimate> {
    let n = f.n();
    check_box(n, lo, hi)?;
    if !(z > 0.0) {
        return Err(LabError::InvalidInput("Z must be positive".into()));
    }
    let fp = FloatPoly::from_int(f);
    let g = |x: &[f64]| sinc_kernel(z, fp.value(x));
    if n <= 3 {
        // the kernel peaks where f vanishes on the innermost axis, and the
        // inner integrals kink where the zero set meets a face
        let cuts = |axis: usize, prefix: &[f64]| -> Vec<f64> {
            let rest = n - axis - 1;
            let mut out = Vec::new();
            for corner in 0..(1usize << rest) {
                let mut x = prefix.to_vec();
                x.push(lo[axis]);
                x.extend((0..rest).map(|i| if corner >> i & 1 == 1 { hi[axis + 1 + i] } else { lo[axis + 1 + i] }));
                out.extend(real_roots_in(fp.fiber(&x, axis), lo[axis], hi[axis]));
            }
            out
        };
        let (value, error, evals) = nested(&g, &cuts, lo, hi, opts.abs_tol, opts.max_evals)?;
        return Ok(IntegralEstimate {
            z,
            value,
            error,
            method: IntegralMethod::Tensor,
            evals,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut x = vec![0.0; n];
    for k in 1..=opts.mc_samples {
        for i in 0..n {
            x[i] = rng.gen_range(lo[i]..hi[i]);
        }
        let v = g(&x);
        let d = v - mean;
        mean += d / k as f64;
        m2 += d * (v - mean);
    }
    let samples = opts.mc_samples.max(2) as f64;
    Ok(IntegralEstimate {
        z,
        value: mean * vol,
        error: (m2 / (samples - 1.0) / samples).sqrt() * vol,
        method: IntegralMethod::MonteCarlo,
        evals: opts.mc_samples,
    })
}

/// [`singular_integral`] for the cubic part on a constructed box.
pub fn singular_integral_box(bx: &BoxRegion, z: f64, opts: &IntegralOptions) -> Result<IntegralEstimate> {
    singular_integral(&IntPoly::from_poly(&bx.cubic), &bx.lo(), &bx.hi(), z, opts)
}

/// Real roots of `c0 + c1 t + c2 t^2 + c3 t^3` in `[lo, hi]`.
pub fn real_roots_in(c: [f64; 4], lo: f64, hi: f64) -> Vec<f64> {
    let f = |t: f64| ((c[3] * t + c[2]) * t + c[1]) * t + c[0];
    // monotone pieces between critical points
    let mut pts = vec![lo];
    let (a, b, cc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    if a != 0.0 {
        let disc = b * b - 4.0 * a * cc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            pts.push((-b - s) / (2.0 * a));
            pts.push((-b + s) / (2.0 * a));
        }
    } else if b != 0.0 {
        pts.push(-cc / b);
    }
    pts.push(hi);
    let mut pts: Vec<f64> = pts.into_iter().filter(|t| *t >= lo && *t <= hi).collect();
    pts.sort_by(f64::total_cmp);
    let mut roots = Vec::new();
    for w in pts.windows(2) {
        let (mut u, mut v) = (w[0], w[1]);
        let (fu, fv) = (f(u), f(v));
        if fu == 0.0 {
            roots.push(u);
            continue;
        }
        if fu * fv > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (u + v);
            if f(mid) * fu > 0.0 {
                u = mid;
            } else {
                v = mid;
            }
            if v - u <= 4.0 * f64::EPSILON * v.abs().max(1.0) {
                break;
            }
        }
        roots.push(0.5 * (u + v));
    }
    if f(hi) == 0.0 {
        roots.push(hi);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    roots
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceVolume {
    pub t: f64,
    pub value: f64,
    pub error: f64,
    /// The level set `{f = t}` misses the box.
    pub empty: bool,
    /// `V(0) M |z|^2 / rho^{n-1}` when the box data is known.
    pub profile_constant: Option<f64>,
}

/// Slice integrand: `1/|df/dx_1|` at the zero of `f - t` on the `x_1` segment, or 0.
fn slice_integrand(fp: &FloatPoly, t: f64, lo1: f64, hi1: f64, rest: &[f64]) -> f64 {
    let mut x = Vec::with_capacity(rest.len() + 1);
    x.push(lo1);
    x.extend_from_slice(rest);
    let mut c = fp.fiber(&x, 0);
    c[0] -= t;
    let roots = real_roots_in(c, lo1, hi1);
    match roots.first() {
        Some(&r) => {
            x[0] = r;
            let d = fp.gradient(&x)[0].abs();
            if d > 0.0 {
                1.0 / d
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

fn check_monotone_x1(f: &IntPoly, lo: &[f64], hi: &[f64]) -> Result<()> {
    let monos = f.terms().to_vec();
    let d = IntervalPoly::new(&IntervalPoly::derivative(&monos, 0));
    let iv: Vec<Interval> = lo.iter().zip(hi).map(|(&a, &b)| Interval::new(a, b)).collect();
    let r = d.eval(&iv);
    if r.lo <= 0.0 && r.hi >= 0.0 {
        return Err(LabError::Precondition("df/dx_1 is not bounded away from 0 on the box".into()));
    }
    Ok(())
}

/// `V(t) = int 1/|df/dx_1|` over the slice `{f = t}` parametrized by `(x_2, .., x_n)`, `n <= 3`.
pub fn slice_volume_at(f: &IntPoly, lo: &[f64], hi: &[f64], t: f64, opts: &IntegralOptions) -> Result<SliceVolume> {
    let n = f.n();
    check_box(n, lo, hi)?;
    if n > 3 {
        return Err(LabError::InvalidInput("slice volume supports n <= 3".into()));
    }
    check_monotone_x1(f, lo, hi)?;
    let fp = FloatPoly::from_int(f);
    if n == 1 {
        let v = slice_integrand(&fp, t, lo[0], hi[0], &[]);
        return Ok(SliceVolume {
            t,
            value: v,
            error: 0.0,
            empty: v == 0.0,
            profile_constant: None,
        });
    }
    // the slice boundary over (x_2, ..) is where f - t vanishes on a face x_1 = lo_1 or hi_1
    let cuts = |axis: usize, prefix: &[f64]| -> Vec<f64> {
        let mut out = Vec::new();
        for face in [lo[0], hi[0]] {
            let mut x = vec![face];
            x.extend_from_slice(prefix);
            x.resize(n, 0.0);
            let var = axis + 1;
            if axis + 1 == n - 1 {
                let mut c = fp.fiber(&x, var);
                c[0] -= t;
                out.extend(real_roots_in(c, lo[var], hi[var]));
            }
        }
        out
    };
    let g = |rest: &[f64]| slice_integrand(&fp, t, lo[0], hi[0], rest);
    let (value, error, _) = nested(&g, &cuts, &lo[1..], &hi[1..], opts.abs_tol, opts.max_evals)?;
    Ok(SliceVolume {
        t,
        value,
        error,
        empty: value == 0.0,
        profile_constant: None,
    })
}

/// `V(0)` on a constructed box, with the profile constant `V(0) M |z|^2`.
pub fn slice_volume(bx: &BoxRegion, opts: &IntegralOptions) -> Result<SliceVolume> {
    let mut v = slice_volume_at(&IntPoly::from_poly(&bx.cubic), &bx.lo(), &bx.hi(), 0.0, opts)?;
    let m = big_to_f64(&bx.cubic.height()).max(1.0);
    let n = bx.center.len();
    v.profile_constant = Some(v.value * m * bx.center_norm.powi(2) / bx.width.powi(n as i32 - 1));
    Ok(v)
}

/// `I(Z) = int sin(2 pi Z t)/(pi t) V(t) dt`, an independent route for `n <= 2`.
pub fn singular_integral_coarea(f: &IntPoly, lo: &[f64], hi: &[f64], z: f64, opts: &IntegralOptions) -> Result<IntegralEstimate> {
    let n = f.n();
    check_box(n, lo, hi)?;
    if n > 2 {
        return Err(LabError::InvalidInput("coarea route supports n <= 2".into()));
    }
    check_monotone_x1(f, lo, hi)?;
    let fp = FloatPoly::from_int(f);
    let mut corners = Vec::new();
    for k in 0..(1usize << n) {
        let x: Vec<f64> = (0..n).map(|i| if k >> i & 1 == 1 { hi[i] } else { lo[i] }).collect();
        corners.push(fp.value(&x));
    }
    let tmin = corners.iter().copied().fold(f64::INFINITY, f64::min);
    let tmax = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut pts = corners.clone();
    pts.push(0.0);
    pts.retain(|t| *t >= tmin && *t <= tmax);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let evals = Cell::new(0usize);
    let failure: Cell<Option<LabError>> = Cell::new(None);
    let inner = IntegralOptions {
        abs_tol: opts.abs_tol * 1e-2,
        ..*opts
    };
    let r = quad::integrate(
        |t| match slice_volume_at(f, lo, hi, t, &inner) {
            Ok(v) => {
                evals.set(evals.get() + 1);
                sinc_kernel(z, t) * v.value
            }
            Err(e) => {
                let prev = failure.take();
                failure.set(Some(prev.unwrap_or(e)));
                0.0
            }
        },
        &pts,
        opts.abs_tol,
        0.0,
        opts.max_evals,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(IntegralEstimate {
        z,
        value: r.value,
        error: r.error,
        method: IntegralMethod::Coarea,
        evals: evals.get(),
    })
}

/// One Euler factor `sum_{i <= k} A(p^i) = p^{-k(n-1)} rho(p^k)`.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesFactor {
    pub p: u64,
    pub k: u32,
    pub v_delta: Option<u32>,
    #[serde(with = "crate::serde_rat_opt")]
    pub factor: Option<BigRational>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesTruncation {
    #[serde(rename = "P0")]
    pub p0: u64,
    pub kind: Kind,
    pub factors: Vec<SeriesFactor>,
    /// Euler product `S(P0)`.
    #[serde(with = "crate::serde_rat_opt")]
    pub value: Option<BigRational>,
    /// `sum_{q <= P0} A(q)`.
    #[serde(with = "crate::serde_rat_opt")]
    pub frak_value: Option<BigRational>,
    #[serde(with = "crate::serde_rat_opt")]
    pub difference: Option<BigRational>,
    /// `sum |A(q)|` over `q > P0` built from prime powers `p^i`, `p <= P0`, `i <= k(p)`.
    #[serde(with = "crate::serde_rat_opt")]
    pub tail_bound: Option<BigRational>,
    /// `M^{7/3} P0^{-1/3}`, the shape of the tail bound for non-singular forms.
    pub tail_shape: f64,
    /// Some factor could not be computed within the budget.
    pub partial: bool,
}

/// Largest number of tail terms enumerated for [`SeriesTruncation::tail_bound`].
pub const TAIL_TERMS_LIMIT: usize = 1 << 20;

/// Truncated singular series: Euler product with thresholds `k(p)` and the `q`-sum up to `P0`.
pub fn singular_series(phi: &IntPoly, p0: u64, kind: Option<Kind>, cfg: &Config) -> Result<SeriesTruncation> {
    if p0 == 0 {
        return Err(LabError::InvalidInput("P0 must be positive".into()));
    }
    let n = phi.n();
    let (auto_kind, delta): (Kind, DeltaInvariant) = threshold_delta(phi);
    let kind = kind.unwrap_or(auto_kind);
    let mut factors = Vec::new();
    // A(p^i) for i = 0..k, per prime
    let mut local_a: Vec<(u64, Option<Vec<BigRational>>)> = Vec::new();
    for p in primes_up_to(p0) {
        let v = delta.valuation(p);
        let divides = v.is_some_and(|v| v > 0);
        let ell = v.and_then(|v| lifting_level(kind, v, n).ok());
        let k = k_threshold(p, p0, divides, ell);
        let mut partial_sums = Vec::with_capacity(k as usize + 1);
        let mut error = None;
        for i in 0..=k {
            match local_factor(phi, p, i, cfg) {
                Ok(f) => partial_sums.push(f),
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        let a = error.is_none().then(|| {
            let mut out = vec![BigRational::one()];
            for w in partial_sums.windows(2) {
                out.push(&w[1] - &w[0]);
            }
            out
        });
        factors.push(SeriesFactor {
            p,
            k,
            v_delta: v,
            factor: if error.is_none() { partial_sums.last().cloned() } else { None },
            error,
        });
        local_a.push((p, a));
    }
    let partial = factors.iter().any(|f| f.factor.is_none());
    let value = (!partial).then(|| factors.iter().map(|f| f.factor.clone().expect("complete")).product());
    let frak_value = q_sum(&local_a, p0);
    let tail_bound = if partial { None } else { tail_sum(&local_a, p0) };
    let difference = match (&value, &frak_value) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    let m = big_to_f64(&phi.height()).max(1.0);
    Ok(SeriesTruncation {
        p0,
        kind,
        factors,
        value,
        frak_value,
        difference,
        tail_bound,
        tail_shape: m.powf(7.0 / 3.0) * (p0 as f64).powf(-1.0 / 3.0),
        partial,
    })
}

/// `sum_{q <= P0} A(q)` by multiplicativity; `None` if a needed prime power is missing.
fn q_sum(local_a: &[(u64, Option<Vec<BigRational>>)], p0: u64) -> Option<BigRational> {
    let mut total = BigRational::zero();
    for q in 1..=p0 {
        let mut aq = BigRational::one();
        for (p, e) in crate::arith::factor_u64(q) {
            let (_, a) = local_a.iter().find(|(r, _)| *r == p)?;
            aq *= a.as_ref()?.get(e as usize)?.clone();
        }
        total += aq;
    }
    Some(total)
}

/// `sum |A(q)|` over the finitely many `q > P0` of the truncated product.
fn tail_sum(local_a: &[(u64, Option<Vec<BigRational>>)], p0: u64) -> Option<BigRational> {
    let lists: Vec<(u64, &Vec<BigRational>)> = local_a.iter().map(|(p, a)| a.as_ref().map(|a| (*p, a))).collect::<Option<_>>()?;
    let terms: f64 = lists.iter().map(|(_, a)| a.len() as f64).product();
    if terms > TAIL_TERMS_LIMIT as f64 {
        return None;
    }
    let mut total = BigRational::zero();
    fn walk(lists: &[(u64, &Vec<BigRational>)], idx: usize, q: BigInt, acc: BigRational, p0: &BigInt, total: &mut BigRational) {
        if acc.is_zero() {
            return;
        }
        if idx == lists.len() {
            if &q > p0 {
                *total += acc.abs();
            }
            return;
        }
        let (p, a) = lists[idx];
        let mut pq = q;
        for ai in a.iter() {
            walk(lists, idx + 1, pq.clone(), &acc * ai, p0, total);
            pq *= p;
        }
    }
    walk(&lists, 0, BigInt::one(), BigRational::one(), &BigInt::from(p0), &mut total);
    Some(total)
}

/// `f64` view of an optional exact value, for diagnostics.
pub fn approx(r: &Option<BigRational>) -> Option<f64> {
    r.as_ref().map(rat_to_f64)
}

/// Prime powers `p^i <= limit`.
pub fn prime_powers_up_to(limit: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    for p in primes_up_to(limit) {
        let mut i = 1;
        while let Some(q) = pow_u64(p, i) {
            if q > limit {
                break;
            }
            out.push((p, i));
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;
    use crate::io::parse_polynomial;

    fn cubic(text: &str) -> CubicPolynomial {
        parse_polynomial(text).unwrap().poly
    }

    fn int(text: &str) -> IntPoly {
        parse_polynomial(text).unwrap().original()
    }

    fn point(r: RealPointResult) -> RealPoint {
        match r {
            RealPointResult::Point(p) => p,
            other => panic!("expected a real point, got {other:?}"),
        }
    }

    #[test]
    fn real_point_difference_of_cubes() {
        let c = cubic(r#"{"n":2,"cubic":[[1,1,1,1],[2,2,2,-1]]}"#);
        let p = point(real_point(&c, PointMode::HInvariant(2)).unwrap());
        assert_eq!(p.y, vec![BigInt::from(1)]);
        assert!((p.xi - 1.0).abs() < 1e-14);
        assert_eq!(p.z, vec![1.0, 1.0]);
        assert!(p.profile.is_none());
    }

    #[test]
    fn real_point_root_solve() {
        // 2 x1^3 + x1 x2^2 - x2^3: F_2 = y^2, F_3 = -y^3
        let c = cubic(r#"{"n":2,"form":"monomial","cubic":[[1,1,1,2],[1,2,2,1],[2,2,2,-1]]}"#);
        let p = point(real_point(&c, PointMode::HInvariant(2)).unwrap());
        let val = 2.0 * p.xi.powi(3) + p.xi * p.z[1].powi(2) - p.z[1].powi(3);
        assert!(val.abs() < 1e-12 && p.residual < 1e-12);
        // oracle: bisection of 2t^3 + t - 1 on [0, 1]
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * mid.powi(3) + mid - 1.0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((p.xi - lo).abs() < 1e-12);
        assert!(p.d1 > 0.0 && p.d2 > 0.0);
    }

    #[test]
    fn diagonal_gives_integer_solution() {
        let c = cubic(r#"{"n":3,"cubic":[[1,1,1,1],[2,2,2,1],[3,3,3,1]]}"#);
        match real_point(&c, PointMode::NVariable).unwrap() {
            RealPointResult::IntegerSolution { x } => {
                assert!(c.evaluate(&x).unwrap().is_zero());
                assert_eq!(linalg::sup_norm(&x), BigInt::from(1));
                assert_eq!(x, vec![BigInt::from(0), BigInt::from(1), BigInt::from(-1)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn box_for_toy_cubic() {
        let c = cubic(r#"{"n":3,"form":"monomial","cubic":[[1,1,1,2],[1,2,3,1],[2,2,2,1],[3,3,3,-3]]}"#);
        let p = point(real_point(&c, PointMode::HInvariant(3)).unwrap());
        let prof = p.profile.clone().unwrap();
        assert!(prof.ratios.iter().all(|r| *r > 1.0 / 16.0));
        let b = build_box(&c, &p).unwrap();
        assert!(b.d1 > 0.0 && b.d2 > 0.0);
        assert!(b.d1_sampled >= b.d1 && b.d2_sampled >= b.d2);
        assert!(!b.contains_origin() && b.center_norm >= 2.0 && b.width == 1.0);
        assert!(b.sigma <= b.sigma_upper * (1.0 + 1e-12));
        let fp = FloatPoly::new(&b.cubic);
        assert!(fp.value(&b.center).abs() <= 1e-12 * b.center_norm.powi(3));
    }

    #[test]
    fn box_for_diagonal_fourteen() {
        let entries: Vec<String> = (1..=14).map(|i| format!("[{i},{i},{i},1]")).collect();
        let c = cubic(&format!(r#"{{"n":14,"cubic":[{}]}}"#, entries.join(",")));
        let p = point(real_point(&c, PointMode::HInvariant(14)).unwrap());
        let b = build_box(&c, &p).unwrap();
        let zt = p.z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(b.center_norm <= b.a_const as f64 * zt * 1.0f64.powf(3.75) + 1e-9);
        assert!(b.d1 > 0.0 && b.d2 > 0.0);
    }

    #[test]
    fn integral_of_cube_without_zero_decays() {
        let f = int(r#"{"n":1,"cubic":[[1,1,1,1]]}"#);
        let opts = IntegralOptions::default();
        let r = singular_integral(&f, &[1.0], &[3.0], 8.0, &opts).unwrap();
        assert!(r.value.abs() < 0.1, "{r:?}");
        // reference: plain composite Simpson on a fine grid
        let n = 200_000;
        let h = 2.0 / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let x = 1.0 + i as f64 * h;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * (std::f64::consts::TAU * 8.0 * x.powi(3)).sin() / (std::f64::consts::PI * x.powi(3));
        }
        assert!((r.value - s * h / 3.0).abs() < 1e-7);
        let small = singular_integral(&f, &[1.0], &[3.0], 1e-6, &opts).unwrap();
        assert!((small.value - 2.0 * 1e-6 * 2.0).abs() < 1e-9);
    }

    fn toy() -> IntPoly {
        int(r#"{"n":2,"cubic":[[1,1,1,1],[2,2,2,1]],"const":-2}"#)
    }

    #[test]
    fn toy_integral_routes_agree() {
        let f = toy();
        let opts = IntegralOptions {
            abs_tol: 1e-9,
            ..Default::default()
        };
        let (lo, hi) = ([0.5, 0.5], [1.5, 1.5]);
        for z in [2.0, 8.0] {
            let a = singular_integral(&f, &lo, &hi, z, &opts).unwrap();
            let b = singular_integral_coarea(&f, &lo, &hi, z, &opts).unwrap();
            assert_eq!(a.method, IntegralMethod::Tensor);
            assert!((a.value - b.value).abs() < 1e-8, "{a:?} {b:?}");
        }
        let v = slice_volume_at(&f, &lo, &hi, 0.0, &opts).unwrap();
        let big = singular_integral(&f, &lo, &hi, 32.0, &opts).unwrap();
        assert!((big.value - v.value).abs() < 1e-5);
    }

    #[test]
    fn scaling_the_box() {
        let f = int(r#"{"n":3,"cubic":[[1,1,1,1],[2,2,2,1],[3,3,3,-2]]}"#);
        let opts = IntegralOptions {
            abs_tol: 1e-8,
            ..Default::default()
        };
        let (lo, hi) = ([0.5, 0.5, 0.75], [1.5, 1.5, 1.25]);
        let a = singular_integral(&f, &lo, &hi, 2.0, &opts).unwrap();
        let lo2: Vec<f64> = lo.iter().map(|v| 2.0 * v).collect();
        let hi2: Vec<f64> = hi.iter().map(|v| 2.0 * v).collect();
        let b = singular_integral(&f, &lo2, &hi2, 2.0 / 8.0, &opts).unwrap();
        assert!((a.value - b.value).abs() < 1e-6 * a.value.abs().max(1.0), "{a:?} {b:?}");
    }

    #[test]
    fn monte_carlo_beyond_three_variables() {
        let f = int(r#"{"n":4,"cubic":[[1,1,1,1],[2,2,2,1],[3,3,3,1],[4,4,4,1]]}"#);
        let r = singular_integral(&f, &[1.0; 4], &[2.0; 4], 1e-6, &IntegralOptions::default()).unwrap();
        assert_eq!(r.method, IntegralMethod::MonteCarlo);
        // 2Z vol in the small-Z limit
        assert!((r.value - 2e-6).abs() < 1e-12 + 4.0 * r.error);
    }

    #[test]
    fn slice_volume_matches_thin_shell() {
        let f = int(r#"{"n":2,"cubic":[[1,1,1,1],[2,2,2,1]],"const":-16}"#);
        let v = slice_volume_at(&f, &[1.0, 1.0], &[3.0, 3.0], 0.0, &IntegralOptions::default()).unwrap();
        assert!(v.value > 0.0);
        let fp = FloatPoly::from_int(&f);
        let (m, delta) = (2000, 0.05);
        let h = 2.0 / m as f64;
        let mut hits = 0u64;
        for i in 0..m {
            for j in 0..m {
                let x = [1.0 + (i as f64 + 0.5) * h, 1.0 + (j as f64 + 0.5) * h];
                hits += (fp.value(&x).abs() < delta) as u64;
            }
        }
        let shell = hits as f64 * h * h / (2.0 * delta);
        assert!((shell - v.value).abs() < 0.05 * v.value, "{shell} vs {}", v.value);
        let none = slice_volume_at(&f, &[4.0, 4.0], &[5.0, 5.0], 0.0, &IntegralOptions::default()).unwrap();
        assert!(none.empty && none.value == 0.0);
        let one = int(r#"{"n":1,"cubic":[[1,1,1,1]],"const":-8}"#);
        let v1 = slice_volume_at(&one, &[1.0], &[3.0], 0.0, &IntegralOptions::default()).unwrap();
        assert!((v1.value - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn interval_bounds_enclose_samples() {
        let c = cubic(r#"{"n":2,"form":"monomial","cubic":[[1,1,1,2],[1,2,2,-3],[2,2,2,1]]}"#);
        let monos = c.monomials();
        let ip = IntervalPoly::new(&monos);
        let fp = FloatPoly::new(&c);
        let iv = [Interval::new(-1.0, 2.0), Interval::new(0.5, 1.5)];
        let r = ip.eval(&iv);
        for i in 0..=30 {
            for j in 0..=30 {
                let x = [-1.0 + 3.0 * i as f64 / 30.0, 0.5 + j as f64 / 30.0];
                let v = fp.value(&x);
                assert!(r.lo <= v && v <= r.hi);
            }
        }
    }

    #[test]
    fn series_for_sum_of_cubes() {
        let phi = int(r#"{"n":3,"cubic":[[1,1,1,1],[2,2,2,1],[3,3,3,-1]]}"#);
        let s = singular_series(&phi, 5, None, &Config::default()).unwrap();
        assert_eq!(s.factors.iter().map(|f| f.p).collect::<Vec<_>>(), vec![2, 3, 5]);
        let value = s.value.clone().unwrap();
        assert!(value.is_positive());
        let diff = s.difference.clone().unwrap().abs();
        assert!(diff <= s.tail_bound.clone().unwrap());
        // q = 1 term
        let s1 = singular_series(&phi, 1, None, &Config::default()).unwrap();
        assert_eq!(s1.frak_value.unwrap(), BigRational::one());
    }

    #[test]
    fn series_vanishes_with_obstruction() {
        let phi = int(r#"{"n":1,"cubic":[[1,1,1,2]],"const":1}"#);
        let s = singular_series(&phi, 3, None, &Config::default()).unwrap();
        assert!(s.factors[0].factor.clone().unwrap().is_zero());
        assert!(s.value.unwrap().is_zero());
        let _ = ratio(0, 1);
    }

    #[test]
    fn cubic_roots() {
        let r = real_roots_in([-6.0, 11.0, -6.0, 1.0], 0.0, 4.0);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(real_roots_in([1.0, 0.0, 1.0, 0.0], -5.0, 5.0).is_empty());
    }
}
