//! Exact lattice counts `N(P)`, small-solution search and the comparison with
//! `S * I * P^{n-3}`.

use std::time::Instant;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exec::Config;
use crate::kernel::SmallPoly;
use crate::lattice::IntBox;
use crate::major_arcs::{singular_integral, singular_series, IntegralEstimate, IntegralOptions};
use crate::poly::IntPoly;

/// Largest number of solutions kept in [`CountResult::solutions_sample`].
pub const SAMPLE_LIMIT: usize = 100;

/// `c0 + c1 t + c2 t^2 + c3 t^3` at an integer, by Horner.
#[inline]
fn horner(c: &[i128; 4], t: i64) -> i128 {
    let t = t as i128;
    ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
}

/// Real critical points of the cubic, approximately.
fn critical_points(c: &[i128; 4]) -> Vec<f64> {
    let (a, b, cc) = (3.0 * c[3] as f64, 2.0 * c[2] as f64, c[1] as f64);
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-cc / b] };
    }
    let disc = b * b - 4.0 * a * cc;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = if q == 0.0 { vec![0.0] } else { vec![q / a, cc / q] };
    r.sort_by(f64::total_cmp);
    r
}

/// Integer roots of `c0 + c1 t + c2 t^2 + c3 t^3` in `[lo, hi]`, or `None`
/// when the polynomial vanishes identically.
///
/// Values on the segment must fit in `i128` (see [`SmallPoly::fits`]).
pub fn integer_roots(c: [i128; 4], lo: i64, hi: i64) -> Option<Vec<i64>> {
    if c.iter().all(|v| *v == 0) {
        return None;
    }
    let mut roots = Vec::new();
    if lo > hi || c[1..].iter().all(|v| *v == 0) {
        return Some(roots);
    }
    // integers near a critical point are checked directly; between them f is
    // strictly monotone and a bisection over integers is exact
    let mut start = lo;
    let check = |t: i64, roots: &mut Vec<i64>| {
        if horner(&c, t) == 0 {
            roots.push(t);
        }
    };
    let mut segments = Vec::new();
    for cp in critical_points(&c) {
        if !cp.is_finite() || cp < lo as f64 - 2.0 || cp > hi as f64 + 2.0 {
            continue;
        }
        let f = cp.floor() as i64;
        segments.push((start, f - 2));
        for t in (f - 1).max(lo)..=(f + 2).min(hi) {
            check(t, &mut roots);
        }
        start = start.max(f + 3);
    }
    segments.push((start, hi));
    for (a, b) in segments {
        let (a, b) = (a.max(lo), b.min(hi));
        if a > b {
            continue;
        }
        let (fa, fb) = (horner(&c, a), horner(&c, b));
        if fa == 0 {
            roots.push(a);
            continue;
        }
        if fb == 0 {
            roots.push(b);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        let (mut l, mut r) = (a, b);
        while r - l > 1 {
            let m = l + (r - l) / 2;
            let fm = horner(&c, m);
            if fm == 0 {
                roots.push(m);
                break;
            }
            if fm.signum() == fa.signum() {
                l = m;
            } else {
                r = m;
            }
        }
    }
    roots.sort_unstable();
    roots.dedup();
    Some(roots)
}

#[derive(Clone, Debug, Serialize)]
pub struct CountResult {
    #[serde(rename = "P")]
    pub p: Option<f64>,
    #[serde(rename = "box")]
    pub region: IntBox,
    pub count: u64,
    pub prediction: Option<f64>,
    pub solutions_sample: Vec<Vec<i64>>,
    pub elapsed: f64,
}

fn small_poly(phi: &IntPoly, region: &IntBox) -> Result<SmallPoly> {
    if region.dim() != phi.n() {
        return Err(LabError::DimensionMismatch {
            expected: phi.n(),
            got: region.dim(),
        });
    }
    SmallPoly::from_int(phi)
        .filter(|sp| sp.fits(region.sup()))
        .ok_or_else(|| LabError::InvalidInput("polynomial values exceed i128 on the box".into()))
}

/// Box of the coordinates `x_2..x_n`.
fn rest_box(region: &IntBox) -> IntBox {
    IntBox {
        lo: region.lo[1..].to_vec(),
        hi: region.hi[1..].to_vec(),
    }
}

/// Solutions in `region`, enumerating `x_2..x_n` and solving for `x_1`.
pub fn count_solutions(phi: &IntPoly, region: &IntBox, cfg: &Config) -> Result<CountResult> {
    let start = Instant::now();
    if phi.n() == 0 {
        return Err(LabError::InvalidInput("need at least one variable".into()));
    }
    let sp = small_poly(phi, region)?;
    let rest = rest_box(region);
    rest.check_budget(cfg.budget)?;
    let (lo0, hi0) = (region.lo[0], region.hi[0]);
    let side0 = region.side(0) as u64;
    let parts = if region.is_empty() {
        Vec::new()
    } else {
        cfg.exec.map_blocks(rest.blocks(), |blk| {
            let mut count = 0u64;
            let mut sample = Vec::new();
            let mut x = vec![0i64; region.dim()];
            rest.walk_block(blk, |y| {
                x[1..].copy_from_slice(y);
                let c = sp.fiber(&x, 0);
                match integer_roots(c, lo0, hi0) {
                    None => {
                        count += side0;
                        for t in lo0..=hi0 {
                            if sample.len() >= SAMPLE_LIMIT {
                                break;
                            }
                            x[0] = t;
                            sample.push(x.clone());
                        }
                    }
                    Some(roots) => {
                        count += roots.len() as u64;
                        for t in roots {
                            if sample.len() < SAMPLE_LIMIT {
                                x[0] = t;
                                sample.push(x.clone());
                            }
                        }
                    }
                }
                true
            });
            (count, sample)
        })
    };
    let mut count = 0;
    let mut solutions_sample = Vec::new();
    for (c, s) in parts {
        count += c;
        let room = SAMPLE_LIMIT - solutions_sample.len();
        solutions_sample.extend(s.into_iter().take(room));
    }
    Ok(CountResult {
        p: None,
        region: region.clone(),
        count,
        prediction: None,
        solutions_sample,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// [`count_solutions`] on the lattice points of `P * prod [lo_i, hi_i]`.
pub fn count_scaled(phi: &IntPoly, lo: &[f64], hi: &[f64], p: f64, cfg: &Config) -> Result<CountResult> {
    if lo.len() != phi.n() || hi.len() != phi.n() {
        return Err(LabError::DimensionMismatch {
            expected: phi.n(),
            got: lo.len().min(hi.len()),
        });
    }
    let region = IntBox {
        lo: lo.iter().map(|v| (p * v).ceil() as i64).collect(),
        hi: hi.iter().map(|v| (p * v).floor() as i64).collect(),
    };
    let mut r = count_solutions(phi, &region, cfg)?;
    r.p = Some(p);
    Ok(r)
}

/// Full enumeration of the box; the oracle for [`count_solutions`].
pub fn count_naive(phi: &IntPoly, region: &IntBox, cfg: &Config) -> Result<u64> {
    let sp = small_poly(phi, region)?;
    region.check_budget(cfg.budget)?;
    Ok(cfg
        .exec
        .map_blocks(region.blocks(), |blk| {
            let mut count = 0u64;
            region.walk_block(blk, |x| {
                count += (sp.eval(x) == 0) as u64;
                true
            });
            count
        })
        .into_iter()
        .sum())
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SearchOutcome {
    /// Lexicographically first solution on the first non-empty shell.
    Found { x: Vec<i64>, shell: u64, solutions_on_shell: u64 },
    /// No solution with `max |x_i| <= max_shell`.
    Exhausted { max_shell: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub outcome: SearchOutcome,
    /// Shells certified empty, in order.
    pub empty_shells: Vec<u64>,
    pub points_checked: u128,
    pub elapsed: f64,
}

/// Solutions with `max |x_i| = s`, in lexicographic order.
fn shell_solutions(sp: &SmallPoly, n: usize, s: i64, cfg: &Config) -> Vec<Vec<i64>> {
    let rest = IntBox::cube(n - 1, s);
    let parts = cfg.exec.map_blocks(rest.blocks(), |blk| {
        let mut out = Vec::new();
        let mut x = vec![0i64; n];
        rest.walk_block(blk, |y| {
            x[1..].copy_from_slice(y);
            let on_shell = y.iter().any(|v| v.abs() == s);
            if on_shell {
                let c = sp.fiber(&x, 0);
                match integer_roots(c, -s, s) {
                    None => out.extend((-s..=s).map(|t| {
                        x[0] = t;
                        x.clone()
                    })),
                    Some(r) => out.extend(r.into_iter().map(|t| {
                        x[0] = t;
                        x.clone()
                    })),
                }
            } else {
                for t in if s == 0 { vec![0] } else { vec![-s, s] } {
                    x[0] = t;
                    if sp.eval(&x) == 0 {
                        out.push(x.clone());
                    }
                }
            }
            true
        });
        out
    });
    let mut all: Vec<Vec<i64>> = parts.into_iter().flatten().collect();
    all.sort();
    all
}

/// First solution in shells `max |x_i| = 0, 1, .., max_shell`.
pub fn smallest_solution(phi: &IntPoly, max_shell: u64, cfg: &Config) -> Result<SearchReport> {
    let start = Instant::now();
    let n = phi.n();
    if n == 0 {
        return Err(LabError::InvalidInput("need at least one variable".into()));
    }
    let sp = SmallPoly::from_int(phi)
        .filter(|sp| sp.fits(max_shell))
        .ok_or_else(|| LabError::InvalidInput("polynomial values exceed i128 on the search range".into()))?;
    let fibers = (2 * max_shell as u128 + 1).saturating_pow(n as u32 - 1);
    crate::error::check_budget(fibers, cfg.budget)?;
    let mut empty_shells = Vec::new();
    let mut points_checked = 0u128;
    for s in 0..=max_shell {
        let sols = shell_solutions(&sp, n, s as i64, cfg);
        points_checked += (2 * s as u128 + 1).pow(n as u32) - if s == 0 { 0 } else { (2 * s as u128 - 1).pow(n as u32) };
        if let Some(x) = sols.first() {
            return Ok(SearchReport {
                outcome: SearchOutcome::Found {
                    x: x.clone(),
                    shell: s,
                    solutions_on_shell: sols.len() as u64,
                },
                empty_shells,
                points_checked,
                elapsed: start.elapsed().as_secs_f64(),
            });
        }
        empty_shells.push(s);
    }
    Ok(SearchReport {
        outcome: SearchOutcome::Exhausted { max_shell },
        empty_shells,
        points_checked,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    #[serde(rename = "P")]
    pub p: f64,
    pub count: u64,
    pub prediction: f64,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareTable {
    #[serde(rename = "P0")]
    pub p0: u64,
    pub u: f64,
    pub series: f64,
    pub integral: IntegralEstimate,
    pub rows: Vec<CompareRow>,
}

impl CompareTable {
    pub const CSV_HEADER: &'static str = "P,count,prediction,ratio";

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", r.p, r.count, r.prediction, ratio));
        }
        out
    }
}

/// `N(P)` against `S(P0) I(u) P^{n-3}` for each `P`, with `I` taken over the
/// unit box `prod [lo_i, hi_i]` for the cubic part.
pub fn asymptotic_compare(
    phi: &IntPoly,
    lo: &[f64],
    hi: &[f64],
    ps: &[f64],
    p0: u64,
    u: f64,
    cfg: &Config,
    opts: &IntegralOptions,
) -> Result<CompareTable> {
    let series = singular_series(phi, p0, None, cfg)?;
    let s = series
        .value
        .as_ref()
        .map(crate::arith::rat_to_f64)
        .ok_or_else(|| LabError::Numerical("singular series incomplete within the budget".into()))?;
    let cubic = phi.part(3);
    let integral = singular_integral(&cubic, lo, hi, u, opts)?;
    let n = phi.n() as i32;
    let mut rows = Vec::with_capacity(ps.len());
    for &p in ps {
        let c = count_scaled(phi, lo, hi, p, cfg)?;
        let prediction = s * integral.value * p.powi(n - 3);
        rows.push(CompareRow {
            p,
            count: c.count,
            prediction,
            ratio: (prediction != 0.0).then(|| c.count as f64 / prediction),
        });
    }
    Ok(CompareTable {
        p0,
        u,
        series: s,
        integral,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_polynomial;

    fn int(text: &str) -> IntPoly {
        parse_polynomial(text).unwrap().original()
    }

    fn brute_roots(c: [i128; 4], lo: i64, hi: i64) -> Vec<i64> {
        (lo..=hi).filter(|&t| horner(&c, t) == 0).collect()
    }

    #[test]
    fn roots_of_degenerate_cubics() {
        assert_eq!(integer_roots([0; 4], -3, 3), None);
        assert_eq!(integer_roots([5, 0, 0, 0], -3, 3), Some(vec![]));
        assert_eq!(integer_roots([-6, 3, 0, 0], -3, 3), Some(vec![2]));
        assert_eq!(integer_roots([-7, 3, 0, 0], -3, 3), Some(vec![]));
        assert_eq!(integer_roots([-4, 0, 1, 0], -3, 3), Some(vec![-2, 2]));
        assert_eq!(integer_roots([0, 0, 0, 1], -3, 3), Some(vec![0]));
        assert_eq!(integer_roots([6, -11, 6, -1], -10, 10), Some(vec![1, 2, 3]));
        assert_eq!(integer_roots([6, -11, 6, -1], 2, 2), Some(vec![2]));
        // double root at a critical point
        assert_eq!(integer_roots([4, 0, -3, 1], -10, 10), Some(vec![-1, 2]));
    }

    #[test]
    fn roots_match_scan() {
        for c3 in -3..=3i128 {
            for c2 in -4..=4i128 {
                for c1 in -6..=6i128 {
                    for c0 in -8..=8i128 {
                        let c = [c0, c1, c2, c3];
                        if c.iter().all(|v| *v == 0) {
                            continue;
                        }
                        assert_eq!(integer_roots(c, -12, 12).unwrap(), brute_roots(c, -12, 12), "{c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn fermat_cubes_on_a_cube() {
        let phi = int(r#"{"n":3,"cubic":[[1,1,1,1],[2,2,2,1],[3,3,3,-1]]}"#);
        let r = count_solutions(&phi, &IntBox::cube(3, 10), &Config::default()).unwrap();
        assert_eq!(r.count, 61);
        assert_eq!(count_naive(&phi, &IntBox::cube(3, 10), &Config::default()).unwrap(), 61);
        assert_eq!(r.solutions_sample.len(), 61);
    }

    #[test]
    fn one_variable_and_identically_zero_fibers() {
        let phi = int(r#"{"n":1,"cubic":[[1,1,1,1]],"const":1}"#);
        let r = count_solutions(&phi, &IntBox::cube(1, 2), &Config::default()).unwrap();
        assert_eq!((r.count, r.solutions_sample.clone()), (1, vec![vec![-1]]));
        // x1^2 x2 vanishes on both axes
        let phi = int(r#"{"n":2,"form":"monomial","cubic":[[1,1,2,1]]}"#);
        let b = IntBox::cube(2, 2);
        assert_eq!(count_solutions(&phi, &b, &Config::default()).unwrap().count, 9);
        assert_eq!(count_naive(&phi, &b, &Config::default()).unwrap(), 9);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let phi = int(r#"{"n":3,"form":"monomial","cubic":[[1,1,2,1],[2,3,3,-2]],"quad":[[1,3,1]],"const":-3}"#);
        let b = IntBox::new(vec![-9, -7, -8], vec![8, 9, 6]).unwrap();
        let a = count_solutions(&phi, &b, &Config::default()).unwrap();
        let s = count_solutions(&phi, &b, &Config::sequential()).unwrap();
        assert_eq!(a.count, s.count);
        assert_eq!(a.solutions_sample, s.solutions_sample);
        assert_eq!(a.count, count_naive(&phi, &b, &Config::sequential()).unwrap());
    }

    #[test]
    fn budget_refuses_large_boxes() {
        let phi = int(r#"{"n":3,"cubic":[[1,1,1,1]]}"#);
        let cfg = Config::default().with_budget(100);
        assert!(matches!(
            count_solutions(&phi, &IntBox::cube(3, 10), &cfg),
            Err(LabError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn shell_search() {
        let phi = int(r#"{"n":3,"cubic":[[1,1,1,1],[2,2,2,1],[3,3,3,1]],"const":-36}"#);
        let r = smallest_solution(&phi, 10, &Config::default()).unwrap();
        match r.outcome {
            SearchOutcome::Found { x, shell, .. } => assert_eq!((x, shell), (vec![1, 2, 3], 3)),
            other => panic!("{other:?}"),
        }
        assert_eq!(r.empty_shells, vec![0, 1, 2]);
        let phi = int(r#"{"n":1,"cubic":[[1,1,1,2]],"const":1}"#);
        let r = smallest_solution(&phi, 50, &Config::default()).unwrap();
        assert!(matches!(r.outcome, SearchOutcome::Exhausted { max_shell: 50 }));
        assert_eq!(r.points_checked, 101);
        let phi = int(r#"{"n":1,"cubic":[[1,1,1,1]],"const":-8}"#);
        let r = smallest_solution(&phi, 5, &Config::default()).unwrap();
        assert!(matches!(r.outcome, SearchOutcome::Found { ref x, shell: 2, .. } if x == &vec![2]));
    }

    #[test]
    fn comparison_table() {
        let phi = int(r#"{"n":3,"cubic":[[1,1,1,1],[2,2,2,1],[3,3,3,-2]]}"#);
        let opts = IntegralOptions {
            abs_tol: 1e-6,
            ..Default::default()
        };
        let t = asymptotic_compare(
            &phi,
            &[0.5, 0.5, 0.75],
            &[1.5, 1.5, 1.25],
            &[10.0, 20.0],
            5,
            2.0,
            &Config::default(),
            &opts,
        )
        .unwrap();
        assert!(t.series > 0.0 && t.integral.value > 0.0);
        assert!(t.rows.iter().all(|r| r.ratio.is_some_and(f64::is_finite)));
        assert!(t.csv().starts_with("P,count,prediction,ratio\n10,"));
    }
}
