//! Exact integer linear algebra: Bareiss elimination, column echelon forms,
//! integer kernels and LLL reduction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Rank over the rationals by fraction-free elimination.
pub fn rank_big(a: &[Vec<BigInt>]) -> usize {
    bareiss(a.to_vec()).0
}

/// Determinant of a square matrix.
pub fn det_big(a: &[Vec<BigInt>]) -> BigInt {
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == n), "square matrix required");
    if n == 0 {
        return BigInt::one();
    }
    let (rank, det) = bareiss(a.to_vec());
    if rank < n {
        BigInt::zero()
    } else {
        det
    }
}

/// Returns `(rank, signed last pivot)`; the pivot equals the determinant for
/// non-singular square input.
fn bareiss(mut m: Vec<Vec<BigInt>>) -> (usize, BigInt) {
    let rows = m.len();
    if rows == 0 {
        return (0, BigInt::one());
    }
    let cols = m[0].len();
    let mut prev = BigInt::one();
    let mut sign = 1i32;
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        if p != r {
            m.swap(p, r);
            sign = -sign;
        }
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = (&m[r][c] * &m[i][j] - &m[i][c] * &m[r][j]) / &prev;
                m[i][j] = v;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        r += 1;
    }
    (r, if sign < 0 { -prev } else { prev })
}

/// Rank over the rationals of a small integer matrix, falling back to big
/// integers on overflow.
pub fn rank_i64(a: &[Vec<i64>]) -> usize {
    match rank_i128(a) {
        Some(r) => r,
        None => rank_big(
            &a.iter()
                .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                .collect::<Vec<_>>(),
        ),
    }
}

fn rank_i128(a: &[Vec<i64>]) -> Option<usize> {
    let rows = a.len();
    if rows == 0 {
        return Some(0);
    }
    let cols = a[0].len();
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut prev: i128 = 1;
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(p, r);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let x = m[r][c].checked_mul(m[i][j])?;
                let y = m[i][c].checked_mul(m[r][j])?;
                m[i][j] = x.checked_sub(y)? / prev;
            }
            m[i][c] = 0;
        }
        prev = m[r][c];
        r += 1;
    }
    Some(r)
}

/// Rank over `F_p` of an integer matrix.
pub fn rank_mod_p(a: &[Vec<i64>], p: u64) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let pi = p as i128;
    let mut m: Vec<Vec<u64>> = a
        .iter()
        .map(|r| r.iter().map(|&v| (v as i128).rem_euclid(pi) as u64).collect())
        .collect();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(piv, r);
        let inv = crate::arith::mod_inverse_u64(m[r][c], p).expect("p prime");
        for i in r + 1..rows {
            if m[i][c] == 0 {
                continue;
            }
            let f = (m[i][c] as u128 * inv as u128 % p as u128) as u64;
            for j in c..cols {
                let sub = (f as u128 * m[r][j] as u128 % p as u128) as u64;
                m[i][j] = (m[i][j] + p - sub) % p;
            }
        }
        r += 1;
    }
    r
}

/// Column echelon form `A U = H` with `U` unimodular. Returns `(H, U, pivots)`
/// where `pivots[t]` is the row of the `t`-th pivot; columns of `H` from
/// `pivots.len()` on are zero.
pub fn column_echelon(a: &[Vec<BigInt>]) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>, Vec<usize>) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut h: Vec<Vec<BigInt>> = a.to_vec();
    let mut u: Vec<Vec<BigInt>> = (0..cols)
        .map(|i| (0..cols).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut c = 0;
    let col_op = |m: &mut Vec<Vec<BigInt>>, dst: usize, src: usize, q: &BigInt| {
        // column dst -= q * column src
        for row in m.iter_mut() {
            let t = &row[src] * q;
            row[dst] -= t;
        }
    };
    let col_swap = |m: &mut Vec<Vec<BigInt>>, x: usize, y: usize| {
        for row in m.iter_mut() {
            row.swap(x, y);
        }
    };
    for i in 0..rows {
        if c == cols {
            break;
        }
        loop {
            // smallest non-zero entry of row i among columns c..
            let piv = (c..cols)
                .filter(|&j| !h[i][j].is_zero())
                .min_by(|&x, &y| h[i][x].abs().cmp(&h[i][y].abs()).then(x.cmp(&y)));
            let Some(piv) = piv else { break };
            let mut done = true;
            for j in c..cols {
                if j == piv || h[i][j].is_zero() {
                    continue;
                }
                let q = h[i][j].div_floor(&h[i][piv]);
                col_op(&mut h, j, piv, &q);
                col_op(&mut u, j, piv, &q);
                if !h[i][j].is_zero() {
                    done = false;
                }
            }
            if done {
                if piv != c {
                    col_swap(&mut h, piv, c);
                    col_swap(&mut u, piv, c);
                }
                pivots.push(i);
                c += 1;
                break;
            }
        }
    }
    (h, u, pivots)
}

/// Basis of the integer kernel `{x in Z^m : A x = 0}` as columns of a unimodular transform.
pub fn integer_kernel(a: &[Vec<BigInt>], cols: usize) -> Vec<Vec<BigInt>> {
    if a.is_empty() {
        return (0..cols)
            .map(|i| (0..cols).map(|j| BigInt::from(i32::from(i == j))).collect())
            .collect();
    }
    let (_, u, pivots) = column_echelon(a);
    (pivots.len()..cols)
        .map(|j| (0..cols).map(|i| u[i][j].clone()).collect())
        .collect()
}

/// gcd of all maximal (`rows x rows`) minors of a `rows x cols` matrix, `rows <= cols`.
pub fn maximal_minor_gcd(a: &[Vec<BigInt>]) -> BigInt {
    let rows = a.len();
    let (h, _, pivots) = column_echelon(a);
    if pivots.len() < rows {
        return BigInt::zero();
    }
    // echelon pivots sit on the diagonal: H = [L | 0] with L lower triangular
    (0..rows).fold(BigInt::one(), |acc, i| acc * &h[i][i]).abs()
}

fn dot_q(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| x * y).fold(BigRational::zero(), |s, t| s + t)
}

/// LLL reduction (`delta = 3/4`) of linearly independent integer vectors.
pub fn lll(basis: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut b: Vec<Vec<BigInt>> = basis.to_vec();
    let d = b.len();
    if d <= 1 {
        return b;
    }
    let delta = BigRational::new(BigInt::from(3), BigInt::from(4));
    let to_q = |v: &Vec<BigInt>| v.iter().map(|x| BigRational::from_integer(x.clone())).collect::<Vec<_>>();
    let gso = |b: &Vec<Vec<BigInt>>| {
        let mut bs: Vec<Vec<BigRational>> = Vec::with_capacity(d);
        let mut mu = vec![vec![BigRational::zero(); d]; d];
        let mut norms = Vec::with_capacity(d);
        for i in 0..d {
            let bi = to_q(&b[i]);
            let mut v = bi.clone();
            for j in 0..i {
                let m = dot_q(&bi, &bs[j]) / &norms[j];
                for (vk, bk) in v.iter_mut().zip(&bs[j]) {
                    *vk -= &m * bk;
                }
                mu[i][j] = m;
            }
            norms.push(dot_q(&v, &v));
            bs.push(v);
        }
        (mu, norms)
    };
    let (mut mu, mut norms) = gso(&b);
    let mut k = 1;
    while k < d {
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if !q.is_zero() {
                let qi = q.to_integer();
                for t in 0..b[k].len() {
                    let s = &b[j][t] * &qi;
                    b[k][t] -= s;
                }
                let (m2, n2) = gso(&b);
                mu = m2;
                norms = n2;
            }
        }
        let lhs = &norms[k];
        let rhs = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &norms[k - 1];
        if *lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            let (m2, n2) = gso(&b);
            mu = m2;
            norms = n2;
            k = (k - 1).max(1);
        }
    }
    b
}

pub fn sup_norm(v: &[BigInt]) -> BigInt {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero)
}

/// Flip the sign so that the first non-zero entry is positive.
pub fn normalize_sign(v: &mut [BigInt]) {
    if let Some(first) = v.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            v.iter_mut().for_each(|x| *x = -x.clone());
        }
    }
}
