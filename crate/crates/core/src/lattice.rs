//! Integer boxes and the odometer used to walk them.

use serde::{Deserialize, Serialize};

use crate::error::{check_budget, LabError, Result};

/// The lattice box `prod [lo_i, hi_i]` (inclusive). Empty when some `lo_i > hi_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl IntBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<IntBox> {
        if lo.len() != hi.len() {
            return Err(LabError::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        Ok(IntBox { lo, hi })
    }

    /// `[-p, p]^n`.
    pub fn cube(n: usize, p: i64) -> IntBox {
        IntBox {
            lo: vec![-p; n],
            hi: vec![p; n],
        }
    }

    /// Lattice points of `P * prod [c_i - w, c_i + w]`.
    pub fn scaled(center: &[f64], width: f64, p: f64) -> IntBox {
        let lo = center.iter().map(|c| (p * (c - width)).ceil() as i64).collect();
        let hi = center.iter().map(|c| (p * (c + width)).floor() as i64).collect();
        IntBox { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn side(&self, i: usize) -> u128 {
        if self.hi[i] < self.lo[i] {
            0
        } else {
            (self.hi[i] as i128 - self.lo[i] as i128 + 1) as u128
        }
    }

    /// Number of lattice points (saturating).
    pub fn count(&self) -> u128 {
        (0..self.dim()).fold(1u128, |acc, i| acc.saturating_mul(self.side(i)))
    }

    pub fn sup(&self) -> u64 {
        self.lo
            .iter()
            .chain(&self.hi)
            .map(|v| v.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn check_budget(&self, budget: u64) -> Result<()> {
        check_budget(self.count(), budget)
    }

    /// Visit every point whose first coordinate is `lo_0 + block`, in
    /// lexicographic order. Returns early when `f` returns `false`.
    pub fn walk_block<F: FnMut(&[i64]) -> bool>(&self, block: usize, mut f: F) {
        if self.is_empty() {
            return;
        }
        let n = self.dim();
        if n == 0 {
            f(&[]);
            return;
        }
        let mut x = self.lo.clone();
        x[0] = self.lo[0] + block as i64;
        loop {
            if !f(&x) {
                return;
            }
            if !self.advance(&mut x, 1) {
                return;
            }
        }
    }

    /// Lexicographic successor in coordinates `from..n`; `false` after the last point.
    pub fn advance(&self, x: &mut [i64], from: usize) -> bool {
        for i in (from..x.len()).rev() {
            if x[i] < self.hi[i] {
                x[i] += 1;
                return true;
            }
            x[i] = self.lo[i];
        }
        false
    }

    /// Number of blocks used by [`IntBox::walk_block`].
    pub fn blocks(&self) -> usize {
        if self.dim() == 0 {
            1
        } else {
            self.side(0) as usize
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walk_visits_every_point_once() {
        let b = IntBox::new(vec![-1, 0, 2], vec![1, 1, 4]).unwrap();
        assert_eq!(b.count(), 18);
        let mut seen = Vec::new();
        for blk in 0..b.blocks() {
            b.walk_block(blk, |x| {
                seen.push(x.to_vec());
                true
            });
        }
        assert_eq!(seen.len(), 18);
        let mut sorted = seen.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, seen);
        assert!(seen.iter().all(|x| b.contains(x)));
    }

    #[test]
    fn scaled_box_rounds_inwards() {
        let b = IntBox::scaled(&[0.5, -1.0], 0.25, 10.0);
        assert_eq!(b.lo, vec![3, -12]);
        assert_eq!(b.hi, vec![7, -8]);
        assert!(IntBox::new(vec![1], vec![0]).unwrap().is_empty());
        assert_eq!(IntBox::new(vec![1], vec![0]).unwrap().count(), 0);
    }
}
