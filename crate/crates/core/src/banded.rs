//! Symmetric positive definite band matrices with an in-place Cholesky factorization.

use crate::error::{Error, Result};

/// Lower band of an SPD matrix, `bandwidth` sub-diagonals, row-major.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
    factored: bool,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
        self.factored = false;
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.bandwidth + 1) + (j + self.bandwidth - i)
    }

    /// Adds `v` to entry `(i, j)`; only the lower triangle is stored, so the
    /// symmetric partner is implied.
    ///
    /// Panics if `(i, j)` falls outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(
            i - j <= self.bandwidth,
            "entry ({i}, {j}) outside band {}",
            self.bandwidth
        );
        let k = self.at(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            0.0
        } else {
            self.data[self.at(i, j)]
        }
    }

    /// Overwrites the stored band with its Cholesky factor `L` (`A = L L^T`).
    pub fn factor(&mut self) -> Result<()> {
        let bw = self.bandwidth;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = self.data[self.at(i, j)];
                let ri = self.at(i, k0);
                let rj = self.at(j, k0);
                for k in 0..(j - k0) {
                    sum -= self.data[ri + k] * self.data[rj + k];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite(i));
                    }
                    let d = self.at(i, i);
                    self.data[d] = sum.sqrt();
                } else {
                    let djj = self.data[self.at(j, j)];
                    let d = self.at(i, j);
                    self.data[d] = sum / djj;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place using the factor from [`BandedSpd::factor`].
    pub fn solve(&self, b: &mut [f64]) {
        assert!(self.factored, "solve called before factor");
        assert_eq!(b.len(), self.n);
        let bw = self.bandwidth;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            let mut sum = b[i];
            for j in j0..i {
                sum -= self.data[self.at(i, j)] * b[j];
            }
            b[i] = sum / self.data[self.at(i, i)];
        }
        for i in (0..self.n).rev() {
            let i1 = (i + bw).min(self.n - 1);
            let mut sum = b[i];
            for j in (i + 1)..=i1 {
                sum -= self.data[self.at(j, i)] * b[j];
            }
            b[i] = sum / self.data[self.at(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(a: &BandedSpd, x: &[f64]) -> Vec<f64> {
        (0..a.dim())
            .map(|i| (0..a.dim()).map(|j| a.get(i, j) * x[j]).sum())
            .collect()
    }

    #[test]
    fn solves_tridiagonal_laplacian() {
        let n = 50;
        let mut a = BandedSpd::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = dense_mul(&a, &x);
        a.factor().unwrap();
        a.solve(&mut b);
        for (u, v) in x.iter().zip(&b) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn solves_wide_band() {
        let n = 40;
        let bw = 7;
        let mut a = BandedSpd::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 20.0 + i as f64 * 0.1);
            for k in 1..=bw.min(i) {
                a.add(i, i - k, 1.0 / (1.0 + k as f64 + (i % 3) as f64));
            }
        }
        let orig = a.clone();
        let x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        let mut b = dense_mul(&orig, &x);
        a.factor().unwrap();
        a.solve(&mut b);
        for (u, v) in x.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_indefinite() {
        let mut a = BandedSpd::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert_eq!(a.factor(), Err(Error::NotPositiveDefinite(1)));
    }
}
