//! Deterministic summation and root-of-unity tables.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use std::f64::consts::TAU;

const LEAF: usize = 32;

/// Pairwise summation with a fixed split, so the result depends only on the
/// order of the input.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// e(t) = exp(2πit).
#[inline]
pub fn e(t: f64) -> Complex64 {
    let th = TAU * t;
    Complex64::new(th.cos(), th.sin())
}

/// Precomputed e(k/n) for k in [0, n).
#[derive(Debug, Clone)]
pub struct RootTable {
    n: u64,
    table: Vec<Complex64>,
}

impl RootTable {
    pub fn new(n: u64) -> Self {
        let table = (0..n).map(|k| e(k as f64 / n as f64)).collect();
        Self { n, table }
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    /// e(k/n) for any signed k.
    #[inline]
    pub fn at(&self, k: i128) -> Complex64 {
        self.table[k.rem_euclid(self.n as i128) as usize]
    }
}

/// Unnormalized 3D DFT of an n×n×n array stored row-major (index
/// (i·n + j)·n + k). `Forward` uses e(−jk/n), `Inverse` uses e(+jk/n).
pub fn fft3(data: &mut [Complex64], n: usize, direction: FftDirection) {
    assert_eq!(data.len(), n * n * n);
    if n == 1 {
        return;
    }
    let fft = FftPlanner::new().plan_fft(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // last axis is contiguous
    fft.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                line[j] = data[(i * n + j) * n + k];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for j in 0..n {
                data[(i * n + j) * n + k] = line[j];
            }
        }
    }
    for j in 0..n {
        for k in 0..n {
            for i in 0..n {
                line[i] = data[(i * n + j) * n + k];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for i in 0..n {
                data[(i * n + j) * n + k] = line[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integers() {
        let xs: Vec<f64> = (1..=10_000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 50_005_000.0);
    }

    #[test]
    fn pairwise_beats_naive_on_ill_conditioned_input() {
        let xs: Vec<f64> = (0..1_000_000).map(|k| 0.1 + 1e-7 * (k % 7) as f64).collect();
        let exact: f64 = 100_000.0 + 1e-7 * 2_999_997.0;
        let naive: f64 = xs.iter().sum();
        let pw = pairwise_sum(&xs);
        assert!((pw - exact).abs() <= (naive - exact).abs());
        assert!((pw - exact).abs() < 1e-8);
    }

    #[test]
    fn fft3_matches_direct_sum() {
        let n = 5;
        let data: Vec<Complex64> = (0..n * n * n)
            .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let mut out = data.clone();
        fft3(&mut out, n, FftDirection::Inverse);
        for (c1, c2, c3) in [(0, 0, 0), (1, 2, 3), (4, 0, 2)] {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let t = (c1 * i + c2 * j + c3 * k) as f64 / n as f64;
                        s += data[(i * n + j) * n + k] * e(t);
                    }
                }
            }
            assert!((s - out[(c1 * n + c2) * n + c3]).norm() < 1e-11);
        }
    }

    #[test]
    fn root_table_wraps() {
        let t = RootTable::new(12);
        assert!((t.at(-1) - e(11.0 / 12.0)).norm() < 1e-15);
        assert!((t.at(3) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }
}
