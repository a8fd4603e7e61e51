//! Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.

#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        SymTridiagonal { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x` (negative pivots of `T − x`).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = self.diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            (lo.min(self.diag[i] - r), hi.max(self.diag[i] + r))
        })
    }

    /// The `k`-th smallest eigenvalue (0-based) to absolute tolerance `tol`.
    pub fn eigenvalue(&self, k: usize, tol: f64) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn discrete_laplacian_spectrum() {
        // eigenvalues 2 − 2cos(kπ/(n+1))
        let n = 50;
        let t = SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]);
        for k in 0..5 {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((t.eigenvalue(k, 1e-13) - exact).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn matches_dense_solver(diag in prop::collection::vec(-5.0..5.0f64, 2..12), seed in any::<u64>()) {
            let n = diag.len();
            let off: Vec<f64> = (0..n - 1).map(|i| ((seed >> (i % 60)) & 7) as f64 * 0.4 - 1.2).collect();
            let t = SymTridiagonal::new(diag.clone(), off.clone());
            let dense = DMatrix::from_fn(n, n, |i, j| {
                if i == j { diag[i] } else if j == i + 1 { off[i] } else if i == j + 1 { off[j] } else { 0.0 }
            });
            let mut eig: Vec<f64> = dense.symmetric_eigenvalues().iter().cloned().collect();
            eig.sort_by(f64::total_cmp);
            for (k, e) in eig.iter().enumerate() {
                prop_assert!((t.eigenvalue(k, 1e-12) - e).abs() < 1e-9);
            }
        }
    }
}
