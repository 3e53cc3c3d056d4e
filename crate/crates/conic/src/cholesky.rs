//! Dense Cholesky factorization that skips the zero profile of each row.
//!
//! The Schur complement of the steering programs is block banded because
//! constraints only couple neighbouring time steps; fill stays inside the
//! row envelope, so work is proportional to `n * bandwidth^2`.

pub(crate) struct ProfileCholesky {
    n: usize,
    first: Vec<usize>,
    l: Vec<f64>,
}

impl ProfileCholesky {
    /// Factors `a + shift * I` where `a` is a dense symmetric row-major matrix.
    /// Returns `None` when a pivot is not positive.
    pub fn factor(a: &[f64], n: usize, shift: f64) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let first: Vec<usize> = (0..n)
            .map(|i| (0..i).find(|&j| a[i * n + j] != 0.0).unwrap_or(i))
            .collect();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let k0 = fi.max(first[j]);
                let dot: f64 = l[i * n + k0..i * n + j]
                    .iter()
                    .zip(&l[j * n + k0..j * n + j])
                    .map(|(x, y)| x * y)
                    .sum();
                l[i * n + j] = (a[i * n + j] - dot) / l[j * n + j];
            }
            let sq: f64 = l[i * n + fi..i * n + i].iter().map(|x| x * x).sum();
            let d = a[i * n + i] + shift - sq;
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            l[i * n + i] = d.sqrt();
        }
        Some(Self { n, first, l })
    }

    /// Solves `(a + shift I) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let dot: f64 = self.l[i * n + fi..i * n + i]
                .iter()
                .zip(&b[fi..i])
                .map(|(x, y)| x * y)
                .sum();
            b[i] = (b[i] - dot) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            b[i] /= self.l[i * n + i];
            let xi = b[i];
            let fi = self.first[i];
            for (k, lik) in (fi..i).zip(&self.l[i * n + fi..i * n + i]) {
                b[k] -= lik * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_banded_spd_system() {
        let n = 7;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 4.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        a[6 * n] = 0.5;
        a[6] = 0.5;
        let f = ProfileCholesky::factor(&a, n, 0.0).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64) - 2.5).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x_true[j]).sum())
            .collect();
        f.solve_in_place(&mut b);
        for (x, y) in b.iter().zip(&x_true) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(ProfileCholesky::factor(&a, 2, 0.0).is_none());
    }
}
