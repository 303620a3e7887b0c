//! Thin safe wrappers over `matrixmultiply::dgemm` for the row-major layouts
//! used by the training engine.

/// `c = alpha * a * b + beta * c`; `a` is `m x k`, `b` is `k x n`, all row-major.
#[allow(clippy::too_many_arguments)]
pub fn dgemm_ab(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c = alpha * a * b^T + beta * c`; `a` is `m x k`, `b` is `n x k`, all row-major.
#[allow(clippy::too_many_arguments)]
pub fn dgemm_abt(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), n * k);
    assert_eq!(c.len(), m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c = alpha * a^T * b + beta * c`; `a` is `m x k` (so `a^T` is `k x m`),
/// `b` is `m x n`; `c` is `k x n`, all row-major.
#[allow(clippy::too_many_arguments)]
pub fn dgemm_atb(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), m * n);
    assert_eq!(c.len(), k * n);
    unsafe {
        matrixmultiply::dgemm(
            k,
            m,
            n,
            alpha,
            a.as_ptr(),
            1,
            k as isize,
            b.as_ptr(),
            n as isize,
            1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for l in 0..k {
                for j in 0..n {
                    c[i * n + j] += a[i * k + l] * b[l * n + j];
                }
            }
        }
        c
    }

    fn assert_close(got: &[f64], want: &[f64]) {
        assert_eq!(got.len(), want.len());
        for (x, y) in got.iter().zip(want) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn plain_product_matches_naive() {
        let (m, k, n) = (5, 7, 3);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64).cos()).collect();
        let mut c = vec![0.0; m * n];
        dgemm_ab(m, k, n, 1.0, &a, &b, 0.0, &mut c);
        assert_close(&c, &naive(m, k, n, &a, &b));
    }

    #[test]
    fn b_transposed_product_matches_naive() {
        let (m, k, n) = (4, 6, 5);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut bt = vec![0.0; n * k];
        for l in 0..k {
            for j in 0..n {
                bt[j * k + l] = b[l * n + j];
            }
        }
        let mut c = vec![0.0; m * n];
        dgemm_abt(m, k, n, 1.0, &a, &bt, 0.0, &mut c);
        assert_close(&c, &naive(m, k, n, &a, &b));
    }

    #[test]
    fn a_transposed_product_matches_naive() {
        // c (k x n) = a^T (k x m) * b (m x n), with a stored m x k.
        let (m, k, n) = (6, 4, 3);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..m * n).map(|i| (i as f64 * 0.2).cos()).collect();
        let mut at = vec![0.0; k * m];
        for i in 0..m {
            for l in 0..k {
                at[l * m + i] = a[i * k + l];
            }
        }
        let mut c = vec![0.0; k * n];
        dgemm_atb(m, k, n, 1.0, &a, &b, 0.0, &mut c);
        assert_close(&c, &naive(k, m, n, &at, &b));
    }

    #[test]
    fn accumulation_respects_beta() {
        let (m, k, n) = (2, 3, 2);
        let a = vec![1.0; m * k];
        let b = vec![2.0; k * n];
        let mut c = vec![10.0; m * n];
        dgemm_ab(m, k, n, 1.0, &a, &b, 1.0, &mut c);
        for x in &c {
            assert!((x - 16.0).abs() < 1e-12);
        }
    }
}
