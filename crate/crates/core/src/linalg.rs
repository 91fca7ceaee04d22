use crate::error::{Error, Result};

/// Solves `a x = rhs` for a dense symmetric positive definite matrix
/// (row-major) by Cholesky factorization plus a few rounds of iterative
/// refinement. `a` is overwritten with the factor, `rhs` with the solution.
pub(crate) fn cholesky_solve(a: &mut [f64], n: usize, rhs: &mut [f64]) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(rhs.len(), n);
    let original = a.to_vec();
    let b = rhs.to_vec();
    factor(a, n)?;
    substitute(a, n, rhs);

    let mut r = vec![0.0; n];
    for _ in 0..3 {
        for i in 0..n {
            let row = &original[i * n..(i + 1) * n];
            r[i] = row.iter().zip(rhs.iter()).fold(b[i], |acc, (&aij, &xj)| (-aij).mul_add(xj, acc));
        }
        if r.iter().all(|&v| v == 0.0) {
            break;
        }
        substitute(a, n, &mut r);
        for (x, d) in rhs.iter_mut().zip(&r) {
            *x += d;
        }
    }
    Ok(())
}

/// In-place lower Cholesky factor.
fn factor(a: &mut [f64], n: usize) -> Result<()> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 1e-12 * scale) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

/// Forward then back substitution with the factor from `factor`.
fn substitute(l: &[f64], n: usize, x: &mut [f64]) {
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}
