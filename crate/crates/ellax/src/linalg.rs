//! Tiny dense complex solver for the 2x2..4x4 systems that show up in
//! basis-independence checks and theta interpolation. Gaussian elimination
//! with partial pivoting; sizes are small enough that nothing fancier pays.

use num_complex::Complex64;

/// Solve A x = b in place. Returns None when the pivot collapses.
pub(crate) fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n) && b.len() == n);
    for col in 0..n {
        let (pivot, mag) = (col..n)
            .map(|r| (r, a[r][col].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if mag < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Complex64::new(1.0, 0.0) / a[col][col];
        for r in col + 1..n {
            let f = a[r][col] * inv;
            for k in col..n {
                let sub = f * a[col][k];
                a[r][k] -= sub;
            }
            let sub = f * b[col];
            b[r] -= sub;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

pub(crate) fn inverse(a: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        cols.push(solve(a.to_vec(), e)?);
    }
    // cols[j] is the j-th column of A^{-1}.
    let mut inv = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            inv[i][j] = v;
        }
    }
    Some(inv)
}

fn norm_1(a: &[Vec<Complex64>]) -> f64 {
    let n = a.len();
    (0..n)
        .map(|j| a.iter().map(|row| row[j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number; infinite when the matrix is singular.
pub(crate) fn cond_1(a: &[Vec<Complex64>]) -> f64 {
    match inverse(a) {
        Some(inv) => norm_1(a) * norm_1(&inv),
        None => f64::INFINITY,
    }
}
