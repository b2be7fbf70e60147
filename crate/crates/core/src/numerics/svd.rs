//! Thin singular value decomposition by one-sided (Hestenes) Jacobi
//! rotations.

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Singular values below `DEFAULT_RANK_TOLERANCE * sigma_max` count as zero.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;

const MAX_SWEEPS: usize = 80;

/// `A = U diag(singular_values) V^T` with `U: m x p`, `V: n x p`,
/// `p = min(m, n)`, singular values descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let max = self.singular_values.first().copied().unwrap_or(0.0);
        if max == 0.0 {
            return 0;
        }
        self.singular_values.iter().filter(|&&s| s > rel_tol * max).count()
    }

    /// Rebuilds `U diag(s) V^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let m = self.u.rows();
        let n = self.v.rows();
        let mut out = DenseMatrix::zeros(m, n);
        for (j, &s) in self.singular_values.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for r in 0..m {
                let a = self.u.get(r, j) * s;
                for c in 0..n {
                    out.set(r, c, out.get(r, c) + a * self.v.get(c, j));
                }
            }
        }
        out
    }
}

pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if a.rows() >= a.cols() {
        Ok(jacobi_tall(a))
    } else {
        let t = jacobi_tall(&a.transpose());
        Ok(Svd { u: t.v, singular_values: t.singular_values, v: t.u })
    }
}

pub fn rank(a: &DenseMatrix) -> Result<usize> {
    rank_with_tolerance(a, DEFAULT_RANK_TOLERANCE)
}

pub fn rank_with_tolerance(a: &DenseMatrix, rel_tol: f64) -> Result<usize> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0);
    }
    Ok(svd(a)?.rank(rel_tol))
}

/// One-sided Jacobi on the columns of a matrix with `rows >= cols`.
fn jacobi_tall(a: &DenseMatrix) -> Svd {
    let m = a.rows();
    let n = a.cols();
    // Column-major working copies make the column rotations contiguous.
    let mut u: Vec<Vec<f64>> = (0..n).map(|c| a.column(c)).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|c| (0..n).map(|r| if r == c { 1.0 } else { 0.0 }).collect()).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                let beta: f64 = u[q].iter().map(|x| x * x).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut u, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = u.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));

    let max = order.first().map_or(0.0, |&i| sigma[i]);
    let floor = max * f64::EPSILON * (m.max(n) as f64);
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for &i in &order {
        let s = sigma[i];
        if s > floor && s > 0.0 {
            u_cols.push(u[i].iter().map(|x| x / s).collect());
        } else {
            sigma[i] = if s > floor { s } else { 0.0 };
            u_cols.push(vec![0.0; m]);
        }
        values.push(sigma[i]);
        v_cols.push(v[i].clone());
    }
    complete_orthonormal(&mut u_cols, &values, m);

    let mut u_mat = DenseMatrix::zeros(m, n);
    let mut v_mat = DenseMatrix::zeros(n, n);
    for (j, (u, v)) in u_cols.iter().zip(&v_cols).enumerate() {
        for (r, x) in u.iter().enumerate() {
            u_mat.set(r, j, *x);
        }
        for (r, x) in v.iter().enumerate() {
            v_mat.set(r, j, *x);
        }
    }
    Svd { u: u_mat, singular_values: values, v: v_mat }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Replaces the left singular vectors of zero singular values with unit
/// vectors orthogonal to everything before them.
fn complete_orthonormal(cols: &mut [Vec<f64>], values: &[f64], m: usize) {
    let mut candidate = 0;
    for j in 0..cols.len() {
        if values[j] > 0.0 {
            continue;
        }
        while candidate < m {
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for (i, other) in cols.iter().enumerate() {
                    if i == j || (values[i] == 0.0 && i > j) {
                        continue;
                    }
                    let dot: f64 = e.iter().zip(other).map(|(a, b)| a * b).sum();
                    for (x, y) in e.iter_mut().zip(other) {
                        *x -= dot * y;
                    }
                }
            }
            let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                cols[j] = e.into_iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn assert_orthonormal_columns(m: &DenseMatrix) {
        let gram = m.transpose().matmul(m).unwrap();
        assert!(max_abs_diff(&gram, &DenseMatrix::identity(m.cols())) < 1e-10, "{gram:?}");
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let s = svd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0, 1.0]);
        assert_eq!(rank(&DenseMatrix::identity(3)).unwrap(), 3);
    }

    #[test]
    fn rank_one_outer_product() {
        let u = [1.0, -2.0, 0.5, 3.0];
        let v = [2.0, 1.0, -1.0];
        let data: Vec<f64> = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        let m = DenseMatrix::new(4, 3, data).unwrap();
        assert_eq!(rank(&m).unwrap(), 1);
        assert_eq!(rank(&m.transpose()).unwrap(), 1);
    }

    #[test]
    fn diagonal_with_zero() {
        let m = DenseMatrix::new(2, 2, vec![3.0, 0.0, 0.0, 0.0]).unwrap();
        let s = svd(&m).unwrap();
        assert_eq!(s.singular_values, vec![3.0, 0.0]);
        assert_eq!(rank(&m).unwrap(), 1);
        assert_orthonormal_columns(&s.u);
        assert_orthonormal_columns(&s.v);
    }

    #[test]
    fn zero_and_empty_matrices_have_rank_zero() {
        assert_eq!(rank(&DenseMatrix::zeros(3, 2)).unwrap(), 0);
        assert_eq!(rank(&DenseMatrix::zeros(0, 0)).unwrap(), 0);
    }

    #[test]
    fn rejects_non_finite_entries() {
        let m = DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(svd(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn reconstruction_and_orthogonality_on_wide_and_tall_inputs() {
        let mut state = 17u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for (rows, cols) in [(7, 4), (4, 7), (6, 6), (12, 3)] {
            let m = DenseMatrix::new(rows, cols, (0..rows * cols).map(|_| next()).collect()).unwrap();
            let s = svd(&m).unwrap();
            assert!(max_abs_diff(&s.reconstruct(), &m) <= 1e-10 * m.frobenius_norm());
            assert_orthonormal_columns(&s.u);
            assert_orthonormal_columns(&s.v);
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
            assert!(s.singular_values.iter().all(|&x| x >= 0.0));
        }
    }
}
