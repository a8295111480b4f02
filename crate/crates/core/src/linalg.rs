//! Dense symmetric positive-(semi)definite factorization for small systems.

/// Cholesky factor `A = L Lᵀ` of a symmetric matrix, with columns that are numerically
/// dependent on earlier ones skipped (their solution components are pinned to zero).
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
    skipped: Vec<usize>,
}

/// Pivot-to-diagonal ratio below which a column counts as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;

impl Cholesky {
    /// Factors the row-major `n × n` matrix `a`.
    pub fn factor(a: &[f64], n: usize) -> Self {
        assert_eq!(a.len(), n * n, "matrix size");
        let mut l = vec![0.0; n * n];
        let mut skipped = Vec::new();
        for j in 0..n {
            let diag = a[j * n + j];
            let mut d = diag;
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(diag > 0.0) || !(d > DEPENDENCE_TOL * diag) {
                skipped.push(j);
                l[j * n + j] = 1.0;
                continue;
            }
            let root = d.sqrt();
            l[j * n + j] = root;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / root;
            }
        }
        Cholesky { n, l, skipped }
    }

    pub fn skipped(&self) -> &[usize] {
        &self.skipped
    }

    pub fn is_full_rank(&self) -> bool {
        self.skipped.is_empty()
    }

    fn is_skipped(&self, j: usize) -> bool {
        self.skipped.binary_search(&j).is_ok()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            if self.is_skipped(i) {
                continue;
            }
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            if self.is_skipped(i) {
                continue;
            }
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// Inverse of the factored matrix (row-major), symmetric by construction.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (inv[i * n + j] + inv[j * n + i]);
                inv[i * n + j] = avg;
                inv[j * n + i] = avg;
            }
        }
        inv
    }
}

/// Quadratic form `bᵀ A⁻¹ b`; `None` when `A` is singular.
pub fn inverse_quadratic_form(a: &[f64], b: &[f64]) -> Option<f64> {
    let chol = Cholesky::factor(a, b.len());
    if !chol.is_full_rank() {
        return None;
    }
    let x = chol.solve(b);
    Some(b.iter().zip(&x).map(|(u, v)| u * v).sum())
}

/// Principal submatrix of a row-major `n × n` matrix.
pub fn submatrix(a: &[f64], n: usize, idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * idx.len());
    for &i in idx {
        for &j in idx {
            out.push(a[i * n + j]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let chol = Cholesky::factor(&a, 2);
        let x = chol.solve(&[2.0, 1.0]);
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-12);
        let inv = chol.inverse();
        assert!((inv[0] - 3.0 / 8.0).abs() < 1e-12 && (inv[1] + 2.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn flags_dependent_columns() {
        // Third column is the sum of the first two.
        let x = [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 2.0], [2.0, 1.0, 3.0]];
        let mut a = [0.0; 9];
        for row in &x {
            for i in 0..3 {
                for j in 0..3 {
                    a[i * 3 + j] += row[i] * row[j];
                }
            }
        }
        let chol = Cholesky::factor(&a, 3);
        assert_eq!(chol.skipped(), &[2]);
    }

    #[test]
    fn quadratic_form_single_entry() {
        assert_eq!(inverse_quadratic_form(&[4.0], &[3.0]), Some(9.0 / 4.0));
        assert_eq!(inverse_quadratic_form(&[0.0], &[3.0]), None);
    }
}
