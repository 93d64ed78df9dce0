//! Dense complex linear algebra helpers on top of `faer`.

use faer::{c64, Mat, MatRef, Side};

use crate::{Error, Result};

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Mat<c64>,
}

impl Eigen {
    /// Columns whose eigenvalues lie strictly inside `(lo, hi)`.
    pub fn columns_between(&self, lo: f64, hi: f64) -> Mat<c64> {
        let idx: Vec<usize> = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > lo && v < hi)
            .map(|(i, _)| i)
            .collect();
        select_columns(self.vectors.as_ref(), &idx)
    }
}

pub fn eigh(m: MatRef<'_, c64>) -> Result<Eigen> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok(Eigen {
        values,
        vectors: evd.U().to_owned(),
    })
}

pub fn eigvalsh(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

pub fn select_columns(m: MatRef<'_, c64>, idx: &[usize]) -> Mat<c64> {
    Mat::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

/// Largest entry modulus.
pub fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// `max |m - m†|` entrywise.
pub fn hermitian_defect(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut best = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    best
}

/// Operator 2-norm of an arbitrary matrix.
pub fn spectral_norm(m: MatRef<'_, c64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m
        .singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(sv.into_iter().fold(0.0, f64::max))
}

/// Operator norm of a Hermitian matrix via its extreme eigenvalues.
pub fn hermitian_norm(m: MatRef<'_, c64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let v = eigvalsh(m)?;
    Ok(v[0].abs().max(v[v.len() - 1].abs()))
}

/// Power-iteration estimate of the operator norm of a Hermitian matrix.
///
/// Deterministic start vector; returns a lower bound that converges to the
/// true norm.
pub fn hermitian_norm_estimate(m: MatRef<'_, c64>, iters: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = Mat::<c64>::from_fn(n, 1, |i, _| {
        let s = (i as f64 + 1.0) * 0.618_033_988_749_895;
        c64::new(1.0 + (s - s.floor()), 0.5 * (s * 7.0).sin())
    });
    let mut est = 0.0;
    for _ in 0..iters {
        let nx = x.norm_l2();
        if nx == 0.0 {
            return 0.0;
        }
        x = x * faer::Scale(c64::new(1.0 / nx, 0.0));
        let y = m * &x;
        // Rayleigh quotient of m² is |m x|² for unit x.
        est = y.norm_l2();
        x = y;
    }
    est
}

/// Orthonormal basis containing the column span of `cols` (thin Householder QR).
pub fn orthonormal_hull(cols: MatRef<'_, c64>) -> Mat<c64> {
    if cols.ncols() == 0 {
        return Mat::zeros(cols.nrows(), 0);
    }
    cols.qr().compute_thin_Q()
}

/// `V V†` for a matrix of orthonormal columns.
pub fn projector(basis: MatRef<'_, c64>) -> Mat<c64> {
    basis * basis.adjoint()
}

pub fn identity(n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// `max |V†V - I|`; zero for orthonormal columns.
pub fn orthonormality_defect(v: MatRef<'_, c64>) -> f64 {
    let g = v.adjoint() * v;
    let k = g.nrows();
    let mut best = 0.0f64;
    for j in 0..k {
        for i in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            best = best.max((g[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    best
}

/// Hermitian inner product `Σ conj(a_i) b_i` of two columns.
pub fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter()
        .zip(b)
        .fold(c64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm(a: &[c64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn column(m: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub fn mat_from_columns(n: usize, cols: &[Vec<c64>]) -> Mat<c64> {
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(n: usize, seed: u64) -> Mat<c64> {
        let mut s = seed;
        let mut r = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5
        };
        let mut m = Mat::<c64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = if i == j {
                    c64::new(r(), 0.0)
                } else {
                    c64::new(r(), r())
                };
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        m
    }

    #[test]
    fn eigh_reconstructs() {
        let m = herm(12, 3);
        let e = eigh(m.as_ref()).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let d = Mat::from_fn(12, 12, |i, j| {
            if i == j {
                c64::new(e.values[i], 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let back = &e.vectors * d * e.vectors.adjoint();
        assert!(max_abs((back - &m).as_ref()) < 1e-12);
        assert!(orthonormality_defect(e.vectors.as_ref()) < 1e-12);
    }

    #[test]
    fn norm_estimate_matches_exact() {
        let m = herm(20, 11);
        let exact = hermitian_norm(m.as_ref()).unwrap();
        let est = hermitian_norm_estimate(m.as_ref(), 400);
        assert!(est <= exact * (1.0 + 1e-12));
        assert!((exact - est) / exact < 1e-3, "{exact} {est}");
        assert!((spectral_norm(m.as_ref()).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn hull_contains_span() {
        let m = herm(8, 5);
        let cols = Mat::from_fn(8, 3, |i, j| if j == 2 { m[(i, 0)] * 2.0 } else { m[(i, j)] });
        let q = orthonormal_hull(cols.as_ref());
        assert!(orthonormality_defect(q.as_ref()) < 1e-12);
        let p = projector(q.as_ref());
        let resid = &p * &cols - &cols;
        assert!(max_abs(resid.as_ref()) < 1e-12);
    }
}
