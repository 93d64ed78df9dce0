use faer::{c64, Mat, MatRef};

use crate::linalg;
use crate::{Error, Result};

#[derive(Clone, Debug)]
enum Repr {
    /// `P = B B†`
    Range(Mat<c64>),
    /// `P = 1 − B B†`
    CoRange(Mat<c64>),
}

/// Orthogonal projector stored through an orthonormal basis of its range or
/// of its kernel, so that applying it to a few vectors stays cheap.
#[derive(Clone, Debug)]
pub struct SubspaceProjector {
    dim: usize,
    repr: Repr,
}

impl SubspaceProjector {
    /// Projector onto the span of the (already orthonormal) columns.
    pub fn from_orthonormal(basis: Mat<c64>) -> Self {
        SubspaceProjector {
            dim: basis.nrows(),
            repr: Repr::Range(basis),
        }
    }

    /// Validates a dense Hermitian idempotent and extracts its range.
    pub fn from_matrix(p: MatRef<'_, c64>) -> Result<Self> {
        if p.nrows() != p.ncols() {
            return Err(Error::DimensionMismatch {
                expected: p.nrows(),
                found: p.ncols(),
            });
        }
        let herm = linalg::hermitian_defect(p);
        if herm > 1e-12 {
            return Err(Error::Eigen(format!("projector not Hermitian ({herm:e})")));
        }
        let sq = p * p - p;
        let idem = linalg::max_abs(sq.as_ref());
        if idem > 1e-10 {
            return Err(Error::Eigen(format!("projector not idempotent ({idem:e})")));
        }
        let e = linalg::eigh(p)?;
        Ok(Self::from_orthonormal(e.columns_between(0.5, f64::INFINITY)))
    }

    pub fn identity(dim: usize) -> Self {
        SubspaceProjector {
            dim,
            repr: Repr::CoRange(Mat::zeros(dim, 0)),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_orthonormal(Mat::zeros(dim, 0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        match &self.repr {
            Repr::Range(b) => b.ncols(),
            Repr::CoRange(b) => self.dim - b.ncols(),
        }
    }

    pub fn complement(&self) -> Self {
        let repr = match &self.repr {
            Repr::Range(b) => Repr::CoRange(b.clone()),
            Repr::CoRange(b) => Repr::Range(b.clone()),
        };
        SubspaceProjector {
            dim: self.dim,
            repr,
        }
    }

    /// Projector onto the sum of two mutually orthogonal ranges.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let (Repr::Range(a), Repr::Range(b)) = (&self.repr, &other.repr) else {
            return Err(Error::Eigen(
                "direct sum needs range-form projectors".into(),
            ));
        };
        let overlap = linalg::max_abs((a.adjoint() * b).as_ref());
        if overlap > 1e-10 {
            return Err(Error::Eigen(format!(
                "ranges are not orthogonal (overlap {overlap:e})"
            )));
        }
        let cols = Mat::from_fn(self.dim, a.ncols() + b.ncols(), |i, j| {
            if j < a.ncols() {
                a[(i, j)]
            } else {
                b[(i, j - a.ncols())]
            }
        });
        Ok(Self::from_orthonormal(cols))
    }

    /// `P v` for a block of columns.
    pub fn apply(&self, v: MatRef<'_, c64>) -> Mat<c64> {
        match &self.repr {
            Repr::Range(b) => b * (b.adjoint() * v),
            Repr::CoRange(b) => {
                let mut out = v.to_owned();
                if b.ncols() > 0 {
                    out -= b * (b.adjoint() * v);
                }
                out
            }
        }
    }

    /// `Σ_j ⟨v_j, P v_j⟩` over the columns of `v`.
    pub fn captured_weight(&self, v: MatRef<'_, c64>) -> f64 {
        match &self.repr {
            Repr::Range(b) => (b.adjoint() * v).norm_l2().powi(2),
            Repr::CoRange(b) => {
                v.norm_l2().powi(2) - (b.adjoint() * v).norm_l2().powi(2)
            }
        }
    }

    /// Dense `dim × dim` matrix.
    pub fn matrix(&self) -> Mat<c64> {
        match &self.repr {
            Repr::Range(b) => linalg::projector(b.as_ref()),
            Repr::CoRange(b) => linalg::identity(self.dim) - linalg::projector(b.as_ref()),
        }
    }

    /// `max |P² − P|`.
    pub fn idempotency_defect(&self) -> f64 {
        let p = self.matrix();
        linalg::max_abs((&p * &p - &p).as_ref())
    }

    pub fn hermitian_defect(&self) -> f64 {
        linalg::hermitian_defect(self.matrix().as_ref())
    }
}

/// Operator norm of `[P, Q]` for two projectors (dense route).
pub fn commutator_norm(p: &SubspaceProjector, q: &SubspaceProjector) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let (pm, qm) = (p.matrix(), q.matrix());
    let c = &pm * &qm - &qm * &pm;
    linalg::spectral_norm(c.as_ref())
}

/// Operator norm of `[P, V V†]` for orthonormal columns `V`, computed on the
/// at most `2k`-dimensional space spanned by `V` and `P V`.
pub fn commutator_norm_with_span(p: &SubspaceProjector, v: MatRef<'_, c64>) -> Result<f64> {
    if p.dim() != v.nrows() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: v.nrows(),
        });
    }
    let k = v.ncols();
    if k == 0 {
        return Ok(0.0);
    }
    let x = p.apply(v);
    let joined = Mat::from_fn(v.nrows(), 2 * k, |i, j| {
        if j < k {
            v[(i, j)]
        } else {
            x[(i, j - k)]
        }
    });
    let y = linalg::orthonormal_hull(joined.as_ref());
    let a = y.adjoint() * &x;
    let b = y.adjoint() * v;
    let skew = &a * b.adjoint() - &b * a.adjoint();
    // i·skew is Hermitian with the same singular values.
    let herm = skew * faer::Scale(c64::new(0.0, 1.0));
    linalg::hermitian_norm(herm.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize, i: usize) -> Mat<c64> {
        Mat::from_fn(n, 1, |r, _| c64::new(if r == i { 1.0 } else { 0.0 }, 0.0))
    }

    fn line(theta: f64) -> SubspaceProjector {
        SubspaceProjector::from_orthonormal(Mat::from_fn(2, 1, |r, _| {
            c64::new(if r == 0 { theta.cos() } else { theta.sin() }, 0.0)
        }))
    }

    #[test]
    fn nested_ranges_commute() {
        let p = SubspaceProjector::from_orthonormal(Mat::from_fn(4, 2, |r, c| {
            c64::new(if r == c { 1.0 } else { 0.0 }, 0.0)
        }));
        let q = SubspaceProjector::from_orthonormal(unit(4, 1));
        assert!(commutator_norm(&p, &q).unwrap() < 1e-12);
        assert!(commutator_norm(&p, &p).unwrap() < 1e-12);
        assert!(commutator_norm_with_span(&p, unit(4, 1).as_ref()).unwrap() < 1e-12);
    }

    #[test]
    fn complement_and_identity() {
        let p = SubspaceProjector::from_orthonormal(unit(3, 0));
        let c = p.complement();
        assert_eq!(c.rank(), 2);
        let sum = p.matrix() + c.matrix();
        assert!(linalg::max_abs((sum - linalg::identity(3)).as_ref()) < 1e-15);
        assert_eq!(SubspaceProjector::identity(5).rank(), 5);
        assert_eq!(SubspaceProjector::zero(5).rank(), 0);
        let dense = SubspaceProjector::from_matrix(c.matrix().as_ref()).unwrap();
        assert_eq!(dense.rank(), 2);
        assert!(SubspaceProjector::from_matrix(linalg::identity(3).as_ref()).is_ok());
        let bad = linalg::identity(2) * faer::Scale(c64::new(0.5, 0.0));
        assert!(SubspaceProjector::from_matrix(bad.as_ref()).is_err());
    }

    #[test]
    fn direct_sum_rejects_overlap() {
        let p = SubspaceProjector::from_orthonormal(unit(3, 0));
        let q = SubspaceProjector::from_orthonormal(unit(3, 1));
        assert_eq!(p.direct_sum(&q).unwrap().rank(), 2);
        assert!(p.direct_sum(&p).is_err());
    }

    proptest! {
        #[test]
        fn rank_one_pair_in_plane(a in 0.0f64..3.1, b in 0.0f64..3.1) {
            // For two lines at angle θ, ‖[P,Q]‖ = |sin θ cos θ|.
            let (p, q) = (line(a), line(b));
            let theta = a - b;
            let expect = (theta.sin() * theta.cos()).abs();
            let dense = commutator_norm(&p, &q).unwrap();
            prop_assert!((dense - expect).abs() < 1e-12);
            let qv = Mat::from_fn(2, 1, |r, _| c64::new(if r == 0 { b.cos() } else { b.sin() }, 0.0));
            let low = commutator_norm_with_span(&p, qv.as_ref()).unwrap();
            prop_assert!((low - expect).abs() < 1e-12);
        }
    }
}
