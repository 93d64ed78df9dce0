use std::collections::BTreeMap;

use faer::{c64, Mat, MatRef};

use crate::linalg;
use crate::{Error, Result};

/// A continuous map `t ↦ B_t` into Hermitian matrices of fixed size.
pub trait HermitianFamily {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64) -> Mat<c64>;
    fn name(&self) -> String {
        "family".into()
    }
}

impl<T: HermitianFamily + ?Sized> HermitianFamily for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: f64) -> Mat<c64> {
        (**self).eval(t)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// Family given by a closure.
pub struct FnFamily<F> {
    dim: usize,
    name: String,
    f: F,
}

impl<F: Fn(f64) -> Mat<c64>> FnFamily<F> {
    pub fn new(dim: usize, name: impl Into<String>, f: F) -> Self {
        FnFamily {
            dim,
            name: name.into(),
            f,
        }
    }
}

impl<F: Fn(f64) -> Mat<c64>> HermitianFamily for FnFamily<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64) -> Mat<c64> {
        (self.f)(t)
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// `c · B_t` for a fixed real `c`.
pub struct Scaled<F> {
    pub inner: F,
    pub factor: f64,
}

impl<F: HermitianFamily> HermitianFamily for Scaled<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, t: f64) -> Mat<c64> {
        self.inner.eval(t) * faer::Scale(c64::new(self.factor, 0.0))
    }
    fn name(&self) -> String {
        format!("{}×{}", self.factor, self.inner.name())
    }
}

/// Diagonal family `diag(f_1(t), …, f_k(t))`.
pub fn diagonal_family<F>(curves: Vec<F>) -> FnFamily<impl Fn(f64) -> Mat<c64>>
where
    F: Fn(f64) -> f64,
{
    let k = curves.len();
    FnFamily::new(k, "diagonal", move |t| {
        Mat::from_fn(k, k, |i, j| {
            if i == j {
                c64::new(curves[i](t), 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        })
    })
}

/// Spectral data at one parameter value.
#[derive(Clone, Debug)]
pub struct Sample {
    pub t: f64,
    /// Full spectrum, ascending.
    pub values: Vec<f64>,
    /// Eigenvalues strictly inside `(−δ, δ)`, ascending.
    pub window_values: Vec<f64>,
    /// Orthonormal eigenvectors matching `window_values`.
    pub window_vectors: Mat<c64>,
}

impl Sample {
    /// Distance from `gamma` to the spectrum.
    pub fn distance_to_spectrum(&self, gamma: f64) -> f64 {
        self.values
            .iter()
            .map(|l| (l - gamma).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates a family on demand and caches spectra by parameter value.
pub struct SampledFamily<'a> {
    family: &'a dyn HermitianFamily,
    delta: f64,
    samples: BTreeMap<u64, Sample>,
}

impl<'a> SampledFamily<'a> {
    pub fn new(family: &'a dyn HermitianFamily, delta: f64) -> Self {
        SampledFamily {
            family,
            delta,
            samples: BTreeMap::new(),
        }
    }

    pub fn family(&self) -> &dyn HermitianFamily {
        self.family
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// Hermitian matrix at `t`, checked.
    pub fn matrix(&self, t: f64) -> Result<Mat<c64>> {
        let b = self.family.eval(t);
        if b.nrows() != self.family.dim() || b.ncols() != self.family.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.family.dim(),
                found: b.nrows(),
            });
        }
        let scale = linalg::max_abs(b.as_ref()).max(f64::MIN_POSITIVE);
        let defect = linalg::hermitian_defect(b.as_ref());
        if defect > 1e-12 * scale {
            return Err(Error::Eigen(format!(
                "{} is not Hermitian at t = {t} (defect {defect:e})",
                self.family.name()
            )));
        }
        Ok(b)
    }

    pub fn sample(&mut self, t: f64) -> Result<&Sample> {
        let key = key(t);
        if !self.samples.contains_key(&key) {
            let b = self.matrix(t)?;
            let s = self.decompose(t, b.as_ref())?;
            self.samples.insert(key, s);
        }
        Ok(&self.samples[&key])
    }

    fn decompose(&self, t: f64, b: MatRef<'_, c64>) -> Result<Sample> {
        let e = linalg::eigh(b)?;
        let idx: Vec<usize> = (0..e.values.len())
            .filter(|&i| e.values[i].abs() < self.delta)
            .collect();
        Ok(Sample {
            t,
            window_values: idx.iter().map(|&i| e.values[i]).collect(),
            window_vectors: linalg::select_columns(e.vectors.as_ref(), &idx),
            values: e.values,
        })
    }

    /// Already-computed sample, if any.
    pub fn get(&self, t: f64) -> Option<&Sample> {
        self.samples.get(&key(t))
    }

    /// All cached samples in increasing `t`.
    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.samples.values()
    }

    /// Cached samples with `lo ≤ t ≤ hi`.
    pub fn samples_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = &Sample> {
        self.samples.range(key(lo)..=key(hi)).map(|(_, s)| s)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

// Non-negative floats order like their bit patterns.
fn key(t: f64) -> u64 {
    debug_assert!(t >= 0.0);
    (t + 0.0).to_bits()
}

/// Upper bound on `‖A‖₂` for Hermitian `A`: the largest absolute row sum.
pub fn row_sum_norm(a: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for i in 0..a.nrows() {
        let mut s = 0.0;
        for j in 0..a.ncols() {
            s += a[(i, j)].norm();
        }
        best = best.max(s);
    }
    best
}
