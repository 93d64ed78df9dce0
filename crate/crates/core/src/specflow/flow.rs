use faer::{c64, Mat, MatRef};
use serde::Serialize;

use super::family::{HermitianFamily, Sample, SampledFamily};
use super::plan::{plan_partition, EngineOptions, PartitionPlan};
use super::projector::{commutator_norm_with_span, SubspaceProjector};
use crate::cli::output::ser_f17;
use crate::linalg;
use crate::{Error, Result};

/// Inertia eigenvalues below this modulus are treated as a tameness failure.
pub const INERTIA_FLOOR: f64 = 0.4;

/// Tameness bound on `‖[P, E(B_t, J)]‖`.
pub const TAME_BOUND: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inertia {
    pub m_plus: usize,
    pub m_minus: usize,
    pub min_abs_eig: f64,
}

/// Orthonormal eigenvectors of `b` with eigenvalues strictly between the two
/// fences (either order).
pub fn eigenspace_span(
    b: MatRef<'_, c64>,
    gamma_a: f64,
    gamma_b: f64,
    margin: f64,
) -> Result<Mat<c64>> {
    let e = linalg::eigh(b)?;
    span_between(&e.values, e.vectors.as_ref(), gamma_a, gamma_b, margin)
}

fn span_between(
    values: &[f64],
    vectors: MatRef<'_, c64>,
    gamma_a: f64,
    gamma_b: f64,
    margin: f64,
) -> Result<Mat<c64>> {
    let (lo, hi) = (gamma_a.min(gamma_b), gamma_a.max(gamma_b));
    for &l in values {
        for g in [gamma_a, gamma_b] {
            if (l - g).abs() < margin {
                return Err(Error::FenceTooClose {
                    fence: g,
                    eigenvalue: l,
                    margin,
                });
            }
        }
    }
    let idx: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] > lo && values[i] < hi)
        .collect();
    Ok(linalg::select_columns(vectors, &idx))
}

fn sample_span(s: &Sample, gamma_a: f64, gamma_b: f64, margin: f64) -> Result<Mat<c64>> {
    for &l in &s.values {
        for g in [gamma_a, gamma_b] {
            if (l - g).abs() < margin {
                return Err(Error::FenceTooClose {
                    fence: g,
                    eigenvalue: l,
                    margin,
                });
            }
        }
    }
    span_between(
        &s.window_values,
        s.window_vectors.as_ref(),
        gamma_a,
        gamma_b,
        margin,
    )
}

/// Signature of `C = V†(2P − 1)V` on the span of the orthonormal columns `V`.
///
/// With a measured commutator norm `epsilon`, every eigenvalue of `C` must
/// have modulus at least `√(1 − 4ε²) ≥ 1 − 2ε`.
pub fn inertia_along(
    v: MatRef<'_, c64>,
    p: &SubspaceProjector,
    epsilon: Option<f64>,
) -> Result<Inertia> {
    let k = v.ncols();
    if k == 0 {
        return Ok(Inertia {
            m_plus: 0,
            m_minus: 0,
            min_abs_eig: f64::INFINITY,
        });
    }
    if v.nrows() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: v.nrows(),
        });
    }
    let defect = linalg::orthonormality_defect(v);
    if defect > 1e-10 {
        return Err(Error::Eigen(format!(
            "basis is not orthonormal (defect {defect:e})"
        )));
    }
    let pv = p.apply(v);
    let mut c = v.adjoint() * pv * faer::Scale(c64::new(2.0, 0.0));
    for i in 0..k {
        c[(i, i)] -= c64::new(1.0, 0.0);
    }
    // Symmetrise against rounding before the small eigensolve.
    let c = Mat::from_fn(k, k, |i, j| (c[(i, j)] + c[(j, i)].conj()) * 0.5);
    let eig = linalg::eigvalsh(c.as_ref())?;
    let min_abs_eig = eig.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if min_abs_eig < INERTIA_FLOOR {
        return Err(Error::InertiaMargin {
            value: min_abs_eig,
            threshold: INERTIA_FLOOR,
        });
    }
    if let Some(eps) = epsilon {
        let bound = (1.0 - 4.0 * eps * eps).max(0.0).sqrt();
        if min_abs_eig < bound - 1e-9 {
            return Err(Error::InertiaMargin {
                value: min_abs_eig,
                threshold: bound,
            });
        }
    }
    let m_plus = eig.iter().filter(|&&x| x > 0.0).count();
    Ok(Inertia {
        m_plus,
        m_minus: k - m_plus,
        min_abs_eig,
    })
}

/// Dimension of the span of `V` along the range of `P`.
pub fn dim_along(v: MatRef<'_, c64>, p: &SubspaceProjector) -> Result<usize> {
    let eps = commutator_norm_with_span(p, v)?;
    if eps >= 0.5 {
        return Err(Error::InertiaMargin {
            value: eps,
            threshold: 0.5,
        });
    }
    Ok(inertia_along(v, p, Some(eps))?.m_plus)
}

#[derive(Clone, Debug, Serialize)]
pub struct TamenessWitness {
    #[serde(serialize_with = "ser_f17")]
    pub t: f64,
    #[serde(serialize_with = "ser_f17")]
    pub lambda_lo: f64,
    #[serde(serialize_with = "ser_f17")]
    pub lambda_hi: f64,
    #[serde(serialize_with = "ser_f17")]
    pub epsilon: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TamenessReport {
    pub pass: bool,
    #[serde(serialize_with = "ser_f17")]
    pub delta: f64,
    #[serde(serialize_with = "ser_f17")]
    pub worst_epsilon: f64,
    pub samples_checked: usize,
    /// The eigenvalue run attaining `worst_epsilon`.
    pub witness: Option<TamenessWitness>,
}

/// Groups indices of sorted values whose neighbours differ by at most `tol`.
fn clusters(values: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            if i > start {
                out.push((start, i));
            }
            start = i;
        }
    }
    out
}

fn tameness_of_sample(
    s: &Sample,
    p: &SubspaceProjector,
    worst: &mut f64,
    witness: &mut Option<TamenessWitness>,
) -> Result<()> {
    let spread = match (s.values.first(), s.values.last()) {
        (Some(a), Some(b)) => (b - a).max(1.0),
        _ => 1.0,
    };
    let groups = clusters(&s.window_values, 1e-10 * spread);
    for a in 0..groups.len() {
        for b in a..groups.len() {
            let cols: Vec<usize> = (groups[a].0..groups[b].1).collect();
            let v = linalg::select_columns(s.window_vectors.as_ref(), &cols);
            let eps = commutator_norm_with_span(p, v.as_ref())?;
            if witness.is_none() || eps > *worst {
                *worst = eps;
                *witness = Some(TamenessWitness {
                    t: s.t,
                    lambda_lo: s.window_values[groups[a].0],
                    lambda_hi: s.window_values[groups[b].1 - 1],
                    epsilon: eps,
                });
            }
        }
    }
    Ok(())
}

/// Checks `‖[P, E(B_t, J)]‖ < 1/4` on every cached sample, for every interval
/// `J ⊂ (−δ, δ)` (in finite dimension: every contiguous run of eigenvalue
/// clusters inside the window).
pub fn certify_sampled(sampled: &SampledFamily<'_>, p: &SubspaceProjector) -> Result<TamenessReport> {
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut count = 0;
    for s in sampled.samples() {
        tameness_of_sample(s, p, &mut worst, &mut witness)?;
        count += 1;
    }
    Ok(TamenessReport {
        pass: worst < TAME_BOUND,
        delta: sampled.delta(),
        worst_epsilon: worst,
        samples_checked: count,
        witness,
    })
}

/// Tameness on the uniform grid `t = i / intervals`, `i = 0..=intervals`.
pub fn certify_tameness(
    family: &dyn HermitianFamily,
    p: &SubspaceProjector,
    delta: f64,
    intervals: usize,
) -> Result<TamenessReport> {
    let mut sampled = SampledFamily::new(family, delta);
    let n = intervals.max(1);
    for i in 0..=n {
        sampled.sample(i as f64 / n as f64)?;
    }
    certify_sampled(&sampled, p)
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentRecord {
    #[serde(serialize_with = "ser_f17")]
    pub t_lo: f64,
    /// Parameter value at which `V` is taken.
    #[serde(serialize_with = "ser_f17")]
    pub t_hi: f64,
    /// Fence on `[t_lo, t_hi]`.
    #[serde(serialize_with = "ser_f17")]
    pub gamma_lo: f64,
    /// Fence on the following piece.
    #[serde(serialize_with = "ser_f17")]
    pub gamma_hi: f64,
    #[serde(rename = "dim_V")]
    pub dim_v: usize,
    pub m_plus: usize,
    #[serde(serialize_with = "ser_f17")]
    pub epsilon: f64,
    #[serde(serialize_with = "ser_f17")]
    pub inertia_margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TamenessSummary {
    #[serde(serialize_with = "ser_f17")]
    pub delta: f64,
    #[serde(serialize_with = "ser_f17")]
    pub worst_epsilon: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowCertificate {
    pub flow: i64,
    pub segments: Vec<SegmentRecord>,
    pub tameness: TamenessSummary,
}

/// A planned family whose partition and eigendata serve several projectors.
pub struct FlowEngine<'a> {
    sampled: SampledFamily<'a>,
    plan: PartitionPlan,
}

impl<'a> FlowEngine<'a> {
    pub fn new(family: &'a dyn HermitianFamily, opts: &EngineOptions) -> Result<Self> {
        let mut sampled = SampledFamily::new(family, opts.delta);
        let plan = plan_partition(&mut sampled, opts)?;
        Ok(FlowEngine { sampled, plan })
    }

    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }

    pub fn sampled(&self) -> &SampledFamily<'a> {
        &self.sampled
    }

    pub fn tameness(&self, p: &SubspaceProjector) -> Result<TamenessReport> {
        certify_sampled(&self.sampled, p)
    }

    /// Partial flow along the range of `p`; fails unless the family is tame.
    pub fn flow_along(&self, p: &SubspaceProjector) -> Result<FlowCertificate> {
        let report = self.tameness(p)?;
        if !report.pass {
            return Err(Error::NotTame {
                worst_epsilon: report.worst_epsilon,
            });
        }
        self.flow_with(p, report.worst_epsilon)
    }

    /// Ordinary spectral flow.
    pub fn flow(&self) -> Result<FlowCertificate> {
        self.flow_with(&SubspaceProjector::identity(self.sampled.dim()), 0.0)
    }

    /// Flow sum without the global tameness gate; the per-segment inertia
    /// checks still apply.
    pub fn flow_with(&self, p: &SubspaceProjector, worst_epsilon: f64) -> Result<FlowCertificate> {
        let plan = &self.plan;
        let mut flow = 0i64;
        let mut segments = Vec::with_capacity(plan.interior());
        for j in 1..=plan.interior() {
            let t = plan.breakpoints[j];
            let (g0, g1) = (plan.fences[j - 1], plan.fences[j]);
            let s = self.sampled.get(t).expect("breakpoints are sampled");
            let v = sample_span(s, g0, g1, plan.margin)?;
            let eps = commutator_norm_with_span(p, v.as_ref())?;
            let inertia = inertia_along(v.as_ref(), p, Some(eps))?;
            let sign = if g0 > g1 {
                1
            } else if g0 < g1 {
                -1
            } else {
                0
            };
            flow += sign * inertia.m_plus as i64;
            segments.push(SegmentRecord {
                t_lo: plan.breakpoints[j - 1],
                t_hi: t,
                gamma_lo: g0,
                gamma_hi: g1,
                dim_v: v.ncols(),
                m_plus: inertia.m_plus,
                epsilon: eps,
                inertia_margin: if v.ncols() == 0 {
                    1.0
                } else {
                    inertia.min_abs_eig
                },
            });
        }
        Ok(FlowCertificate {
            flow,
            segments,
            tameness: TamenessSummary {
                delta: self.sampled.delta(),
                worst_epsilon,
            },
        })
    }
}

/// Partial spectral flow of `family` along the range of `p`.
pub fn partial_spectral_flow(
    family: &dyn HermitianFamily,
    p: &SubspaceProjector,
    opts: &EngineOptions,
) -> Result<FlowCertificate> {
    FlowEngine::new(family, opts)?.flow_along(p)
}

/// Ordinary spectral flow through zero.
pub fn spectral_flow(family: &dyn HermitianFamily, opts: &EngineOptions) -> Result<i64> {
    Ok(FlowEngine::new(family, opts)?.flow()?.flow)
}
