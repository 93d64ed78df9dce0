use super::family::{row_sum_norm, SampledFamily};
use super::intervals::IntervalSet;
use crate::{Error, Result};

/// Tuning knobs for planning and certification.
#[derive(Clone, Debug)]
pub struct EngineOptions {
    /// Half-width of the low-energy window `(−δ, δ)`.
    pub delta: f64,
    /// Number of equal coarse intervals of `[0, 1]`.
    pub coarse_intervals: usize,
    /// Required fence clearance; `None` means `1e-6 ×` spectral diameter.
    pub margin_target: Option<f64>,
    /// Maximal bisection depth below the coarse grid.
    pub max_depth: u32,
    /// Endpoint eigenvalues with `|λ| ≤ z` count as zero; `None` means
    /// `1e-9 × max(diameter, δ)`.
    pub zero_tolerance: Option<f64>,
}

impl EngineOptions {
    pub fn new(delta: f64) -> Self {
        EngineOptions {
            delta,
            coarse_intervals: 64,
            margin_target: None,
            max_depth: 20,
            zero_tolerance: None,
        }
    }

    pub fn with_coarse(mut self, n: usize) -> Self {
        self.coarse_intervals = n;
        self
    }
}

/// Breakpoints `0 = t_0 < … < t_{n+1} = 1` with one fence per piece.
#[derive(Clone, Debug)]
pub struct PartitionPlan {
    pub breakpoints: Vec<f64>,
    /// `γ_1, …, γ_{n+1}`; `fences[j]` is kept off the spectrum on
    /// `[breakpoints[j], breakpoints[j+1]]`.
    pub fences: Vec<f64>,
    pub margin: f64,
    pub zero_tolerance: f64,
    /// Largest `‖B_s1 − B_s0‖ / (s1 − s0)` over the refined grid.
    pub lipschitz: f64,
    /// Number of elementary segments after refinement.
    pub elementary_segments: usize,
}

impl PartitionPlan {
    /// Number of interior breakpoints `n`.
    pub fn interior(&self) -> usize {
        self.breakpoints.len() - 2
    }

    /// Re-checks the fence clearance on every cached sample.
    pub fn validate(&self, sampled: &SampledFamily<'_>) -> Result<()> {
        let delta = sampled.delta();
        let first = self.fences[0];
        let last = *self.fences.last().unwrap();
        if first != last || first > 0.0 {
            return Err(Error::Eigen(format!(
                "end fences must agree and be ≤ 0, got {first} and {last}"
            )));
        }
        for (j, &gamma) in self.fences.iter().enumerate() {
            if !(gamma > -delta && gamma < delta) {
                return Err(Error::Eigen(format!("fence {gamma} outside the window")));
            }
            let (lo, hi) = (self.breakpoints[j], self.breakpoints[j + 1]);
            for s in sampled.samples_in(lo, hi) {
                let d = s.distance_to_spectrum(gamma);
                if d < self.margin {
                    let nearest = s
                        .values
                        .iter()
                        .copied()
                        .min_by(|a, b| (a - gamma).abs().total_cmp(&(b - gamma).abs()))
                        .unwrap_or(f64::NAN);
                    return Err(Error::FenceTooClose {
                        fence: gamma,
                        eigenvalue: nearest,
                        margin: self.margin,
                    });
                }
            }
        }
        if first < 0.0 {
            for t in [0.0, 1.0] {
                let s = sampled.get(t).expect("endpoints are sampled");
                if s
                    .values
                    .iter()
                    .any(|&l| l >= first && l < -self.zero_tolerance)
                {
                    return Err(Error::Eigen(format!(
                        "eigenvalue of B_{t} in [{first}, 0)"
                    )));
                }
            }
        }
        Ok(())
    }
}

struct Segment {
    lo: f64,
    hi: f64,
    depth: u32,
    free: IntervalSet,
    step_norm: f64,
}

fn analyse(
    sampled: &mut SampledFamily<'_>,
    lo: f64,
    hi: f64,
    depth: u32,
    margin: f64,
) -> Result<Segment> {
    let delta = sampled.delta();
    let v0 = sampled.sample(lo)?.values.clone();
    let v1 = sampled.sample(hi)?.values.clone();
    let step = sampled.matrix(hi)? - sampled.matrix(lo)?;
    let step_norm = row_sum_norm(step.as_ref());
    // Weyl: between the endpoints each sorted eigenvalue can leave the hull
    // of its endpoint values by at most half the step, to first order.
    let excursion = 0.5 * step_norm;
    let mut free = IntervalSet::interval(-delta + margin, delta - margin);
    for (a, b) in v0.iter().zip(&v1) {
        let zlo = a.min(*b) - excursion - margin;
        let zhi = a.max(*b) + excursion + margin;
        if zhi < -delta || zlo > delta {
            continue;
        }
        free.remove(zlo, zhi);
    }
    Ok(Segment {
        lo,
        hi,
        depth,
        free,
        step_norm,
    })
}

fn split(
    sampled: &mut SampledFamily<'_>,
    seg: &Segment,
    max_depth: u32,
    margin: f64,
) -> Result<[Segment; 2]> {
    if seg.depth >= max_depth {
        return Err(Error::PlanDepthExceeded {
            t_lo: seg.lo,
            t_hi: seg.hi,
        });
    }
    let mid = 0.5 * (seg.lo + seg.hi);
    Ok([
        analyse(sampled, seg.lo, mid, seg.depth + 1, margin)?,
        analyse(sampled, mid, seg.hi, seg.depth + 1, margin)?,
    ])
}

/// Fence-admissible set at the two ends: `(λ⁻, 0]`, where `λ⁻` is the largest
/// endpoint eigenvalue below the zero cluster.
fn end_set(sampled: &mut SampledFamily<'_>, zero_tol: f64) -> Result<IntervalSet> {
    let delta = sampled.delta();
    let mut below = -delta;
    for t in [0.0, 1.0] {
        for &l in &sampled.sample(t)?.values {
            if l < -zero_tol {
                below = below.max(l);
            }
        }
    }
    Ok(IntervalSet::interval(below, 0.0))
}

/// Builds a partition whose fences stay clear of the sampled spectra.
pub fn plan_partition(
    sampled: &mut SampledFamily<'_>,
    opts: &EngineOptions,
) -> Result<PartitionPlan> {
    if !(opts.delta > 0.0) {
        return Err(Error::Config(format!("δ must be positive, got {}", opts.delta)));
    }
    let coarse = opts.coarse_intervals.max(1);
    let diameter = {
        let v = &sampled.sample(0.0)?.values;
        match (v.first(), v.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    };
    let scale = diameter.max(opts.delta);
    let margin = opts.margin_target.unwrap_or(1e-6 * scale);
    let zero_tol = opts.zero_tolerance.unwrap_or(1e-9 * scale);

    let mut segs = Vec::with_capacity(coarse);
    for i in 0..coarse {
        let lo = i as f64 / coarse as f64;
        let hi = if i + 1 == coarse {
            1.0
        } else {
            (i + 1) as f64 / coarse as f64
        };
        segs.push(analyse(sampled, lo, hi, 0, margin)?);
    }
    let iend = end_set(sampled, zero_tol)?;

    loop {
        if segs.iter().any(|s| s.free.is_empty()) {
            let mut next = Vec::with_capacity(segs.len() + 4);
            for s in segs {
                if s.free.is_empty() {
                    next.extend(split(sampled, &s, opts.max_depth, margin)?);
                } else {
                    next.push(s);
                }
            }
            segs = next;
            continue;
        }
        let last = segs.len() - 1;
        let ends = segs[0].free.intersect(&segs[last].free).intersect(&iend);
        if ends.is_empty() {
            let tail = segs.pop().unwrap();
            let mut next = Vec::with_capacity(segs.len() + 4);
            if segs.is_empty() {
                next.extend(split(sampled, &tail, opts.max_depth, margin)?);
            } else {
                let head = segs.remove(0);
                next.extend(split(sampled, &head, opts.max_depth, margin)?);
                next.append(&mut segs);
                next.extend(split(sampled, &tail, opts.max_depth, margin)?);
            }
            segs = next;
            continue;
        }
        break;
    }

    let groups = group_segments(&segs, &iend);
    let mut breakpoints = vec![0.0];
    let mut fences = Vec::with_capacity(groups.len());
    for (i, &(_, end, gamma)) in groups.iter().enumerate() {
        fences.push(gamma);
        breakpoints.push(if i + 1 == groups.len() {
            1.0
        } else {
            segs[end - 1].hi
        });
    }
    let lipschitz = segs
        .iter()
        .map(|s| s.step_norm / (s.hi - s.lo))
        .fold(0.0, f64::max);
    let plan = PartitionPlan {
        breakpoints,
        fences,
        margin,
        zero_tolerance: zero_tol,
        lipschitz,
        elementary_segments: segs.len(),
    };
    plan.validate(sampled)?;
    Ok(plan)
}

/// Greedy grouping into `(start, end, fence)` runs of elementary segments.
fn group_segments(segs: &[Segment], iend: &IntervalSet) -> Vec<(usize, usize, f64)> {
    let n = segs.len();
    let mut prefix = segs[0].free.intersect(iend);
    let mut p_end = 1;
    while p_end < n {
        let next = prefix.intersect(&segs[p_end].free);
        if next.is_empty() {
            break;
        }
        prefix = next;
        p_end += 1;
    }
    if p_end == n {
        let gamma = prefix.choose(true).expect("non-empty by construction");
        return vec![(0, n, gamma)];
    }

    let mut suffix = segs[n - 1].free.intersect(iend);
    let mut s_start = n - 1;
    while s_start > p_end {
        let next = suffix.intersect(&segs[s_start - 1].free);
        if next.is_empty() {
            break;
        }
        suffix = next;
        s_start -= 1;
    }
    let mut end_common = prefix.intersect(&suffix);
    if end_common.is_empty() {
        p_end = 1;
        s_start = n - 1;
        end_common = segs[0]
            .free
            .intersect(&segs[n - 1].free)
            .intersect(iend);
    }
    let gamma_end = end_common.choose(true).expect("checked by the planner");

    let mut groups = vec![(0, p_end, gamma_end)];
    let mut i = p_end;
    while i < s_start {
        let mut set = segs[i].free.clone();
        let mut j = i + 1;
        while j < s_start {
            let next = set.intersect(&segs[j].free);
            if next.is_empty() {
                break;
            }
            set = next;
            j += 1;
        }
        groups.push((i, j, set.choose(false).expect("segment sets are non-empty")));
        i = j;
    }
    groups.push((s_start, n, gamma_end));
    groups
}
