//! Truncated Dirac operators for the two valleys.
//!
//! The mode space is spanned by `u_mn = (e^{iπm x1/L + 2πin x2/l},
//! −i e^{−iπm x1/L + 2πin x2/l})` with `m² + n² ≤ d²`, and the reduced operator
//! acts by `D u_mn = μ₀(m,n,t) u_{−m,n}`:
//!
//! * K:  `μ₀ = 2π(n−q)/l + iπm/L`
//! * K′: `μ₀ = −2π(n−q)/l + iπm/L`
//!
//! The intertwiners send `u_mn` to the tight-binding plane waves
//! `φ_{m̄+m, n̄+n}` (K) and `φ_{m̄+m, n−n̄}` (K′).

use std::collections::HashMap;
use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::Serialize;

use crate::basis::{self, disk_offsets, ModeIndex};
use crate::flux::{FluxExperiment, FluxSchedule, GaugeFunction};
use crate::hamiltonian::{self, default_delta, Normalization};
use crate::lattice::{Lattice, TubeGeometry};
use crate::linalg;
use crate::specflow::{EngineOptions, FlowCertificate, FlowEngine, HermitianFamily};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Valley {
    K,
    #[serde(rename = "Kprime")]
    KPrime,
}

impl Valley {
    pub fn label(self) -> &'static str {
        match self {
            Valley::K => "K",
            Valley::KPrime => "Kprime",
        }
    }

    fn sign(self) -> f64 {
        match self {
            Valley::K => 1.0,
            Valley::KPrime => -1.0,
        }
    }
}

pub fn mu0_at_flux(valley: Valley, m: i64, n: i64, q: f64, geom: &TubeGeometry) -> c64 {
    c64::new(
        valley.sign() * 2.0 * PI * (n as f64 - q) / geom.circumference(),
        PI * m as f64 / geom.length(),
    )
}

pub fn mu0(
    valley: Valley,
    m: i64,
    n: i64,
    t: f64,
    geom: &TubeGeometry,
    schedule: &FluxSchedule,
) -> c64 {
    mu0_at_flux(valley, m, n, schedule.q(t), geom)
}

/// Labels `(m, n)` with `m² + n² ≤ d²`.
#[derive(Clone, Debug)]
pub struct DiracModeSpace {
    pub radius: i64,
    modes: Vec<(i64, i64)>,
    lookup: HashMap<(i64, i64), usize>,
}

impl DiracModeSpace {
    pub fn new(radius: i64) -> Self {
        let modes = disk_offsets(radius.max(0));
        let lookup = modes.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        DiracModeSpace {
            radius,
            modes,
            lookup,
        }
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[(i64, i64)] {
        &self.modes
    }

    pub fn position(&self, m: i64, n: i64) -> Option<usize> {
        self.lookup.get(&(m, n)).copied()
    }
}

#[derive(Clone, Debug)]
pub struct TruncatedDiracOperator {
    pub valley: Valley,
    pub t: f64,
    pub matrix: Mat<c64>,
}

fn dirac_matrix(valley: Valley, space: &DiracModeSpace, q: f64, geom: &TubeGeometry) -> Mat<c64> {
    let k = space.dim();
    let mut d = Mat::<c64>::zeros(k, k);
    for (col, &(m, n)) in space.modes().iter().enumerate() {
        let row = space.position(-m, n).expect("disk is symmetric in m");
        d[(row, col)] = mu0_at_flux(valley, m, n, q, geom);
    }
    d
}

pub fn build_dirac(
    valley: Valley,
    space: &DiracModeSpace,
    geom: &TubeGeometry,
    schedule: &FluxSchedule,
    t: f64,
) -> TruncatedDiracOperator {
    TruncatedDiracOperator {
        valley,
        t,
        matrix: dirac_matrix(valley, space, schedule.q(t), geom),
    }
}

/// Eigenvalues from the block structure, ascending.
pub fn closed_form_spectrum(
    valley: Valley,
    space: &DiracModeSpace,
    geom: &TubeGeometry,
    q: f64,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(space.dim());
    for &(m, n) in space.modes() {
        let v = mu0_at_flux(valley, m, n, q, geom);
        if m == 0 {
            out.push(v.re);
        } else if m > 0 {
            out.push(v.norm());
            out.push(-v.norm());
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// `t ↦ D_0t` on the truncated mode space.
pub struct DiracFamily {
    pub valley: Valley,
    pub space: DiracModeSpace,
    pub geometry: TubeGeometry,
    pub schedule: FluxSchedule,
}

impl HermitianFamily for DiracFamily {
    fn dim(&self) -> usize {
        self.space.dim()
    }
    fn eval(&self, t: f64) -> Mat<c64> {
        dirac_matrix(self.valley, &self.space, self.schedule.q(t), &self.geometry)
    }
    fn name(&self) -> String {
        format!("dirac {} d={}", self.valley.label(), self.space.radius)
    }
}

/// Signed count of `m = 0` branches passing through zero, from a scan of
/// `samples + 1` equally spaced parameter values. Zero itself counts as the
/// non-negative side.
pub fn crossing_count(
    valley: Valley,
    d: i64,
    geom: &TubeGeometry,
    schedule: &FluxSchedule,
    samples: usize,
) -> i64 {
    let tol = 1e-12 * PI / geom.circumference();
    let side = |n: i64, t: f64| mu0(valley, 0, n, t, geom, schedule).re >= -tol;
    let steps = samples.max(1);
    let mut flow = 0;
    for n in -d..=d {
        let mut prev = side(n, 0.0);
        for i in 1..=steps {
            let now = side(n, i as f64 / steps as f64);
            match (prev, now) {
                (false, true) => flow += 1,
                (true, false) => flow -= 1,
                _ => {}
            }
            prev = now;
        }
    }
    flow
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracFlow {
    pub valley: Valley,
    pub crossing: i64,
    pub engine: i64,
    pub agree: bool,
    pub certificate: FlowCertificate,
}

/// Spectral flow of the truncated family, by crossing count and by the engine.
pub fn dirac_spectral_flow(
    valley: Valley,
    d: i64,
    geom: &TubeGeometry,
    schedule: &FluxSchedule,
    opts: &EngineOptions,
) -> Result<DiracFlow> {
    schedule.integer_flux()?;
    if !(d as f64 > schedule.q_bar()) {
        return Err(Error::Infeasible(format!(
            "Dirac truncation d = {d} must exceed q̄ = {}",
            schedule.q_bar()
        )));
    }
    let family = DiracFamily {
        valley,
        space: DiracModeSpace::new(d),
        geometry: *geom,
        schedule: *schedule,
    };
    let crossing = crossing_count(valley, d, geom, schedule, 4096);
    let certificate = FlowEngine::new(&family, opts)?.flow()?;
    Ok(DiracFlow {
        valley,
        crossing,
        engine: certificate.flow,
        agree: crossing == certificate.flow,
        certificate,
    })
}

/// Engine options with the default window for a geometry.
pub fn default_options(geom: &TubeGeometry) -> EngineOptions {
    EngineOptions::new(default_delta(geom))
}

/// Isometry from the truncated mode space onto a valley subspace.
#[derive(Clone, Debug)]
pub struct Intertwiner {
    pub valley: Valley,
    /// Canonical label and phase of each image `W u_mn = phase · φ_label`.
    pub targets: Vec<(ModeIndex, c64)>,
    /// `W` as a `sites × modes` matrix.
    pub columns: Mat<c64>,
}

pub fn intertwiner(valley: Valley, space: &DiracModeSpace, lattice: &Lattice) -> Result<Intertwiner> {
    let geom = lattice.geometry();
    if space.radius >= geom.n_bar() {
        return Err(Error::Infeasible(format!(
            "intertwiner needs d = {} < n̄ = {}",
            space.radius,
            geom.n_bar()
        )));
    }
    let (mb, nb) = (geom.m_bar(), geom.n_bar());
    let offset = match valley {
        Valley::K => nb,
        Valley::KPrime => -nb,
    };
    let raw: Vec<ModeIndex> = space
        .modes()
        .iter()
        .map(|&(m, n)| ModeIndex::new(mb + m, offset + n))
        .collect();
    let targets = raw
        .iter()
        .map(|k| basis::canonicalize(k.m, k.n, geom))
        .collect::<Result<Vec<_>>>()?;
    Ok(Intertwiner {
        valley,
        targets,
        columns: basis::phi_columns(&raw, lattice),
    })
}

/// `R_t = W† H_0t W` at flux `q(t)`.
pub fn reduced_operator(
    w: &Intertwiner,
    lattice: &Lattice,
    schedule: &FluxSchedule,
    t: f64,
) -> Mat<c64> {
    let flux = FluxExperiment::new(*schedule, GaugeFunction::Zero);
    let gamma0 = Normalization::DiracUnit.gamma0(lattice.geometry());
    let h = hamiltonian::assemble(lattice, &flux, t, gamma0);
    let hw = h.apply(w.columns.as_ref());
    w.columns.adjoint() * hw
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub geometry: TubeGeometry,
    pub max_t_norm: f64,
    /// Norm relative to the previous row.
    pub ratio: Option<f64>,
}

/// `max_t ‖R_t − D_0t‖` for each geometry of a refinement sequence.
pub fn convergence_check(
    valley: Valley,
    d: i64,
    schedule: &FluxSchedule,
    geometries: &[TubeGeometry],
    t_samples: usize,
) -> Result<Vec<ConvergenceRow>> {
    let space = DiracModeSpace::new(d);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(geometries.len());
    for geom in geometries {
        let lattice = crate::lattice::build_lattice(*geom)?;
        let w = intertwiner(valley, &space, &lattice)?;
        let n = t_samples.max(1);
        let mut worst = 0.0f64;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let r = reduced_operator(&w, &lattice, schedule, t);
            let dm = build_dirac(valley, &space, geom, schedule, t).matrix;
            worst = worst.max(linalg::spectral_norm((r - dm).as_ref())?);
        }
        let ratio = rows.last().map(|p| worst / p.max_t_norm);
        rows.push(ConvergenceRow {
            geometry: *geom,
            max_t_norm: worst,
            ratio,
        });
    }
    Ok(rows)
}

/// Fails unless the norms strictly decrease.
pub fn check_monotone(rows: &[ConvergenceRow]) -> Result<()> {
    for w in rows.windows(2) {
        if !(w[1].max_t_norm < w[0].max_t_norm) {
            return Err(Error::Convergence(format!(
                "norm did not decrease from M={} ({:e}) to M={} ({:e})",
                w[0].geometry.axial_cells,
                w[0].max_t_norm,
                w[1].geometry.axial_cells,
                w[1].max_t_norm
            )));
        }
    }
    Ok(())
}

/// `levels` geometries starting at `base`, each doubling `M` and `N`.
pub fn doubling_sequence(base: TubeGeometry, levels: usize) -> Vec<TubeGeometry> {
    let mut out = vec![base];
    while out.len() < levels {
        let next = out.last().unwrap().refined();
        out.push(next);
    }
    out
}
