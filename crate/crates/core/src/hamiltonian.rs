//! Tight-binding Hamiltonians on the tube.
//!
//! `(Hψ)(x) = γ0 Σ_δ e^{−i∫⟨δ,A⟩} ψ(x+δ)`, where a fictitious neighbour beyond a
//! zigzag edge carries the value of `x` itself. With a constant potential the
//! plane waves pair up: `H φ_mn = μ(m,n,t) φ_{2m̄−m,n}`.

use std::f64::consts::PI;

use faer::{c64, Mat, MatRef};

use crate::basis::{self, IndexSetG0, ModeIndex};
use crate::flux::{FluxExperiment, FluxSchedule};
use crate::lattice::{Lattice, LinkTarget, TubeGeometry};
use crate::linalg;
use crate::specflow::HermitianFamily;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Normalization {
    /// `γ0 = 2/(3a)`, matching the Dirac operator's units.
    DiracUnit,
    Physical { gamma0: f64 },
}

impl Normalization {
    pub fn gamma0(&self, geom: &TubeGeometry) -> f64 {
        match *self {
            Normalization::DiracUnit => 2.0 / (3.0 * geom.a),
            Normalization::Physical { gamma0 } => gamma0,
        }
    }
}

/// `δ = min{π/(2L), π/l}`.
pub fn default_delta(geom: &TubeGeometry) -> f64 {
    (PI / (2.0 * geom.length())).min(PI / geom.circumference())
}

/// Row-wise sparse Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    rows: Vec<Vec<(usize, c64)>>,
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, c64)] {
        &self.rows[i]
    }

    pub fn matvec(&self, x: &[c64]) -> Vec<c64> {
        self.rows
            .iter()
            .map(|r| r.iter().fold(c64::new(0.0, 0.0), |acc, &(j, h)| acc + h * x[j]))
            .collect()
    }

    /// `H X` for a block of columns.
    pub fn apply(&self, x: MatRef<'_, c64>) -> Mat<c64> {
        Mat::from_fn(self.dim(), x.ncols(), |i, c| {
            self.rows[i]
                .iter()
                .fold(c64::new(0.0, 0.0), |acc, &(j, h)| acc + h * x[(j, c)])
        })
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.dim();
        let mut m = Mat::<c64>::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, h) in r {
                m[(i, j)] += h;
            }
        }
        m
    }
}

/// Peierls Hamiltonian at parameter `t`.
pub fn assemble(lattice: &Lattice, flux: &FluxExperiment, t: f64, gamma0: f64) -> SparseHamiltonian {
    let geom = lattice.geometry();
    let rows = lattice
        .sites()
        .iter()
        .map(|s| {
            lattice
                .neighbors(s.index)
                .iter()
                .map(|link| {
                    let phase = flux.bond_phase(s.position, link.bond_vector, t, geom);
                    let col = match link.target {
                        LinkTarget::Site(j) => j,
                        LinkTarget::SelfSite => s.index,
                    };
                    (col, phase * gamma0)
                })
                .collect()
        })
        .collect();
    SparseHamiltonian { rows }
}

#[derive(Clone, Debug)]
pub struct TightBindingOperator {
    pub matrix: Mat<c64>,
    pub geometry: TubeGeometry,
    pub t: f64,
    pub gamma0: f64,
}

/// Hamiltonian with the constant potential `A₀(t)` only.
pub fn build_h0(
    lattice: &Lattice,
    schedule: &FluxSchedule,
    t: f64,
    norm: Normalization,
) -> TightBindingOperator {
    let flux = FluxExperiment::new(*schedule, crate::flux::GaugeFunction::Zero);
    build_ht(lattice, &flux, t, norm)
}

/// Hamiltonian with the full potential `A₀(t) + ∇F`.
pub fn build_ht(
    lattice: &Lattice,
    flux: &FluxExperiment,
    t: f64,
    norm: Normalization,
) -> TightBindingOperator {
    let geom = *lattice.geometry();
    let gamma0 = norm.gamma0(&geom);
    TightBindingOperator {
        matrix: assemble(lattice, flux, t, gamma0).to_dense(),
        geometry: geom,
        t,
        gamma0,
    }
}

/// `μ` at flux `q`: `γ0·e^{−iα/3}(e^{iα} − 2cos β)`, `α = π(m−m̄)/(2M)`,
/// `β = π(n−q)/N`.
pub fn mu_at_flux(m: i64, n: i64, q: f64, geom: &TubeGeometry, gamma0: f64) -> c64 {
    let alpha = PI * (m - geom.m_bar()) as f64 / (2.0 * geom.axial_cells as f64);
    let beta = PI * (n as f64 - q) / geom.around_cells as f64;
    c64::cis(-alpha / 3.0) * (c64::cis(alpha) - c64::new(2.0 * beta.cos(), 0.0)) * gamma0
}

/// `μ(m, n, t)` in Dirac units.
pub fn mu(m: i64, n: i64, t: f64, geom: &TubeGeometry, schedule: &FluxSchedule) -> c64 {
    mu_at_flux(m, n, schedule.q(t), geom, Normalization::DiracUnit.gamma0(geom))
}

/// Invariant subspaces of the constant-potential Hamiltonian.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    /// `(φ_mn, φ_{2m̄−m,n})` with `m > m̄`.
    pub pairs: Vec<(ModeIndex, ModeIndex)>,
    /// `φ_{m̄,n}`.
    pub singles: Vec<ModeIndex>,
}

pub fn block_decomposition(index: &IndexSetG0, geom: &TubeGeometry) -> BlockDecomposition {
    let mb = geom.m_bar();
    let mut pairs = Vec::new();
    let mut singles = Vec::new();
    for &k in index.modes() {
        if k.m == mb {
            singles.push(k);
        } else if k.m > mb {
            pairs.push((k, ModeIndex::new(2 * mb - k.m, k.n)));
        }
    }
    BlockDecomposition { pairs, singles }
}

/// Spectrum from the block structure, ascending.
pub fn closed_form_spectrum(geom: &TubeGeometry, q: f64, gamma0: f64) -> Vec<f64> {
    let blocks = block_decomposition(&basis::enumerate_g0(geom), geom);
    let mut out = Vec::with_capacity(geom.site_count());
    for (k, _) in &blocks.pairs {
        let r = mu_at_flux(k.m, k.n, q, geom, gamma0).norm();
        out.push(r);
        out.push(-r);
    }
    for k in &blocks.singles {
        out.push(mu_at_flux(k.m, k.n, q, geom, gamma0).re);
    }
    out.sort_by(f64::total_cmp);
    out
}

/// `H_t` as a parameter family.
pub struct TightBindingFamily<'a> {
    pub lattice: &'a Lattice,
    pub flux: FluxExperiment,
    pub gamma0: f64,
}

impl<'a> TightBindingFamily<'a> {
    pub fn new(lattice: &'a Lattice, flux: FluxExperiment, norm: Normalization) -> Self {
        let gamma0 = norm.gamma0(lattice.geometry());
        TightBindingFamily {
            lattice,
            flux,
            gamma0,
        }
    }
}

impl HermitianFamily for TightBindingFamily<'_> {
    fn dim(&self) -> usize {
        self.lattice.len()
    }
    fn eval(&self, t: f64) -> Mat<c64> {
        assemble(self.lattice, &self.flux, t, self.gamma0).to_dense()
    }
    fn name(&self) -> String {
        let g = self.lattice.geometry();
        format!("tight-binding M={} N={}", g.axial_cells, g.around_cells)
    }
}

#[derive(Clone, Debug)]
pub struct WindowReport {
    pub delta: f64,
    pub q_bar: f64,
    pub eigenvalues_checked: usize,
    /// Smallest captured weight in the allowed `W` blocks.
    pub min_weight: f64,
    /// `(t, eigenvalue, weight)` attaining `min_weight`.
    pub worst: Option<(f64, f64, f64)>,
    /// Smallest `|μ|` over all two-dimensional blocks and sampled `t`.
    pub v_block_min: f64,
    /// `γ0·sin(3πa/(2L))`.
    pub v_block_bound: f64,
    /// Sampled `|μ(m̄,n,t)|` stays `≥ π/l` away from the valley centres.
    pub w_bound_holds: bool,
}

/// Checks that every eigenvalue of `H_0t` inside `(−δ, δ)` lives in the blocks
/// `W_{j±n̄}` with `|j| ≤ q̄`.
pub fn low_energy_window_check(
    lattice: &Lattice,
    schedule: &FluxSchedule,
    delta: f64,
    t_samples: usize,
) -> Result<WindowReport> {
    let geom = *lattice.geometry();
    let gamma0 = Normalization::DiracUnit.gamma0(&geom);
    let v_block_bound = gamma0 * (3.0 * PI * geom.a / (2.0 * geom.length())).sin();
    if v_block_bound <= delta {
        return Err(Error::Infeasible(format!(
            "lattice too coarse: two-dimensional blocks may reach the window (γ0·sin(3πa/2L) = {v_block_bound} ≤ δ = {delta})"
        )));
    }
    let q_bar = schedule.q_bar();
    let jmax = q_bar.floor() as i64;
    let (mb, nb) = (geom.m_bar(), geom.n_bar());
    let mut allowed = Vec::new();
    for j in -jmax..=jmax {
        for c in [nb, -nb] {
            allowed.push(basis::canonicalize(mb, j + c, &geom)?.0);
        }
    }
    let w = basis::phi_columns(&allowed, lattice);
    let index = basis::enumerate_g0(&geom);
    let blocks = block_decomposition(&index, &geom);
    let l = geom.circumference();

    let n = t_samples.max(1);
    let mut report = WindowReport {
        delta,
        q_bar,
        eigenvalues_checked: 0,
        min_weight: 1.0,
        worst: None,
        v_block_min: f64::INFINITY,
        v_block_bound,
        w_bound_holds: true,
    };
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let q = schedule.q(t);
        for (k, _) in &blocks.pairs {
            report.v_block_min = report
                .v_block_min
                .min(mu_at_flux(k.m, k.n, q, &geom, gamma0).norm());
        }
        for k in &blocks.singles {
            let near = [nb, -nb]
                .iter()
                .any(|c| (k.n as f64 - q - *c as f64).abs() < 1.0);
            if !near && mu_at_flux(k.m, k.n, q, &geom, gamma0).norm() < PI / l - 1e-12 {
                report.w_bound_holds = false;
            }
        }
        let h = build_h0(lattice, schedule, t, Normalization::DiracUnit);
        let e = linalg::eigh(h.matrix.as_ref())?;
        for (c, &lam) in e.values.iter().enumerate() {
            if lam.abs() >= delta {
                continue;
            }
            let col = e.vectors.as_ref().subcols(c, 1);
            let weight = (w.adjoint() * col).norm_l2().powi(2);
            report.eigenvalues_checked += 1;
            if weight < report.min_weight || report.worst.is_none() {
                report.min_weight = report.min_weight.min(weight);
                report.worst = Some((t, lam, weight));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::GaugeFunction;
    use crate::lattice::{build_lattice, Bond};

    fn lattice(m: usize, n: usize) -> Lattice {
        build_lattice(TubeGeometry::with_length(m, n, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn plain_adjacency_at_zero_flux() {
        let lat = lattice(3, 9);
        let g = *lat.geometry();
        let h = build_h0(&lat, &FluxSchedule::linear(1.0), 0.0, Normalization::DiracUnit);
        let gamma0 = 2.0 / (3.0 * g.a);
        let mut expect = Mat::<c64>::zeros(lat.len(), lat.len());
        for s in lat.sites() {
            for link in lat.neighbors(s.index) {
                let j = match link.target {
                    LinkTarget::Site(j) => j,
                    LinkTarget::SelfSite => s.index,
                };
                expect[(s.index, j)] += c64::new(gamma0, 0.0);
            }
        }
        assert!(linalg::max_abs((&h.matrix - &expect).as_ref()) == 0.0);
        for s in lat.sites() {
            let row = h.matrix.as_ref().row(s.index);
            let off = (0..lat.len()).filter(|&j| j != s.index && row[j].norm() > 0.0).count();
            let boundary = lat.neighbors(s.index).iter().any(|l| l.is_boundary());
            assert_eq!(off, if boundary { 2 } else { 3 });
            assert_eq!(row[s.index].norm() > 0.0, boundary);
        }
    }

    #[test]
    fn hermitian_with_gauge() {
        let lat = lattice(3, 9);
        let flux = FluxExperiment::new(FluxSchedule::linear(2.0), GaugeFunction::Sine { epsilon: 0.3 });
        let h = build_ht(&lat, &flux, 0.37, Normalization::DiracUnit);
        let scale = linalg::max_abs(h.matrix.as_ref());
        assert!(linalg::hermitian_defect(h.matrix.as_ref()) < 1e-12 * scale);
    }

    #[test]
    fn dirac_zero_mode_and_real_w_block() {
        let g = TubeGeometry::with_length(4, 12, 1.0).unwrap();
        let s = FluxSchedule::linear(0.0);
        assert!(mu(g.m_bar(), g.n_bar(), 0.3, &g, &s).norm() < 1e-14);
        for n in -12..12 {
            let v = mu(g.m_bar(), n, 0.0, &g, &FluxSchedule::linear(1.0));
            assert!(v.im.abs() < 1e-14);
            let beta = PI * n as f64 / 12.0;
            assert!((v.re - 2.0 / (3.0 * g.a) * (1.0 - 2.0 * beta.cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_action_matches_closed_form() {
        let lat = lattice(3, 9);
        let g = *lat.geometry();
        let s = FluxSchedule::linear(1.3);
        for t in [0.0, 0.41, 1.0] {
            let h = assemble(&lat, &FluxExperiment::new(s, GaugeFunction::Zero), t, 2.0 / (3.0 * g.a));
            for k in basis::enumerate_g0(&g).modes() {
                let lhs = h.matvec(&basis::phi(*k, &lat));
                let partner = basis::phi(ModeIndex::new(2 * g.m_bar() - k.m, k.n), &lat);
                let m = mu(k.m, k.n, t, &g, &s);
                let err = lhs
                    .iter()
                    .zip(&partner)
                    .map(|(a, b)| (a - m * b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(err < 1e-10, "{k:?} t={t}: {err}");
                let conj = mu(2 * g.m_bar() - k.m, k.n, t, &g, &s);
                assert!((conj - m.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_spectrum_matches_blocks() {
        let lat = lattice(3, 9);
        let g = *lat.geometry();
        let s = FluxSchedule::linear(1.0);
        for t in [0.0, 0.3, 0.5] {
            let h = build_h0(&lat, &s, t, Normalization::DiracUnit);
            let num = linalg::eigvalsh(h.matrix.as_ref()).unwrap();
            let exact = closed_form_spectrum(&g, s.q(t), h.gamma0);
            let diff = num.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-9, "t={t} diff={diff}");
        }
    }

    #[test]
    fn w_block_pairing_is_direct_expansion() {
        // μ(m̄, j ± n̄) = γ0(1 − 2cos(±π/3 + π(j − q)/N)).
        let g = TubeGeometry::with_length(6, 18, 1.0).unwrap();
        let gamma0 = 2.0 / (3.0 * g.a);
        let nf = g.around_cells as f64;
        for j in -2..=2 {
            for q in [0.0, 0.4, 1.7] {
                for sign in [1i64, -1] {
                    let v = mu_at_flux(g.m_bar(), j + sign * g.n_bar(), q, &g, gamma0).re;
                    let beta = sign as f64 * PI / 3.0 + PI * (j as f64 - q) / nf;
                    assert!((v - gamma0 * (1.0 - 2.0 * beta.cos())).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn boundary_link_is_d3() {
        let lat = lattice(2, 6);
        for s in lat.sites() {
            for l in lat.neighbors(s.index) {
                if l.is_boundary() {
                    assert_eq!(l.bond, Bond::D3);
                }
            }
        }
    }

    #[test]
    fn window_check_small() {
        let lat = lattice(6, 9);
        let s = FluxSchedule::linear(1.0);
        let r = low_energy_window_check(&lat, &s, default_delta(lat.geometry()), 8).unwrap();
        assert!(r.eigenvalues_checked > 0);
        assert!(r.min_weight > 0.999, "{r:?}");
        assert!(r.v_block_min >= r.v_block_bound - 1e-12);
        assert!(r.v_block_bound > PI / (2.0 * lat.geometry().length()));
        assert!(r.w_bound_holds);
    }
}
