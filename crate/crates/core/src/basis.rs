//! Plane-wave basis `φ_mn`, its index set `G0`, and the valley subspaces.
//!
//! On sublattice B, `φ_mn(x) = exp(iπm·x1/L + 2πin·x2/l)`; on sublattice A the
//! axial sign flips. Columns returned here are normalised for the plain
//! Euclidean inner product, i.e. divided by `√(4MN)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use faer::{c64, Mat, MatRef};

use crate::lattice::{Lattice, Sublattice, TubeGeometry};
use crate::specflow::SubspaceProjector;
use crate::{Error, Result};

/// Search bound for lattice shifts in canonicalisation and `ρ`.
const SHIFT_BOUND: i64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub m: i64,
    pub n: i64,
}

impl ModeIndex {
    pub fn new(m: i64, n: i64) -> Self {
        ModeIndex { m, n }
    }
}

/// Conditions (a)-(c) defining the fundamental domain `G0`.
pub fn in_g0(m: i64, n: i64, geom: &TubeGeometry) -> bool {
    let (big_m, big_n) = (geom.axial_cells as i64, geom.around_cells as i64);
    if n < -big_n || n > big_n - 1 {
        return false;
    }
    // `−N/2 < n ≤ N/2`, written without halving N.
    let central = -big_n < 2 * n && 2 * n <= big_n;
    if central {
        (big_m..=3 * big_m).contains(&m)
    } else {
        (big_m + 1..=3 * big_m - 1).contains(&m)
    }
}

/// The two generators `e1 = (2M, N)`, `e2 = (2M, −N)` of the period lattice.
pub fn generators(geom: &TubeGeometry) -> [(i64, i64); 2] {
    let (big_m, big_n) = (geom.axial_cells as i64, geom.around_cells as i64);
    [(2 * big_m, big_n), (2 * big_m, -big_n)]
}

#[derive(Clone, Debug)]
pub struct IndexSetG0 {
    modes: Vec<ModeIndex>,
    lookup: HashMap<ModeIndex, usize>,
}

/// All canonical modes, ordered by `n` then `m`.
pub fn enumerate_g0(geom: &TubeGeometry) -> IndexSetG0 {
    let (big_m, big_n) = (geom.axial_cells as i64, geom.around_cells as i64);
    let mut modes = Vec::with_capacity(geom.site_count());
    for n in -big_n..big_n {
        for m in big_m..=3 * big_m {
            if in_g0(m, n, geom) {
                modes.push(ModeIndex { m, n });
            }
        }
    }
    let lookup = modes.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    IndexSetG0 { modes, lookup }
}

impl IndexSetG0 {
    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn position(&self, mode: ModeIndex) -> Option<usize> {
        self.lookup.get(&mode).copied()
    }
}

/// `(m, n) = (m̃, ñ) + j·e1 + k·e2` with `(m̃, ñ) ∈ G0`; returns `(m̃, ñ)` and the
/// phase `e^{−2π(j+k)i/3}` relating `φ_mn = phase · φ_{m̃ñ}` on the lattice.
pub fn canonicalize(m: i64, n: i64, geom: &TubeGeometry) -> Result<(ModeIndex, c64)> {
    let [e1, e2] = generators(geom);
    // Real solution of (m, n) = j·e1 + k·e2, then a small search around it.
    let (x, y) = (m as f64 / e1.0 as f64, n as f64 / e1.1 as f64);
    let (j0, k0) = (((x + y) / 2.0).round() as i64, ((x - y) / 2.0).round() as i64);
    for j in j0 - SHIFT_BOUND..=j0 + SHIFT_BOUND {
        for k in k0 - SHIFT_BOUND..=k0 + SHIFT_BOUND {
            let mm = m - j * e1.0 - k * e2.0;
            let nn = n - j * e1.1 - k * e2.1;
            if in_g0(mm, nn, geom) {
                let angle = -2.0 * PI * ((j + k).rem_euclid(3)) as f64 / 3.0;
                return Ok((ModeIndex { m: mm, n: nn }, c64::cis(angle)));
            }
        }
    }
    Err(Error::Canonicalize { m, n })
}

/// Distance from `(m, n)` to the nearest point of the period lattice.
pub fn rho(m: i64, n: i64, geom: &TubeGeometry) -> f64 {
    let [e1, e2] = generators(geom);
    // Reduce first so that the bounded search is always wide enough.
    let base = match canonicalize(m, n, geom) {
        Ok((c, _)) => (c.m, c.n),
        Err(_) => (m, n),
    };
    let mut best = f64::INFINITY;
    for j in -SHIFT_BOUND..=SHIFT_BOUND {
        for k in -SHIFT_BOUND..=SHIFT_BOUND {
            let x = (base.0 + j * e1.0 + k * e2.0) as f64;
            let y = (base.1 + j * e1.1 + k * e2.1) as f64;
            best = best.min(x.hypot(y));
        }
    }
    best
}

/// Unnormalised value of `φ_mn` at grid point `(u, v)`; the exponent is
/// reduced exactly on the integer grid before evaluating the exponential.
pub fn phi_value(m: i64, n: i64, sub: Sublattice, u: i64, v: i64, geom: &TubeGeometry) -> c64 {
    let (big_m, big_n) = (geom.axial_cells as i64, geom.around_cells as i64);
    let sign = match sub {
        Sublattice::B => 1,
        Sublattice::A => -1,
    };
    let period = 12 * big_m * big_n;
    let num = (sign * m * u * big_n + 6 * big_m * n * v).rem_euclid(period);
    c64::cis(PI * num as f64 / (6 * big_m * big_n) as f64)
}

/// Unit-norm column of `φ_mn` over the lattice sites (any `(m, n)`).
pub fn phi(mode: ModeIndex, lattice: &Lattice) -> Vec<c64> {
    let geom = lattice.geometry();
    let scale = 1.0 / (lattice.len() as f64).sqrt();
    lattice
        .sites()
        .iter()
        .map(|s| phi_value(mode.m, mode.n, s.sublattice, s.u, s.v, geom) * scale)
        .collect()
}

/// Columns `φ_mn` for the given modes.
pub fn phi_columns(modes: &[ModeIndex], lattice: &Lattice) -> Mat<c64> {
    let geom = lattice.geometry();
    let scale = 1.0 / (lattice.len() as f64).sqrt();
    let sites = lattice.sites();
    Mat::from_fn(sites.len(), modes.len(), |i, j| {
        let s = &sites[i];
        phi_value(modes[j].m, modes[j].n, s.sublattice, s.u, s.v, geom) * scale
    })
}

/// Full basis matrix, columns in `G0` order.
pub fn basis_matrix(index: &IndexSetG0, lattice: &Lattice) -> Mat<c64> {
    phi_columns(index.modes(), lattice)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValleyKind {
    /// Disk around `(m̄, n̄)`.
    L,
    /// Disk around `(m̄, −n̄)`.
    LPrime,
}

impl ValleyKind {
    pub fn label(self) -> &'static str {
        match self {
            ValleyKind::L => "L",
            ValleyKind::LPrime => "Lprime",
        }
    }

    pub fn center(self, geom: &TubeGeometry) -> (i64, i64) {
        match self {
            ValleyKind::L => (geom.m_bar(), geom.n_bar()),
            ValleyKind::LPrime => (geom.m_bar(), -geom.n_bar()),
        }
    }
}

/// Check `q̄ < d < n̄`.
pub fn check_valley_radius(d: i64, q_bar: f64, geom: &TubeGeometry) -> Result<()> {
    if !((d as f64) > q_bar) {
        return Err(Error::Infeasible(format!(
            "valley radius d = {d} must exceed the maximal flux q̄ = {q_bar}"
        )));
    }
    if d >= geom.n_bar() {
        return Err(Error::Infeasible(format!(
            "valley radius d = {d} must be below n̄ = N/3 = {}",
            geom.n_bar()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ValleySubspace {
    pub kind: ValleyKind,
    pub radius: i64,
    /// Canonical representatives of the disk modes, in disk order.
    pub modes: Vec<ModeIndex>,
    pub projector: SubspaceProjector,
}

/// Raw disk points `(m, n)` with `(m−m0)² + (n−n0)² ≤ d²`, ordered by offset.
pub fn disk_offsets(d: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for dm in -d..=d {
        for dn in -d..=d {
            if dm * dm + dn * dn <= d * d {
                out.push((dm, dn));
            }
        }
    }
    out
}

/// Valley subspace with the feasibility gate `q̄ < d < n̄`.
pub fn valley_projector(
    kind: ValleyKind,
    d: i64,
    q_bar: f64,
    lattice: &Lattice,
) -> Result<ValleySubspace> {
    check_valley_radius(d, q_bar, lattice.geometry())?;
    valley_subspace(kind, d, lattice)
}

/// Valley subspace for any `0 ≤ d < n̄`, without the flux bound.
pub fn valley_subspace(kind: ValleyKind, d: i64, lattice: &Lattice) -> Result<ValleySubspace> {
    let geom = lattice.geometry();
    if d < 0 || d >= geom.n_bar() {
        return Err(Error::Infeasible(format!(
            "valley radius d = {d} must lie in [0, n̄ = {})",
            geom.n_bar()
        )));
    }
    let (m0, n0) = kind.center(geom);
    let modes = disk_offsets(d)
        .into_iter()
        .map(|(dm, dn)| canonicalize(m0 + dm, n0 + dn, geom).map(|(c, _)| c))
        .collect::<Result<Vec<_>>>()?;
    let basis = phi_columns(&modes, lattice);
    Ok(ValleySubspace {
        kind,
        radius: d,
        modes,
        projector: SubspaceProjector::from_orthonormal(basis),
    })
}

/// `(⟨ψ,P_Lψ⟩, ⟨ψ,P_L′ψ⟩) / ⟨ψ,ψ⟩`.
pub fn valley_weights(
    psi: &[c64],
    l: &ValleySubspace,
    l_prime: &ValleySubspace,
) -> Result<(f64, f64)> {
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if norm2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let v = MatRef::from_column_major_slice(psi, psi.len(), 1);
    Ok((
        l.projector.captured_weight(v) / norm2,
        l_prime.projector.captured_weight(v) / norm2,
    ))
}

/// Coefficients of `v` in the basis, `Φ† v`.
pub fn coefficients(basis: MatRef<'_, c64>, v: &[c64]) -> Vec<c64> {
    let col = MatRef::from_column_major_slice(v, v.len(), 1);
    let c = basis.adjoint() * col;
    (0..c.nrows()).map(|i| c[(i, 0)]).collect()
}

/// CSV `m,n,valley` listing every `G0` mode with its valley label
/// (`L`, `Lprime`, or `none`).
pub fn write_valley_csv<W: Write>(
    mut w: W,
    index: &IndexSetG0,
    l: &ValleySubspace,
    l_prime: &ValleySubspace,
) -> Result<()> {
    writeln!(w, "m,n,valley")?;
    for mode in index.modes() {
        let label = if l.modes.contains(mode) {
            "L"
        } else if l_prime.modes.contains(mode) {
            "Lprime"
        } else {
            "none"
        };
        writeln!(w, "{},{},{}", mode.m, mode.n, label)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::linalg;
    use proptest::prelude::*;

    fn lat(m: usize, n: usize) -> Lattice {
        build_lattice(TubeGeometry::new(m, n, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn g0_count_relaxed_geometry() {
        let g = TubeGeometry::unchecked(3, 4, 1.0);
        let idx = enumerate_g0(&g);
        assert_eq!(idx.len(), 48);
        for k in idx.modes() {
            assert!(in_g0(k.m, k.n, &g));
        }
    }

    #[test]
    fn g0_count_matches_site_count() {
        for (m, n) in [(2, 6), (3, 9), (4, 12), (5, 15)] {
            let g = TubeGeometry::new(m, n, 1.0).unwrap();
            assert_eq!(enumerate_g0(&g).len(), 4 * m * n);
        }
    }

    #[test]
    fn g0_points_pairwise_inequivalent() {
        let g = TubeGeometry::new(3, 9, 1.0).unwrap();
        let idx = enumerate_g0(&g);
        let [e1, _] = generators(&g);
        for (i, a) in idx.modes().iter().enumerate() {
            for b in &idx.modes()[i + 1..] {
                let (dm, dn) = (a.m - b.m, a.n - b.n);
                // Solve dm = 2M(j+k), dn = N(j−k) in integers.
                let s = dm as f64 / e1.0 as f64;
                let t = dn as f64 / e1.1 as f64;
                let j = (s + t) / 2.0;
                let k = (s - t) / 2.0;
                let integral = j.fract() == 0.0 && k.fract() == 0.0;
                assert!(!integral, "{a:?} ~ {b:?}");
            }
        }
    }

    #[test]
    fn shifted_strip_covers_g0_once() {
        let g = TubeGeometry::new(3, 6, 1.0).unwrap();
        let (big_m, big_n) = (3i64, 6i64);
        let idx = enumerate_g0(&g);
        let mut hits = vec![0usize; idx.len()];
        // A different fundamental domain: [0, 2M) × [−N, N) is not one, but the
        // parallelogram spanned by e1, e2 from the origin is.
        let mut count = 0;
        for m in -4 * big_m..4 * big_m {
            for n in -3 * big_n..3 * big_n {
                // (m, n) = α e1 + β e2 with α, β ∈ [0, 1)
                let alpha2 = m * big_n + n * 2 * big_m; // 4MN·α
                let beta2 = m * big_n - n * 2 * big_m; // 4MN·β
                let span = 4 * big_m * big_n;
                if (0..span).contains(&alpha2) && (0..span).contains(&beta2) {
                    count += 1;
                    let (c, _) = canonicalize(m, n, &g).unwrap();
                    hits[idx.position(c).unwrap()] += 1;
                }
            }
        }
        assert_eq!(count, idx.len());
        assert!(hits.iter().all(|&h| h == 1));
    }

    #[test]
    fn canonical_fixed_point() {
        let g = TubeGeometry::new(4, 12, 1.0).unwrap();
        for k in enumerate_g0(&g).modes() {
            let (c, ph) = canonicalize(k.m, k.n, &g).unwrap();
            assert_eq!(c, *k);
            assert!((ph - c64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn single_shift_phase() {
        let g = TubeGeometry::new(4, 12, 1.0).unwrap();
        let (m, n) = (2 * 4, 2);
        let (c, ph) = canonicalize(m + 8, n + 12, &g).unwrap();
        assert_eq!(c, ModeIndex::new(m, n));
        assert!((ph - c64::cis(-2.0 * PI / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn gram_is_identity() {
        let l = lat(3, 9);
        let idx = enumerate_g0(l.geometry());
        let phi = basis_matrix(&idx, &l);
        assert!(linalg::orthonormality_defect(phi.as_ref()) < 1e-12);
    }

    #[test]
    fn dirac_point_mode_is_k_plane_wave() {
        let l = lat(3, 9);
        let g = *l.geometry();
        let k = (2.0 * PI / (3.0 * g.a), 2.0 * PI / (3.0 * g.a * crate::lattice::SQRT3));
        let mode = ModeIndex::new(g.m_bar(), g.n_bar());
        for s in l.sites() {
            let v = phi_value(mode.m, mode.n, s.sublattice, s.u, s.v, &g);
            let plane = c64::cis(k.0 * s.position.0 + k.1 * s.position.1);
            let expect = match s.sublattice {
                Sublattice::B => plane,
                Sublattice::A => plane * c64::cis(2.0 * PI / 3.0),
            };
            assert!((v - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn valley_membership_and_orthogonality() {
        let l = lat(4, 12);
        let vl = valley_projector(ValleyKind::L, 1, 0.0, &l).unwrap();
        assert_eq!(vl.modes.len(), 5);
        let vlp = valley_projector(ValleyKind::LPrime, 3, 0.5, &l).unwrap();
        assert_eq!(vlp.modes.len(), 29);
        let pl = vl.projector.matrix();
        let plp = vlp.projector.matrix();
        assert!(linalg::max_abs((&pl * &plp).as_ref()) < 1e-10);
        assert!(vlp.projector.idempotency_defect() < 1e-10);
        let tr: f64 = (0..plp.nrows()).map(|i| plp[(i, i)].re).sum();
        assert!((tr - 29.0).abs() < 1e-10);
    }

    #[test]
    fn infeasible_radius_rejected() {
        let l = lat(4, 12);
        let e = valley_projector(ValleyKind::L, 4, 1.0, &l).unwrap_err();
        assert!(e.to_string().contains("n̄"));
        let e = valley_projector(ValleyKind::L, 1, 1.0, &l).unwrap_err();
        assert!(e.to_string().contains("q̄"));
    }

    #[test]
    fn member_mode_weights() {
        let l = lat(4, 12);
        let g = *l.geometry();
        let vl = valley_subspace(ValleyKind::L, 0, &l).unwrap();
        let vlp = valley_subspace(ValleyKind::LPrime, 0, &l).unwrap();
        let psi = phi(ModeIndex::new(g.m_bar(), g.n_bar()), &l);
        let (wl, wlp) = valley_weights(&psi, &vl, &vlp).unwrap();
        assert!((wl - 1.0).abs() < 1e-12 && wlp.abs() < 1e-12);
        let far = phi(ModeIndex::new(g.m_bar(), 0), &l);
        let (wl, wlp) = valley_weights(&far, &vl, &vlp).unwrap();
        assert!(wl.abs() < 1e-12 && wlp.abs() < 1e-12);
        assert!(valley_weights(&vec![c64::new(0.0, 0.0); l.len()], &vl, &vlp).is_err());
    }

    #[test]
    fn valley_csv_lists_every_mode() {
        let l = lat(2, 6);
        let idx = enumerate_g0(l.geometry());
        let vl = valley_subspace(ValleyKind::L, 1, &l).unwrap();
        let vlp = valley_subspace(ValleyKind::LPrime, 1, &l).unwrap();
        let mut buf = Vec::new();
        write_valley_csv(&mut buf, &idx, &vl, &vlp).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + idx.len());
        assert_eq!(text.lines().filter(|r| r.ends_with(",L")).count(), 5);
        assert_eq!(text.lines().filter(|r| r.ends_with(",Lprime")).count(), 5);
    }

    fn random_vector(n: usize, seed: u64) -> Vec<c64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
                c64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn weight_equals_member_coefficients() {
        let l = lat(3, 9);
        let idx = enumerate_g0(l.geometry());
        let full = basis_matrix(&idx, &l);
        let vl = valley_subspace(ValleyKind::L, 2, &l).unwrap();
        let vlp = valley_subspace(ValleyKind::LPrime, 2, &l).unwrap();
        let psi = random_vector(l.len(), 9);
        let c = coefficients(full.as_ref(), &psi);
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let member: f64 = vl
            .modes
            .iter()
            .map(|k| c[idx.position(*k).unwrap()].norm_sqr())
            .sum();
        let (wl, _) = valley_weights(&psi, &vl, &vlp).unwrap();
        assert!((wl - member / norm2).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn canonicalize_pointwise(m in -40i64..40, n in -30i64..30) {
            let l = lat(3, 9);
            let g = *l.geometry();
            let (c, ph) = canonicalize(m, n, &g).unwrap();
            prop_assert!(in_g0(c.m, c.n, &g));
            for s in l.sites() {
                let a = phi_value(m, n, s.sublattice, s.u, s.v, &g);
                let b = phi_value(c.m, c.n, s.sublattice, s.u, s.v, &g) * ph;
                prop_assert!((a - b).norm() < 1e-12);
            }
            let (c2, ph2) = canonicalize(c.m, c.n, &g).unwrap();
            prop_assert_eq!(c2, c);
            prop_assert!((ph2 - c64::new(1.0, 0.0)).norm() < 1e-15);
        }

        #[test]
        fn rho_is_shift_invariant(m in -20i64..20, n in -20i64..20, j in -1i64..=1, k in -1i64..=1) {
            let g = TubeGeometry::new(3, 9, 1.0).unwrap();
            let [e1, e2] = generators(&g);
            let r0 = rho(m, n, &g);
            let r1 = rho(m + j * e1.0 + k * e2.0, n + j * e1.1 + k * e2.1, &g);
            prop_assert!((r0 - r1).abs() < 1e-12);
            prop_assert!(r0 <= ((m * m + n * n) as f64).sqrt() + 1e-12);
        }

        #[test]
        fn parseval(seed in any::<u64>()) {
            let l = lat(2, 6);
            let idx = enumerate_g0(l.geometry());
            let full = basis_matrix(&idx, &l);
            let v = random_vector(l.len(), seed);
            let c = coefficients(full.as_ref(), &v);
            let lhs: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            let rhs: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0));
        }
    }
}
