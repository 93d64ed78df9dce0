//! Honeycomb tube with zigzag ends.
//!
//! The unfolded tube `[0, L] × [0, l)` is tiled by `M × N` rectangles of size
//! `3a × √3a`, each holding four sites. Positions are kept on an integer grid
//! `(u, v)` with `x1 = u·a/2` and `x2 = v·√3a/2`, which makes neighbour lookup
//! and the plane-wave phases exact.
//!
//! Within rectangle `(row k, column j)` the four slots are
//!
//! | slot | sublattice | `u`      | `v`            |
//! |------|------------|----------|----------------|
//! | 0    | B          | `6j + 1` | `2k + 1`       |
//! | 1    | A          | `6j + 2` | `2k + 2 mod 2N`|
//! | 2    | B          | `6j + 4` | `2k + 2 mod 2N`|
//! | 3    | A          | `6j + 5` | `2k + 1`       |
//!
//! Left-edge B sites sit at `x1 = a/2` and right-edge A sites at `x1 = L − a/2`.
//! Their missing neighbours are fictitious sites whose values are identified
//! with the site itself (mirror identification across the tube end).

use std::fmt;
use std::io::Write;

use crate::{Error, Result};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Lattice dimensions: `M` rectangles along the axis, `N` around the tube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeGeometry {
    pub axial_cells: usize,
    pub around_cells: usize,
    /// Nearest-neighbour distance.
    pub a: f64,
}

impl TubeGeometry {
    /// Validated geometry for spectral experiments (`3 | N`, `M ≥ 2`, `N ≥ 6`).
    pub fn new(axial_cells: usize, around_cells: usize, a: f64) -> Result<Self> {
        let g = Self::unchecked(axial_cells, around_cells, a);
        g.validate()?;
        Ok(g)
    }

    /// Geometry with `a = L / (3M)` for a tube of prescribed axial length.
    pub fn with_length(axial_cells: usize, around_cells: usize, length: f64) -> Result<Self> {
        if axial_cells == 0 {
            return Err(Error::InvalidGeometry("M must be positive".into()));
        }
        Self::new(axial_cells, around_cells, length / (3.0 * axial_cells as f64))
    }

    /// No invariants checked; only `build_relaxed` accepts these.
    pub fn unchecked(axial_cells: usize, around_cells: usize, a: f64) -> Self {
        TubeGeometry {
            axial_cells,
            around_cells,
            a,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "a must be positive and finite, got {}",
                self.a
            )));
        }
        if self.axial_cells < 2 {
            return Err(Error::InvalidGeometry(format!(
                "M = {} < 2",
                self.axial_cells
            )));
        }
        if self.around_cells < 6 {
            return Err(Error::InvalidGeometry(format!(
                "N = {} < 6",
                self.around_cells
            )));
        }
        if self.around_cells % 3 != 0 {
            return Err(Error::InvalidGeometry(format!(
                "N = {} is not a multiple of 3",
                self.around_cells
            )));
        }
        Ok(())
    }

    /// Axial length `L = 3aM`.
    pub fn length(&self) -> f64 {
        3.0 * self.a * self.axial_cells as f64
    }

    /// Circumference `l = √3·aN`.
    pub fn circumference(&self) -> f64 {
        SQRT3 * self.a * self.around_cells as f64
    }

    /// `m̄ = 2M`.
    pub fn m_bar(&self) -> i64 {
        2 * self.axial_cells as i64
    }

    /// `n̄ = N/3`.
    pub fn n_bar(&self) -> i64 {
        self.around_cells as i64 / 3
    }

    pub fn site_count(&self) -> usize {
        4 * self.axial_cells * self.around_cells
    }

    /// Same `L` and `l`, with `M` and `N` doubled and `a` halved.
    pub fn refined(&self) -> Self {
        TubeGeometry {
            axial_cells: 2 * self.axial_cells,
            around_cells: 2 * self.around_cells,
            a: self.a / 2.0,
        }
    }

    /// `(x1, x2)` of an integer grid point.
    pub fn grid_to_position(&self, u: i64, v: i64) -> (f64, f64) {
        (
            u as f64 * self.a / 2.0,
            v as f64 * SQRT3 * self.a / 2.0,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sublattice {
    A,
    B,
}

impl fmt::Display for Sublattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sublattice::A => f.write_str("A"),
            Sublattice::B => f.write_str("B"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Site {
    pub index: usize,
    pub sublattice: Sublattice,
    /// Integer grid coordinates; `v ∈ [0, 2N)`.
    pub u: i64,
    pub v: i64,
    pub position: (f64, f64),
}

/// The three bond vectors from a B site to its A neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bond {
    /// `δ1 = (a/2, a√3/2)`
    D1,
    /// `δ2 = (a/2, −a√3/2)`
    D2,
    /// `δ3 = (−a, 0)`
    D3,
}

impl Bond {
    pub const ALL: [Bond; 3] = [Bond::D1, Bond::D2, Bond::D3];

    /// Displacement on the `(u, v)` grid.
    pub fn grid_step(self) -> (i64, i64) {
        match self {
            Bond::D1 => (1, 1),
            Bond::D2 => (1, -1),
            Bond::D3 => (-2, 0),
        }
    }

    pub fn vector(self, a: f64) -> (f64, f64) {
        match self {
            Bond::D1 => (a / 2.0, a * SQRT3 / 2.0),
            Bond::D2 => (a / 2.0, -a * SQRT3 / 2.0),
            Bond::D3 => (-a, 0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkTarget {
    Site(usize),
    /// Fictitious neighbour beyond a zigzag edge, identified with the site itself.
    SelfSite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeighborLink {
    pub target: LinkTarget,
    pub bond: Bond,
    /// `+δ` from a B site, `−δ` from an A site.
    pub bond_vector: (f64, f64),
    /// `±1` when the straight segment crosses the `x2 = 0 ≡ l` seam.
    pub wrap: i8,
}

impl NeighborLink {
    pub fn is_boundary(&self) -> bool {
        self.target == LinkTarget::SelfSite
    }
}

#[derive(Clone, Debug)]
pub struct Lattice {
    geom: TubeGeometry,
    sites: Vec<Site>,
    links: Vec<[NeighborLink; 3]>,
}

/// Validated construction; rejects geometries unsuitable for spectral work.
pub fn build_lattice(geom: TubeGeometry) -> Result<Lattice> {
    geom.validate()?;
    Ok(Lattice::assemble(geom))
}

impl Lattice {
    pub fn new(geom: TubeGeometry) -> Result<Self> {
        build_lattice(geom)
    }

    /// Builds any `M, N ≥ 1` lattice without the divisibility requirement.
    pub fn build_relaxed(geom: TubeGeometry) -> Result<Self> {
        if geom.axial_cells == 0 || geom.around_cells == 0 || !(geom.a > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "M = {}, N = {}, a = {} must all be positive",
                geom.axial_cells, geom.around_cells, geom.a
            )));
        }
        Ok(Self::assemble(geom))
    }

    fn assemble(geom: TubeGeometry) -> Self {
        let (m_cells, n_cells) = (geom.axial_cells as i64, geom.around_cells as i64);
        let period = 2 * n_cells;
        let mut sites = Vec::with_capacity(geom.site_count());
        for k in 0..n_cells {
            for j in 0..m_cells {
                for slot in 0..4 {
                    let (sub, u, v) = match slot {
                        0 => (Sublattice::B, 6 * j + 1, 2 * k + 1),
                        1 => (Sublattice::A, 6 * j + 2, (2 * k + 2) % period),
                        2 => (Sublattice::B, 6 * j + 4, (2 * k + 2) % period),
                        _ => (Sublattice::A, 6 * j + 5, 2 * k + 1),
                    };
                    sites.push(Site {
                        index: sites.len(),
                        sublattice: sub,
                        u,
                        v,
                        position: geom.grid_to_position(u, v),
                    });
                }
            }
        }

        let mut lattice = Lattice {
            geom,
            sites,
            links: Vec::new(),
        };
        let links = lattice
            .sites
            .iter()
            .map(|s| {
                let sign = match s.sublattice {
                    Sublattice::B => 1,
                    Sublattice::A => -1,
                };
                Bond::ALL.map(|bond| {
                    let (du, dv) = bond.grid_step();
                    let (tu, tv) = (s.u + sign * du, s.v + sign * dv);
                    let wrap = if tv < 0 {
                        -1
                    } else if tv >= period {
                        1
                    } else {
                        0
                    };
                    let target = lattice
                        .index_of(tu, tv)
                        .map_or(LinkTarget::SelfSite, LinkTarget::Site);
                    let (dx, dy) = bond.vector(geom.a);
                    NeighborLink {
                        target,
                        bond,
                        bond_vector: (sign as f64 * dx, sign as f64 * dy),
                        wrap,
                    }
                })
            })
            .collect();
        lattice.links = links;
        lattice
    }

    pub fn geometry(&self) -> &TubeGeometry {
        &self.geom
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn neighbors(&self, index: usize) -> &[NeighborLink; 3] {
        &self.links[index]
    }

    /// Site at grid point `(u, v)`, with `v` taken modulo `2N`; `None` outside
    /// the tube or off the lattice.
    pub fn index_of(&self, u: i64, v: i64) -> Option<usize> {
        let (m_cells, n_cells) = (
            self.geom.axial_cells as i64,
            self.geom.around_cells as i64,
        );
        if u < 0 || u >= 6 * m_cells {
            return None;
        }
        let v = v.rem_euclid(2 * n_cells);
        let (j, r) = (u / 6, u % 6);
        let (slot, k) = match r {
            1 if v % 2 == 1 => (0, (v - 1) / 2),
            2 if v % 2 == 0 => (1, (v / 2 - 1).rem_euclid(n_cells)),
            4 if v % 2 == 0 => (2, (v / 2 - 1).rem_euclid(n_cells)),
            5 if v % 2 == 1 => (3, (v - 1) / 2),
            _ => return None,
        };
        Some(((k * m_cells + j) * 4 + slot) as usize)
    }

    /// Number of physical (non-boundary) bonds, each counted once.
    pub fn bond_count(&self) -> usize {
        self.links
            .iter()
            .flatten()
            .filter(|l| !l.is_boundary())
            .count()
            / 2
    }

    /// CSV dump `index,sublattice,x1,x2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,sublattice,x1,x2")?;
        for s in &self.sites {
            writeln!(
                w,
                "{},{},{},{}",
                s.index,
                s.sublattice,
                crate::cli::output::f17(s.position.0),
                crate::cli::output::f17(s.position.1)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(m: usize, n: usize) -> TubeGeometry {
        TubeGeometry::new(m, n, 1.0).unwrap()
    }

    #[test]
    fn relaxed_count_for_small_geometry() {
        let lat = Lattice::build_relaxed(TubeGeometry::unchecked(3, 4, 1.0)).unwrap();
        assert_eq!(lat.len(), 48);
        assert!(build_lattice(TubeGeometry::unchecked(3, 4, 1.0)).is_err());
    }

    #[test]
    fn rejects_bad_geometries() {
        assert!(TubeGeometry::new(1, 6, 1.0).is_err());
        assert!(TubeGeometry::new(2, 3, 1.0).is_err());
        assert!(TubeGeometry::new(2, 8, 1.0).is_err());
        assert!(TubeGeometry::new(2, 6, 0.0).is_err());
        assert!(TubeGeometry::new(2, 6, 1.0).is_ok());
    }

    #[test]
    fn small_tube_counts() {
        let lat = build_lattice(geom(2, 6)).unwrap();
        assert_eq!(lat.len(), 48);
        let boundary = lat
            .sites()
            .iter()
            .map(|s| lat.neighbors(s.index).iter().filter(|l| l.is_boundary()).count())
            .sum::<usize>();
        assert_eq!(boundary, 12);
        let a = lat.sites().iter().filter(|s| s.sublattice == Sublattice::A).count();
        assert_eq!(a, 24);
    }

    #[test]
    fn derived_lengths() {
        let g = TubeGeometry::with_length(12, 18, 1.0).unwrap();
        assert!((g.length() - 1.0).abs() < 1e-15);
        assert!((g.circumference() - SQRT3 * 18.0 / 36.0).abs() < 1e-15);
        assert_eq!(g.m_bar(), 24);
        assert_eq!(g.n_bar(), 6);
    }

    #[test]
    fn edge_sites_and_self_links() {
        let g = geom(3, 6);
        let lat = build_lattice(g).unwrap();
        for s in lat.sites() {
            let links = lat.neighbors(s.index);
            for l in links {
                if l.is_boundary() {
                    match s.sublattice {
                        Sublattice::B => {
                            assert!((s.position.0 - 0.5).abs() < 1e-15);
                            assert_eq!(l.bond, Bond::D3);
                        }
                        Sublattice::A => {
                            assert!((s.position.0 - (g.length() - 0.5)).abs() < 1e-12);
                            assert_eq!(l.bond, Bond::D3);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bonds_have_length_a_and_are_bipartite() {
        let g = TubeGeometry::new(4, 9, 0.7).unwrap();
        let lat = build_lattice(g).unwrap();
        let l = g.circumference();
        for s in lat.sites() {
            let mut targets = Vec::new();
            for link in lat.neighbors(s.index) {
                let (dx, dy) = link.bond_vector;
                assert!(((dx * dx + dy * dy).sqrt() - g.a).abs() < 1e-12 * g.a);
                if let LinkTarget::Site(t) = link.target {
                    let other = lat.sites()[t];
                    assert_ne!(other.sublattice, s.sublattice);
                    let x2 = s.position.1 + dy - link.wrap as f64 * l;
                    assert!((other.position.0 - (s.position.0 + dx)).abs() < 1e-12);
                    assert!((other.position.1 - x2).abs() < 1e-12);
                    // symmetric adjacency
                    assert!(lat
                        .neighbors(t)
                        .iter()
                        .any(|b| b.target == LinkTarget::Site(s.index)));
                    targets.push(t);
                }
            }
            targets.sort();
            targets.dedup();
            let interior = lat.neighbors(s.index).iter().all(|l| !l.is_boundary());
            if interior {
                assert_eq!(targets.len(), 3);
            }
        }
    }

    #[test]
    fn positions_in_fundamental_strip() {
        let g = geom(2, 6);
        let lat = build_lattice(g).unwrap();
        for s in lat.sites() {
            assert!(s.position.0 > 0.0 && s.position.0 < g.length());
            assert!(s.position.1 >= 0.0 && s.position.1 < g.circumference());
            assert_eq!(lat.index_of(s.u, s.v), Some(s.index));
        }
    }
}
