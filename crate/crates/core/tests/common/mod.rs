//! Synthetic Hermitian families shared by the engine tests and the
//! acceptance runner.
#![allow(dead_code)]

use faer::{c64, Mat};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sflab::linalg;
use sflab::specflow::{diagonal_family, FnFamily, HermitianFamily, SubspaceProjector};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_hermitian(rng: &mut StdRng, k: usize, scale: f64) -> Mat<c64> {
    let g = Mat::from_fn(k, k, |_, _| {
        c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    Mat::from_fn(k, k, |i, j| (g[(i, j)] + g[(j, i)].conj()) * (0.5 * scale))
}

pub fn random_unitary(rng: &mut StdRng, k: usize) -> Mat<c64> {
    let g = Mat::from_fn(k, k, |_, _| {
        c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    linalg::orthonormal_hull(g.as_ref())
}

/// Eigenvalue pattern with crossings `+1` (first curve), then `−1` and `+1`
/// (second curve), plus two spectators outside the window.
pub fn four_level_family() -> impl HermitianFamily {
    diagonal_family(vec![
        Box::new(|t: f64| t - 0.5) as Box<dyn Fn(f64) -> f64>,
        Box::new(|t: f64| {
            if t < 0.5 {
                0.4 - 2.4 * t
            } else {
                -0.8 + 2.4 * (t - 0.5)
            }
        }),
        Box::new(|_t: f64| 1.7),
        Box::new(|t: f64| -1.5 - 0.2 * t),
    ])
}

/// `B_t = Q (D_t + η C_t) Q†` with `D_t` diagonal, `C_t` coupling the first
/// `rank` coordinates to the rest, and `P = Q diag(1_rank, 0) Q†`.
pub struct RandomCase {
    pub family: Box<dyn HermitianFamily>,
    pub projector: SubspaceProjector,
    pub rank: usize,
    pub eta: f64,
}

fn curve(rng: &mut StdRng) -> impl Fn(f64) -> f64 {
    let a = rng.random_range(-1.5..1.5);
    let b = rng.random_range(-2.0..2.0);
    let c = rng.random_range(-0.8..0.8);
    let w = rng.random_range(0.5..3.0);
    move |t: f64| a + b * t + c * (std::f64::consts::PI * w * t).sin()
}

fn embed(q: &Mat<c64>, m: &Mat<c64>) -> Mat<c64> {
    q * m * q.adjoint()
}

pub fn random_coupled(rng: &mut StdRng) -> RandomCase {
    let k = rng.random_range(3..=12usize);
    let rank = rng.random_range(1..k);
    let eta = rng.random_range(0.0..0.05);
    let curves: Vec<_> = (0..k).map(|_| curve(rng)).collect();
    let c0 = random_hermitian(rng, k, 1.0);
    let c1 = random_hermitian(rng, k, 1.0);
    let off = move |m: &Mat<c64>| {
        Mat::from_fn(k, k, |i, j| {
            if (i < rank) != (j < rank) {
                m[(i, j)]
            } else {
                c64::new(0.0, 0.0)
            }
        })
    };
    let (c0, c1) = (off(&c0), off(&c1));
    let q = random_unitary(rng, k);
    let projector = SubspaceProjector::from_orthonormal(q.as_ref().subcols(0, rank).to_owned());
    let family = FnFamily::new(k, "random coupled", move |t: f64| {
        let d = Mat::from_fn(k, k, |i, j| {
            let diag = if i == j { curves[i](t) } else { 0.0 };
            c64::new(diag, 0.0) + (c0[(i, j)] * (1.0 - t) + c1[(i, j)] * t) * eta
        });
        embed(&q, &d)
    });
    RandomCase {
        family: Box::new(family),
        projector,
        rank,
        eta,
    }
}

/// Random path `A + t(B − A) + sin(πt)·C` of size `k`.
pub fn random_path(rng: &mut StdRng, k: usize) -> impl Fn(f64) -> Mat<c64> + Clone {
    let a = random_hermitian(rng, k, 1.5);
    let b = random_hermitian(rng, k, 1.5);
    let c = random_hermitian(rng, k, 0.7);
    move |t: f64| {
        Mat::from_fn(k, k, |i, j| {
            a[(i, j)] * (1.0 - t) + b[(i, j)] * t + c[(i, j)] * (std::f64::consts::PI * t).sin()
        })
    }
}

/// `Q diag(B1_t, B2_t) Q†` with the projector onto the first block.
pub struct BlockCase {
    pub full: Box<dyn HermitianFamily>,
    pub first: Box<dyn HermitianFamily>,
    pub second: Box<dyn HermitianFamily>,
    pub projector: SubspaceProjector,
}

pub fn random_block(rng: &mut StdRng) -> BlockCase {
    let k1 = rng.random_range(1..=7usize);
    let k2 = rng.random_range(1..=7usize);
    let k = k1 + k2;
    let p1 = random_path(rng, k1);
    let p2 = random_path(rng, k2);
    let q = random_unitary(rng, k);
    let projector = SubspaceProjector::from_orthonormal(q.as_ref().subcols(0, k1).to_owned());
    let (f1, f2) = (p1.clone(), p2.clone());
    let full = FnFamily::new(k, "block", move |t: f64| {
        let (b1, b2) = (f1(t), f2(t));
        let d = Mat::from_fn(k, k, |i, j| match (i < k1, j < k1) {
            (true, true) => b1[(i, j)],
            (false, false) => b2[(i - k1, j - k1)],
            _ => c64::new(0.0, 0.0),
        });
        embed(&q, &d)
    });
    BlockCase {
        full: Box::new(full),
        first: Box::new(FnFamily::new(k1, "first block", p1)),
        second: Box::new(FnFamily::new(k2, "second block", p2)),
        projector,
    }
}

/// Signed zero crossings of the sorted eigenvalue curves on a uniform grid;
/// zero counts as the non-negative side.
pub fn tracking_oracle(f: &dyn HermitianFamily, steps: usize) -> i64 {
    let eig = |t: f64| linalg::eigvalsh(f.eval(t).as_ref()).unwrap();
    let mut prev = eig(0.0);
    let mut flow = 0;
    for s in 1..=steps {
        let now = eig(s as f64 / steps as f64);
        for (a, b) in prev.iter().zip(&now) {
            match (*a >= 0.0, *b >= 0.0) {
                (false, true) => flow += 1,
                (true, false) => flow -= 1,
                _ => {}
            }
        }
        prev = now;
    }
    flow
}
