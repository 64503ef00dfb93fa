//! Seeded random inputs and small information helpers shared by unit tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::auxdist::{AuxTriple, CommonInfoAux};
use crate::channel::BroadcastChannel;
use crate::prob::{Dist, JointDist};

/// Flat random simplex point via exponential sampling.
pub(crate) fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| -rng.random::<f64>().ln()).collect();
    let total: f64 = v.iter().sum();
    for p in &mut v {
        *p /= total;
    }
    v
}

pub(crate) fn random_dist(rng: &mut ChaCha8Rng, len: usize) -> Dist {
    Dist::new(random_simplex(rng, len)).expect("normalized")
}

pub(crate) fn random_channel(
    rng: &mut ChaCha8Rng,
    nx: usize,
    ny: usize,
    nz: usize,
) -> BroadcastChannel {
    let mut w = Vec::with_capacity(nx * ny * nz);
    for _ in 0..nx {
        w.extend(random_simplex(rng, ny * nz));
    }
    BroadcastChannel::new(nx, ny, nz, w).expect("rows normalized")
}

pub(crate) fn random_triple(rng: &mut ChaCha8Rng, nu: usize, nv: usize, nx: usize) -> AuxTriple {
    let puv = JointDist::new(vec![nu, nv], random_simplex(rng, nu * nv)).expect("normalized");
    let rows = (0..nu * nv).map(|_| random_dist(rng, nx)).collect();
    AuxTriple::new(puv, rows).expect("valid rows")
}

pub(crate) fn random_deterministic_triple(
    rng: &mut ChaCha8Rng,
    nu: usize,
    nv: usize,
    nx: usize,
) -> AuxTriple {
    let puv = JointDist::new(vec![nu, nv], random_simplex(rng, nu * nv)).expect("normalized");
    let rows = (0..nu * nv)
        .map(|_| Dist::point_mass(rng.random_range(0..nx), nx))
        .collect();
    AuxTriple::new(puv, rows).expect("valid rows")
}

pub(crate) fn random_common_info(
    rng: &mut ChaCha8Rng,
    nu: usize,
    nv: usize,
    nw: usize,
    nx: usize,
) -> CommonInfoAux {
    let pu = random_dist(rng, nu);
    let pv = random_dist(rng, nv);
    let pw = (0..nu * nv).map(|_| random_dist(rng, nw)).collect();
    let px = (0..nu * nv * nw).map(|_| random_dist(rng, nx)).collect();
    CommonInfoAux::new(pu, pv, pw, px).expect("valid rows")
}

/// Mutual information between two groups of axes.
pub(crate) fn mi_axes(j: &JointDist, a: &[usize], b: &[usize]) -> f64 {
    let ab: Vec<usize> = a.iter().chain(b).copied().collect();
    j.entropy_of(a).unwrap() + j.entropy_of(b).unwrap() - j.entropy_of(&ab).unwrap()
}

/// Conditional entropy of one group of axes given another.
pub(crate) fn cond_ent(j: &JointDist, a: &[usize], b: &[usize]) -> f64 {
    let ab: Vec<usize> = a.iter().chain(b).copied().collect();
    j.entropy_of(&ab).unwrap() - j.entropy_of(b).unwrap()
}
