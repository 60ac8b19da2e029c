//! Seeded random flow matrices.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::flow::{FlowMatrix, Registry};

pub type SynthRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SynthRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `prefix0, prefix1, ...`
pub fn codes(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Integer flows in `[0, max_amount]` whose matches graph is connected.
///
/// A random spanning tree guarantees connectivity; every other pair carries
/// flows with probability `density`.
pub fn random_connected<R: Rng>(rng: &mut R, codes: &[String], max_amount: u32, density: f64) -> FlowMatrix {
    let n = codes.len();
    assert!(n >= 2 && max_amount >= 1);
    let registry = Registry::from_codes(codes.iter().cloned()).expect("distinct codes");
    let mut flows = vec![0.0; n * n];
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut tree = vec![false; n * n];
    for k in 1..n {
        let (u, v) = (perm[k], perm[rng.random_range(0..k)]);
        let major = rng.random_range(1..=max_amount) as f64;
        let minor = rng.random_range(0..=max_amount) as f64;
        let (i, j) = if rng.random_bool(0.5) { (u, v) } else { (v, u) };
        flows[i * n + j] = major;
        flows[j * n + i] = minor;
        tree[u * n + v] = true;
        tree[v * n + u] = true;
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && !tree[i * n + j] && rng.random_bool(density) {
                flows[i * n + j] = rng.random_range(0..=max_amount) as f64;
            }
        }
    }
    FlowMatrix::from_dense(registry, flows).expect("valid by construction")
}

/// Like [`random_connected`] with a random density in `[0.1, 0.9]`.
pub fn random_instance<R: Rng>(rng: &mut R, codes: &[String], max_amount: u32) -> FlowMatrix {
    let density = rng.random_range(0.1..0.9);
    random_connected(rng, codes, max_amount, density)
}
