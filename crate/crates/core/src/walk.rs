//! Lazy random walks: stay with probability 1/2, otherwise move to a uniform
//! neighbor.

use crate::graph::Adjacency;
use crate::rng::WalkRng;

/// Stream tags keep walks from different stages of one computation apart.
pub mod tag {
    pub const PAIR: u64 = 1;
    pub const BASELINE: u64 = 2;
    pub const SKETCH_CANDIDATES: u64 = 3;
    pub const SKETCH_REFINE: u64 = 4;
}

/// The RNG stream for walk `index` from `source`. Pure in its arguments, so a
/// walk draws the same steps no matter which worker runs it.
pub fn walk_rng(seed: u64, tag: u64, source: usize, index: u64) -> WalkRng {
    walk_rng_base(seed, tag, source).derive(index)
}

/// The parent of every [`walk_rng`] stream for `(seed, tag, source)`.
pub fn walk_rng_base(seed: u64, tag: u64, source: usize) -> WalkRng {
    WalkRng::new(seed).derive(tag).derive(source as u64)
}

/// One lazy step from `w`; see [`Adjacency::lazy_step_word`].
#[inline]
pub fn lazy_step<G: Adjacency + ?Sized>(g: &G, w: usize, rng: &mut WalkRng) -> usize {
    g.lazy_step_word(w, rng.next_word())
}

/// The vertex sequence `v_0 = u, v_1, ..., v_steps`.
pub fn lazy_walk<G: Adjacency + ?Sized>(
    g: &G,
    u: usize,
    steps: usize,
    rng: &mut WalkRng,
) -> Vec<usize> {
    let mut path = Vec::with_capacity(steps + 1);
    let mut w = u;
    path.push(w);
    for _ in 0..steps {
        w = lazy_step(g, w, rng);
        path.push(w);
    }
    path
}
