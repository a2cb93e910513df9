//! Query-metering view over any [`Adjacency`] implementation.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::graph::Adjacency;
use crate::rng::WalkRng;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryCounts {
    pub degree: u64,
    pub neighbor: u64,
    pub jump: u64,
}

impl QueryCounts {
    pub fn total(&self) -> u64 {
        self.degree + self.neighbor + self.jump
    }
}

/// Wraps a graph and counts every adjacency-model query made through it.
/// Counters are relaxed atomics, so concurrent readers get exact totals.
pub struct CountingGraph<'g, G: Adjacency + ?Sized> {
    inner: &'g G,
    degree: AtomicU64,
    neighbor: AtomicU64,
    jump: AtomicU64,
}

impl<'g, G: Adjacency + ?Sized> CountingGraph<'g, G> {
    pub fn new(inner: &'g G) -> Self {
        Self {
            inner,
            degree: AtomicU64::new(0),
            neighbor: AtomicU64::new(0),
            jump: AtomicU64::new(0),
        }
    }

    pub fn counts(&self) -> QueryCounts {
        QueryCounts {
            degree: self.degree.load(Ordering::Relaxed),
            neighbor: self.neighbor.load(Ordering::Relaxed),
            jump: self.jump.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.degree.store(0, Ordering::Relaxed);
        self.neighbor.store(0, Ordering::Relaxed);
        self.jump.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &G {
        self.inner
    }
}

impl<G: Adjacency + ?Sized> Adjacency for CountingGraph<'_, G> {
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[inline]
    fn degree(&self, u: usize) -> usize {
        self.degree.fetch_add(1, Ordering::Relaxed);
        self.inner.degree(u)
    }

    #[inline]
    fn neighbor(&self, u: usize, i: usize) -> usize {
        self.neighbor.fetch_add(1, Ordering::Relaxed);
        self.inner.neighbor(u, i)
    }

    fn neighbors(&self, u: usize) -> &[u32] {
        let slice = self.inner.neighbors(u);
        self.neighbor.fetch_add(slice.len() as u64, Ordering::Relaxed);
        slice
    }

    fn jump(&self, rng: &mut WalkRng) -> usize {
        self.jump.fetch_add(1, Ordering::Relaxed);
        self.inner.jump(rng)
    }
}
