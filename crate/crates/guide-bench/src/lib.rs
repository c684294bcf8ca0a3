//! Shared fixtures for the kernel benchmarks.

use guide_core::graph::{erdos_renyi, AttributedGraph};
use guide_core::nn::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded sparse graph with dense random attributes.
pub fn bench_graph(n: usize, p: f64, d: usize, seed: u64) -> AttributedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skeleton = erdos_renyi(n, p, &mut rng);
    let mut attrs = DenseMatrix::zeros(n, d);
    for v in attrs.values_mut() {
        *v = rng.gen_range(0.0..1.0);
    }
    AttributedGraph::from_edges(n, &skeleton.edges().collect::<Vec<_>>(), attrs)
}

/// Seeded dense matrix.
pub fn bench_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DenseMatrix::from_vec(rows, cols, data)
}
