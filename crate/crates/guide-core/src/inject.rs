//! Ground-truth anomaly injection: structural anomalies as planted
//! cliques, attribute anomalies by overwriting a node's attributes with
//! those of its most distant node among k random candidates.

use crate::graph::AttributedGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InjectError {
    #[error("need {needed} free nodes, only {available} available")]
    InsufficientNodes { needed: usize, available: usize },
    #[error("invalid injection spec: {0}")]
    InvalidSpec(String),
}

/// How an attribute anomaly acquires its new attributes. `Copy` overwrites
/// the target with the most distant candidate's row and leaves the
/// candidate untouched (and unlabeled); `Swap` exchanges the two rows,
/// which leaves an unlabeled perturbed node behind and exists only for
/// sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeMode {
    Copy,
    Swap,
}

/// Injection parameters. `q = None` selects the automatic rule
/// q = round(0.025·n/p), which makes labeled anomalies ≈ 5% of n.
#[derive(Debug, Clone)]
pub struct InjectionSpec {
    pub clique_size: usize,
    pub clique_count: Option<usize>,
    pub candidate_pool: usize,
    pub seed: u64,
    pub attribute_mode: AttributeMode,
}

impl InjectionSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            clique_size: 15,
            clique_count: None,
            candidate_pool: 50,
            seed,
            attribute_mode: AttributeMode::Copy,
        }
    }

    /// Resolve the clique count for a graph with n nodes.
    pub fn resolved_clique_count(&self, n: usize) -> usize {
        match self.clique_count {
            Some(q) => q,
            None => ((0.025 * n as f64 / self.clique_size as f64).round() as usize).max(1),
        }
    }

    fn validate(&self, n: usize) -> Result<usize, InjectError> {
        if self.clique_size < 2 {
            return Err(InjectError::InvalidSpec("clique size must be ≥ 2".into()));
        }
        if self.candidate_pool < 1 {
            return Err(InjectError::InvalidSpec("candidate pool must be ≥ 1".into()));
        }
        let q = self.resolved_clique_count(n);
        if q < 1 {
            return Err(InjectError::InvalidSpec("clique count must be ≥ 1".into()));
        }
        if 2 * self.clique_size * q > n {
            return Err(InjectError::InsufficientNodes {
                needed: 2 * self.clique_size * q,
                available: n,
            });
        }
        Ok(q)
    }
}

/// Perturbed graph plus ground truth.
#[derive(Debug, Clone)]
pub struct InjectionResult {
    pub graph: AttributedGraph,
    /// 1 marks an injected anomaly.
    pub labels: Vec<u8>,
    pub structural_ids: Vec<usize>,
    pub attribute_ids: Vec<usize>,
}

impl InjectionResult {
    pub fn anomaly_count(&self) -> usize {
        self.structural_ids.len() + self.attribute_ids.len()
    }
}

/// Partial Fisher–Yates draw of `count` distinct elements from `pool`.
fn sample_distinct(pool: &[usize], count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    assert!(count <= pool.len());
    let mut pool = pool.to_vec();
    for i in 0..count {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// Plant `q` disjoint cliques of size `p`: every within-set pair becomes an
/// edge (existing edges are untouched), attributes are untouched. Returns
/// the perturbed graph and the clique members in selection order.
pub fn inject_structural(
    g: &AttributedGraph,
    p: usize,
    q: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(AttributedGraph, Vec<usize>), InjectError> {
    let n = g.node_count();
    if p * q > n {
        return Err(InjectError::InsufficientNodes { needed: p * q, available: n });
    }
    let all: Vec<usize> = (0..n).collect();
    let chosen = sample_distinct(&all, p * q, rng);
    let mut new_edges = Vec::new();
    for clique in chosen.chunks(p) {
        for (i, &u) in clique.iter().enumerate() {
            for &v in &clique[i + 1..] {
                new_edges.push((u, v));
            }
        }
    }
    Ok((g.with_edges_added(&new_edges), chosen))
}

/// Overwrite the attributes of `count` nodes outside `excluded`. For each
/// target, `k` candidates are drawn from the nodes that are neither the
/// target nor any anomaly; the candidate at maximum Euclidean distance
/// (ties to the smallest id) supplies the new attribute row. Distances and
/// copied rows use the pre-injection attribute matrix.
pub fn inject_attribute(
    g: &AttributedGraph,
    count: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
    excluded: &[usize],
    mode: AttributeMode,
) -> Result<(AttributedGraph, Vec<usize>), InjectError> {
    let n = g.node_count();
    let mut is_excluded = vec![false; n];
    for &e in excluded {
        is_excluded[e] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_excluded[i]).collect();
    if free.len() < count {
        return Err(InjectError::InsufficientNodes {
            needed: count + excluded.len(),
            available: n,
        });
    }
    let targets = sample_distinct(&free, count, rng);

    let mut is_anomaly = is_excluded;
    for &t in &targets {
        is_anomaly[t] = true;
    }
    let original = g.attributes().clone();
    let pool: Vec<usize> = (0..n).filter(|&i| !is_anomaly[i]).collect();
    if pool.len() < k {
        return Err(InjectError::InsufficientNodes {
            needed: k,
            available: pool.len(),
        });
    }
    let mut new_attrs = original.clone();
    for &target in &targets {
        let candidates = sample_distinct(&pool, k, rng);
        let target_row = original.row(target);
        let mut best: Option<(f64, usize)> = None;
        for &c in &candidates {
            let dist_sq: f64 = target_row
                .iter()
                .zip(original.row(c).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = match best {
                None => Some((dist_sq, c)),
                Some((bd, bc)) => {
                    if dist_sq > bd || (dist_sq == bd && c < bc) {
                        Some((dist_sq, c))
                    } else {
                        Some((bd, bc))
                    }
                }
            };
        }
        let (_, chosen) = best.expect("candidate pool is non-empty");
        new_attrs.row_mut(target).copy_from_slice(original.row(chosen));
        if mode == AttributeMode::Swap {
            new_attrs.row_mut(chosen).copy_from_slice(original.row(target));
        }
    }
    Ok((g.with_attributes(new_attrs), targets))
}

/// Full protocol: structural cliques first, then an equal number of
/// attribute anomalies on the remaining nodes. Deterministic given the
/// spec's seed.
pub fn inject(g: &AttributedGraph, spec: &InjectionSpec) -> Result<InjectionResult, InjectError> {
    let n = g.node_count();
    let q = spec.validate(n)?;
    let p = spec.clique_size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (structural_graph, structural_ids) = inject_structural(g, p, q, &mut rng)?;
    let (graph, attribute_ids) = inject_attribute(
        &structural_graph,
        p * q,
        spec.candidate_pool,
        &mut rng,
        &structural_ids,
        spec.attribute_mode,
    )?;
    let mut labels = vec![0u8; n];
    for &i in structural_ids.iter().chain(attribute_ids.iter()) {
        labels[i] = 1;
    }
    Ok(InjectionResult {
        graph,
        labels,
        structural_ids,
        attribute_ids,
    })
}
