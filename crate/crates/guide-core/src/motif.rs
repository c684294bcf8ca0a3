//! Per-node motif degrees and the structure matrix.
//!
//! A motif instance is an *induced* subgraph on a set of nodes, counted
//! once per node set regardless of automorphisms. The node motif degree
//! of node i is the number of instances containing i. Five templates are
//! counted: triangle, open wedge, 4-clique, diamond (4-clique minus one
//! edge) and 4-cycle; together with the plain degree they form the n×6
//! structure matrix.
//!
//! Counters enumerate each instance exactly once through a canonical
//! vertex ordering:
//!   - triangle/wedge: smallest vertex of the edge / the center;
//!   - 4-clique: its two smallest vertices as the base edge;
//!   - diamond: its unique chord;
//!   - 4-cycle: the diagonal pair holding the globally smallest vertex.

use crate::graph::AttributedGraph;
use crate::nn::DenseMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MotifError {
    #[error("graph with {n} nodes exceeds the brute-force limit of {limit}")]
    GraphTooLarge { n: usize, limit: usize },
}

/// The five motif templates, in structure-matrix column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Motif {
    Triangle,
    Wedge,
    FourClique,
    Diamond,
    FourCycle,
}

impl Motif {
    pub const ALL: [Motif; 5] = [
        Motif::Triangle,
        Motif::Wedge,
        Motif::FourClique,
        Motif::Diamond,
        Motif::FourCycle,
    ];

    pub fn vertex_count(self) -> usize {
        match self {
            Motif::Triangle | Motif::Wedge => 3,
            _ => 4,
        }
    }

    /// Canonical edge set over vertices 0..vertex_count.
    pub fn canonical_edges(self) -> &'static [(usize, usize)] {
        match self {
            Motif::Triangle => &[(0, 1), (0, 2), (1, 2)],
            Motif::Wedge => &[(0, 1), (0, 2)],
            Motif::FourClique => &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            Motif::Diamond => &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)],
            Motif::FourCycle => &[(0, 1), (0, 3), (1, 2), (2, 3)],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Motif::Triangle => "triangle",
            Motif::Wedge => "wedge",
            Motif::FourClique => "clique4",
            Motif::Diamond => "diamond",
            Motif::FourCycle => "cycle4",
        }
    }
}

/// All six connected four-node graphlet shapes, used by the empirical
/// shape-assignment check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FourShape {
    Clique,
    Diamond,
    Cycle,
    Paw,
    Claw,
    Path,
}

impl FourShape {
    pub const ALL: [FourShape; 6] = [
        FourShape::Clique,
        FourShape::Diamond,
        FourShape::Cycle,
        FourShape::Paw,
        FourShape::Claw,
        FourShape::Path,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FourShape::Clique => "clique4",
            FourShape::Diamond => "diamond",
            FourShape::Cycle => "cycle4",
            FourShape::Paw => "paw",
            FourShape::Claw => "claw",
            FourShape::Path => "path4",
        }
    }
}

/// Optional per-column transform applied when the matrix feeds the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Raw,
    Log1p,
}

/// Names of the structure-matrix columns, in order.
pub const STRUCTURE_COLUMNS: [&str; 6] =
    ["degree", "triangle", "wedge", "clique4", "diamond", "cycle4"];

/// n×6 per-node structure matrix: [degree, triangle, wedge, clique4,
/// diamond, cycle4], optionally transformed for model input.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    matrix: DenseMatrix,
    transform: Transform,
}

impl StructureMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    /// Tab-separated serialization with a header row naming the columns.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("node");
        for c in STRUCTURE_COLUMNS {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for i in 0..self.matrix.rows() {
            out.push_str(&i.to_string());
            for v in self.matrix.row(i) {
                out.push('\t');
                if self.transform == Transform::Raw {
                    out.push_str(&format!("{}", *v as u64));
                } else {
                    out.push_str(&format!("{v:.17}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Per-node count of induced instances of `motif` containing each node.
pub fn count_nmd(g: &AttributedGraph, motif: Motif) -> Vec<u64> {
    match motif {
        Motif::Triangle => triangle_nmd(g),
        Motif::Wedge => wedge_nmd(g),
        Motif::FourClique => four_clique_nmd(g),
        Motif::Diamond => diamond_nmd(g),
        Motif::FourCycle => four_cycle_nmd(g),
    }
}

/// Total number of induced instances, i.e. Σᵢ NMD(i) / |V(motif)|.
pub fn total_motif_count(g: &AttributedGraph, motif: Motif) -> u64 {
    let sum: u64 = count_nmd(g, motif).iter().sum();
    sum / motif.vertex_count() as u64
}

/// Sorted-list intersection of two neighbor slices.
fn intersect(a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

fn triangle_nmd(g: &AttributedGraph) -> Vec<u64> {
    let mut counts = vec![0u64; g.node_count()];
    let mut common = Vec::new();
    for (u, v) in g.edges() {
        intersect(g.neighbors(u), g.neighbors(v), &mut common);
        for &w in common.iter().filter(|&&w| w > v) {
            counts[u] += 1;
            counts[v] += 1;
            counts[w] += 1;
        }
    }
    counts
}

fn wedge_nmd(g: &AttributedGraph) -> Vec<u64> {
    let mut counts = vec![0u64; g.node_count()];
    for center in 0..g.node_count() {
        let nbrs = g.neighbors(center);
        for (a_idx, &u) in nbrs.iter().enumerate() {
            for &v in &nbrs[a_idx + 1..] {
                if !g.has_edge(u, v) {
                    counts[center] += 1;
                    counts[u] += 1;
                    counts[v] += 1;
                }
            }
        }
    }
    counts
}

fn four_clique_nmd(g: &AttributedGraph) -> Vec<u64> {
    let mut counts = vec![0u64; g.node_count()];
    let mut common = Vec::new();
    for (u, v) in g.edges() {
        intersect(g.neighbors(u), g.neighbors(v), &mut common);
        let above: Vec<usize> = common.iter().copied().filter(|&w| w > v).collect();
        for (i, &w) in above.iter().enumerate() {
            for &x in &above[i + 1..] {
                if g.has_edge(w, x) {
                    counts[u] += 1;
                    counts[v] += 1;
                    counts[w] += 1;
                    counts[x] += 1;
                }
            }
        }
    }
    counts
}

fn diamond_nmd(g: &AttributedGraph) -> Vec<u64> {
    let mut counts = vec![0u64; g.node_count()];
    let mut common = Vec::new();
    // The chord is the unique edge whose endpoints see both remaining
    // vertices, so enumerating chords visits each diamond once.
    for (u, v) in g.edges() {
        intersect(g.neighbors(u), g.neighbors(v), &mut common);
        for (i, &w) in common.iter().enumerate() {
            for &x in &common[i + 1..] {
                if !g.has_edge(w, x) {
                    counts[u] += 1;
                    counts[v] += 1;
                    counts[w] += 1;
                    counts[x] += 1;
                }
            }
        }
    }
    counts
}

fn four_cycle_nmd(g: &AttributedGraph) -> Vec<u64> {
    let n = g.node_count();
    let mut counts = vec![0u64; n];
    // For each diagonal pair (u, v), u < v, both non-adjacent, the common
    // neighbors w < x with (w, x) non-adjacent close an induced 4-cycle.
    // Count it at the diagonal holding the globally smallest vertex.
    let mut codeg = vec![0u32; n];
    let mut commons: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut touched = Vec::new();
    for u in 0..n {
        touched.clear();
        for &w in g.neighbors(u) {
            for &v in g.neighbors(w) {
                if v <= u {
                    continue;
                }
                if codeg[v] == 0 {
                    touched.push(v);
                }
                codeg[v] += 1;
                commons[v].push(w);
            }
        }
        for &v in &touched {
            if codeg[v] >= 2 && !g.has_edge(u, v) {
                let list = &commons[v];
                for (i, &w) in list.iter().enumerate() {
                    if w < u {
                        continue;
                    }
                    for &x in &list[i + 1..] {
                        if x < u {
                            continue;
                        }
                        if !g.has_edge(w.min(x), w.max(x)) {
                            counts[u] += 1;
                            counts[v] += 1;
                            counts[w] += 1;
                            counts[x] += 1;
                        }
                    }
                }
            }
            codeg[v] = 0;
            commons[v].clear();
        }
    }
    counts
}

/// Exact totals for triangle, wedge and all six connected four-node
/// shapes, computed through subgraph-count identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusTotals {
    pub triangle: u64,
    pub wedge: u64,
    pub four: [(FourShape, u64); 6],
}

impl CensusTotals {
    pub fn four_total(&self, shape: FourShape) -> u64 {
        self.four.iter().find(|(s, _)| *s == shape).unwrap().1
    }
}

/// Count every connected induced graphlet on 3 and 4 nodes.
///
/// Clique, diamond and cycle come from the dedicated per-node counters;
/// paw, claw and path are recovered from non-induced subgraph identities,
/// which is far cheaper than enumerating them.
pub fn census_totals(g: &AttributedGraph) -> CensusTotals {
    let n = g.node_count();
    let deg: Vec<u64> = (0..n).map(|i| g.neighbors(i).len() as u64).collect();

    // Triangle total plus the pendant-sum needed for paw counting.
    let mut triangles = 0u64;
    let mut paw_subgraphs = 0u64;
    let mut common = Vec::new();
    for (u, v) in g.edges() {
        intersect(g.neighbors(u), g.neighbors(v), &mut common);
        for &w in common.iter().filter(|&&w| w > v) {
            triangles += 1;
            paw_subgraphs += (deg[u] - 2) + (deg[v] - 2) + (deg[w] - 2);
        }
    }

    let wedge_paths: u64 = deg.iter().map(|&d| d * d.saturating_sub(1) / 2).sum();
    let wedge = wedge_paths - 3 * triangles;

    let clique = total_motif_count(g, Motif::FourClique);
    let diamond = total_motif_count(g, Motif::Diamond);
    let cycle = total_motif_count(g, Motif::FourCycle);

    // paw subgraphs = induced paws + 4 per diamond + 12 per 4-clique.
    let paw = paw_subgraphs - 4 * diamond - 12 * clique;

    // claw subgraphs = Σ C(d,3); each paw holds 1, diamond 2, clique 4.
    let claw_subgraphs: u64 = deg.iter().map(|&d| d * d.saturating_sub(1) * d.saturating_sub(2) / 6).sum();
    let claw = claw_subgraphs - paw - 2 * diamond - 4 * clique;

    // path subgraphs = Σ_(u,v)∈E (d_u−1)(d_v−1) − 3·triangles; each paw
    // holds 2, 4-cycle 4, diamond 6, clique 12.
    let path_subgraphs: u64 = g
        .edges()
        .map(|(u, v)| (deg[u] - 1) * (deg[v] - 1))
        .sum::<u64>()
        - 3 * triangles;
    let path = path_subgraphs - 2 * paw - 4 * cycle - 6 * diamond - 12 * clique;

    CensusTotals {
        triangle: triangles,
        wedge,
        four: [
            (FourShape::Clique, clique),
            (FourShape::Diamond, diamond),
            (FourShape::Cycle, cycle),
            (FourShape::Paw, paw),
            (FourShape::Claw, claw),
            (FourShape::Path, path),
        ],
    }
}

/// Match three target totals against the six four-node shape totals.
/// Returns the shapes matching targets[0..3] in order when exactly one
/// shape fits each target and the three shapes are distinct.
pub fn match_four_node_targets(
    totals: &CensusTotals,
    targets: [u64; 3],
) -> Option<[FourShape; 3]> {
    let mut assignment = [FourShape::Clique; 3];
    let mut used = Vec::new();
    for (slot, &target) in targets.iter().enumerate() {
        let matches: Vec<FourShape> = FourShape::ALL
            .iter()
            .copied()
            .filter(|&s| totals.four_total(s) == target && !used.contains(&s))
            .collect();
        if matches.len() != 1 {
            return None;
        }
        assignment[slot] = matches[0];
        used.push(matches[0]);
    }
    Some(assignment)
}

const BRUTE_FORCE_LIMIT: usize = 64;

/// Exhaustive per-node induced-instance counts over all node subsets of
/// the template size. Only for graphs with at most 64 nodes; this is the
/// oracle the fast counters are checked against.
pub fn brute_force_nmd(g: &AttributedGraph, motif: Motif) -> Result<Vec<u64>, MotifError> {
    let n = g.node_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(MotifError::GraphTooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    let rows = bitset_rows(g);
    let mut counts = vec![0u64; n];
    if motif.vertex_count() == 3 {
        // 3 edges is a triangle; 2 edges on three vertices is always a path.
        let want_edges = motif.canonical_edges().len();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let (edges, _) = induced_stats(&rows, &[i, j, k]);
                    if edges == want_edges {
                        counts[i] += 1;
                        counts[j] += 1;
                        counts[k] += 1;
                    }
                }
            }
        }
    } else {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in (k + 1)..n {
                        let set = [i, j, k, l];
                        if classify_four(&rows, &set) == four_shape_of(motif) {
                            for &v in &set {
                                counts[v] += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(counts)
}

/// Brute-force total for any of the six four-node shapes (oracle for the
/// identity-based totals).
pub fn brute_force_four_shape_total(
    g: &AttributedGraph,
    shape: FourShape,
) -> Result<u64, MotifError> {
    let n = g.node_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(MotifError::GraphTooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    let rows = bitset_rows(g);
    let mut total = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                for l in (k + 1)..n {
                    if classify_four(&rows, &[i, j, k, l]) == Some(shape) {
                        total += 1;
                    }
                }
            }
        }
    }
    Ok(total)
}

fn four_shape_of(motif: Motif) -> Option<FourShape> {
    match motif {
        Motif::FourClique => Some(FourShape::Clique),
        Motif::Diamond => Some(FourShape::Diamond),
        Motif::FourCycle => Some(FourShape::Cycle),
        _ => None,
    }
}

fn bitset_rows(g: &AttributedGraph) -> Vec<u64> {
    let n = g.node_count();
    let mut rows = vec![0u64; n];
    for (u, v) in g.edges() {
        rows[u] |= 1 << v;
        rows[v] |= 1 << u;
    }
    rows
}

fn induced_stats(rows: &[u64], set: &[usize]) -> (usize, [usize; 4]) {
    let mut edges = 0;
    let mut degs = [0usize; 4];
    for (ai, &a) in set.iter().enumerate() {
        for (bi, &b) in set.iter().enumerate().skip(ai + 1) {
            if rows[a] >> b & 1 == 1 {
                edges += 1;
                degs[ai] += 1;
                degs[bi] += 1;
            }
        }
    }
    (edges, degs)
}

fn classify_four(rows: &[u64], set: &[usize; 4]) -> Option<FourShape> {
    let (edges, degs) = induced_stats(rows, set);
    let max_deg = *degs.iter().max().unwrap();
    let min_deg = *degs.iter().min().unwrap();
    match edges {
        6 => Some(FourShape::Clique),
        5 => Some(FourShape::Diamond),
        4 => {
            if max_deg == 2 {
                Some(FourShape::Cycle)
            } else {
                Some(FourShape::Paw)
            }
        }
        3 => {
            if min_deg == 0 {
                None // triangle plus isolated vertex
            } else if max_deg == 3 {
                Some(FourShape::Claw)
            } else {
                Some(FourShape::Path)
            }
        }
        _ => None,
    }
}

/// Assemble the structure matrix: [degree, triangle, wedge, clique4,
/// diamond, cycle4] per node, with the requested model-input transform.
pub fn build_structure_matrix(g: &AttributedGraph, transform: Transform) -> StructureMatrix {
    let n = g.node_count();
    let columns: Vec<Vec<u64>> = Motif::ALL.iter().map(|&m| count_nmd(g, m)).collect();
    let mut matrix = DenseMatrix::zeros(n, 6);
    for i in 0..n {
        let row = matrix.row_mut(i);
        row[0] = g.neighbors(i).len() as f64;
        for (c, col) in columns.iter().enumerate() {
            row[c + 1] = col[i] as f64;
        }
        if transform == Transform::Log1p {
            for v in row.iter_mut() {
                *v = v.ln_1p();
            }
        }
    }
    StructureMatrix { matrix, transform }
}
