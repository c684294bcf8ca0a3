//! Attributed-graph data model, dataset ingestion, and the symmetric
//! adjacency normalization shared by every downstream stage.
//!
//! Graphs are undirected, unweighted and simple: directed input is
//! symmetrized on load, duplicate edges are collapsed, self-loops dropped.
//! Adjacency lives in CSR form with sorted neighbor lists so the motif
//! census can intersect neighborhoods by merge.

use crate::nn::{CsrMatrix, DenseMatrix};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}:{line}: node id {id} out of bounds (n = {n})")]
    IdOutOfBounds {
        path: String,
        line: usize,
        id: usize,
        n: usize,
    },
    #[error("{path}:{line}: duplicate attribute entry for ({i}, {j})")]
    DuplicateEntry {
        path: String,
        line: usize,
        i: usize,
        j: usize,
    },
    #[error("{path}:{line}: non-finite value")]
    NonFinite { path: String, line: usize },
    #[error("node id {id} out of range (n = {n})")]
    NodeOutOfRange { id: usize, n: usize },
    #[error("{path}: expected {expected} label lines, found {found}")]
    LabelCount {
        path: String,
        expected: usize,
        found: usize,
    },
}

/// Undirected attributed graph: CSR adjacency plus an n×d attribute matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph {
    n: usize,
    /// CSR offsets, length n+1.
    offsets: Vec<usize>,
    /// Sorted neighbor lists, concatenated.
    neighbors: Vec<usize>,
    attributes: DenseMatrix,
}

impl AttributedGraph {
    /// Build from an undirected edge set. Duplicates and self-loops are
    /// removed; each surviving edge is stored in both endpoint lists.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], attributes: DenseMatrix) -> Self {
        assert!(
            attributes.rows() == n || attributes.rows() == 0,
            "attribute row count must match n"
        );
        let mut edge_set: Vec<(usize, usize)> = edges
            .iter()
            .filter(|&&(u, v)| u != v)
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect();
        edge_set.sort_unstable();
        edge_set.dedup();

        let mut degree = vec![0usize; n];
        for &(u, v) in &edge_set {
            assert!(v < n, "edge endpoint out of range");
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets.clone();
        let mut neighbors = vec![0usize; offsets[n]];
        for &(u, v) in &edge_set {
            neighbors[cursor[u]] = v;
            cursor[u] += 1;
            neighbors[cursor[v]] = u;
            cursor[v] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        let attributes = if attributes.rows() == 0 {
            DenseMatrix::zeros(n, 0)
        } else {
            attributes
        };
        Self { n, offsets, neighbors, attributes }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn attr_dim(&self) -> usize {
        self.attributes.cols()
    }

    pub fn attributes(&self) -> &DenseMatrix {
        &self.attributes
    }

    /// Sorted neighbor list of `i`, self excluded.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Number of distinct neighbors of `i`, excluding itself.
    pub fn degree(&self, i: usize) -> Result<usize, GraphError> {
        if i >= self.n {
            return Err(GraphError::NodeOutOfRange { id: i, n: self.n });
        }
        Ok(self.offsets[i + 1] - self.offsets[i])
    }

    /// Iterate each undirected edge once, as (u, v) with u < v, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    /// New graph with `extra` edges merged in; attributes untouched.
    pub fn with_edges_added(&self, extra: &[(usize, usize)]) -> Self {
        let mut edges: Vec<(usize, usize)> = self.edges().collect();
        edges.extend_from_slice(extra);
        Self::from_edges(self.n, &edges, self.attributes.clone())
    }

    /// New graph with the attribute row of `node` replaced.
    pub fn with_attribute_row(&self, node: usize, row: &[f64]) -> Self {
        assert_eq!(row.len(), self.attr_dim());
        let mut g = self.clone();
        g.attributes.row_mut(node).copy_from_slice(row);
        g
    }

    /// New graph with the whole attribute matrix replaced.
    pub fn with_attributes(&self, attributes: DenseMatrix) -> Self {
        assert_eq!(attributes.rows(), self.n, "attribute row count must match n");
        let mut g = self.clone();
        g.attributes = attributes;
        g
    }

    /// Serialize the edge set in "u v" lines (u < v, ascending).
    pub fn edge_list_string(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Serialize attributes as sparse "i j v" triples, row-major order.
    pub fn attribute_triples_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for (j, &v) in self.attributes.row(i).iter().enumerate() {
                if v != 0.0 {
                    let _ = writeln!(out, "{i} {j} {v}");
                }
            }
        }
        out
    }
}

/// Symmetrically normalized adjacency Ā = D̃^{-1/2} Ã D̃^{-1/2}, Ã = A + I.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    matrix: CsrMatrix,
}

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }
}

/// Ā as above; every node gains a self-loop, so isolated nodes get d̃ = 1
/// and a diagonal entry of 1.
pub fn normalize_adjacency(g: &AttributedGraph) -> NormalizedAdjacency {
    let n = g.node_count();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / ((g.neighbors(i).len() + 1) as f64).sqrt())
        .collect();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let nbrs = g.neighbors(i);
        // The diagonal is written as exactly 1/d̃ᵢ rather than (1/√d̃ᵢ)².
        let diagonal = 1.0 / (nbrs.len() + 1) as f64;
        let mut row = Vec::with_capacity(nbrs.len() + 1);
        let mut self_inserted = false;
        for &j in nbrs {
            if !self_inserted && j > i {
                row.push((i, diagonal));
                self_inserted = true;
            }
            row.push((j, inv_sqrt[i] * inv_sqrt[j]));
        }
        if !self_inserted {
            row.push((i, diagonal));
        }
        entries.push(row);
    }
    NormalizedAdjacency {
        matrix: CsrMatrix::from_row_entries(n, n, &entries),
    }
}

/// Graph + optional ground-truth labels under one dataset name.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub graph: AttributedGraph,
    pub labels: Option<Vec<u8>>,
    pub name: String,
}

fn read_to_string(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_usize(tok: &str, path: &str, line: usize) -> Result<usize, GraphError> {
    tok.parse().map_err(|_| GraphError::Parse {
        path: path.to_string(),
        line,
        msg: format!("expected integer, got {tok:?}"),
    })
}

/// Load a whitespace-separated edge list. Lines starting with '#' are
/// ignored. Reversed and duplicate pairs are collapsed; self-loop lines
/// dropped. Node count is max id + 1, or `n_hint` when given (ids must
/// then stay below it).
pub fn load_edge_list(path: &Path, n_hint: Option<usize>) -> Result<AttributedGraph, GraphError> {
    let text = read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut edges = Vec::new();
    let mut max_id = 0usize;
    let mut saw_node = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let u = parse_usize(it.next().unwrap(), &path_str, line)?;
        let v = match it.next() {
            Some(tok) => parse_usize(tok, &path_str, line)?,
            None => {
                return Err(GraphError::Parse {
                    path: path_str,
                    line,
                    msg: "expected two node ids".into(),
                })
            }
        };
        if it.next().is_some() {
            return Err(GraphError::Parse {
                path: path_str,
                line,
                msg: "expected exactly two node ids".into(),
            });
        }
        if let Some(n) = n_hint {
            let bad = if u >= n {
                Some(u)
            } else if v >= n {
                Some(v)
            } else {
                None
            };
            if let Some(id) = bad {
                return Err(GraphError::IdOutOfBounds { path: path_str, line, id, n });
            }
        }
        max_id = max_id.max(u).max(v);
        saw_node = true;
        if u != v {
            edges.push((u, v));
        }
    }
    let n = n_hint.unwrap_or(if saw_node { max_id + 1 } else { 0 });
    Ok(AttributedGraph::from_edges(n, &edges, DenseMatrix::zeros(0, 0)))
}

/// Attribute file format, chosen from the file extension: `.dense` means
/// one whitespace-separated row of d values per line; anything else is
/// sparse "node feature value" triples.
fn is_dense_extension(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("dense") | Some("mat")
    )
}

/// Load an n×d attribute matrix. Sparse triples are strict: a repeated
/// (node, feature) coordinate is an error. Unmentioned entries are 0.
pub fn load_attributes(path: &Path, n: usize, d: usize) -> Result<DenseMatrix, GraphError> {
    let text = read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut matrix = DenseMatrix::zeros(n, d);
    if is_dense_extension(path) {
        let mut row = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if row >= n {
                return Err(GraphError::Parse {
                    path: path_str,
                    line,
                    msg: format!("more than {n} attribute rows"),
                });
            }
            let values: Result<Vec<f64>, _> = trimmed
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect();
            let values = values.map_err(|_| GraphError::Parse {
                path: path_str.clone(),
                line,
                msg: "expected real values".into(),
            })?;
            if values.len() != d {
                return Err(GraphError::Parse {
                    path: path_str,
                    line,
                    msg: format!("expected {d} values, got {}", values.len()),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(GraphError::NonFinite { path: path_str, line });
            }
            matrix.row_mut(row).copy_from_slice(&values);
            row += 1;
        }
        if row != n {
            return Err(GraphError::Parse {
                path: path_str,
                line: 0,
                msg: format!("expected {n} attribute rows, got {row}"),
            });
        }
    } else {
        let mut seen = vec![false; n * d];
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(GraphError::Parse {
                    path: path_str,
                    line,
                    msg: "expected 'node feature value' triple".into(),
                });
            }
            let i = parse_usize(toks[0], &path_str, line)?;
            let j = parse_usize(toks[1], &path_str, line)?;
            if i >= n {
                return Err(GraphError::IdOutOfBounds { path: path_str, line, id: i, n });
            }
            if j >= d {
                return Err(GraphError::IdOutOfBounds { path: path_str, line, id: j, n: d });
            }
            let v: f64 = toks[2].parse().map_err(|_| GraphError::Parse {
                path: path_str.clone(),
                line,
                msg: format!("expected real value, got {:?}", toks[2]),
            })?;
            if !v.is_finite() {
                return Err(GraphError::NonFinite { path: path_str, line });
            }
            if seen[i * d + j] {
                return Err(GraphError::DuplicateEntry { path: path_str, line, i, j });
            }
            seen[i * d + j] = true;
            matrix.set(i, j, v);
        }
    }
    Ok(matrix)
}

/// Infer the attribute dimension of a sparse triple file (max feature id + 1).
pub fn infer_attr_dim(path: &Path) -> Result<usize, GraphError> {
    let text = read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut max_j = None;
    for (lineno, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(GraphError::Parse {
                path: path_str,
                line: lineno + 1,
                msg: "expected 'node feature value' triple".into(),
            });
        }
        let j = parse_usize(toks[1], &path_str, lineno + 1)?;
        max_j = Some(max_j.map_or(j, |m: usize| m.max(j)));
    }
    Ok(max_j.map_or(0, |m| m + 1))
}

/// Load a binary label file: one 0/1 per line, exactly n lines.
pub fn load_labels(path: &Path, n: usize) -> Result<Vec<u8>, GraphError> {
    let text = read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut labels = Vec::with_capacity(n);
    for (lineno, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match trimmed {
            "0" => labels.push(0),
            "1" => labels.push(1),
            other => {
                return Err(GraphError::Parse {
                    path: path_str,
                    line: lineno + 1,
                    msg: format!("expected 0 or 1, got {other:?}"),
                })
            }
        }
    }
    if labels.len() != n {
        return Err(GraphError::LabelCount {
            path: path_str,
            expected: n,
            found: labels.len(),
        });
    }
    Ok(labels)
}

/// Seeded Erdős–Rényi G(n, p) graph without attributes; used by tests
/// and benchmarks.
pub fn erdos_renyi(n: usize, p: f64, rng: &mut rand_chacha::ChaCha8Rng) -> AttributedGraph {
    use rand::Rng;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_range(0.0..1.0) < p {
                edges.push((u, v));
            }
        }
    }
    AttributedGraph::from_edges(n, &edges, DenseMatrix::zeros(0, 0))
}

/// Compact arbitrary (possibly sparse) node ids to dense 0-based ids.
/// Returns the edge list under new ids plus the old→new mapping in
/// ascending old-id order.
pub fn remap_ids(edges: &[(usize, usize)]) -> (Vec<(usize, usize)>, BTreeMap<usize, usize>) {
    let mut mapping = BTreeMap::new();
    for &(u, v) in edges {
        mapping.entry(u).or_insert(0);
        mapping.entry(v).or_insert(0);
    }
    for (next, (_, new_id)) in mapping.iter_mut().enumerate() {
        *new_id = next;
    }
    let remapped = edges
        .iter()
        .map(|&(u, v)| (mapping[&u], mapping[&v]))
        .collect();
    (remapped, mapping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_file(contents: &str, ext: &str) -> std::path::PathBuf {
        static COUNTER: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
        let id = COUNTER.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        let path = std::env::temp_dir().join(format!(
            "guide-graph-test-{}-{id}.{ext}",
            std::process::id()
        ));
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn load_dedups_and_drops_self_loops() {
        let path = temp_file("0 1\n1 0\n1 1\n", "edges");
        let g = load_edge_list(&path, None).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(0, 1));
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn empty_file_with_hint_gives_isolated_nodes() {
        let path = temp_file("", "edges");
        let g = load_edge_list(&path, Some(3)).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 0);
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let path = temp_file("0 1\nnope\n", "edges");
        let err = load_edge_list(&path, None).unwrap_err();
        match err {
            GraphError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn id_beyond_hint_is_bounds_error() {
        let path = temp_file("0 5\n", "edges");
        let err = load_edge_list(&path, Some(3)).unwrap_err();
        assert!(matches!(err, GraphError::IdOutOfBounds { id: 5, n: 3, .. }));
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn comments_are_ignored() {
        let path = temp_file("# a comment\n0 1\n", "edges");
        let g = load_edge_list(&path, None).unwrap();
        assert_eq!(g.edge_count(), 1);
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn sparse_attribute_triples() {
        let path = temp_file("0 2 1.0\n", "attrs");
        let m = load_attributes(&path, 2, 3).unwrap();
        assert_eq!(m.row(0), &[0.0, 0.0, 1.0]);
        assert_eq!(m.row(1), &[0.0, 0.0, 0.0]);
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn duplicate_triple_is_error() {
        let path = temp_file("0 2 1.0\n0 2 2.0\n", "attrs");
        let err = load_attributes(&path, 2, 3).unwrap_err();
        assert!(matches!(err, GraphError::DuplicateEntry { i: 0, j: 2, .. }));
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn dense_attribute_rows() {
        let path = temp_file("1 0 2\n0 3 0\n", "dense");
        let m = load_attributes(&path, 2, 3).unwrap();
        assert_eq!(m.row(0), &[1.0, 0.0, 2.0]);
        assert_eq!(m.row(1), &[0.0, 3.0, 0.0]);
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn degree_cases() {
        // 3-star centered on 0.
        let g = AttributedGraph::from_edges(
            4,
            &[(0, 1), (0, 2), (0, 3)],
            DenseMatrix::zeros(0, 0),
        );
        assert_eq!(g.degree(0).unwrap(), 3);
        assert_eq!(g.degree(1).unwrap(), 1);
        let isolated = AttributedGraph::from_edges(1, &[], DenseMatrix::zeros(0, 0));
        assert_eq!(isolated.degree(0).unwrap(), 0);
        assert!(isolated.degree(1).is_err());
    }

    /// Five-node graph used in the worked motif-degree example: edges
    /// ac, ae, bd, be, cd, ce, de with a=0, b=1, c=2, d=3, e=4.
    pub(crate) fn worked_example_graph() -> AttributedGraph {
        AttributedGraph::from_edges(
            5,
            &[(0, 2), (0, 4), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)],
            DenseMatrix::zeros(0, 0),
        )
    }

    #[test]
    fn worked_example_degree_of_e_is_4() {
        let g = worked_example_graph();
        assert_eq!(g.degree(4).unwrap(), 4);
    }

    #[test]
    fn normalize_isolated_node() {
        let g = AttributedGraph::from_edges(1, &[], DenseMatrix::zeros(0, 0));
        let a = normalize_adjacency(&g);
        assert_eq!(a.matrix().get(0, 0), 1.0);
    }

    #[test]
    fn normalize_single_edge() {
        let g = AttributedGraph::from_edges(2, &[(0, 1)], DenseMatrix::zeros(0, 0));
        let a = normalize_adjacency(&g);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.matrix().get(i, j) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalize_path_graph() {
        // Hand computation of D̃^{-1/2}ÃD̃^{-1/2} on 0-1-2: d̃ = [2, 3, 2].
        let g = AttributedGraph::from_edges(3, &[(0, 1), (1, 2)], DenseMatrix::zeros(0, 0));
        let a = normalize_adjacency(&g);
        let m = a.matrix();
        assert!((m.get(0, 1) - 1.0 / 6.0_f64.sqrt()).abs() < 1e-15);
        assert!((m.get(0, 1) - 0.4082).abs() < 1e-4);
        assert_eq!(m.get(0, 2), 0.0);
        assert!((m.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((m.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn normalized_adjacency_symmetry_and_diagonal() {
        let g = AttributedGraph::from_edges(
            6,
            &[(0, 1), (1, 2), (2, 3), (3, 0), (1, 4)],
            DenseMatrix::zeros(0, 0),
        );
        let a = normalize_adjacency(&g);
        let m = a.matrix();
        for i in 0..6 {
            let deg_tilde = (g.neighbors(i).len() + 1) as f64;
            assert_eq!(m.get(i, i), 1.0 / deg_tilde);
            let row_sum: f64 = m.row_entries(i).map(|(_, v)| v).sum();
            assert!(row_sum > 0.0 && row_sum <= 1.0 + g.neighbors(i).len() as f64);
            for j in 0..6 {
                assert_eq!(m.get(i, j), m.get(j, i), "symmetry at ({i},{j})");
                let expected_nonzero = i == j || g.has_edge(i, j);
                assert_eq!(m.get(i, j) != 0.0, expected_nonzero);
                assert!(m.get(i, j) >= 0.0 && m.get(i, j) <= 1.0);
            }
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = AttributedGraph::from_edges(
            5,
            &[(3, 1), (0, 4), (1, 0), (2, 3)],
            DenseMatrix::zeros(0, 0),
        );
        let path = temp_file(&g.edge_list_string(), "edges");
        let reloaded = load_edge_list(&path, Some(5)).unwrap();
        let original: Vec<_> = g.edges().collect();
        let back: Vec<_> = reloaded.edges().collect();
        assert_eq!(original, back);
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn remap_compacts_sparse_ids() {
        let (edges, mapping) = remap_ids(&[(10, 40), (40, 7)]);
        assert_eq!(mapping[&7], 0);
        assert_eq!(mapping[&10], 1);
        assert_eq!(mapping[&40], 2);
        assert_eq!(edges, vec![(1, 2), (2, 0)]);
    }

    #[test]
    fn labels_strict_parse() {
        let path = temp_file("0\n1\n0\n", "labels");
        assert_eq!(load_labels(&path, 3).unwrap(), vec![0, 1, 0]);
        let bad = temp_file("0\n2\n", "labels");
        assert!(load_labels(&bad, 2).is_err());
        fs::remove_file(path).unwrap();
        fs::remove_file(bad).unwrap();
    }
}
