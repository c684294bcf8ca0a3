//! End-to-end experiment orchestration: ingest → inject → census → train
//! → score → evaluate, plus one-axis parameter sweeps. A single flat
//! key-value config file drives everything; one root seed is split into
//! named sub-seeds so injection can stay fixed while the model varies.

use crate::graph::{self, AttributedGraph};
use crate::inject::{inject, AttributeMode, InjectionSpec};
use crate::metrics::{pr_auc, recall_at_k, roc_auc, ScoredRanking};
use crate::model::{save_checkpoint, score_nodes, train_with_context, GraphContext, LayerKind, ModelConfig};
use crate::motif::{census_totals, build_structure_matrix, Motif, Transform};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("[{stage}] {message}")]
    Stage { stage: &'static str, message: String },
    #[error("config error at {path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },
    #[error("config error: {0}")]
    ConfigValue(String),
}

fn stage<E: std::fmt::Display>(name: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage: name,
        message: e.to_string(),
    }
}

/// Split one root seed into independent named streams (FNV-1a over the
/// stream name, finished with a splitmix64 round).
pub fn derive_seed(root: u64, stream: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stream.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = root ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub name: String,
    pub edges: PathBuf,
    pub attributes: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub n: Option<usize>,
    pub attr_dim: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct InjectConfig {
    pub clique_size: usize,
    pub clique_count: Option<usize>,
    pub candidate_pool: usize,
    pub mode: AttributeMode,
}

impl Default for InjectConfig {
    fn default() -> Self {
        Self {
            clique_size: 15,
            clique_count: None,
            candidate_pool: 50,
            mode: AttributeMode::Copy,
        }
    }
}

/// Everything a full run needs; mirrors the config-file sections.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub inject: InjectConfig,
    pub census_transform: Transform,
    pub model: ModelConfig,
    pub eval_k: Vec<usize>,
    pub seed: u64,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn new(name: &str, edges: PathBuf, attributes: Option<PathBuf>, output: PathBuf) -> Self {
        Self {
            dataset: DatasetConfig {
                name: name.to_string(),
                edges,
                attributes,
                labels: None,
                n: None,
                attr_dim: None,
            },
            inject: InjectConfig::default(),
            census_transform: Transform::Log1p,
            model: ModelConfig::default(),
            eval_k: vec![50, 100, 150],
            seed: 0,
            output: output,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::ConfigValue(format!(
            "cannot read {}: {e}",
            path.display()
        )))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    /// Parse the flat `[section]` / `key = value` format. Unknown keys are
    /// rejected. Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path, origin: &str) -> Result<Self, PipelineError> {
        let mut config = RunConfig::new("dataset", PathBuf::new(), None, PathBuf::from("runs/out"));
        let mut section = String::new();
        let err = |line: usize, message: String| PipelineError::Config {
            path: origin.to_string(),
            line,
            message,
        };
        let resolve = |v: &str| -> PathBuf {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, format!("expected key = value, got {line:?}")))?;
            let key = key.trim();
            let value = value.trim();
            let parse_usize = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| err(line_no, format!("{key}: expected integer, got {v:?}")))
            };
            let parse_f64 = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| err(line_no, format!("{key}: expected number, got {v:?}")))
            };
            match (section.as_str(), key) {
                ("dataset", "name") => config.dataset.name = value.to_string(),
                ("dataset", "edges") => config.dataset.edges = resolve(value),
                ("dataset", "attributes") => config.dataset.attributes = Some(resolve(value)),
                ("dataset", "labels") => config.dataset.labels = Some(resolve(value)),
                ("dataset", "n") => config.dataset.n = Some(parse_usize(value)?),
                ("dataset", "attr_dim") => config.dataset.attr_dim = Some(parse_usize(value)?),
                ("inject", "p") => config.inject.clique_size = parse_usize(value)?,
                ("inject", "q") => {
                    config.inject.clique_count = if value == "auto" {
                        None
                    } else {
                        Some(parse_usize(value)?)
                    }
                }
                ("inject", "k") => config.inject.candidate_pool = parse_usize(value)?,
                ("inject", "mode") => {
                    config.inject.mode = match value {
                        "copy" => AttributeMode::Copy,
                        "swap" => AttributeMode::Swap,
                        other => return Err(err(line_no, format!("mode must be copy or swap, got {other:?}"))),
                    }
                }
                ("census", "transform") => {
                    config.census_transform = match value {
                        "raw" => Transform::Raw,
                        "log1p" => Transform::Log1p,
                        other => {
                            return Err(err(
                                line_no,
                                format!("transform must be raw or log1p, got {other:?}"),
                            ))
                        }
                    }
                }
                ("model", "attr_hidden") => {
                    config.model.attr_hidden = parse_two(value)
                        .ok_or_else(|| err(line_no, "attr_hidden needs two widths".into()))?
                }
                ("model", "struct_hidden") => {
                    config.model.struct_hidden = parse_two(value)
                        .ok_or_else(|| err(line_no, "struct_hidden needs two widths".into()))?
                }
                ("model", "embedding_dim") => config.model.embedding_dim = parse_usize(value)?,
                ("model", "alpha") => config.model.alpha = parse_f64(value)?,
                ("model", "epochs") => config.model.epochs = parse_usize(value)?,
                ("model", "lr") => config.model.lr = parse_f64(value)?,
                ("model", "dropout") => config.model.dropout = parse_f64(value)?,
                ("model", "structure_encoder") => {
                    config.model.structure_encoder = parse_layer_kind(value)
                        .ok_or_else(|| err(line_no, format!("bad layer kind {value:?}")))?
                }
                ("model", "structure_decoder") => {
                    config.model.structure_decoder = parse_layer_kind(value)
                        .ok_or_else(|| err(line_no, format!("bad layer kind {value:?}")))?
                }
                ("eval", "k_list") => {
                    let parsed: Result<Vec<usize>, _> = value
                        .split(',')
                        .map(|t| t.trim().parse::<usize>())
                        .collect();
                    config.eval_k = parsed
                        .map_err(|_| err(line_no, format!("k_list: bad integer list {value:?}")))?;
                }
                ("run", "seed") => {
                    config.seed = value
                        .parse::<u64>()
                        .map_err(|_| err(line_no, format!("seed: expected integer, got {value:?}")))?
                }
                ("run", "output") => config.output = resolve(value),
                (sec, k) => {
                    return Err(err(line_no, format!("unknown key {k:?} in section [{sec}]")))
                }
            }
        }
        if config.dataset.edges.as_os_str().is_empty() {
            return Err(PipelineError::ConfigValue(
                "dataset.edges is required".into(),
            ));
        }
        Ok(config)
    }
}

fn parse_two(value: &str) -> Option<[usize; 2]> {
    let parts: Vec<usize> = value
        .split(',')
        .map(|t| t.trim().parse::<usize>().ok())
        .collect::<Option<Vec<_>>>()?;
    if parts.len() == 2 {
        Some([parts[0], parts[1]])
    } else {
        None
    }
}

fn parse_layer_kind(value: &str) -> Option<LayerKind> {
    match value.to_ascii_lowercase().as_str() {
        "gna" => Some(LayerKind::Gna),
        "gcn" => Some(LayerKind::Gcn),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsSummary {
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub recall_at: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnomalyCounts {
    pub structural: usize,
    pub attribute: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub dataset: String,
    pub seed: u64,
    pub inject_seed: u64,
    pub init_seed: u64,
    pub nodes: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub attr_dim: usize,
    pub anomalies: AnomalyCounts,
    /// Motif totals of the perturbed graph the model was trained on.
    pub motif_totals: BTreeMap<String, u64>,
    pub epochs: usize,
    pub alpha: f64,
    pub final_loss: f64,
    pub metrics: MetricsSummary,
    pub threads: usize,
    pub timings_ms: BTreeMap<String, u128>,
    pub artifacts: BTreeMap<String, String>,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, PipelineError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(stage("write-artifacts"))?;
    Ok(path)
}

/// Load the dataset named by the config (ingest stage helper).
pub fn load_dataset(config: &RunConfig) -> Result<AttributedGraph, PipelineError> {
    let fail = stage("ingest");
    let g = graph::load_edge_list(&config.dataset.edges, config.dataset.n).map_err(&fail)?;
    match &config.dataset.attributes {
        Some(path) => {
            let d = match config.dataset.attr_dim {
                Some(d) => d,
                None => graph::infer_attr_dim(path).map_err(&fail)?,
            };
            let attrs = graph::load_attributes(path, g.node_count(), d).map_err(&fail)?;
            Ok(AttributedGraph::from_edges(
                g.node_count(),
                &g.edges().collect::<Vec<_>>(),
                attrs,
            ))
        }
        None => Ok(g),
    }
}

/// Scores file: one "node<TAB>score" line per node.
pub fn scores_tsv(ranking: &ScoredRanking) -> String {
    let mut out = String::new();
    for (node, &score) in ranking.scores().iter().enumerate() {
        let _ = writeln!(out, "{node}\t{score}");
    }
    out
}

/// Parse a scores file written by `scores_tsv`.
pub fn load_scores(path: &Path) -> Result<Vec<f64>, PipelineError> {
    let fail = stage::<String>("evaluate");
    let text = fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let node: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| fail(format!("line {}: bad node id", lineno + 1)))?;
        let score: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| fail(format!("line {}: bad score", lineno + 1)))?;
        entries.push((node, score));
    }
    let n = entries.len();
    let mut scores = vec![f64::NAN; n];
    for (node, score) in entries {
        if node >= n || !scores[node].is_nan() {
            return Err(fail(format!("node ids must cover 0..{n} exactly once")));
        }
        scores[node] = score;
    }
    Ok(scores)
}

/// Metrics from scores and labels, at the config's K values.
pub fn evaluate_scores(
    scores: &[f64],
    labels: &[u8],
    k_list: &[usize],
) -> Result<(MetricsSummary, String, String), PipelineError> {
    let fail = stage("evaluate");
    let (roc_curve, roc) = roc_auc(scores, labels).map_err(&fail)?;
    let (pr_curve, pr) = pr_auc(scores, labels).map_err(&fail)?;
    let ranking = ScoredRanking::new(scores.to_vec()).map_err(&fail)?;
    let mut recall_at = BTreeMap::new();
    for &k in k_list {
        let k = k.min(labels.len());
        recall_at.insert(k, recall_at_k(&ranking, labels, k).map_err(&fail)?);
    }
    Ok((
        MetricsSummary { roc_auc: roc, pr_auc: pr, recall_at },
        roc_curve.to_csv("fpr", "tpr"),
        pr_curve.to_csv("recall", "precision"),
    ))
}

/// Execute the whole experiment and write every artifact under the
/// config's output directory.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, PipelineError> {
    config
        .model
        .validate()
        .map_err(stage("configure"))?;
    fs::create_dir_all(&config.output).map_err(stage("configure"))?;
    let dir = &config.output;
    let mut timings: BTreeMap<String, u128> = BTreeMap::new();
    let mut artifacts: BTreeMap<String, String> = BTreeMap::new();

    // Ingest.
    let t0 = Instant::now();
    let raw_graph = load_dataset(config)?;
    timings.insert("ingest".into(), t0.elapsed().as_millis());

    // Inject.
    let t0 = Instant::now();
    let inject_seed = derive_seed(config.seed, "inject");
    let spec = InjectionSpec {
        clique_size: config.inject.clique_size,
        clique_count: config.inject.clique_count,
        candidate_pool: config.inject.candidate_pool,
        seed: inject_seed,
        attribute_mode: config.inject.mode,
    };
    let injected = inject(&raw_graph, &spec).map_err(stage("inject"))?;
    timings.insert("inject".into(), t0.elapsed().as_millis());
    let labels_text: String = injected
        .labels
        .iter()
        .map(|l| format!("{l}\n"))
        .collect();
    artifacts.insert(
        "labels".into(),
        write_artifact(dir, "labels.txt", &labels_text)?.display().to_string(),
    );
    artifacts.insert(
        "injected_edges".into(),
        write_artifact(dir, "injected.edges", &injected.graph.edge_list_string())?
            .display()
            .to_string(),
    );
    artifacts.insert(
        "injected_attributes".into(),
        write_artifact(dir, "injected.attrs", &injected.graph.attribute_triples_string())?
            .display()
            .to_string(),
    );

    // Census on the perturbed graph.
    let t0 = Instant::now();
    let structure = build_structure_matrix(&injected.graph, config.census_transform);
    let totals = census_totals(&injected.graph);
    timings.insert("census".into(), t0.elapsed().as_millis());
    artifacts.insert(
        "structure_matrix".into(),
        write_artifact(dir, "structure.tsv", &structure.to_tsv())?.display().to_string(),
    );
    let mut motif_totals = BTreeMap::new();
    motif_totals.insert(Motif::Triangle.label().to_string(), totals.triangle);
    motif_totals.insert(Motif::Wedge.label().to_string(), totals.wedge);
    for m in [Motif::FourClique, Motif::Diamond, Motif::FourCycle] {
        motif_totals.insert(
            m.label().to_string(),
            totals.four_total(match m {
                Motif::FourClique => crate::motif::FourShape::Clique,
                Motif::Diamond => crate::motif::FourShape::Diamond,
                _ => crate::motif::FourShape::Cycle,
            }),
        );
    }

    // Train.
    let t0 = Instant::now();
    let init_seed = derive_seed(config.seed, "init");
    let model_config = ModelConfig {
        seed: init_seed,
        ..config.model.clone()
    };
    let ctx = GraphContext::new(&injected.graph);
    let row_norm = |m: &crate::nn::DenseMatrix| -> crate::nn::DenseMatrix {
        let mut out = m.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for v in row.iter_mut() {
                    *v /= norm;
                }
            }
        }
        out
    };
    let x_model = row_norm(injected.graph.attributes());
    let s_model = row_norm(structure.matrix());
    let trained = train_with_context(
        &ctx,
        &x_model,
        &s_model,
        &model_config,
    )
    .map_err(stage("train"))?;
    timings.insert("train".into(), t0.elapsed().as_millis());
    let ckpt_path = dir.join("model.ckpt");
    save_checkpoint(&trained.model, &ckpt_path).map_err(stage("train"))?;
    artifacts.insert("checkpoint".into(), ckpt_path.display().to_string());
    artifacts.insert(
        "loss_trace".into(),
        write_artifact(dir, "loss_trace.csv", &trained.trace_csv())?.display().to_string(),
    );

    // Score.
    let t0 = Instant::now();
    let ranking = score_nodes(
        &trained.model,
        &ctx,
        &x_model,
        &s_model,
        model_config.alpha,
    );
    timings.insert("score".into(), t0.elapsed().as_millis());
    artifacts.insert(
        "scores".into(),
        write_artifact(dir, "scores.tsv", &scores_tsv(&ranking))?.display().to_string(),
    );

    // Evaluate.
    let t0 = Instant::now();
    let (metrics, roc_csv, pr_csv) =
        evaluate_scores(ranking.scores(), &injected.labels, &config.eval_k)?;
    timings.insert("evaluate".into(), t0.elapsed().as_millis());
    artifacts.insert(
        "roc_curve".into(),
        write_artifact(dir, "roc.csv", &roc_csv)?.display().to_string(),
    );
    artifacts.insert(
        "pr_curve".into(),
        write_artifact(dir, "pr.csv", &pr_csv)?.display().to_string(),
    );
    let metrics_json =
        serde_json::to_string_pretty(&metrics).map_err(stage("evaluate"))?;
    artifacts.insert(
        "metrics".into(),
        write_artifact(dir, "metrics.json", &metrics_json)?.display().to_string(),
    );

    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset: config.dataset.name.clone(),
        seed: config.seed,
        inject_seed,
        init_seed,
        nodes: raw_graph.node_count(),
        edges_before: raw_graph.edge_count(),
        edges_after: injected.graph.edge_count(),
        attr_dim: injected.graph.attr_dim(),
        anomalies: AnomalyCounts {
            structural: injected.structural_ids.len(),
            attribute: injected.attribute_ids.len(),
        },
        motif_totals,
        epochs: model_config.epochs,
        alpha: model_config.alpha,
        final_loss: trained.final_loss.total,
        metrics,
        threads: rayon::current_num_threads(),
        timings_ms: timings,
        artifacts,
    };
    let report_json = serde_json::to_string_pretty(&report).map_err(stage("report"))?;
    write_artifact(dir, "report.json", &report_json)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    EmbeddingDim,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::EmbeddingDim => "embedding_dim",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub roc_auc: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},roc_auc,error\n", self.axis);
        for row in &self.rows {
            let auc = row.roc_auc.map(|v| v.to_string()).unwrap_or_default();
            let err = row.error.clone().unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", row.value, auc, err);
        }
        out
    }
}

/// One pipeline run per value with a fresh model and one shared
/// injection, so labels are identical across the swept axis. Failed
/// cells are recorded and the sweep continues.
pub fn sweep(
    config: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<SweepTable, PipelineError> {
    if values.is_empty() {
        return Err(PipelineError::ConfigValue("sweep needs at least one value".into()));
    }
    fs::create_dir_all(&config.output).map_err(stage("configure"))?;
    let raw_graph = load_dataset(config)?;
    let inject_seed = derive_seed(config.seed, "inject");
    let spec = InjectionSpec {
        clique_size: config.inject.clique_size,
        clique_count: config.inject.clique_count,
        candidate_pool: config.inject.candidate_pool,
        seed: inject_seed,
        attribute_mode: config.inject.mode,
    };
    let injected = inject(&raw_graph, &spec).map_err(stage("inject"))?;
    let structure = build_structure_matrix(&injected.graph, config.census_transform);
    let ctx = GraphContext::new(&injected.graph);
    let init_seed = derive_seed(config.seed, "init");

    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut model_config = ModelConfig {
            seed: init_seed,
            ..config.model.clone()
        };
        match axis {
            SweepAxis::Alpha => model_config.alpha = value,
            SweepAxis::EmbeddingDim => model_config.embedding_dim = value as usize,
        }
        let cell = (|| -> Result<f64, PipelineError> {
            model_config.validate().map_err(stage("configure"))?;
            let trained = train_with_context(
                &ctx,
                injected.graph.attributes(),
                structure.matrix(),
                &model_config,
            )
            .map_err(stage("train"))?;
            let ranking = score_nodes(
                &trained.model,
                &ctx,
                injected.graph.attributes(),
                structure.matrix(),
                model_config.alpha,
            );
            let (_, auc) = roc_auc(ranking.scores(), &injected.labels).map_err(stage("evaluate"))?;
            Ok(auc)
        })();
        rows.push(match cell {
            Ok(auc) => SweepRow { value, roc_auc: Some(auc), error: None },
            Err(e) => SweepRow { value, roc_auc: None, error: Some(e.to_string()) },
        });
    }
    let table = SweepTable {
        axis: axis.label().to_string(),
        rows,
    };
    write_artifact(&config.output, "sweep.csv", &table.to_csv())?;
    Ok(table)
}
