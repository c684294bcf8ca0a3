//! `guide` — anomaly detection on attributed networks from the command
//! line. Subcommands cover each pipeline stage plus the full experiment;
//! flags override config-file keys; failures exit nonzero with the
//! failing stage named.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use guide_core::graph::{self, remap_ids};
use guide_core::inject::{inject, InjectionSpec};
use guide_core::model::{score_nodes, train_with_context, GraphContext, LayerKind, ModelConfig};
use guide_core::motif::{build_structure_matrix, census_totals, FourShape, Transform};
use guide_core::pipeline::{
    self, derive_seed, evaluate_scores, load_dataset, load_scores, run_pipeline, scores_tsv,
    RunConfig, SweepAxis,
};
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "guide",
    about = "Higher-order structure based anomaly detection on attributed networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Root seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override
    #[arg(long)]
    output: Option<PathBuf>,
    /// Clique size p
    #[arg(long)]
    p: Option<usize>,
    /// Clique count q ("auto" for the 5%-of-n rule)
    #[arg(long)]
    q: Option<String>,
    /// Candidate-pool size k
    #[arg(long)]
    k: Option<usize>,
    /// Loss balance alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Embedding dimension
    #[arg(long)]
    embedding_dim: Option<usize>,
    /// Structure encoder: gna or gcn
    #[arg(long)]
    structure_encoder: Option<String>,
    /// Structure decoder: gna or gcn
    #[arg(long)]
    structure_decoder: Option<String>,
}

impl Overrides {
    fn apply(&self, config: &mut RunConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.output {
            config.output = out.clone();
        }
        if let Some(p) = self.p {
            config.inject.clique_size = p;
        }
        if let Some(q) = &self.q {
            config.inject.clique_count = if q == "auto" {
                None
            } else {
                Some(q.parse().context("--q must be an integer or 'auto'")?)
            };
        }
        if let Some(k) = self.k {
            config.inject.candidate_pool = k;
        }
        if let Some(alpha) = self.alpha {
            config.model.alpha = alpha;
        }
        if let Some(epochs) = self.epochs {
            config.model.epochs = epochs;
        }
        if let Some(lr) = self.lr {
            config.model.lr = lr;
        }
        if let Some(dim) = self.embedding_dim {
            config.model.embedding_dim = dim;
        }
        if let Some(kind) = &self.structure_encoder {
            config.model.structure_encoder = parse_kind(kind)?;
        }
        if let Some(kind) = &self.structure_decoder {
            config.model.structure_decoder = parse_kind(kind)?;
        }
        Ok(())
    }
}

fn parse_kind(s: &str) -> Result<LayerKind> {
    match s.to_ascii_lowercase().as_str() {
        "gna" => Ok(LayerKind::Gna),
        "gcn" => Ok(LayerKind::Gcn),
        other => bail!("layer kind must be gna or gcn, got {other:?}"),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate an edge list, compact arbitrary node ids, and write a
    /// canonical 0-based edge list plus the id mapping.
    Ingest {
        /// Input edge list ("u v" per line, '#' comments allowed)
        #[arg(long)]
        edges: PathBuf,
        /// Output directory
        #[arg(long, default_value = "ingested")]
        out: PathBuf,
    },
    /// Inject structural and attribute anomalies into a dataset.
    Inject {
        /// Run configuration file
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Motif census: per-motif totals plus the n×6 structure matrix.
    Census {
        /// Edge list to analyze
        #[arg(long)]
        edges: PathBuf,
        /// Structure-matrix output file
        #[arg(long, default_value = "structure.tsv")]
        out: PathBuf,
        /// raw or log1p entries in the matrix file
        #[arg(long, default_value = "raw")]
        transform: String,
    },
    /// Train on the dataset exactly as given (inject first if ground
    /// truth is wanted) and write checkpoint, loss trace, and scores.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compute ranking metrics from a scores file and a labels file.
    Evaluate {
        /// Scores file: "node<TAB>score" per line
        #[arg(long)]
        scores: PathBuf,
        /// Labels file: one 0/1 per line
        #[arg(long)]
        labels: PathBuf,
        /// Comma-separated K values for Recall@K
        #[arg(long, default_value = "50,100,150")]
        k: String,
        /// Output directory for metrics.json and curve CSVs
        #[arg(long, default_value = "evaluation")]
        out: PathBuf,
    },
    /// Full pipeline: ingest → inject → census → train → score → evaluate.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// One-axis parameter sweep with a shared injection.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// alpha or embedding_dim
        #[arg(long)]
        axis: String,
        /// Comma-separated values
        #[arg(long)]
        values: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn main() {
    if let Err(e) = dispatch() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_config(path: &PathBuf, overrides: &Overrides) -> Result<RunConfig> {
    let mut config = RunConfig::from_file(path)?;
    overrides.apply(&mut config)?;
    Ok(config)
}

fn dispatch() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { edges, out } => cmd_ingest(&edges, &out),
        Command::Inject { config, overrides } => cmd_inject(&load_config(&config, &overrides)?),
        Command::Census { edges, out, transform } => cmd_census(&edges, &out, &transform),
        Command::Train { config, overrides } => cmd_train(&load_config(&config, &overrides)?),
        Command::Evaluate { scores, labels, k, out } => cmd_evaluate(&scores, &labels, &k, &out),
        Command::Run { config, overrides } => {
            let report = run_pipeline(&load_config(&config, &overrides)?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Sweep { config, axis, values, overrides } => {
            cmd_sweep(&load_config(&config, &overrides)?, &axis, &values)
        }
    }
}

fn cmd_ingest(edges: &PathBuf, out: &PathBuf) -> Result<()> {
    let text = fs::read_to_string(edges)
        .with_context(|| format!("[ingest] cannot read {}", edges.display()))?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.and_then(|t| t.parse().ok())
                .with_context(|| format!("[ingest] {}:{}: bad edge line", edges.display(), lineno + 1))
        };
        let u = parse(it.next())?;
        let v = parse(it.next())?;
        pairs.push((u, v));
    }
    let (remapped, mapping) = remap_ids(&pairs);
    fs::create_dir_all(out).context("[ingest] cannot create output dir")?;
    let mut edge_text = String::new();
    let mut dedup: Vec<(usize, usize)> = remapped
        .iter()
        .filter(|&&(u, v)| u != v)
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect();
    dedup.sort_unstable();
    dedup.dedup();
    for (u, v) in &dedup {
        edge_text.push_str(&format!("{u} {v}\n"));
    }
    fs::write(out.join("canonical.edges"), edge_text).context("[ingest] write failed")?;
    let mut map_text = String::from("original\tcanonical\n");
    for (old, new) in &mapping {
        map_text.push_str(&format!("{old}\t{new}\n"));
    }
    fs::write(out.join("id_map.tsv"), map_text).context("[ingest] write failed")?;
    println!(
        "ingested: {} nodes, {} undirected edges -> {}",
        mapping.len(),
        dedup.len(),
        out.display()
    );
    Ok(())
}

fn cmd_inject(config: &RunConfig) -> Result<()> {
    let graph = load_dataset(config)?;
    let spec = InjectionSpec {
        clique_size: config.inject.clique_size,
        clique_count: config.inject.clique_count,
        candidate_pool: config.inject.candidate_pool,
        seed: derive_seed(config.seed, "inject"),
        attribute_mode: config.inject.mode,
    };
    let result = inject(&graph, &spec).map_err(|e| anyhow::anyhow!("[inject] {e}"))?;
    fs::create_dir_all(&config.output).context("[inject] cannot create output dir")?;
    fs::write(
        config.output.join("injected.edges"),
        result.graph.edge_list_string(),
    )
    .context("[inject] write failed")?;
    fs::write(
        config.output.join("injected.attrs"),
        result.graph.attribute_triples_string(),
    )
    .context("[inject] write failed")?;
    let labels: String = result.labels.iter().map(|l| format!("{l}\n")).collect();
    fs::write(config.output.join("labels.txt"), labels).context("[inject] write failed")?;
    println!(
        "injected: {} structural + {} attribute anomalies over {} nodes (p={}, q={}, k={}) -> {}",
        result.structural_ids.len(),
        result.attribute_ids.len(),
        graph.node_count(),
        spec.clique_size,
        spec.resolved_clique_count(graph.node_count()),
        spec.candidate_pool,
        config.output.display()
    );
    Ok(())
}

fn cmd_census(edges: &PathBuf, out: &PathBuf, transform: &str) -> Result<()> {
    let transform = match transform {
        "raw" => Transform::Raw,
        "log1p" => Transform::Log1p,
        other => bail!("[census] transform must be raw or log1p, got {other:?}"),
    };
    let graph = graph::load_edge_list(edges, None).map_err(|e| anyhow::anyhow!("[census] {e}"))?;
    let totals = census_totals(&graph);
    println!("nodes\t{}", graph.node_count());
    println!("edges\t{}", graph.edge_count());
    println!("triangle\t{}", totals.triangle);
    println!("wedge\t{}", totals.wedge);
    for shape in FourShape::ALL {
        println!("{}\t{}", shape.label(), totals.four_total(shape));
    }
    let matrix = build_structure_matrix(&graph, transform);
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).context("[census] cannot create output dir")?;
        }
    }
    fs::write(out, matrix.to_tsv()).context("[census] write failed")?;
    println!("structure matrix -> {}", out.display());
    Ok(())
}

fn cmd_train(config: &RunConfig) -> Result<()> {
    let graph = load_dataset(config)?;
    let structure = build_structure_matrix(&graph, config.census_transform);
    let model_config = ModelConfig {
        seed: derive_seed(config.seed, "init"),
        ..config.model.clone()
    };
    let ctx = GraphContext::new(&graph);
    let trained = train_with_context(&ctx, graph.attributes(), structure.matrix(), &model_config)
        .map_err(|e| anyhow::anyhow!("[train] {e}"))?;
    fs::create_dir_all(&config.output).context("[train] cannot create output dir")?;
    guide_core::model::save_checkpoint(&trained.model, &config.output.join("model.ckpt"))
        .map_err(|e| anyhow::anyhow!("[train] {e}"))?;
    fs::write(config.output.join("loss_trace.csv"), trained.trace_csv())
        .context("[train] write failed")?;
    let ranking = score_nodes(
        &trained.model,
        &ctx,
        graph.attributes(),
        structure.matrix(),
        model_config.alpha,
    );
    fs::write(config.output.join("scores.tsv"), scores_tsv(&ranking))
        .context("[train] write failed")?;
    println!(
        "trained {} epochs, final loss {:.6} -> {}",
        model_config.epochs,
        trained.final_loss.total,
        config.output.display()
    );
    Ok(())
}

fn cmd_evaluate(scores: &PathBuf, labels: &PathBuf, k: &str, out: &PathBuf) -> Result<()> {
    let scores = load_scores(scores)?;
    let labels = graph::load_labels(labels, scores.len())
        .map_err(|e| anyhow::anyhow!("[evaluate] {e}"))?;
    let k_list: Vec<usize> = k
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .context("[evaluate] bad K list")?;
    let (summary, roc_csv, pr_csv) = evaluate_scores(&scores, &labels, &k_list)?;
    fs::create_dir_all(out).context("[evaluate] cannot create output dir")?;
    fs::write(out.join("roc.csv"), roc_csv).context("[evaluate] write failed")?;
    fs::write(out.join("pr.csv"), pr_csv).context("[evaluate] write failed")?;
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(out.join("metrics.json"), &json).context("[evaluate] write failed")?;
    println!("{json}");
    Ok(())
}

fn cmd_sweep(config: &RunConfig, axis: &str, values: &str) -> Result<()> {
    let axis = match axis {
        "alpha" => SweepAxis::Alpha,
        "embedding_dim" => SweepAxis::EmbeddingDim,
        other => bail!("[sweep] axis must be alpha or embedding_dim, got {other:?}"),
    };
    let values: Vec<f64> = values
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .context("[sweep] bad value list")?;
    let table = pipeline::sweep(config, axis, &values)?;
    print!("{}", table.to_csv());
    Ok(())
}
