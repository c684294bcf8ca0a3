//! Higher-order structure based anomaly detection on attributed networks.
//!
//! The pipeline: load an attributed graph, compute per-node motif degrees
//! (the structure matrix), inject ground-truth structural and attribute
//! anomalies, train a dual autoencoder (GCN branch on attributes, graph
//! node attention branch on structure), then rank nodes by reconstruction
//! error and evaluate the ranking.

pub mod graph;
pub mod inject;
pub mod metrics;
pub mod model;
pub mod motif;
pub mod nn;
pub mod pipeline;

pub use graph::{AttributedGraph, DatasetBundle, NormalizedAdjacency};
pub use inject::{InjectionResult, InjectionSpec};
pub use metrics::{CurvePoints, ScoredRanking};
pub use model::{GuideModel, LayerKind, ModelConfig, TrainedGuide};
pub use motif::{Motif, StructureMatrix, Transform};
pub use nn::DenseMatrix;
pub use pipeline::{RunConfig, RunReport};
