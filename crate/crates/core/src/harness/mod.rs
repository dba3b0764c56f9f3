//! Datasets, gold labels, evaluation and run bookkeeping.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod metrics;
pub mod run;

pub use config::{BackendKind, HarnessConfig};
pub use dataset::{label_semantic_correctness, load_examples, DatasetExample, DbRegistry, Label};
pub use eval::{
    eval_correction, eval_detection, signal_microbench, CorrectionRecord, DetectionMode, DetectionRecord, EvalConfig,
};
pub use metrics::{result_multisets_equal, result_sets_equal};
