//! Software-failure taxonomy classification and per-industry analytics.
//!
//! Incident records (a failure cause plus the affected industry) are sent
//! through a versioned classification prompt to a backend, normalized onto
//! a closed ten-label taxonomy, scored against gold labels, and aggregated
//! into per-industry failure counts with Markdown and SVG output.

pub mod analytics;
pub mod classifier;
pub mod cli;
pub mod evaluation;
pub mod fixtures;
pub mod fsutil;
pub mod ingestion;
pub mod parallel;
pub mod prompting;
pub mod reporting;
pub mod taxonomy;

pub use analytics::{aggregate, dominant_failure, BreakdownSet, IndustryBreakdown};
pub use classifier::{
    classify_dataset, classify_record, keyword_oracle, BackendConfig, BackendKind,
    ClassificationResult, Classifier, ClassifyError, ResponseCache,
};
pub use evaluation::{build_confusion, compute_metrics, diff_matrices, ConfusionMatrix, MetricsReport};
pub use ingestion::{load_dataset, validate_dataset, Dataset, DatasetFormat, IncidentRecord};
pub use prompting::{bundled_example_bank, render_prompt, FewShotExample, PromptVersion, RenderedPrompt};
pub use reporting::{render_chart, render_markdown_report, ChartSpec};
pub use taxonomy::{canonical_order, normalize_label, FailureType, Industry};
