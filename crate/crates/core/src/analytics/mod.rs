//! Statistics, text features and report tables over generation runs.

pub mod effects;
pub mod report;
pub mod stats;
pub mod text;

pub use effects::{example_effect_metrics, ConditionEffects, ExampleEffectRow, ExampleEffects};
pub use report::{analyze, emit_report, Analysis, AnalysisOptions, REPORT_FILES};
pub use stats::{
    spearman, wilcoxon_signed_rank, wilcoxon_signed_rank_with, StatError, StatMethod, StatResult, WilcoxonMethod,
};
pub use text::{tertile_table, text_features, TertileRow, TextFeature, TextFeatures};
