//! Evaluation: IoU, Top-5 mAP variants and context-quality metrics.

pub mod ap;
mod iou;
pub mod matching;
pub mod quality;
pub mod variant;

pub use ap::{average_precision, top5_map, ApAccumulator, ClassAp, EvalReport, FrameEval, VariantReport};
pub use iou::iou;
pub use matching::{match_top5, MatchOutcome, TOP_K};
pub use quality::{context_quality, QualityReport};
pub use variant::{Constraints, MatchVariant, VariantRegistry};
