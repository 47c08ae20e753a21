//! Action-context summarization of egocentric video signals, Top-5 mAP
//! evaluation of next-object-interaction predictions, and a forward-only
//! multimodal fusion kernel.
//!
//! The pipeline for one video is: [`extract::extract_frame`] per frame,
//! [`aggregate::aggregate`] per category, a [`policy::ContextPolicy`] per
//! prediction frame, then [`assemble::assemble`]. [`summarize::summarize_video`]
//! runs all of it.

pub mod aggregate;
pub mod assemble;
pub mod config;
pub mod embedding;
pub mod error;
pub mod extract;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod model;
pub mod policy;
pub mod summarize;
pub mod tensor;

pub use config::{EvalParams, SummarizerConfig};
pub use error::{Error, Result};
pub use model::{
    ActionContext, ActionPair, BoundingBox, Category, Detection, FrameRecord, ObjectInteraction, PerCategory,
    Pos, Prediction, Segment, TaggedToken, Term,
};
pub use tensor::Tensor;
