//! Forward-only multimodal fusion kernel and training objective.

mod attention;
mod encoder;
mod fuse;
mod loss;
mod params;
mod patch;

pub use attention::{attention, multi_head, softmax_rows};
pub use encoder::{encoder_layer, encoder_stack, gelu, layer_norm, mlp, NORM_EPS};
pub use fuse::{fuse, fuse_scale, fuse_tokens, sinusoidal_positions};
pub use loss::{loss_total, smooth_l1, LossBreakdown, LossInputs};
pub use params::{FusionParams, LayerParams, ScaleParams, ScaleShape, SCALE_PATCHES};
pub use patch::{patchify, regroup};
