use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Cut a `[C, H, W]` map into non-overlapping `P x P` patches.
///
/// Patches are ordered row-major over the patch grid. Within a patch the
/// `P²·C` features are channel-major: all `P²` pixels (row-major) of channel
/// 0, then channel 1, and so on.
pub fn patchify(map: &Tensor, patch: usize) -> Result<Tensor> {
    let (c, h, w) = chw(map)?;
    check_divisible(h, w, patch)?;
    let (gh, gw) = (h / patch, w / patch);
    let width = patch * patch * c;
    let src = map.data();
    let mut out = Vec::with_capacity(src.len());
    for py in 0..gh {
        for px in 0..gw {
            for ch in 0..c {
                for dy in 0..patch {
                    let row = ch * h * w + (py * patch + dy) * w + px * patch;
                    out.extend_from_slice(&src[row..row + patch]);
                }
            }
        }
    }
    Tensor::new(vec![gh * gw, width], out)
}

/// Inverse of [`patchify`].
pub fn regroup(tokens: &Tensor, h: usize, w: usize, patch: usize, c: usize) -> Result<Tensor> {
    check_divisible(h, w, patch)?;
    let (gh, gw) = (h / patch, w / patch);
    let width = patch * patch * c;
    if tokens.shape() != [gh * gw, width] {
        return Err(Error::Shape(format!(
            "tokens {:?} do not regroup into [{c}, {h}, {w}] with patch {patch}",
            tokens.shape()
        )));
    }
    let src = tokens.data();
    let mut out = vec![0.0; c * h * w];
    let mut i = 0;
    for py in 0..gh {
        for px in 0..gw {
            for ch in 0..c {
                for dy in 0..patch {
                    let row = ch * h * w + (py * patch + dy) * w + px * patch;
                    out[row..row + patch].copy_from_slice(&src[i..i + patch]);
                    i += patch;
                }
            }
        }
    }
    Tensor::new(vec![c, h, w], out)
}

fn chw(map: &Tensor) -> Result<(usize, usize, usize)> {
    match map.shape() {
        [c, h, w] => Ok((*c, *h, *w)),
        s => Err(Error::Shape(format!("expected a [C, H, W] map, got {s:?}"))),
    }
}

fn check_divisible(h: usize, w: usize, patch: usize) -> Result<()> {
    if patch == 0 || !h.is_multiple_of(patch) || !w.is_multiple_of(patch) {
        return Err(Error::Shape(format!(
            "{h}x{w} map is not divisible into {patch}x{patch} patches"
        )));
    }
    Ok(())
}
