use crate::error::{Error, Result};
use crate::fusion::encoder::encoder_stack;
use crate::fusion::params::ScaleParams;
use crate::fusion::patch::{patchify, regroup};
use crate::tensor::Tensor;

/// 1-D sinusoidal table: `sin` on even columns, `cos` on odd ones, with
/// wavelengths growing geometrically up to `10000·2π`.
pub fn sinusoidal_positions(n: usize, d: usize) -> Tensor {
    Tensor::from_fn(vec![n, d], |i| {
        let (pos, col) = (i / d, i % d);
        let freq = 10000f64.powf(-((col / 2 * 2) as f64) / d as f64);
        let angle = pos as f64 * freq;
        if col % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

/// Fuse patch tokens `[N, P²C]` with language tokens `[L, D_L]` and return
/// the fused patch tokens in the input layout.
pub fn fuse_tokens(patches: &Tensor, lang: &Tensor, p: &ScaleParams) -> Result<Tensor> {
    let s = &p.shape;
    if patches.shape().len() != 2 || patches.cols() != s.token_width() {
        return Err(Error::Shape(format!(
            "patch tokens {:?} do not have width {}",
            patches.shape(),
            s.token_width()
        )));
    }
    if lang.shape().len() != 2 || lang.cols() != s.lang_width {
        return Err(Error::Shape(format!(
            "language tokens {:?} do not have width {}",
            lang.shape(),
            s.lang_width
        )));
    }
    let n = patches.rows();
    let mut visual = patches.matmul(&p.w_p)?.add_row(&p.vf_emb)?;
    if p.positional {
        visual = visual.add(&sinusoidal_positions(n, s.width))?;
    }
    let language = lang.matmul(&p.w_l)?.add_row(&p.lf_emb)?;
    let z = Tensor::concat_rows(&[&visual, &language])?;
    let fused = encoder_stack(&z, &p.layers)?;
    fused.slice_rows(0, n)?.matmul(&p.w_out)
}

/// Fuse one `[C, H, W]` map.
pub fn fuse_scale(map: &Tensor, lang: &Tensor, p: &ScaleParams) -> Result<Tensor> {
    let s = &p.shape;
    let [c, h, w] = map.shape() else {
        return Err(Error::Shape(format!(
            "expected a [C, H, W] map, got {:?}",
            map.shape()
        )));
    };
    if *c != s.channels {
        return Err(Error::Shape(format!(
            "map has {c} channels, parameters expect {}",
            s.channels
        )));
    }
    let tokens = fuse_tokens(&patchify(map, s.patch)?, lang, p)?;
    regroup(&tokens, *h, *w, s.patch, *c)
}

/// Fuse every scale with its own parameters. The same language tokens are
/// fed to each scale.
pub fn fuse(maps: &[Tensor], lang: &Tensor, scales: &[ScaleParams]) -> Result<Vec<Tensor>> {
    if maps.len() != scales.len() {
        return Err(Error::Shape(format!(
            "{} feature maps for {} parameter scales",
            maps.len(),
            scales.len()
        )));
    }
    maps.iter()
        .zip(scales)
        .enumerate()
        .map(|(i, (m, p))| {
            fuse_scale(m, lang, p).map_err(|e| match e {
                Error::Shape(msg) => Error::Shape(format!("scale {i}: {msg}")),
                other => other,
            })
        })
        .collect()
}
