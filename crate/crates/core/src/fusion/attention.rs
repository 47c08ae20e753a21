use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Scaled dot-product attention `softmax(QKᵀ/√d_k)·V`.
pub fn attention(q: &Tensor, k: &Tensor, v: &Tensor) -> Result<Tensor> {
    if q.cols() != k.cols() || k.rows() != v.rows() {
        return Err(Error::Shape(format!(
            "attention inputs disagree: Q {:?}, K {:?}, V {:?}",
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }
    let scale = 1.0 / (q.cols().max(1) as f64).sqrt();
    let scores = q.matmul(&k.transpose()?)?.map(|s| s * scale);
    softmax_rows(&scores).matmul(v)
}

/// `Concat(head_1..head_h)·W_O` with `head_i = Attention(Z·W_i, Z·W_i, Z·W_i)`.
///
/// Each head has a single `D x D/h` projection applied to queries, keys and
/// values alike.
pub fn multi_head(z: &Tensor, heads: &[Tensor], w_o: &Tensor) -> Result<Tensor> {
    let d = z.cols();
    if heads.is_empty() || !d.is_multiple_of(heads.len()) {
        return Err(Error::Config(format!(
            "model width {d} is not divisible by {} heads",
            heads.len()
        )));
    }
    let outputs = heads
        .iter()
        .map(|w| {
            let p = z.matmul(w)?;
            attention(&p, &p, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    Tensor::concat_cols(&outputs)?.matmul(w_o)
}
