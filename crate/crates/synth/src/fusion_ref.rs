//! Loop-level references for the fusion kernel and the training objective.

use context_forge_core::Tensor;

/// `softmax(QKᵀ/√d_k)·V` written with explicit loops.
pub fn naive_attention(q: &Tensor, k: &Tensor, v: &Tensor) -> Vec<Vec<f64>> {
    let (n, m, dk, dv) = (q.rows(), k.rows(), q.cols(), v.cols());
    let mut out = vec![vec![0.0; dv]; n];
    for (i, row) in out.iter_mut().enumerate() {
        let scores: Vec<f64> = (0..m)
            .map(|j| (0..dk).map(|c| q.at(i, c) * k.at(j, c)).sum::<f64>() / (dk as f64).sqrt())
            .collect();
        let top = scores.iter().cloned().fold(f64::MIN, f64::max);
        let weights: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        for (j, w) in weights.iter().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell += w / total * v.at(j, c);
            }
        }
    }
    out
}

pub fn binary_cross_entropy(p: f64, label: f64) -> f64 {
    if label == 1.0 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let z: f64 = logits.iter().map(|v| v.exp()).sum();
    -(logits[target].exp() / z).ln()
}

pub fn huber(x: f64) -> f64 {
    if x.abs() < 1.0 {
        x * x / 2.0
    } else {
        x.abs() - 0.5
    }
}
