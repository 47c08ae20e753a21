use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Batch inputs of the detection-and-anticipation objective.
#[derive(Debug, Clone, Copy)]
pub struct LossInputs<'a> {
    /// Foreground probability per candidate box, strictly inside (0, 1).
    pub cls_probs: &'a [f64],
    /// 1 for foreground, 0 for background.
    pub cls_targets: &'a [f64],
    pub boxes: &'a [[f64; 4]],
    pub box_targets: &'a [[f64; 4]],
    /// `[B, nouns]` unnormalized scores.
    pub noun_logits: &'a Tensor,
    pub noun_targets: &'a [usize],
    /// `[B, verbs]` unnormalized scores.
    pub verb_logits: &'a Tensor,
    pub verb_targets: &'a [usize],
    pub ttc_pred: &'a [f64],
    pub ttc_gt: &'a [f64],
    pub lambda: f64,
    pub n_cls: f64,
    pub n_reg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    /// Classification part of the box loss, already divided by `n_cls`.
    pub cls: f64,
    /// Regression part of the box loss, already scaled by `λ / n_reg`.
    pub reg: f64,
    pub noun: f64,
    pub verb: f64,
    pub ttc: f64,
    pub total: f64,
}

/// Smooth-L1 with unit transition point.
pub fn smooth_l1(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * a * a
    } else {
        a - 0.5
    }
}

fn mean_cross_entropy(logits: &Tensor, targets: &[usize], what: &str) -> Result<f64> {
    if logits.shape().len() != 2 || logits.rows() != targets.len() {
        return Err(Error::Shape(format!(
            "{what} logits {:?} for {} targets",
            logits.shape(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        let row = logits.row(r);
        if t >= row.len() {
            return Err(Error::Shape(format!(
                "{what} target {t} out of {} classes",
                row.len()
            )));
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        sum += log_z - row[t];
    }
    Ok(sum / targets.len() as f64)
}

/// `L_box + L_noun + L_verb + L_ttc`, where
/// `L_box = Σ BCE(p, p*) / N_cls + λ / N_reg · Σ p*·smoothL1(b − b*)` with the
/// smooth-L1 summed over the four coordinates, the class terms are mean
/// cross-entropies and `L_ttc` is the mean absolute error.
pub fn loss_total(x: &LossInputs<'_>) -> Result<LossBreakdown> {
    for (name, v) in [("lambda", x.lambda), ("n_cls", x.n_cls), ("n_reg", x.n_reg)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
    }
    let n = x.cls_probs.len();
    if x.cls_targets.len() != n || x.boxes.len() != n || x.box_targets.len() != n {
        return Err(Error::Shape(
            "box probabilities, labels, boxes and box targets differ in length".into(),
        ));
    }
    if x.ttc_pred.len() != x.ttc_gt.len() {
        return Err(Error::Shape(
            "ttc predictions and targets differ in length".into(),
        ));
    }

    let mut cls = 0.0;
    let mut reg = 0.0;
    for i in 0..n {
        let (p, t) = (x.cls_probs[i], x.cls_targets[i]);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Numeric(format!("box probability {p} is outside (0, 1)")));
        }
        if t != 0.0 && t != 1.0 {
            return Err(Error::Input(format!("box label {t} is not 0 or 1")));
        }
        cls -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        if t == 1.0 {
            reg += (0..4)
                .map(|k| smooth_l1(x.boxes[i][k] - x.box_targets[i][k]))
                .sum::<f64>();
        }
    }
    let cls = cls / x.n_cls;
    let reg = x.lambda / x.n_reg * reg;
    let noun = mean_cross_entropy(x.noun_logits, x.noun_targets, "noun")?;
    let verb = mean_cross_entropy(x.verb_logits, x.verb_targets, "verb")?;
    let ttc = if x.ttc_pred.is_empty() {
        0.0
    } else {
        x.ttc_pred
            .iter()
            .zip(x.ttc_gt)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / x.ttc_pred.len() as f64
    };
    if [cls, reg, noun, verb, ttc].iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("loss is not finite".into()));
    }
    Ok(LossBreakdown {
        cls,
        reg,
        noun,
        verb,
        ttc,
        total: cls + reg + noun + verb + ttc,
    })
}
