//! Dataset-wide per-class average precision and the Top-5 mAP.
//!
//! Per class, the scored (post top-5) predictions of the whole dataset are
//! ranked by confidence. Equal confidences form one operating point, so the
//! result does not depend on frame order. AP is the all-point interpolated
//! area under the precision-recall curve; mAP is the unweighted mean over
//! classes that have ground truth, reported on a 0-100 scale.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::config::EvalParams;
use crate::metrics::matching::match_top5;
use crate::metrics::variant::MatchVariant;
use crate::model::{ObjectInteraction, Prediction};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassTally {
    pub gt_count: usize,
    /// `(score, hit)` for every scored prediction of the class.
    pub scored: Vec<(f64, bool)>,
}

impl ClassTally {
    pub fn average_precision(&self) -> f64 {
        average_precision(&self.scored, self.gt_count)
    }
}

/// All-point interpolated AP of scored hit flags against `gt_count` positives.
pub fn average_precision(scored: &[(f64, bool)], gt_count: usize) -> f64 {
    if gt_count == 0 || scored.is_empty() {
        return 0.0;
    }
    let mut ranked = scored.to_vec();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));

    // one (recall, precision) point per distinct score
    let mut points: Vec<(f64, f64)> = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < ranked.len() {
        let score = ranked[i].0;
        while i < ranked.len() && ranked[i].0 == score {
            if ranked[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((tp as f64 / gt_count as f64, tp as f64 / (tp + fp) as f64));
    }

    let mut envelope = 0.0f64;
    for p in points.iter_mut().rev() {
        envelope = envelope.max(p.1);
        p.1 = envelope;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in points {
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// Streaming per-class accumulator for one variant. Accumulators merge
/// associatively, so frames can be matched in parallel.
#[derive(Clone)]
pub struct ApAccumulator {
    variant: Arc<dyn MatchVariant>,
    params: EvalParams,
    classes: BTreeMap<String, ClassTally>,
}

impl ApAccumulator {
    pub fn new(variant: Arc<dyn MatchVariant>, params: EvalParams) -> Self {
        Self {
            variant,
            params,
            classes: BTreeMap::new(),
        }
    }

    pub fn variant(&self) -> &dyn MatchVariant {
        self.variant.as_ref()
    }

    /// Match one frame and record its ground truth and scored predictions.
    pub fn add_frame(&mut self, preds: &[Prediction], gts: &[ObjectInteraction]) {
        for gt in gts {
            let key = self.variant.class_key(&gt.noun, &gt.verb);
            self.classes.entry(key).or_default().gt_count += 1;
        }
        for outcome in match_top5(preds, gts, self.variant.as_ref(), &self.params) {
            let pred = &preds[outcome.pred];
            let key = self
                .variant
                .class_key(&pred.interaction.noun, &pred.interaction.verb);
            self.classes
                .entry(key)
                .or_default()
                .scored
                .push((pred.score, outcome.hit));
        }
    }

    pub fn merge(&mut self, other: ApAccumulator) {
        for (key, tally) in other.classes {
            let mine = self.classes.entry(key).or_default();
            mine.gt_count += tally.gt_count;
            mine.scored.extend(tally.scored);
        }
    }

    pub fn classes(&self) -> &BTreeMap<String, ClassTally> {
        &self.classes
    }

    pub fn finish(&self) -> VariantReport {
        let per_class: Vec<ClassAp> = self
            .classes
            .iter()
            .map(|(class, tally)| ClassAp {
                class: class.clone(),
                ap: 100.0 * tally.average_precision(),
                gt_count: tally.gt_count,
                pred_count: tally.scored.len(),
                hits: tally.scored.iter().filter(|(_, h)| *h).count(),
            })
            .collect();
        let with_gt: Vec<f64> = per_class
            .iter()
            .filter(|c| c.gt_count > 0)
            .map(|c| c.ap)
            .collect();
        let map = if with_gt.is_empty() {
            0.0
        } else {
            with_gt.iter().sum::<f64>() / with_gt.len() as f64
        };
        VariantReport {
            variant: self.variant.name().to_string(),
            title: self.variant.title().to_string(),
            map,
            classes_with_gt: with_gt.len(),
            per_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAp {
    pub class: String,
    /// 0-100 scale.
    pub ap: f64,
    pub gt_count: usize,
    pub pred_count: usize,
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantReport {
    pub variant: String,
    pub title: String,
    /// 0-100 scale.
    pub map: f64,
    pub classes_with_gt: usize,
    pub per_class: Vec<ClassAp>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub frames: usize,
    pub variants: Vec<VariantReport>,
}

impl EvalReport {
    pub fn map_of(&self, variant: &str) -> Option<f64> {
        self.variants.iter().find(|v| v.variant == variant).map(|v| v.map)
    }
}

/// One evaluated frame: its predictions and ground truth.
pub struct FrameEval<'a> {
    pub preds: &'a [Prediction],
    pub gts: &'a [ObjectInteraction],
}

/// Top-5 mAP of every listed variant over `frames`.
pub fn top5_map<'a>(
    frames: impl IntoIterator<Item = FrameEval<'a>>,
    variants: &[Arc<dyn MatchVariant>],
    params: &EvalParams,
) -> EvalReport {
    let mut accs: Vec<ApAccumulator> = variants
        .iter()
        .map(|v| ApAccumulator::new(v.clone(), *params))
        .collect();
    let mut count = 0;
    for frame in frames {
        count += 1;
        for acc in &mut accs {
            acc.add_frame(frame.preds, frame.gts);
        }
    }
    EvalReport {
        frames: count,
        variants: accs.iter().map(ApAccumulator::finish).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::variant::VariantRegistry;
    use crate::model::BoundingBox;

    #[test]
    fn ap_closed_forms() {
        assert_eq!(average_precision(&[(0.9, true)], 1), 1.0);
        assert_eq!(average_precision(&[], 3), 0.0);
        assert_eq!(average_precision(&[(0.9, false)], 1), 0.0);
        // hit, miss, hit over 2 positives: 0.5*1 + 0.5*(2/3)
        let ap = average_precision(&[(0.9, true), (0.8, false), (0.7, true)], 2);
        assert!((ap - (0.5 + 1.0 / 3.0)).abs() < 1e-15);
        // miss then hit: precision envelope 0.5 over full recall
        assert!((average_precision(&[(0.9, false), (0.8, true)], 1) - 0.5).abs() < 1e-15);
        // a tied miss and hit form one point with precision 0.5
        assert!((average_precision(&[(0.5, true), (0.5, false)], 1) - 0.5).abs() < 1e-15);
        assert!((average_precision(&[(0.5, false), (0.5, true)], 1) - 0.5).abs() < 1e-15);
    }

    fn oi(noun: &str, x: f64) -> ObjectInteraction {
        let b = BoundingBox::new(x, 0.0, x + 10.0, 10.0).unwrap();
        ObjectInteraction::new(b, noun, "take", 1.0).unwrap()
    }

    #[test]
    fn perfect_and_empty() {
        let gts = vec![vec![oi("cup", 0.0)], vec![oi("pan", 20.0), oi("cup", 40.0)]];
        let preds: Vec<Vec<Prediction>> = gts
            .iter()
            .map(|g| {
                g.iter()
                    .map(|o| Prediction::new(o.clone(), 1.0, 0).unwrap())
                    .collect()
            })
            .collect();
        let variants = VariantRegistry::builtin().all();
        let params = EvalParams::default();
        let report = top5_map(
            preds
                .iter()
                .zip(&gts)
                .map(|(p, g)| FrameEval { preds: p, gts: g }),
            &variants,
            &params,
        );
        for v in &report.variants {
            assert_eq!(v.map, 100.0, "{}", v.variant);
        }
        let none: Vec<Prediction> = Vec::new();
        let report = top5_map(
            gts.iter().map(|g| FrameEval { preds: &none, gts: g }),
            &variants,
            &params,
        );
        assert!(report.variants.iter().all(|v| v.map == 0.0));
    }

    #[test]
    fn classes_without_gt_are_excluded() {
        let gts = vec![oi("cup", 0.0)];
        let preds = vec![
            Prediction::new(oi("cup", 0.0), 0.9, 0).unwrap(),
            Prediction::new(oi("pan", 30.0), 0.8, 0).unwrap(),
        ];
        let v = VariantRegistry::builtin().get("n").unwrap();
        let mut acc = ApAccumulator::new(v, EvalParams::default());
        acc.add_frame(&preds, &gts);
        let report = acc.finish();
        assert_eq!(report.map, 100.0);
        assert_eq!(report.classes_with_gt, 1);
        assert_eq!(report.per_class.len(), 2);
    }

    #[test]
    fn merge_equals_sequential() {
        let v = VariantRegistry::builtin().get("no").unwrap();
        let frames: Vec<(Vec<Prediction>, Vec<ObjectInteraction>)> = (0..6)
            .map(|i| {
                let g = vec![oi(if i % 2 == 0 { "cup" } else { "pan" }, 0.0)];
                let p = vec![Prediction::new(oi("cup", 0.0), 0.1 * i as f64, 0).unwrap()];
                (p, g)
            })
            .collect();
        let mut whole = ApAccumulator::new(v.clone(), EvalParams::default());
        let mut left = ApAccumulator::new(v.clone(), EvalParams::default());
        let mut right = ApAccumulator::new(v, EvalParams::default());
        for (i, (p, g)) in frames.iter().enumerate() {
            whole.add_frame(p, g);
            if i < 3 {
                left.add_frame(p, g)
            } else {
                right.add_frame(p, g)
            }
        }
        left.merge(right);
        assert_eq!(left.finish(), whole.finish());
    }
}
