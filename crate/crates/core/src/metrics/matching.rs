use crate::config::EvalParams;
use crate::metrics::iou;
use crate::metrics::variant::MatchVariant;
use crate::model::{ObjectInteraction, Prediction};

/// Predictions per frame that are scored at all.
pub const TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOutcome {
    /// Index into the caller's prediction slice.
    pub pred: usize,
    /// Index of the ground truth it was matched to, if any.
    pub gt: Option<usize>,
    pub hit: bool,
}

/// Indices of the top-`TOP_K` predictions by descending score; equal scores
/// keep input order.
pub fn top_k_indices(preds: &[Prediction]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..preds.len()).collect();
    idx.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score));
    idx.truncate(TOP_K);
    idx
}

/// Greedy matching of one frame's top-5 predictions against its ground truth.
///
/// Predictions are visited by descending score. Each takes the unmatched
/// ground truth with the highest IoU among those the variant accepts (lowest
/// index on ties); each ground truth is matched at most once.
pub fn match_top5(
    preds: &[Prediction],
    gts: &[ObjectInteraction],
    variant: &dyn MatchVariant,
    params: &EvalParams,
) -> Vec<MatchOutcome> {
    let mut taken = vec![false; gts.len()];
    top_k_indices(preds)
        .into_iter()
        .map(|p| {
            let pred = &preds[p].interaction;
            let mut best: Option<(usize, f64)> = None;
            for (g, gt) in gts.iter().enumerate() {
                if taken[g] {
                    continue;
                }
                let overlap = iou(&pred.bbox, &gt.bbox);
                if !variant.accepts(pred, gt, overlap, params) {
                    continue;
                }
                if best.is_none_or(|(_, o)| overlap > o) {
                    best = Some((g, overlap));
                }
            }
            if let Some((g, _)) = best {
                taken[g] = true;
            }
            MatchOutcome {
                pred: p,
                gt: best.map(|(g, _)| g),
                hit: best.is_some(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::variant::VariantRegistry;
    use crate::model::BoundingBox;

    fn bx(c: [f64; 4]) -> BoundingBox {
        BoundingBox::try_from(c).unwrap()
    }

    fn gt(c: [f64; 4], noun: &str, verb: &str, ttc: f64) -> ObjectInteraction {
        ObjectInteraction::new(bx(c), noun, verb, ttc).unwrap()
    }

    fn pred(c: [f64; 4], noun: &str, verb: &str, ttc: f64, score: f64) -> Prediction {
        Prediction::new(gt(c, noun, verb, ttc), score, 0).unwrap()
    }

    fn hits(variant: &str, preds: &[Prediction], gts: &[ObjectInteraction]) -> Vec<bool> {
        let v = VariantRegistry::builtin().get(variant).unwrap();
        match_top5(preds, gts, v.as_ref(), &EvalParams::default())
            .into_iter()
            .map(|m| m.hit)
            .collect()
    }

    // (0,0,10,10) vs (0,0,10,6): IoU 0.6
    const GT_BOX: [f64; 4] = [0.0, 0.0, 10.0, 10.0];
    const IOU_06: [f64; 4] = [0.0, 0.0, 10.0, 6.0];

    #[test]
    fn all_constraints_met() {
        let g = [gt(GT_BOX, "cup", "take", 1.0)];
        let p = [pred(IOU_06, "cup", "take", 1.1, 0.9)];
        for v in ["n", "nv", "nt", "all", "no", "vo"] {
            assert_eq!(hits(v, &p, &g), [true], "variant {v}");
        }
    }

    #[test]
    fn ttc_edge_is_a_miss_for_time_variants() {
        let g = [gt(GT_BOX, "cup", "take", 1.0)];
        let p = [pred(IOU_06, "cup", "take", 1.25, 0.9)];
        assert_eq!(hits("n", &p, &g), [true]);
        assert_eq!(hits("nv", &p, &g), [true]);
        assert_eq!(hits("nt", &p, &g), [false]);
        assert_eq!(hits("all", &p, &g), [false]);
    }

    #[test]
    fn only_top_five_are_scored() {
        let g = [gt(GT_BOX, "cup", "take", 1.0)];
        let mut p: Vec<Prediction> = (0..5)
            .map(|i| pred(GT_BOX, "pan", "take", 1.0, 0.9 - i as f64 * 0.1))
            .collect();
        p.push(pred(GT_BOX, "cup", "take", 1.0, 0.1));
        let out = hits("n", &p, &g);
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|h| !h));
    }

    #[test]
    fn each_gt_matches_once_and_order_is_by_score() {
        let g = [gt(GT_BOX, "cup", "take", 1.0)];
        let p = [
            pred(GT_BOX, "cup", "take", 1.0, 0.3),
            pred(IOU_06, "cup", "take", 1.0, 0.8),
        ];
        let v = VariantRegistry::builtin().get("n").unwrap();
        let out = match_top5(&p, &g, v.as_ref(), &EvalParams::default());
        assert_eq!(
            out[0],
            MatchOutcome {
                pred: 1,
                gt: Some(0),
                hit: true
            }
        );
        assert_eq!(
            out[1],
            MatchOutcome {
                pred: 0,
                gt: None,
                hit: false
            }
        );
    }

    #[test]
    fn prefers_higher_overlap() {
        let g = [
            gt([0.0, 0.0, 10.0, 6.0], "cup", "take", 1.0),
            gt(GT_BOX, "cup", "take", 1.0),
        ];
        let p = [pred(GT_BOX, "cup", "take", 1.0, 0.9)];
        let v = VariantRegistry::builtin().get("n").unwrap();
        let out = match_top5(&p, &g, v.as_ref(), &EvalParams::default());
        assert_eq!(out[0].gt, Some(1));
    }
}
