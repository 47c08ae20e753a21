//! Brute-force references. Nothing here calls the production aggregation or
//! metric code; only the shared data types are reused.

use std::collections::{BTreeMap, BTreeSet};

use context_forge_core::config::EvalParams;
use context_forge_core::{Category, ObjectInteraction, Prediction, Segment, Term};

use crate::SynthError;

pub const ORACLE_MAX_FRAMES: usize = 10;
pub const ORACLE_MAX_PREDS: usize = 5;

/// Segments by full rescans: for each term, list the frames it occurs on,
/// cut the list wherever consecutive occurrences are more than `max_lapse`
/// apart, keep pieces with at least `min_occurrences` entries.
pub fn oracle_aggregate(
    stream: &[(u64, Vec<Term>)],
    category: Category,
    min_occurrences: usize,
    max_lapse: u64,
) -> Vec<Segment> {
    let Some(last_frame) = stream.last().map(|(f, _)| *f) else {
        return Vec::new();
    };
    let mut terms: Vec<&Term> = stream.iter().flat_map(|(_, ts)| ts.iter()).collect();
    terms.sort();
    terms.dedup();

    let mut out = Vec::new();
    for term in terms {
        let frames: Vec<u64> = stream
            .iter()
            .filter(|(_, ts)| ts.contains(term))
            .map(|(f, _)| *f)
            .collect();
        let mut pieces: Vec<Vec<u64>> = Vec::new();
        for f in frames {
            match pieces.last_mut() {
                Some(piece) if f - piece[piece.len() - 1] <= max_lapse => piece.push(f),
                _ => pieces.push(vec![f]),
            }
        }
        for piece in pieces {
            if piece.len() < min_occurrences {
                continue;
            }
            let end = piece[piece.len() - 1];
            out.push(Segment {
                category,
                term: term.clone(),
                start_frame: piece[0],
                end_frame: end,
                occurrences: piece.len(),
                active: last_frame - end <= max_lapse,
            });
        }
    }
    out.sort_by(|a, b| {
        a.start_frame
            .cmp(&b.start_frame)
            .then(a.end_frame.cmp(&b.end_frame))
            .then(a.term.cmp(&b.term))
    });
    out
}

struct Rule {
    noun: bool,
    verb: bool,
    bbox: bool,
    ttc: bool,
}

fn rule(variant: &str) -> Option<Rule> {
    let r = |noun, verb, bbox, ttc| {
        Some(Rule {
            noun,
            verb,
            bbox,
            ttc,
        })
    };
    match variant {
        "n" => r(true, false, true, false),
        "nv" => r(true, true, true, false),
        "nt" => r(true, false, true, true),
        "all" => r(true, true, true, true),
        "no" => r(true, false, false, false),
        "vo" => r(false, true, false, false),
        _ => None,
    }
}

fn class_of(variant: &str, x: &ObjectInteraction) -> String {
    match variant {
        "nv" | "all" => format!("{}|{}", x.verb, x.noun),
        "vo" => x.verb.clone(),
        _ => x.noun.clone(),
    }
}

fn overlap(a: &ObjectInteraction, b: &ObjectInteraction) -> f64 {
    let (a, b) = (a.bbox.to_array(), b.bbox.to_array());
    let w = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let h = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = w * h;
    let union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

fn ok(rule: &Rule, p: &ObjectInteraction, g: &ObjectInteraction, params: &EvalParams) -> bool {
    if rule.noun && p.noun != g.noun {
        return false;
    }
    if rule.verb && p.verb != g.verb {
        return false;
    }
    if rule.bbox && overlap(p, g) < params.iou_threshold {
        return false;
    }
    if rule.ttc && (p.ttc - g.ttc).abs() >= params.t_delta {
        return false;
    }
    true
}

/// `(class, score, hit)`.
type Judged = (String, f64, bool);

/// Every scored prediction, plus gt counts.
fn judge(
    frames: &[(Vec<Prediction>, Vec<ObjectInteraction>)],
    variant: &str,
    rule: &Rule,
    params: &EvalParams,
) -> (Vec<Judged>, BTreeMap<String, usize>) {
    let mut judged = Vec::new();
    let mut gt_count: BTreeMap<String, usize> = BTreeMap::new();
    for (preds, gts) in frames {
        for g in gts {
            *gt_count.entry(class_of(variant, g)).or_insert(0) += 1;
        }
        // selection by repeated maximum; earlier index wins ties
        let mut remaining: Vec<usize> = (0..preds.len()).collect();
        let mut used = vec![false; gts.len()];
        for _ in 0..5 {
            if remaining.is_empty() {
                break;
            }
            let mut pick = 0;
            for k in 1..remaining.len() {
                if preds[remaining[k]].score > preds[remaining[pick]].score {
                    pick = k;
                }
            }
            let p = &preds[remaining.remove(pick)];
            let mut best: Option<usize> = None;
            for (gi, g) in gts.iter().enumerate() {
                if used[gi] || !ok(rule, &p.interaction, g, params) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => overlap(&p.interaction, g) > overlap(&p.interaction, &gts[b]),
                };
                if better {
                    best = Some(gi);
                }
            }
            if let Some(b) = best {
                used[b] = true;
            }
            judged.push((class_of(variant, &p.interaction), p.score, best.is_some()));
        }
    }
    (judged, gt_count)
}

fn check_size(frames: &[(Vec<Prediction>, Vec<ObjectInteraction>)]) -> Result<(), SynthError> {
    if frames.len() > ORACLE_MAX_FRAMES {
        return Err(SynthError::TooLarge(format!("{} frames", frames.len())));
    }
    if let Some((p, _)) = frames.iter().find(|(p, _)| p.len() > ORACLE_MAX_PREDS) {
        return Err(SynthError::TooLarge(format!(
            "{} predictions in one frame",
            p.len()
        )));
    }
    Ok(())
}

/// AP of one class by enumerating every distinct score as a threshold.
fn class_ap(scored: &[(f64, bool)], positives: usize) -> f64 {
    let thresholds: BTreeSet<u64> = scored.iter().map(|(s, _)| s.to_bits()).collect();
    let mut points: Vec<(f64, f64)> = thresholds
        .into_iter()
        .map(f64::from_bits)
        .map(|t| {
            let kept: Vec<bool> = scored.iter().filter(|(s, _)| *s >= t).map(|(_, h)| *h).collect();
            let tp = kept.iter().filter(|h| **h).count() as f64;
            (tp / positives as f64, tp / kept.len() as f64)
        })
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ap = 0.0;
    let mut prev = 0.0;
    for &(recall, _) in &points {
        let best = points
            .iter()
            .filter(|(r, _)| *r >= recall)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        ap += (recall - prev) * best;
        prev = recall;
    }
    ap
}

/// Per-class AP (fraction, not percent) for every class with ground truth.
pub fn oracle_ap(
    frames: &[(Vec<Prediction>, Vec<ObjectInteraction>)],
    variant: &str,
    params: &EvalParams,
) -> Result<BTreeMap<String, f64>, SynthError> {
    check_size(frames)?;
    let rule = rule(variant).ok_or_else(|| SynthError::UnknownVariant(variant.to_string()))?;
    let (judged, gt_count) = judge(frames, variant, &rule, params);
    Ok(gt_count
        .iter()
        .map(|(class, &n)| {
            let scored: Vec<(f64, bool)> = judged
                .iter()
                .filter(|(c, _, _)| c == class)
                .map(|(_, s, h)| (*s, *h))
                .collect();
            (class.clone(), class_ap(&scored, n))
        })
        .collect())
}

/// Mean of [`oracle_ap`] over classes with ground truth; 0 when there are none.
pub fn oracle_map(
    frames: &[(Vec<Prediction>, Vec<ObjectInteraction>)],
    variant: &str,
    params: &EvalParams,
) -> Result<f64, SynthError> {
    let per_class = oracle_ap(frames, variant, params)?;
    if per_class.is_empty() {
        return Ok(0.0);
    }
    Ok(per_class.values().sum::<f64>() / per_class.len() as f64)
}
