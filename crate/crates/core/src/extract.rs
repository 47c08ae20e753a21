//! Frame-wise context extraction: one frame's upstream signals become at most
//! one action pair, a set of held-object labels and the top-k salient labels.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::config::SummarizerConfig;
use crate::metrics::iou;
use crate::model::{ActionPair, BoundingBox, Category, Detection, FrameRecord, Pos, TaggedToken, Term};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameContext {
    pub frame_id: u64,
    pub action: Option<ActionPair>,
    pub held: BTreeSet<String>,
    /// Highest score first.
    pub salient: Vec<String>,
}

impl FrameContext {
    /// The frame's terms for one category.
    pub fn terms(&self, category: Category) -> Vec<Term> {
        match category {
            Category::Action => self.action.iter().cloned().map(Term::Action).collect(),
            Category::Held => self.held.iter().cloned().map(Term::Label).collect(),
            Category::Salient => self.salient.iter().cloned().map(Term::Label).collect(),
        }
    }
}

/// Collect every verb-then-noun pairing with at most `d` tokens in between.
///
/// Pairs come out ordered by verb position, then noun position. `allow_noun`
/// and `allow_verb` filter lemmas against the configured vocabularies.
pub fn extract_candidate_pairs(
    caption: &[TaggedToken],
    d: usize,
    allow_verb: impl Fn(&str) -> bool,
    allow_noun: impl Fn(&str) -> bool,
) -> Vec<ActionPair> {
    let mut pairs = Vec::new();
    for (i, verb) in caption.iter().enumerate() {
        if verb.pos != Pos::Verb || !allow_verb(&verb.lemma) {
            continue;
        }
        let last = (i + 1 + d).min(caption.len().saturating_sub(1));
        for noun in caption.iter().take(last + 1).skip(i + 1) {
            if noun.pos != Pos::Noun || !allow_noun(&noun.lemma) {
                continue;
            }
            if let Ok(pair) = ActionPair::new(&verb.lemma, &noun.lemma) {
                pairs.push(pair);
            }
        }
    }
    pairs
}

/// Most frequent candidate across the frame's captions; ties go to the pair
/// seen first.
pub fn select_frame_action(candidates: &[Vec<ActionPair>]) -> Option<ActionPair> {
    let mut counts: HashMap<&ActionPair, (usize, usize)> = HashMap::new();
    for (order, pair) in candidates.iter().flatten().enumerate() {
        counts.entry(pair).or_insert((0, order)).0 += 1;
    }
    counts
        .into_iter()
        .max_by(|(_, (ca, fa)), (_, (cb, fb))| ca.cmp(cb).then(fb.cmp(fa)))
        .map(|(pair, _)| pair.clone())
}

/// Top-`k` labels by descending score, restricted to `allow`; equal scores
/// are ordered lexicographically.
pub fn select_salient(
    label_scores: &BTreeMap<String, f64>,
    k: usize,
    allow: impl Fn(&str) -> bool,
) -> Vec<String> {
    let mut scored: Vec<(&String, f64)> = label_scores
        .iter()
        .filter(|(label, _)| allow(label))
        .map(|(label, score)| (label, *score))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.into_iter().take(k).map(|(l, _)| l.clone()).collect()
}

/// Label active (hand-object) boxes with the detections that overlap them.
///
/// Each active box takes the single detection with the highest IoU (then the
/// highest score) and keeps its merged label when that IoU is strictly above
/// `theta_iou`.
pub fn match_held_objects(
    active_boxes: &[BoundingBox],
    detections: &[Detection],
    theta_iou: f64,
    merge: impl Fn(&str) -> String,
) -> BTreeSet<String> {
    let mut held = BTreeSet::new();
    for active in active_boxes {
        let best = detections
            .iter()
            .map(|det| (iou(active, &det.bbox), det))
            .max_by(|(ia, a), (ib, b)| compare_candidates((*ia, a), (*ib, b)));
        if let Some((overlap, det)) = best {
            if overlap > theta_iou {
                held.insert(merge(&det.label));
            }
        }
    }
    held
}

// Total order so the winner does not depend on detection order.
fn compare_candidates(a: (f64, &Detection), b: (f64, &Detection)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.score.total_cmp(&b.1.score))
        .then_with(|| b.1.label.cmp(&a.1.label))
        .then_with(|| {
            let (ba, bb) = (a.1.bbox.to_array(), b.1.bbox.to_array());
            bb.iter()
                .zip(ba.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Run all three extractors on one frame.
pub fn extract_frame(record: &FrameRecord, cfg: &SummarizerConfig) -> FrameContext {
    let candidates: Vec<Vec<ActionPair>> = record
        .captions
        .iter()
        .map(|caption| {
            extract_candidate_pairs(
                caption,
                cfg.cutoff_distance,
                |v| cfg.allows_verb(v),
                |n| cfg.allows_action_noun(n),
            )
        })
        .collect();
    FrameContext {
        frame_id: record.frame_id,
        action: select_frame_action(&candidates),
        held: match_held_objects(&record.active_boxes, &record.detections, cfg.theta_iou, |label| {
            cfg.merged_label(label).to_string()
        }),
        salient: select_salient(&record.label_scores, cfg.salient_k, |l| cfg.allows_salient(l)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tag(words: &[(&str, &str, Pos)]) -> Vec<TaggedToken> {
        words.iter().map(|(s, l, p)| TaggedToken::new(s, l, *p)).collect()
    }

    fn eating_apple() -> Vec<TaggedToken> {
        use Pos::*;
        tag(&[
            ("a", "a", Other),
            ("person", "person", Noun),
            ("eating", "eat", Verb),
            ("a", "a", Other),
            ("red", "red", Other),
            ("apple", "apple", Noun),
        ])
    }

    fn eating_gathering() -> Vec<TaggedToken> {
        use Pos::*;
        tag(&[
            ("a", "a", Other),
            ("person", "person", Noun),
            ("eating", "eat", Verb),
            ("while", "while", Other),
            ("at", "at", Other),
            ("a", "a", Other),
            ("gathering", "gathering", Noun),
        ])
    }

    fn any(_: &str) -> bool {
        true
    }

    fn pair(v: &str, n: &str) -> ActionPair {
        ActionPair::new(v, n).unwrap()
    }

    #[test]
    fn caption_vignettes() {
        assert_eq!(
            extract_candidate_pairs(&eating_apple(), 4, any, any),
            vec![pair("eat", "apple")]
        );
        assert_eq!(
            extract_candidate_pairs(&eating_gathering(), 4, any, any),
            vec![pair("eat", "gathering")]
        );
        // "a red" are two intervening tokens
        assert!(extract_candidate_pairs(&eating_apple(), 1, any, any).is_empty());
        assert_eq!(extract_candidate_pairs(&eating_apple(), 2, any, any).len(), 1);
        assert!(extract_candidate_pairs(&eating_gathering(), 2, any, any).is_empty());
    }

    #[test]
    fn zero_cutoff_means_adjacent_only() {
        use Pos::*;
        let c = tag(&[("cut", "cut", Verb), ("wood", "wood", Noun), ("saw", "saw", Noun)]);
        assert_eq!(
            extract_candidate_pairs(&c, 0, any, any),
            vec![pair("cut", "wood")]
        );
        assert_eq!(extract_candidate_pairs(&c, 1, any, any).len(), 2);
        assert!(extract_candidate_pairs(&[], 4, any, any).is_empty());
    }

    #[test]
    fn noun_before_verb_is_ignored_and_vocab_filters() {
        use Pos::*;
        let c = tag(&[("wood", "wood", Noun), ("cut", "cut", Verb)]);
        assert!(extract_candidate_pairs(&c, 4, any, any).is_empty());
        let only_apple = |n: &str| n == "apple";
        assert_eq!(
            extract_candidate_pairs(&eating_gathering(), 4, any, only_apple),
            Vec::<ActionPair>::new()
        );
    }

    #[test]
    fn frame_action_majority_and_ties() {
        let cw = pair("cut", "wood");
        let hw = pair("hold", "wood");
        assert_eq!(
            select_frame_action(&[vec![cw.clone()], vec![cw.clone()], vec![hw.clone()]]),
            Some(cw.clone())
        );
        assert_eq!(
            select_frame_action(&[vec![cw.clone()], vec![hw.clone()]]),
            Some(cw.clone())
        );
        assert_eq!(select_frame_action(&[vec![hw.clone()], vec![cw]]), Some(hw));
        assert_eq!(select_frame_action(&[vec![], vec![], vec![]]), None);
    }

    #[test]
    fn salient_ordering_and_ties() {
        let scores: BTreeMap<String, f64> = [("knife", 0.9), ("cup", 0.8), ("wall", 0.1)]
            .map(|(l, s)| (l.to_string(), s))
            .into();
        assert_eq!(select_salient(&scores, 2, any), vec!["knife", "cup"]);
        let tied: BTreeMap<String, f64> = [("knife", 0.5), ("cup", 0.5)]
            .map(|(l, s)| (l.to_string(), s))
            .into();
        assert_eq!(select_salient(&tied, 1, any), vec!["cup"]);
        assert!(select_salient(&BTreeMap::new(), 5, any).is_empty());
        assert_eq!(select_salient(&scores, 5, |l| l != "wall"), vec!["knife", "cup"]);
    }

    fn bx(c: [f64; 4]) -> BoundingBox {
        BoundingBox::try_from(c).unwrap()
    }

    fn det(label: &str, c: [f64; 4], score: f64) -> Detection {
        Detection {
            label: label.into(),
            bbox: bx(c),
            score,
        }
    }

    #[test]
    fn held_object_matching() {
        let id = |l: &str| l.to_string();
        let active = [bx([0.0, 0.0, 2.0, 2.0])];
        assert_eq!(
            match_held_objects(&active, &[det("knife", [0.0, 0.0, 2.0, 2.0], 0.9)], 0.25, id),
            BTreeSet::from(["knife".to_string()])
        );
        assert!(match_held_objects(&active, &[det("knife", [5.0, 5.0, 6.0, 6.0], 0.9)], 0.25, id).is_empty());
        let dets = [
            det("knife", [0.0, 0.0, 2.0, 2.0], 0.5),
            det("cup", [1.0, 1.0, 3.0, 3.0], 0.9),
        ];
        assert_eq!(
            match_held_objects(&active, &dets, 0.25, id),
            BTreeSet::from(["knife".to_string()])
        );
    }

    #[test]
    fn held_threshold_is_strict_and_labels_merge() {
        // IoU exactly 0.25: box (0,0,4,4) vs (0,0,4,1) -> 4 / 16
        let active = [bx([0.0, 0.0, 4.0, 4.0])];
        let dets = [det("pressure cooker", [0.0, 0.0, 4.0, 1.0], 0.9)];
        assert!(match_held_objects(&active, &dets, 0.25, |l| l.to_string()).is_empty());
        let merged = match_held_objects(&active, &dets, 0.2, |l| {
            if l == "pressure cooker" {
                "machine".into()
            } else {
                l.into()
            }
        });
        assert_eq!(merged, BTreeSet::from(["machine".to_string()]));
    }

    #[test]
    fn extract_frame_uses_config() {
        let mut rec = FrameRecord::empty("v", 9);
        rec.captions = vec![eating_apple(), eating_apple(), eating_gathering()];
        rec.label_scores = [("apple", 0.3), ("table", 0.2)]
            .map(|(l, s)| (l.to_string(), s))
            .into();
        let cfg = SummarizerConfig::default();
        let ctx = extract_frame(&rec, &cfg);
        assert_eq!(ctx.frame_id, 9);
        assert_eq!(ctx.action, Some(pair("eat", "apple")));
        assert_eq!(ctx.salient, vec!["apple", "table"]);
        assert!(ctx.held.is_empty());
    }

    fn arb_caption() -> impl Strategy<Value = Vec<TaggedToken>> {
        let token = (
            0usize..6,
            prop_oneof![Just(Pos::Verb), Just(Pos::Noun), Just(Pos::Other)],
        )
            .prop_map(|(w, p)| TaggedToken::new("w", &format!("w{w}"), p));
        proptest::collection::vec(token, 0..14)
    }

    fn arb_detection() -> impl Strategy<Value = Detection> {
        (
            0usize..3,
            0.0f64..8.0,
            0.0f64..8.0,
            0.5f64..4.0,
            0.5f64..4.0,
            0usize..3,
        )
            .prop_map(|(l, x, y, w, h, s)| det(&format!("obj{l}"), [x, y, x + w, y + h], s as f64 / 2.0))
    }

    proptest! {
        #[test]
        fn pairs_are_monotone_in_cutoff(caption in arb_caption(), d1 in 0usize..6, extra in 0usize..6) {
            let small: BTreeSet<_> = extract_candidate_pairs(&caption, d1, any, any).into_iter().collect();
            let large: BTreeSet<_> = extract_candidate_pairs(&caption, d1 + extra, any, any).into_iter().collect();
            prop_assert!(small.is_subset(&large));
        }

        #[test]
        fn salient_is_bounded_and_sorted(
            scores in proptest::collection::btree_map("[a-e]{1,3}", -1.0f64..1.0, 0..12),
            k in 0usize..8,
        ) {
            let out = select_salient(&scores, k, any);
            prop_assert!(out.len() <= k);
            let s: Vec<f64> = out.iter().map(|l| scores[l]).collect();
            prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn held_is_permutation_invariant(
            dets in proptest::collection::vec(arb_detection(), 0..6),
            shift in 0usize..6,
        ) {
            let active = [bx([1.0, 1.0, 4.0, 4.0]), bx([5.0, 5.0, 8.0, 9.0])];
            let mut rotated = dets.clone();
            if !rotated.is_empty() {
                let n = rotated.len();
                rotated.rotate_left(shift % n);
                rotated.reverse();
            }
            let id = |l: &str| l.to_string();
            prop_assert_eq!(
                match_held_objects(&active, &dets, 0.25, id),
                match_held_objects(&active, &rotated, 0.25, id)
            );
        }
    }
}
