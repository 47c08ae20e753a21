//! Per-video pipeline: extraction, windowed aggregation, context selection
//! and rendering for every prediction frame.

use std::collections::BTreeMap;

use crate::aggregate::{aggregate, eliminate_overlaps, TermFrame};
use crate::assemble::assemble;
use crate::config::SummarizerConfig;
use crate::error::{Error, Result};
use crate::extract::{extract_frame, FrameContext};
use crate::model::{ActionContext, ActionPair, Category, FrameRecord, PerCategory, Segment, Term};
use crate::policy::{ContextPolicy, ContextPolicyRegistry};

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSummary {
    pub frame_id: u64,
    pub context: ActionContext,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VideoStats {
    pub frames: usize,
    pub prediction_frames: usize,
    /// Segments found when aggregating the whole video at once.
    pub segments: PerCategory<usize>,
    pub empty_contexts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoSummary {
    pub video_id: String,
    pub frames: Vec<FrameSummary>,
    pub stats: VideoStats,
}

/// Frames that feed the context of prediction frame `t`: same stride phase as
/// `t`, inside the lookback window, not after `t`.
pub fn in_window(frame: u64, t: u64, window: u64, stride: u64) -> bool {
    frame <= t && t - frame < window.max(1) && (t - frame).is_multiple_of(stride)
}

/// Append `window` to `history`, dropping the longest suffix of `history`
/// that the window repeats, and keep the last `len` terms.
pub fn merge_with_history(history: &[Term], window: &[Term], len: usize) -> Vec<Term> {
    let max_overlap = history.len().min(window.len());
    let overlap = (0..=max_overlap)
        .rev()
        .find(|&m| history[history.len() - m..] == window[..m])
        .unwrap_or(0);
    let mut merged: Vec<Term> = history.to_vec();
    merged.extend_from_slice(&window[overlap..]);
    let skip = merged.len().saturating_sub(len);
    merged.split_off(skip)
}

struct CategoryPlan<'a> {
    category: Category,
    policy: &'a dyn ContextPolicy,
}

/// Summarize one video. `records` must all belong to `video_id`; they are
/// sorted by frame id here and duplicate ids are rejected.
pub fn summarize_video(
    video_id: &str,
    records: &[FrameRecord],
    cfg: &SummarizerConfig,
) -> Result<VideoSummary> {
    let mut sorted: Vec<&FrameRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.frame_id);
    for pair in sorted.windows(2) {
        if pair[0].frame_id == pair[1].frame_id {
            return Err(Error::Input(format!(
                "video {video_id}: duplicate frame id {}",
                pair[0].frame_id
            )));
        }
    }
    if let Some(r) = sorted.iter().find(|r| r.video_id != video_id) {
        return Err(Error::Input(format!(
            "record for video {} grouped under {video_id}",
            r.video_id
        )));
    }

    let contexts: Vec<FrameContext> = sorted.iter().map(|r| extract_frame(r, cfg)).collect();
    let mut prediction: Vec<u64> = sorted.iter().filter(|r| r.predict).map(|r| r.frame_id).collect();
    if prediction.is_empty() {
        prediction = sorted.iter().map(|r| r.frame_id).collect();
    }

    let registry = ContextPolicyRegistry::builtin();
    let plans: Vec<CategoryPlan> = Category::ALL
        .into_iter()
        .map(|category| {
            let name = cfg.context_mode.get(category);
            registry
                .get(name)
                .map(|policy| CategoryPlan { category, policy })
                .ok_or_else(|| Error::Config(format!("unknown context mode {name:?}")))
        })
        .collect::<Result<_>>()?;

    let mut history: BTreeMap<Category, Vec<Term>> = BTreeMap::new();
    let mut frames = Vec::with_capacity(prediction.len());
    let mut empty_contexts = 0;
    for &t in &prediction {
        let lo = contexts.partition_point(|c| c.frame_id + cfg.window.max(1) <= t);
        let hi = contexts.partition_point(|c| c.frame_id <= t);
        let window: Vec<&FrameContext> = contexts[lo..hi]
            .iter()
            .filter(|c| in_window(c.frame_id, t, cfg.window, cfg.stride))
            .collect();
        let mut selected: BTreeMap<Category, Vec<Term>> = BTreeMap::new();
        for plan in &plans {
            let segments = category_segments(&window, plan.category, cfg)?;
            let len = cfg.context_len.get(plan.category);
            let mut terms = plan.policy.select(&segments, t, len);
            if plan.policy.carries_history() {
                let prev = history.entry(plan.category).or_default();
                terms = merge_with_history(prev, &terms, len);
                *prev = terms.clone();
            }
            selected.insert(plan.category, terms);
        }
        let actions: Vec<ActionPair> = selected[&Category::Action]
            .iter()
            .filter_map(|t| t.as_action().cloned())
            .collect();
        let labels = |c: Category| -> Vec<String> {
            selected[&c]
                .iter()
                .filter_map(|t| t.as_label().map(str::to_string))
                .collect()
        };
        let context = assemble(
            &actions,
            &labels(Category::Held),
            &labels(Category::Salient),
            &cfg.include,
        );
        if context.is_empty() {
            empty_contexts += 1;
        }
        frames.push(FrameSummary { frame_id: t, context });
    }

    let all: Vec<&FrameContext> = contexts.iter().collect();
    let mut segments = PerCategory::default();
    for c in Category::ALL {
        segments.set(c, category_segments(&all, c, cfg)?.len());
    }
    Ok(VideoSummary {
        video_id: video_id.to_string(),
        stats: VideoStats {
            frames: sorted.len(),
            prediction_frames: frames.len(),
            segments,
            empty_contexts,
        },
        frames,
    })
}

/// Aggregate, de-overlap and filter one category's segments over `frames`.
pub fn category_segments(
    frames: &[&FrameContext],
    category: Category,
    cfg: &SummarizerConfig,
) -> Result<Vec<Segment>> {
    let stream: Vec<TermFrame> = frames.iter().map(|c| (c.frame_id, c.terms(category))).collect();
    let mut segments = aggregate(
        &stream,
        category,
        cfg.min_occurrences.get(category),
        cfg.max_lapse.get(category),
    )?;
    if cfg.eliminate_overlaps.get(category) {
        segments = eliminate_overlaps(&segments);
    }
    if category == Category::Action && !cfg.keep_generic_nouns {
        segments.retain(|s| {
            s.term
                .as_action()
                .is_none_or(|p| !cfg.generic_nouns.contains(&p.noun))
        });
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pos, TaggedToken};

    fn label(s: &str) -> Term {
        Term::Label(s.to_string())
    }

    #[test]
    fn window_membership() {
        assert!(in_window(300, 300, 150, 3));
        assert!(in_window(153, 300, 150, 3));
        assert!(!in_window(150, 300, 150, 3));
        assert!(!in_window(299, 300, 150, 3));
        assert!(!in_window(303, 300, 150, 3));
        assert_eq!((0..=300).filter(|&f| in_window(f, 300, 150, 3)).count(), 50);
    }

    #[test]
    fn history_merge_dedupes_the_seam() {
        let h = [label("wash"), label("cut"), label("wash")];
        assert_eq!(
            merge_with_history(&h, &[label("cut"), label("wash")], 3),
            vec![label("wash"), label("cut"), label("wash")]
        );
        assert_eq!(
            merge_with_history(&[label("a"), label("b")], &[label("b"), label("c")], 3),
            vec![label("a"), label("b"), label("c")]
        );
        assert_eq!(merge_with_history(&[label("a")], &[], 3), vec![label("a")]);
        assert_eq!(
            merge_with_history(&[], &[label("x"), label("y"), label("z")], 2),
            vec![label("y"), label("z")]
        );
    }

    fn caption(verb: &str, noun: &str) -> Vec<TaggedToken> {
        vec![
            TaggedToken::new("a", "person", Pos::Noun),
            TaggedToken::new(verb, verb, Pos::Verb),
            TaggedToken::new(noun, noun, Pos::Noun),
        ]
    }

    fn video(frames: impl IntoIterator<Item = (u64, &'static str, &'static str)>) -> Vec<FrameRecord> {
        frames
            .into_iter()
            .map(|(f, v, n)| {
                let mut r = FrameRecord::empty("vid", f);
                r.captions = vec![caption(v, n)];
                r
            })
            .collect()
    }

    #[test]
    fn context_spans_earlier_prediction_frames() {
        let mut recs = video((0..=60).step_by(3).map(|f| (f, "wash", "tomato")));
        recs.extend(video((300..=360).step_by(3).map(|f| (f, "cut", "tomato"))));
        for r in &mut recs {
            r.predict = r.frame_id == 60 || r.frame_id == 360;
        }
        let cfg = SummarizerConfig::default();
        let out = summarize_video("vid", &recs, &cfg).unwrap();
        assert_eq!(out.frames.len(), 2);
        assert_eq!(out.frames[0].context.text, "wash tomato; ; ");
        // the wash segment is far outside the second window but carried over
        assert_eq!(out.frames[1].context.text, "wash tomato, cut tomato; ; ");
        assert_eq!(out.stats.segments.action, 2);
    }

    #[test]
    fn all_frames_predict_when_unmarked() {
        let recs = video([(0, "cut", "wood"), (3, "cut", "wood")]);
        let out = summarize_video("vid", &recs, &SummarizerConfig::default()).unwrap();
        assert_eq!(out.frames.len(), 2);
    }

    #[test]
    fn duplicate_frames_are_rejected() {
        let recs = video([(3, "cut", "wood"), (3, "cut", "wood")]);
        assert!(summarize_video("vid", &recs, &SummarizerConfig::default()).is_err());
    }

    #[test]
    fn generic_nouns_can_be_hidden() {
        let recs = video([(0, "hold", "something"), (3, "hold", "something")]);
        let mut cfg = SummarizerConfig::default();
        let shown = summarize_video("vid", &recs, &cfg).unwrap();
        assert_eq!(shown.frames[1].context.action_segments.len(), 1);
        cfg.keep_generic_nouns = false;
        let hidden = summarize_video("vid", &recs, &cfg).unwrap();
        assert!(hidden.frames[1].context.action_segments.is_empty());
    }
}
