//! Cross-frame aggregation of frame-wise terms into segments.
//!
//! A run of occurrences of one term, each at most `max_lapse` frames after the
//! previous one, becomes a segment once it holds `min_occurrences` of them.
//! The segment starts at the first occurrence of the run and ends with the
//! last; a gap longer than `max_lapse` terminates it. Gaps are measured in raw
//! frame indices, so sampling stride and lapse interact directly.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{Category, Segment, Term};

/// One processed frame: its index and the terms observed on it.
pub type TermFrame = (u64, Vec<Term>);

#[derive(Debug)]
struct Run {
    first: u64,
    last: u64,
    count: usize,
}

/// Aggregate a frame-ordered term stream into accepted segments.
///
/// Segments whose run never reaches `min_occurrences` are dropped. Runs that
/// have not lapsed by the final frame of the stream come back `active`.
/// Output is sorted by `(start, end, term)`.
pub fn aggregate(
    stream: &[TermFrame],
    category: Category,
    min_occurrences: usize,
    max_lapse: u64,
) -> Result<Vec<Segment>> {
    let mut runs: BTreeMap<&Term, Run> = BTreeMap::new();
    let mut segments = Vec::new();
    let mut previous: Option<u64> = None;

    let close = |term: &Term, run: &Run, active: bool| Segment {
        category,
        term: term.clone(),
        start_frame: run.first,
        end_frame: run.last,
        occurrences: run.count,
        active,
    };

    for (frame, terms) in stream {
        let frame = *frame;
        if let Some(prev) = previous {
            if frame <= prev {
                return Err(Error::Input(format!(
                    "frame ids must be strictly increasing ({prev} then {frame})"
                )));
            }
        }
        previous = Some(frame);

        // Lapse check happens before this frame's occurrences are counted.
        runs.retain(|term, run| {
            let alive = frame - run.last <= max_lapse;
            if !alive && run.count >= min_occurrences {
                segments.push(close(term, run, false));
            }
            alive
        });

        let present: BTreeSet<&Term> = terms.iter().collect();
        for term in present {
            runs.entry(term)
                .and_modify(|run| {
                    run.last = frame;
                    run.count += 1;
                })
                .or_insert(Run {
                    first: frame,
                    last: frame,
                    count: 1,
                });
        }
    }

    for (term, run) in &runs {
        if run.count >= min_occurrences {
            segments.push(close(term, run, true));
        }
    }
    sort_segments(&mut segments);
    Ok(segments)
}

pub fn sort_segments(segments: &mut [Segment]) {
    segments
        .sort_by(|a, b| (a.start_frame, a.end_frame, &a.term).cmp(&(b.start_frame, b.end_frame, &b.term)));
}

/// Remove segments overlapped by a segment of a different term with more
/// occurrences; on equal counts the later-starting one goes.
///
/// Segments are visited by descending occurrence count (stable, earlier start
/// first) and kept when they do not overlap anything already kept.
pub fn eliminate_overlaps(segments: &[Segment]) -> Vec<Segment> {
    let mut order: Vec<&Segment> = segments.iter().collect();
    order.sort_by(|a, b| {
        b.occurrences
            .cmp(&a.occurrences)
            .then(a.start_frame.cmp(&b.start_frame))
            .then(a.end_frame.cmp(&b.end_frame))
            .then_with(|| a.term.cmp(&b.term))
    });
    let mut kept: Vec<Segment> = Vec::new();
    for seg in order {
        let blocked = kept.iter().any(|k| k.term != seg.term && k.overlaps(seg));
        if !blocked {
            kept.push(seg.clone());
        }
    }
    sort_segments(&mut kept);
    kept
}
