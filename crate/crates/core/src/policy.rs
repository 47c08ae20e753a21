//! Context-selection strategies, registered by name.
//!
//! A policy picks which aggregated segments make up one category of the
//! action context for a prediction frame `t`. A segment is *current* at `t`
//! when it started at or before `t` and either still spans `t` or had not
//! lapsed when its stream ended.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use crate::model::{Segment, Term};

pub trait ContextPolicy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Choose at most `len` terms for frame `t`.
    fn select(&self, segments: &[Segment], t: u64, len: usize) -> Vec<Term>;

    /// Whether contexts chosen for earlier prediction frames of the same
    /// video extend this one beyond its lookback window.
    fn carries_history(&self) -> bool {
        false
    }
}

pub fn is_current(seg: &Segment, t: u64) -> bool {
    seg.start_frame <= t && (t <= seg.end_frame || seg.active)
}

/// One current segment plus the `len - 1` most recent earlier segments,
/// oldest first. The current slot stays reserved when nothing is current.
pub struct CurrentAndPast;

impl ContextPolicy for CurrentAndPast {
    fn name(&self) -> &'static str {
        "current_and_past"
    }

    fn carries_history(&self) -> bool {
        true
    }

    fn select(&self, segments: &[Segment], t: u64, len: usize) -> Vec<Term> {
        if len == 0 {
            return Vec::new();
        }
        let current = segments.iter().filter(|s| is_current(s, t)).max_by(|a, b| {
            a.start_frame
                .cmp(&b.start_frame)
                .then(a.occurrences.cmp(&b.occurrences))
                .then_with(|| b.term.cmp(&a.term))
        });
        let mut past: Vec<&Segment> = segments
            .iter()
            .filter(|s| s.start_frame <= t)
            .filter(|s| current.is_none_or(|c| !std::ptr::eq(*s, c)))
            .collect();
        past.sort_by(|a, b| {
            (a.end_frame, a.start_frame, &a.term).cmp(&(b.end_frame, b.start_frame, &b.term))
        });
        let keep = len - 1;
        let skip = past.len().saturating_sub(keep);
        let mut out: Vec<Term> = past[skip..].iter().map(|s| s.term.clone()).collect();
        out.extend(current.map(|s| s.term.clone()));
        out
    }
}

/// Only segments current at `t`, most occurrences first.
pub struct CurrentOnly;

impl ContextPolicy for CurrentOnly {
    fn name(&self) -> &'static str {
        "current_only"
    }

    fn select(&self, segments: &[Segment], t: u64, len: usize) -> Vec<Term> {
        let mut current: Vec<&Segment> = segments.iter().filter(|s| is_current(s, t)).collect();
        current.sort_by(|a, b| {
            b.occurrences
                .cmp(&a.occurrences)
                .then(a.start_frame.cmp(&b.start_frame))
                .then_with(|| a.term.cmp(&b.term))
        });
        current.into_iter().take(len).map(|s| s.term.clone()).collect()
    }
}

pub struct ContextPolicyRegistry {
    policies: BTreeMap<&'static str, Arc<dyn ContextPolicy>>,
}

impl ContextPolicyRegistry {
    pub fn new() -> Self {
        Self {
            policies: BTreeMap::new(),
        }
    }

    /// The shared registry holding the built-in policies.
    pub fn builtin() -> &'static ContextPolicyRegistry {
        static BUILTIN: OnceLock<ContextPolicyRegistry> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            let mut reg = ContextPolicyRegistry::new();
            reg.register(CurrentAndPast);
            reg.register(CurrentOnly);
            reg
        })
    }

    pub fn register<P: ContextPolicy + 'static>(&mut self, policy: P) {
        self.policies.insert(policy.name(), Arc::new(policy));
    }

    pub fn get(&self, name: &str) -> Option<&dyn ContextPolicy> {
        self.policies.get(name).map(|p| p.as_ref())
    }

    /// Registered spelling of `name`; `-` and `_` are interchangeable.
    pub fn canonical_name(&self, name: &str) -> Option<&'static str> {
        let wanted = name.trim().replace('-', "_");
        self.policies.keys().copied().find(|k| *k == wanted)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.policies.keys().copied()
    }
}

impl Default for ContextPolicyRegistry {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Category;

    fn seg(term: &str, start: u64, end: u64, occ: usize, active: bool) -> Segment {
        Segment {
            category: Category::Action,
            term: Term::Label(term.to_string()),
            start_frame: start,
            end_frame: end,
            occurrences: occ,
            active,
        }
    }

    fn names(terms: Vec<Term>) -> Vec<String> {
        terms.into_iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn current_and_past_orders_oldest_first() {
        let segs = [
            seg("x", 0, 10, 3, false),
            seg("y", 12, 20, 3, false),
            seg("z", 25, 29, 2, true),
        ];
        assert_eq!(names(CurrentAndPast.select(&segs, 30, 3)), ["x", "y", "z"]);
        assert_eq!(names(CurrentAndPast.select(&segs, 30, 2)), ["y", "z"]);
        assert_eq!(names(CurrentAndPast.select(&segs, 30, 1)), ["z"]);
        assert!(CurrentAndPast.select(&segs, 30, 0).is_empty());
    }

    #[test]
    fn current_slot_is_reserved() {
        let segs = [seg("x", 0, 10, 3, false), seg("y", 12, 20, 3, false)];
        assert_eq!(names(CurrentAndPast.select(&segs, 30, 3)), ["x", "y"]);
        let three = [seg("w", 0, 2, 1, false), segs[0].clone(), segs[1].clone()];
        assert_eq!(names(CurrentAndPast.select(&three, 30, 3)), ["x", "y"]);
    }

    #[test]
    fn future_segments_are_ignored() {
        let segs = [seg("x", 0, 10, 3, false), seg("y", 40, 50, 3, true)];
        assert_eq!(names(CurrentAndPast.select(&segs, 30, 3)), ["x"]);
        assert!(CurrentOnly.select(&segs, 30, 3).is_empty());
    }

    #[test]
    fn current_only_ranks_by_occurrences() {
        let segs = [
            seg("a", 0, 29, 10, true),
            seg("b", 3, 30, 14, true),
            seg("c", 6, 28, 11, true),
            seg("d", 9, 27, 12, true),
            seg("old", 0, 5, 40, false),
        ];
        assert_eq!(names(CurrentOnly.select(&segs, 30, 3)), ["b", "d", "c"]);
    }

    #[test]
    fn registry_lookup() {
        let reg = ContextPolicyRegistry::builtin();
        assert_eq!(reg.canonical_name("current-only"), Some("current_only"));
        assert!(reg.get("current_and_past").is_some());
        assert!(reg.get("nope").is_none());
        assert_eq!(reg.names().count(), 2);
    }
}
