//! Top-5 mAP variants as named, interchangeable match criteria.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use crate::config::EvalParams;
use crate::model::ObjectInteraction;

/// A match criterion plus the class key predictions are ranked under.
pub trait MatchVariant: Send + Sync {
    /// Registry key, e.g. `nv`.
    fn name(&self) -> &'static str;

    /// Human-readable name for reports.
    fn title(&self) -> &'static str;

    fn class_key(&self, noun: &str, verb: &str) -> String;

    /// Whether `pred` may be matched to `gt` given their box overlap.
    fn accepts(
        &self,
        pred: &ObjectInteraction,
        gt: &ObjectInteraction,
        overlap: f64,
        params: &EvalParams,
    ) -> bool;
}

#[derive(Debug, Clone, Copy)]
enum ClassBy {
    Noun,
    Verb,
    NounVerb,
}

/// A conjunction of the noun, verb, box and time-to-contact constraints.
#[derive(Debug, Clone, Copy)]
pub struct Constraints {
    name: &'static str,
    title: &'static str,
    noun: bool,
    verb: bool,
    bbox: bool,
    ttc: bool,
    class_by: ClassBy,
}

impl Constraints {
    pub const NOUN: Self = Self::new("n", "Noun", true, false, true, false, ClassBy::Noun);
    pub const NOUN_VERB: Self = Self::new("nv", "Noun-Verb", true, true, true, false, ClassBy::NounVerb);
    pub const NOUN_TTC: Self = Self::new("nt", "Noun-TTC", true, false, true, true, ClassBy::Noun);
    pub const OVERALL: Self = Self::new("all", "Overall", true, true, true, true, ClassBy::NounVerb);
    pub const NOUN_ONLY: Self = Self::new("no", "Noun-only", true, false, false, false, ClassBy::Noun);
    pub const VERB_ONLY: Self = Self::new("vo", "Verb-only", false, true, false, false, ClassBy::Verb);

    const fn new(
        name: &'static str,
        title: &'static str,
        noun: bool,
        verb: bool,
        bbox: bool,
        ttc: bool,
        class_by: ClassBy,
    ) -> Self {
        Self {
            name,
            title,
            noun,
            verb,
            bbox,
            ttc,
            class_by,
        }
    }
}

impl MatchVariant for Constraints {
    fn name(&self) -> &'static str {
        self.name
    }

    fn title(&self) -> &'static str {
        self.title
    }

    fn class_key(&self, noun: &str, verb: &str) -> String {
        match self.class_by {
            ClassBy::Noun => noun.to_string(),
            ClassBy::Verb => verb.to_string(),
            ClassBy::NounVerb => format!("{verb} {noun}"),
        }
    }

    fn accepts(
        &self,
        pred: &ObjectInteraction,
        gt: &ObjectInteraction,
        overlap: f64,
        params: &EvalParams,
    ) -> bool {
        (!self.noun || pred.noun == gt.noun)
            && (!self.verb || pred.verb == gt.verb)
            && (!self.bbox || overlap >= params.iou_threshold)
            && (!self.ttc || (pred.ttc - gt.ttc).abs() < params.t_delta)
    }
}

pub struct VariantRegistry {
    variants: BTreeMap<&'static str, Arc<dyn MatchVariant>>,
    order: Vec<&'static str>,
}

impl VariantRegistry {
    pub fn new() -> Self {
        Self {
            variants: BTreeMap::new(),
            order: Vec::new(),
        }
    }

    pub fn builtin() -> &'static VariantRegistry {
        static BUILTIN: OnceLock<VariantRegistry> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            let mut reg = VariantRegistry::new();
            for v in [
                Constraints::NOUN,
                Constraints::NOUN_VERB,
                Constraints::NOUN_TTC,
                Constraints::OVERALL,
                Constraints::NOUN_ONLY,
                Constraints::VERB_ONLY,
            ] {
                reg.register(v);
            }
            reg
        })
    }

    pub fn register<V: MatchVariant + 'static>(&mut self, variant: V) {
        let name = variant.name();
        if self.variants.insert(name, Arc::new(variant)).is_none() {
            self.order.push(name);
        }
    }

    /// Case-insensitive lookup.
    pub fn get(&self, name: &str) -> Option<Arc<dyn MatchVariant>> {
        self.variants.get(name.to_lowercase().as_str()).cloned()
    }

    /// All variants in registration order.
    pub fn all(&self) -> Vec<Arc<dyn MatchVariant>> {
        self.order.iter().map(|n| self.variants[n].clone()).collect()
    }

    pub fn names(&self) -> &[&'static str] {
        &self.order
    }
}

impl Default for VariantRegistry {
    fn default() -> Self {
        Self::new()
    }
}
