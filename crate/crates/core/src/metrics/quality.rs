//! How well generated action contexts describe the upcoming interaction.
//!
//! A frame's reference is its first listed ground-truth interaction. Noun
//! context words are the action-pair nouns, held objects and salient objects;
//! verb context words are the action-pair verbs. Similarities are dot products
//! of the unit-normalized mean context vector and the unit reference vector,
//! averaged over frames where both vectors exist.

use serde::Serialize;

use crate::embedding::{dot, EmbeddingTable};
use crate::error::{Error, Result};
use crate::model::{ActionContext, ObjectInteraction};

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct QualityReport {
    pub frames: usize,
    pub exact_noun_hits: f64,
    pub exact_verb_hits: f64,
    pub avg_embed_sim_noun: f64,
    pub avg_embed_sim_verb: f64,
    pub avg_embed_sim_salient: f64,
    pub frame_coverage: f64,
    pub salient_precision: f64,
    pub salient_recall: f64,
    /// Context or reference words absent from the embedding table.
    pub missing_words: usize,
}

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.n += 1;
    }

    fn value(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }
}

fn fraction(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Score contexts against ground truth. Frames without ground truth are
/// skipped.
pub fn context_quality(
    frames: &[(ActionContext, Vec<ObjectInteraction>)],
    table: &EmbeddingTable,
) -> Result<QualityReport> {
    if table.is_empty() {
        return Err(Error::Config("embedding table is empty".into()));
    }
    let mut report = QualityReport::default();
    let (mut noun_hits, mut verb_hits, mut covered) = (0, 0, 0);
    let (mut salient_slots, mut salient_correct, mut salient_recalled) = (0, 0, 0);
    let (mut sim_noun, mut sim_verb, mut sim_salient) = (Mean::default(), Mean::default(), Mean::default());

    for (ctx, gts) in frames {
        let Some(reference) = gts.first() else { continue };
        report.frames += 1;

        let nouns: Vec<&str> = ctx
            .action_segments
            .iter()
            .map(|p| p.noun.as_str())
            .chain(ctx.held_objects.iter().map(String::as_str))
            .chain(ctx.salient_objects.iter().map(String::as_str))
            .collect();
        let verbs: Vec<&str> = ctx.action_segments.iter().map(|p| p.verb.as_str()).collect();
        let salient: Vec<&str> = ctx.salient_objects.iter().map(String::as_str).collect();

        if !ctx.is_empty() {
            covered += 1;
        }
        if nouns.contains(&reference.noun.as_str()) {
            noun_hits += 1;
        }
        if verbs.contains(&reference.verb.as_str()) {
            verb_hits += 1;
        }
        salient_slots += salient.len();
        let correct = salient.iter().filter(|s| **s == reference.noun).count();
        salient_correct += correct;
        if correct > 0 {
            salient_recalled += 1;
        }

        for word in nouns
            .iter()
            .chain(&verbs)
            .chain([&reference.noun.as_str(), &reference.verb.as_str()])
        {
            if table.mean_unit([*word]).is_none() {
                report.missing_words += 1;
            }
        }
        let noun_ref = table.mean_unit([reference.noun.as_str()]);
        let verb_ref = table.mean_unit([reference.verb.as_str()]);
        if let (Some(c), Some(r)) = (table.mean_unit(nouns.iter().copied()), &noun_ref) {
            sim_noun.push(dot(&c, r));
        }
        if let (Some(c), Some(r)) = (table.mean_unit(verbs.iter().copied()), &verb_ref) {
            sim_verb.push(dot(&c, r));
        }
        if let (Some(c), Some(r)) = (table.mean_unit(salient.iter().copied()), &noun_ref) {
            sim_salient.push(dot(&c, r));
        }
    }

    report.exact_noun_hits = fraction(noun_hits, report.frames);
    report.exact_verb_hits = fraction(verb_hits, report.frames);
    report.frame_coverage = fraction(covered, report.frames);
    report.salient_precision = fraction(salient_correct, salient_slots);
    report.salient_recall = fraction(salient_recalled, report.frames);
    report.avg_embed_sim_noun = sim_noun.value();
    report.avg_embed_sim_verb = sim_verb.value();
    report.avg_embed_sim_salient = sim_salient.value();
    Ok(report)
}
