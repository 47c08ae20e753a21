//! Summarizer and evaluation configuration.
//!
//! The on-disk form is flat UTF-8 `key = value` text. Blank lines and lines
//! starting with `#` are ignored; unknown or repeated keys are errors. List
//! values are comma separated, merge-table entries are `from:to`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{normalize_label, Category, PerCategory};
use crate::policy::ContextPolicyRegistry;

/// Metric thresholds used by the evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    /// Inclusive box-overlap requirement.
    pub iou_threshold: f64,
    /// Strict time-to-contact tolerance in seconds.
    pub t_delta: f64,
    /// Smallest legal ground-truth time to contact.
    pub min_ttc: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            t_delta: 0.25,
            min_ttc: 0.033,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummarizerConfig {
    /// Maximum number of tokens between a verb and its noun.
    pub cutoff_distance: usize,
    /// Salient objects kept per frame.
    pub salient_k: usize,
    /// Held-object box match threshold (strict).
    pub theta_iou: f64,
    /// Occurrences needed before a segment is accepted.
    pub min_occurrences: PerCategory<usize>,
    /// Largest frame gap between consecutive occurrences of one segment.
    pub max_lapse: PerCategory<u64>,
    pub stride: u64,
    /// Frames of lookback processed for each prediction frame.
    pub window: u64,
    pub context_len: PerCategory<usize>,
    pub context_mode: PerCategory<&'static str>,
    pub eliminate_overlaps: PerCategory<bool>,
    pub include: BTreeSet<Category>,
    pub keep_generic_nouns: bool,
    /// Empty means unrestricted.
    pub vocab_noun: BTreeSet<String>,
    /// Empty means unrestricted.
    pub vocab_verb: BTreeSet<String>,
    pub generic_nouns: BTreeSet<String>,
    pub merge_table: BTreeMap<String, String>,
    pub eval: EvalParams,
    pub loss_lambda: f64,
}

impl Default for SummarizerConfig {
    fn default() -> Self {
        Self {
            cutoff_distance: 4,
            salient_k: 5,
            theta_iou: 0.25,
            min_occurrences: PerCategory::new(1, 7, 10),
            max_lapse: PerCategory::new(7, 7, 7),
            stride: 3,
            window: 150,
            context_len: PerCategory::new(3, 3, 3),
            context_mode: PerCategory::new("current_and_past", "current_and_past", "current_only"),
            eliminate_overlaps: PerCategory::new(true, true, false),
            include: Category::ALL.into_iter().collect(),
            keep_generic_nouns: true,
            vocab_noun: BTreeSet::new(),
            vocab_verb: BTreeSet::new(),
            generic_nouns: ["object", "something"].map(String::from).into(),
            merge_table: BTreeMap::new(),
            eval: EvalParams::default(),
            loss_lambda: 11.0,
        }
    }
}

fn per_category_key(prefix: &str, c: Category) -> String {
    format!("{prefix}.{}", c.key())
}

impl SummarizerConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("expected `key = value`, got {line:?}")))?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::parse(line_no, format!("duplicate key `{key}`")));
            }
            cfg.apply(key, value, line_no)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        if let Some((prefix, cat)) = key.split_once('.') {
            let c =
                Category::from_key(cat).ok_or_else(|| Error::parse(line, format!("unknown key `{key}`")))?;
            match prefix {
                "p_o" => self
                    .min_occurrences
                    .set(c, parse_count(key, value, line)? as usize),
                "p_l" => self.max_lapse.set(c, parse_count(key, value, line)?),
                "l" => self.context_len.set(c, parse_count(key, value, line)? as usize),
                "eliminate" => self.eliminate_overlaps.set(c, parse_bool(value, line)?),
                "mode" => {
                    let name = ContextPolicyRegistry::builtin()
                        .canonical_name(value)
                        .ok_or_else(|| Error::validation(key, format!("unknown context mode {value:?}")))?;
                    self.context_mode.set(c, name);
                }
                _ => return Err(Error::parse(line, format!("unknown key `{key}`"))),
            }
            return Ok(());
        }
        match key {
            "d" => self.cutoff_distance = parse_count(key, value, line)? as usize,
            "k" => self.salient_k = parse_count(key, value, line)? as usize,
            "theta_iou" => self.theta_iou = parse_real(value, line)?,
            "stride" => self.stride = parse_count(key, value, line)?,
            "window" => self.window = parse_count(key, value, line)?,
            "keep_generic_nouns" => self.keep_generic_nouns = parse_bool(value, line)?,
            "include" => {
                let mut include = BTreeSet::new();
                for item in split_list(value) {
                    let c = Category::from_key(&item)
                        .ok_or_else(|| Error::validation(key, format!("unknown category {item:?}")))?;
                    include.insert(c);
                }
                self.include = include;
            }
            "vocab_noun" => self.vocab_noun = parse_labels(key, value)?,
            "vocab_verb" => self.vocab_verb = parse_labels(key, value)?,
            "generic_nouns" => self.generic_nouns = parse_labels(key, value)?,
            "merge_table" => {
                let mut table = BTreeMap::new();
                for item in split_list(value) {
                    let (from, to) = item.split_once(':').ok_or_else(|| {
                        Error::parse(line, format!("merge entry {item:?} is not `from:to`"))
                    })?;
                    table.insert(
                        normalize_label(from).map_err(|e| Error::validation(key, e.to_string()))?,
                        normalize_label(to).map_err(|e| Error::validation(key, e.to_string()))?,
                    );
                }
                self.merge_table = table;
            }
            "iou_threshold" => self.eval.iou_threshold = parse_real(value, line)?,
            "t_delta" => self.eval.t_delta = parse_real(value, line)?,
            "min_ttc" => self.eval.min_ttc = parse_real(value, line)?,
            "lambda" => self.loss_lambda = parse_real(value, line)?,
            _ => return Err(Error::parse(line, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |key: &str, v: f64| {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::validation(key, format!("{v} outside [0, 1]")))
            }
        };
        unit("theta_iou", self.theta_iou)?;
        unit("iou_threshold", self.eval.iou_threshold)?;
        if !(self.eval.t_delta.is_finite() && self.eval.t_delta > 0.0) {
            return Err(Error::validation("t_delta", "must be > 0"));
        }
        if !(self.eval.min_ttc.is_finite() && self.eval.min_ttc >= 0.0) {
            return Err(Error::validation("min_ttc", "must be >= 0"));
        }
        if !(self.loss_lambda.is_finite() && self.loss_lambda > 0.0) {
            return Err(Error::validation("lambda", "must be > 0"));
        }
        if self.stride == 0 {
            return Err(Error::validation("stride", "must be >= 1"));
        }
        for c in Category::ALL {
            if self.min_occurrences.get(c) == 0 {
                return Err(Error::validation(per_category_key("p_o", c), "must be >= 1"));
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse(serialize())` reproduces the config.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let join = |set: &BTreeSet<String>| set.iter().cloned().collect::<Vec<_>>().join(", ");
        let _ = writeln!(out, "d = {}", self.cutoff_distance);
        let _ = writeln!(out, "k = {}", self.salient_k);
        let _ = writeln!(out, "theta_iou = {}", self.theta_iou);
        for c in Category::ALL {
            let _ = writeln!(out, "p_o.{} = {}", c.key(), self.min_occurrences.get(c));
        }
        for c in Category::ALL {
            let _ = writeln!(out, "p_l.{} = {}", c.key(), self.max_lapse.get(c));
        }
        let _ = writeln!(out, "stride = {}", self.stride);
        let _ = writeln!(out, "window = {}", self.window);
        for c in Category::ALL {
            let _ = writeln!(out, "l.{} = {}", c.key(), self.context_len.get(c));
        }
        for c in Category::ALL {
            let _ = writeln!(out, "mode.{} = {}", c.key(), self.context_mode.get(c));
        }
        for c in Category::ALL {
            let _ = writeln!(out, "eliminate.{} = {}", c.key(), self.eliminate_overlaps.get(c));
        }
        let include: Vec<_> = self.include.iter().map(|c| c.key()).collect();
        let _ = writeln!(out, "include = {}", include.join(", "));
        let _ = writeln!(out, "keep_generic_nouns = {}", self.keep_generic_nouns);
        let _ = writeln!(out, "vocab_noun = {}", join(&self.vocab_noun));
        let _ = writeln!(out, "vocab_verb = {}", join(&self.vocab_verb));
        let _ = writeln!(out, "generic_nouns = {}", join(&self.generic_nouns));
        let merge: Vec<_> = self
            .merge_table
            .iter()
            .map(|(from, to)| format!("{from}:{to}"))
            .collect();
        let _ = writeln!(out, "merge_table = {}", merge.join(", "));
        let _ = writeln!(out, "iou_threshold = {}", self.eval.iou_threshold);
        let _ = writeln!(out, "t_delta = {}", self.eval.t_delta);
        let _ = writeln!(out, "min_ttc = {}", self.eval.min_ttc);
        let _ = writeln!(out, "lambda = {}", self.loss_lambda);
        out
    }

    /// Short SHA-256 fingerprint of the canonical text form.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.serialize().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Nouns allowed in action pairs: vocabulary plus generic nouns.
    pub fn allows_action_noun(&self, noun: &str) -> bool {
        self.vocab_noun.is_empty() || self.vocab_noun.contains(noun) || self.generic_nouns.contains(noun)
    }

    pub fn allows_verb(&self, verb: &str) -> bool {
        self.vocab_verb.is_empty() || self.vocab_verb.contains(verb)
    }

    pub fn allows_salient(&self, label: &str) -> bool {
        self.vocab_noun.is_empty() || self.vocab_noun.contains(label)
    }

    pub fn merged_label<'a>(&'a self, label: &'a str) -> &'a str {
        self.merge_table.get(label).map(String::as_str).unwrap_or(label)
    }
}

fn split_list(value: &str) -> impl Iterator<Item = String> + '_ {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

fn parse_labels(key: &str, value: &str) -> Result<BTreeSet<String>> {
    split_list(value)
        .map(|s| normalize_label(&s).map_err(|e| Error::validation(key, e.to_string())))
        .collect()
}

fn parse_count(key: &str, value: &str, line: usize) -> Result<u64> {
    let v: i64 = value
        .parse()
        .map_err(|_| Error::parse(line, format!("`{key}` expects an integer, got {value:?}")))?;
    u64::try_from(v).map_err(|_| Error::validation(key, format!("{v} is negative")))
}

fn parse_real(value: &str, line: usize) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::parse(line, format!("expected a number, got {value:?}")))
}

fn parse_bool(value: &str, line: usize) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::parse(
            line,
            format!("expected true or false, got {value:?}"),
        )),
    }
}
