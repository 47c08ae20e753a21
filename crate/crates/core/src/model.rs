//! Domain types shared by the summarizer, the evaluator and the CLI.
//!
//! Everything here is plain data: immutable after construction, `Send + Sync`,
//! and validated at the boundary so downstream code can rely on the invariants.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercase, trim and collapse internal whitespace.
///
/// Labels are compared by exact string match after this step, and they may
/// not contain `,` or `;` since those delimit the rendered context text.
pub fn normalize_label(raw: &str) -> Result<String> {
    let label = raw
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    if label.is_empty() {
        return Err(Error::validation("label", "empty label"));
    }
    if label.contains([',', ';']) {
        return Err(Error::validation(
            "label",
            format!("label {label:?} contains a reserved delimiter"),
        ));
    }
    Ok(label)
}

/// Axis-aligned box in corner form, continuous pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BoundingBox {
    /// Rejects non-finite, negative and zero-area boxes.
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let coords = [x1, y1, x2, y2];
        if coords.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::validation(
                "box",
                format!("coordinates must be finite and non-negative, got {coords:?}"),
            ));
        }
        if x1 >= x2 || y1 >= y2 {
            return Err(Error::validation(
                "box",
                format!("degenerate box {coords:?} (need x1 < x2 and y1 < y2)"),
            ));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1) * (self.y2 - self.y1)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(c: [f64; 4]) -> Result<Self> {
        BoundingBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        b.to_array()
    }
}

/// Coarse part-of-speech tag as emitted by the upstream tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Verb,
    Noun,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    #[serde(default)]
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
}

impl TaggedToken {
    pub fn new(surface: &str, lemma: &str, pos: Pos) -> Self {
        Self {
            surface: surface.to_string(),
            lemma: lemma.to_string(),
            pos,
        }
    }
}

/// A verb-noun action description such as `cut wood`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionPair {
    pub verb: String,
    pub noun: String,
}

impl ActionPair {
    /// Normalizes both lemmas. The verb must be a single word.
    pub fn new(verb: &str, noun: &str) -> Result<Self> {
        let verb = normalize_label(verb)?;
        if verb.contains(' ') {
            return Err(Error::validation(
                "verb",
                format!("verb lemma {verb:?} must be a single word"),
            ));
        }
        Ok(Self {
            verb,
            noun: normalize_label(noun)?,
        })
    }
}

impl fmt::Display for ActionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.verb, self.noun)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub score: f64,
}

/// One frame's serialized upstream signals. Every list may be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub video_id: String,
    pub frame_id: u64,
    #[serde(default)]
    pub captions: Vec<Vec<TaggedToken>>,
    #[serde(default)]
    pub label_scores: BTreeMap<String, f64>,
    #[serde(default)]
    pub active_boxes: Vec<BoundingBox>,
    #[serde(default)]
    pub detections: Vec<Detection>,
    /// Marks the frame as one to emit an action context for.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub predict: bool,
}

impl FrameRecord {
    pub fn empty(video_id: &str, frame_id: u64) -> Self {
        Self {
            video_id: video_id.to_string(),
            frame_id,
            captions: Vec::new(),
            label_scores: BTreeMap::new(),
            active_boxes: Vec::new(),
            detections: Vec::new(),
            predict: false,
        }
    }

    /// Normalizes labels and lemmas in place and checks value ranges.
    pub fn normalize(mut self) -> Result<Self> {
        if self.video_id.is_empty() {
            return Err(Error::validation("video_id", "empty video id"));
        }
        for caption in &mut self.captions {
            for token in caption.iter_mut() {
                token.lemma = normalize_label(&token.lemma)
                    .map_err(|_| Error::validation("lemma", "empty or reserved lemma"))?;
            }
        }
        let mut scores = BTreeMap::new();
        for (label, score) in std::mem::take(&mut self.label_scores) {
            if !score.is_finite() || !(-1.0..=1.0).contains(&score) {
                return Err(Error::validation(
                    "label_scores",
                    format!("score {score} for {label:?} outside [-1, 1]"),
                ));
            }
            scores.insert(normalize_label(&label)?, score);
        }
        self.label_scores = scores;
        for det in &mut self.detections {
            det.label = normalize_label(&det.label)?;
            if !det.score.is_finite() {
                return Err(Error::validation("detections", "non-finite score"));
            }
        }
        Ok(self)
    }
}

/// Ground-truth next object interaction `(box, noun, verb, time to contact)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInteraction {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub noun: String,
    pub verb: String,
    pub ttc: f64,
}

impl ObjectInteraction {
    pub fn new(bbox: BoundingBox, noun: &str, verb: &str, ttc: f64) -> Result<Self> {
        if !ttc.is_finite() || ttc < 0.0 {
            return Err(Error::validation("ttc", format!("ttc {ttc} must be >= 0")));
        }
        Ok(Self {
            bbox,
            noun: normalize_label(noun)?,
            verb: normalize_label(verb)?,
            ttc,
        })
    }
}

/// A scored model output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub interaction: ObjectInteraction,
    pub score: f64,
    pub frame_id: u64,
}

impl Prediction {
    pub fn new(interaction: ObjectInteraction, score: f64, frame_id: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::validation(
                "score",
                format!("score {score} outside [0, 1]"),
            ));
        }
        Ok(Self {
            interaction,
            score,
            frame_id,
        })
    }
}

/// The three action-context categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "a")]
    Action,
    #[serde(rename = "nh")]
    Held,
    #[serde(rename = "ns")]
    Salient,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Action, Category::Held, Category::Salient];

    /// Short key used in config files and reports.
    pub fn key(self) -> &'static str {
        match self {
            Category::Action => "a",
            Category::Held => "nh",
            Category::Salient => "ns",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Category::ALL.into_iter().find(|c| c.key() == key)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Action => "A",
            Category::Held => "N_h",
            Category::Salient => "N_s",
        })
    }
}

/// Per-category values, indexed by [`Category`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerCategory<T> {
    pub action: T,
    pub held: T,
    pub salient: T,
}

impl<T: Copy> PerCategory<T> {
    pub const fn new(action: T, held: T, salient: T) -> Self {
        Self {
            action,
            held,
            salient,
        }
    }

    pub fn get(&self, c: Category) -> T {
        match c {
            Category::Action => self.action,
            Category::Held => self.held,
            Category::Salient => self.salient,
        }
    }

    pub fn set(&mut self, c: Category, value: T) {
        match c {
            Category::Action => self.action = value,
            Category::Held => self.held = value,
            Category::Salient => self.salient = value,
        }
    }
}

/// What a segment is about: an action pair or an object label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Term {
    Action(ActionPair),
    Label(String),
}

impl Term {
    pub fn as_action(&self) -> Option<&ActionPair> {
        match self {
            Term::Action(p) => Some(p),
            Term::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Term::Label(l) => Some(l),
            Term::Action(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Action(p) => p.fmt(f),
            Term::Label(l) => f.write_str(l),
        }
    }
}

/// A contiguous run of one term, accepted by the cross-frame aggregation.
///
/// `end_frame` is the last recorded occurrence. `active` means the run had not
/// lapsed when the stream it came from ended.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub category: Category,
    pub term: Term,
    pub start_frame: u64,
    pub end_frame: u64,
    pub occurrences: usize,
    pub active: bool,
}

impl Segment {
    pub fn overlaps(&self, other: &Segment) -> bool {
        self.start_frame <= other.end_frame && other.start_frame <= self.end_frame
    }
}

/// The rendered summary for one prediction frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionContext {
    pub action_segments: Vec<ActionPair>,
    pub held_objects: Vec<String>,
    pub salient_objects: Vec<String>,
    pub text: String,
}

impl ActionContext {
    pub fn is_empty(&self) -> bool {
        self.action_segments.is_empty() && self.held_objects.is_empty() && self.salient_objects.is_empty()
    }
}
