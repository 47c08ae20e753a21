//! Line-delimited JSON records.
//!
//! Blank lines are skipped; every decode error carries its 1-based line.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionContext, ActionPair, BoundingBox, FrameRecord, ObjectInteraction, Prediction};

/// Decode one record per non-blank line, yielding `(line, record)`.
pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, T)>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        match line {
            Err(e) => Some(Err(Error::Io(e))),
            Ok(text) if text.trim().is_empty() => None,
            Ok(text) => Some(
                serde_json::from_str(&text)
                    .map(|v| (line_no, v))
                    .map_err(|e| Error::parse(line_no, e.to_string())),
            ),
        }
    })
}

/// Frame records, normalized. Errors name the offending line.
pub fn read_frame_records(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, FrameRecord)>> {
    read_jsonl::<FrameRecord>(reader).map(|r| {
        let (line, rec) = r?;
        rec.normalize()
            .map(|rec| (line, rec))
            .map_err(|e| e.at_line(line))
    })
}

pub fn write_jsonl<T: Serialize>(mut w: impl Write, record: &T) -> Result<()> {
    serde_json::to_writer(&mut w, record).map_err(|e| Error::Io(e.into()))?;
    w.write_all(b"\n")?;
    Ok(())
}

/// One interaction entry; predictions carry a score, ground truth does not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEntry {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub noun: String,
    pub verb: String,
    pub ttc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// All interactions of one frame, used for both predictions and ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub video_id: String,
    pub frame_id: u64,
    #[serde(default)]
    pub entries: Vec<InteractionEntry>,
}

impl InteractionEntry {
    pub fn interaction(&self) -> Result<ObjectInteraction> {
        ObjectInteraction::new(self.bbox, &self.noun, &self.verb, self.ttc)
    }
}

impl InteractionRecord {
    pub fn key(&self) -> (String, u64) {
        (self.video_id.clone(), self.frame_id)
    }

    pub fn ground_truth(&self) -> Result<Vec<ObjectInteraction>> {
        self.entries.iter().map(InteractionEntry::interaction).collect()
    }

    /// Every entry must carry a score.
    pub fn predictions(&self) -> Result<Vec<Prediction>> {
        self.entries
            .iter()
            .map(|e| {
                let score = e
                    .score
                    .ok_or_else(|| Error::validation("score", "prediction without a score"))?;
                Prediction::new(e.interaction()?, score, self.frame_id)
            })
            .collect()
    }
}

/// The summary emitted for one prediction frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRecord {
    pub video_id: String,
    pub frame_id: u64,
    pub text: String,
    pub action_terms: Vec<ActionPair>,
    pub held: Vec<String>,
    pub salient: Vec<String>,
}

impl ContextRecord {
    pub fn new(video_id: &str, frame_id: u64, ctx: &ActionContext) -> Self {
        Self {
            video_id: video_id.to_string(),
            frame_id,
            text: ctx.text.clone(),
            action_terms: ctx.action_segments.clone(),
            held: ctx.held_objects.clone(),
            salient: ctx.salient_objects.clone(),
        }
    }

    pub fn context(&self) -> ActionContext {
        ActionContext {
            action_segments: self.action_terms.clone(),
            held_objects: self.held.clone(),
            salient_objects: self.salient.clone(),
            text: self.text.clone(),
        }
    }
}
