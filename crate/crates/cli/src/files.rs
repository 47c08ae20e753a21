use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use context_forge_core::io::{read_jsonl, InteractionRecord};
use context_forge_core::{Error, ObjectInteraction, SummarizerConfig};

pub fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(file)))
}

/// Buffered writer to `path`, or standard output.
pub fn create(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn load_config(path: Option<&Path>) -> Result<SummarizerConfig> {
    match path {
        Some(p) => SummarizerConfig::load(p).with_context(|| format!("config {}", p.display())),
        None => Ok(SummarizerConfig::default()),
    }
}

pub type FrameKey = (String, u64);

/// Ground truth keyed by `(video_id, frame_id)`; repeated frames are errors.
pub fn load_ground_truth(path: &Path) -> Result<HashMap<FrameKey, Vec<ObjectInteraction>>> {
    let mut out = HashMap::new();
    for item in read_jsonl::<InteractionRecord>(open(path)?) {
        let (line, rec) = item.with_context(|| format!("ground truth {}", path.display()))?;
        let gts = rec
            .ground_truth()
            .map_err(|e| e.at_line(line))
            .with_context(|| format!("ground truth {}", path.display()))?;
        if out.insert(rec.key(), gts).is_some() {
            return Err(Error::parse(
                line,
                format!("frame {} of video {} listed twice", rec.frame_id, rec.video_id),
            ))
            .with_context(|| format!("ground truth {}", path.display()));
        }
    }
    Ok(out)
}
