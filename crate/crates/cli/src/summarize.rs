use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use anyhow::{Context, Result};
use context_forge_core::io::{read_frame_records, write_jsonl, ContextRecord};
use context_forge_core::summarize::{summarize_video, VideoSummary};
use context_forge_core::{Error, FrameRecord, SummarizerConfig};
use log::info;
use rayon::prelude::*;

use crate::files::{create, load_config, open};
use crate::SummarizeArgs;

/// Videos handed to the pool at once; bounds how many are held in memory.
const BATCH_PER_WORKER: usize = 2;

pub fn run(args: SummarizeArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("cannot start worker pool")?;
    let batch_size = pool.current_num_threads() * BATCH_PER_WORKER;
    info!(
        "config {} with {} workers",
        cfg.fingerprint(),
        pool.current_num_threads()
    );

    let mut done: BTreeMap<String, VideoSummary> = BTreeMap::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut batch: Vec<(String, Vec<FrameRecord>)> = Vec::new();
    let mut current: Option<(String, Vec<FrameRecord>)> = None;

    let flush = |batch: &mut Vec<(String, Vec<FrameRecord>)>,
                 done: &mut BTreeMap<String, VideoSummary>|
     -> Result<()> {
        let results: Vec<_> = pool.install(|| {
            batch
                .par_iter()
                .map(|(video, records)| summarize_video(video, records, &cfg))
                .collect()
        });
        for summary in results {
            let summary = summary?;
            done.insert(summary.video_id.clone(), summary);
        }
        batch.clear();
        Ok(())
    };

    let source = format!("frames {}", args.frames.display());
    for item in read_frame_records(open(&args.frames)?) {
        let (line, rec) = item.with_context(|| source.clone())?;
        match &mut current {
            Some((video, records)) if *video == rec.video_id => records.push(rec),
            _ => {
                if !seen.insert(rec.video_id.clone()) {
                    return Err(Error::parse(
                        line,
                        format!("records of video {} are not contiguous", rec.video_id),
                    ))
                    .context(source);
                }
                if let Some(finished) = current.replace((rec.video_id.clone(), vec![rec])) {
                    batch.push(finished);
                }
                if batch.len() >= batch_size {
                    flush(&mut batch, &mut done)?;
                }
            }
        }
    }
    batch.extend(current);
    flush(&mut batch, &mut done)?;

    write_output(&args, &cfg, &done)
}

fn write_output(
    args: &SummarizeArgs,
    cfg: &SummarizerConfig,
    done: &BTreeMap<String, VideoSummary>,
) -> Result<()> {
    let mut out = create(args.out.as_deref())?;
    for summary in done.values() {
        for frame in &summary.frames {
            write_jsonl(
                &mut out,
                &ContextRecord::new(&summary.video_id, frame.frame_id, &frame.context),
            )?;
        }
    }
    out.flush().context("cannot write summaries")?;

    eprintln!("config {}", cfg.fingerprint());
    for summary in done.values() {
        let s = &summary.stats;
        eprintln!(
            "{}: {} frames, {} contexts ({} empty), segments A={} N_h={} N_s={}",
            summary.video_id,
            s.frames,
            s.prediction_frames,
            s.empty_contexts,
            s.segments.action,
            s.segments.held,
            s.segments.salient,
        );
    }
    Ok(())
}
