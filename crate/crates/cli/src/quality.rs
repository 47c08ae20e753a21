use std::io::Write;

use anyhow::{Context, Result};
use context_forge_core::embedding::EmbeddingTable;
use context_forge_core::io::{read_jsonl, ContextRecord};
use context_forge_core::metrics::{context_quality, QualityReport};
use log::warn;
use serde::Serialize;

use crate::files::{create, load_config, load_ground_truth, open};
use crate::QualityArgs;

#[derive(Serialize)]
struct Report<'a> {
    version: &'static str,
    config_fingerprint: String,
    #[serde(flatten)]
    report: &'a QualityReport,
}

pub fn run(args: QualityArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let table = EmbeddingTable::load(&args.embeddings)
        .with_context(|| format!("embeddings {}", args.embeddings.display()))?;
    let gt = load_ground_truth(&args.gt)?;

    let source = format!("contexts {}", args.contexts.display());
    let mut frames = Vec::new();
    let mut unmatched = 0usize;
    for item in read_jsonl::<ContextRecord>(open(&args.contexts)?) {
        let (_, rec) = item.with_context(|| source.clone())?;
        match gt.get(&(rec.video_id.clone(), rec.frame_id)) {
            Some(g) => frames.push((rec.context(), g.clone())),
            None => unmatched += 1,
        }
    }
    if unmatched > 0 {
        warn!("{unmatched} contexts have no ground truth and were skipped");
    }
    let report = context_quality(&frames, &table)?;

    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "frames: {}  config: {}", report.frames, cfg.fingerprint())?;
    writeln!(stdout, "exact noun hits     {:.4}", report.exact_noun_hits)?;
    writeln!(stdout, "exact verb hits     {:.4}", report.exact_verb_hits)?;
    writeln!(stdout, "noun similarity     {:.4}", report.avg_embed_sim_noun)?;
    writeln!(stdout, "verb similarity     {:.4}", report.avg_embed_sim_verb)?;
    writeln!(stdout, "salient similarity  {:.4}", report.avg_embed_sim_salient)?;
    writeln!(stdout, "frame coverage      {:.4}", report.frame_coverage)?;
    writeln!(stdout, "salient precision   {:.4}", report.salient_precision)?;
    writeln!(stdout, "salient recall      {:.4}", report.salient_recall)?;
    if let Some(path) = &args.out {
        let mut out = create(Some(path))?;
        let doc = Report {
            version: env!("CARGO_PKG_VERSION"),
            config_fingerprint: cfg.fingerprint(),
            report: &report,
        };
        serde_json::to_writer_pretty(&mut out, &doc).context("cannot write report")?;
        writeln!(out)?;
        out.flush()?;
    }
    Ok(())
}
