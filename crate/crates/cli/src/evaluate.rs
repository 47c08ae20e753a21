use std::collections::HashSet;
use std::io::Write;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use context_forge_core::io::{read_jsonl, InteractionRecord};
use context_forge_core::metrics::{ApAccumulator, EvalReport, MatchVariant, VariantRegistry};
use context_forge_core::Error;
use serde::Serialize;

use crate::files::{create, load_config, load_ground_truth, open, FrameKey};
use crate::EvaluateArgs;

#[derive(Serialize)]
struct Report<'a> {
    version: &'static str,
    config_fingerprint: String,
    #[serde(flatten)]
    report: &'a EvalReport,
}

pub fn select_variants(names: &[String]) -> Result<Vec<Arc<dyn MatchVariant>>> {
    let registry = VariantRegistry::builtin();
    if names.is_empty() {
        return Ok(registry.all());
    }
    let mut out: Vec<Arc<dyn MatchVariant>> = Vec::new();
    for name in names {
        let Some(v) = registry.get(name) else {
            bail!(Error::validation(
                "variant",
                format!(
                    "unknown variant {name:?}; expected one of {}",
                    registry.names().join(", ")
                )
            ));
        };
        if !out.iter().any(|o| o.name() == v.name()) {
            out.push(v);
        }
    }
    Ok(out)
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let variants = select_variants(&args.variants)?;
    let gt = load_ground_truth(&args.gt)?;
    let mut accs: Vec<ApAccumulator> = variants
        .iter()
        .map(|v| ApAccumulator::new(v.clone(), cfg.eval))
        .collect();

    let source = format!("predictions {}", args.preds.display());
    let mut seen: HashSet<FrameKey> = HashSet::new();
    for item in read_jsonl::<InteractionRecord>(open(&args.preds)?) {
        let (line, rec) = item.with_context(|| source.clone())?;
        let preds = rec
            .predictions()
            .map_err(|e| e.at_line(line))
            .with_context(|| source.clone())?;
        let key = rec.key();
        if !seen.insert(key.clone()) {
            return Err(Error::parse(
                line,
                format!("frame {} of video {} listed twice", key.1, key.0),
            ))
            .context(source);
        }
        let gts = gt.get(&key).map(Vec::as_slice).unwrap_or(&[]);
        for acc in &mut accs {
            acc.add_frame(&preds, gts);
        }
    }
    let mut unpredicted: Vec<&FrameKey> = gt.keys().filter(|k| !seen.contains(*k)).collect();
    unpredicted.sort();
    for key in &unpredicted {
        for acc in &mut accs {
            acc.add_frame(&[], &gt[*key]);
        }
    }

    let report = EvalReport {
        frames: seen.len() + unpredicted.len(),
        variants: accs.iter().map(ApAccumulator::finish).collect(),
    };
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "frames: {}  config: {}", report.frames, cfg.fingerprint())?;
    for v in &report.variants {
        writeln!(
            stdout,
            "{:<10} {:>7.2}  ({} classes)",
            v.title, v.map, v.classes_with_gt
        )?;
    }
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
