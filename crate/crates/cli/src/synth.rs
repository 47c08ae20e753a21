use std::io::Write;

use anyhow::{Context, Result};
use context_forge_core::io::write_jsonl;
use context_forge_core::Error;
use context_forge_synth::{gen_scenario, to_records, Noise, ScenarioParams};

use crate::files::create;
use crate::SynthArgs;

pub fn run(args: SynthArgs) -> Result<()> {
    let params = ScenarioParams {
        n_frames: args.n_frames,
        n_terms: args.n_terms,
        noise: Noise {
            drop_rate: args.drop_rate,
            spurious_rate: args.spurious_rate,
        },
        ..ScenarioParams::default()
    };
    let mut out = create(args.out.as_deref())?;
    let mut planted = match &args.planted {
        Some(p) => Some(create(Some(p))?),
        None => None,
    };
    for v in 0..args.videos {
        let seed = args.seed.wrapping_add(v as u64);
        let scenario = gen_scenario(seed, &params).map_err(|e| Error::validation("synth", e.to_string()))?;
        let video = format!("synth-{seed:04}");
        for rec in to_records(&video, &scenario, args.predict_every) {
            write_jsonl(&mut out, &rec)?;
        }
        if let Some(w) = &mut planted {
            for seg in &scenario.planted {
                write_jsonl(&mut *w, &serde_json::json!({ "video_id": video, "segment": seg }))?;
            }
        }
    }
    out.flush().context("cannot write scenario")?;
    if let Some(w) = &mut planted {
        w.flush()?;
    }
    Ok(())
}
