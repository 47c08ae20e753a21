mod common;

use std::fs;

use common::*;
use context_forge_core::config::EvalParams;
use context_forge_core::io::{write_jsonl, InteractionEntry, InteractionRecord};
use context_forge_core::{BoundingBox, ObjectInteraction, Prediction};
use context_forge_synth::oracle_map;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn version_and_usage_errors() {
    let v = run(&["--version"]);
    assert!(v.status.success());
    assert!(stdout(&v).starts_with("context-forge "));
    assert_eq!(run(&["summarize"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
}

#[test]
fn summarize_writes_one_line_per_prediction_frame() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames.jsonl");
    let out = dir.path().join("ctx.jsonl");
    let s = run(&[
        "synth",
        "--seed",
        "3",
        "--n-frames",
        "100",
        "--predict-every",
        "10",
        "--out",
        path_str(&frames),
    ]);
    assert!(s.status.success(), "{}", stderr(&s));
    assert_eq!(fs::read_to_string(&frames).unwrap().lines().count(), 100);
    let r = run(&[
        "summarize",
        "--frames",
        path_str(&frames),
        "--out",
        path_str(&out),
    ]);
    assert!(r.status.success(), "{}", stderr(&r));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 10);
    assert!(stderr(&r).contains("synth-0003: 100 frames, 10 contexts"));
}

#[test]
fn truncated_record_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames.jsonl");
    let mut text = String::new();
    for f in 0..6 {
        text.push_str(&format!("{{\"video_id\":\"v\",\"frame_id\":{}}}\n", f * 3));
    }
    text.push_str("{\"video_id\":\"v\",\"fra\n");
    fs::write(&frames, text).unwrap();
    let r = run(&["summarize", "--frames", path_str(&frames)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("line 7"), "{}", stderr(&r));
}

#[test]
fn input_problems_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    assert_eq!(
        run(&["summarize", "--frames", path_str(&missing)]).status.code(),
        Some(2)
    );

    let split = dir.path().join("split.jsonl");
    fs::write(
        &split,
        "{\"video_id\":\"a\",\"frame_id\":0}\n{\"video_id\":\"b\",\"frame_id\":0}\n{\"video_id\":\"a\",\"frame_id\":3}\n",
    )
    .unwrap();
    let r = run(&["summarize", "--frames", path_str(&split)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("line 3"), "{}", stderr(&r));

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "window = -5\n").unwrap();
    let r = run(&[
        "summarize",
        "--frames",
        path_str(&split),
        "--config",
        path_str(&cfg),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("window"), "{}", stderr(&r));
}

fn entry(o: &ObjectInteraction, score: Option<f64>) -> InteractionEntry {
    InteractionEntry {
        bbox: o.bbox,
        noun: o.noun.clone(),
        verb: o.verb.clone(),
        ttc: o.ttc,
        score,
    }
}

fn write_frames(path: &std::path::Path, frames: &[(u64, Vec<InteractionEntry>)]) {
    let mut buf = Vec::new();
    for (f, entries) in frames {
        let rec = InteractionRecord {
            video_id: "v".into(),
            frame_id: *f,
            entries: entries.clone(),
        };
        write_jsonl(&mut buf, &rec).unwrap();
    }
    fs::write(path, buf).unwrap();
}

type Labeled = (Vec<Prediction>, Vec<ObjectInteraction>);

fn random_instance(rng: &mut ChaCha8Rng) -> Vec<Labeled> {
    let nouns = ["cup", "pan", "knife"];
    let verbs = ["take", "put"];
    let make = |rng: &mut ChaCha8Rng| {
        let x = rng.random_range(0..4) as f64 * 8.0;
        let w = rng.random_range(5.0..12.0);
        ObjectInteraction::new(
            BoundingBox::new(x, 0.0, x + w, 10.0).unwrap(),
            nouns[rng.random_range(0..3)],
            verbs[rng.random_range(0..2)],
            rng.random_range(0..8) as f64 * 0.125,
        )
        .unwrap()
    };
    (0..rng.random_range(1..=10))
        .map(|_| {
            let gts: Vec<_> = (0..rng.random_range(0..3)).map(|_| make(rng)).collect();
            let preds: Vec<_> = (0..rng.random_range(0..=5))
                .map(|_| Prediction::new(make(rng), rng.random_range(0..6) as f64 / 5.0, 0).unwrap())
                .collect();
            (preds, gts)
        })
        .collect()
}

#[test]
fn evaluate_matches_reference_on_random_instance() {
    let dir = tempfile::tempdir().unwrap();
    let (gt_path, pred_path, report) = (
        dir.path().join("gt"),
        dir.path().join("pred"),
        dir.path().join("r.json"),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        let inst = random_instance(&mut rng);
        let frames = |f: &dyn Fn(&Labeled) -> Vec<InteractionEntry>| {
            inst.iter()
                .enumerate()
                .map(|(i, x)| (i as u64, f(x)))
                .collect::<Vec<_>>()
        };
        write_frames(
            &gt_path,
            &frames(&|x| x.1.iter().map(|g| entry(g, None)).collect()),
        );
        write_frames(
            &pred_path,
            &frames(&|x| x.0.iter().map(|p| entry(&p.interaction, Some(p.score))).collect()),
        );
        let r = run(&[
            "evaluate",
            "--preds",
            path_str(&pred_path),
            "--gt",
            path_str(&gt_path),
            "--out",
            path_str(&report),
        ]);
        assert!(r.status.success(), "{}", stderr(&r));
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert!(doc["config_fingerprint"].as_str().unwrap().len() == 16);
        for v in doc["variants"].as_array().unwrap() {
            let name = v["variant"].as_str().unwrap();
            let want = 100.0 * oracle_map(&inst, name, &EvalParams::default()).unwrap();
            assert!((v["map"].as_f64().unwrap() - want).abs() < 1e-9, "{name}");
        }
    }
}

#[test]
fn evaluate_perfect_and_empty_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let (gt_path, pred_path) = (dir.path().join("gt"), dir.path().join("pred"));
    let g = |x: f64, noun: &str| {
        ObjectInteraction::new(
            BoundingBox::new(x, 0.0, x + 10.0, 10.0).unwrap(),
            noun,
            "take",
            0.5,
        )
        .unwrap()
    };
    let gts = [(0, vec![g(0.0, "cup"), g(20.0, "pan")]), (3, vec![g(5.0, "cup")])];
    let as_entries = |score: Option<f64>| -> Vec<(u64, Vec<InteractionEntry>)> {
        gts.iter()
            .map(|(f, v)| (*f, v.iter().map(|o| entry(o, score)).collect()))
            .collect()
    };
    write_frames(&gt_path, &as_entries(None));
    write_frames(&pred_path, &as_entries(Some(0.9)));
    let r = run(&[
        "evaluate",
        "--preds",
        path_str(&pred_path),
        "--gt",
        path_str(&gt_path),
    ]);
    assert!(r.status.success());
    let text = stdout(&r);
    assert_eq!(text.matches("100.00").count(), 6, "{text}");

    fs::write(&pred_path, "").unwrap();
    let r = run(&[
        "evaluate",
        "--preds",
        path_str(&pred_path),
        "--gt",
        path_str(&gt_path),
        "--variant",
        "nv",
        "--variant",
        "VO",
    ]);
    assert!(r.status.success());
    let text = stdout(&r);
    assert_eq!(text.matches("0.00").count(), 2, "{text}");
    assert!(text.contains("Noun-Verb") && text.contains("Verb-only") && !text.contains("Overall"));

    let r = run(&[
        "evaluate",
        "--preds",
        path_str(&pred_path),
        "--gt",
        path_str(&gt_path),
        "--variant",
        "xyz",
    ]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn quality_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = dir.path().join("ctx.jsonl");
    let gt = dir.path().join("gt.jsonl");
    let emb = dir.path().join("emb.txt");
    let report = dir.path().join("q.json");
    fs::write(
        &ctx,
        "{\"video_id\":\"v\",\"frame_id\":1,\"text\":\"; ; cup, pan\",\"action_terms\":[],\"held\":[],\"salient\":[\"cup\",\"pan\"]}\n\
         {\"video_id\":\"v\",\"frame_id\":2,\"text\":\"; ; knife, bowl\",\"action_terms\":[],\"held\":[],\"salient\":[\"knife\",\"bowl\"]}\n",
    )
    .unwrap();
    fs::write(
        &gt,
        "{\"video_id\":\"v\",\"frame_id\":1,\"entries\":[{\"box\":[0,0,1,1],\"noun\":\"cup\",\"verb\":\"take\",\"ttc\":0.5}]}\n\
         {\"video_id\":\"v\",\"frame_id\":2,\"entries\":[{\"box\":[0,0,1,1],\"noun\":\"cup\",\"verb\":\"take\",\"ttc\":0.5}]}\n",
    )
    .unwrap();
    let mut table = String::new();
    for (i, w) in ["cup", "pan", "knife", "bowl", "take"].iter().enumerate() {
        let v: Vec<String> = (0..300)
            .map(|d| if d == i { "1".into() } else { "0".into() })
            .collect();
        table.push_str(&format!("{w} {}\n", v.join(" ")));
    }
    fs::write(&emb, table).unwrap();
    let r = run(&[
        "quality",
        "--contexts",
        path_str(&ctx),
        "--gt",
        path_str(&gt),
        "--embeddings",
        path_str(&emb),
        "--out",
        path_str(&report),
    ]);
    assert!(r.status.success(), "{}", stderr(&r));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["salient_precision"].as_f64(), Some(0.25));
    assert_eq!(doc["salient_recall"].as_f64(), Some(0.5));

    fs::write(&emb, "").unwrap();
    let r = run(&[
        "quality",
        "--contexts",
        path_str(&ctx),
        "--gt",
        path_str(&gt),
        "--embeddings",
        path_str(&emb),
    ]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn fuse_check_round_trips_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.bin");
    let a = run(&["fuse-check", "--seed", "5", "--out", path_str(&params)]);
    assert!(a.status.success(), "{}", stdout(&a));
    assert_eq!(stdout(&a).lines().filter(|l| l.starts_with("PASS")).count(), 8);
    let b = run(&["fuse-check", "--params", path_str(&params), "--seed", "5"]);
    assert!(b.status.success());
    assert_eq!(stdout(&a), stdout(&b));

    let bytes = fs::read(&params).unwrap();
    fs::write(&params, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(
        run(&["fuse-check", "--params", path_str(&params)]).status.code(),
        Some(1)
    );
}

#[test]
fn golden_summary_is_reproduced() {
    let r = run(&[
        "summarize",
        "--frames",
        path_str(&golden("scenario.jsonl")),
        "--jobs",
        "4",
    ]);
    assert!(r.status.success());
    assert_eq!(r.stdout, fs::read(golden("summary.jsonl")).unwrap());
}
