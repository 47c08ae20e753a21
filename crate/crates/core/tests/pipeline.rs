use std::io::Write;

use context_forge_core::io::{read_frame_records, ContextRecord};
use context_forge_core::summarize::summarize_video;
use context_forge_core::{Error, SummarizerConfig};

const FRAMES: &str = r#"{"video_id":"v1","frame_id":0,"captions":[[{"surface":"a","lemma":"person","pos":"NOUN"},{"surface":"cuts","lemma":"cut","pos":"VERB"},{"surface":"the","lemma":"the","pos":"OTHER"},{"surface":"onion","lemma":"onion","pos":"NOUN"}]],"label_scores":{"onion":0.9,"knife":0.8,"board":0.4}}
{"video_id":"v1","frame_id":3,"captions":[[{"surface":"a","lemma":"person","pos":"NOUN"},{"surface":"cuts","lemma":"cut","pos":"VERB"},{"surface":"an","lemma":"an","pos":"OTHER"},{"surface":"onion","lemma":"onion","pos":"NOUN"}]],"label_scores":{"onion":0.9,"knife":0.7}}
{"video_id":"v1","frame_id":6,"label_scores":{"knife":0.9},"predict":true}
"#;

#[test]
fn summarize_from_jsonl() {
    let records: Vec<_> = read_frame_records(FRAMES.as_bytes())
        .map(|r| r.unwrap().1)
        .collect();
    let mut cfg = SummarizerConfig::default();
    cfg.min_occurrences.salient = 1;
    let out = summarize_video("v1", &records, &cfg).unwrap();
    assert_eq!(out.frames.len(), 1);
    let ctx = &out.frames[0].context;
    assert_eq!(ctx.text, "cut onion; ; knife, onion, board");
    let rec = ContextRecord::new("v1", 6, ctx);
    let json = serde_json::to_string(&rec).unwrap();
    assert!(
        json.contains(r#""action_terms":[{"verb":"cut","noun":"onion"}]"#),
        "{json}"
    );
    assert_eq!(rec.context(), *ctx);
}

#[test]
fn config_file_round_trip() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(
        file,
        "# tweaks\nd = 3\nwindow = 90\nmode.nh = current-only\ninclude = a,ns"
    )
    .unwrap();
    let cfg = SummarizerConfig::load(file.path()).unwrap();
    assert_eq!(cfg.cutoff_distance, 3);
    assert_eq!(cfg.window, 90);
    assert_eq!(cfg.context_mode.held, "current_only");
    assert_eq!(SummarizerConfig::parse(&cfg.serialize()).unwrap(), cfg);
    assert_ne!(cfg.fingerprint(), SummarizerConfig::default().fingerprint());
}

#[test]
fn config_errors_are_specific() {
    match SummarizerConfig::parse("d = 4\nbogus = 1\n") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
    match SummarizerConfig::parse("k = -2\n") {
        Err(Error::Validation { key, .. }) => assert_eq!(key, "k"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(SummarizerConfig::load("/nonexistent/cfg.txt").is_err());
}
