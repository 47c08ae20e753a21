use context_forge_core::extract::FrameContext;
use context_forge_core::{
    ActionPair, BoundingBox, Category, Detection, FrameRecord, Pos, Segment, TaggedToken, Term,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::SynthError;

pub const VERBS: [&str; 8] = ["take", "put", "cut", "wash", "open", "close", "pour", "stir"];
pub const NOUNS: [&str; 12] = [
    "knife", "cup", "onion", "pan", "drawer", "tap", "bowl", "spoon", "board", "lid", "plate", "sponge",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    /// Chance that a planted term is missing from a sampled frame.
    pub drop_rate: f64,
    /// Chance that a sampled frame gains a random extra term per category.
    pub spurious_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    /// Number of sampled frames.
    pub n_frames: usize,
    /// Distinct terms available per category.
    pub n_terms: usize,
    pub stride: u64,
    /// Planted segment length bounds in raw frames (inclusive span).
    pub min_len: u64,
    pub max_len: u64,
    /// Smallest raw-frame gap between consecutive planted segments.
    pub min_gap: u64,
    pub noise: Noise,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            n_frames: 100,
            n_terms: 4,
            stride: 3,
            min_len: 60,
            max_len: 120,
            min_gap: 12,
            noise: Noise {
                drop_rate: 0.0,
                spurious_rate: 0.0,
            },
        }
    }
}

/// Planted ground truth and the noisy per-frame observations derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub planted: Vec<Segment>,
    pub stream: Vec<FrameContext>,
}

impl Scenario {
    /// `(frame, terms)` pairs of one category.
    pub fn term_stream(&self, category: Category) -> Vec<(u64, Vec<Term>)> {
        self.stream
            .iter()
            .map(|c| (c.frame_id, c.terms(category)))
            .collect()
    }

    pub fn planted_in(&self, category: Category) -> Vec<Segment> {
        self.planted
            .iter()
            .filter(|s| s.category == category)
            .cloned()
            .collect()
    }
}

fn term_for(category: Category, index: usize) -> Term {
    match category {
        Category::Action => Term::Action(
            ActionPair::new(VERBS[index % VERBS.len()], NOUNS[index % NOUNS.len()])
                .expect("vocabulary words are valid"),
        ),
        Category::Held => Term::Label(NOUNS[(index + 4) % NOUNS.len()].to_string()),
        Category::Salient => Term::Label(NOUNS[(index + 8) % NOUNS.len()].to_string()),
    }
}

fn check(p: &ScenarioParams) -> Result<(), SynthError> {
    for (name, value) in [
        ("drop_rate", p.noise.drop_rate),
        ("spurious_rate", p.noise.spurious_rate),
    ] {
        if !(0.0..1.0).contains(&value) {
            return Err(SynthError::Rate { name, value });
        }
    }
    if p.stride == 0 || p.n_terms == 0 || p.n_terms > NOUNS.len() || p.min_len > p.max_len {
        return Err(SynthError::Params(format!(
            "stride {} terms {} lengths {}..={}",
            p.stride, p.n_terms, p.min_len, p.max_len
        )));
    }
    if p.min_gap <= p.stride {
        return Err(SynthError::Params("min_gap must exceed the stride".into()));
    }
    Ok(())
}

/// Plant non-overlapping segments per category on the sampled frame grid
/// `0, stride, 2·stride, …` and observe them with noise.
pub fn gen_scenario(seed: u64, p: &ScenarioParams) -> Result<Scenario, SynthError> {
    check(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = (p.n_frames as u64).saturating_sub(1) * p.stride;
    let align = |f: u64| f.div_ceil(p.stride) * p.stride;

    let mut planted = Vec::new();
    for category in Category::ALL {
        let mut cursor = align(rng.random_range(0..=p.min_gap));
        let mut previous: Option<usize> = None;
        while cursor <= last {
            let len = rng.random_range(p.min_len..=p.max_len);
            let end = ((cursor + len) / p.stride * p.stride).min(last);
            // neighbours never share a term, so gaps cannot fuse them
            let mut index = rng.random_range(0..p.n_terms);
            if p.n_terms > 1 && previous == Some(index) {
                index = (index + 1) % p.n_terms;
            }
            previous = Some(index);
            planted.push(Segment {
                category,
                term: term_for(category, index),
                start_frame: cursor,
                end_frame: end,
                occurrences: ((end - cursor) / p.stride + 1) as usize,
                active: false,
            });
            let gap = rng.random_range(p.min_gap..=2 * p.min_gap);
            cursor = align(end + gap);
        }
    }

    let mut stream = Vec::with_capacity(p.n_frames);
    for i in 0..p.n_frames as u64 {
        let frame = i * p.stride;
        let mut ctx = FrameContext {
            frame_id: frame,
            ..FrameContext::default()
        };
        for category in Category::ALL {
            let covering = planted
                .iter()
                .find(|s| s.category == category && s.start_frame <= frame && frame <= s.end_frame);
            let mut terms: Vec<Term> = Vec::new();
            if let Some(seg) = covering {
                if !rng.random_bool(p.noise.drop_rate) {
                    terms.push(seg.term.clone());
                }
            }
            if rng.random_bool(p.noise.spurious_rate) {
                let extra = term_for(category, rng.random_range(0..p.n_terms));
                if !terms.contains(&extra) {
                    terms.push(extra);
                }
            }
            match category {
                // a frame carries at most one action; noise replaces it
                Category::Action => ctx.action = terms.pop().and_then(|t| t.as_action().cloned()),
                Category::Held => {
                    ctx.held = terms
                        .iter()
                        .filter_map(|t| t.as_label().map(String::from))
                        .collect()
                }
                Category::Salient => {
                    ctx.salient = terms
                        .iter()
                        .filter_map(|t| t.as_label().map(String::from))
                        .collect()
                }
            }
        }
        stream.push(ctx);
    }
    Ok(Scenario { planted, stream })
}

/// Encode a scenario as frame records that the extraction stage maps back to
/// the same frame contexts under default settings. Every `predict_every`-th
/// sampled frame (and the last) is marked for prediction; 0 marks none.
pub fn to_records(video_id: &str, scenario: &Scenario, predict_every: usize) -> Vec<FrameRecord> {
    let n = scenario.stream.len();
    scenario
        .stream
        .iter()
        .enumerate()
        .map(|(i, ctx)| {
            let mut rec = FrameRecord::empty(video_id, ctx.frame_id);
            if let Some(pair) = &ctx.action {
                rec.captions.push(vec![
                    TaggedToken::new("a", "person", Pos::Noun),
                    TaggedToken::new(&pair.verb, &pair.verb, Pos::Verb),
                    TaggedToken::new("the", "the", Pos::Other),
                    TaggedToken::new(&pair.noun, &pair.noun, Pos::Noun),
                ]);
            }
            for (slot, label) in ctx.held.iter().enumerate() {
                let x = slot as f64 * 100.0;
                let bbox = BoundingBox::new(x, 10.0, x + 50.0, 60.0).expect("valid box");
                rec.active_boxes.push(bbox);
                rec.detections.push(Detection {
                    label: label.clone(),
                    bbox,
                    score: 0.9,
                });
            }
            for (rank, label) in ctx.salient.iter().enumerate() {
                rec.label_scores.insert(label.clone(), 0.9 - 0.1 * rank as f64);
            }
            rec.predict = predict_every > 0 && (i % predict_every == predict_every - 1 || i + 1 == n);
            rec
        })
        .collect()
}

/// Fraction of planted segments matched by a found segment with the same term
/// whose start and end each lie within `tolerance` frames.
pub fn recovery_rate(planted: &[Segment], found: &[Segment], tolerance: u64) -> f64 {
    if planted.is_empty() {
        return 1.0;
    }
    let hit = planted
        .iter()
        .filter(|p| {
            found.iter().any(|f| {
                f.term == p.term
                    && f.start_frame.abs_diff(p.start_frame) <= tolerance
                    && f.end_frame.abs_diff(p.end_frame) <= tolerance
            })
        })
        .count();
    hit as f64 / planted.len() as f64
}
