use std::fs::File;
use std::io::{BufReader, Write};

use anyhow::{Context, Result};
use context_forge_core::fusion::*;
use context_forge_core::Tensor;
use context_forge_synth::fusion_ref::{binary_cross_entropy, cross_entropy, huber, naive_attention};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::failure::InvariantViolation;
use crate::files::create;
use crate::FuseCheckArgs;

type Check = fn(&FusionParams, &mut ChaCha8Rng) -> Result<String, String>;

const CHECKS: [(&str, Check); 8] = [
    ("softmax rows sum to one", softmax_rows_sum),
    ("attention matches loop reference", attention_reference),
    ("attention rows are convex combinations", attention_convex),
    ("patchify and regroup are exact inverses", patch_inverse),
    ("fusion preserves map shapes", fuse_shapes),
    ("encoder output rows are normalized", encoder_normalized),
    (
        "zero embeddings give permutation equivariance",
        permutation_equivariance,
    ),
    ("loss equals sum of reference terms", loss_terms),
];

pub fn run(args: FuseCheckArgs) -> Result<()> {
    let params = match &args.params {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            FusionParams::read_from(BufReader::new(file))
                .with_context(|| format!("parameters {}", path.display()))?
        }
        None => FusionParams::random(&[2, 3, 4, 4], 8, 2, 2, 6, args.seed)?,
    };
    if let Some(path) = &args.out {
        let mut out = create(Some(path))?;
        params.write_to(&mut out)?;
        out.flush()?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout().lock();
    for (name, check) in CHECKS {
        match check(&params, &mut rng) {
            Ok(detail) => writeln!(stdout, "PASS {name} ({detail})")?,
            Err(detail) => {
                writeln!(stdout, "FAIL {name}: {detail}")?;
                failed.push(name);
            }
        }
    }
    stdout.flush()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(InvariantViolation(failed.join("; ")).into())
    }
}

fn random(rng: &mut ChaCha8Rng, shape: Vec<usize>, scale: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-scale..scale))
}

fn within(what: &str, err: f64, tol: f64) -> Result<String, String> {
    if err <= tol {
        Ok(format!("max error {err:.1e}"))
    } else {
        Err(format!("{what}: error {err:.3e} exceeds {tol:.0e}"))
    }
}

fn softmax_rows_sum(_: &FusionParams, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..12);
        let s = softmax_rows(&random(rng, vec![n, n + 3], 80.0));
        for r in 0..n {
            worst = worst.max((s.row(r).iter().sum::<f64>() - 1.0).abs());
        }
    }
    within("row sum", worst, 1e-6)
}

fn attention_reference(_: &FusionParams, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random(rng, vec![3, 4], 1.0);
        let k = random(rng, vec![3, 4], 1.0);
        let v = random(rng, vec![3, 4], 1.0);
        let got = attention(&q, &k, &v).map_err(|e| e.to_string())?;
        let want = naive_attention(&q, &k, &v);
        for (i, row) in want.iter().enumerate() {
            for (c, w) in row.iter().enumerate() {
                worst = worst.max((got.at(i, c) - w).abs());
            }
        }
    }
    within("attention", worst, 1e-12)
}

fn attention_convex(_: &FusionParams, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for _ in 0..50 {
        let (n, m) = (rng.random_range(1..8), rng.random_range(1..8));
        let q = random(rng, vec![n, 5], 3.0);
        let k = random(rng, vec![m, 5], 3.0);
        let v = random(rng, vec![m, 4], 3.0);
        let out = attention(&q, &k, &v).map_err(|e| e.to_string())?;
        for c in 0..4 {
            let lo = (0..m).map(|j| v.at(j, c)).fold(f64::MAX, f64::min) - 1e-12;
            let hi = (0..m).map(|j| v.at(j, c)).fold(f64::MIN, f64::max) + 1e-12;
            if let Some(i) = (0..n).find(|&i| !(lo..=hi).contains(&out.at(i, c))) {
                return Err(format!("row {i} column {c} leaves the value range"));
            }
        }
    }
    Ok("50 random cases".into())
}

fn patch_inverse(_: &FusionParams, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for case in 0..100 {
        let p = SCALE_PATCHES[case % SCALE_PATCHES.len()];
        let (c, gh, gw) = (
            rng.random_range(1..5),
            rng.random_range(1..6),
            rng.random_range(1..6),
        );
        let (h, w) = (gh * p, gw * p);
        let x = random(rng, vec![c, h, w], 1e3);
        let tokens = patchify(&x, p).map_err(|e| e.to_string())?;
        let back = regroup(&tokens, h, w, p, c).map_err(|e| e.to_string())?;
        let again = patchify(&back, p).map_err(|e| e.to_string())?;
        let exact = |a: &Tensor, b: &Tensor| {
            a.shape() == b.shape()
                && a.data()
                    .iter()
                    .zip(b.data())
                    .all(|(x, y)| x.to_bits() == y.to_bits())
        };
        if tokens.shape() != [gh * gw, p * p * c] || !exact(&back, &x) || !exact(&again, &tokens) {
            return Err(format!("shape [{c}, {h}, {w}] with patch {p}"));
        }
    }
    Ok("100 random shapes".into())
}

fn maps_for(params: &FusionParams, rng: &mut ChaCha8Rng) -> Vec<Tensor> {
    params
        .scales
        .iter()
        .map(|s| {
            let p = s.shape.patch;
            random(rng, vec![s.shape.channels, 2 * p, 3 * p], 1.0)
        })
        .collect()
}

fn fuse_shapes(params: &FusionParams, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let lang_width = params.scales.first().map_or(1, |s| s.shape.lang_width);
    if params.scales.iter().any(|s| s.shape.lang_width != lang_width) {
        return Err("scales disagree on the language width".into());
    }
    let maps = maps_for(params, rng);
    for l in [0, 3] {
        let lang = random(rng, vec![l, lang_width], 1.0);
        let out = fuse(&maps, &lang, &params.scales).map_err(|e| e.to_string())?;
        for (i, (a, b)) in out.iter().zip(&maps).enumerate() {
            if a.shape() != b.shape() {
                return Err(format!("scale {i}: {:?} became {:?}", b.shape(), a.shape()));
            }
        }
    }
    Ok(format!("{} scales, 0 and 3 language tokens", params.scales.len()))
}

fn encoder_normalized(params: &FusionParams, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst = 0.0f64;
    for scale in &params.scales {
        let d = scale.shape.width;
        for layer in &scale.layers {
            let mut plain = layer.clone();
            plain.norm2_gamma = vec![1.0; d];
            plain.norm2_beta = vec![0.0; d];
            let z = random(rng, vec![5, d], 2.0);
            let out = encoder_layer(&z, &plain).map_err(|e| e.to_string())?;
            for r in 0..5 {
                let row = out.row(r);
                let mean = row.iter().sum::<f64>() / d as f64;
                let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
                worst = worst.max(mean.abs()).max((var - 1.0).abs());
            }
        }
    }
    within("row moments", worst, 1e-6)
}

fn permutation_equivariance(params: &FusionParams, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst = 0.0f64;
    for scale in &params.scales {
        let p = scale.without_embeddings();
        let n = 6;
        let tokens = random(rng, vec![n, p.shape.token_width()], 1.0);
        let lang = random(rng, vec![2, p.shape.lang_width], 1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let width = tokens.cols();
        let moved = Tensor::from_fn(vec![n, width], |i| tokens.at(perm[i / width], i % width));
        let base = fuse_tokens(&tokens, &lang, &p).map_err(|e| e.to_string())?;
        let out = fuse_tokens(&moved, &lang, &p).map_err(|e| e.to_string())?;
        for (i, &src) in perm.iter().enumerate() {
            for (a, b) in out.row(i).iter().zip(base.row(src)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    within("permuted output", worst, 1e-6)
}

fn loss_terms(_: &FusionParams, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..8);
        let b = rng.random_range(1..5);
        let probs: Vec<f64> = (0..n).map(|_| rng.random_range(0.001..0.999)).collect();
        let labels: Vec<f64> = (0..n)
            .map(|_| f64::from(u8::from(rng.random_bool(0.5))))
            .collect();
        let boxes: Vec<[f64; 4]> = (0..n)
            .map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0)))
            .collect();
        let targets: Vec<[f64; 4]> = (0..n)
            .map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0)))
            .collect();
        let noun_logits = random(rng, vec![b, 5], 3.0);
        let verb_logits = random(rng, vec![b, 4], 3.0);
        let nt: Vec<usize> = (0..b).map(|_| rng.random_range(0..5)).collect();
        let vt: Vec<usize> = (0..b).map(|_| rng.random_range(0..4)).collect();
        let tp: Vec<f64> = (0..b).map(|_| rng.random_range(0.0..3.0)).collect();
        let tg: Vec<f64> = (0..b).map(|_| rng.random_range(0.0..3.0)).collect();
        let (lambda, n_cls, n_reg) = (11.0, rng.random_range(1.0..8.0), rng.random_range(1.0..8.0));
        let got = loss_total(&LossInputs {
            cls_probs: &probs,
            cls_targets: &labels,
            boxes: &boxes,
            box_targets: &targets,
            noun_logits: &noun_logits,
            noun_targets: &nt,
            verb_logits: &verb_logits,
            verb_targets: &vt,
            ttc_pred: &tp,
            ttc_gt: &tg,
            lambda,
            n_cls,
            n_reg,
        })
        .map_err(|e| e.to_string())?;
        let cls = (0..n)
            .map(|i| binary_cross_entropy(probs[i], labels[i]))
            .sum::<f64>()
            / n_cls;
        let reg = lambda / n_reg
            * (0..n)
                .map(|i| labels[i] * (0..4).map(|k| huber(boxes[i][k] - targets[i][k])).sum::<f64>())
                .sum::<f64>();
        let noun = (0..b)
            .map(|i| cross_entropy(noun_logits.row(i), nt[i]))
            .sum::<f64>()
            / b as f64;
        let verb = (0..b)
            .map(|i| cross_entropy(verb_logits.row(i), vt[i]))
            .sum::<f64>()
            / b as f64;
        let ttc = (0..b).map(|i| (tp[i] - tg[i]).abs()).sum::<f64>() / b as f64;
        if got.total < 0.0 {
            return Err(format!("negative loss {}", got.total));
        }
        worst = worst.max((got.total - (cls + reg + noun + verb + ttc)).abs());
    }
    within("loss", worst, 1e-12)
}
