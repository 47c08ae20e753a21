//! Fusion parameters and their binary container.
//!
//! Layout: magic `CFFP`, `u32` format version, `u32` scale count, then per
//! scale a header of eight little-endian `u64`s (channels, patch, width,
//! heads, layers, language width, MLP hidden width, positional flag) and a
//! little-endian `f64` dropout rate, followed by that scale's weights as
//! little-endian `f64`s in the order documented on [`ScaleParams`].

use std::io::{Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"CFFP";
const VERSION: u32 = 1;

/// Patch sizes of the four fused scales, finest first.
pub const SCALE_PATCHES: [usize; 4] = [4, 4, 2, 1];

/// Dimensions of one scale's fusion block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleShape {
    pub channels: usize,
    pub patch: usize,
    pub width: usize,
    pub heads: usize,
    pub layers: usize,
    pub lang_width: usize,
    pub mlp_hidden: usize,
}

impl ScaleShape {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("channels", self.channels),
            ("patch", self.patch),
            ("width", self.width),
            ("heads", self.heads),
            ("lang_width", self.lang_width),
            ("mlp_hidden", self.mlp_hidden),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("fusion {name} must be positive")));
        }
        if !self.width.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "width {} is not divisible by {} heads",
                self.width, self.heads
            )));
        }
        Ok(())
    }

    pub fn token_width(&self) -> usize {
        self.patch * self.patch * self.channels
    }

    pub fn head_width(&self) -> usize {
        self.width / self.heads
    }
}

/// One encoder layer: attention, MLP and the two normalizations.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Per-head `D x D/h` projections.
    pub heads: Vec<Tensor>,
    /// `D x D`.
    pub w_o: Tensor,
    pub norm1_gamma: Vec<f64>,
    pub norm1_beta: Vec<f64>,
    /// `D x hidden`.
    pub mlp_w1: Tensor,
    pub mlp_b1: Vec<f64>,
    /// `hidden x D`.
    pub mlp_w2: Tensor,
    pub mlp_b2: Vec<f64>,
    pub norm2_gamma: Vec<f64>,
    pub norm2_beta: Vec<f64>,
}

/// Non-shared parameters of one scale.
///
/// Serialized order: `w_p`, `w_l`, `vf_emb`, `lf_emb`, each layer in turn
/// (heads, `w_o`, `norm1_gamma`, `norm1_beta`, `mlp_w1`, `mlp_b1`, `mlp_w2`,
/// `mlp_b2`, `norm2_gamma`, `norm2_beta`), then `w_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleParams {
    pub shape: ScaleShape,
    /// `P²C x D` patch projection.
    pub w_p: Tensor,
    /// `D_L x D` language projection.
    pub w_l: Tensor,
    pub vf_emb: Vec<f64>,
    pub lf_emb: Vec<f64>,
    /// Add the 1-D sinusoidal position table to visual tokens.
    pub positional: bool,
    pub layers: Vec<LayerParams>,
    /// `D x P²C` projection back to patch features.
    pub w_out: Tensor,
    /// Stored for completeness; the evaluation forward pass does not drop.
    pub dropout: f64,
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::from_fn(vec![rows, cols], |_| rng.random_range(-bound..bound))
}

fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

impl ScaleParams {
    /// Uniform Xavier-style initialization with unit norm gains.
    pub fn random(shape: ScaleShape, rng: &mut impl Rng) -> Result<Self> {
        shape.validate()?;
        let d = shape.width;
        let layers = (0..shape.layers)
            .map(|_| LayerParams {
                heads: (0..shape.heads)
                    .map(|_| random_matrix(rng, d, shape.head_width()))
                    .collect(),
                w_o: random_matrix(rng, d, d),
                norm1_gamma: vec![1.0; d],
                norm1_beta: vec![0.0; d],
                mlp_w1: random_matrix(rng, d, shape.mlp_hidden),
                mlp_b1: random_vec(rng, shape.mlp_hidden, 0.1),
                mlp_w2: random_matrix(rng, shape.mlp_hidden, d),
                mlp_b2: random_vec(rng, d, 0.1),
                norm2_gamma: vec![1.0; d],
                norm2_beta: vec![0.0; d],
            })
            .collect();
        Ok(Self {
            shape,
            w_p: random_matrix(rng, shape.token_width(), d),
            w_l: random_matrix(rng, shape.lang_width, d),
            vf_emb: random_vec(rng, d, 0.1),
            lf_emb: random_vec(rng, d, 0.1),
            positional: true,
            layers,
            w_out: random_matrix(rng, d, shape.token_width()),
            dropout: 0.0,
        })
    }

    /// Copy with type embeddings zeroed and positions disabled.
    pub fn without_embeddings(&self) -> Self {
        let mut p = self.clone();
        p.vf_emb.iter_mut().for_each(|v| *v = 0.0);
        p.lf_emb.iter_mut().for_each(|v| *v = 0.0);
        p.positional = false;
        p
    }

    fn tensors(&self) -> Vec<Vec<f64>> {
        let mut out = vec![
            self.w_p.data().to_vec(),
            self.w_l.data().to_vec(),
            self.vf_emb.clone(),
            self.lf_emb.clone(),
        ];
        for l in &self.layers {
            out.extend(l.heads.iter().map(|h| h.data().to_vec()));
            out.push(l.w_o.data().to_vec());
            out.push(l.norm1_gamma.clone());
            out.push(l.norm1_beta.clone());
            out.push(l.mlp_w1.data().to_vec());
            out.push(l.mlp_b1.clone());
            out.push(l.mlp_w2.data().to_vec());
            out.push(l.mlp_b2.clone());
            out.push(l.norm2_gamma.clone());
            out.push(l.norm2_beta.clone());
        }
        out.push(self.w_out.data().to_vec());
        out
    }

    fn check(&self, index: usize) -> Result<()> {
        self.shape.validate()?;
        let s = &self.shape;
        let d = s.width;
        let expect: [(&str, &[usize], [usize; 2]); 3] = [
            ("w_p", self.w_p.shape(), [s.token_width(), d]),
            ("w_l", self.w_l.shape(), [s.lang_width, d]),
            ("w_out", self.w_out.shape(), [d, s.token_width()]),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::Shape(format!(
                    "scale {index}: {name} has shape {got:?}, expected {want:?}"
                )));
            }
        }
        if self.vf_emb.len() != d || self.lf_emb.len() != d || self.layers.len() != s.layers {
            return Err(Error::Shape(format!(
                "scale {index}: embedding or layer count mismatch"
            )));
        }
        for (li, l) in self.layers.iter().enumerate() {
            let ok = l.heads.len() == s.heads
                && l.heads.iter().all(|h| h.shape() == [d, s.head_width()])
                && l.w_o.shape() == [d, d]
                && l.mlp_w1.shape() == [d, s.mlp_hidden]
                && l.mlp_w2.shape() == [s.mlp_hidden, d]
                && l.mlp_b1.len() == s.mlp_hidden
                && [
                    &l.norm1_gamma,
                    &l.norm1_beta,
                    &l.mlp_b2,
                    &l.norm2_gamma,
                    &l.norm2_beta,
                ]
                .iter()
                .all(|v| v.len() == d);
            if !ok {
                return Err(Error::Shape(format!(
                    "scale {index}: layer {li} has wrong shapes"
                )));
            }
        }
        let finite = self.tensors().iter().flatten().all(|v| v.is_finite());
        if !finite || !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Numeric(format!(
                "scale {index}: non-finite weights or dropout outside [0, 1)"
            )));
        }
        Ok(())
    }
}

/// Parameters of every fused scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    pub scales: Vec<ScaleParams>,
}

impl FusionParams {
    /// Four scales with patch sizes 4, 4, 2, 1, seeded deterministically.
    pub fn random(
        channels: &[usize],
        width: usize,
        heads: usize,
        layers: usize,
        lang_width: usize,
        seed: u64,
    ) -> Result<Self> {
        if channels.len() != SCALE_PATCHES.len() {
            return Err(Error::Config(format!(
                "expected {} channel counts, got {}",
                SCALE_PATCHES.len(),
                channels.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scales = channels
            .iter()
            .zip(SCALE_PATCHES)
            .map(|(&c, p)| {
                let shape = ScaleShape {
                    channels: c,
                    patch: p,
                    width,
                    heads,
                    layers,
                    lang_width,
                    mlp_hidden: 4 * width,
                };
                ScaleParams::random(shape, &mut rng)
            })
            .collect::<Result<_>>()?;
        Ok(Self { scales })
    }

    pub fn validate(&self) -> Result<()> {
        self.scales.iter().enumerate().try_for_each(|(i, s)| s.check(i))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        self.validate()?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.scales.len() as u32).to_le_bytes())?;
        for s in &self.scales {
            let h = &s.shape;
            for v in [
                h.channels,
                h.patch,
                h.width,
                h.heads,
                h.layers,
                h.lang_width,
                h.mlp_hidden,
                s.positional as usize,
            ] {
                w.write_all(&(v as u64).to_le_bytes())?;
            }
            w.write_all(&s.dropout.to_le_bytes())?;
            for t in s.tensors() {
                for v in t {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Input("not a fusion parameter file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Input(format!(
                "unsupported parameter format version {version}"
            )));
        }
        let count = read_u32(&mut r)? as usize;
        let mut scales = Vec::with_capacity(count.min(16));
        for index in 0..count {
            let mut head = [0usize; 8];
            for v in head.iter_mut() {
                *v = usize::try_from(read_u64(&mut r)?)
                    .map_err(|_| Error::Input("dimension overflows usize".into()))?;
            }
            let shape = ScaleShape {
                channels: head[0],
                patch: head[1],
                width: head[2],
                heads: head[3],
                layers: head[4],
                lang_width: head[5],
                mlp_hidden: head[6],
            };
            shape.validate()?;
            let dropout = read_f64(&mut r)?;
            let s = read_scale(&mut r, shape, head[7] != 0, dropout)?;
            s.check(index)?;
            scales.push(s);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Input("trailing bytes after fusion parameters".into()));
        }
        Ok(Self { scales })
    }
}

fn read_scale(r: &mut impl Read, shape: ScaleShape, positional: bool, dropout: f64) -> Result<ScaleParams> {
    let d = shape.width;
    let tw = shape.token_width();
    let w_p = read_matrix(r, tw, d)?;
    let w_l = read_matrix(r, shape.lang_width, d)?;
    let vf_emb = read_vec(r, d)?;
    let lf_emb = read_vec(r, d)?;
    let mut layers = Vec::with_capacity(shape.layers.min(64));
    for _ in 0..shape.layers {
        let heads = (0..shape.heads)
            .map(|_| read_matrix(r, d, shape.head_width()))
            .collect::<Result<_>>()?;
        layers.push(LayerParams {
            heads,
            w_o: read_matrix(r, d, d)?,
            norm1_gamma: read_vec(r, d)?,
            norm1_beta: read_vec(r, d)?,
            mlp_w1: read_matrix(r, d, shape.mlp_hidden)?,
            mlp_b1: read_vec(r, shape.mlp_hidden)?,
            mlp_w2: read_matrix(r, shape.mlp_hidden, d)?,
            mlp_b2: read_vec(r, d)?,
            norm2_gamma: read_vec(r, d)?,
            norm2_beta: read_vec(r, d)?,
        });
    }
    Ok(ScaleParams {
        shape,
        w_p,
        w_l,
        vf_emb,
        lf_emb,
        positional,
        layers,
        w_out: read_matrix(r, d, tw)?,
        dropout,
    })
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Input("fusion parameter file is truncated".into()),
        _ => Error::Io(e),
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_vec(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| read_f64(r)).collect()
}

fn read_matrix(r: &mut impl Read, rows: usize, cols: usize) -> Result<Tensor> {
    Tensor::new(vec![rows, cols], read_vec(r, rows * cols)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FusionParams {
        FusionParams::random(&[2, 3, 2, 1], 4, 2, 2, 3, 7).unwrap()
    }

    #[test]
    fn bytes_round_trip() {
        let p = small();
        let bytes = p.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"CFFP");
        let back = FusionParams::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn seeded_init_is_deterministic() {
        assert_eq!(small(), small());
        let other = FusionParams::random(&[2, 3, 2, 1], 4, 2, 2, 3, 8).unwrap();
        assert_ne!(small(), other);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = small().to_bytes().unwrap();
        assert!(FusionParams::read_from(&bytes[..bytes.len() - 3]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(FusionParams::read_from(extra.as_slice()).is_err());
        assert!(FusionParams::read_from(&b"NOPE"[..]).is_err());
    }

    #[test]
    fn heads_must_divide_width() {
        assert!(matches!(
            FusionParams::random(&[1, 1, 1, 1], 6, 4, 1, 2, 0),
            Err(Error::Config(_))
        ));
    }
}
