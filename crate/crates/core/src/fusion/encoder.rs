use crate::error::Result;
use crate::fusion::attention::multi_head;
use crate::fusion::params::LayerParams;
use crate::tensor::Tensor;

/// Variance floor inside layer normalization. Small enough that normalized
/// rows have unit variance to well below 1e-6.
pub const NORM_EPS: f64 = 1e-12;

/// Exact GELU, `x·Φ(x)`.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Normalize each row to zero mean and unit (population) variance, then
/// apply `gamma` and `beta`.
pub fn layer_norm(x: &Tensor, gamma: &[f64], beta: &[f64]) -> Tensor {
    let mut out = x.clone();
    let n = x.cols() as f64;
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let inv = 1.0 / (var + NORM_EPS).sqrt();
        for (i, v) in row.iter_mut().enumerate() {
            *v = (*v - mean) * inv * gamma[i] + beta[i];
        }
    }
    out
}

/// Two-layer perceptron with a GELU between the layers.
pub fn mlp(x: &Tensor, p: &LayerParams) -> Result<Tensor> {
    let hidden = x.matmul(&p.mlp_w1)?.add_row(&p.mlp_b1)?.map(gelu);
    hidden.matmul(&p.mlp_w2)?.add_row(&p.mlp_b2)
}

/// One post-norm encoder layer in evaluation mode:
///
/// ```text
/// Z' = LN(MultiHead(Z) + Z)
/// Z' = MLP(GELU(Z')) + Z'
/// Z' = LN(Z')
/// ```
pub fn encoder_layer(z: &Tensor, p: &LayerParams) -> Result<Tensor> {
    let attended = multi_head(z, &p.heads, &p.w_o)?.add(z)?;
    let z1 = layer_norm(&attended, &p.norm1_gamma, &p.norm1_beta);
    let z2 = mlp(&z1.map(gelu), p)?.add(&z1)?;
    Ok(layer_norm(&z2, &p.norm2_gamma, &p.norm2_beta))
}

pub fn encoder_stack(z: &Tensor, layers: &[LayerParams]) -> Result<Tensor> {
    layers.iter().try_fold(z.clone(), |acc, l| encoder_layer(&acc, l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gelu_reference_points() {
        assert_eq!(gelu(0.0), 0.0);
        // Φ(1) = 0.841344746068543
        assert!((gelu(1.0) - 0.841344746068543).abs() < 1e-14);
        assert!((gelu(-1.0) + 0.158655253931457).abs() < 1e-14);
    }

    #[test]
    fn layer_norm_moments() {
        let x = Tensor::from_fn(vec![3, 5], |i| (i * i) as f64 * 0.3 - 2.0);
        let y = layer_norm(&x, &[1.0; 5], &[0.0; 5]);
        for r in 0..3 {
            let row = y.row(r);
            let mean = row.iter().sum::<f64>() / 5.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-9);
        }
    }
}
