use super::tensor::{outer_acc, MatRef};
use crate::error::{ensure_len, Result};

#[derive(Debug, Clone)]
pub struct DenseCache {
    pub input: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub input: Vec<f64>,
}

/// `W·x + b`.
pub fn dense_forward(
    weight: MatRef<'_>,
    bias: &[f64],
    x: &[f64],
) -> Result<(Vec<f64>, DenseCache)> {
    ensure_len("dense input", weight.cols(), x.len())?;
    ensure_len("dense bias", weight.rows(), bias.len())?;
    let mut out = bias.to_vec();
    weight.matvec_acc(x, &mut out);
    Ok((out, DenseCache { input: x.to_vec() }))
}

pub fn dense_backward(
    weight: MatRef<'_>,
    cache: &DenseCache,
    grad_out: &[f64],
) -> Result<DenseGrads> {
    ensure_len("dense grad_out", weight.rows(), grad_out.len())?;
    ensure_len("dense cache", weight.cols(), cache.input.len())?;
    let mut grad_w = vec![0.0; weight.rows() * weight.cols()];
    outer_acc(grad_out, &cache.input, &mut grad_w);
    let mut grad_x = vec![0.0; weight.cols()];
    weight.matvec_t_acc(grad_out, &mut grad_x);
    Ok(DenseGrads {
        weight: grad_w,
        bias: grad_out.to_vec(),
        input: grad_x,
    })
}
