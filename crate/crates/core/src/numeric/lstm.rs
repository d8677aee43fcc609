//! Single-layer LSTM cell and backpropagation through time.
//!
//! Gate rows are stacked as `[input, forget, candidate, output]`, each block
//! `hidden` rows tall, in the input weights, recurrent weights and bias alike.

use super::loss::sigmoid;
use super::tensor::{outer_acc, MatRef};
use crate::error::{ensure_len, Result};

/// Borrowed LSTM parameters.
#[derive(Debug, Clone, Copy)]
pub struct LstmWeights<'a> {
    /// `4H × D`
    pub input: MatRef<'a>,
    /// `4H × H`
    pub recurrent: MatRef<'a>,
    /// `4H`
    pub bias: &'a [f64],
}

impl<'a> LstmWeights<'a> {
    pub fn new(input: MatRef<'a>, recurrent: MatRef<'a>, bias: &'a [f64]) -> Result<Self> {
        let hidden = recurrent.cols();
        ensure_len("lstm recurrent rows", 4 * hidden, recurrent.rows())?;
        ensure_len("lstm input rows", 4 * hidden, input.rows())?;
        ensure_len("lstm bias", 4 * hidden, bias.len())?;
        Ok(LstmWeights {
            input,
            recurrent,
            bias,
        })
    }

    pub fn hidden(&self) -> usize {
        self.recurrent.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.input.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Everything one step's backward pass needs.
#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    // activated gates, [i, f, g, o]
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmGrads {
    pub input: Vec<f64>,
    pub recurrent: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn lstm_step(
    weights: &LstmWeights<'_>,
    x: &[f64],
    prev: &LstmState,
) -> Result<(LstmState, LstmCache)> {
    let hidden = weights.hidden();
    ensure_len("lstm input", weights.input_dim(), x.len())?;
    ensure_len("lstm hidden state", hidden, prev.h.len())?;
    ensure_len("lstm cell state", hidden, prev.c.len())?;

    let mut z = weights.bias.to_vec();
    weights.input.matvec_acc(x, &mut z);
    weights.recurrent.matvec_acc(&prev.h, &mut z);

    let (ifg, o) = z.split_at_mut(3 * hidden);
    let (i_f, g) = ifg.split_at_mut(2 * hidden);
    i_f.iter_mut().for_each(|v| *v = sigmoid(*v));
    g.iter_mut().for_each(|v| *v = v.tanh());
    o.iter_mut().for_each(|v| *v = sigmoid(*v));

    let mut c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    let mut tanh_c = vec![0.0; hidden];
    for k in 0..hidden {
        let (i, f, g, o) = (z[k], z[hidden + k], z[2 * hidden + k], z[3 * hidden + k]);
        c[k] = f * prev.c[k] + i * g;
        tanh_c[k] = c[k].tanh();
        h[k] = o * tanh_c[k];
    }
    let cache = LstmCache {
        x: x.to_vec(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        gates: z,
        tanh_c,
    };
    Ok((LstmState { h, c }, cache))
}

/// Runs the cell over `inputs` from a zero state; returns the final state
/// and one cache per step.
pub fn lstm_forward<'x, I>(
    weights: &LstmWeights<'_>,
    inputs: I,
) -> Result<(LstmState, Vec<LstmCache>)>
where
    I: IntoIterator<Item = &'x [f64]>,
{
    let mut state = LstmState::zeros(weights.hidden());
    let mut caches = Vec::new();
    for x in inputs {
        let (next, cache) = lstm_step(weights, x, &state)?;
        state = next;
        caches.push(cache);
    }
    Ok((state, caches))
}

/// Backpropagation through time when the loss only sees the last hidden
/// state. Returns parameter gradients and one input gradient per step.
pub fn lstm_backward(
    weights: &LstmWeights<'_>,
    caches: &[LstmCache],
    grad_h_last: &[f64],
) -> Result<(LstmGrads, Vec<Vec<f64>>)> {
    let hidden = weights.hidden();
    let dim = weights.input_dim();
    ensure_len("lstm grad_h", hidden, grad_h_last.len())?;

    let mut grads = LstmGrads {
        input: vec![0.0; 4 * hidden * dim],
        recurrent: vec![0.0; 4 * hidden * hidden],
        bias: vec![0.0; 4 * hidden],
    };
    let mut grad_inputs = vec![Vec::new(); caches.len()];
    let mut dh = grad_h_last.to_vec();
    let mut dc = vec![0.0; hidden];
    let mut dz = vec![0.0; 4 * hidden];

    for (t, cache) in caches.iter().enumerate().rev() {
        ensure_len("lstm cache input", dim, cache.x.len())?;
        let gates = &cache.gates;
        for k in 0..hidden {
            let (i, f, g, o) = (
                gates[k],
                gates[hidden + k],
                gates[2 * hidden + k],
                gates[3 * hidden + k],
            );
            let tc = cache.tanh_c[k];
            let d_o = dh[k] * tc;
            dc[k] += dh[k] * o * (1.0 - tc * tc);
            dz[k] = dc[k] * g * i * (1.0 - i);
            dz[hidden + k] = dc[k] * cache.c_prev[k] * f * (1.0 - f);
            dz[2 * hidden + k] = dc[k] * i * (1.0 - g * g);
            dz[3 * hidden + k] = d_o * o * (1.0 - o);
            dc[k] *= f;
        }
        outer_acc(&dz, &cache.x, &mut grads.input);
        outer_acc(&dz, &cache.h_prev, &mut grads.recurrent);
        grads.bias.iter_mut().zip(&dz).for_each(|(b, d)| *b += d);

        let mut dx = vec![0.0; dim];
        weights.input.matvec_t_acc(&dz, &mut dx);
        grad_inputs[t] = dx;

        dh.iter_mut().for_each(|v| *v = 0.0);
        weights.recurrent.matvec_t_acc(&dz, &mut dh);
    }
    Ok((grads, grad_inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Tensor2;

    struct Owned {
        input: Tensor2,
        recurrent: Tensor2,
        bias: Vec<f64>,
    }

    impl Owned {
        fn zeros(dim: usize, hidden: usize) -> Self {
            Owned {
                input: Tensor2::zeros(4 * hidden, dim),
                recurrent: Tensor2::zeros(4 * hidden, hidden),
                bias: vec![0.0; 4 * hidden],
            }
        }

        fn weights(&self) -> LstmWeights<'_> {
            LstmWeights::new(self.input.view(), self.recurrent.view(), &self.bias).unwrap()
        }
    }

    #[test]
    fn zero_params_give_zero_state() {
        let p = Owned::zeros(3, 4);
        let (s, _) = lstm_step(&p.weights(), &[1.0, -2.0, 5.0], &LstmState::zeros(4)).unwrap();
        assert_eq!(s, LstmState::zeros(4));
    }

    #[test]
    fn saturated_gates_by_hand() {
        // i and f saturate to 1, the output gate sits at sigmoid(0) = 0.5 and
        // the candidate is tanh(atanh(0.5)) = 0.5
        let mut p = Owned::zeros(1, 1);
        p.bias = vec![40.0, 40.0, 0.5f64.atanh(), 0.0];
        let (s, _) = lstm_step(&p.weights(), &[0.3], &LstmState::zeros(1)).unwrap();
        assert!((s.c[0] - 0.5).abs() < 1e-12);
        assert!((s.h[0] - 0.5 * 0.5f64.tanh()).abs() < 1e-12);
        assert!((s.h[0] - 0.2311).abs() < 1e-4);
    }

    #[test]
    fn zero_upstream_gradient() {
        let mut p = Owned::zeros(2, 3);
        p.input
            .data_mut()
            .iter_mut()
            .enumerate()
            .for_each(|(k, v)| *v = (k as f64 * 0.37).sin());
        let xs = [vec![0.1, 0.2], vec![-0.3, 0.4]];
        let (_, caches) = lstm_forward(&p.weights(), xs.iter().map(Vec::as_slice)).unwrap();
        let (g, gx) = lstm_backward(&p.weights(), &caches, &[0.0; 3]).unwrap();
        assert!(g
            .input
            .iter()
            .chain(&g.recurrent)
            .chain(&g.bias)
            .all(|&v| v == 0.0));
        assert!(gx.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_checks() {
        let p = Owned::zeros(2, 3);
        assert!(lstm_step(&p.weights(), &[1.0], &LstmState::zeros(3)).is_err());
        assert!(lstm_step(&p.weights(), &[1.0, 2.0], &LstmState::zeros(2)).is_err());
        assert!(lstm_backward(&p.weights(), &[], &[0.0; 2]).is_err());
        let bad = Tensor2::zeros(5, 2);
        assert!(LstmWeights::new(bad.view(), p.recurrent.view(), &p.bias).is_err());
    }
}
