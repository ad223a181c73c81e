//! Single-layer LSTM cell with backpropagation through time.
//!
//! Gate rows are stacked `[input; forget; candidate; output]`, each `hidden`
//! rows tall, in both weight matrices and the bias.

use std::borrow::Borrow;

use crate::error::{Error, Result};

use super::tensor::{sigmoid, Tensor2};

#[derive(Debug, Clone, Copy)]
pub struct LstmWeights<'a> {
    pub w_ih: &'a Tensor2,
    pub w_hh: &'a Tensor2,
    pub bias: &'a [f64],
}

impl LstmWeights<'_> {
    pub fn hidden(&self) -> usize {
        self.w_hh.cols()
    }

    pub fn input(&self) -> usize {
        self.w_ih.cols()
    }

    fn check(&self) -> Result<()> {
        let h = self.hidden();
        if self.w_hh.rows() != 4 * h || self.w_ih.rows() != 4 * h || self.bias.len() != 4 * h {
            return Err(Error::Shape(format!(
                "lstm w_ih {:?} w_hh {:?} bias {}",
                self.w_ih.shape(),
                self.w_hh.shape(),
                self.bias.len()
            )));
        }
        Ok(())
    }
}

pub struct LstmGrads<'a> {
    pub w_ih: &'a mut Tensor2,
    pub w_hh: &'a mut Tensor2,
    pub bias: &'a mut [f64],
}

/// Everything one step needs for the backward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LstmStep {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Post-activation gates `[i; f; g; o]`.
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn lstm_cell(w: LstmWeights<'_>, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<LstmStep> {
    w.check()?;
    let h = w.hidden();
    if x.len() != w.input() || h_prev.len() != h || c_prev.len() != h {
        return Err(Error::Shape(format!(
            "lstm input {} / state {} {} for input size {} hidden {h}",
            x.len(),
            h_prev.len(),
            c_prev.len(),
            w.input()
        )));
    }
    let mut pre = w.bias.to_vec();
    w.w_ih.matvec_acc(x, &mut pre);
    w.w_hh.matvec_acc(h_prev, &mut pre);
    let mut gates = pre;
    for (k, g) in gates.iter_mut().enumerate() {
        *g = if (2 * h..3 * h).contains(&k) {
            g.tanh()
        } else {
            sigmoid(*g)
        };
    }
    let mut c = vec![0.0; h];
    let mut tanh_c = vec![0.0; h];
    let mut h_out = vec![0.0; h];
    for j in 0..h {
        let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
        c[j] = f * c_prev[j] + i * g;
        tanh_c[j] = c[j].tanh();
        h_out[j] = o * tanh_c[j];
    }
    Ok(LstmStep {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates,
        c,
        tanh_c,
        h: h_out,
    })
}

/// Backpropagate through a whole sequence that started from zero state.
///
/// `dh[t]` is the loss gradient arriving at `steps[t].h` from outside the
/// recurrence. Parameter gradients are accumulated into `grads`; input
/// gradients are written to `dx` when requested.
pub fn lstm_backward<S: Borrow<LstmStep>>(
    w: LstmWeights<'_>,
    steps: &[S],
    dh: &[Vec<f64>],
    grads: LstmGrads<'_>,
    mut dx: Option<&mut Vec<Vec<f64>>>,
) -> Result<()> {
    w.check()?;
    if dh.len() != steps.len() {
        return Err(Error::Shape("lstm backward: one dh per step".into()));
    }
    let h = w.hidden();
    if let Some(dx) = dx.as_deref_mut() {
        *dx = vec![vec![0.0; w.input()]; steps.len()];
    }
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dpre = vec![0.0; 4 * h];
    for t in (0..steps.len()).rev() {
        let s = steps[t].borrow();
        for j in 0..h {
            let dh_total = dh[t][j] + dh_next[j];
            let (i, f, g, o) = (s.gates[j], s.gates[h + j], s.gates[2 * h + j], s.gates[3 * h + j]);
            let dc = dc_next[j] + dh_total * o * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
            dpre[j] = dc * g * i * (1.0 - i);
            dpre[h + j] = dc * s.c_prev[j] * f * (1.0 - f);
            dpre[2 * h + j] = dc * i * (1.0 - g * g);
            dpre[3 * h + j] = dh_total * s.tanh_c[j] * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        grads.w_ih.add_outer(&dpre, &s.x);
        grads.w_hh.add_outer(&dpre, &s.h_prev);
        for (b, d) in grads.bias.iter_mut().zip(&dpre) {
            *b += d;
        }
        dh_next.fill(0.0);
        w.w_hh.matvec_t_acc(&dpre, &mut dh_next);
        if let Some(dx) = dx.as_deref_mut() {
            w.w_ih.matvec_t_acc(&dpre, &mut dx[t]);
        }
    }
    Ok(())
}
