use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::midi::{PianoRoll, N_PITCHES};
use crate::nn::{
    dense_backward_acc, lstm_backward, lstm_cell, sparsemax, sparsemax_backward, LstmGrads, LstmStep, LstmWeights,
    ParamId, ParamSet, Tensor2,
};
use crate::structure::SelfSimilarityMatrix;

use super::attention::{attention_step, Attention};
use super::combiner::{expect_shape, Combiner, CombinerRegistry, HEAD_B, HEAD_W};
use super::config::ModelConfig;
use super::sampler::sample_notes;

const LSTM_W_IH: &str = "lstm.w_ih";
const LSTM_W_HH: &str = "lstm.w_hh";
const LSTM_B: &str = "lstm.b";

#[derive(Debug, Clone, Copy)]
struct LstmIds {
    w_ih: ParamId,
    w_hh: ParamId,
    b: ParamId,
}

/// Recurrent state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// What one step computed while predicting sample `t` from sample `t - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub lstm: LstmStep,
    /// LSTM output as seen by the head or combiner.
    pub z: Vec<f64>,
    pub attention: Option<Attention>,
    pub logits: Vec<f64>,
    /// Whether the sample appended after this step was the model's own
    /// draw (`Some(true)`), the target (`Some(false)`), or part of the seed.
    pub fed_back: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub seed_len: usize,
    /// `steps[k]` predicts sample `k + 1`.
    pub steps: Vec<TraceStep>,
    /// Every sample of the sequence, seed first, as fed to or produced by
    /// the model.
    pub samples: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// Steps whose predictions count towards the loss.
    pub fn generated_steps(&self) -> &[TraceStep] {
        &self.steps[self.seed_len - 1..]
    }
}

/// LSTM with either SSM attention plus a combiner, or (ablated) a plain
/// dense head.
#[derive(Debug)]
pub struct SingModel {
    cfg: ModelConfig,
    params: ParamSet,
    lstm: LstmIds,
    head: Option<(ParamId, ParamId)>,
    combiner: Option<Box<dyn Combiner>>,
}

impl SingModel {
    pub fn new<R: Rng>(cfg: ModelConfig, rng: &mut R) -> Result<Self> {
        Self::with_registry(cfg, &CombinerRegistry::builtin(), rng)
    }

    /// Fresh weights uniform in ±1/√fan_in, biases zero except the forget
    /// gate at one.
    pub fn with_registry<R: Rng>(cfg: ModelConfig, registry: &CombinerRegistry, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.hidden_size;
        let mut params = ParamSet::new();
        let w_ih = params.add_uniform(LSTM_W_IH, 4 * h, N_PITCHES, h, rng);
        let w_hh = params.add_uniform(LSTM_W_HH, 4 * h, h, h, rng);
        let mut bias = Tensor2::zeros(4 * h, 1);
        for j in h..2 * h {
            bias.set(j, 0, 1.0);
        }
        let b = params.add(LSTM_B, bias);
        let lstm = LstmIds { w_ih, w_hh, b };
        let (head, combiner) = if cfg.attention_enabled {
            let entry = registry.get(&cfg.combiner)?;
            let rng: &mut dyn RngCore = rng;
            (None, Some((entry.init)(&mut params, h, rng)))
        } else {
            let w = params.add_uniform(HEAD_W, N_PITCHES, h, h, rng);
            let b = params.add(HEAD_B, Tensor2::zeros(N_PITCHES, 1));
            (Some((w, b)), None)
        };
        Ok(Self {
            cfg,
            params,
            lstm,
            head,
            combiner,
        })
    }

    /// Rebuild a model from stored parameters. Hidden size, attention and
    /// combiner are read off the tensors; sampling settings come from `cfg`.
    pub fn from_params(mut cfg: ModelConfig, params: ParamSet, registry: &CombinerRegistry) -> Result<Self> {
        let find = |name: &str| {
            params
                .id(name)
                .ok_or_else(|| Error::format("checkpoint", format!("missing tensor {name}")))
        };
        let lstm = LstmIds {
            w_ih: find(LSTM_W_IH)?,
            w_hh: find(LSTM_W_HH)?,
            b: find(LSTM_B)?,
        };
        let h = params.value(lstm.w_hh).cols();
        expect_shape(&params, lstm.w_ih, (4 * h, N_PITCHES))?;
        expect_shape(&params, lstm.w_hh, (4 * h, h))?;
        expect_shape(&params, lstm.b, (4 * h, 1))?;
        cfg.hidden_size = h;
        let (head, combiner) = match registry.detect(&params) {
            Some(c) => {
                c.check(&params, h)?;
                cfg.combiner = c.name().to_string();
                cfg.attention_enabled = true;
                (None, Some(c))
            }
            None => {
                let (w, b) = (find(HEAD_W)?, find(HEAD_B)?);
                expect_shape(&params, w, (N_PITCHES, h))?;
                expect_shape(&params, b, (N_PITCHES, 1))?;
                cfg.attention_enabled = false;
                (Some((w, b)), None)
            }
        };
        cfg.validate()?;
        Ok(Self {
            cfg,
            params,
            lstm,
            head,
            combiner,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn into_params(self) -> ParamSet {
        self.params
    }

    pub fn hidden_size(&self) -> usize {
        self.cfg.hidden_size
    }

    pub fn uses_attention(&self) -> bool {
        self.combiner.is_some()
    }

    pub fn combiner_name(&self) -> Option<&'static str> {
        self.combiner.as_ref().map(|c| c.name())
    }

    fn lstm_weights(&self) -> LstmWeights<'_> {
        LstmWeights {
            w_ih: self.params.value(self.lstm.w_ih),
            w_hh: self.params.value(self.lstm.w_hh),
            bias: self.params.value(self.lstm.b).data(),
        }
    }

    /// Predict sample `t` from the previous sample `input`.
    ///
    /// `history` holds samples `0..t` (so `input` is its last element);
    /// attention reads row `t` of the template over them.
    pub fn forward_step(
        &self,
        input: &[f64],
        t: usize,
        template: Option<&SelfSimilarityMatrix>,
        history: &[Vec<f64>],
        state: &mut LstmState,
    ) -> Result<TraceStep> {
        if input.len() != N_PITCHES {
            return Err(Error::Shape(format!("input sample has {} pitches", input.len())));
        }
        let lstm = lstm_cell(self.lstm_weights(), input, &state.h, &state.c)?;
        let z = if self.cfg.lstm_output_sparsemax {
            sparsemax(&lstm.h)?
        } else {
            lstm.h.clone()
        };
        let (attention, logits) = match &self.combiner {
            Some(c) => {
                let s = template.ok_or_else(|| Error::invalid("forward step", "attention needs a template SSM"))?;
                let att = attention_step(s, t, history)?;
                let d = c.forward(&self.params, &att.vector, &z);
                (Some(att), d)
            }
            None => {
                let (w, b) = self.head.expect("ablated model has a head");
                let mut d = self.params.value(b).data().to_vec();
                self.params.value(w).matvec_acc(&z, &mut d);
                (None, d)
            }
        };
        state.h.clone_from(&lstm.h);
        state.c.clone_from(&lstm.c);
        Ok(TraceStep {
            t,
            lstm,
            z,
            attention,
            logits,
            fed_back: None,
        })
    }

    /// Run over `n` samples starting from `seed`. After each prediction at or
    /// past the seed, `next(t, logits)` supplies sample `t` and whether it was
    /// fed back from the model.
    pub fn unroll<F>(
        &self,
        n: usize,
        seed: &[Vec<f64>],
        template: Option<&SelfSimilarityMatrix>,
        mut next: F,
    ) -> Result<ForwardTrace>
    where
        F: FnMut(usize, &[f64]) -> Result<(Vec<f64>, bool)>,
    {
        if seed.is_empty() || n <= seed.len() {
            return Err(Error::invalid(
                "sequence",
                format!("length {n} must exceed seed length {}", seed.len()),
            ));
        }
        if let Some(s) = template {
            if self.uses_attention() && s.n() < n {
                return Err(Error::Shape(format!("template size {} < sequence length {n}", s.n())));
            }
        }
        let mut samples = seed.to_vec();
        let mut steps = Vec::with_capacity(n - 1);
        let mut state = LstmState::zeros(self.hidden_size());
        for t in 1..n {
            let mut step = self.forward_step(&samples[t - 1], t, template, &samples[..t], &mut state)?;
            if t >= seed.len() {
                let (y, fed) = next(t, &step.logits)?;
                if y.len() != N_PITCHES {
                    return Err(Error::Shape(format!("sample {t} has {} pitches", y.len())));
                }
                step.fed_back = Some(fed);
                samples.push(y);
            }
            steps.push(step);
        }
        Ok(ForwardTrace {
            seed_len: seed.len(),
            steps,
            samples,
        })
    }

    /// Accumulate parameter gradients given `∂L/∂d` for every step of the
    /// trace (zeros where a step does not contribute).
    pub fn backward(&mut self, trace: &ForwardTrace, dlogits: &[Vec<f64>]) -> Result<()> {
        if dlogits.len() != trace.steps.len() {
            return Err(Error::Shape(format!(
                "{} logit gradients for {} steps",
                dlogits.len(),
                trace.steps.len()
            )));
        }
        let h = self.hidden_size();
        let mut dh = vec![vec![0.0; h]; trace.steps.len()];
        for ((step, dd), dh) in trace.steps.iter().zip(dlogits).zip(dh.iter_mut()) {
            if dd.iter().all(|&g| g == 0.0) {
                continue;
            }
            let mut dz = vec![0.0; h];
            match &self.combiner {
                Some(c) => {
                    let a = &step.attention.as_ref().expect("attention recorded").vector;
                    c.backward(&mut self.params, a, &step.z, dd, &mut dz);
                }
                None => {
                    let (w, b) = self.head.expect("ablated model has a head");
                    let mut dw = self.params.take_grad(w);
                    let mut db = self.params.take_grad(b);
                    dense_backward_acc(self.params.value(w), &step.z, dd, &mut dw, db.data_mut(), Some(&mut dz))?;
                    self.params.put_grad(w, dw);
                    self.params.put_grad(b, db);
                }
            }
            *dh = if self.cfg.lstm_output_sparsemax {
                sparsemax_backward(&step.z, &dz)
            } else {
                dz
            };
        }
        let lstm_steps: Vec<&LstmStep> = trace.steps.iter().map(|s| &s.lstm).collect();
        let ids = self.lstm;
        let mut g_ih = self.params.take_grad(ids.w_ih);
        let mut g_hh = self.params.take_grad(ids.w_hh);
        let mut g_b = self.params.take_grad(ids.b);
        let res = lstm_backward(
            self.lstm_weights(),
            &lstm_steps,
            &dh,
            LstmGrads {
                w_ih: &mut g_ih,
                w_hh: &mut g_hh,
                bias: g_b.data_mut(),
            },
            None,
        );
        self.params.put_grad(ids.w_ih, g_ih);
        self.params.put_grad(ids.w_hh, g_hh);
        self.params.put_grad(ids.b, g_b);
        res
    }

    /// Continue the first `seed_len` samples of `seed` up to the template's
    /// length, sampling every new step from the model.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        seed: &PianoRoll,
        template: &SelfSimilarityMatrix,
        rng: &mut R,
    ) -> Result<PianoRoll> {
        let k = self.cfg.seed_len;
        let n = template.n();
        if n <= k {
            return Err(Error::invalid(
                "generation",
                format!("template length {n} must exceed seed length {k}"),
            ));
        }
        if seed.n_samples() < k {
            return Err(Error::invalid(
                "generation",
                format!("seed has {} samples, need {k}", seed.n_samples()),
            ));
        }
        let seed_samples: Vec<Vec<f64>> = (0..k).map(|s| to_f64(seed.sample(s))).collect();
        let trace = self.unroll(n, &seed_samples, Some(template), |_, d| {
            Ok((to_f64(&sample_notes(d, &self.cfg, rng)), true))
        })?;
        let data: Vec<u8> = trace.samples.iter().flatten().map(|&v| v as u8).collect();
        Ok(PianoRoll::from_data(n, data, seed.tempo())?.with_source_id(seed.source_id()))
    }
}

pub fn to_f64(sample: &[u8]) -> Vec<f64> {
    sample.iter().map(|&v| f64::from(v)).collect()
}
