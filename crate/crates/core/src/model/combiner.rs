//! Ways of merging the attention vector with the LSTM output into logits.
//!
//! Each combiner owns a few named parameters inside the model's
//! [`ParamSet`]. Combiners are looked up by name in a [`CombinerRegistry`],
//! which is also how a loaded checkpoint finds out which one it was trained
//! with.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::midi::N_PITCHES;
use crate::nn::{dense_backward_acc, ParamId, ParamSet, Tensor2};

pub const HEAD_W: &str = "head.w";
pub const HEAD_B: &str = "head.b";

pub trait Combiner: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    /// Logits for one sample from the attention vector `a` (128 long) and
    /// the LSTM output `z`.
    fn forward(&self, params: &ParamSet, a: &[f64], z: &[f64]) -> Vec<f64>;

    /// Accumulate parameter gradients for upstream `dd` and add `∂L/∂z`
    /// into `dz`. The attention vector is treated as a constant.
    fn backward(&self, params: &mut ParamSet, a: &[f64], z: &[f64], dd: &[f64], dz: &mut [f64]);

    /// Verify parameter shapes against hidden size `h`.
    fn check(&self, params: &ParamSet, h: usize) -> Result<()>;
}

pub(crate) fn expect_shape(params: &ParamSet, id: ParamId, shape: (usize, usize)) -> Result<()> {
    let p = params.param(id);
    if p.value.shape() != shape {
        return Err(Error::Shape(format!(
            "{} is {:?}, expected {:?}",
            p.name,
            p.value.shape(),
            shape
        )));
    }
    Ok(())
}

pub type InitFn = fn(&mut ParamSet, usize, &mut dyn RngCore) -> Box<dyn Combiner>;
pub type AttachFn = fn(&ParamSet) -> Option<Box<dyn Combiner>>;

#[derive(Clone, Copy)]
pub struct CombinerEntry {
    pub name: &'static str,
    /// Create freshly initialised parameters for hidden size `h`.
    pub init: InitFn,
    /// Recognise this combiner's parameters in a loaded set.
    pub attach: AttachFn,
}

#[derive(Clone)]
pub struct CombinerRegistry {
    entries: Vec<CombinerEntry>,
}

impl CombinerRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(CombinerEntry {
            name: DenseCombiner::NAME,
            init: DenseCombiner::init,
            attach: DenseCombiner::attach,
        });
        r.register(CombinerEntry {
            name: PerPitchCombiner::NAME,
            init: PerPitchCombiner::init,
            attach: PerPitchCombiner::attach,
        });
        r
    }

    /// Later registrations under the same name replace earlier ones.
    pub fn register(&mut self, entry: CombinerEntry) {
        self.entries.retain(|e| e.name != entry.name);
        self.entries.push(entry);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    pub fn get(&self, name: &str) -> Result<&CombinerEntry> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "combiner",
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn detect(&self, params: &ParamSet) -> Option<Box<dyn Combiner>> {
        self.entries.iter().find_map(|e| (e.attach)(params))
    }
}

impl Default for CombinerRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// One affine map over the concatenation `[a; z]`.
#[derive(Debug, Clone, Copy)]
pub struct DenseCombiner {
    w: ParamId,
    b: ParamId,
}

impl DenseCombiner {
    pub const NAME: &'static str = "dense";
    const W: &'static str = "combiner.dense.w";
    const B: &'static str = "combiner.dense.b";

    fn init(params: &mut ParamSet, hidden: usize, rng: &mut dyn RngCore) -> Box<dyn Combiner> {
        let fan_in = N_PITCHES + hidden;
        let w = params.add_uniform(Self::W, N_PITCHES, fan_in, fan_in, rng);
        let b = params.add(Self::B, Tensor2::zeros(N_PITCHES, 1));
        Box::new(Self { w, b })
    }

    fn attach(params: &ParamSet) -> Option<Box<dyn Combiner>> {
        let w = params.id(Self::W)?;
        let b = params.id(Self::B)?;
        Some(Box::new(Self { w, b }))
    }
}

fn concat(a: &[f64], z: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(a.len() + z.len());
    x.extend_from_slice(a);
    x.extend_from_slice(z);
    x
}

impl Combiner for DenseCombiner {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn check(&self, params: &ParamSet, h: usize) -> Result<()> {
        expect_shape(params, self.w, (N_PITCHES, N_PITCHES + h))?;
        expect_shape(params, self.b, (N_PITCHES, 1))
    }

    fn forward(&self, params: &ParamSet, a: &[f64], z: &[f64]) -> Vec<f64> {
        let mut d = params.value(self.b).data().to_vec();
        params.value(self.w).matvec_acc(&concat(a, z), &mut d);
        d
    }

    fn backward(&self, params: &mut ParamSet, a: &[f64], z: &[f64], dd: &[f64], dz: &mut [f64]) {
        let x = concat(a, z);
        let mut dx = vec![0.0; x.len()];
        let mut dw = params.take_grad(self.w);
        let mut db = params.take_grad(self.b);
        dense_backward_acc(params.value(self.w), &x, dd, &mut dw, db.data_mut(), Some(&mut dx))
            .expect("shapes checked at construction");
        params.put_grad(self.w, dw);
        params.put_grad(self.b, db);
        for (g, d) in dz.iter_mut().zip(&dx[a.len()..]) {
            *g += d;
        }
    }
}

/// Project `z` to 128 values with a head, then mix each pitch's attention
/// value and head value with two shared weights and a shared bias.
#[derive(Debug, Clone, Copy)]
pub struct PerPitchCombiner {
    head_w: ParamId,
    head_b: ParamId,
    mix_w: ParamId,
    mix_b: ParamId,
}

impl PerPitchCombiner {
    pub const NAME: &'static str = "per_pitch";
    const MIX_W: &'static str = "combiner.per_pitch.w";
    const MIX_B: &'static str = "combiner.per_pitch.b";

    fn init(params: &mut ParamSet, hidden: usize, rng: &mut dyn RngCore) -> Box<dyn Combiner> {
        let head_w = params.add_uniform(HEAD_W, N_PITCHES, hidden, hidden, rng);
        let head_b = params.add(HEAD_B, Tensor2::zeros(N_PITCHES, 1));
        let mix_w = params.add_uniform(Self::MIX_W, 1, 2, 2, rng);
        let mix_b = params.add(Self::MIX_B, Tensor2::zeros(1, 1));
        Box::new(Self {
            head_w,
            head_b,
            mix_w,
            mix_b,
        })
    }

    fn attach(params: &ParamSet) -> Option<Box<dyn Combiner>> {
        Some(Box::new(Self {
            head_w: params.id(HEAD_W)?,
            head_b: params.id(HEAD_B)?,
            mix_w: params.id(Self::MIX_W)?,
            mix_b: params.id(Self::MIX_B)?,
        }))
    }

    fn head(&self, params: &ParamSet, z: &[f64]) -> Vec<f64> {
        let mut zh = params.value(self.head_b).data().to_vec();
        params.value(self.head_w).matvec_acc(z, &mut zh);
        zh
    }
}

impl Combiner for PerPitchCombiner {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn check(&self, params: &ParamSet, h: usize) -> Result<()> {
        expect_shape(params, self.head_w, (N_PITCHES, h))?;
        expect_shape(params, self.head_b, (N_PITCHES, 1))?;
        expect_shape(params, self.mix_w, (1, 2))?;
        expect_shape(params, self.mix_b, (1, 1))
    }

    fn forward(&self, params: &ParamSet, a: &[f64], z: &[f64]) -> Vec<f64> {
        let zh = self.head(params, z);
        let mix = params.value(self.mix_w).data();
        let (wa, wz) = (mix[0], mix[1]);
        let b = params.value(self.mix_b).data()[0];
        a.iter().zip(&zh).map(|(&ai, &zi)| wa * ai + wz * zi + b).collect()
    }

    fn backward(&self, params: &mut ParamSet, a: &[f64], z: &[f64], dd: &[f64], dz: &mut [f64]) {
        let zh = self.head(params, z);
        let wz = params.value(self.mix_w).data()[1];
        let mut dwa = 0.0;
        let mut dwz = 0.0;
        let mut db = 0.0;
        for ((&g, &ai), &zi) in dd.iter().zip(a).zip(&zh) {
            dwa += g * ai;
            dwz += g * zi;
            db += g;
        }
        {
            let gm = params.grad_mut(self.mix_w).data_mut();
            gm[0] += dwa;
            gm[1] += dwz;
        }
        params.grad_mut(self.mix_b).data_mut()[0] += db;
        let dzh: Vec<f64> = dd.iter().map(|g| g * wz).collect();
        let mut dw = params.take_grad(self.head_w);
        let mut dbh = params.take_grad(self.head_b);
        dense_backward_acc(params.value(self.head_w), z, &dzh, &mut dw, dbh.data_mut(), Some(dz))
            .expect("shapes checked at construction");
        params.put_grad(self.head_w, dw);
        params.put_grad(self.head_b, dbh);
    }
}
