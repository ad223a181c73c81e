//! Generators compared by the evaluation harness, selectable by name.

use rand::seq::index;
use rand::{Rng, RngCore};

use crate::corpus::Piece;
use crate::error::{Error, Result};
use crate::midi::PianoRoll;
use crate::model::{CombinerRegistry, ModelConfig, SingModel};
use crate::nn::ParamSet;

pub trait Generator: Send + Sync {
    fn name(&self) -> &str;

    /// A new roll as long as the piece's template.
    fn generate(&self, piece: &Piece, rng: &mut dyn RngCore) -> Result<PianoRoll>;
}

/// Every sample gets `cfg.max_notes` distinct pitches drawn uniformly from
/// the allowed range.
pub fn random_baseline<R: Rng + ?Sized>(n: usize, tempo: f64, cfg: &ModelConfig, rng: &mut R) -> Result<PianoRoll> {
    cfg.validate()?;
    let span = cfg.pitch_hi - cfg.pitch_lo + 1;
    let k = cfg.max_notes.min(span);
    let mut roll = PianoRoll::zeros(n, tempo)?;
    for s in 0..n {
        for i in index::sample(rng, span, k) {
            roll.set(cfg.pitch_lo + i, s, true);
        }
    }
    Ok(roll)
}

pub struct RandomGenerator {
    cfg: ModelConfig,
}

impl RandomGenerator {
    pub fn new(cfg: ModelConfig) -> Self {
        Self { cfg }
    }
}

impl Generator for RandomGenerator {
    fn name(&self) -> &str {
        "random"
    }

    fn generate(&self, piece: &Piece, rng: &mut dyn RngCore) -> Result<PianoRoll> {
        random_baseline(piece.template.n(), piece.roll.tempo(), &self.cfg, rng)
    }
}

/// A trained network, with or without attention.
pub struct ModelGenerator {
    name: String,
    model: SingModel,
}

impl ModelGenerator {
    pub fn new(name: impl Into<String>, model: SingModel) -> Self {
        Self {
            name: name.into(),
            model,
        }
    }

    pub fn model(&self) -> &SingModel {
        &self.model
    }
}

impl Generator for ModelGenerator {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, piece: &Piece, rng: &mut dyn RngCore) -> Result<PianoRoll> {
        self.model.generate(&piece.roll, &piece.template, rng)
    }
}

/// What a generator factory may draw on.
pub struct GeneratorContext<'a> {
    pub model: ModelConfig,
    pub checkpoint: Option<ParamSet>,
    pub combiners: &'a CombinerRegistry,
}

pub type GeneratorFactory = fn(GeneratorContext<'_>) -> Result<Box<dyn Generator>>;

pub struct GeneratorRegistry {
    entries: Vec<(&'static str, GeneratorFactory)>,
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("sing", |ctx| model_generator("sing", ctx, true));
        r.register("ablated", |ctx| model_generator("ablated", ctx, false));
        r.register("random", |ctx| Ok(Box::new(RandomGenerator::new(ctx.model))));
        r
    }

    /// Later registrations under the same name replace earlier ones.
    pub fn register(&mut self, name: &'static str, factory: GeneratorFactory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn build(&self, name: &str, ctx: GeneratorContext<'_>) -> Result<Box<dyn Generator>> {
        let (_, factory) = self
            .entries
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "generator",
                name: name.to_string(),
                known: self.names().join(", "),
            })?;
        factory(ctx)
    }
}

impl Default for GeneratorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

fn model_generator(name: &str, ctx: GeneratorContext<'_>, attention: bool) -> Result<Box<dyn Generator>> {
    let params = ctx
        .checkpoint
        .ok_or_else(|| Error::invalid("generator", format!("{name} needs a checkpoint")))?;
    let model = SingModel::from_params(ctx.model, params, ctx.combiners)?;
    if model.uses_attention() != attention {
        let kind = if model.uses_attention() {
            "an attention"
        } else {
            "an ablated"
        };
        return Err(Error::invalid("generator", format!("{name} given {kind} checkpoint")));
    }
    Ok(Box::new(ModelGenerator::new(name, model)))
}
