use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::batching::BatchPlan;
use crate::corpus::Piece;
use crate::error::{Error, Result};
use crate::midi::PianoRoll;
use crate::model::{to_f64, ForwardTrace, SingModel};
use crate::nn::{adam_step, write_checkpoint, AdamConfig};

use super::loss::piece_loss;
use super::schedule::scheduled_step;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub p_feedback: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            p_feedback: 0.8,
            lr: 0.001,
            epochs: 30,
            seed: 0,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_feedback) {
            return Err(Error::invalid(
                "train config",
                format!("p_feedback {} outside [0, 1]", self.p_feedback),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(
                "train config",
                format!("lr {} must be positive", self.lr),
            ));
        }
        Ok(())
    }
}

/// One training piece per plan assignment, edited to its target length.
/// `load(piece_id, segment)` supplies the unedited segment roll.
pub fn prepare_pieces<F>(plan: &BatchPlan, mut load: F) -> Result<Vec<Piece>>
where
    F: FnMut(&str, usize) -> Result<PianoRoll>,
{
    plan.assignments
        .iter()
        .map(|a| {
            let roll = load(&a.piece_id, a.segment)?.resized(a.target)?;
            Ok(Piece::new(crate::batching::segment_stem(&a.piece_id, a.segment), roll))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean per-piece loss; `None` when the plan had no pieces.
    pub train_loss: Option<f64>,
    pub val_loss: Option<f64>,
    pub seconds: f64,
    pub batches: usize,
}

pub const REPORT_HEADER: &str = "epoch,train_loss,val_loss,seconds";

impl EpochReport {
    pub fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{:.3}",
            self.epoch,
            opt(self.train_loss),
            opt(self.val_loss),
            self.seconds
        )
    }
}

pub fn reports_csv(reports: &[EpochReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    out
}

/// Forward pass over a whole piece with scheduled sampling after the seed.
pub fn scheduled_forward<R: Rng + ?Sized>(
    model: &SingModel,
    piece: &Piece,
    p_feedback: f64,
    rng: &mut R,
) -> Result<ForwardTrace> {
    let k = model.config().seed_len;
    let roll = &piece.roll;
    if roll.n_samples() <= k {
        return Err(Error::invalid(
            "training piece",
            format!("{} has {} samples, need more than {k}", piece.id, roll.n_samples()),
        ));
    }
    let seed: Vec<Vec<f64>> = (0..k).map(|s| to_f64(roll.sample(s))).collect();
    let cfg = model.config().clone();
    model.unroll(roll.n_samples(), &seed, Some(&piece.template), |t, d| {
        Ok(scheduled_step(d, roll.sample(t), p_feedback, &cfg, rng))
    })
}

/// Loss on one piece, accumulating gradients when `learn` is set.
pub fn piece_pass<R: Rng + ?Sized>(
    model: &mut SingModel,
    piece: &Piece,
    p_feedback: f64,
    learn: bool,
    rng: &mut R,
) -> Result<f64> {
    let trace = scheduled_forward(model, piece, p_feedback, rng)?;
    let loss = piece_loss(&trace, &piece.roll, &piece.template)?;
    if !loss.total.is_finite() {
        return Err(Error::NonFiniteLoss {
            piece: piece.id.clone(),
        });
    }
    if learn {
        model.backward(&trace, &loss.dlogits)?;
    }
    Ok(loss.total)
}

/// One pass over the plan: gradients summed over each batch, then one Adam
/// step per batch.
pub fn train_epoch<R: Rng + ?Sized>(
    model: &mut SingModel,
    plan: &BatchPlan,
    pieces: &[Piece],
    cfg: &TrainConfig,
    epoch: usize,
    rng: &mut R,
) -> Result<EpochReport> {
    if pieces.len() != plan.assignments.len() {
        return Err(Error::Shape(format!(
            "{} pieces for {} assignments",
            pieces.len(),
            plan.assignments.len()
        )));
    }
    let start = Instant::now();
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut total = 0.0;
    let mut count = 0usize;
    model.params_mut().zero_grads();
    for batch in &plan.batches {
        for &i in batch {
            let piece = pieces
                .get(i)
                .ok_or_else(|| Error::invalid("batch plan", format!("assignment {i} out of range")))?;
            total += piece_pass(model, piece, cfg.p_feedback, true, rng)?;
            count += 1;
        }
        adam_step(model.params_mut(), &adam);
    }
    Ok(EpochReport {
        epoch,
        train_loss: (count > 0).then(|| total / count as f64),
        val_loss: None,
        seconds: start.elapsed().as_secs_f64(),
        batches: plan.batches.len(),
    })
}

/// Mean per-piece loss on held-out pieces under the training regime.
pub fn validation_loss<R: Rng + ?Sized>(
    model: &mut SingModel,
    pieces: &[Piece],
    p_feedback: f64,
    rng: &mut R,
) -> Result<Option<f64>> {
    if pieces.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    for piece in pieces {
        total += piece_pass(model, piece, p_feedback, false, rng)?;
    }
    Ok(Some(total / pieces.len() as f64))
}

/// Epoch with the lowest validation loss, ties to the earlier epoch.
pub fn select_best(reports: &[EpochReport]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for r in reports {
        if let Some(v) = r.val_loss {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((r.epoch, v));
            }
        }
    }
    best.map(|(e, _)| e)
}

pub fn checkpoint_path(dir: &Path, epoch: usize) -> PathBuf {
    dir.join(format!("epoch_{epoch}.ckpt"))
}

pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const REPORT_FILE: &str = "report.csv";

/// Stream salt so validation draws do not depend on how much randomness
/// training consumed.
const VALIDATION_STREAM: u64 = 0x5641_4c49_4441_5445;

/// Train for `cfg.epochs` epochs. With a checkpoint directory, every epoch's
/// parameters are written as `epoch_<k>.ckpt`, the reports as `report.csv`,
/// and the selected epoch is copied to `best.ckpt` (the last epoch when
/// there is no validation set).
pub fn train<R: Rng + ?Sized>(
    model: &mut SingModel,
    plan: &BatchPlan,
    pieces: &[Piece],
    val: &[Piece],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<EpochReport>> {
    cfg.validate()?;
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut reports = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut report = train_epoch(model, plan, pieces, cfg, epoch, rng)?;
        let mut val_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ VALIDATION_STREAM);
        let started = Instant::now();
        report.val_loss = validation_loss(model, val, cfg.p_feedback, &mut val_rng)?;
        report.seconds += started.elapsed().as_secs_f64();
        log::info!(
            "epoch {epoch}: train {:?} val {:?} ({:.1}s)",
            report.train_loss,
            report.val_loss,
            report.seconds
        );
        if let Some(dir) = &cfg.checkpoint_dir {
            write_checkpoint(&checkpoint_path(dir, epoch), model.params())?;
        }
        reports.push(report);
    }
    if let Some(dir) = &cfg.checkpoint_dir {
        let path = dir.join(REPORT_FILE);
        std::fs::write(&path, reports_csv(&reports)).map_err(|e| Error::io(&path, e))?;
        let best = select_best(&reports).or(reports.last().map(|r| r.epoch));
        if let Some(epoch) = best {
            let from = checkpoint_path(dir, epoch);
            let to = dir.join(BEST_CHECKPOINT);
            std::fs::copy(&from, &to).map_err(|e| Error::io(&to, e))?;
        }
    }
    Ok(reports)
}
