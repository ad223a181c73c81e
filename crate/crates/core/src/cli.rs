//! Command-line entry point.
//!
//! Settings resolve as built-in defaults, then `--config` file, then flags.
//! Every random choice flows from one generator seeded by `--seed`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::batching::{plan_batches, slice_long, BatchPlan, SegmentInfo};
use crate::config::RunConfig;
use crate::corpus::{list_files, load_pieces, load_rolls, preprocess_midi, Piece, ROLL_EXT, SSM_EXT};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, triptych, GeneratorContext, GeneratorRegistry, GENERATIONS_PER_PIECE};
use crate::midi::{read_proll, to_midi, write_proll, PianoRoll};
use crate::model::{CombinerRegistry, SingModel};
use crate::nn::{read_checkpoint, ParamSet};
use crate::structure::{read_ssm, render_pgm, roll_ssm, synth_ssm, write_ssm, SynthSpec};
use crate::training::{prepare_pieces, train, BEST_CHECKPOINT};

#[derive(Debug, Parser)]
#[command(name = "sing", version, about = "Structure-informed piano-roll generation")]
pub struct Cli {
    /// `key = value` settings file applied before flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every random choice [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for per-piece work [default: 1]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// MIDI directory to `.proll` rolls and `.ssm` templates
    Preprocess(Io),
    /// Rolls directory to a batch plan file
    BatchPlan {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Train on a rolls directory; writes `epoch_<k>.ckpt`, `best.ckpt` and
    /// `report.csv` into `--out`
    Train {
        #[command(flatten)]
        io: Io,
        /// Batch plan from `batch-plan`; built on the fly when absent
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Validation rolls directory used to pick `best.ckpt`
        #[arg(long)]
        val: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Continue a seed roll along a template; writes `.proll` and `.mid`
    Generate {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        template: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Score generations against a directory of test rolls; writes CSV
    Evaluate {
        #[command(flatten)]
        io: Io,
        /// Needed by the `sing` and `ablated` generators
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// One of sing, ablated, random [default: from the checkpoint, else random]
        #[arg(long)]
        generator: Option<String>,
        /// Generations per piece
        #[arg(long, default_value_t = GENERATIONS_PER_PIECE)]
        generations: usize,
        /// Directory for per-piece PGM panels: template, this generator, `--compare`
        #[arg(long, requires = "compare")]
        triptych: Option<PathBuf>,
        /// Second checkpoint shown in the third panel
        #[arg(long)]
        compare: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// SSM file to a greyscale PGM image
    RenderSsm(Io),
    /// Block specification text to an SSM file
    SynthSsm(Io),
}

#[derive(Debug, Args)]
pub struct Io {
    /// Input file or directory
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output file or directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Default, Args)]
pub struct Tuning {
    /// Use the attention-free model
    #[arg(long)]
    pub ablated: bool,
    /// LSTM hidden size [default: 128]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Combiner: dense or per_pitch [default: dense]
    #[arg(long)]
    pub combiner: Option<String>,
    /// Training epochs [default: 30]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Probability of feeding back the model's own sample [default: 0.8]
    #[arg(long)]
    pub p_feedback: Option<f64>,
    /// Candidates kept by the sampler [default: 50]
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Draws per sample [default: 3]
    #[arg(long)]
    pub max_notes: Option<usize>,
    /// Samples copied from the piece before generation starts [default: 10]
    #[arg(long)]
    pub seed_len: Option<usize>,
    /// Lowest allowed pitch [default: 20]
    #[arg(long)]
    pub pitch_lo: Option<usize>,
    /// Highest allowed pitch [default: 107]
    #[arg(long)]
    pub pitch_hi: Option<usize>,
    /// The grid starts at the k-th shortest segment length [default: 10]
    #[arg(long)]
    pub grid_k: Option<usize>,
    /// Number of standard lengths [default: 16]
    #[arg(long)]
    pub grid_count: Option<usize>,
    /// Longest standard length; longer pieces are sliced [default: 700]
    #[arg(long)]
    pub grid_max_len: Option<usize>,
    /// Pieces per batch at most [default: 100]
    #[arg(long)]
    pub batch_cap: Option<usize>,
    /// Largest pad or truncation as a fraction of length [default: 0.04]
    #[arg(long)]
    pub edit_max_fraction: Option<f64>,
}

impl Tuning {
    fn apply(&self, cfg: &mut RunConfig) {
        let (m, t, b) = (&mut cfg.model, &mut cfg.train, &mut cfg.batch);
        if self.ablated {
            m.attention_enabled = false;
        }
        let set = |dst: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut m.hidden_size, self.hidden);
        set(&mut t.epochs, self.epochs);
        set(&mut m.top_k, self.top_k);
        set(&mut m.max_notes, self.max_notes);
        set(&mut m.seed_len, self.seed_len);
        set(&mut m.pitch_lo, self.pitch_lo);
        set(&mut m.pitch_hi, self.pitch_hi);
        set(&mut b.grid_k, self.grid_k);
        set(&mut b.grid_count, self.grid_count);
        set(&mut b.max_len, self.grid_max_len);
        set(&mut b.batch_cap, self.batch_cap);
        if let Some(c) = &self.combiner {
            m.combiner = c.clone();
        }
        if let Some(v) = self.lr {
            t.lr = v;
        }
        if let Some(v) = self.p_feedback {
            t.p_feedback = v;
        }
        if let Some(v) = self.edit_max_fraction {
            b.max_edit_fraction = v;
        }
    }
}

/// Parse `argv`, run the verb and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SING_LOG", "warn")).try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sing: {e}");
            1
        }
    }
}

fn settings(cli: &Cli, tuning: Option<&Tuning>) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::read(path)?,
        None => RunConfig::default(),
    };
    if let Some(t) = tuning {
        t.apply(&mut cfg);
    }
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: Cli) -> Result<()> {
    let jobs = cli.jobs.unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    pool.install(|| dispatch(&cli))
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Preprocess(io) => {
            settings(cli, None)?;
            preprocess(io)
        }
        Command::BatchPlan { io, tuning } => {
            let cfg = settings(cli, Some(tuning))?;
            let rolls = load_rolls(&io.input)?;
            let plan = build_plan(&rolls, &cfg)?;
            write_text(&io.out, &plan.to_text())
        }
        Command::Train { io, plan, val, tuning } => {
            let cfg = settings(cli, Some(tuning))?;
            run_train(io, plan.as_deref(), val.as_deref(), cfg)
        }
        Command::Generate {
            io,
            checkpoint,
            template,
            tuning,
        } => {
            let cfg = settings(cli, Some(tuning))?;
            let model = load_model(checkpoint, &cfg)?;
            let seed = read_proll(&io.input)?;
            let template = read_ssm(template)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
            let roll = model.generate(&seed, &template, &mut rng)?;
            write_proll(&io.out, &roll)?;
            let mid = io.out.with_extension("mid");
            std::fs::write(&mid, to_midi(&roll, roll.tempo())).map_err(|e| Error::io(&mid, e))
        }
        Command::Evaluate {
            io,
            checkpoint,
            generator,
            generations,
            triptych: panels,
            compare,
            tuning,
        } => {
            let cfg = settings(cli, Some(tuning))?;
            run_evaluate(
                io,
                checkpoint.as_deref(),
                generator.as_deref(),
                *generations,
                panels.as_deref(),
                compare.as_deref(),
                &cfg,
            )
        }
        Command::RenderSsm(io) => {
            settings(cli, None)?;
            let ssm = read_ssm(&io.input)?;
            write_bytes(&io.out, &render_pgm(&ssm.values))
        }
        Command::SynthSsm(io) => {
            settings(cli, None)?;
            let spec = SynthSpec::read(&io.input)?;
            write_ssm(&io.out, &synth_ssm(&spec)?)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn preprocess(io: &Io) -> Result<()> {
    if !io.input.is_dir() {
        return Err(Error::io(&io.input, std::io::ErrorKind::NotFound.into()));
    }
    create_dir(&io.out)?;
    let mut files = list_files(&io.input, "mid")?;
    files.extend(list_files(&io.input, "midi")?);
    files.sort();
    let outcomes: Vec<Result<Option<PianoRoll>>> = files
        .par_iter()
        .map(|path| {
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("piece");
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            match preprocess_midi(&bytes, id) {
                Ok(roll) if roll.data().contains(&1) => Ok(Some(roll)),
                Ok(_) => {
                    log::warn!("{}: no notes at any sample instant; skipped", path.display());
                    Ok(None)
                }
                Err(e @ (Error::Midi { .. } | Error::UnsupportedMidi(_) | Error::EmptyPiece)) => {
                    log::warn!("{}: {e}; skipped", path.display());
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let (mut written, mut skipped) = (0, 0);
    for outcome in outcomes {
        match outcome? {
            Some(roll) => {
                let stem = io.out.join(roll.source_id());
                write_proll(&stem.with_extension(ROLL_EXT), &roll)?;
                write_ssm(&stem.with_extension(SSM_EXT), &roll_ssm(&roll))?;
                written += 1;
            }
            None => skipped += 1,
        }
    }
    log::info!("preprocessed {written} pieces, skipped {skipped}");
    Ok(())
}

fn build_plan(rolls: &[PianoRoll], cfg: &RunConfig) -> Result<BatchPlan> {
    let mut segments = Vec::new();
    for roll in rolls {
        for (i, seg) in slice_long(roll, cfg.batch.max_len)?.iter().enumerate() {
            segments.push(SegmentInfo {
                piece_id: roll.source_id().to_string(),
                segment: i,
                length: seg.n_samples(),
            });
        }
    }
    if segments.is_empty() {
        return Err(Error::invalid("batch plan", "no rolls found"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let (grid, plan) = plan_batches(&segments, &cfg.batch, &mut rng)?;
    log::info!(
        "grid {:?}; {} assigned, {} excluded, {} batches",
        grid.lengths,
        plan.assignments.len(),
        plan.excluded.len(),
        plan.batches.len()
    );
    Ok(plan)
}

fn run_train(io: &Io, plan_path: Option<&Path>, val: Option<&Path>, mut cfg: RunConfig) -> Result<()> {
    let rolls = load_rolls(&io.input)?;
    let plan = match plan_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            BatchPlan::parse(&text)?
        }
        None => build_plan(&rolls, &cfg)?,
    };
    let max_len = cfg.batch.max_len;
    let pieces = prepare_pieces(&plan, |id, segment| {
        let roll = rolls
            .iter()
            .find(|r| r.source_id() == id)
            .ok_or_else(|| Error::invalid("batch plan", format!("no roll for piece {id}")))?;
        slice_long(roll, max_len)?
            .into_iter()
            .nth(segment)
            .ok_or_else(|| Error::invalid("batch plan", format!("{id} has no segment {segment}")))
    })?;
    let val_pieces: Vec<Piece> = match val {
        Some(dir) => load_pieces(dir)?,
        None => Vec::new(),
    };
    cfg.train.checkpoint_dir = Some(io.out.clone());
    create_dir(&io.out)?;
    write_text(&io.out.join("config.txt"), &cfg.to_text())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut model = SingModel::new(cfg.model.clone(), &mut rng)?;
    train(&mut model, &plan, &pieces, &val_pieces, &cfg.train, &mut rng)?;
    log::info!("best checkpoint at {}", io.out.join(BEST_CHECKPOINT).display());
    Ok(())
}

fn load_model(path: &Path, cfg: &RunConfig) -> Result<SingModel> {
    SingModel::from_params(cfg.model.clone(), read_checkpoint(path)?, &CombinerRegistry::builtin())
}

fn run_evaluate(
    io: &Io,
    checkpoint: Option<&Path>,
    generator: Option<&str>,
    generations: usize,
    panels: Option<&Path>,
    compare: Option<&Path>,
    cfg: &RunConfig,
) -> Result<()> {
    let params: Option<ParamSet> = checkpoint.map(read_checkpoint).transpose()?;
    let name = match (generator, &params) {
        (Some(g), _) => g.to_string(),
        (None, Some(p)) if CombinerRegistry::builtin().detect(p).is_some() => "sing".into(),
        (None, Some(_)) => "ablated".into(),
        (None, None) => "random".into(),
    };
    let combiners = CombinerRegistry::builtin();
    let registry = GeneratorRegistry::builtin();
    let ctx = |checkpoint| GeneratorContext {
        model: cfg.model.clone(),
        checkpoint,
        combiners: &combiners,
    };
    let gen = registry.build(&name, ctx(params))?;
    let pieces = load_pieces(&io.input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let run = evaluate(gen.as_ref(), &pieces, generations, &mut rng);
    write_text(&io.out, &run.to_csv())?;
    if let (Some(dir), Some(other)) = (panels, compare) {
        let other_params = read_checkpoint(other)?;
        let other_name = if combiners.detect(&other_params).is_some() {
            "sing"
        } else {
            "ablated"
        };
        let other_gen = registry.build(other_name, ctx(Some(other_params)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
        let other_run = evaluate(other_gen.as_ref(), &pieces, 1, &mut rng);
        create_dir(dir)?;
        for (a, b) in run.pieces.iter().zip(&other_run.pieces) {
            let Some(piece) = pieces.iter().find(|p| p.id == a.piece_id) else {
                continue;
            };
            if a.piece_id != b.piece_id {
                continue;
            }
            let path = dir.join(format!("{}.pgm", a.piece_id));
            write_bytes(&path, &triptych(&piece.template, &a.first_ssm, &b.first_ssm))?;
        }
    }
    match run.mean() {
        Some(m) => log::info!(
            "{name}: mean standardized MSE {m:.4} over {} generations",
            run.generation_count()
        ),
        None => log::warn!("{name}: nothing generated"),
    }
    Ok(())
}
