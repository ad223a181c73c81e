//! Scaled-down train/evaluate protocol on the synthetic corpus.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sing::batching::{make_batches, Assignment, Edit};
use sing::corpus::Piece;
use sing::evaluation::{evaluate, ModelGenerator, RandomGenerator};
use sing::model::{CombinerRegistry, ModelConfig, SingModel};
use sing::structure::synth_ssm;
use sing::training::{select_best, train, EpochReport, TrainConfig};

use super::corpus::{steering_spec, structured_corpus};

pub struct DeskSettings {
    pub seed: u64,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_cap: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

impl Default for DeskSettings {
    fn default() -> Self {
        Self {
            seed: 7,
            hidden: 32,
            epochs: 30,
            lr: 0.01,
            batch_cap: 1,
            n_train: 16,
            n_val: 4,
            n_test: 5,
        }
    }
}

pub struct DeskResult {
    pub sing: f64,
    pub ablated: f64,
    pub random: f64,
    pub steering_sing: f64,
    pub steering_ablated: f64,
    pub sing_reports: Vec<EpochReport>,
    pub ablated_reports: Vec<EpochReport>,
}

/// Train, keeping the parameters of the epoch with the best validation
/// loss.
pub fn train_selected(
    cfg: ModelConfig,
    train_set: &[Piece],
    val: &[Piece],
    s: &DeskSettings,
) -> (SingModel, Vec<EpochReport>) {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut model = SingModel::new(cfg.clone(), &mut rng).unwrap();
    let assignments = train_set
        .iter()
        .map(|p| Assignment {
            piece_id: p.id.clone(),
            segment: 0,
            target: p.roll.n_samples(),
            edit: Edit::None,
            fraction: 0.0,
        })
        .collect();
    let plan = make_batches(assignments, s.batch_cap, &mut rng).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let tc = TrainConfig {
        lr: s.lr,
        epochs: s.epochs,
        seed: s.seed,
        checkpoint_dir: Some(dir.path().to_path_buf()),
        ..TrainConfig::default()
    };
    let reports = train(&mut model, &plan, train_set, val, &tc, &mut rng).unwrap();
    let best = select_best(&reports).unwrap();
    let params = sing::nn::read_checkpoint(&sing::training::checkpoint_path(dir.path(), best)).unwrap();
    let model = SingModel::from_params(cfg, params, &CombinerRegistry::builtin()).unwrap();
    (model, reports)
}

pub fn run(s: &DeskSettings) -> DeskResult {
    let total = s.n_train + s.n_val + s.n_test;
    let corpus = structured_corpus(s.seed, total, "piece");
    let (train_set, rest) = corpus.split_at(s.n_train);
    let (val, test) = rest.split_at(s.n_val);

    let cfg = ModelConfig {
        hidden_size: s.hidden,
        ..ModelConfig::default()
    };
    let (sing_model, sing_reports) = train_selected(cfg.clone(), train_set, val, s);
    let (ablated_model, ablated_reports) = train_selected(cfg.clone().ablated(), train_set, val, s);

    let sing_gen = ModelGenerator::new("sing", sing_model);
    let ablated_gen = ModelGenerator::new("ablated", ablated_model);
    let random_gen = RandomGenerator::new(cfg.clone());
    let score = |g: &dyn sing::evaluation::Generator, pieces: &[Piece], gens: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed + 1000);
        let run = evaluate(g, pieces, gens, &mut rng);
        assert!(run.skipped.is_empty(), "{:?}", run.skipped);
        run.mean().unwrap()
    };
    let sing = score(&sing_gen, test, 3);
    let ablated = score(&ablated_gen, test, 3);
    let random = score(&random_gen, test, 3);

    let steering = vec![Piece {
        id: "steering".into(),
        roll: test[0].roll.clone(),
        template: synth_ssm(&steering_spec()).unwrap(),
    }];
    let steering_sing = score(&sing_gen, &steering, 10);
    let steering_ablated = score(&ablated_gen, &steering, 10);
    DeskResult {
        sing,
        ablated,
        random,
        steering_sing,
        steering_ablated,
        sing_reports,
        ablated_reports,
    }
}
