//! Drives the `sing` binary through a whole experiment.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sing::midi::to_midi;

use super::corpus::{structured_roll, ARCHETYPES, TEMPO};

pub fn sing() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sing"));
    cmd.env_remove("SING_LOG");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    sing().args(args).output().expect("spawn sing")
}

/// Run and insist on success, returning stdout.
pub fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "sing {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `count` structured pieces written as MIDI files `<prefix><i>.mid`.
pub fn write_midi_corpus(dir: &Path, prefix: &str, count: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let roll = structured_roll(&mut rng, &ARCHETYPES[i % ARCHETYPES.len()], "x");
        std::fs::write(dir.join(format!("{prefix}{i}.mid")), to_midi(&roll, TEMPO)).unwrap();
    }
}

pub struct Experiment {
    pub train_dir: PathBuf,
    pub test_dir: PathBuf,
    pub ckpt_dir: PathBuf,
    pub plan: PathBuf,
    pub generated: PathBuf,
    pub eval_csv: PathBuf,
}

/// preprocess, batch-plan, train, generate and evaluate under `root`.
pub fn experiment(root: &Path, seed: u64) -> Experiment {
    let raw = root.join("midi");
    write_midi_corpus(&raw.join("train"), "train", 4, 11);
    write_midi_corpus(&raw.join("test"), "test", 2, 12);
    let e = Experiment {
        train_dir: root.join("train"),
        test_dir: root.join("test"),
        ckpt_dir: root.join("ckpt"),
        plan: root.join("plan.txt"),
        generated: root.join("gen.proll"),
        eval_csv: root.join("eval.csv"),
    };
    let seed = seed.to_string();
    ok(&["preprocess", "--in", s(&raw.join("train")), "--out", s(&e.train_dir)]);
    ok(&["preprocess", "--in", s(&raw.join("test")), "--out", s(&e.test_dir)]);
    ok(&[
        "--seed",
        &seed,
        "batch-plan",
        "--in",
        s(&e.train_dir),
        "--out",
        s(&e.plan),
        "--batch-cap",
        "2",
        "--grid-k",
        "2",
        "--grid-count",
        "2",
    ]);
    ok(&[
        "--seed",
        &seed,
        "train",
        "--in",
        s(&e.train_dir),
        "--out",
        s(&e.ckpt_dir),
        "--plan",
        s(&e.plan),
        "--val",
        s(&e.test_dir),
        "--hidden",
        "8",
        "--epochs",
        "2",
    ]);
    let best = e.ckpt_dir.join("best.ckpt");
    ok(&[
        "--seed",
        &seed,
        "generate",
        "--in",
        s(&e.test_dir.join("test0.proll")),
        "--out",
        s(&e.generated),
        "--checkpoint",
        s(&best),
        "--template",
        s(&e.test_dir.join("test1.ssm")),
    ]);
    ok(&[
        "--seed",
        &seed,
        "evaluate",
        "--in",
        s(&e.test_dir),
        "--out",
        s(&e.eval_csv),
        "--checkpoint",
        s(&best),
    ]);
    e
}

/// Every file under `dir`, relative path and contents, sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}
