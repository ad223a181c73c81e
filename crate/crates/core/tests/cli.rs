mod common;

use common::pipeline::{experiment, ok, run, s, snapshot, write_midi_corpus};

use sing::midi::read_proll;
use sing::structure::read_ssm;

#[test]
fn synth_then_render() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.txt");
    std::fs::write(
        &spec,
        "length = 64\nbackground = 0.1\nblock = 0, 32, 0.9\nblock = 32, 64, 0.5\n",
    )
    .unwrap();
    let ssm = dir.path().join("t.ssm");
    let pgm = dir.path().join("t.pgm");
    ok(&["synth-ssm", "--in", s(&spec), "--out", s(&ssm)]);
    let m = read_ssm(&ssm).unwrap();
    assert_eq!(m.n(), 64);
    for ((i, j), v) in [((0, 31), 0.9), ((40, 50), 0.5), ((0, 40), 0.1), ((5, 5), 1.0)] {
        assert!((m.get(i, j) - v).abs() < 1e-6, "({i}, {j})");
    }
    ok(&["render-ssm", "--in", s(&ssm), "--out", s(&pgm)]);
    let image = std::fs::read(&pgm).unwrap();
    let header = b"P5\n64 64\n255\n";
    assert!(image.starts_with(header));
    assert_eq!(image.len(), header.len() + 64 * 64);
}

#[test]
fn preprocess_writes_a_roll_and_template_per_piece() {
    let dir = tempfile::tempdir().unwrap();
    write_midi_corpus(&dir.path().join("midi"), "piece", 3, 1);
    std::fs::write(dir.path().join("midi/broken.mid"), b"MThd\0\0\0\x06garbage").unwrap();
    let out = dir.path().join("rolls");
    ok(&["preprocess", "--in", s(&dir.path().join("midi")), "--out", s(&out)]);
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "piece0.proll",
            "piece0.ssm",
            "piece1.proll",
            "piece1.ssm",
            "piece2.proll",
            "piece2.ssm"
        ]
    );
    let roll = read_proll(&out.join("piece1.proll")).unwrap();
    assert_eq!(roll.source_id(), "piece1");
    assert_eq!(read_ssm(&out.join("piece1.ssm")).unwrap().n(), roll.n_samples());
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["no-such-verb"]).status.code(), Some(2));
    assert_eq!(run(&["train", "--in", "x"]).status.code(), Some(2));
    assert_eq!(
        run(&["synth-ssm", "--in", "/nonexistent/spec", "--out", "/tmp/x.ssm"])
            .status
            .code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "hidden_size = many\n").unwrap();
    let out = run(&["--config", s(&bad), "render-ssm", "--in", "a", "--out", "b"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hidden_size"));
}

#[test]
fn help_lists_verbs_and_defaults() {
    let top = ok(&["--help"]);
    for verb in [
        "preprocess",
        "batch-plan",
        "train",
        "generate",
        "evaluate",
        "render-ssm",
        "synth-ssm",
    ] {
        assert!(top.contains(verb), "{verb}");
    }
    let train = ok(&["train", "--help"]);
    for default in [
        "[default: 128]",
        "[default: 0.001]",
        "[default: 30]",
        "[default: 0.8]",
        "[default: dense]",
    ] {
        assert!(train.contains(default), "{default}");
    }
}

#[test]
fn pipeline_runs_and_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let e = experiment(a.path(), 5);
    experiment(b.path(), 5);
    let plan = std::fs::read_to_string(&e.plan).unwrap();
    assert!(plan.lines().any(|l| l.starts_with("batch")), "{plan}");
    let generated = read_proll(&e.generated).unwrap();
    assert_eq!(
        generated.n_samples(),
        read_ssm(&e.test_dir.join("test1.ssm")).unwrap().n()
    );
    assert!(e.generated.with_extension("mid").exists());
    let csv = std::fs::read_to_string(&e.eval_csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 + 1);
    assert!(csv
        .lines()
        .last()
        .unwrap()
        .starts_with("# generator=sing pieces=2 generations=6 skipped=0"));
    // config.txt records the output path and report.csv the timings.
    let volatile = |p: &std::path::Path| ["config.txt", "report.csv"].iter().any(|f| p.ends_with(f));
    let mut differing = Vec::new();
    for name in ["ckpt", "train", "test"] {
        let (x, y) = (snapshot(&a.path().join(name)), snapshot(&b.path().join(name)));
        assert_eq!(x.len(), y.len(), "{name}");
        for ((p, u), (_, v)) in x.iter().zip(&y) {
            if !volatile(p) && u != v {
                differing.push(format!("{name}/{}", p.display()));
            }
        }
    }
    for name in ["gen.proll", "gen.mid", "eval.csv", "plan.txt"] {
        if std::fs::read(a.path().join(name)).unwrap() != std::fs::read(b.path().join(name)).unwrap() {
            differing.push(name.to_string());
        }
    }
    assert!(differing.is_empty(), "{differing:?}");
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let e = experiment(dir.path(), 3);
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "hidden_size = 6\nepochs = 1\nlr = 0.01\n").unwrap();
    let out = dir.path().join("ckpt2");
    ok(&[
        "--config",
        s(&cfg),
        "train",
        "--in",
        s(&e.train_dir),
        "--out",
        s(&out),
        "--epochs",
        "2",
        "--grid-k",
        "2",
        "--grid-count",
        "2",
    ]);
    let written = std::fs::read_to_string(out.join("config.txt")).unwrap();
    for line in ["hidden_size = 6", "epochs = 2", "lr = 0.01", "p_feedback = 0.8"] {
        assert!(written.lines().any(|l| l == line), "{line} in\n{written}");
    }
}

#[test]
fn random_evaluation_needs_no_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    write_midi_corpus(&dir.path().join("midi"), "t", 2, 4);
    let rolls = dir.path().join("rolls");
    ok(&["preprocess", "--in", s(&dir.path().join("midi")), "--out", s(&rolls)]);
    let csv = dir.path().join("r.csv");
    ok(&["evaluate", "--in", s(&rolls), "--out", s(&csv), "--generations", "2"]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("# generator=random pieces=2 generations=4"), "{text}");
    let out = run(&["evaluate", "--in", s(&rolls), "--out", s(&csv), "--generator", "sing"]);
    assert_eq!(out.status.code(), Some(1));
}
