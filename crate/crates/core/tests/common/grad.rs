//! Central finite differences against the hand-written backward passes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sing::corpus::Piece;
use sing::midi::N_PITCHES;
use sing::model::{CombinerRegistry, ModelConfig, SingModel};
use sing::nn::{
    bce_with_logits, dense_backward, dense_forward, lstm_backward, lstm_cell, LstmGrads, LstmStep, LstmWeights,
    ParamSet, Tensor2,
};
use sing::structure::{SelfSimilarityMatrix, SquareMatrix, SsmRole};
use sing::training::{piece_loss, scheduled_forward};

pub const STEP: f64 = 1e-5;

/// Entry-wise `|a - n| / max(|a|, |n|, floor)`, maximised.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Central differences of `f` around `x`.
pub fn numeric_grad(x: &mut [f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + STEP;
            let up = f(x);
            x[i] = orig - STEP;
            let down = f(x);
            x[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn randn(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor2 {
    Tensor2::from_vec(rows, cols, randn(rng, rows * cols, scale)).unwrap()
}

pub fn dense_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (5, 7);
    let w = tensor(&mut rng, rows, cols, 1.0);
    let b = randn(&mut rng, rows, 1.0);
    let x = randn(&mut rng, cols, 1.0);
    let r = randn(&mut rng, rows, 1.0);
    let loss = |w: &Tensor2, b: &[f64], x: &[f64]| -> f64 {
        dense_forward(w, b, x).unwrap().iter().zip(&r).map(|(y, r)| y * r).sum()
    };
    let g = dense_backward(&w, &x, &r).unwrap();
    let mut wd = w.data().to_vec();
    let nw = numeric_grad(&mut wd, |d| {
        loss(&Tensor2::from_vec(rows, cols, d.to_vec()).unwrap(), &b, &x)
    });
    let mut bd = b.clone();
    let nb = numeric_grad(&mut bd, |d| loss(&w, d, &x));
    let mut xd = x.clone();
    let nx = numeric_grad(&mut xd, |d| loss(&w, &b, d));
    [
        max_rel_err(g.dw.data(), &nw, 1e-6),
        max_rel_err(&g.db, &nb, 1e-6),
        max_rel_err(&g.dx, &nx, 1e-6),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// LSTM unrolled over five steps, loss a fixed projection of every hidden
/// state.
pub fn lstm_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, input, len) = (4, 6, 5);
    let w_ih = tensor(&mut rng, 4 * h, input, 0.8);
    let w_hh = tensor(&mut rng, 4 * h, h, 0.8);
    let bias = randn(&mut rng, 4 * h, 0.5);
    let xs: Vec<Vec<f64>> = (0..len).map(|_| randn(&mut rng, input, 1.0)).collect();
    let rs: Vec<Vec<f64>> = (0..len).map(|_| randn(&mut rng, h, 1.0)).collect();

    let run = |w_ih: &Tensor2, w_hh: &Tensor2, bias: &[f64], xs: &[Vec<f64>]| -> (f64, Vec<LstmStep>) {
        let w = LstmWeights { w_ih, w_hh, bias };
        let (mut hp, mut cp) = (vec![0.0; h], vec![0.0; h]);
        let mut steps = Vec::new();
        let mut loss = 0.0;
        for (x, r) in xs.iter().zip(&rs) {
            let s = lstm_cell(w, x, &hp, &cp).unwrap();
            loss += s.h.iter().zip(r).map(|(a, b)| a * b).sum::<f64>();
            hp = s.h.clone();
            cp = s.c.clone();
            steps.push(s);
        }
        (loss, steps)
    };

    let (_, steps) = run(&w_ih, &w_hh, &bias, &xs);
    let mut g_ih = Tensor2::zeros(4 * h, input);
    let mut g_hh = Tensor2::zeros(4 * h, h);
    let mut g_b = vec![0.0; 4 * h];
    let mut dx = Vec::new();
    lstm_backward(
        LstmWeights {
            w_ih: &w_ih,
            w_hh: &w_hh,
            bias: &bias,
        },
        &steps,
        &rs,
        LstmGrads {
            w_ih: &mut g_ih,
            w_hh: &mut g_hh,
            bias: &mut g_b,
        },
        Some(&mut dx),
    )
    .unwrap();

    let shape = |d: &[f64], cols: usize| Tensor2::from_vec(4 * h, cols, d.to_vec()).unwrap();
    let mut d = w_ih.data().to_vec();
    let n_ih = numeric_grad(&mut d, |d| run(&shape(d, input), &w_hh, &bias, &xs).0);
    let mut d = w_hh.data().to_vec();
    let n_hh = numeric_grad(&mut d, |d| run(&w_ih, &shape(d, h), &bias, &xs).0);
    let mut d = bias.clone();
    let n_b = numeric_grad(&mut d, |d| run(&w_ih, &w_hh, d, &xs).0);
    let mut flat: Vec<f64> = xs.concat();
    let n_x = numeric_grad(&mut flat, |d| {
        let xs: Vec<Vec<f64>> = d.chunks(input).map(<[f64]>::to_vec).collect();
        run(&w_ih, &w_hh, &bias, &xs).0
    });
    [
        max_rel_err(g_ih.data(), &n_ih, 1e-6),
        max_rel_err(g_hh.data(), &n_hh, 1e-6),
        max_rel_err(&g_b, &n_b, 1e-6),
        max_rel_err(&dx.concat(), &n_x, 1e-6),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Gradient of every parameter of `params` for `loss`, by central
/// differences.
pub fn numeric_param_grads(params: &mut ParamSet, mut loss: impl FnMut(&ParamSet) -> f64) -> Vec<Vec<f64>> {
    let ids: Vec<_> = params.ids().collect();
    let mut out = Vec::new();
    for id in ids {
        let len = params.value(id).len();
        let mut g = Vec::with_capacity(len);
        for k in 0..len {
            let orig = params.value(id).data()[k];
            params.value_mut(id).data_mut()[k] = orig + STEP;
            let up = loss(params);
            params.value_mut(id).data_mut()[k] = orig - STEP;
            let down = loss(params);
            params.value_mut(id).data_mut()[k] = orig;
            g.push((up - down) / (2.0 * STEP));
        }
        out.push(g);
    }
    out
}

fn analytic_param_grads(params: &ParamSet) -> Vec<Vec<f64>> {
    params.iter().map(|p| p.grad.data().to_vec()).collect()
}

fn compare_sets(analytic: &[Vec<f64>], numeric: &[Vec<f64>], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| max_rel_err(a, n, floor))
        .fold(0.0, f64::max)
}

/// Combiner `name` with hidden size 5: parameter gradients and `∂/∂z`.
pub fn combiner_error(name: &str, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 5;
    let mut params = ParamSet::new();
    let combiner = (CombinerRegistry::builtin().get(name).unwrap().init)(&mut params, h, &mut rng);
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        let v = params.value(id).clone();
        let noisy = randn(&mut rng, v.len(), 0.5);
        params.value_mut(id).data_mut().copy_from_slice(&noisy);
    }
    let a: Vec<f64> = (0..N_PITCHES).map(|_| rng.random_range(0.0..1.0)).collect();
    let z = randn(&mut rng, h, 1.0);
    let r = randn(&mut rng, N_PITCHES, 1.0);
    let loss = |p: &ParamSet, z: &[f64]| -> f64 { combiner.forward(p, &a, z).iter().zip(&r).map(|(d, r)| d * r).sum() };

    let mut dz = vec![0.0; h];
    combiner.backward(&mut params, &a, &z, &r, &mut dz);
    let analytic = analytic_param_grads(&params);
    let numeric = numeric_param_grads(&mut params, |p| loss(p, &z));
    let mut zd = z.clone();
    let nz = numeric_grad(&mut zd, |d| loss(&params, d));
    compare_sets(&analytic, &numeric, 1e-6).max(max_rel_err(&dz, &nz, 1e-6))
}

pub fn bce_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = randn(&mut rng, 40, 6.0);
    let y: Vec<f64> = (0..40).map(|_| f64::from(u8::from(rng.random_bool(0.3)))).collect();
    let (_, g) = bce_with_logits(&x, &y);
    let mut xd = x.clone();
    let n = numeric_grad(&mut xd, |d| bce_with_logits(d, &y).0);
    max_rel_err(&g, &n, 1e-6)
}

/// Model on an 8-sample piece, hidden 4, teacher forced, seed 3.
pub fn tiny_model(combiner: &str, attention: bool, seed: u64) -> (SingModel, Piece) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = ModelConfig {
        hidden_size: 4,
        combiner: combiner.into(),
        seed_len: 3,
        ..ModelConfig::default()
    };
    cfg.attention_enabled = attention;
    let mut model = SingModel::new(cfg, &mut rng).unwrap();
    let ids: Vec<_> = model.params().ids().collect();
    for id in ids {
        let len = model.params().value(id).len();
        let noisy = randn(&mut rng, len, 0.3);
        model.params_mut().value_mut(id).data_mut().copy_from_slice(&noisy);
    }
    let roll = super::sparse_roll(&mut rng, 8, 120.0);
    let n = roll.n_samples();
    let mut template = SquareMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 });
    for i in 0..n {
        for j in 0..i {
            let v = rng.random_range(0.0..1.0);
            template.set(i, j, v);
            template.set(j, i, v);
        }
    }
    let piece = Piece {
        id: "tiny".into(),
        roll,
        template: SelfSimilarityMatrix::new(template, SsmRole::Template),
    };
    (model, piece)
}

fn full_loss(model: &SingModel, piece: &Piece) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let trace = scheduled_forward(model, piece, 0.0, &mut rng).unwrap();
    piece_loss(&trace, &piece.roll, &piece.template).unwrap().total
}

/// Full loss gradient for every parameter of a tiny model.
pub fn piece_loss_error(combiner: &str, attention: bool, seed: u64) -> f64 {
    let (mut model, piece) = tiny_model(combiner, attention, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let trace = scheduled_forward(&model, &piece, 0.0, &mut rng).unwrap();
    let loss = piece_loss(&trace, &piece.roll, &piece.template).unwrap();
    model.params_mut().zero_grads();
    model.backward(&trace, &loss.dlogits).unwrap();
    let analytic = analytic_param_grads(model.params());
    let cfg = model.config().clone();
    let mut params = model.into_params();
    let registry = CombinerRegistry::builtin();
    let numeric = numeric_param_grads(&mut params, |p| {
        let m = SingModel::from_params(cfg.clone(), p.clone(), &registry).unwrap();
        full_loss(&m, &piece)
    });
    compare_sets(&analytic, &numeric, 1e-4)
}

/// Structural MSE gradient with respect to chroma columns, including an
/// all-zero column.
pub fn structural_error(seed: u64) -> f64 {
    use sing::structure::N_CLASSES;
    use sing::training::cosine_mse_grad;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 7;
    let mut cols: Vec<[f64; N_CLASSES]> = (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(0.05..2.0)))
        .collect();
    cols[3] = [0.0; N_CLASSES];
    let target = SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            1.0
        } else {
            ((i * 7 + j * 7) % 10) as f64 / 10.0
        }
    });
    let (_, g) = cosine_mse_grad(&cols, &target).unwrap();
    let mut flat: Vec<f64> = cols.concat();
    let numeric = numeric_grad(&mut flat, |d| {
        let c: Vec<[f64; N_CLASSES]> = d.chunks(N_CLASSES).map(|c| c.try_into().unwrap()).collect();
        cosine_mse_grad(&c, &target).unwrap().0
    });
    let analytic: Vec<f64> = g
        .iter()
        .enumerate()
        .flat_map(|(i, c)| if i == 3 { [0.0; N_CLASSES] } else { *c })
        .collect();
    let numeric: Vec<f64> = numeric
        .chunks(N_CLASSES)
        .enumerate()
        .flat_map(|(i, c)| if i == 3 { vec![0.0; N_CLASSES] } else { c.to_vec() })
        .collect();
    max_rel_err(&analytic, &numeric, 1e-6)
}
