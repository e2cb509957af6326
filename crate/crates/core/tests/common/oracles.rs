//! Loss examples and finite-difference gradient checks.

use candle_core::{DType, Device, Tensor, Var};
use emoaug_core::losses::{
    combine_losses, discriminator_loss, gan_losses, generator_loss, l1_distance, l1_distance_batch, triplet_loss,
    triplet_loss_batch, var_loss, var_loss_batch, dot_var_loss, LossComponents, LossWeights, VarianceMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-6;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6
}

/// Every worked example for the loss functions, as (name, held).
pub fn loss_examples() -> Vec<(&'static str, bool)> {
    let ln2 = 2f64.ln();
    let x = [0.3, -1.2, 4.0];
    let (a, b) = ([1.5, -0.25, 2.0], [0.5, 3.0, -1.0]);
    let (d_half, g_half) = gan_losses(&[0.5], &[0.5]).unwrap();
    let (d_limit, _) = gan_losses(&[1.0 - 1e-9], &[1e-9]).unwrap();
    let r = [1.0, -2.0, 0.5];
    let neg: Vec<f64> = r.iter().map(|v| -v).collect();
    let c = LossComponents { gan_g: 1.0, rep: 2.0, emo: 3.0, var: 4.0, bal: 5.0 };
    let doubled = LossComponents { gan_g: 2.0, rep: 4.0, emo: 6.0, var: 8.0, bal: 10.0 };
    let zero_w = LossWeights { w_g: 0.0, w_r: 0.0, w_e: 0.0, w_v: 0.0, w_b: 0.0, beta: 7.0 };
    let w = LossWeights::default();
    let (m1, t1) = combine_losses(&c, &w).unwrap();
    let (m2, t2) = combine_losses(&doubled, &w).unwrap();
    vec![
        ("dist(x, x) = 0", close(l1_distance(&x, &x).unwrap(), 0.0)),
        ("dist([1,2],[0,0]) = 3", close(l1_distance(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 3.0)),
        ("dist symmetric", close(l1_distance(&a, &b).unwrap(), l1_distance(&b, &a).unwrap())),
        ("dist dim mismatch errors", l1_distance(&[1.0], &[1.0, 2.0]).is_err()),
        ("triplet 5/3/7 = 9", close(triplet_loss(&[0.0], &[5.0], &[3.0], 7.0).unwrap(), 9.0)),
        ("triplet 0/10/7 = 0", close(triplet_loss(&[0.0], &[0.0], &[10.0], 7.0).unwrap(), 0.0)),
        ("triplet boundary 2/9/7 = 0", close(triplet_loss(&[0.0], &[2.0], &[9.0], 7.0).unwrap(), 0.0)),
        ("d_loss(0.5, 0.5) = 2 ln 2", close(d_half, 2.0 * ln2)),
        ("g_loss(0.5) = ln 2", close(g_half, ln2)),
        ("d_loss limit -> 0", d_limit < 1e-6),
        ("gan score 1.0 errors", gan_losses(&[1.0], &[0.5]).is_err()),
        ("var(r, r) = 1", close(var_loss(&r, &r).unwrap(), 1.0)),
        ("var orthogonal = 0", close(var_loss(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0)),
        ("var(r, -r) = -1", close(var_loss(&r, &neg).unwrap(), -1.0)),
        ("var zero vector errors", var_loss(&[0.0, 0.0], &[1.0, 0.0]).is_err()),
        ("combine (1..5) = (33, 77)", close(m1, 33.0) && close(t1, 77.0)),
        ("combine zero weights = (0, 0)", combine_losses(&c, &zero_w).unwrap() == (0.0, 0.0)),
        ("combine doubles linearly", close(m2, 2.0 * m1) && close(t2, 2.0 * t1)),
        (
            "combine non-finite errors",
            combine_losses(&LossComponents { emo: f64::INFINITY, ..c }, &w).is_err(),
        ),
    ]
}

fn var_of(v: &[f64], rows: usize) -> Var {
    Var::from_slice(v, (rows, v.len() / rows), &Device::Cpu).unwrap()
}

/// Gradient of `f` at `inputs` through the tensor implementation.
fn analytic(inputs: &[Vec<f64>], rows: usize, f: &dyn Fn(&[Tensor]) -> Tensor) -> Vec<Vec<f64>> {
    let vars: Vec<Var> = inputs.iter().map(|v| var_of(v, rows)).collect();
    let tensors: Vec<Tensor> = vars.iter().map(|v| v.as_tensor().clone()).collect();
    let out = f(&tensors);
    assert_eq!(out.dtype(), DType::F64);
    let grads = out.backward().unwrap();
    vars.iter()
        .map(|v| match grads.get(v) {
            Some(g) => g.flatten_all().unwrap().to_vec1::<f64>().unwrap(),
            None => vec![0.0; v.elem_count()],
        })
        .collect()
}

/// Central differences of the scalar reference.
fn numeric(inputs: &[Vec<f64>], f: &dyn Fn(&[Vec<f64>]) -> f64) -> Vec<Vec<f64>> {
    let mut x = inputs.to_vec();
    let mut out = Vec::new();
    for i in 0..x.len() {
        let mut g = Vec::with_capacity(x[i].len());
        for j in 0..x[i].len() {
            let orig = x[i][j];
            x[i][j] = orig + FD_STEP;
            let up = f(&x);
            x[i][j] = orig - FD_STEP;
            let down = f(&x);
            x[i][j] = orig;
            g.push((up - down) / (2.0 * FD_STEP));
        }
        out.push(g);
    }
    out
}

/// ‖g_a − g_n‖₂ / max(‖g_a‖₂, ‖g_n‖₂), zero when both vanish.
fn relative_error(a: &[Vec<f64>], n: &[Vec<f64>]) -> f64 {
    let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
    for (ga, gn) in a.iter().zip(n) {
        for (x, y) in ga.iter().zip(gn) {
            diff += (x - y).powi(2);
            na += x * x;
            nn += y * y;
        }
    }
    let scale = na.sqrt().max(nn.sqrt());
    if scale < 1e-12 {
        0.0
    } else {
        diff.sqrt() / scale
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn rows_of(v: &[f64], rows: usize) -> Vec<&[f64]> {
    v.chunks(v.len() / rows).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Distinct coordinates stay clear of the |·| kink.
fn away_from_kinks(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() > 1e-3)
}

/// Worst relative gradient error of each loss over `trials` random inputs.
pub fn gradient_errors(trials: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, d) = (3, 6);
    let mut worst = vec![
        ("l1_distance", 0f64),
        ("triplet", 0f64),
        ("gan_discriminator", 0f64),
        ("gan_generator", 0f64),
        ("var_cosine", 0f64),
        ("var_dot", 0f64),
        ("combine", 0f64),
    ];
    let mut done = 0;
    while done < trials {
        let a = uniform(&mut rng, rows * d, 2.0);
        let p = uniform(&mut rng, rows * d, 2.0);
        let n = uniform(&mut rng, rows * d, 2.0);
        let beta = rng.random_range(0.5..6.0);
        let hinge_clear = rows_of(&a, rows).iter().zip(rows_of(&p, rows)).zip(rows_of(&n, rows)).all(|((a, p), n)| {
            let m = l1_distance(a, p).unwrap() - l1_distance(a, n).unwrap() + beta;
            m.abs() > 1e-3
        });
        if !(away_from_kinks(&a, &p) && away_from_kinks(&a, &n) && hinge_clear) {
            continue;
        }
        done += 1;
        let inputs = vec![a.clone(), p.clone(), n.clone()];
        let mean_rows = |x: &[Vec<f64>], f: &dyn Fn(&[&[f64]]) -> f64| {
            let r: Vec<Vec<&[f64]>> = x.iter().map(|v| rows_of(v, rows)).collect();
            (0..rows).map(|i| f(&r.iter().map(|v| v[i]).collect::<Vec<_>>())).sum::<f64>() / rows as f64
        };
        let errs = [
            relative_error(
                &analytic(&inputs[..2], rows, &|t| l1_distance_batch(&t[0], &t[1]).unwrap().sum_all().unwrap()),
                &numeric(&inputs[..2], &|x| {
                    rows_of(&x[0], rows).iter().zip(rows_of(&x[1], rows)).map(|(a, b)| l1_distance(a, b).unwrap()).sum()
                }),
            ),
            relative_error(
                &analytic(&inputs, rows, &|t| triplet_loss_batch(&t[0], &t[1], &t[2], beta).unwrap()),
                &numeric(&inputs, &|x| mean_rows(x, &|r| triplet_loss(r[0], r[1], r[2], beta).unwrap())),
            ),
            {
                let logits = vec![uniform(&mut rng, rows, 4.0), uniform(&mut rng, rows, 4.0)];
                relative_error(
                    &analytic(&logits, rows, &|t| discriminator_loss(&t[0], &t[1]).unwrap()),
                    &numeric(&logits, &|x| {
                        let s: Vec<Vec<f64>> = x.iter().map(|v| v.iter().map(|&l| sigmoid(l)).collect()).collect();
                        gan_losses(&s[0], &s[1]).unwrap().0
                    }),
                )
            },
            {
                let logits = vec![uniform(&mut rng, rows, 4.0)];
                relative_error(
                    &analytic(&logits, rows, &|t| generator_loss(&t[0]).unwrap()),
                    &numeric(&logits, &|x| {
                        let s: Vec<f64> = x[0].iter().map(|&l| sigmoid(l)).collect();
                        gan_losses(&[0.5], &s).unwrap().1
                    }),
                )
            },
            relative_error(
                &analytic(&inputs[..2], rows, &|t| var_loss_batch(&t[0], &t[1], VarianceMode::Cosine).unwrap()),
                &numeric(&inputs[..2], &|x| mean_rows(x, &|r| var_loss(r[0], r[1]).unwrap())),
            ),
            relative_error(
                &analytic(&inputs[..2], rows, &|t| var_loss_batch(&t[0], &t[1], VarianceMode::Dot).unwrap()),
                &numeric(&inputs[..2], &|x| mean_rows(x, &|r| dot_var_loss(r[0], r[1]).unwrap())),
            ),
            {
                let w = LossWeights {
                    w_g: rng.random_range(0.0..5.0),
                    w_r: rng.random_range(0.0..5.0),
                    w_e: rng.random_range(0.0..20.0),
                    w_v: rng.random_range(0.0..5.0),
                    w_b: rng.random_range(0.0..10.0),
                    beta,
                };
                let comps = vec![uniform(&mut rng, 5, 3.0)];
                let total = |c: &[f64]| {
                    combine_losses(&LossComponents { gan_g: c[0], rep: c[1], emo: c[2], var: c[3], bal: c[4] }, &w)
                        .unwrap()
                        .1
                };
                let exact = vec![vec![w.w_g, w.w_r, w.w_e, w.w_v, w.w_b]];
                relative_error(&exact, &numeric(&comps, &|x| total(&x[0])))
            },
        ];
        for (slot, e) in worst.iter_mut().zip(errs) {
            slot.1 = slot.1.max(e);
        }
    }
    worst
}
