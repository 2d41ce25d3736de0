#![allow(clippy::needless_range_loop)]

//! The full forward pass against a straight-line reimplementation written
//! from the layer equations with scalar loops and `f64::exp`/`tanh`.

use fxcast_core::math::Matrix;
use fxcast_core::model::{init_params, model_forward, ModelParams, ModelSpec, Variant};
use fxcast_core::rng::SplitMix64;

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn oracle(p: &ModelParams, x: &[Vec<f64>]) -> f64 {
    let t_len = x.len();
    let d = p.spec.input_size;
    let mut z: Vec<Vec<f64>> = vec![Vec::new(); t_len];

    if let Some(l) = &p.lstm {
        let h = p.spec.hidden_size;
        let mut hid = vec![0.0; h];
        let mut cell = vec![0.0; h];
        for t in 0..t_len {
            let mut nh = vec![0.0; h];
            let mut nc = vec![0.0; h];
            for r in 0..h {
                let pre = |w: &Matrix, b: &[f64]| {
                    let mut s = b[r];
                    for j in 0..h {
                        s += w.get(r, j) * hid[j];
                    }
                    for j in 0..d {
                        s += w.get(r, h + j) * x[t][j];
                    }
                    s
                };
                let f = sig(pre(&l.w_f, &l.b_f));
                let i = sig(pre(&l.w_i, &l.b_i));
                let g = pre(&l.w_c, &l.b_c).tanh();
                let o = sig(pre(&l.w_o, &l.b_o));
                nc[r] = f * cell[r] + i * g;
                nh[r] = o * nc[r].tanh();
            }
            hid = nh;
            cell = nc;
            z[t].extend_from_slice(&hid);
        }
    }
    if let Some(c) = &p.conv {
        let k = c.kernel_size;
        for t in 0..t_len {
            for f in 0..c.num_filters {
                let mut s = c.bias[f];
                for lag in 0..k {
                    if lag > t {
                        continue;
                    }
                    for ch in 0..d {
                        s += x[t - lag][ch] * c.weight(f, ch, k - 1 - lag);
                    }
                }
                z[t].push(s);
            }
        }
    }

    let scores: Vec<f64> = z
        .iter()
        .map(|zt| p.attention.bias + zt.iter().zip(&p.attention.weights).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let peak = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - peak).exp()).collect();
    let total: f64 = e.iter().sum();
    let m = z[0].len();
    let mut ctx = vec![0.0; m];
    for t in 0..t_len {
        for j in 0..m {
            ctx[j] += e[t] / total * z[t][j];
        }
    }
    p.dense.bias + ctx.iter().zip(&p.dense.weights).map(|(a, b)| a * b).sum::<f64>()
}

fn perturb_biases(p: &mut ModelParams, rng: &mut SplitMix64) {
    let mut jiggle = |v: &mut [f64]| v.iter_mut().for_each(|b| *b = 0.3 * rng.next_signed());
    if let Some(l) = &mut p.lstm {
        jiggle(&mut l.b_f);
        jiggle(&mut l.b_i);
        jiggle(&mut l.b_c);
        jiggle(&mut l.b_o);
    }
    if let Some(c) = &mut p.conv {
        jiggle(&mut c.bias);
    }
    p.attention.bias = 0.2;
    p.dense.bias = -0.1;
}

#[test]
fn forward_matches_straight_line_oracle() {
    for variant in Variant::ALL {
        for seed in 0..10u64 {
            let spec = ModelSpec { variant, input_size: 6, hidden_size: 4, num_filters: 3, kernel_size: 3, lookback: 8 };
            let mut p = init_params(&spec, seed).unwrap();
            let mut rng = SplitMix64::new(seed + 100);
            perturb_biases(&mut p, &mut rng);
            let x: Vec<Vec<f64>> = (0..8).map(|_| (0..6).map(|_| rng.next_signed()).collect()).collect();
            let (y, _) = model_forward(&p, &Matrix::from_rows(&x).unwrap()).unwrap();
            let want = oracle(&p, &x);
            assert!((y - want).abs() < 1e-9, "{variant} seed {seed}: {y} vs {want}");
        }
    }
}
