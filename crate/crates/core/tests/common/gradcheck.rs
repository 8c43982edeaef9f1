//! Finite-difference gradient oracle, independent of the backward pass
//! it checks. Losses are recomputed from scratch through the public
//! forward API for every +-h probe.

use colosim::models::{Activation, MlpGrads, MlpParams, ACTION_COUNT};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;
/// Instances whose hidden pre-activations sit closer to the ReLU kink
/// than this are resampled; a +-h probe across the kink would make the
/// central difference meaningless.
const KINK_GUARD: f64 = 1e-4;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Iterates every parameter of a network, calling `loss` after each
/// +-h perturbation, and returns the worst relative error against the
/// analytic gradients.
fn sweep_params<F: FnMut(&MlpParams) -> f64>(
    params: &MlpParams,
    analytic: &MlpGrads,
    mut loss: F,
) -> f64 {
    let mut p = params.clone();
    let mut worst: f64 = 0.0;
    for l in 0..p.weights.len() {
        for i in 0..p.weights[l].len() {
            let orig = p.weights[l][i];
            p.weights[l][i] = orig + H;
            let up = loss(&p);
            p.weights[l][i] = orig - H;
            let down = loss(&p);
            p.weights[l][i] = orig;
            worst = worst.max(rel_err(analytic.weights[l][i], (up - down) / (2.0 * H)));
        }
        for i in 0..p.biases[l].len() {
            let orig = p.biases[l][i];
            p.biases[l][i] = orig + H;
            let up = loss(&p);
            p.biases[l][i] = orig - H;
            let down = loss(&p);
            p.biases[l][i] = orig;
            worst = worst.max(rel_err(analytic.biases[l][i], (up - down) / (2.0 * H)));
        }
    }
    worst
}

/// MSE training loss: mean over batch of mean over output dims of
/// squared error.
pub fn check_mse_loss(seed: u64) -> f64 {
    let (in_dim, out_dim, batch) = (5, 3, 3);
    for attempt in 0..32 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed * 131 + attempt);
        let net = MlpParams::new(in_dim, out_dim, Activation::Linear, 0.0, &mut rng);
        let xs: Vec<Vec<f64>> = (0..batch).map(|_| rand_vec(&mut rng, in_dim)).collect();
        let ts: Vec<Vec<f64>> = (0..batch).map(|_| rand_vec(&mut rng, out_dim)).collect();

        let kink_adjacent = xs.iter().any(|x| {
            net.forward_cached(x, None).unwrap().min_hidden_preactivation() < KINK_GUARD
        });
        if kink_adjacent {
            continue;
        }

        let loss = |p: &MlpParams| -> f64 {
            let mut acc = 0.0;
            for (x, t) in xs.iter().zip(&ts) {
                let y = p.forward(x).unwrap();
                for d in 0..out_dim {
                    acc += (y[d] - t[d]).powi(2) / (out_dim * batch) as f64;
                }
            }
            acc
        };

        let mut grads = MlpGrads::zeros_like(&net);
        for (x, t) in xs.iter().zip(&ts) {
            let pass = net.forward_cached(x, None).unwrap();
            let y = pass.output();
            let d_out: Vec<f64> = (0..out_dim)
                .map(|d| 2.0 * (y[d] - t[d]) / (out_dim * batch) as f64)
                .collect();
            net.backward(&pass, &d_out, &mut grads);
        }
        return sweep_params(&net, &grads, loss);
    }
    panic!("no kink-free instance found for seed {seed}");
}

/// Critic MSE loss against fixed targets y.
pub fn check_critic_loss(seed: u64) -> f64 {
    let (state_dim, batch) = (8, 3);
    let in_dim = state_dim + ACTION_COUNT;
    for attempt in 0..32 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed * 733 + attempt + 1);
        let critic = MlpParams::new(in_dim, 1, Activation::Linear, 0.0, &mut rng);
        let xs: Vec<Vec<f64>> = (0..batch).map(|_| rand_vec(&mut rng, in_dim)).collect();
        let ys: Vec<f64> = (0..batch).map(|_| rng.gen_range(-1.0..1.0)).collect();

        if xs.iter().any(|x| {
            critic
                .forward_cached(x, None)
                .unwrap()
                .min_hidden_preactivation()
                < KINK_GUARD
        }) {
            continue;
        }

        let loss = |p: &MlpParams| -> f64 {
            xs.iter()
                .zip(&ys)
                .map(|(x, y)| (p.forward(x).unwrap()[0] - y).powi(2) / batch as f64)
                .sum()
        };

        let mut grads = MlpGrads::zeros_like(&critic);
        for (x, y) in xs.iter().zip(&ys) {
            let pass = critic.forward_cached(x, None).unwrap();
            let q = pass.output()[0];
            critic.backward(&pass, &[2.0 * (q - y) / batch as f64], &mut grads);
        }
        return sweep_params(&critic, &grads, loss);
    }
    panic!("no kink-free instance found for seed {seed}");
}

/// Actor loss: -(1/B) sum Q(s, pi(s)), differentiated through the
/// softmax policy into the frozen critic.
pub fn check_actor_loss(seed: u64) -> f64 {
    let (state_dim, batch) = (8, 3);
    for attempt in 0..32 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed * 389 + attempt + 7);
        let actor = MlpParams::new(state_dim, ACTION_COUNT, Activation::Softmax, 0.0, &mut rng);
        let critic = MlpParams::new(
            state_dim + ACTION_COUNT,
            1,
            Activation::Linear,
            0.0,
            &mut rng,
        );
        let states: Vec<Vec<f64>> = (0..batch).map(|_| rand_vec(&mut rng, state_dim)).collect();

        let kink_adjacent = states.iter().any(|s| {
            let apass = actor.forward_cached(s, None).unwrap();
            if apass.min_hidden_preactivation() < KINK_GUARD {
                return true;
            }
            let mut joint = s.clone();
            joint.extend_from_slice(apass.output());
            critic
                .forward_cached(&joint, None)
                .unwrap()
                .min_hidden_preactivation()
                < KINK_GUARD
        });
        if kink_adjacent {
            continue;
        }

        let loss = |p: &MlpParams| -> f64 {
            let mut acc = 0.0;
            for s in &states {
                let a = p.forward(s).unwrap();
                let mut joint = s.clone();
                joint.extend_from_slice(&a);
                acc -= critic.forward(&joint).unwrap()[0] / batch as f64;
            }
            acc
        };

        let mut grads = MlpGrads::zeros_like(&actor);
        let mut scratch = MlpGrads::zeros_like(&critic);
        for s in &states {
            let apass = actor.forward_cached(s, None).unwrap();
            let mut joint = s.clone();
            joint.extend_from_slice(apass.output());
            let cpass = critic.forward_cached(&joint, None).unwrap();
            let d_input = critic.backward(&cpass, &[-1.0 / batch as f64], &mut scratch);
            actor.backward(&apass, &d_input[state_dim..], &mut grads);
        }
        return sweep_params(&actor, &grads, loss);
    }
    panic!("no kink-free instance found for seed {seed}");
}
