//! Seeded trajectory simulation. Every sampler takes an explicit seed and is
//! deterministic given it; parallel aggregation derives one independent
//! stream per sample index so results do not depend on the worker count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{Distribution, MarkovChain, Mode};
use crate::error::{Error, Result};
use crate::stopping::StoppingRule;

/// One simulated trajectory up to a horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSample {
    pub seed: u64,
    /// Jump times (continuous) or step indices (discrete); starts at 0.
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    pub horizon: f64,
}

/// splitmix64 step; used to derive per-sample seeds from a base seed so
/// sample i is the same stream regardless of which worker runs it.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn categorical(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>) -> usize {
    let w: Vec<f64> = weights.collect();
    let total: f64 = w.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &wi) in w.iter().enumerate() {
        u -= wi;
        if u <= 0.0 {
            return i;
        }
    }
    w.len() - 1
}

fn sample_start(rng: &mut ChaCha8Rng, mu0: &Distribution) -> usize {
    categorical(rng, (0..mu0.len()).map(|i| mu0.get(i)))
}

fn next_state(rng: &mut ChaCha8Rng, chain: &MarkovChain, x: usize) -> usize {
    let m = chain.matrix();
    let n = chain.n();
    match chain.mode() {
        Mode::Continuous => {
            let j = categorical(
                rng,
                (0..n).map(|y| if y == x { 0.0 } else { m[(x, y)].max(0.0) }),
            );
            j
        }
        Mode::Discrete => categorical(rng, (0..n).map(|y| m[(x, y)].max(0.0))),
    }
}

/// Simulate one trajectory from `x0` up to `horizon`. Continuous mode uses
/// exponential holding times at rate |q(x,x)|; discrete mode takes
/// `horizon` categorical steps.
pub fn sample_path(chain: &MarkovChain, x0: usize, horizon: f64, seed: u64) -> Result<PathSample> {
    if horizon <= 0.0 {
        return Err(Error::BadHorizon);
    }
    if x0 >= chain.n() {
        return Err(Error::BadState {
            index: x0,
            n: chain.n(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = vec![0.0];
    let mut states = vec![x0];
    match chain.mode() {
        Mode::Continuous => {
            let m = chain.matrix();
            let mut t = 0.0;
            let mut x = x0;
            loop {
                let rate = -m[(x, x)];
                debug_assert!(rate > 0.0, "irreducible chains have no absorbing state");
                let hold = -rng.gen::<f64>().ln() / rate;
                t += hold;
                if t > horizon {
                    break;
                }
                x = next_state(&mut rng, chain, x);
                times.push(t);
                states.push(x);
            }
        }
        Mode::Discrete => {
            let steps = horizon.floor() as u64;
            let mut x = x0;
            for k in 1..=steps {
                x = next_state(&mut rng, chain, x);
                times.push(k as f64);
                states.push(x);
            }
        }
    }
    Ok(PathSample {
        seed,
        times,
        states,
        horizon,
    })
}

/// Draw the nested-set index independently of the path, then run the chain
/// from mu0 until it enters the drawn set. Returns (T, X_T).
pub fn sample_rule_stop(chain: &MarkovChain, rule: &StoppingRule, seed: u64) -> Result<(f64, usize)> {
    let (t, x, _) = sample_rule_stop_with_halting(chain, rule, seed)?;
    Ok((t, x))
}

/// Same draw, additionally reporting the first-visit time of the halting
/// state a_n on the same trajectory.
pub(crate) fn sample_rule_stop_with_halting(
    chain: &MarkovChain,
    rule: &StoppingRule,
    seed: u64,
) -> Result<(f64, usize, f64)> {
    rule.check_chain(chain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = categorical(&mut rng, rule.probs.iter().copied());
    let set = rule.set(idx);
    let mut in_set = vec![false; chain.n()];
    for &s in &set {
        in_set[s] = true;
    }
    let halting = rule.halting_state();

    let mut x = sample_start(&mut rng, &rule.mu0);
    let mut t = 0.0;
    let mut stop: Option<(f64, usize)> = None;
    let mut halt_time: Option<f64> = None;
    let m = chain.matrix();
    loop {
        if in_set[x] && stop.is_none() {
            stop = Some((t, x));
        }
        if x == halting && halt_time.is_none() {
            halt_time = Some(t);
        }
        if let (Some((ts, xs)), Some(th)) = (stop, halt_time) {
            return Ok((ts, xs, th));
        }
        match chain.mode() {
            Mode::Continuous => {
                let rate = -m[(x, x)];
                t += -rng.gen::<f64>().ln() / rate;
            }
            Mode::Discrete => t += 1.0,
        }
        x = next_state(&mut rng, chain, x);
    }
}

/// Aggregated simulation output for the stopping rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleSimReport {
    pub samples: usize,
    pub seed: u64,
    pub mean_stop_time: f64,
    /// Standard error of the mean stopping time.
    pub se_stop_time: f64,
    /// Empirical law of X_T.
    pub stop_state_frequencies: Vec<f64>,
    pub stop_state_counts: Vec<u64>,
}

/// Run `samples` independent rule draws. The per-sample seed depends only on
/// (seed, index), and aggregation is done in index order, so the report is
/// identical for any rayon worker count.
pub fn simulate_rule(
    chain: &MarkovChain,
    rule: &StoppingRule,
    samples: usize,
    seed: u64,
) -> Result<RuleSimReport> {
    rule.check_chain(chain)?;
    let draws: Vec<(f64, usize)> = (0..samples)
        .into_par_iter()
        .map(|i| sample_rule_stop(chain, rule, derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let n = chain.n();
    let mut counts = vec![0u64; n];
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for &(t, x) in &draws {
        counts[x] += 1;
        sum += t;
        sumsq += t * t;
    }
    let mean = sum / samples as f64;
    let var = (sumsq / samples as f64 - mean * mean).max(0.0);
    let se = (var / samples as f64).sqrt();
    Ok(RuleSimReport {
        samples,
        seed,
        mean_stop_time: mean,
        se_stop_time: se,
        stop_state_frequencies: counts.iter().map(|&c| c as f64 / samples as f64).collect(),
        stop_state_counts: counts,
    })
}

/// Empirical mean hitting time of `set` from `x0` over `samples` paths.
pub fn simulate_hitting_mean(
    chain: &MarkovChain,
    x0: usize,
    set: &[usize],
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut in_set = vec![false; chain.n()];
    for &s in set {
        if s >= chain.n() {
            return Err(Error::BadState {
                index: s,
                n: chain.n(),
            });
        }
        in_set[s] = true;
    }
    if set.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    let m = chain.matrix();
    let times: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let mut x = x0;
            let mut t = 0.0;
            while !in_set[x] {
                match chain.mode() {
                    Mode::Continuous => {
                        let rate = -m[(x, x)];
                        t += -rng.gen::<f64>().ln() / rate;
                    }
                    Mode::Discrete => t += 1.0,
                }
                x = next_state(&mut rng, chain, x);
            }
            t
        })
        .collect();
    let mean = times.iter().sum::<f64>() / samples as f64;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / samples as f64;
    Ok((mean, (var / samples as f64).sqrt()))
}
