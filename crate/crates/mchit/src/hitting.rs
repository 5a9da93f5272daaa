//! Exact hitting-time functionals: expected hitting times, survival
//! probabilities, harmonic measures, and the maximized quantities
//! `t_hit_alpha` / `t_hit_product` with enumeration witnesses.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{as_integer_time, Distribution, MarkovChain, Mode};
use crate::error::{Error, Result};
use crate::poisson;

/// Witness-carrying result of a hitting-time maximization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HittingReport {
    pub value: f64,
    pub witness_set: Vec<usize>,
    pub witness_state: usize,
    /// `None` means the unrestricted (product-weighted) functional.
    pub alpha: Option<f64>,
    /// True iff produced by full enumeration.
    pub exact: bool,
}

fn normalize_set(n: usize, set: &[usize]) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    let mut s: Vec<usize> = set.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&bad) = s.iter().find(|&&i| i >= n) {
        return Err(Error::BadState { index: bad, n });
    }
    Ok(s)
}

fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; n];
    for &i in set {
        inside[i] = true;
    }
    (0..n).filter(|&i| !inside[i]).collect()
}

/// Sub-block of the dynamics restricted to `rows` x `cols`.
fn sub_block(chain: &MarkovChain, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    let m = chain.matrix();
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

/// Expected hitting times `h(x) = E_x[H_A]` for every start state. One
/// complement-block solve yields all starts at once.
pub fn expected_hitting(chain: &MarkovChain, set: &[usize]) -> Result<Vec<f64>> {
    let n = chain.n();
    let a = normalize_set(n, set)?;
    let b = complement(n, &a);
    let mut h = vec![0.0; n];
    if b.is_empty() {
        return Ok(h);
    }
    let block = sub_block(chain, &b, &b);
    let k = b.len();
    let sys = match chain.mode() {
        // Q_BB h = -1
        Mode::Continuous => -block,
        // (I - P_BB) h = 1
        Mode::Discrete => DMatrix::identity(k, k) - block,
    };
    let rhs = nalgebra::DVector::from_element(k, 1.0);
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SolverFailure("hitting-time system is singular".into()))?;
    for (i, &x) in b.iter().enumerate() {
        let v = sol[i];
        if v < -1e-9 {
            return Err(Error::SolverFailure(format!(
                "negative expected hitting time {v} at state {x}"
            )));
        }
        h[x] = v.max(0.0);
    }
    Ok(h)
}

/// Survival probabilities `P_x[H_A > t]` for every start state, computed
/// exactly from the substochastic complement-block semigroup.
pub fn hit_survival_all(chain: &MarkovChain, set: &[usize], t: f64) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let n = chain.n();
    let a = normalize_set(n, set)?;
    let b = complement(n, &a);
    let mut out = vec![0.0; n];
    if b.is_empty() {
        return Ok(out);
    }
    let block = sub_block(chain, &b, &b);
    let k = b.len();
    let v = match chain.mode() {
        Mode::Continuous => {
            let lambda = chain.uniformization_rate().expect("continuous chain");
            let mean = lambda * t;
            if mean == 0.0 {
                nalgebra::DVector::from_element(k, 1.0)
            } else {
                // M_BB = I + Q_BB / lambda is entrywise nonnegative and
                // substochastic; e^{Q_BB t} 1 = sum_k pmf(k) M_BB^k 1.
                let m_bb = DMatrix::identity(k, k) + block / lambda;
                let pmf = poisson::pmf_upto(mean, chain.tolerances().poisson_tail);
                let mut vk = nalgebra::DVector::from_element(k, 1.0);
                let mut acc = &vk * pmf[0];
                for &w in &pmf[1..] {
                    vk = &m_bb * vk;
                    if w > 0.0 {
                        acc += &vk * w;
                    }
                }
                acc
            }
        }
        Mode::Discrete => {
            let steps = as_integer_time(t)?;
            let ones = nalgebra::DVector::from_element(k, 1.0);
            if steps == 0 {
                ones
            } else if steps <= 64 {
                let mut vk = ones;
                for _ in 0..steps {
                    vk = &block * vk;
                }
                vk
            } else {
                let pw = crate::chain::matrix_power_raw(&block, steps);
                &pw * ones
            }
        }
    };
    for (i, &x) in b.iter().enumerate() {
        out[x] = v[i].clamp(0.0, 1.0);
    }
    Ok(out)
}

/// `P_{mu0}[H_A > t]`.
pub fn hit_survival(chain: &MarkovChain, mu0: &Distribution, set: &[usize], t: f64) -> Result<f64> {
    if mu0.len() != chain.n() {
        return Err(Error::LengthMismatch(mu0.len(), chain.n()));
    }
    let per_state = hit_survival_all(chain, set, t)?;
    Ok((0..chain.n()).map(|x| mu0.get(x) * per_state[x]).sum())
}

/// Absorption matrix: row x gives the law of the chain's position at the
/// moment it first enters `s`, started from x. Rows sum to 1.
fn absorption_matrix(chain: &MarkovChain, s: &[usize]) -> Result<DMatrix<f64>> {
    let n = chain.n();
    let b = complement(n, s);
    let tol = chain.tolerances();
    let mut full = DMatrix::zeros(n, n);
    for &x in s {
        full[(x, x)] = 1.0;
    }
    if !b.is_empty() {
        let block = sub_block(chain, &b, &b);
        let rates_to_s = sub_block(chain, &b, s);
        let k = b.len();
        let (sys, rhs) = match chain.mode() {
            Mode::Continuous => (-block, rates_to_s),
            Mode::Discrete => (DMatrix::identity(k, k) - block, rates_to_s),
        };
        let lu = sys.lu();
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::SolverFailure("absorption system is singular".into()))?;
        for (i, &x) in b.iter().enumerate() {
            let mut row_sum = 0.0;
            for (j, &a) in s.iter().enumerate() {
                full[(x, a)] = sol[(i, j)];
                row_sum += sol[(i, j)];
            }
            if (row_sum - 1.0).abs() > tol.harmonic_row_sum {
                return Err(Error::SolverFailure(format!(
                    "absorption row for state {x} sums to {row_sum}"
                )));
            }
        }
    }
    Ok(full)
}

/// Harmonic measure on `s` for the chain started from `mu0`:
/// `rho_S(a) = P_{mu0}[X_{H_S} = a]`.
pub fn harmonic_measure(
    chain: &MarkovChain,
    mu0: &Distribution,
    s: &[usize],
) -> Result<Distribution> {
    let n = chain.n();
    if mu0.len() != n {
        return Err(Error::LengthMismatch(mu0.len(), n));
    }
    let s = normalize_set(n, s)?;
    let abs = absorption_matrix(chain, &s)?;
    let mut rho = vec![0.0; n];
    for x in 0..n {
        let w = mu0.get(x);
        if w == 0.0 {
            continue;
        }
        for &a in &s {
            rho[a] += w * abs[(x, a)];
        }
    }
    Distribution::new(rho, chain.tolerances())
}

/// One enumerated subset: its stationary mass and the worst start state.
#[derive(Debug, Clone)]
pub(crate) struct SubsetEval {
    pub set: Vec<usize>,
    pub mass: f64,
    pub max_h: f64,
    pub argmax_state: usize,
}

/// Evaluate every nonempty subset of the state space. Callers must respect
/// the exact-enumeration cap; this is the shared engine behind the exact
/// hitting functionals.
pub(crate) fn enumerate_subsets(chain: &MarkovChain) -> Result<Vec<SubsetEval>> {
    let n = chain.n();
    let cap = chain.tolerances().exact_cap;
    if n > cap {
        return Err(Error::TooLargeForExact { n, cap });
    }
    let pi = chain.stationary()?;
    let masks: Vec<u32> = (1..(1u32 << n)).collect();
    masks
        .par_iter()
        .map(|&mask| {
            let set: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let mass = pi.mass(&set);
            let h = expected_hitting(chain, &set)?;
            let mut max_h = 0.0;
            let mut arg = set[0];
            for (x, &v) in h.iter().enumerate() {
                if v > max_h {
                    max_h = v;
                    arg = x;
                }
            }
            Ok(SubsetEval {
                set,
                mass,
                max_h,
                argmax_state: arg,
            })
        })
        .collect()
}

/// Deterministic argmax over subset evaluations: larger objective wins, ties
/// go to the lexicographically smallest witness set, then smallest state.
fn best_report<'a, I, F>(evals: I, objective: F, tie: f64) -> Option<(&'a SubsetEval, f64)>
where
    I: IntoIterator<Item = &'a SubsetEval>,
    F: Fn(&SubsetEval) -> f64,
{
    let mut best: Option<(&SubsetEval, f64)> = None;
    for e in evals {
        let v = objective(e);
        match &best {
            None => best = Some((e, v)),
            Some((b, bv)) => {
                if v > bv + tie {
                    best = Some((e, v));
                } else if v > bv - tie {
                    let replace = match e.set.cmp(&b.set) {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Equal => e.argmax_state < b.argmax_state,
                        std::cmp::Ordering::Greater => false,
                    };
                    if replace {
                        best = Some((e, *bv));
                    }
                }
            }
        }
    }
    best
}

/// `sup { E_x[H_A] : pi(A) >= alpha }` with witnesses. Exact below the cap;
/// `heuristic` enables a greedy local search above it (exact = false).
pub fn t_hit_alpha(chain: &MarkovChain, alpha: f64, heuristic: bool) -> Result<HittingReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::BadAlpha {
            value: alpha,
            range: "(0, 1]",
        });
    }
    let n = chain.n();
    let cap = chain.tolerances().exact_cap;
    if n > cap {
        if !heuristic {
            return Err(Error::TooLargeForExact { n, cap });
        }
        return heuristic_search(chain, Some(alpha));
    }
    let tie = chain.tolerances().tie;
    let evals = enumerate_subsets(chain)?;
    let admissible = evals.iter().filter(|e| e.mass >= alpha - 1e-12);
    let (best, value) = best_report(admissible, |e| e.max_h, tie)
        .ok_or_else(|| Error::SolverFailure("no admissible subset".into()))?;
    Ok(HittingReport {
        value,
        witness_set: best.set.clone(),
        witness_state: best.argmax_state,
        alpha: Some(alpha),
        exact: true,
    })
}

/// `sup { pi(A) E_x[H_A] }` over all nonempty subsets, with witnesses.
pub fn t_hit_product(chain: &MarkovChain) -> Result<HittingReport> {
    let n = chain.n();
    let cap = chain.tolerances().exact_cap;
    if n > cap {
        return Err(Error::TooLargeForExact { n, cap });
    }
    let tie = chain.tolerances().tie;
    let evals = enumerate_subsets(chain)?;
    let (best, value) = best_report(evals.iter(), |e| e.mass * e.max_h, tie)
        .ok_or_else(|| Error::SolverFailure("no subsets".into()))?;
    Ok(HittingReport {
        value,
        witness_set: best.set.clone(),
        witness_state: best.argmax_state,
        alpha: None,
        exact: true,
    })
}

/// Greedy set search with restarts. No approximation guarantee; reports
/// exact = false.
fn heuristic_search(chain: &MarkovChain, alpha: Option<f64>) -> Result<HittingReport> {
    let n = chain.n();
    let pi = chain.stationary()?;
    let min_mass = alpha.unwrap_or(0.0);
    let objective = |set: &[usize]| -> Result<(f64, usize)> {
        let h = expected_hitting(chain, set)?;
        let mut best = (0.0, set[0]);
        for (x, &v) in h.iter().enumerate() {
            let score = match alpha {
                Some(_) => v,
                None => v * pi.mass(set),
            };
            if score > best.0 {
                best = (score, x);
            }
        }
        Ok(best)
    };
    let mut overall: Option<(f64, Vec<usize>, usize)> = None;
    for restart in 0..16u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(restart);
        // grow a random admissible set
        let mut inside = vec![false; n];
        let mut mass = 0.0;
        while mass < min_mass || !inside.iter().any(|&b| b) {
            let i = rng.gen_range(0..n);
            if !inside[i] {
                inside[i] = true;
                mass += pi.get(i);
            }
        }
        let mut set: Vec<usize> = (0..n).filter(|&i| inside[i]).collect();
        let (mut score, mut state) = objective(&set)?;
        loop {
            let mut improved = false;
            for i in 0..n {
                let has = set.binary_search(&i).is_ok();
                let mut cand = set.clone();
                if has {
                    if set.len() == 1 || mass - pi.get(i) < min_mass {
                        continue;
                    }
                    cand.retain(|&x| x != i);
                } else {
                    cand.push(i);
                    cand.sort_unstable();
                }
                let (s, st) = objective(&cand)?;
                if s > score + 1e-12 {
                    mass = pi.mass(&cand);
                    set = cand;
                    score = s;
                    state = st;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        match &overall {
            Some((b, _, _)) if *b >= score => {}
            _ => overall = Some((score, set, state)),
        }
    }
    let (value, witness_set, witness_state) = overall.unwrap();
    Ok(HittingReport {
        value,
        witness_set,
        witness_state,
        alpha,
        exact: false,
    })
}
