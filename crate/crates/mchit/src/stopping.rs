//! The randomized stationary stopping time T = H_A for a random nested set.
//!
//! The rule is an ordering a_1..a_n of the states together with
//! probabilities p_1..p_n; the random set A equals
//! A_i = E \ {a_1..a_{i-1}} with probability p_i, chosen independently of
//! the trajectory, and the chain is stopped on first entry into A.
//! The construction makes Law(X_T) exactly stationary and the nesting
//! A_1 ⊃ A_2 ⊃ ... ⊃ A_n controls the tail of T through the maximal
//! expected hitting times of large sets.

use serde::{Deserialize, Serialize};

use crate::chain::{tv_distance, Distribution, MarkovChain};
use crate::error::{Error, Result};
use crate::hitting::{
    expected_hitting, harmonic_measure, hit_survival, t_hit_alpha, t_hit_product,
};
use crate::report::VerifyRecord;

/// Construction diagnostics kept alongside the rule so callers can audit
/// every induction step after the fact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleDiagnostics {
    /// Most negative residual seen at each induction step (before clamping).
    pub min_residuals: Vec<f64>,
    /// |sum p_i - 1|.
    pub prob_sum_error: f64,
    /// TV distance between the rule's law of X_T and the target.
    pub stationarity_residual: f64,
    /// min over k of  sum_{j<=k} p_j - (1 - target(A_{k+1})).
    pub partial_sum_slack: f64,
}

/// The nested-set stopping rule built for one chain and one initial law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoppingRule {
    pub mu0: Distribution,
    /// Target law of X_T; the stationary distribution unless overridden.
    pub target: Distribution,
    /// Permutation a_1..a_n of the states.
    pub ordering: Vec<usize>,
    /// p_1..p_n; zero entries are legal and retained.
    pub probs: Vec<f64>,
    /// Cached harmonic measures rho_{A_i} of the nested sets.
    pub harmonics: Vec<Distribution>,
    pub diagnostics: RuleDiagnostics,
    chain_fingerprint: u64,
}

impl StoppingRule {
    pub fn n(&self) -> usize {
        self.ordering.len()
    }

    /// The i-th nested set A_i = E \ {a_1..a_{i-1}}, 0-indexed, sorted.
    pub fn set(&self, i: usize) -> Vec<usize> {
        let n = self.n();
        let mut removed = vec![false; n];
        for &a in &self.ordering[..i] {
            removed[a] = true;
        }
        (0..n).filter(|&x| !removed[x]).collect()
    }

    /// The halting state a_n: contained in every A_i, so the rule has
    /// surely stopped once the chain reaches it.
    pub fn halting_state(&self) -> usize {
        *self.ordering.last().expect("nonempty ordering")
    }

    pub fn check_chain(&self, chain: &MarkovChain) -> Result<()> {
        if self.n() != chain.n() || self.chain_fingerprint != chain.fingerprint() {
            return Err(Error::ChainMismatch);
        }
        Ok(())
    }
}

/// Inductive construction of the rule. At each step the harmonic measure of
/// the current nested set is computed, and the state whose residual target
/// mass is exhausted first (minimal p) is removed next.
pub fn build_rule(
    chain: &MarkovChain,
    mu0: &Distribution,
    target: Option<&Distribution>,
) -> Result<StoppingRule> {
    let n = chain.n();
    if mu0.len() != n {
        return Err(Error::LengthMismatch(mu0.len(), n));
    }
    let pi = chain.stationary()?;
    let target = match target {
        Some(t) => {
            if t.len() != n {
                return Err(Error::LengthMismatch(t.len(), n));
            }
            t.clone()
        }
        None => pi.clone(),
    };
    let tol = chain.tolerances();

    let mut residual: Vec<f64> = (0..n).map(|a| target.get(a)).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut ordering = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    let mut harmonics = Vec::with_capacity(n);
    let mut min_residuals = Vec::with_capacity(n);

    for _step in 0..n {
        let rho = harmonic_measure(chain, mu0, &active)?;
        // minimal p over states with positive harmonic mass; ties go to the
        // smallest state index
        let mut chosen: Option<(usize, f64)> = None;
        for &a in &active {
            let mass = rho.get(a);
            if mass <= tol.support_zero {
                continue;
            }
            let ratio = residual[a].max(0.0) / mass;
            if chosen.map_or(true, |(_, best)| ratio < best) {
                chosen = Some((a, ratio));
            }
        }
        let (a_next, p_raw) = chosen.ok_or_else(|| {
            Error::ConstructionFailure(format!(
                "no state with positive harmonic mass among {active:?}"
            ))
        })?;
        if p_raw > 1.0 + 1e-9 {
            return Err(Error::ConstructionFailure(format!(
                "selected probability {p_raw} exceeds 1 at state {a_next}"
            )));
        }
        let p = p_raw.clamp(0.0, 1.0);

        let mut worst = 0.0f64;
        for a in 0..n {
            residual[a] -= p * rho.get(a);
            worst = worst.min(residual[a]);
            if residual[a] < -tol.residual_clamp {
                return Err(Error::ConstructionFailure(format!(
                    "residual {} at state {a} breaches the clamp",
                    residual[a]
                )));
            }
            residual[a] = residual[a].max(0.0);
        }
        residual[a_next] = 0.0;
        min_residuals.push(worst);

        ordering.push(a_next);
        probs.push(p);
        harmonics.push(rho);
        active.retain(|&x| x != a_next);
    }

    let prob_sum: f64 = probs.iter().sum();
    let prob_sum_error = (prob_sum - 1.0).abs();
    if prob_sum_error > 1e-8 {
        return Err(Error::ConstructionFailure(format!(
            "probabilities sum to {prob_sum}"
        )));
    }

    let mut rule = StoppingRule {
        mu0: mu0.clone(),
        target,
        ordering,
        probs,
        harmonics,
        diagnostics: RuleDiagnostics {
            min_residuals,
            prob_sum_error,
            stationarity_residual: 0.0,
            partial_sum_slack: 0.0,
        },
        chain_fingerprint: chain.fingerprint(),
    };
    rule.diagnostics.stationarity_residual = tv_distance(&rule_law(chain, &rule)?, &rule.target)?;
    rule.diagnostics.partial_sum_slack = partial_sum_slack(&rule);
    Ok(rule)
}

/// min over k of sum_{j<=k} p_j - (1 - target(A_{k+1})), with A_{n+1} empty.
fn partial_sum_slack(rule: &StoppingRule) -> f64 {
    let mut slack = f64::INFINITY;
    let mut partial = 0.0;
    let mut tail_mass = 1.0; // target(A_1) = 1
    for k in 0..rule.n() {
        partial += rule.probs[k];
        tail_mass -= rule.target.get(rule.ordering[k]); // target(A_{k+2}-ish)
        slack = slack.min(partial - (1.0 - tail_mass.max(0.0)));
    }
    slack
}

/// Law of X_T: the p-mixture of the cached harmonic measures. Equals the
/// target distribution up to solver tolerance.
pub fn rule_law(chain: &MarkovChain, rule: &StoppingRule) -> Result<Distribution> {
    rule.check_chain(chain)?;
    let n = rule.n();
    let mut law = vec![0.0; n];
    for (p, rho) in rule.probs.iter().zip(rule.harmonics.iter()) {
        for a in 0..n {
            law[a] += p * rho.get(a);
        }
    }
    Distribution::new(law, chain.tolerances())
}

/// E[T] = sum_i p_i E_{mu0}[H_{A_i}].
pub fn rule_mean(chain: &MarkovChain, rule: &StoppingRule) -> Result<f64> {
    rule.check_chain(chain)?;
    let n = rule.n();
    let mut mean = 0.0;
    for i in 0..n {
        if rule.probs[i] == 0.0 {
            continue;
        }
        let h = expected_hitting(chain, &rule.set(i))?;
        let e: f64 = (0..n).map(|x| rule.mu0.get(x) * h[x]).sum();
        mean += rule.probs[i] * e;
    }
    Ok(mean)
}

/// P[T > t] = sum_i p_i P_{mu0}[H_{A_i} > t], exact.
pub fn rule_tail(chain: &MarkovChain, rule: &StoppingRule, t: f64) -> Result<f64> {
    rule.check_chain(chain)?;
    let mut tail = 0.0;
    for i in 0..rule.n() {
        if rule.probs[i] == 0.0 {
            continue;
        }
        tail += rule.probs[i] * hit_survival(chain, &rule.mu0, &rule.set(i), t)?;
    }
    Ok(tail)
}

/// Certify the tail bounds P[T > t] <= eps + T_hit(eps)/t for every grid
/// pair, and P[T > t] <= sqrt(T_hit / t) for every t.
pub fn check_tail_bound(
    chain: &MarkovChain,
    rule: &StoppingRule,
    chain_name: &str,
    eps_grid: &[f64],
    t_grid: &[f64],
) -> Result<Vec<VerifyRecord>> {
    rule.check_chain(chain)?;
    let tol = chain.tolerances();
    let mut records = Vec::new();
    let product = t_hit_product(chain)?.value;
    for &eps in eps_grid {
        let thit_eps = t_hit_alpha(chain, eps, false)?.value;
        for &t in t_grid {
            if t <= 0.0 {
                return Err(Error::BadTime(format!("tail grid needs t > 0, got {t}")));
            }
            let lhs = rule_tail(chain, rule, t)?;
            let rhs = eps + thit_eps / t;
            records.push(VerifyRecord::new(
                "eq1-tail",
                chain_name,
                &[("eps", eps), ("t", t), ("t_hit_eps", thit_eps)],
                lhs,
                rhs,
                tol.verify_slack,
                "P[T > t] <= eps + T_hit(eps)/t for the nested-set stopping time",
            ));
        }
    }
    for &t in t_grid {
        let lhs = rule_tail(chain, rule, t)?;
        let rhs = (product / t).sqrt();
        records.push(VerifyRecord::new(
            "tail-sqrt",
            chain_name,
            &[("t", t), ("t_hit", product)],
            lhs,
            rhs,
            tol.verify_slack,
            "P[T > t] <= sqrt(T_hit / t), optimized over eps",
        ));
    }
    Ok(records)
}

/// Structural halting-state check plus a pathwise simulation check that the
/// rule never stops after the first visit to a_n.
pub fn check_halting_state(
    chain: &MarkovChain,
    rule: &StoppingRule,
    chain_name: &str,
    seed: u64,
    paths: usize,
) -> Result<VerifyRecord> {
    rule.check_chain(chain)?;
    let halting = rule.halting_state();
    // a_n is in every A_i by construction; verify anyway.
    for i in 0..rule.n() {
        if !rule.set(i).contains(&halting) {
            return Err(Error::ConstructionFailure(format!(
                "halting state {halting} missing from nested set {i}"
            )));
        }
    }
    // max over sampled paths of T - H_{a_n}; nonpositive means the rule has
    // always stopped by the first visit to the halting state.
    let mut worst = f64::NEG_INFINITY;
    for p in 0..paths {
        let s = crate::montecarlo::derive_seed(seed, p as u64);
        let (t_stop, _state, t_halt) =
            crate::montecarlo::sample_rule_stop_with_halting(chain, rule, s)?;
        worst = worst.max(t_stop - t_halt);
    }
    if paths == 0 {
        worst = 0.0;
    }
    Ok(VerifyRecord::new(
        "halting-state",
        chain_name,
        &[("paths", paths as f64), ("halting_state", halting as f64)],
        worst,
        0.0,
        chain.tolerances().verify_slack,
        "T <= first visit of the halting state a_n on every sampled path",
    ))
}
