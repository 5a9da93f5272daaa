//! Acceptance suite: one test (and one printed PASS line) per criterion.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;

use mchit::chain::{tv_distance, Distribution, MarkovChain, Mode};
use mchit::families::{make_family, FamilySpec};
use mchit::hitting::{expected_hitting, t_hit_alpha, t_hit_product};
use mchit::mixing::{check_submultiplicativity, d_worst, mixing_time};
use mchit::montecarlo::simulate_rule;
use mchit::stopping::{build_rule, check_tail_bound, rule_mean, rule_tail, StoppingRule};
use mchit::verify::{
    c2_chain, default_suite, verify_appendix, verify_counterexample, verify_theorem_general,
    verify_theorem_main,
};

const ALPHA_GRID: [f64; 3] = [0.1, 0.25, 0.4];

/// 50 seeded random chains: seeds 0..24 in each mode, n = 3 + seed % 10.
fn random_suite() -> Vec<(String, MarkovChain)> {
    let mut chains = Vec::new();
    for mode in [Mode::Continuous, Mode::Discrete] {
        for seed in 0..25u64 {
            let n = 3 + (seed as usize) % 10;
            let spec = FamilySpec {
                name: "random".into(),
                n,
                params: BTreeMap::new(),
                mode,
                seed: Some(seed),
            };
            let label = format!("random-{mode:?}-{n}-seed{seed}");
            chains.push((label, make_family(&spec).unwrap()));
        }
    }
    chains
}

fn rule_for(chain: &MarkovChain) -> StoppingRule {
    build_rule(chain, &Distribution::point(chain.n(), 0), None).unwrap()
}

#[test]
fn criterion_01_rule_law_is_stationary() {
    for (name, chain) in random_suite() {
        let rule = rule_for(&chain);
        let law = mchit::stopping::rule_law(&chain, &rule).unwrap();
        let pi = chain.stationary().unwrap();
        let tv = tv_distance(&law, &pi).unwrap();
        assert!(tv <= 1e-9, "{name}: tv = {tv}");
    }
    println!("criterion 1 PASS: rule law matches stationary within 1e-9 on 50 random chains");
}

#[test]
fn criterion_02_construction_invariants() {
    for (name, chain) in random_suite() {
        let rule = rule_for(&chain);
        let d = &rule.diagnostics;
        assert!(d.prob_sum_error <= 1e-10, "{name}: prob sum error {}", d.prob_sum_error);
        for (step, &r) in d.min_residuals.iter().enumerate() {
            assert!(r >= -1e-10, "{name}: residual {r} at step {step}");
        }
        assert!(d.partial_sum_slack >= -1e-10, "{name}: partial-sum slack {}", d.partial_sum_slack);
        // sum over { i : pi(A_i) >= eps } of p_i >= 1 - eps.
        let pi = chain.stationary().unwrap();
        for k in 1..=9 {
            let eps = k as f64 / 10.0;
            let mut mass_kept = 0.0;
            for i in 0..rule.n() {
                let set_mass: f64 = rule.set(i).iter().map(|&x| pi.get(x)).sum();
                if set_mass >= eps {
                    mass_kept += rule.probs[i];
                }
            }
            assert!(mass_kept >= 1.0 - eps - 1e-10, "{name}: eps {eps}, kept {mass_kept}");
        }
    }
    println!("criterion 2 PASS: probability, residual, and partial-sum invariants on 50 random chains");
}

#[test]
fn criterion_03_tail_bounds() {
    let eps_grid = [0.1, 0.2, 0.3, 0.4, 0.5];
    for (name, chain) in random_suite() {
        let t_grid: Vec<f64> = match chain.mode() {
            Mode::Continuous => vec![0.5, 1.0, 2.0, 4.0, 8.0],
            Mode::Discrete => vec![1.0, 2.0, 4.0, 8.0, 16.0],
        };
        let rule = rule_for(&chain);
        let records = check_tail_bound(&chain, &rule, &name, &eps_grid, &t_grid).unwrap();
        assert_eq!(records.len(), 30);
        for r in &records {
            assert!(r.pass, "{name}: {r:?}");
        }
    }
    // C2 closed forms: tail (1/3)e^{-t}, product T_hit = 1/3.
    let c2 = c2_chain();
    let rule = rule_for(&c2);
    for t in [0.5, 1.0, 2.0, 4.0] {
        let tail = rule_tail(&c2, &rule, t).unwrap();
        assert!((tail - (1.0 / 3.0) * (-t as f64).exp()).abs() <= 1e-9, "t={t}: {tail}");
    }
    let product = t_hit_product(&c2).unwrap().value;
    assert!((product - 1.0 / 3.0).abs() <= 1e-9, "T_hit = {product}");
    println!("criterion 3 PASS: tail bounds on a 5x5 grid for 50 chains; C2 closed forms to 1e-9");
}

#[test]
fn criterion_04_reversible_dbar_bound() {
    for (name, chain) in default_suite() {
        if !chain.is_reversible().unwrap() {
            continue;
        }
        for alpha in ALPHA_GRID {
            let records = verify_theorem_main(&chain, &name, alpha).unwrap();
            for r in &records {
                assert!(r.pass, "{name} alpha={alpha}: {r:?}");
            }
        }
    }
    println!("criterion 4 PASS: dbar(U) <= sqrt((1+2a)/2) for all reversible suite chains");
}

#[test]
fn criterion_05_pairwise_cesaro_bound() {
    for (name, chain) in default_suite() {
        for alpha in ALPHA_GRID {
            let records = verify_theorem_general(&chain, &name, alpha).unwrap();
            for r in &records {
                assert!(r.pass, "{name} alpha={alpha}: {r:?}");
            }
        }
    }
    println!("criterion 5 PASS: pairwise Cesaro distance at t(a) within (1+2a)/2 on the full suite");
}

#[test]
fn criterion_06_appendix_bounds() {
    for (name, chain) in default_suite() {
        if chain.n() > 12 {
            continue;
        }
        for alpha in [0.2, 0.4] {
            let records = verify_appendix(&chain, &name, alpha).unwrap();
            for r in &records {
                assert!(r.pass, "{name} alpha={alpha}: {r:?}");
            }
        }
    }
    println!("criterion 6 PASS: T_hit(a) <= (2/a) t* and per-(x,A) survival bounds on the suite");
}

#[test]
fn criterion_07_counterexample_growth() {
    let records = verify_counterexample(&[6, 10, 14]).unwrap();
    let growth: Vec<_> = records
        .iter()
        .filter(|r| r.id == "counterexample-growth")
        .collect();
    assert_eq!(growth.len(), 2);
    for r in growth {
        assert!(r.pass, "{r:?}");
        let factor = r.params["ratio_next"] / r.params["ratio_prev"];
        assert!(factor >= 1.3, "growth factor {factor} below 1.3: {r:?}");
    }
    println!("criterion 7 PASS: two-cliques T_mix(1/4)/T_hit(0.6) grows by >= 1.3 per step");
}

#[test]
fn criterion_08_oracle_cross_checks() {
    let c2 = c2_chain();
    // Kernel closed form: row 0 = (2/3 + e^{-3t}/3, 1/3 - e^{-3t}/3).
    for t in [0.0, 0.3, 1.0, 2.7] {
        let k = c2.kernel_at(t).unwrap();
        let e = (-3.0 * t as f64).exp();
        assert!((k.entry(0, 0) - (2.0 / 3.0 + e / 3.0)).abs() < 1e-12);
        assert!((k.entry(1, 0) - (2.0 / 3.0 - 2.0 * e / 3.0)).abs() < 1e-12);
    }
    let tmix = mixing_time(&c2, 0.25).unwrap().time;
    assert!((tmix - (8.0f64 / 3.0).ln() / 3.0).abs() <= 1e-5, "tmix {tmix}");
    let h = expected_hitting(&c2, &[1]).unwrap();
    assert!((h[0] - 1.0).abs() <= 1e-10 && h[1].abs() <= 1e-10, "{h:?}");
    let rule = rule_for(&c2);
    assert!((rule.probs[0] - 2.0 / 3.0).abs() <= 1e-10);
    assert!((rule.probs[1] - 1.0 / 3.0).abs() <= 1e-10);

    // Brute-force t_hit vs an independent per-subset recomputation that
    // avoids the library's LU path: fixed-point iteration of the hitting
    // system on the complement block.
    for (name, chain) in [
        ("c2", c2_chain()),
        (
            "random-c-6",
            make_family(&FamilySpec {
                name: "random".into(),
                n: 6,
                params: BTreeMap::new(),
                mode: Mode::Continuous,
                seed: Some(3),
            })
            .unwrap(),
        ),
        (
            "random-d-7",
            make_family(&FamilySpec {
                name: "random".into(),
                n: 7,
                params: BTreeMap::new(),
                mode: Mode::Discrete,
                seed: Some(4),
            })
            .unwrap(),
        ),
    ] {
        for alpha in [0.3, 0.6] {
            let lib = t_hit_alpha(&chain, alpha, false).unwrap().value;
            let oracle = oracle_t_hit(&chain, alpha);
            assert!((lib - oracle).abs() < 1e-8, "{name} alpha={alpha}: {lib} vs {oracle}");
        }
    }
    println!("criterion 8 PASS: closed-form C2 oracles and independent subset-enumeration oracle agree");
}

/// Independent T_hit(alpha): enumerate subsets by bitmask and solve each
/// hitting system by damped fixed-point iteration instead of LU.
fn oracle_t_hit(chain: &MarkovChain, alpha: f64) -> f64 {
    let n = chain.n();
    let pi = chain.stationary().unwrap();
    let m = chain.matrix();
    let lambda = chain.uniformization_rate();
    let mut best = 0.0f64;
    for mask in 1u64..(1 << n) {
        let mass: f64 = (0..n).filter(|&x| mask >> x & 1 == 1).map(|x| pi.get(x)).sum();
        if mass < alpha - 1e-12 {
            continue;
        }
        let outside: Vec<usize> = (0..n).filter(|&x| mask >> x & 1 == 0).collect();
        // h = c + K h on the complement, iterated to a fixed point:
        // continuous: K = I + Q_BB/lambda, c = 1/lambda; discrete: K = P_BB, c = 1.
        let mut h = vec![0.0f64; outside.len()];
        loop {
            let mut next = vec![0.0f64; outside.len()];
            let mut delta = 0.0f64;
            for (i, &x) in outside.iter().enumerate() {
                let mut v = match lambda {
                    Some(l) => 1.0 / l,
                    None => 1.0,
                };
                for (j, &y) in outside.iter().enumerate() {
                    let k = match lambda {
                        Some(l) => {
                            if x == y {
                                1.0 + m[(x, y)] / l
                            } else {
                                m[(x, y)] / l
                            }
                        }
                        None => m[(x, y)],
                    };
                    v += k * h[j];
                }
                delta = delta.max((v - h[i]).abs());
                next[i] = v;
            }
            h = next;
            if delta < 1e-13 {
                break;
            }
        }
        best = best.max(h.iter().cloned().fold(0.0, f64::max));
    }
    best
}

#[test]
fn criterion_09_monte_carlo_concordance() {
    let spec = FamilySpec {
        name: "cycle".into(),
        n: 5,
        params: BTreeMap::new(),
        mode: Mode::Continuous,
        seed: None,
    };
    let chain = make_family(&spec).unwrap();
    let rule = rule_for(&chain);
    let samples = 100_000;
    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
    let rep1 = pool1.install(|| simulate_rule(&chain, &rule, samples, 42).unwrap());
    let rep8 = pool8.install(|| simulate_rule(&chain, &rule, samples, 42).unwrap());
    assert_eq!(rep1.stop_state_counts, rep8.stop_state_counts);
    assert_eq!(rep1.mean_stop_time, rep8.mean_stop_time);

    let pi = chain.stationary().unwrap();
    for x in 0..chain.n() {
        let bound = 4.0 * (pi.get(x) / samples as f64).sqrt();
        let err = (rep1.stop_state_frequencies[x] - pi.get(x)).abs();
        assert!(err <= bound, "state {x}: err {err} > {bound}");
    }
    let exact = rule_mean(&chain, &rule).unwrap();
    let err = (rep1.mean_stop_time - exact).abs();
    assert!(err <= 3.0 * rep1.se_stop_time, "mean err {err}, se {}", rep1.se_stop_time);
    println!("criterion 9 PASS: empirical law and mean concordant; 1- and 8-worker runs identical");
}

#[test]
fn criterion_10_submultiplicativity() {
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
    for (name, chain) in default_suite() {
        let records = check_submultiplicativity(&chain, &name, &grid, &grid).unwrap();
        assert_eq!(records.len(), 25);
        for r in &records {
            assert!(r.pass, "{name}: {r:?}");
        }
    }
    println!("criterion 10 PASS: dbar(s+t) <= dbar(s) dbar(t) on 5x5 grids for the suite");
}

#[test]
fn d_worst_is_exposed_and_decreasing_on_suite() {
    // Not a numbered criterion; a cheap sanity net over the whole suite.
    for (name, chain) in default_suite() {
        let mut prev = f64::INFINITY;
        for i in 0..8 {
            let d = d_worst(&chain, i as f64).unwrap();
            assert!(d <= prev + 1e-10, "{name} at t={i}");
            prev = d;
        }
    }
}
