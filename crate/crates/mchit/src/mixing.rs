//! Total-variation distance profiles and mixing-time searches, including the
//! Cesàro (uniform-average) proxy used to witness upper bounds on the
//! averaged mixing time.

use serde::{Deserialize, Serialize};

use crate::chain::{MarkovChain, Mode};
use crate::error::{Error, Result};
use crate::report::VerifyRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Plain,
    Cesaro,
}

/// Result of a mixing-time search: the threshold plus the sampled curve the
/// search evaluated, so the bracketing can be audited.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingProfile {
    pub delta: f64,
    pub time: f64,
    pub kind: ProfileKind,
    /// (t, distance) pairs in evaluation order, then sorted by t.
    pub curve: Vec<(f64, f64)>,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::BadDelta(delta));
    }
    Ok(())
}

/// Worst-case distance to stationarity: max_x d_TV(p_t(x,·), π).
pub fn d_worst(chain: &MarkovChain, t: f64) -> Result<f64> {
    let pi = chain.stationary()?;
    let k = chain.kernel_at(t)?;
    let mut d: f64 = 0.0;
    for x in 0..chain.n() {
        d = d.max(k.row_tv_to(x, &pi));
    }
    Ok(d)
}

/// Pairwise worst-case distance: max over ordered pairs (x,z) of
/// d_TV(p_t(x,·), p_t(z,·)). Satisfies d(t) ≤ d̄(t) ≤ 2 d(t).
pub fn d_bar(chain: &MarkovChain, t: f64) -> Result<f64> {
    let k = chain.kernel_at(t)?;
    let mut d: f64 = 0.0;
    for x in 0..chain.n() {
        for z in (x + 1)..chain.n() {
            d = d.max(k.row_tv(x, z));
        }
    }
    Ok(d)
}

/// Worst-case Cesàro distance: max_x d_TV of the averaged kernel row vs π.
pub fn d_worst_cesaro(chain: &MarkovChain, t: f64) -> Result<f64> {
    let pi = chain.stationary()?;
    let k = chain.cesaro_kernel(t)?;
    let mut d: f64 = 0.0;
    for x in 0..chain.n() {
        d = d.max(k.row_tv_to(x, &pi));
    }
    Ok(d)
}

const MAX_DOUBLINGS: u32 = 120;

/// Smallest t with d_worst(t) ≤ delta. Continuous chains use a doubling
/// bracket plus bisection to relative tolerance 1e-6 (d is nonincreasing);
/// discrete chains binary-search when lazy (monotone case) and otherwise
/// scan integer times linearly.
pub fn mixing_time(chain: &MarkovChain, delta: f64) -> Result<MixingProfile> {
    check_delta(delta)?;
    let mut curve = Vec::new();
    let mut eval = |t: f64| -> Result<f64> {
        let d = d_worst(chain, t)?;
        curve.push((t, d));
        Ok(d)
    };

    let time = match chain.mode() {
        Mode::Continuous => {
            let d0 = eval(0.0)?;
            if d0 <= delta {
                 0.0
            } else {
                let mut hi = 1.0;
                let mut lo = 0.0;
                let mut steps = 0;
                while eval(hi)? > delta {
                    lo = hi;
                    hi *= 2.0;
                    steps += 1;
                    if steps > MAX_DOUBLINGS {
                        return Err(Error::NoConvergence("mixing-time doubling bracket".into()));
                    }
                }
                let rel = chain.tolerances().mixing_rel;
                while hi - lo > rel * hi {
                    let mid = 0.5 * (lo + hi);
                    if eval(mid)? <= delta {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
        Mode::Discrete => {
            let lazy = (0..chain.n()).all(|x| chain.matrix()[(x, x)] >= 0.5 - 1e-12);
            if eval(0.0)? <= delta {
                0.0
            } else if lazy {
                let mut hi = 1u64;
                let mut steps = 0;
                while eval(hi as f64)? > delta {
                    hi *= 2;
                    steps += 1;
                    if steps > MAX_DOUBLINGS {
                        return Err(Error::NoConvergence("mixing-time doubling bracket".into()));
                    }
                }
                let mut lo = hi / 2;
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if eval(mid as f64)? <= delta {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi as f64
            } else {
                let mut t = 1u64;
                loop {
                    if eval(t as f64)? <= delta {
                        break t as f64;
                    }
                    t += 1;
                    if t > 1_000_000 {
                        return Err(Error::NoConvergence("discrete mixing-time scan".into()));
                    }
                }
            }
        }
    };
    curve.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    curve.dedup_by(|a, b| a.0 == b.0);
    Ok(MixingProfile {
        delta,
        time,
        kind: ProfileKind::Plain,
        curve,
    })
}

/// Smallest t on a doubling-then-refine grid with worst-case Cesàro distance
/// ≤ delta. The Cesàro distance is not assumed monotone, so each bracket is
/// checked by a 64-point dense scan before refinement.
pub fn cesaro_mixing_time(chain: &MarkovChain, delta: f64) -> Result<MixingProfile> {
    check_delta(delta)?;
    let mut curve = Vec::new();
    let mut eval = |t: f64| -> Result<f64> {
        let d = d_worst_cesaro(chain, t)?;
        curve.push((t, d));
        Ok(d)
    };

    let time = match chain.mode() {
        Mode::Discrete => {
            // Integer horizon; t = 1 averages only P^0 = I. Linear scan keeps
            // the "smallest t" claim honest without a monotonicity assumption.
            let mut t = 1u64;
            loop {
                if eval(t as f64)? <= delta {
                    break t as f64;
                }
                t += 1;
                if t > 1_000_000 {
                    return Err(Error::NoConvergence("discrete Cesaro scan".into()));
                }
            }
        }
        Mode::Continuous => {
            let mut hi = 1.0;
            let mut steps = 0;
            while eval(hi)? > delta {
                hi *= 2.0;
                steps += 1;
                if steps > MAX_DOUBLINGS {
                    return Err(Error::NoConvergence("Cesaro doubling bracket".into()));
                }
            }
            // Dense scans over successively tighter brackets; each pass keeps
            // the leftmost grid point that meets the target.
            let mut lo = 0.0;
            let mut best = hi;
            for _ in 0..4 {
                let mut first_ok: Option<(f64, f64)> = None;
                for i in 1..=64 {
                    let t = lo + (best - lo) * i as f64 / 64.0;
                    let d = eval(t)?;
                    if d <= delta {
                        first_ok = Some((t, lo + (best - lo) * (i - 1) as f64 / 64.0));
                        break;
                    }
                }
                match first_ok {
                    Some((t, prev)) => {
                        best = t;
                        lo = prev;
                    }
                    None => break,
                }
                if best - lo <= chain.tolerances().mixing_rel * best {
                    break;
                }
            }
            best
        }
    };
    curve.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    curve.dedup_by(|a, b| a.0 == b.0);
    Ok(MixingProfile {
        delta,
        time,
        kind: ProfileKind::Cesaro,
        curve,
    })
}

/// Records asserting d̄(s+t) ≤ d̄(s)·d̄(t) for all grid pairs.
pub fn check_submultiplicativity(
    chain: &MarkovChain,
    chain_name: &str,
    s_grid: &[f64],
    t_grid: &[f64],
) -> Result<Vec<VerifyRecord>> {
    let slack = chain.tolerances().verify_slack;
    let mut records = Vec::with_capacity(s_grid.len() * t_grid.len());
    for &s in s_grid {
        if s < 0.0 {
            return Err(Error::BadTime(format!("negative grid time {s}")));
        }
        let ds = d_bar(chain, s)?;
        for &t in t_grid {
            if t < 0.0 {
                return Err(Error::BadTime(format!("negative grid time {t}")));
            }
            let dt = d_bar(chain, t)?;
            let dst = d_bar(chain, s + t)?;
            records.push(VerifyRecord::new(
                "dbar-submult",
                chain_name,
                &[("s", s), ("t", t)],
                dst,
                ds * dt,
                slack,
                "pairwise worst-case TV distance is submultiplicative: dbar(s+t) <= dbar(s)*dbar(t)",
            ));
        }
    }
    Ok(records)
}
