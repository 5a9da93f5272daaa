//! Poisson mass helpers for uniformization. All series truncation in the
//! crate goes through these two functions.

use statrs::function::gamma::ln_gamma;

/// Poisson(mean) pmf values for k = 0..=K, where K is chosen so that the
/// dropped upper tail has mass below `tail`. Values that underflow to zero
/// on the left of the mode are stored as zeros.
///
/// The pmf is seeded at the mode from the log form and extended by the
/// multiplicative recursion, which stays accurate for large means where
/// `exp(-mean)` would underflow.
pub fn pmf_upto(mean: f64, tail: f64) -> Vec<f64> {
    assert!(mean >= 0.0 && tail > 0.0);
    if mean == 0.0 {
        return vec![1.0];
    }
    let mode = mean.floor() as usize;
    let ln_p_mode = -mean + (mode as f64) * mean.ln() - ln_gamma(mode as f64 + 1.0);
    let p_mode = ln_p_mode.exp();

    // Downward from the mode.
    let mut low = vec![p_mode];
    let mut p = p_mode;
    let mut k = mode;
    while k > 0 {
        p *= k as f64 / mean;
        low.push(p);
        k -= 1;
    }
    low.reverse(); // now low[k] = pmf(k) for k = 0..=mode

    // Upward from the mode until the remaining tail is negligible. The
    // cumulative test alone saturates in f64, so we also require the term
    // itself to drop below a fraction of the requested tail.
    let mut pmf = low;
    let mut cum: f64 = pmf.iter().sum();
    let mut pk = p_mode;
    let mut kk = mode;
    let term_floor = (tail * 1e-3).min(1e-18);
    loop {
        kk += 1;
        pk *= mean / kk as f64;
        pmf.push(pk);
        cum += pk;
        if kk as f64 > mean && (1.0 - cum < tail || pk < term_floor) {
            break;
        }
    }
    pmf
}

/// Weights of the uniform time-average of the uniformized semigroup:
/// `w_k = P[Poisson(mean) > k] / mean`, which sum to 1 exactly in the limit.
/// Tails are accumulated backwards so small values keep full precision.
pub fn cesaro_weights(mean: f64) -> Vec<f64> {
    assert!(mean > 0.0);
    let pmf = pmf_upto(mean, 1e-16);
    let mut w = vec![0.0; pmf.len()];
    let mut tail = 0.0;
    for k in (0..pmf.len()).rev() {
        w[k] = tail / mean;
        tail += pmf[k];
    }
    // tail_k for k < len-1 includes all pmf above k; the final entry of w is
    // zero by construction and harmless. Normalize away the truncated tail
    // so the weights are an exact probability vector.
    let sum: f64 = w.iter().sum();
    for wk in &mut w {
        *wk /= sum;
    }
    w
}
