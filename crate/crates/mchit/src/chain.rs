//! Finite Markov chains in continuous and discrete time: validation,
//! stationary distributions, transition kernels via uniformization, and
//! total-variation distance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::poisson;
use crate::tolerances::Tolerances;

/// Time convention of a chain: generator rows sum to 0, stochastic rows to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Continuous,
    Discrete,
}

/// On-disk chain description. `matrix` is the generator Q in continuous mode
/// and the transition matrix P in discrete mode, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSpec {
    pub mode: Mode,
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

/// A validated, irreducible finite Markov chain. Immutable after
/// construction; all operations are pure.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    mode: Mode,
    labels: Vec<String>,
    m: DMatrix<f64>,
    lambda: Option<f64>,
    tol: Tolerances,
}

/// Probability vector over the state space. Entries may carry harmless
/// negative round-off up to the configured tolerance; reads clamp to zero.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if w < -tol.entry_negative {
                return Err(Error::BadDistribution(format!(
                    "entry {i} = {w} below -{}",
                    tol.entry_negative
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > tol.dist_sum {
            return Err(Error::BadDistribution(format!("mass {sum} is not 1")));
        }
        Ok(Distribution { weights })
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Distribution { weights: w }
    }

    pub fn uniform(n: usize) -> Self {
        Distribution {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Entry clamped at zero.
    pub fn get(&self, i: usize) -> f64 {
        self.weights[i].max(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Total mass of a set of states.
    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.get(i)).sum()
    }
}

/// Total variation distance: half the L1 distance, equal to the maximal
/// discrepancy over events.
pub fn tv_distance(a: &Distribution, b: &Distribution) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(tv_slices(a.as_slice(), b.as_slice()))
}

pub(crate) fn tv_slices(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
}

/// Row-stochastic kernel, one distribution per start state.
#[derive(Debug, Clone)]
pub struct Kernel {
    m: DMatrix<f64>,
}

impl Kernel {
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.m[(x, y)].max(0.0)
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        (0..self.m.ncols()).map(|y| self.entry(x, y)).collect()
    }

    pub fn row_distribution(&self, x: usize, tol: &Tolerances) -> Result<Distribution> {
        Distribution::new(self.row(x), tol)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub(crate) fn from_matrix(m: DMatrix<f64>) -> Self {
        Kernel { m }
    }

    /// TV distance between two rows.
    pub fn row_tv(&self, x: usize, z: usize) -> f64 {
        let n = self.m.ncols();
        0.5 * (0..n)
            .map(|y| (self.m[(x, y)] - self.m[(z, y)]).abs())
            .sum::<f64>()
    }

    /// TV distance of a row to an external distribution.
    pub fn row_tv_to(&self, x: usize, d: &Distribution) -> f64 {
        tv_slices(&self.row(x), d.as_slice())
    }
}

/// Uniformization series is used directly below this value of lambda*t;
/// above it the kernel is obtained by squaring the half-time kernel.
const SERIES_CUTOFF: f64 = 128.0;

/// Validate a raw chain description into a `MarkovChain`.
pub fn validate_chain(spec: &ChainSpec, tol: &Tolerances) -> Result<MarkovChain> {
    let n = spec.matrix.len();
    for (r, row) in spec.matrix.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NonSquare {
                rows: n,
                cols: row.len(),
            });
        }
        let _ = r;
    }
    if n < 2 {
        return Err(Error::BadSize(format!("need at least 2 states, got {n}")));
    }
    if spec.labels.len() != n {
        return Err(Error::LengthMismatch(spec.labels.len(), n));
    }
    {
        let mut seen = std::collections::HashSet::new();
        for l in &spec.labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::BadDistribution(format!("duplicate label {l:?}")));
            }
        }
    }
    let m = DMatrix::from_fn(n, n, |r, c| spec.matrix[r][c]);
    match spec.mode {
        Mode::Continuous => {
            for r in 0..n {
                let mut sum = 0.0;
                for c in 0..n {
                    let v = m[(r, c)];
                    if r != c && v < 0.0 {
                        return Err(Error::NegativeRate {
                            row: r,
                            col: c,
                            value: v,
                        });
                    }
                    sum += v;
                }
                if sum.abs() > tol.row_sum {
                    return Err(Error::BadRowSum {
                        row: r,
                        sum,
                        expected: 0.0,
                    });
                }
            }
        }
        Mode::Discrete => {
            for r in 0..n {
                let mut sum = 0.0;
                for c in 0..n {
                    let v = m[(r, c)];
                    if !(-tol.entry_negative..=1.0 + tol.row_sum).contains(&v) {
                        return Err(Error::BadEntry {
                            row: r,
                            col: c,
                            value: v,
                        });
                    }
                    sum += v;
                }
                if (sum - 1.0).abs() > tol.row_sum {
                    return Err(Error::BadRowSum {
                        row: r,
                        sum,
                        expected: 1.0,
                    });
                }
            }
        }
    }
    check_irreducible(&m, &spec.labels)?;
    let lambda = match spec.mode {
        Mode::Continuous => {
            let max_exit = (0..n).map(|r| m[(r, r)].abs()).fold(0.0, f64::max);
            Some(tol.lambda_margin * max_exit)
        }
        Mode::Discrete => None,
    };
    Ok(MarkovChain {
        mode: spec.mode,
        labels: spec.labels.clone(),
        m,
        lambda,
        tol: *tol,
    })
}

/// Strong connectivity of the directed graph of nonzero off-diagonal entries.
fn check_irreducible(m: &DMatrix<f64>, labels: &[String]) -> Result<()> {
    let n = m.nrows();
    let reach = |forward: bool| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for y in 0..n {
                let w = if forward { m[(x, y)] } else { m[(y, x)] };
                if x != y && w > 0.0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    };
    let fwd = reach(true);
    let bwd = reach(false);
    for s in 0..n {
        if !fwd[s] || !bwd[s] {
            return Err(Error::Reducible {
                state: s,
                label: labels[s].clone(),
            });
        }
    }
    Ok(())
}

impl MarkovChain {
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn uniformization_rate(&self) -> Option<f64> {
        self.lambda
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn to_spec(&self) -> ChainSpec {
        ChainSpec {
            mode: self.mode,
            labels: self.labels.clone(),
            matrix: (0..self.n())
                .map(|r| (0..self.n()).map(|c| self.m[(r, c)]).collect())
                .collect(),
        }
    }

    /// Stable identifier used to pair rules with the chain they were built on.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (self.mode == Mode::Continuous).hash(&mut h);
        self.labels.hash(&mut h);
        for v in self.m.iter() {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Unique stationary distribution of the irreducible chain.
    pub fn stationary(&self) -> Result<Distribution> {
        let n = self.n();
        // pi^T M = 0 (continuous) or pi^T (P - I) = 0 (discrete), plus the
        // normalization row.
        let mut a = self.m.transpose();
        if self.mode == Mode::Discrete {
            for i in 0..n {
                a[(i, i)] -= 1.0;
            }
        }
        let solve_with_row = |row: usize| -> Option<DVector<f64>> {
            let mut sys = a.clone();
            for c in 0..n {
                sys[(row, c)] = 1.0;
            }
            let mut b = DVector::zeros(n);
            b[row] = 1.0;
            sys.lu().solve(&b)
        };
        let pi = solve_with_row(n - 1)
            .or_else(|| solve_with_row(0))
            .ok_or_else(|| Error::SolverFailure("stationary system is singular".into()))?;
        // Residual check before clamping.
        let residual = (&a * &pi).abs().max();
        let residual = if self.mode == Mode::Discrete {
            residual
        } else {
            // Scale by the uniformization rate so fast chains are not
            // penalized for large generator entries.
            residual / self.lambda.unwrap_or(1.0).max(1.0)
        };
        if residual > self.tol.stationary_residual {
            return Err(Error::SolverFailure(format!(
                "stationary residual {residual} too large"
            )));
        }
        let mut w: Vec<f64> = pi.iter().copied().collect();
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Err(Error::SolverFailure("stationary mass not positive".into()));
        }
        for v in &mut w {
            *v /= sum;
        }
        Distribution::new(w, &self.tol)
    }

    /// Transition kernel at time `t`: `e^{Qt}` by uniformization in
    /// continuous mode, `P^t` by repeated squaring in discrete mode.
    pub fn kernel_at(&self, t: f64) -> Result<Kernel> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let m = match self.mode {
            Mode::Continuous => self.expm_uniformized(t),
            Mode::Discrete => {
                let steps = as_integer_time(t)?;
                matrix_power(&self.m, steps)
            }
        };
        Ok(Kernel::from_matrix(m))
    }

    fn jump_matrix(&self) -> DMatrix<f64> {
        let lambda = self.lambda.expect("continuous chain");
        let n = self.n();
        DMatrix::identity(n, n) + &self.m / lambda
    }

    fn expm_uniformized(&self, t: f64) -> DMatrix<f64> {
        let n = self.n();
        let lambda = self.lambda.expect("continuous chain");
        let mean = lambda * t;
        if mean == 0.0 {
            return DMatrix::identity(n, n);
        }
        if mean > SERIES_CUTOFF {
            let half = self.expm_uniformized(t / 2.0);
            let mut sq = &half * &half;
            renormalize_rows(&mut sq);
            return sq;
        }
        let jump = self.jump_matrix();
        let pmf = poisson::pmf_upto(mean, self.tol.poisson_tail);
        let mut acc = DMatrix::identity(n, n) * pmf[0];
        let mut pk = DMatrix::identity(n, n);
        for &w in &pmf[1..] {
            pk = &pk * &jump;
            if w > 0.0 {
                acc += &pk * w;
            }
        }
        renormalize_rows(&mut acc);
        acc
    }

    /// Uniform time-average kernel: `(1/t) \int_0^t e^{Qs} ds` (continuous)
    /// or the average of `P^0..P^{t-1}` (discrete).
    pub fn cesaro_kernel(&self, t: f64) -> Result<Kernel> {
        match self.mode {
            Mode::Continuous => {
                if t <= 0.0 {
                    return Err(Error::BadTime(format!("need t > 0, got {t}")));
                }
                let lambda = self.lambda.expect("continuous chain");
                let mean = lambda * t;
                let weights = poisson::cesaro_weights(mean);
                let n = self.n();
                let jump = self.jump_matrix();
                let mut acc = DMatrix::identity(n, n) * weights[0];
                let mut pk = DMatrix::identity(n, n);
                for &w in &weights[1..] {
                    pk = &pk * &jump;
                    if w > 0.0 {
                        acc += &pk * w;
                    }
                }
                renormalize_rows(&mut acc);
                Ok(Kernel::from_matrix(acc))
            }
            Mode::Discrete => {
                let steps = as_integer_time(t)?;
                if steps < 1 {
                    return Err(Error::BadTime("need t >= 1 in discrete mode".into()));
                }
                let n = self.n();
                let mut acc = DMatrix::identity(n, n);
                let mut pk = DMatrix::identity(n, n);
                for _ in 1..steps {
                    pk = &pk * &self.m;
                    acc += &pk;
                }
                acc /= steps as f64;
                Ok(Kernel::from_matrix(acc))
            }
        }
    }

    /// `(I + P) / 2`: every state holds with probability at least 1/2.
    pub fn lazify(&self) -> Result<MarkovChain> {
        if self.mode != Mode::Discrete {
            return Err(Error::WrongMode {
                expected: "discrete",
            });
        }
        let n = self.n();
        let lazy = (DMatrix::identity(n, n) + &self.m) * 0.5;
        Ok(MarkovChain {
            mode: Mode::Discrete,
            labels: self.labels.clone(),
            m: lazy,
            lambda: None,
            tol: self.tol,
        })
    }

    /// Detailed balance against the stationary distribution.
    pub fn is_reversible(&self) -> Result<bool> {
        let pi = self.stationary()?;
        let n = self.n();
        for x in 0..n {
            for y in (x + 1)..n {
                let lhs = pi.get(x) * self.m[(x, y)];
                let rhs = pi.get(y) * self.m[(y, x)];
                if (lhs - rhs).abs() > self.tol.detailed_balance {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Accept a floating time as a discrete step count.
pub(crate) fn as_integer_time(t: f64) -> Result<u64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let r = t.round();
    if (t - r).abs() > 1e-9 {
        return Err(Error::NonIntegerTime(t));
    }
    Ok(r as u64)
}

pub(crate) fn matrix_power(p: &DMatrix<f64>, e: u64) -> DMatrix<f64> {
    let mut result = matrix_power_raw(p, e);
    renormalize_rows(&mut result);
    result
}

/// Binary exponentiation without row renormalization; safe for
/// substochastic blocks.
pub(crate) fn matrix_power_raw(p: &DMatrix<f64>, mut e: u64) -> DMatrix<f64> {
    let n = p.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = p.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

fn renormalize_rows(m: &mut DMatrix<f64>) {
    let (rows, cols) = m.shape();
    for r in 0..rows {
        let s: f64 = (0..cols).map(|c| m[(r, c)]).sum();
        if s > 0.0 {
            for c in 0..cols {
                m[(r, c)] /= s;
            }
        }
    }
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn validate_c2() {
        let c = c2(&tol());
        assert_eq!(c.n(), 2);
        assert_eq!(c.mode(), Mode::Continuous);
        let lambda = c.uniformization_rate().unwrap();
        assert!((lambda - 1.05 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_negative_rate() {
        let spec = ChainSpec {
            mode: Mode::Continuous,
            labels: vec!["a".into(), "b".into()],
            matrix: vec![vec![1.0, -1.0], vec![2.0, -2.0]],
        };
        match validate_chain(&spec, &tol()) {
            Err(Error::NegativeRate { row: 0, col: 1, .. }) => {}
            other => panic!("expected NegativeRate, got {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_reducible() {
        // Absorbing state 2 unreachable-from? state 2 absorbs, never leaves.
        let spec = ChainSpec {
            mode: Mode::Discrete,
            labels: vec!["a".into(), "b".into(), "c".into()],
            matrix: vec![
                vec![0.5, 0.5, 0.0],
                vec![0.5, 0.0, 0.5],
                vec![0.0, 0.0, 1.0],
            ],
        };
        match validate_chain(&spec, &tol()) {
            Err(Error::Reducible { .. }) => {}
            other => panic!("expected Reducible, got {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_bad_row_sum() {
        let spec = ChainSpec {
            mode: Mode::Continuous,
            labels: vec!["a".into(), "b".into()],
            matrix: vec![vec![-1.0, 1.5], vec![2.0, -2.0]],
        };
        match validate_chain(&spec, &tol()) {
            Err(Error::BadRowSum { row: 0, .. }) => {}
            other => panic!("expected BadRowSum, got {other:?}"),
        }
    }

    #[test]
    fn stationary_c2() {
        let pi = c2(&tol()).stationary().unwrap();
        assert!((pi.get(0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((pi.get(1) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_symmetric_two_state() {
        let spec = ChainSpec {
            mode: Mode::Continuous,
            labels: vec!["a".into(), "b".into()],
            matrix: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
        };
        let pi = validate_chain(&spec, &tol()).unwrap().stationary().unwrap();
        assert!((pi.get(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_cycle_uniform() {
        let c = cycle_continuous(5, &tol());
        let pi = c.stationary().unwrap();
        for i in 0..5 {
            assert!((pi.get(i) - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_at_zero_is_identity() {
        let c = c2(&tol());
        let k = c.kernel_at(0.0).unwrap();
        assert_eq!(k.entry(0, 0), 1.0);
        assert_eq!(k.entry(0, 1), 0.0);
    }

    #[test]
    fn kernel_c2_matches_closed_form() {
        let c = c2(&tol());
        for t in [0.1, 1.0, 10.0] {
            let k = c.kernel_at(t).unwrap();
            let expect = c2_kernel(t);
            for x in 0..2 {
                for y in 0..2 {
                    assert!(
                        (k.entry(x, y) - expect[x][y]).abs() < 1e-10,
                        "t={t} ({x},{y}): {} vs {}",
                        k.entry(x, y),
                        expect[x][y]
                    );
                }
            }
        }
    }

    #[test]
    fn kernel_large_time_squaring_path() {
        let c = c2(&tol());
        // lambda*t far above the series cutoff
        let k = c.kernel_at(500.0).unwrap();
        assert!((k.entry(0, 0) - 2.0 / 3.0).abs() < 1e-9);
        assert!((k.entry(1, 0) - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn discrete_kernel_one_step_is_p() {
        let spec = ChainSpec {
            mode: Mode::Discrete,
            labels: vec!["a".into(), "b".into()],
            matrix: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        };
        let c = validate_chain(&spec, &tol()).unwrap();
        let k = c.kernel_at(1.0).unwrap();
        assert!((k.entry(0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tv_examples() {
        let t = tol();
        let d0 = Distribution::point(2, 0);
        let d1 = Distribution::point(2, 1);
        assert_eq!(tv_distance(&d0, &d0).unwrap(), 0.0);
        assert_eq!(tv_distance(&d0, &d1).unwrap(), 1.0);
        let a = Distribution::new(vec![2.0 / 3.0, 1.0 / 3.0], &t).unwrap();
        let b = Distribution::new(vec![0.5, 0.5], &t).unwrap();
        assert!((tv_distance(&a, &b).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn tv_length_mismatch() {
        let a = Distribution::point(2, 0);
        let b = Distribution::point(3, 0);
        assert!(matches!(
            tv_distance(&a, &b),
            Err(Error::LengthMismatch(2, 3))
        ));
    }

    #[test]
    fn lazify_two_cycle() {
        let spec = ChainSpec {
            mode: Mode::Discrete,
            labels: vec!["a".into(), "b".into()],
            matrix: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        };
        let c = validate_chain(&spec, &tol()).unwrap();
        let l = c.lazify().unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert!((l.matrix()[(x, y)] - 0.5).abs() < 1e-15);
            }
        }
        // lazifying again keeps the diagonal at >= 1/2
        let ll = l.lazify().unwrap();
        assert!(ll.matrix()[(0, 0)] >= 0.5);
    }

    #[test]
    fn lazify_preserves_stationary_on_rotation() {
        let spec = ChainSpec {
            mode: Mode::Discrete,
            labels: vec!["a".into(), "b".into(), "c".into()],
            matrix: vec![
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0],
            ],
        };
        let c = validate_chain(&spec, &tol()).unwrap();
        let l = c.lazify().unwrap();
        let pi = l.stationary().unwrap();
        for i in 0..3 {
            assert!((pi.get(i) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lazify_wrong_mode() {
        assert!(matches!(
            c2(&tol()).lazify(),
            Err(Error::WrongMode { .. })
        ));
    }

    #[test]
    fn reversibility() {
        let t = tol();
        assert!(c2(&t).is_reversible().unwrap());
        // biased 3-cycle: clockwise rate 2, counter-clockwise 1
        let spec = ChainSpec {
            mode: Mode::Continuous,
            labels: vec!["a".into(), "b".into(), "c".into()],
            matrix: vec![
                vec![-3.0, 2.0, 1.0],
                vec![1.0, -3.0, 2.0],
                vec![2.0, 1.0, -3.0],
            ],
        };
        let biased = validate_chain(&spec, &t).unwrap();
        assert!(!biased.is_reversible().unwrap());
        assert!(cycle_continuous(6, &t).is_reversible().unwrap());
    }

    #[test]
    fn kernel_rows_are_distributions_on_log_grid() {
        let t = tol();
        let c = c2(&t);
        let lambda = c.uniformization_rate().unwrap();
        let mut s = 1e-3 / lambda;
        while s <= 1e3 / lambda {
            let k = c.kernel_at(s).unwrap();
            for x in 0..c.n() {
                k.row_distribution(x, &t).unwrap();
            }
            s *= 10.0;
        }
    }

    #[test]
    fn semigroup_property() {
        let t = tol();
        let c = cycle_continuous(4, &t);
        for (s, u) in [(0.3, 0.7), (1.0, 2.0), (0.05, 5.0)] {
            let k_su = c.kernel_at(s + u).unwrap();
            let ks = c.kernel_at(s).unwrap();
            let ku = c.kernel_at(u).unwrap();
            let prod = ks.matrix() * ku.matrix();
            for x in 0..c.n() {
                let row: Vec<f64> = (0..c.n()).map(|y| prod[(x, y)]).collect();
                let d = tv_slices(&k_su.row(x), &row);
                assert!(d <= 1e-9, "semigroup violated by {d}");
            }
        }
    }

    #[test]
    fn stationary_is_fixed_point() {
        let t = tol();
        let c = c2(&t);
        let pi = c.stationary().unwrap();
        for time in [0.1, 1.0, 7.0] {
            let k = c.kernel_at(time).unwrap();
            let mut pushed = vec![0.0; c.n()];
            for y in 0..c.n() {
                for x in 0..c.n() {
                    pushed[y] += pi.get(x) * k.entry(x, y);
                }
            }
            assert!(tv_slices(&pushed, pi.as_slice()) <= 1e-9);
        }
    }

    #[test]
    fn cesaro_weights_match_quadrature_on_c2() {
        // Oracle: Simpson quadrature of the closed-form p_s(0,0) over [0,1].
        let t = tol();
        let c = c2(&t);
        let k = c.cesaro_kernel(1.0).unwrap();
        let f = |s: f64| 2.0 / 3.0 + (-3.0 * s).exp() / 3.0;
        let n = 20000;
        let h = 1.0 / n as f64;
        let mut integral = f(0.0) + f(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            integral += w * f(i as f64 * h);
        }
        integral *= h / 3.0;
        assert!(
            (k.entry(0, 0) - integral).abs() < 1e-9,
            "{} vs {}",
            k.entry(0, 0),
            integral
        );
    }

    #[test]
    fn discrete_cesaro_t1_is_identity() {
        let spec = ChainSpec {
            mode: Mode::Discrete,
            labels: vec!["a".into(), "b".into()],
            matrix: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        };
        let c = validate_chain(&spec, &tol()).unwrap();
        let k = c.cesaro_kernel(1.0).unwrap();
        assert_eq!(k.entry(0, 0), 1.0);
        assert_eq!(k.entry(0, 1), 0.0);
    }
}
