//! Parameterized chain generators: the named graph walks used by the verify
//! suite plus a seeded random-chain generator.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::chain::{validate_chain, ChainSpec, MarkovChain, Mode};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub mode: Mode,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Walk on an undirected graph given as neighbor lists. Continuous mode
/// emits a unit-total-exit-rate generator (each rate 1/deg), discrete mode
/// the simple-random-walk matrix.
fn graph_walk(adj: &[Vec<usize>], mode: Mode, labels: Vec<String>) -> ChainSpec {
    let n = adj.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for (x, nbrs) in adj.iter().enumerate() {
        let deg = nbrs.len() as f64;
        for &y in nbrs {
            matrix[x][y] += 1.0 / deg;
        }
        if mode == Mode::Continuous {
            matrix[x][x] = -1.0;
        }
    }
    ChainSpec {
        mode,
        labels,
        matrix,
    }
}

fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn complete(n: usize, mode: Mode) -> Result<ChainSpec> {
    if n < 2 {
        return Err(Error::BadSize(format!("complete: n = {n} < 2")));
    }
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|x| (0..n).filter(|&y| y != x).collect())
        .collect();
    Ok(graph_walk(&adj, mode, index_labels(n)))
}

fn cycle(n: usize, mode: Mode) -> Result<ChainSpec> {
    if n < 3 {
        return Err(Error::BadSize(format!("cycle: n = {n} < 3")));
    }
    let adj: Vec<Vec<usize>> = (0..n).map(|x| vec![(x + 1) % n, (x + n - 1) % n]).collect();
    Ok(graph_walk(&adj, mode, index_labels(n)))
}

/// Cycle with unequal clockwise/counterclockwise rates (default 0.75/0.25);
/// total exit rate 1. Not reversible for n >= 3.
fn biased_cycle(n: usize, mode: Mode, p: f64) -> Result<ChainSpec> {
    if n < 3 {
        return Err(Error::BadSize(format!("biased-cycle: n = {n} < 3")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::BadSize(format!("biased-cycle: bias {p} outside (0,1)")));
    }
    let mut matrix = vec![vec![0.0; n]; n];
    for x in 0..n {
        matrix[x][(x + 1) % n] = p;
        matrix[x][(x + n - 1) % n] = 1.0 - p;
        if mode == Mode::Continuous {
            matrix[x][x] = -1.0;
        }
    }
    Ok(ChainSpec {
        mode,
        labels: index_labels(n),
        matrix,
    })
}

/// Two copies of K_n joined by the single edge (n-1, n). States 0..n-1 form
/// the first clique, n..2n-1 the second.
pub fn two_cliques_adjacency(n: usize) -> Vec<Vec<usize>> {
    let total = 2 * n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    for x in 0..n {
        for y in 0..n {
            if x != y {
                adj[x].push(y);
                adj[n + x].push(n + y);
            }
        }
    }
    adj[n - 1].push(n);
    adj[n].push(n - 1);
    adj
}

fn two_cliques(n: usize, mode: Mode) -> Result<ChainSpec> {
    if n < 2 || 2 * n > 40 {
        return Err(Error::BadSize(format!("two-cliques: need 2 <= n <= 20, got {n}")));
    }
    let labels = (0..n)
        .map(|i| format!("a{i}"))
        .chain((0..n).map(|i| format!("b{i}")))
        .collect();
    Ok(graph_walk(&two_cliques_adjacency(n), mode, labels))
}

fn hypercube(dim: usize, mode: Mode) -> Result<ChainSpec> {
    if dim == 0 || dim > 10 {
        return Err(Error::BadSize(format!(
            "hypercube: need 1 <= dim <= 10, got {dim}"
        )));
    }
    let n = 1usize << dim;
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|x| (0..dim).map(|b| x ^ (1 << b)).collect())
        .collect();
    let labels = (0..n).map(|x| format!("{x:0dim$b}")).collect();
    Ok(graph_walk(&adj, mode, labels))
}

fn birth_death(n: usize, mode: Mode) -> Result<ChainSpec> {
    if n < 2 {
        return Err(Error::BadSize(format!("birth-death: n = {n} < 2")));
    }
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|x| {
            let mut v = Vec::new();
            if x > 0 {
                v.push(x - 1);
            }
            if x + 1 < n {
                v.push(x + 1);
            }
            v
        })
        .collect();
    Ok(graph_walk(&adj, mode, index_labels(n)))
}

/// Complete bipartite K_{n,n} (left 0..n-1, right n..2n-1) with one extra
/// edge (0,1) inside the left side.
fn bipartite_plus_edge(n: usize, mode: Mode) -> Result<ChainSpec> {
    if n < 2 {
        return Err(Error::BadSize(format!("bipartite-plus-edge: n = {n} < 2")));
    }
    let total = 2 * n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    for x in 0..n {
        for y in n..total {
            adj[x].push(y);
            adj[y].push(x);
        }
    }
    adj[0].push(1);
    adj[1].push(0);
    let labels = (0..n)
        .map(|i| format!("l{i}"))
        .chain((0..n).map(|i| format!("r{i}")))
        .collect();
    Ok(graph_walk(&adj, mode, labels))
}

/// Seeded random chain: each off-diagonal entry present with probability 1/2
/// and weighted uniformly; continuous rows are scaled to a total exit rate
/// uniform in [0.5, 1.5]. Resampled until irreducible.
fn random_chain(n: usize, mode: Mode, seed: u64, tol: &Tolerances) -> Result<MarkovChain> {
    if n < 2 {
        return Err(Error::BadSize(format!("random: n = {n} < 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let mut matrix = vec![vec![0.0; n]; n];
        for x in 0..n {
            let mut row_sum = 0.0;
            for y in 0..n {
                if y != x && rng.gen::<f64>() < 0.5 {
                    let w = rng.gen::<f64>();
                    matrix[x][y] = w;
                    row_sum += w;
                }
            }
            if row_sum == 0.0 {
                // Guarantee at least one exit so the chain can be irreducible.
                let y = (x + 1) % n;
                matrix[x][y] = 1.0;
                row_sum = 1.0;
            }
            match mode {
                Mode::Continuous => {
                    let exit = 0.5 + rng.gen::<f64>();
                    for y in 0..n {
                        matrix[x][y] *= exit / row_sum;
                    }
                    matrix[x][x] = -exit;
                }
                Mode::Discrete => {
                    let hold = rng.gen::<f64>();
                    let total = row_sum + hold;
                    for y in 0..n {
                        matrix[x][y] /= total;
                    }
                    matrix[x][x] = hold / total;
                }
            }
        }
        let spec = ChainSpec {
            mode,
            labels: index_labels(n),
            matrix,
        };
        match validate_chain(&spec, tol) {
            Ok(chain) => return Ok(chain),
            Err(Error::Reducible { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoConvergence(
        "random-chain rejection sampling".into(),
    ))
}

pub fn make_family(spec: &FamilySpec) -> Result<MarkovChain> {
    let tol = Tolerances::default();
    let chain_spec = match spec.name.as_str() {
        "complete" => complete(spec.n, spec.mode)?,
        "cycle" => cycle(spec.n, spec.mode)?,
        "biased-cycle" => {
            let p = spec.params.get("bias").copied().unwrap_or(0.75);
            biased_cycle(spec.n, spec.mode, p)?
        }
        "two-cliques" => two_cliques(spec.n, spec.mode)?,
        "hypercube" => hypercube(spec.n, spec.mode)?,
        "birth-death" => birth_death(spec.n, spec.mode)?,
        "bipartite-plus-edge" => bipartite_plus_edge(spec.n, spec.mode)?,
        "random" => {
            return random_chain(spec.n, spec.mode, spec.seed.unwrap_or(0), &tol);
        }
        other => {
            return Err(Error::UnknownFamily(other.to_string()))
        }
    };
    validate_chain(&chain_spec, &tol)
}
