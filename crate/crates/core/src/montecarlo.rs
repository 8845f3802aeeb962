//! Simulation of `E[c(T_n)]^(1/n)` and empirical trimming statistics.
//!
//! The mean of `c` over replicates is formed in the log domain,
//! `ln mean = logsumexp(ln c_i) − ln reps`, so values like `10^600` never
//! leave `f64` range. Percentiles come from a nonparametric bootstrap of that
//! estimator using the nearest-rank rule: the `p`-quantile of `B` sorted
//! values is the one at rank `ceil(p · B)`.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::asymptotics::DensityTable;
use crate::error::{Error, Result};
use crate::rng::{bootstrap_stream, replicate_stream};
use crate::subtree::{log_total_count_with_precision, DEFAULT_LOG_PRECISION};
use crate::tree::{random_tree_with, LabelledTree};

pub const DEFAULT_REPS: usize = 1024;
pub const DEFAULT_BOOTSTRAP_REPS: usize = 100_000;

pub const CSV_HEADER: &str = "n,mean,p5,p50,p95,reps,seed";

/// Inputs of [`run_simulation`]. `bootstrap_seed` defaults to `master_seed`;
/// the two draw from disjoint stream ranges.
#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub n: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub bootstrap_reps: usize,
    pub bootstrap_seed: Option<u64>,
    pub precision: u32,
}

impl SimulationConfig {
    pub fn new(n: usize, master_seed: u64) -> Self {
        SimulationConfig {
            n,
            reps: DEFAULT_REPS,
            master_seed,
            bootstrap_reps: DEFAULT_BOOTSTRAP_REPS,
            bootstrap_seed: None,
            precision: DEFAULT_LOG_PRECISION,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {}", self.n)));
        }
        if self.reps < 2 {
            return Err(Error::invalid(format!("reps must be at least 2, got {}", self.reps)));
        }
        if self.bootstrap_reps == 0 {
            return Err(Error::invalid("bootstrap_reps must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSummary {
    pub n: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub bootstrap_reps: usize,
    pub bootstrap_seed: u64,
    pub mean_root: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
}

impl SimulationSummary {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{},{}",
            self.n, self.mean_root, self.p5, self.p50, self.p95, self.reps, self.master_seed
        )
    }
}

impl fmt::Display for SimulationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

/// `ln Σ exp(x_i)`, pivoted on the maximum.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `exp((logsumexp(ln c) − ln reps) / n)`.
pub fn mean_root(log_counts: &[f64], n: usize) -> f64 {
    ((logsumexp(log_counts) - (log_counts.len() as f64).ln()) / n as f64).exp()
}

/// Nearest-rank `p`-quantile of sorted data, `0 < p <= 1`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty() && p > 0.0 && p <= 1.0);
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// `ln c(T_i)` for replicates `0..reps`, in replicate order.
pub fn sample_log_counts(n: usize, reps: usize, master_seed: u64, precision: u32) -> Result<Vec<f64>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let tree = random_tree_with(n, &mut replicate_stream(master_seed, i))?;
            Ok(log_total_count_with_precision(&tree, precision).to_f64())
        })
        .collect()
}

/// Bootstrap replicates of [`mean_root`], sorted ascending.
pub fn bootstrap_mean_roots(log_counts: &[f64], n: usize, resamples: usize, seed: u64) -> Vec<f64> {
    let m = log_counts.len();
    let mut out: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0; m],
            |buf, b| {
                let mut rng = bootstrap_stream(seed, b);
                for slot in buf.iter_mut() {
                    *slot = log_counts[rng.random_range(0..m)];
                }
                mean_root(buf, n)
            },
        )
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationSummary> {
    config.validate()?;
    let logs = sample_log_counts(config.n, config.reps, config.master_seed, config.precision)?;
    let bootstrap_seed = config.bootstrap_seed.unwrap_or(config.master_seed);
    let boot = bootstrap_mean_roots(&logs, config.n, config.bootstrap_reps, bootstrap_seed);
    Ok(SimulationSummary {
        n: config.n,
        reps: config.reps,
        master_seed: config.master_seed,
        bootstrap_reps: config.bootstrap_reps,
        bootstrap_seed,
        mean_root: mean_root(&logs, config.n),
        p5: nearest_rank(&boot, 0.05),
        p50: nearest_rank(&boot, 0.50),
        p95: nearest_rank(&boot, 0.95),
    })
}

/// Outcome of the trimming process on one tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrimCensus {
    pub k_max: usize,
    pub n: usize,
    /// Vertices moved in round `k`, at index `k - 1`.
    pub class_counts: Vec<usize>,
    /// Vertices never moved.
    pub remainder: usize,
}

impl TrimCensus {
    pub fn class_fraction(&self, k: usize) -> f64 {
        self.class_counts[k - 1] as f64 / self.n as f64
    }

    pub fn remainder_fraction(&self) -> f64 {
        self.remainder as f64 / self.n as f64
    }
}

/// Trims pendant subtrees in rounds `K, K−1, …, 1`.
///
/// A vertex `v` has type size `k <= K` when deleting one of its edges leaves
/// `v` in a component of exactly `k` vertices; with `n > 2K` that edge is
/// unique. In round `k` every vertex of type size `k` still present is moved
/// into class `k` together with that component.
pub fn trim_partition(tree: &LabelledTree, k_max: usize) -> Result<TrimCensus> {
    let n = tree.n();
    if k_max == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if n <= 2 * k_max {
        return Err(Error::invalid(format!("trimming needs n > 2K, got n = {n}, K = {k_max}")));
    }
    let bfs = tree.bfs(1);
    let mut size = vec![1usize; n + 1];
    for &v in bfs.order.iter().rev() {
        let p = bfs.parent[v];
        if p != 0 {
            size[p] += size[v];
        }
    }
    // (type size, neighbour across the cut edge) per vertex
    let mut cut: Vec<Option<(usize, usize)>> = vec![None; n + 1];
    for v in 1..=n {
        let p = bfs.parent[v];
        if size[v] <= k_max {
            cut[v] = Some((size[v], p));
        } else {
            cut[v] = tree
                .neighbours(v)
                .iter()
                .find(|&&c| c != p && n - size[c] <= k_max)
                .map(|&c| (n - size[c], c));
        }
    }
    let mut by_size: Vec<Vec<usize>> = vec![Vec::new(); k_max + 1];
    for v in 1..=n {
        if let Some((k, _)) = cut[v] {
            by_size[k].push(v);
        }
    }
    let mut removed = vec![false; n + 1];
    let mut class_counts = vec![0usize; k_max];
    let mut stack = Vec::new();
    for k in (1..=k_max).rev() {
        for &v in &by_size[k] {
            if removed[v] {
                continue;
            }
            let boundary = cut[v].unwrap().1;
            removed[v] = true;
            stack.push((v, boundary));
            let mut moved = 0;
            while let Some((u, from)) = stack.pop() {
                moved += 1;
                for &w in tree.neighbours(u) {
                    if w != from && !(u == v && w == boundary) {
                        debug_assert!(!removed[w]);
                        removed[w] = true;
                        stack.push((w, u));
                    }
                }
            }
            debug_assert_eq!(moved, k);
            class_counts[k - 1] += moved;
        }
    }
    let remainder = n - class_counts.iter().sum::<usize>();
    Ok(TrimCensus {
        k_max,
        n,
        class_counts,
        remainder,
    })
}

/// Observed trimming fractions over many trees next to their limits.
#[derive(Clone, Debug)]
pub struct DensityComparison {
    pub n: usize,
    pub k_max: usize,
    pub reps: usize,
    /// Per `k`: mean observed fraction of vertices in class `k`.
    pub class_mean: Vec<f64>,
    /// Per `k`: standard error of that mean.
    pub class_se: Vec<f64>,
    /// Per `k`: `k^k f_K(k)`.
    pub class_predicted: Vec<f64>,
    pub remainder_mean: f64,
    pub remainder_se: f64,
    /// `h(K)`.
    pub remainder_predicted: f64,
}

impl DensityComparison {
    /// `|observed − predicted| / se` for each class, then the remainder.
    pub fn z_scores(&self) -> Vec<f64> {
        let z = |m: f64, se: f64, p: f64| if se > 0.0 { (m - p).abs() / se } else { f64::INFINITY };
        let mut out: Vec<f64> = (0..self.k_max)
            .map(|i| z(self.class_mean[i], self.class_se[i], self.class_predicted[i]))
            .collect();
        out.push(z(self.remainder_mean, self.remainder_se, self.remainder_predicted));
        out
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Trims `reps` random trees (replicate streams of `seed`) and compares the
/// class and remainder fractions with their limits.
pub fn empirical_densities(n: usize, k_max: usize, reps: usize, seed: u64) -> Result<DensityComparison> {
    if reps < 2 {
        return Err(Error::invalid(format!("reps must be at least 2, got {reps}")));
    }
    let censuses: Vec<TrimCensus> = (0..reps as u64)
        .into_par_iter()
        .map(|i| trim_partition(&random_tree_with(n, &mut replicate_stream(seed, i))?, k_max))
        .collect::<Result<_>>()?;
    let density = DensityTable::new(k_max, 128)?;
    let mut class_mean = Vec::with_capacity(k_max);
    let mut class_se = Vec::with_capacity(k_max);
    let mut class_predicted = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let xs: Vec<f64> = censuses.iter().map(|c| c.class_fraction(k)).collect();
        let (m, se) = mean_and_se(&xs);
        class_mean.push(m);
        class_se.push(se);
        class_predicted.push(density.f(k).mid_f64() * (k as f64).powi(k as i32));
    }
    let rs: Vec<f64> = censuses.iter().map(TrimCensus::remainder_fraction).collect();
    let (remainder_mean, remainder_se) = mean_and_se(&rs);
    Ok(DensityComparison {
        n,
        k_max,
        reps,
        class_mean,
        class_se,
        class_predicted,
        remainder_mean,
        remainder_se,
        remainder_predicted: density.h().mid_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::random_tree;

    #[test]
    fn logsumexp_handles_huge_values() {
        let xs = [1000.0, 1000.0];
        assert!((logsumexp(&xs) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert!((mean_root(&[3f64.ln(); 5], 2) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nearest_rank_rule() {
        let xs: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(nearest_rank(&xs, 0.05), 1.0);
        assert_eq!(nearest_rank(&xs, 0.5), 10.0);
        assert_eq!(nearest_rank(&xs, 0.95), 19.0);
        assert_eq!(nearest_rank(&xs, 1.0), 20.0);
        assert_eq!(nearest_rank(&[4.0], 0.05), 4.0);
    }

    #[test]
    fn two_vertex_trees() {
        let mut cfg = SimulationConfig::new(2, 9);
        cfg.reps = 10;
        cfg.bootstrap_reps = 100;
        let s = run_simulation(&cfg).unwrap();
        assert!((s.mean_root - 3f64.sqrt()).abs() < 1e-12);
        assert!((s.p5 - 3f64.sqrt()).abs() < 1e-12 && (s.p95 - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.to_csv(), "2,1.732051,1.732051,1.732051,1.732051,10,9");
    }

    #[test]
    fn simulation_is_reproducible() {
        let mut cfg = SimulationConfig::new(300, 5);
        cfg.reps = 40;
        cfg.bootstrap_reps = 500;
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.p5 <= a.p50 && a.p50 <= a.p95);
        assert!(a.mean_root > 1.0);
        cfg.bootstrap_seed = Some(6);
        let c = run_simulation(&cfg).unwrap();
        assert_eq!(a.mean_root, c.mean_root);
        assert_ne!(a.p5, c.p5);
    }

    #[test]
    fn simulation_rejects_bad_sizes() {
        assert!(run_simulation(&SimulationConfig::new(1, 0)).is_err());
        let mut cfg = SimulationConfig::new(10, 0);
        cfg.reps = 1;
        assert!(run_simulation(&cfg).is_err());
        cfg.reps = 2;
        cfg.bootstrap_reps = 0;
        assert!(run_simulation(&cfg).is_err());
    }

    #[test]
    fn replicate_order_does_not_matter() {
        let mut logs = sample_log_counts(500, 64, 3, DEFAULT_LOG_PRECISION).unwrap();
        let a = mean_root(&logs, 500);
        logs.reverse();
        logs.rotate_left(17);
        let b = mean_root(&logs, 500);
        assert!(((a - b) / a).abs() <= 2f64.powi(-30));
    }

    #[test]
    fn trim_examples() {
        let path = LabelledTree::path(7).unwrap();
        let t = trim_partition(&path, 1).unwrap();
        assert_eq!((t.class_counts.clone(), t.remainder), (vec![2], 5));
        let t = trim_partition(&path, 3).unwrap();
        assert_eq!((t.class_counts.clone(), t.remainder), (vec![0, 0, 6], 1));
        for centre in [1, 4] {
            let star = LabelledTree::star(9, centre).unwrap();
            let t = trim_partition(&star, 1).unwrap();
            assert_eq!((t.class_counts, t.remainder), (vec![8], 1));
        }
        assert!(trim_partition(&path, 4).is_err());
        assert!(trim_partition(&path, 0).is_err());
    }

    #[test]
    fn trim_is_a_partition_independent_of_labels() {
        for seed in 0..20 {
            let tree = random_tree(200, seed).unwrap();
            let t = trim_partition(&tree, 4).unwrap();
            assert_eq!(t.class_counts.iter().sum::<usize>() + t.remainder, 200);
            let relabel = |v: usize| (v + 36) % 200 + 1;
            let edges: Vec<_> = tree.edges().map(|(u, v)| (relabel(u), relabel(v))).collect();
            let moved = LabelledTree::from_edges(200, &edges).unwrap();
            assert_eq!(trim_partition(&moved, 4).unwrap(), t);
        }
    }

    #[test]
    fn leaf_fraction_near_inverse_e() {
        let cmp = empirical_densities(20_000, 1, 8, 1).unwrap();
        assert!((cmp.class_predicted[0] - (-1f64).exp()).abs() < 1e-15);
        assert!(cmp.z_scores().iter().all(|&z| z < 4.0), "{cmp:?}");
        let cmp = empirical_densities(20_000, 2, 8, 2).unwrap();
        assert!((cmp.class_predicted[1] - 2.0 * (-2f64).exp()).abs() < 1e-15);
        assert!(cmp.z_scores().iter().all(|&z| z < 4.0), "{cmp:?}");
    }
}
