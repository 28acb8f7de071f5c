//! Scale-free growth with preferential attachment (PA) and triad formation
//! (TF), plus calibration of the TF probability to a target clustering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{average_clustering_coefficient, Graph};

#[derive(Debug, Error, PartialEq)]
pub enum GrowthError {
    #[error("invalid growth config: {0}")]
    Config(String),
    #[error("target clustering {target} unreachable: p_t = 1 reaches at most {max_cc:.4}")]
    Unreachable { target: f64, max_cc: f64 },
    #[error("calibration did not reach {target}\u{b1}{tolerance} within {iterations} iterations (best p_t {best_p_t}, cc {best_cc:.4})")]
    NotConverged {
        target: f64,
        tolerance: f64,
        iterations: usize,
        best_p_t: f64,
        best_cc: f64,
    },
}

/// Seed node count used when none is given; small but enough for a ring.
pub const DEFAULT_MIN_SEED_NODES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    /// Final node count.
    pub n: usize,
    /// Nodes in the initial ring.
    pub n0: usize,
    /// Edges added per incoming node.
    pub m: usize,
    /// Probability of a TF step after each added edge.
    pub p_t: f64,
    pub seed: u64,
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<(), GrowthError> {
        if self.m < 1 {
            return Err(GrowthError::Config("m must be at least 1".into()));
        }
        if self.n0 < self.m {
            return Err(GrowthError::Config(format!(
                "n0 ({}) must be at least m ({})",
                self.n0, self.m
            )));
        }
        if self.n < self.n0 {
            return Err(GrowthError::Config(format!(
                "n ({}) must be at least n0 ({})",
                self.n, self.n0
            )));
        }
        if !(0.0..=1.0).contains(&self.p_t) {
            return Err(GrowthError::Config(format!(
                "p_t ({}) must lie in [0, 1]",
                self.p_t
            )));
        }
        Ok(())
    }

    /// Edges of the initial seed graph.
    pub fn seed_edge_count(&self) -> usize {
        match self.n0 {
            0 | 1 => 0,
            2 => 1,
            k => k,
        }
    }

    pub fn expected_edge_count(&self) -> usize {
        self.seed_edge_count() + self.m * (self.n - self.n0)
    }
}

/// Fenwick tree over integer node weights, for degree-proportional draws.
struct WeightIndex {
    tree: Vec<u64>,
    weights: Vec<u64>,
    total: u64,
}

impl WeightIndex {
    fn new(capacity: usize) -> Self {
        WeightIndex {
            tree: vec![0; capacity + 1],
            weights: vec![0; capacity],
            total: 0,
        }
    }

    fn set(&mut self, index: usize, weight: u64) {
        let old = self.weights[index];
        if old == weight {
            return;
        }
        self.weights[index] = weight;
        self.total = self.total + weight - old;
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add(weight.wrapping_sub(old));
            i += i & i.wrapping_neg();
        }
    }

    /// Index whose cumulative weight range contains `target` (< total).
    fn find(&self, mut target: u64) -> usize {
        let mut pos = 0;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }
}

struct Grower {
    adjacency: Vec<Vec<usize>>,
    index: WeightIndex,
    rng: ChaCha8Rng,
}

impl Grower {
    fn add_edge(&mut self, u: usize, v: usize) {
        self.adjacency[u].push(v);
        self.adjacency[v].push(u);
    }

    /// Degree-proportional draw among nodes `0..v` that are neither `v` nor
    /// already linked to it. Excluded nodes have weight zero in the index.
    fn preferential_target(&mut self, v: usize) -> usize {
        if self.index.total == 0 {
            let eligible: Vec<usize> = (0..v)
                .filter(|w| !self.adjacency[v].contains(w))
                .collect();
            return eligible[self.rng.random_range(0..eligible.len())];
        }
        let draw = self.rng.random_range(0..self.index.total);
        self.index.find(draw)
    }

    /// Uniform neighbor of `w` not equal to and not yet linked to `v`.
    fn triad_partner(&mut self, v: usize, w: usize) -> Option<usize> {
        let excluded = |x: usize, adj: &[Vec<usize>]| x == v || adj[v].contains(&x);
        let nbrs = &self.adjacency[w];
        if nbrs.len() > 2 * (self.adjacency[v].len() + 1) {
            // at least half the neighbors are eligible
            loop {
                let x = nbrs[self.rng.random_range(0..nbrs.len())];
                if !excluded(x, &self.adjacency) {
                    return Some(x);
                }
            }
        }
        let candidates: Vec<usize> = nbrs
            .iter()
            .copied()
            .filter(|&x| !excluded(x, &self.adjacency))
            .collect();
        if candidates.is_empty() {
            None
        } else {
            Some(candidates[self.rng.random_range(0..candidates.len())])
        }
    }
}

/// Grows a PA-TF network.
///
/// Starts from a ring on `n0` nodes. Each incoming node adds exactly `m`
/// distinct edges. The first is a PA edge. After every added edge a coin
/// with probability `p_t` decides whether the next edge is a TF edge, which
/// links to a uniform neighbor of the most recent PA target; when no such
/// neighbor is available a PA edge is added instead.
pub fn generate_pa_tf(cfg: &GrowthConfig) -> Result<Graph, GrowthError> {
    cfg.validate()?;
    let mut grower = Grower {
        adjacency: vec![Vec::new(); cfg.n],
        index: WeightIndex::new(cfg.n),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    match cfg.n0 {
        0 | 1 => {}
        2 => grower.add_edge(0, 1),
        k => (0..k).for_each(|u| grower.add_edge(u, (u + 1) % k)),
    }
    for u in 0..cfg.n0 {
        grower.index.set(u, grower.adjacency[u].len() as u64);
    }

    for v in cfg.n0..cfg.n {
        let mut last_pa: Option<usize> = None;
        let mut triad_next = false;
        for _ in 0..cfg.m {
            let tf_target = match (triad_next, last_pa) {
                (true, Some(w)) => grower.triad_partner(v, w),
                _ => None,
            };
            let target = match tf_target {
                Some(x) => x,
                None => {
                    let w = grower.preferential_target(v);
                    last_pa = Some(w);
                    w
                }
            };
            grower.add_edge(v, target);
            // linked nodes are ineligible for the rest of this step
            grower.index.set(target, 0);
            triad_next = grower.rng.random_bool(cfg.p_t);
        }
        for i in 0..grower.adjacency[v].len() {
            let w = grower.adjacency[v][i];
            grower.index.set(w, grower.adjacency[w].len() as u64);
        }
        grower.index.set(v, grower.adjacency[v].len() as u64);
    }

    let edges: Vec<(usize, usize)> = grower
        .adjacency
        .iter()
        .enumerate()
        .flat_map(|(u, list)| list.iter().filter(move |&&w| u < w).map(move |&w| (u, w)))
        .collect();
    let (graph, stats) = Graph::from_edges(cfg.n, edges);
    debug_assert_eq!(stats.duplicates_dropped + stats.self_loops_dropped, 0);
    Ok(graph)
}

/// Node and edge counts plus average clustering of an observed network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub nodes: usize,
    pub edges: usize,
    pub avg_cc: f64,
}

/// Matches a growth config to an observed network, leaving `p_t` at 0 for
/// calibration: `m = max(1, round(edges / nodes))`, `n0 = max(m, 3)`.
pub fn derive_growth_config(real: &NetworkStats, seed: u64) -> GrowthConfig {
    let m = if real.nodes == 0 {
        1
    } else {
        ((real.edges as f64 / real.nodes as f64).round() as usize).max(1)
    };
    GrowthConfig {
        n: real.nodes,
        n0: m.max(DEFAULT_MIN_SEED_NODES),
        m,
        p_t: 0.0,
        seed,
    }
}

/// 64-bit seed for stream `index` derived from `master` (SplitMix64 finaliser).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub target_cc: f64,
    pub tolerance: f64,
    /// Pilot networks averaged per probe.
    pub pilots: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl CalibrationOptions {
    pub fn new(target_cc: f64, tolerance: f64, seed: u64) -> Self {
        CalibrationOptions {
            target_cc,
            tolerance,
            pilots: 5,
            max_iterations: 20,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub p_t: f64,
    pub achieved_cc: f64,
    /// Bisection steps taken after the two endpoint probes.
    pub iterations: usize,
    pub pilot_networks: usize,
}

/// Mean average-clustering of `pilots` networks grown at `p_t`. The same
/// pilot seeds are reused for every probe.
pub fn mean_pilot_cc(
    n: usize,
    n0: usize,
    m: usize,
    p_t: f64,
    pilots: usize,
    seed: u64,
) -> Result<f64, GrowthError> {
    let ccs: Vec<f64> = (0..pilots as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = GrowthConfig {
                n,
                n0,
                m,
                p_t,
                seed: derive_seed(seed, i),
            };
            let g = generate_pa_tf(&cfg)?;
            Ok(average_clustering_coefficient(&g).unwrap_or(0.0))
        })
        .collect::<Result<_, GrowthError>>()?;
    Ok(ccs.iter().sum::<f64>() / pilots as f64)
}

/// Bisection on `p_t` over [0, 1] until the pilot mean clustering is within
/// tolerance of the target. Relies on clustering increasing with `p_t`.
pub fn calibrate_pt(
    n: usize,
    m: usize,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult, GrowthError> {
    if !(opts.tolerance > 0.0) {
        return Err(GrowthError::Config("tolerance must be positive".into()));
    }
    if opts.pilots == 0 {
        return Err(GrowthError::Config("need at least one pilot network".into()));
    }
    if !(0.0..=1.0).contains(&opts.target_cc) {
        return Err(GrowthError::Config(format!(
            "target clustering {} outside [0, 1]",
            opts.target_cc
        )));
    }
    let n0 = m.max(DEFAULT_MIN_SEED_NODES);
    GrowthConfig {
        n,
        n0,
        m,
        p_t: 0.0,
        seed: opts.seed,
    }
    .validate()?;
    let probe = |p: f64| mean_pilot_cc(n, n0, m, p, opts.pilots, opts.seed);
    let done = |p_t: f64, cc: f64, iterations: usize| CalibrationResult {
        p_t,
        achieved_cc: cc,
        iterations,
        pilot_networks: opts.pilots,
    };

    let cc_lo = probe(0.0)?;
    if opts.target_cc <= cc_lo + opts.tolerance {
        return Ok(done(0.0, cc_lo, 0));
    }
    let cc_hi = probe(1.0)?;
    if (cc_hi - opts.target_cc).abs() <= opts.tolerance && opts.target_cc >= cc_hi {
        return Ok(done(1.0, cc_hi, 0));
    }
    if opts.target_cc > cc_hi + opts.tolerance {
        return Err(GrowthError::Unreachable {
            target: opts.target_cc,
            max_cc: cc_hi,
        });
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = if (cc_hi - opts.target_cc).abs() < (cc_lo - opts.target_cc).abs() {
        (1.0, cc_hi)
    } else {
        (0.0, cc_lo)
    };
    for iteration in 1..=opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        let cc = probe(mid)?;
        if (cc - opts.target_cc).abs() < (best.1 - opts.target_cc).abs() {
            best = (mid, cc);
        }
        if (cc - opts.target_cc).abs() <= opts.tolerance {
            return Ok(done(mid, cc, iteration));
        }
        if cc < opts.target_cc {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(GrowthError::NotConverged {
        target: opts.target_cc,
        tolerance: opts.tolerance,
        iterations: opts.max_iterations,
        best_p_t: best.0,
        best_cc: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::to_edge_list_string;

    fn cfg(n: usize, m: usize, p_t: f64, seed: u64) -> GrowthConfig {
        GrowthConfig {
            n,
            n0: m.max(3),
            m,
            p_t,
            seed,
        }
    }

    #[test]
    fn weight_index_draws() {
        let mut idx = WeightIndex::new(5);
        for (i, w) in [3, 0, 2, 5, 1].into_iter().enumerate() {
            idx.set(i, w);
        }
        assert_eq!(idx.total, 11);
        let expected = [0, 0, 0, 2, 2, 3, 3, 3, 3, 3, 4];
        for (t, &e) in expected.iter().enumerate() {
            assert_eq!(idx.find(t as u64), e, "target {t}");
        }
        idx.set(3, 0);
        assert_eq!(idx.total, 6);
        assert_eq!(idx.find(5), 4);
    }

    #[test]
    fn seed_only_when_no_incoming_nodes() {
        for m in 1..=5 {
            let g = generate_pa_tf(&GrowthConfig {
                n: 5,
                n0: 5,
                m,
                p_t: 0.5,
                seed: 9,
            })
            .unwrap();
            assert_eq!(g.edge_count(), 5);
            assert!(g.degrees().iter().all(|&d| d == 2));
        }
    }

    #[test]
    fn invalid_configs() {
        let bad = GrowthConfig {
            n: 10,
            n0: 2,
            m: 3,
            p_t: 0.1,
            seed: 0,
        };
        assert!(matches!(generate_pa_tf(&bad), Err(GrowthError::Config(_))));
        let bad = GrowthConfig { p_t: 1.5, ..cfg(10, 2, 0.0, 0) };
        assert!(matches!(bad.validate(), Err(GrowthError::Config(_))));
        let bad = GrowthConfig { n: 2, ..cfg(10, 2, 0.0, 0) };
        assert!(bad.validate().is_err());
        let bad = GrowthConfig { m: 0, ..cfg(10, 2, 0.0, 0) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn exact_edge_budget_and_determinism() {
        for &(n, m, p) in &[(300, 1, 0.3), (500, 2, 0.7), (400, 4, 1.0), (50, 3, 0.0)] {
            let c = cfg(n, m, p, 42);
            let g = generate_pa_tf(&c).unwrap();
            assert_eq!(g.node_count(), n);
            assert_eq!(g.edge_count(), c.expected_edge_count());
            let again = generate_pa_tf(&c).unwrap();
            assert_eq!(to_edge_list_string(&g), to_edge_list_string(&again));
        }
    }

    #[test]
    fn tiny_seed_graphs() {
        let g = generate_pa_tf(&GrowthConfig {
            n: 20,
            n0: 1,
            m: 1,
            p_t: 0.5,
            seed: 3,
        })
        .unwrap();
        assert_eq!(g.edge_count(), 19);
        let g = generate_pa_tf(&GrowthConfig {
            n: 20,
            n0: 2,
            m: 2,
            p_t: 0.5,
            seed: 3,
        })
        .unwrap();
        assert_eq!(g.edge_count(), 1 + 2 * 18);
    }

    #[test]
    fn derive_config_examples() {
        let c = derive_growth_config(&NetworkStats { nodes: 1866, edges: 4384, avg_cc: 0.21 }, 1);
        assert_eq!((c.n, c.m, c.n0), (1866, 2, 3));
        let c = derive_growth_config(&NetworkStats { nodes: 36265, edges: 111179, avg_cc: 0.16 }, 1);
        assert_eq!((c.n, c.m), (36265, 3));
        let c = derive_growth_config(&NetworkStats { nodes: 10, edges: 4, avg_cc: 0.0 }, 1);
        assert_eq!(c.m, 1);
        assert_eq!(c.p_t, 0.0);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    #[test]
    fn calibration_endpoints() {
        let opts = CalibrationOptions::new(0.0, 0.01, 5);
        let r = calibrate_pt(500, 2, &opts).unwrap();
        assert_eq!(r.p_t, 0.0);
        assert_eq!(r.pilot_networks, 5);

        let lo = mean_pilot_cc(500, 3, 2, 0.0, 5, 5).unwrap();
        let r = calibrate_pt(500, 2, &CalibrationOptions::new(lo, 0.01, 5)).unwrap();
        assert_eq!(r.p_t, 0.0);
        assert_eq!(r.achieved_cc, lo);

        let err = calibrate_pt(500, 2, &CalibrationOptions::new(0.99, 0.01, 5)).unwrap_err();
        assert!(matches!(err, GrowthError::Unreachable { .. }));
        assert!(calibrate_pt(500, 2, &CalibrationOptions::new(0.2, 0.0, 5)).is_err());
    }
}
