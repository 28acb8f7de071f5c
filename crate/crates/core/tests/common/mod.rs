//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library code paths it is used to check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simplicial::Graph;

/// G(n, p) with a fixed seed.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).0
}

pub fn adjacency_matrix(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut m = vec![vec![false; n]; n];
    for (u, v) in g.edges() {
        m[u][v] = true;
        m[v][u] = true;
    }
    m
}

/// Every triple `a < b < c` with all three edges present.
pub fn brute_triangles(adj: &[Vec<bool>]) -> Vec<[usize; 3]> {
    let n = adj.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if adj[a][b] && adj[a][c] && adj[b][c] {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// Triangles containing edge (u, v), by scanning all third nodes.
pub fn brute_s_factor(adj: &[Vec<bool>], u: usize, v: usize) -> usize {
    (0..adj.len())
        .filter(|&w| w != u && w != v && adj[u][w] && adj[v][w])
        .count()
}

/// Outside nodes adjacent to exactly two of the triangle's vertices.
pub fn brute_t_factor(adj: &[Vec<bool>], t: [usize; 3]) -> usize {
    (0..adj.len())
        .filter(|w| !t.contains(w))
        .filter(|&w| t.iter().filter(|&&x| adj[x][w]).count() == 2)
        .count()
}

/// Triangles sharing at least one edge with `t` (excluding `t`).
pub fn brute_edge_sharing_triangles(adj: &[Vec<bool>], t: [usize; 3]) -> usize {
    let [a, b, c] = t;
    [(a, b), (a, c), (b, c)]
        .iter()
        .map(|&(x, y)| brute_s_factor(adj, x, y) - 1)
        .sum()
}

/// Composite Simpson rule on [a, b] with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    sum * h / 3.0
}

/// erfc by quadrature of `2/sqrt(pi) exp(-t^2)` over [x, x + 12].
pub fn erfc_quadrature(x: f64) -> f64 {
    let two_over_sqrt_pi = 2.0 / std::f64::consts::PI.sqrt();
    if x < 0.0 {
        return 2.0 - erfc_quadrature(-x);
    }
    let panels = if x > 3.0 { 400_000 } else { 20_000 };
    two_over_sqrt_pi * simpson(|t| (-t * t).exp(), x, x + 12.0, panels)
}

/// erfc from the Maclaurin series of erf, summed in long double style with
/// Kahan compensation; only valid for moderate |x|.
pub fn erfc_taylor(x: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut term = x; // x^(2n+1) (-1)^n / n!
    let mut n = 0u32;
    loop {
        let add = term / (2 * n + 1) as f64;
        let y = add - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        n += 1;
        term *= -x * x / n as f64;
        if add.abs() < 1e-20 && n > 5 {
            break;
        }
    }
    1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
}

/// Student t density.
pub fn t_density(t: f64, df: f64) -> f64 {
    let ln_norm = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_norm - (df + 1.0) / 2.0 * (1.0 + t * t / df).ln()).exp()
}

/// Lanczos log-gamma (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Student t CDF by Simpson quadrature of the density from 0 to |t|.
pub fn t_cdf_quadrature(t: f64, df: f64) -> f64 {
    let half = simpson(|s| t_density(s, df), 0.0, t.abs(), 20_000);
    if t >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Standard normal CDF by quadrature of the density.
pub fn normal_cdf_quadrature(x: f64) -> f64 {
    let pdf = |s: f64| (-0.5 * s * s).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let half = simpson(pdf, 0.0, x.abs(), 20_000);
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}
