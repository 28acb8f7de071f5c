//! Bounded Nelder-Mead simplex minimisation.
//!
//! Bounds are handled by projection: every trial point is clamped into the
//! box before it is evaluated or stored in the simplex.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Self {
        assert!(lower <= upper, "empty bound [{lower}, {upper}]");
        Bounds { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values is below `f_abs + f_rel * |f_best|`.
    pub f_abs: f64,
    pub f_rel: f64,
    /// ... and every vertex lies within `x_rel * (|x| + x_abs)` of the best.
    pub x_rel: f64,
    pub x_abs: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_evals: 20_000,
            f_abs: 1e-30,
            f_rel: 1e-14,
            x_rel: 1e-10,
            x_abs: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

pub fn project(x: &[f64], bounds: &[Bounds]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(&v, b)| b.clamp(v)).collect()
}

/// Minimises `objective` starting from `start` with initial edge lengths `step`.
pub fn nelder_mead<F>(
    objective: F,
    start: &[f64],
    step: &[f64],
    bounds: &[Bounds],
    opts: &SimplexOptions,
) -> SimplexOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let dim = start.len();
    assert_eq!(step.len(), dim);
    assert_eq!(bounds.len(), dim);
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    vertices.push(project(start, bounds));
    for i in 0..dim {
        let mut v = vertices[0].clone();
        // step inward when the start sits on the upper bound
        v[i] = if v[i] + step[i] > bounds[i].upper {
            bounds[i].clamp(v[i] - step[i])
        } else {
            v[i] + step[i]
        };
        vertices.push(v);
    }
    let mut values: Vec<f64> = vertices.iter().map(|v| eval(v)).collect();

    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while evals.get() < opts.max_evals {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        vertices = order.iter().map(|&i| vertices[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = &vertices[0];
        let f_spread = values[dim] - values[0];
        let x_spread_ok = vertices[1..].iter().all(|v| {
            v.iter()
                .zip(best)
                .all(|(a, b)| (a - b).abs() <= opts.x_rel * (b.abs() + opts.x_abs))
        });
        if f_spread <= opts.f_abs + opts.f_rel * values[0].abs() && x_spread_ok {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| vertices[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&vertices[dim])
                .zip(bounds)
                .map(|((c, w), b)| b.clamp(c + t * (c - w)))
                .collect()
        };

        let reflected = along(alpha);
        let f_r = eval(&reflected);
        if f_r < values[0] {
            let expanded = along(alpha * gamma);
            let f_e = eval(&expanded);
            if f_e < f_r {
                vertices[dim] = expanded;
                values[dim] = f_e;
            } else {
                vertices[dim] = reflected;
                values[dim] = f_r;
            }
            continue;
        }
        if f_r < values[dim - 1] {
            vertices[dim] = reflected;
            values[dim] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < values[dim] {
            let p = along(alpha * rho);
            let f = eval(&p);
            (p, f)
        } else {
            let p = along(-rho);
            let f = eval(&p);
            (p, f)
        };
        if f_c < values[dim].min(f_r) {
            vertices[dim] = contracted;
            values[dim] = f_c;
            continue;
        }
        for i in 1..=dim {
            let moved: Vec<f64> = vertices[0]
                .iter()
                .zip(&vertices[i])
                .zip(bounds)
                .map(|((b, v), bound)| bound.clamp(b + shrink * (v - b)))
                .collect();
            values[i] = eval(&moved);
            vertices[i] = moved;
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .expect("simplex has vertices");
    SimplexOutcome {
        x: vertices[best].clone(),
        value: values[best],
        evals: evals.get(),
        converged,
    }
}
