//! Box-bounded Nelder–Mead minimizer.
//!
//! Trial points are projected onto the box before evaluation, so the
//! objective is never called outside `[lower, upper]`.

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop once the spread of objective values across the simplex is below this.
    pub f_tol: f64,
    /// Stop once every vertex is within this distance of the best one.
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            f_tol: 1e-15,
            x_tol: 1e-12,
        }
    }
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((xi, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *xi = xi.clamp(*lo, *hi);
    }
}

/// `base + factor·(base − worst)`, projected.
fn along(base: &[f64], worst: &[f64], factor: f64, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = base
        .iter()
        .zip(worst)
        .map(|(b, w)| b + factor * (b - w))
        .collect();
    project(&mut x, lower, upper);
    x
}

pub fn minimize<F>(
    objective: F,
    start: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: SimplexOptions,
) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    assert!(n > 0 && step.len() == n && lower.len() == n && upper.len() == n);

    let mut x0 = start.to_vec();
    project(&mut x0, lower, upper);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.clone(), objective(&x0)));
    for i in 0..n {
        let mut x = x0.clone();
        // Step inward when the start sits on the upper bound.
        x[i] = if x0[i] + step[i] <= upper[i] {
            x0[i] + step[i]
        } else {
            x0[i] - step[i]
        };
        project(&mut x, lower, upper);
        let f = objective(&x);
        simplex.push((x, f));
    }

    let mut iterations = 0;
    while iterations < options.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= options.f_tol && spread <= options.x_tol {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst_x = simplex[n].0.clone();
        let second_worst = simplex[n - 1].1;

        let reflected = along(&centroid, &worst_x, REFLECT, lower, upper);
        let f_reflected = objective(&reflected);
        if f_reflected < best {
            let expanded = along(&centroid, &worst_x, EXPAND, lower, upper);
            let f_expanded = objective(&expanded);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < second_worst {
            simplex[n] = (reflected, f_reflected);
            continue;
        }
        let (contracted, f_contracted) = if f_reflected < worst {
            let x = along(&centroid, &worst_x, REFLECT * CONTRACT, lower, upper);
            let f = objective(&x);
            (x, f)
        } else {
            let x = along(&centroid, &worst_x, -CONTRACT, lower, upper);
            let f = objective(&x);
            (x, f)
        };
        if f_contracted < worst.min(f_reflected) {
            simplex[n] = (contracted, f_contracted);
            continue;
        }
        let best_x = simplex[0].0.clone();
        for (x, f) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&best_x) {
                *xi = bi + SHRINK * (*xi - bi);
            }
            *f = objective(x);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        iterations,
    }
}
