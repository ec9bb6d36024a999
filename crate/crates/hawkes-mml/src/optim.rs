//! Derivative-free simplex (Nelder-Mead) minimizer.
//!
//! Small and self-contained; the objectives it serves are convex in the
//! model's natural parameters, so a simplex search with a couple of
//! restarts reliably lands on the global minimum. Non-finite objective
//! values are treated as +infinity, which keeps the simplex inside the
//! feasible region.

/// Termination and restart settings.
#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadConfig {
    /// Absolute tolerance on the simplex value spread `f_worst - f_best`.
    pub f_tol_abs: f64,
    /// Iteration cap per run (restarts get their own budget).
    pub max_iters: usize,
    /// Number of restarts from the incumbent with a perturbed simplex.
    pub restarts: usize,
    /// Initial simplex step per coordinate.
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            f_tol_abs: 1e-8,
            max_iters: 5000,
            restarts: 2,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimize `f` starting from `x0`.
///
/// Runs one simplex search plus `restarts` deterministic re-seeds of the
/// simplex around the incumbent (shrinking, sign-alternating steps), which
/// guards against premature simplex collapse. The best point over all runs
/// is returned; `converged` reports whether the final run met `f_tol_abs`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    cfg: &NelderMeadConfig,
) -> OptimResult {
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(f(x))
    };

    let mut best_x = x0.to_vec();
    let mut best_f = eval(&best_x, &mut evaluations);
    let mut iterations = 0usize;
    let mut converged = false;

    for run in 0..=cfg.restarts {
        // Restart r uses a smaller step with alternating sign so the new
        // simplex is not degenerate with the previous one.
        let step = cfg.initial_step / (run as f64 + 1.0) * if run % 2 == 1 { -1.0 } else { 1.0 };
        let (x, fx, iters, conv) = simplex_run(&mut eval, &mut evaluations, &best_x, step, cfg);
        iterations += iters;
        converged = conv;
        if fx < best_f {
            best_f = fx;
            best_x = x;
        }
    }

    OptimResult {
        x: best_x,
        fx: best_f,
        iterations,
        evaluations,
        converged,
    }
}

fn simplex_run<E: FnMut(&[f64], &mut usize) -> f64>(
    eval: &mut E,
    evals: &mut usize,
    x0: &[f64],
    step: f64,
    cfg: &NelderMeadConfig,
) -> (Vec<f64>, f64, usize, bool) {
    let n = x0.len();
    // Standard coefficients: reflection, expansion, contraction, shrink.
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, evals)).collect();

    let mut iters = 0usize;
    let mut converged = false;
    while iters < cfg.max_iters {
        iters += 1;

        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = values[worst] - values[best];
        if spread.abs() <= cfg.f_tol_abs || !spread.is_finite() && values[best].is_infinite() {
            converged = spread.abs() <= cfg.f_tol_abs;
            break;
        }

        // Centroid of all points but the worst.
        let mut centroid = vec![0.0; n];
        for (idx, x) in simplex.iter().enumerate() {
            if idx == worst {
                continue;
            }
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c += xi;
            }
        }
        for c in &mut centroid {
            *c /= n as f64;
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[worst])
            .map(|(&c, &w)| c + alpha * (c - w))
            .collect();
        let f_reflect = eval(&reflect, evals);

        if f_reflect < values[best] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(&c, &w)| c + gamma * (c - w))
                .collect();
            let f_expand = eval(&expand, evals);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
        } else if f_reflect < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
        } else {
            // Contract toward the better of worst/reflected.
            let (base, f_base) = if f_reflect < values[worst] {
                (&reflect, f_reflect)
            } else {
                (&simplex[worst], values[worst])
            };
            let contract: Vec<f64> = centroid
                .iter()
                .zip(base)
                .map(|(&c, &b)| c + rho * (b - c))
                .collect();
            let f_contract = eval(&contract, evals);
            if f_contract < f_base {
                simplex[worst] = contract;
                values[worst] = f_contract;
            } else {
                // Shrink toward the best vertex.
                let best_point = simplex[best].clone();
                for idx in 0..=n {
                    if idx == best {
                        continue;
                    }
                    for (xi, &bi) in simplex[idx].iter_mut().zip(&best_point) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    values[idx] = eval(&simplex[idx], evals);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex.swap_remove(best), values[best], iters, converged)
}
