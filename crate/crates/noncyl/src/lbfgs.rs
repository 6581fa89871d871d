//! Limited-memory quasi-Newton descent with Armijo backtracking for the
//! convex per-step functionals. The caller supplies a fixed diagonal used
//! as the seed metric; curvature pairs refine it.

pub struct OptimizerConfig {
    /// Relative gradient tolerance: stop when `‖g‖_∞ <= tol * (1 + ‖g_0‖_∞)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub memory: usize,
    pub armijo_c1: f64,
    pub backtrack: f64,
    pub max_line_search: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            tolerance: 1e-10,
            max_iterations: 2000,
            memory: 10,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_line_search: 80,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerOutcome {
    pub converged: bool,
    pub iterations: usize,
    /// Final `‖g‖_∞`.
    pub residual: f64,
    pub value: f64,
}

/// Minimizes a smooth convex objective given by `fg` (value + gradient into
/// the buffer). `x` holds the start and receives the minimizer; `diag` is a
/// positive seed diagonal for the initial metric. The objective must keep
/// pinned coordinates' gradient entries at zero; they then never move.
pub fn minimize<FG>(x: &mut [f64], diag: &[f64], cfg: &OptimizerConfig, mut fg: FG) -> OptimizerOutcome
where
    FG: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut f = fg(x, &mut g);
    let g0_inf = inf_norm(&g);
    let tol = cfg.tolerance * (1.0 + g0_inf);

    let mut s_list: Vec<Vec<f64>> = Vec::new();
    let mut y_list: Vec<Vec<f64>> = Vec::new();
    let mut rho_list: Vec<f64> = Vec::new();
    let mut gamma = 1.0;

    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut dir = vec![0.0; n];

    let mut iterations = 0;
    loop {
        let res = inf_norm(&g);
        if res <= tol {
            return OptimizerOutcome { converged: true, iterations, residual: res, value: f };
        }
        if iterations >= cfg.max_iterations {
            return OptimizerOutcome { converged: false, iterations, residual: res, value: f };
        }

        // two-loop recursion with H0 = gamma * diag^{-1}
        dir.copy_from_slice(&g);
        let m = s_list.len();
        let mut alphas = vec![0.0; m];
        for i in (0..m).rev() {
            let a = rho_list[i] * dot(&s_list[i], &dir);
            alphas[i] = a;
            axpy(-a, &y_list[i], &mut dir);
        }
        for i in 0..n {
            dir[i] *= gamma / diag[i];
        }
        for i in 0..m {
            let b = rho_list[i] * dot(&y_list[i], &dir);
            axpy(alphas[i] - b, &s_list[i], &mut dir);
        }
        for d in dir.iter_mut() {
            *d = -*d;
        }

        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            // fall back to the preconditioned steepest direction
            for i in 0..n {
                dir[i] = -g[i] / diag[i];
            }
            slope = dot(&g, &dir);
            s_list.clear();
            y_list.clear();
            rho_list.clear();
            gamma = 1.0;
        }

        // Armijo backtracking
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..cfg.max_line_search {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            let f_new = fg(&x_new, &mut g_new);
            if f_new <= f + cfg.armijo_c1 * step * slope {
                accepted = true;
                // curvature pair
                let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
                let sy = dot(&s, &y);
                if sy > 1e-300 {
                    let ydy: f64 = (0..n).map(|i| y[i] * y[i] / diag[i]).sum();
                    if ydy > 0.0 {
                        gamma = sy / ydy;
                    }
                    s_list.push(s);
                    y_list.push(y);
                    rho_list.push(1.0 / sy);
                    if s_list.len() > cfg.memory {
                        s_list.remove(0);
                        y_list.remove(0);
                        rho_list.remove(0);
                    }
                }
                x.copy_from_slice(&x_new);
                std::mem::swap(&mut g, &mut g_new);
                f = f_new;
                break;
            }
            step *= cfg.backtrack;
        }
        iterations += 1;
        if !accepted {
            // step collapsed below representable progress
            return OptimizerOutcome {
                converged: inf_norm(&g) <= tol,
                iterations,
                residual: inf_norm(&g),
                value: f,
            };
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &a| m.max(a.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
