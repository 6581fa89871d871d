//! Discrete function spaces: vector-valued nodal fields on a lattice and a
//! ladder of time states, with the constraint masks that realize the
//! time-sliced Dirichlet spaces, plus norms, gradients, the exponential
//! time mollifier and Steklov averages.
//!
//! Time convention: states live at `t_k = k h_t`; a field is read as
//! piecewise constant on `(t_{k-1}, t_k]`, so time integrals are
//! right-endpoint step sums over `k >= 1`.

use crate::geometry::SliceGrid;
use crate::grid::Grid;
use crate::{Error, Result};

/// Vector-valued field on lattice nodes and time states, pinned to the
/// boundary datum on the per-time mask.
#[derive(Clone, Debug)]
pub struct GridFunction {
    pub grid: Grid,
    pub n_comp: usize,
    pub h_t: f64,
    n_times: usize,
    values: Vec<f64>,
    /// Time-independent boundary datum, nodal.
    pub boundary: Vec<f64>,
    masks: Vec<Vec<bool>>,
}

impl GridFunction {
    pub fn zeros(grid: Grid, n_comp: usize, h_t: f64, n_times: usize) -> Self {
        let nodes = grid.len();
        GridFunction {
            grid,
            n_comp,
            h_t,
            n_times,
            values: vec![0.0; n_times * nodes * n_comp],
            boundary: vec![0.0; nodes * n_comp],
            masks: vec![vec![false; nodes]; n_times],
        }
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn n_steps(&self) -> usize {
        self.n_times - 1
    }

    pub fn final_time(&self) -> f64 {
        self.n_steps() as f64 * self.h_t
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    fn slice_len(&self) -> usize {
        self.nodes() * self.n_comp
    }

    pub fn at(&self, k: usize) -> &[f64] {
        let l = self.slice_len();
        &self.values[k * l..(k + 1) * l]
    }

    pub fn at_mut(&mut self, k: usize) -> &mut [f64] {
        let l = self.slice_len();
        &mut self.values[k * l..(k + 1) * l]
    }

    pub fn set_slice(&mut self, k: usize, values: &[f64]) {
        self.at_mut(k).copy_from_slice(values);
    }

    pub fn mask(&self, k: usize) -> &[bool] {
        &self.masks[k]
    }

    /// Pins the masked nodes of state `k` to the boundary datum.
    pub fn apply_mask(&mut self, k: usize, mask: Vec<bool>) {
        let n_comp = self.n_comp;
        let boundary = self.boundary.clone();
        let slice = self.at_mut(k);
        for (i, &pinned) in mask.iter().enumerate() {
            if pinned {
                slice[i * n_comp..(i + 1) * n_comp]
                    .copy_from_slice(&boundary[i * n_comp..(i + 1) * n_comp]);
            }
        }
        self.masks[k] = mask;
    }

    pub fn value(&self, k: usize, node: usize) -> &[f64] {
        &self.at(k)[node * self.n_comp..(node + 1) * self.n_comp]
    }

    /// Euclidean magnitude of the value at `(k, node)`.
    pub fn magnitude(&self, k: usize, node: usize) -> f64 {
        self.value(k, node).iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// `(∫_Ω |u(t_k)|^r dx)^{1/r}` by the node sum.
    pub fn slice_norm(&self, k: usize, r: f64) -> f64 {
        slice_norm(self.at(k), self.n_comp, self.grid.cell_volume(), r)
    }

    /// Forward-difference gradient of state `k`, one-sided at the box
    /// faces; layout `[node][comp][axis]`.
    pub fn gradient(&self, k: usize) -> Vec<f64> {
        let dim = self.grid.dim();
        let mut out = vec![0.0; self.nodes() * self.n_comp * dim];
        let vals = self.at(k);
        let mut buf = vec![0.0; self.n_comp * dim];
        for (flat, idx) in self.grid.iter_nodes() {
            node_gradient(&self.grid, vals, self.n_comp, flat, &idx, &mut buf);
            out[flat * self.n_comp * dim..(flat + 1) * self.n_comp * dim]
                .copy_from_slice(&buf);
        }
        out
    }

    /// Replaces values outside the slice by the boundary datum and records
    /// the mask.
    pub fn constrain_to_vt(&mut self, k: usize, slice: &SliceGrid) {
        let mask: Vec<bool> = slice.indicator.iter().map(|&inside| !inside).collect();
        self.apply_mask(k, mask);
    }

    /// Space-time `L^r` norm over `k >= 1` (right-endpoint step quadrature).
    pub fn space_time_norm(&self, r: f64) -> f64 {
        let cell = self.grid.cell_volume();
        let mut acc = 0.0;
        for k in 1..self.n_times {
            let vals = self.at(k);
            for i in 0..self.nodes() {
                let m = vec_norm(&vals[i * self.n_comp..(i + 1) * self.n_comp]);
                acc += m.powf(r) * cell;
            }
        }
        (acc * self.h_t).powf(1.0 / r)
    }
}

pub fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn slice_norm(values: &[f64], n_comp: usize, cell: f64, r: f64) -> f64 {
    let nodes = values.len() / n_comp;
    let mut acc = 0.0;
    for i in 0..nodes {
        acc += vec_norm(&values[i * n_comp..(i + 1) * n_comp]).powf(r);
    }
    (acc * cell).powf(1.0 / r)
}

/// Forward-difference gradient at one node (backward at the high faces),
/// written into `out` with layout `[comp][axis]`.
#[inline]
pub fn node_gradient(
    grid: &Grid,
    values: &[f64],
    n_comp: usize,
    flat: usize,
    idx: &[usize],
    out: &mut [f64],
) {
    let dim = grid.dim();
    let inv_h = 1.0 / grid.spacing();
    for d in 0..dim {
        let stride = grid.strides()[d];
        let (a, b) = if idx[d] + 1 < grid.shape()[d] {
            (flat, flat + stride)
        } else if grid.shape()[d] == 1 {
            for c in 0..n_comp {
                out[c * dim + d] = 0.0;
            }
            continue;
        } else {
            (flat - stride, flat)
        };
        for c in 0..n_comp {
            out[c * dim + d] = (values[b * n_comp + c] - values[a * n_comp + c]) * inv_h;
        }
    }
}

/// Norm ledger of a field: the space-time norms the solution theory is
/// stated in, plus the interpolation exponent `m = p(n+q+1)/n`.
#[derive(Clone, Debug)]
pub struct NormReport {
    pub lp_space_time: f64,
    /// `sup_k` of the slice `L^{q+1}` norm.
    pub lq1_sup: f64,
    /// Space-time `L^p` norm of the gradient.
    pub w1p_seminorm: f64,
    pub gagliardo_m: f64,
    pub lm_space_time: f64,
}

pub fn norms(u: &GridFunction, p: f64, q: f64) -> NormReport {
    let n = u.grid.dim() as f64;
    let m = p * (n + q + 1.0) / n;
    let cell = u.grid.cell_volume();
    let dim = u.grid.dim();

    let mut lq1_sup: f64 = 0.0;
    for k in 0..u.n_times() {
        lq1_sup = lq1_sup.max(u.slice_norm(k, q + 1.0));
    }

    let mut grad_acc = 0.0;
    for k in 1..u.n_times() {
        let grad = u.gradient(k);
        for i in 0..u.nodes() {
            let g = vec_norm(&grad[i * u.n_comp * dim..(i + 1) * u.n_comp * dim]);
            grad_acc += g.powf(p) * cell;
        }
    }

    NormReport {
        lp_space_time: u.space_time_norm(p),
        lq1_sup,
        w1p_seminorm: (grad_acc * u.h_t).powf(1.0 / p),
        gagliardo_m: m,
        lm_space_time: u.space_time_norm(m),
    }
}

/// Exponential-kernel time mollification: the exact solution of
/// `∂_t m = -(m - v)/h`, `m(0) = v_o`, integrated exactly per step of the
/// piecewise-constant `v`.
pub fn landes_mollify(v: &GridFunction, v_o: &[f64], h: f64) -> Result<GridFunction> {
    if !(h > 0.0) {
        return Err(Error::Field(format!("mollification width must be positive, got {h}")));
    }
    if v_o.len() != v.slice_len() {
        return Err(Error::Field("initial value size mismatch".into()));
    }
    let mut m = GridFunction::zeros(v.grid.clone(), v.n_comp, v.h_t, v.n_times());
    m.boundary = v.boundary.clone();
    m.set_slice(0, v_o);
    let a = (-v.h_t / h).exp();
    for k in 1..v.n_times() {
        let prev: Vec<f64> = m.at(k - 1).to_vec();
        let cur = v.at(k);
        let out = m.at_mut(k);
        for i in 0..out.len() {
            out[i] = a * prev[i] + (1.0 - a) * cur[i];
        }
    }
    Ok(m)
}

/// Largest relative residual of the mollification ODE in integral form over
/// the steps: `m_k - m_{k-1} + (1/h)∫(m - v) ds`, with the step integral of
/// `m` evaluated in closed form. Analytically zero.
pub fn landes_ode_residual(v: &GridFunction, m: &GridFunction, h: f64) -> f64 {
    let a = (-v.h_t / h).exp();
    let mut worst: f64 = 0.0;
    for k in 1..v.n_times() {
        let prev = m.at(k - 1);
        let cur = m.at(k);
        let vk = v.at(k);
        for i in 0..cur.len() {
            // ∫ m ds over the step = v_k h_t + (m_{k-1} - v_k) h (1 - a)
            let int_m = vk[i] * v.h_t + (prev[i] - vk[i]) * h * (1.0 - a);
            let res = (cur[i] - prev[i]) + (int_m - vk[i] * v.h_t) / h;
            let scale = 1.0 + cur[i].abs() + prev[i].abs() + vk[i].abs();
            worst = worst.max(res.abs() / scale);
        }
    }
    worst
}

/// Both sides of the mollifier contraction bound in the time `L^r` norm of
/// slice `L^2` norms: returns `(‖m‖, ‖v‖ + tail·‖v_o‖)`.
pub fn landes_lr_bound(v: &GridFunction, m: &GridFunction, v_o: &[f64], h: f64, r: f64) -> (f64, f64) {
    let cell = v.grid.cell_volume();
    let time_lr = |f: &GridFunction| -> f64 {
        let mut acc = 0.0;
        for k in 1..f.n_times() {
            acc += slice_norm(f.at(k), f.n_comp, cell, 2.0).powf(r) * f.h_t;
        }
        acc.powf(1.0 / r)
    };
    let t_o = v.final_time();
    let tail = (h / r * (1.0 - (-t_o * r / h).exp())).powf(1.0 / r);
    let vo_norm = slice_norm(v_o, v.n_comp, cell, 2.0);
    (time_lr(m), time_lr(v) + tail * vo_norm)
}

/// Forward sliding-window average `(1/h)∫_t^{t+h} v ds` with `h` a multiple
/// of the time step; trapezoid weights inside the window, zero extension
/// past the final state.
pub fn steklov_forward(v: &GridFunction, h: f64) -> Result<GridFunction> {
    if !(h > 0.0) {
        return Err(Error::Field(format!("Steklov window must be positive, got {h}")));
    }
    let m = (h / v.h_t).round();
    if m < 1.0 || (h / v.h_t - m).abs() > 1e-9 * m {
        return Err(Error::Field(format!(
            "Steklov window {h} must be a multiple of the time step {}",
            v.h_t
        )));
    }
    let m = m as usize;
    let mut out = GridFunction::zeros(v.grid.clone(), v.n_comp, v.h_t, v.n_times());
    out.boundary = v.boundary.clone();
    let len = v.slice_len();
    let zero = vec![0.0; len];
    let state = |k: usize| -> &[f64] { if k < v.n_times() { v.at(k) } else { &zero } };
    for k in 0..v.n_times() {
        let mut acc = vec![0.0; len];
        for j in 0..=m {
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            let s = state(k + j);
            for i in 0..len {
                acc[i] += w * s[i];
            }
        }
        let inv = 1.0 / m as f64;
        for i in 0..len {
            acc[i] *= inv;
        }
        out.set_slice(k, &acc);
    }
    Ok(out)
}

/// Largest deviation between the forward difference of the Steklov average
/// and the window telescope `(v̄(t+h) - v̄(t))/h` of the matching midpoint
/// samples. Zero by telescoping.
pub fn steklov_derivative_residual(v: &GridFunction, s: &GridFunction, h: f64) -> f64 {
    let m = (h / v.h_t).round() as usize;
    let len = v.slice_len();
    let zero = vec![0.0; len];
    let state = |k: usize| -> &[f64] { if k < v.n_times() { v.at(k) } else { &zero } };
    let mut worst: f64 = 0.0;
    for k in 0..v.n_times() - 1 {
        let a = s.at(k);
        let b = s.at(k + 1);
        for i in 0..len {
            let fd = (b[i] - a[i]) / v.h_t;
            let lo = 0.5 * (state(k)[i] + state(k + 1)[i]);
            let hi = 0.5 * (state(k + m)[i] + state(k + m + 1)[i]);
            let tel = (hi - lo) / h;
            worst = worst.max((fd - tel).abs() / (1.0 + fd.abs()));
        }
    }
    worst
}

/// Hardy pair at one time: `(∫_{E^t} |(u-u_*)/dist|^p, ∫ |D(u-u_*)|^p)`.
/// Distances below half a cell are floored at `h/2`.
pub fn hardy_quotient(
    u: &GridFunction,
    slice: &SliceGrid,
    k: usize,
    p: f64,
) -> (f64, f64) {
    let cell = u.grid.cell_volume();
    let h = u.grid.spacing();
    let dim = u.grid.dim();
    let vals = u.at(k);
    let mut diff = vec![0.0; vals.len()];
    for i in 0..vals.len() {
        diff[i] = vals[i] - u.boundary[i];
    }
    let mut quotient = 0.0;
    for i in 0..u.nodes() {
        if !slice.indicator[i] {
            continue;
        }
        let d = slice.dist[i].max(0.5 * h);
        let m = vec_norm(&diff[i * u.n_comp..(i + 1) * u.n_comp]);
        quotient += (m / d).powf(p) * cell;
    }
    let mut grad = 0.0;
    let mut buf = vec![0.0; u.n_comp * dim];
    for (flat, idx) in u.grid.iter_nodes() {
        node_gradient(&u.grid, &diff, u.n_comp, flat, &idx, &mut buf);
        grad += vec_norm(&buf).powf(p) * cell;
    }
    (quotient, grad)
}

/// Pieces of the interpolation bound
/// `∬|u|^m ≤ C (sup_t ‖u‖_{q+1})^{p(q+1)/n} ∬|Du|^p + C`:
/// returns `(lhs, product)` so the harness can fit and re-check `C`.
pub fn gagliardo_terms(u: &GridFunction, p: f64, q: f64) -> (f64, f64) {
    let rep = norms(u, p, q);
    let n = u.grid.dim() as f64;
    let lhs = rep.lm_space_time.powf(rep.gagliardo_m);
    let product =
        rep.lq1_sup.powf(p * (q + 1.0) / n) * rep.w1p_seminorm.powf(p);
    (lhs, product)
}
