//! Time-varying spatial domains and the geometric quantities their
//! admissibility conditions are phrased in: rasterized slices, exact
//! distance transforms, complementary excess, measure density, one-sided
//! growth bounds, and the distance-based cut-off functions.

use std::sync::Arc;

use crate::grid::Grid;
use crate::{Error, Result};

/// Membership predicate for a time slice, evaluated at node centers.
pub type SliceRule = Arc<dyn Fn(&[f64], f64) -> bool + Send + Sync>;

/// Time-constant spatial region used by the cylinder generator.
#[derive(Clone, Debug)]
pub enum Region {
    /// The whole bounding box.
    All,
    Rect { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Rect { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(&xi, (&l, &u))| xi > l && xi < u)
            }
            Region::Ball { center, radius } => dist2(x, center) < radius * radius,
        }
    }
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Generator for the family of slices, tagged by how the domain evolves.
#[derive(Clone)]
pub enum DomainKind {
    /// Time-constant slice.
    Cylinder(Region),
    /// Ball of radius `r0 + rate*t` (nondecreasing for `rate >= 0`).
    ExpandingBall { center: Vec<f64>, r0: f64, rate: f64 },
    /// Ball of radius `r0 - rate*t`, clamped at zero.
    ShrinkingBall { center: Vec<f64>, r0: f64, rate: f64 },
    /// `|x - center| < k_scale * (T - t)^lambda`: the power-type pinch with
    /// the literature's window shifted so the domain closes at `t = T`.
    Petrovskii { center: Vec<f64>, lambda: f64, k_scale: f64 },
    Custom(SliceRule),
}

impl std::fmt::Debug for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainKind::Cylinder(r) => write!(f, "Cylinder({r:?})"),
            DomainKind::ExpandingBall { center, r0, rate } => {
                write!(f, "ExpandingBall(c={center:?}, r0={r0}, rate={rate})")
            }
            DomainKind::ShrinkingBall { center, r0, rate } => {
                write!(f, "ShrinkingBall(c={center:?}, r0={r0}, rate={rate})")
            }
            DomainKind::Petrovskii { center, lambda, k_scale } => {
                write!(f, "Petrovskii(c={center:?}, lambda={lambda}, k={k_scale})")
            }
            DomainKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Rule-based family of slices `E^t` inside a fixed bounding box, for
/// `t` in `[0, T)`.
#[derive(Clone, Debug)]
pub struct TimeSlicedDomain {
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub t_final: f64,
    pub kind: DomainKind,
}

impl TimeSlicedDomain {
    pub fn new(box_lo: &[f64], box_hi: &[f64], t_final: f64, kind: DomainKind) -> Result<Self> {
        if box_lo.len() != box_hi.len() || box_lo.is_empty() {
            return Err(Error::Domain("bounding box corners must match in dimension".into()));
        }
        if box_lo.iter().zip(box_hi).any(|(l, u)| !(u > l)) {
            return Err(Error::Domain("bounding box is empty".into()));
        }
        if !(t_final > 0.0) {
            return Err(Error::Domain(format!("final time must be positive, got {t_final}")));
        }
        Ok(TimeSlicedDomain {
            box_lo: box_lo.to_vec(),
            box_hi: box_hi.to_vec(),
            t_final,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.box_lo.len()
    }

    /// Slice membership of a point at time `t`.
    pub fn contains(&self, x: &[f64], t: f64) -> bool {
        match &self.kind {
            DomainKind::Cylinder(region) => region.contains(x),
            DomainKind::ExpandingBall { center, r0, rate } => {
                let r = r0 + rate * t;
                r > 0.0 && dist2(x, center) < r * r
            }
            DomainKind::ShrinkingBall { center, r0, rate } => {
                let r = r0 - rate * t;
                r > 0.0 && dist2(x, center) < r * r
            }
            DomainKind::Petrovskii { center, lambda, k_scale } => {
                let gap = self.t_final - t;
                if gap <= 0.0 {
                    return false;
                }
                let r = k_scale * gap.powf(*lambda);
                dist2(x, center) < r * r
            }
            DomainKind::Custom(rule) => rule(x, t),
        }
    }

    pub fn grid(&self, h_x: f64) -> Result<Grid> {
        Grid::new(&self.box_lo, &self.box_hi, h_x)
    }
}

/// Rasterized slice: membership indicator plus the distance field
/// `dist(x, complement)` where the complement includes everything outside
/// the bounding box. Zero exactly at complement nodes.
#[derive(Clone, Debug)]
pub struct SliceGrid {
    pub grid: Grid,
    pub indicator: Vec<bool>,
    pub dist: Vec<f64>,
}

impl SliceGrid {
    fn from_indicator(grid: Grid, indicator: Vec<bool>) -> Self {
        let node_dist = edt_to_sites(&grid, &indicator, false);
        let mut dist = vec![0.0; grid.len()];
        let mut x = vec![0.0; grid.dim()];
        for i in 0..grid.len() {
            if indicator[i] {
                grid.node_into(i, &mut x);
                dist[i] = node_dist[i].min(grid.face_distance(&x));
            }
        }
        SliceGrid { grid, indicator, dist }
    }

    pub fn member_count(&self) -> usize {
        self.indicator.iter().filter(|&&b| b).count()
    }
}

/// Rasterizes the slice at time `t` on the domain's box with spacing `h_x`.
pub fn rasterize(domain: &TimeSlicedDomain, t: f64, h_x: f64) -> Result<SliceGrid> {
    if !(0.0 <= t && t < domain.t_final) {
        return Err(Error::Domain(format!(
            "slice time {t} outside [0, {})",
            domain.t_final
        )));
    }
    let grid = domain.grid(h_x)?;
    let mut indicator = vec![false; grid.len()];
    let mut x = vec![0.0; grid.dim()];
    for i in 0..grid.len() {
        grid.node_into(i, &mut x);
        indicator[i] = domain.contains(&x, t);
    }
    Ok(SliceGrid::from_indicator(grid, indicator))
}

/// Exact Euclidean distance (in physical units) from every node to the
/// nearest node with `indicator == sites_value`, by the separable
/// lower-envelope squared-distance transform. Infinite where no site exists.
pub fn edt_to_sites(grid: &Grid, indicator: &[bool], sites_value: bool) -> Vec<f64> {
    let n = grid.len();
    let mut sq: Vec<f64> = indicator
        .iter()
        .map(|&b| if b == sites_value { 0.0 } else { f64::INFINITY })
        .collect();
    let shape = grid.shape().to_vec();
    let strides = grid.strides().to_vec();
    let dim = shape.len();

    let mut line = Vec::new();
    let mut out = Vec::new();
    for d in 0..dim {
        let m = shape[d];
        if m == 1 {
            continue;
        }
        let stride = strides[d];
        // iterate all 1-D lines along axis d
        let lines = n / m;
        for l in 0..lines {
            // base index of this line: decompose l over the other axes
            let mut base = 0usize;
            let mut rem = l;
            for dd in 0..dim {
                if dd == d {
                    continue;
                }
                let extent = shape[dd];
                let idx = rem % extent;
                rem /= extent;
                base += idx * strides[dd];
            }
            line.clear();
            line.extend((0..m).map(|i| sq[base + i * stride]));
            dt_1d(&line, &mut out);
            for i in 0..m {
                sq[base + i * stride] = out[i];
            }
        }
    }
    let h = grid.spacing();
    sq.iter().map(|&s| if s.is_finite() { h * s.sqrt() } else { f64::INFINITY }).collect()
}

/// 1-D squared distance transform `d[p] = min_q (p-q)^2 + f[q]` via the
/// lower envelope of parabolas. Distances in index units.
fn dt_1d(f: &[f64], d: &mut Vec<f64>) {
    let m = f.len();
    d.clear();
    d.resize(m, f64::INFINITY);
    let mut v: Vec<usize> = Vec::with_capacity(m); // parabola vertices
    let mut z: Vec<f64> = Vec::with_capacity(m + 1); // envelope breakpoints
    for q in 0..m {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q];
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.clear();
                    z.push(f64::NEG_INFINITY);
                    z.push(f64::INFINITY);
                    break;
                }
                Some(&r) => {
                    let s = ((fq + (q * q) as f64) - (f[r] + (r * r) as f64))
                        / (2.0 * (q as f64 - r as f64));
                    if s <= z[v.len() - 1] {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        *z.last_mut().unwrap() = s;
                        z.push(f64::INFINITY);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        return;
    }
    let mut k = 0usize;
    for p in 0..m {
        while z[k + 1] < p as f64 {
            k += 1;
        }
        let r = v[k];
        let dp = p as f64 - r as f64;
        d[p] = dp * dp + f[r];
    }
}

/// Complementary excess between two slices: the farthest any complement node
/// of the later slice sits from the complement node set of the earlier one.
/// Node-to-node distances; infinite when the earlier complement is empty but
/// the later one is not.
pub fn complementary_excess(
    domain: &TimeSlicedDomain,
    s: f64,
    t: f64,
    h_x: f64,
) -> Result<f64> {
    if s > t {
        return Err(Error::Domain(format!("excess requires s <= t, got s={s}, t={t}")));
    }
    let slice_s = rasterize(domain, s, h_x)?;
    let slice_t = rasterize(domain, t, h_x)?;
    Ok(excess_between(&slice_s, &slice_t))
}

/// Excess computed on already-rasterized slices (`slice_s` earlier).
pub fn excess_between(slice_s: &SliceGrid, slice_t: &SliceGrid) -> f64 {
    let comp_t: Vec<usize> =
        (0..slice_t.indicator.len()).filter(|&i| !slice_t.indicator[i]).collect();
    if comp_t.is_empty() {
        return 0.0;
    }
    if slice_s.indicator.iter().all(|&b| b) {
        return f64::INFINITY;
    }
    let dist_s = edt_to_sites(&slice_s.grid, &slice_s.indicator, false);
    comp_t.iter().map(|&i| dist_s[i]).fold(0.0, f64::max)
}

/// Inner parallel set: keeps the nodes at distance `> sigma` from the
/// complement, with the distance field recomputed for the shrunk set.
pub fn inner_parallel_set(slice: &SliceGrid, sigma: f64) -> Result<SliceGrid> {
    if sigma < 0.0 {
        return Err(Error::Domain(format!("inner parallel set needs sigma >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(slice.clone());
    }
    let indicator: Vec<bool> = slice.dist.iter().map(|&d| d > sigma).collect();
    Ok(SliceGrid::from_indicator(slice.grid.clone(), indicator))
}

/// Outcome of the measure density check.
#[derive(Clone, Debug)]
pub struct DensityVerdict {
    pub pass: bool,
    /// Smallest complement volume fraction observed over boundary nodes and radii.
    pub min_ratio: f64,
    pub worst_node: Option<usize>,
    pub worst_radius: Option<f64>,
    pub boundary_nodes: usize,
}

/// Checks the complement volume fraction `|complement ∩ B_r(x0)| / |B_r|`
/// against `delta` at every discrete boundary node and every radius.
/// Everything outside the bounding box counts as complement.
pub fn measure_density_check(
    domain: &TimeSlicedDomain,
    t: f64,
    delta: f64,
    radii: &[f64],
    h_x: f64,
) -> Result<DensityVerdict> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain(format!("density constant must lie in (0,1), got {delta}")));
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Domain("density radii must be positive".into()));
    }
    let slice = rasterize(domain, t, h_x)?;
    let grid = &slice.grid;
    let dim = grid.dim();
    let h = grid.spacing();
    let cell = grid.cell_volume();

    let boundary = boundary_nodes(&slice);
    let mut verdict = DensityVerdict {
        pass: true,
        min_ratio: f64::INFINITY,
        worst_node: None,
        worst_radius: None,
        boundary_nodes: boundary.len(),
    };
    if boundary.is_empty() {
        verdict.min_ratio = 1.0;
        return Ok(verdict); // vacuous
    }

    let mut x0 = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    for &b in &boundary {
        grid.node_into(b, &mut x0);
        let idx0 = grid.unravel(b);
        for &r in radii {
            let ball_vol = unit_ball_volume(dim) * r.powi(dim as i32);
            let reach = (r / h).ceil() as isize + 1;
            let mut inside_nodes = 0usize;
            let mut comp_nodes = 0usize;
            // scan the sub-box around x0
            let mut offs = vec![-reach; dim];
            'scan: loop {
                let mut flat = 0usize;
                let mut ok = true;
                for d in 0..dim {
                    let i = idx0[d] as isize + offs[d];
                    if i < 0 || i >= grid.shape()[d] as isize {
                        ok = false;
                        break;
                    }
                    flat += (i as usize) * grid.strides()[d];
                }
                if ok {
                    grid.node_into(flat, &mut x);
                    if dist2(&x, &x0) < r * r {
                        inside_nodes += 1;
                        if !slice.indicator[flat] {
                            comp_nodes += 1;
                        }
                    }
                }
                // odometer
                let mut d = dim;
                loop {
                    if d == 0 {
                        break 'scan;
                    }
                    d -= 1;
                    offs[d] += 1;
                    if offs[d] <= reach {
                        break;
                    }
                    offs[d] = -reach;
                }
            }
            // complement measure: stored complement nodes plus the part of
            // the ball beyond the box (entirely complement)
            let outside_vol = (ball_vol - inside_nodes as f64 * cell).max(0.0);
            let ratio = (comp_nodes as f64 * cell + outside_vol) / ball_vol;
            if ratio < verdict.min_ratio {
                verdict.min_ratio = ratio;
                verdict.worst_node = Some(b);
                verdict.worst_radius = Some(r);
            }
        }
    }
    verdict.pass = verdict.min_ratio >= delta;
    Ok(verdict)
}

/// Member nodes with a complement face-neighbor, or sitting in the outermost
/// node layer (where the slice meets the box boundary).
pub fn boundary_nodes(slice: &SliceGrid) -> Vec<usize> {
    let grid = &slice.grid;
    let dim = grid.dim();
    let mut out = Vec::new();
    for (flat, idx) in grid.iter_nodes() {
        if !slice.indicator[flat] {
            continue;
        }
        let mut is_boundary = false;
        for d in 0..dim {
            if idx[d] == 0 || idx[d] + 1 == grid.shape()[d] {
                is_boundary = true;
                break;
            }
            if !slice.indicator[flat - grid.strides()[d]]
                || !slice.indicator[flat + grid.strides()[d]]
            {
                is_boundary = true;
                break;
            }
        }
        if is_boundary {
            out.push(flat);
        }
    }
    out
}

pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => {
            // Γ-recursion: V_n = V_{n-2} · 2π/n
            let mut v = if dim % 2 == 0 { std::f64::consts::PI } else { 2.0 };
            let mut k = if dim % 2 == 0 { 2 } else { 1 };
            while k < dim {
                k += 2;
                v *= 2.0 * std::f64::consts::PI / k as f64;
            }
            v
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One-sided growth bound on the complementary excess: either a modulus of
/// continuity `ω` or a Sobolev path `ρ` with its integrability exponent.
#[derive(Clone)]
pub enum GrowthProfile {
    Modulus { omega: ScalarFn },
    Sobolev { rho: ScalarFn, r: f64 },
}

impl GrowthProfile {
    pub fn zero() -> Self {
        GrowthProfile::Modulus { omega: Arc::new(|_| 0.0) }
    }

    pub fn linear(c: f64) -> Self {
        GrowthProfile::Modulus { omega: Arc::new(move |tau| c * tau) }
    }

    /// `ρ(t) = k (T - t)^λ`, the path matched to the power-type pinch.
    pub fn power_path(k: f64, lambda: f64, t_final: f64, r: f64) -> Self {
        GrowthProfile::Sobolev {
            rho: Arc::new(move |t| k * (t_final - t).max(0.0).powf(lambda)),
            r,
        }
    }

    pub fn linear_path(r0: f64, rate: f64, r: f64) -> Self {
        GrowthProfile::Sobolev { rho: Arc::new(move |t| r0 - rate * t), r }
    }

    /// Bound on the excess between times `s <= t`.
    pub fn bound(&self, s: f64, t: f64) -> f64 {
        match self {
            GrowthProfile::Modulus { omega } => omega(t - s),
            GrowthProfile::Sobolev { rho } => (rho(t) - rho(s)).abs(),
        }
    }

    pub fn is_modulus(&self) -> bool {
        matches!(self, GrowthProfile::Modulus { .. })
    }

    pub fn require_modulus(&self) -> Result<&ScalarFn> {
        match self {
            GrowthProfile::Modulus { omega } => Ok(omega),
            GrowthProfile::Sobolev { .. } => Err(Error::Domain(
                "growth profile variant mismatch: modulus requested but a Sobolev path is configured"
                    .into(),
            )),
        }
    }
}

impl std::fmt::Debug for GrowthProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GrowthProfile::Modulus { .. } => write!(f, "Modulus(..)"),
            GrowthProfile::Sobolev { r, .. } => write!(f, "Sobolev(r={r}, ..)"),
        }
    }
}

/// Inverse of a nondecreasing modulus by bisection on `[0, t_max]`.
/// Returns `t_max` when `omega(t_max) < y`.
pub fn modulus_inverse(omega: &ScalarFn, y: f64, t_max: f64) -> f64 {
    if omega(t_max) < y {
        return t_max;
    }
    let (mut a, mut b) = (0.0, t_max);
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if omega(mid) < y {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[derive(Clone, Debug)]
pub struct GrowthVerdict {
    pub pass: bool,
    /// Largest `excess - bound` over the sampled pairs (negative = margin).
    pub max_violation: f64,
    /// Discretization slack the verdict was judged against (2 h_x).
    pub slack: f64,
    pub worst_pair: Option<(f64, f64)>,
}

/// Checks the configured growth bound on all ordered pairs of the sampled
/// times, with a `2 h_x` slack for the node quantization of the excess.
pub fn growth_condition_check(
    domain: &TimeSlicedDomain,
    profile: &GrowthProfile,
    times: &[f64],
    h_x: f64,
) -> Result<GrowthVerdict> {
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let slices: Vec<SliceGrid> =
        sorted.iter().map(|&t| rasterize(domain, t, h_x)).collect::<Result<_>>()?;
    let slack = 2.0 * h_x;
    let mut verdict = GrowthVerdict {
        pass: true,
        max_violation: f64::NEG_INFINITY,
        slack,
        worst_pair: None,
    };
    for i in 0..sorted.len() {
        for j in (i + 1)..sorted.len() {
            let e = excess_between(&slices[i], &slices[j]);
            let viol = e - profile.bound(sorted[i], sorted[j]);
            if viol > verdict.max_violation {
                verdict.max_violation = viol;
                verdict.worst_pair = Some((sorted[i], sorted[j]));
            }
        }
    }
    if verdict.max_violation == f64::NEG_INFINITY {
        verdict.max_violation = 0.0;
    }
    verdict.pass = verdict.max_violation <= slack;
    Ok(verdict)
}

/// Integrability exponent for the Sobolev path, by the three-branch case
/// split in terms of `(n, p, q)`.
pub fn r_exponent(n: usize, p: f64, q: f64) -> Result<f64> {
    let n = n as f64;
    let threshold = (n + 1.0) * (q + 1.0) / (n + q + 1.0);
    let tol = 1e-12 * threshold;
    if p < threshold - tol {
        return Err(Error::Domain(format!(
            "r exponent needs p >= {threshold}, got p = {p}"
        )));
    }
    if (p - threshold).abs() <= tol {
        return Ok(f64::INFINITY);
    }
    if p >= q + 1.0 {
        Ok(p / (p - 1.0))
    } else {
        Ok((p * (n + q + 1.0) - n * (q + 1.0)) / (p * (n + q + 1.0) - (n + 1.0) * (q + 1.0)))
    }
}

/// Piecewise-linear профile of the distance cut-off: 0 below 1, ramp on
/// (1,2), 1 above 2.
fn eta_tilde(r: f64) -> f64 {
    (r - 1.0).clamp(0.0, 1.0)
}

/// Distance-scaled cut-off `η_σ = η̃(dist/σ)` on a rasterized slice.
pub fn eta_sigma(slice: &SliceGrid, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("eta_sigma needs sigma > 0, got {sigma}")));
    }
    Ok(slice.dist.iter().map(|&d| eta_tilde(d / sigma)).collect())
}

/// Checks that the averaging window `h` is admissible for `σ`: the excess
/// bound over any gap inside the window must stay below `σ/2`.
pub fn eta_window_admissible(profile: &GrowthProfile, sigma: f64, h: f64, t: f64) -> bool {
    if !(h > 0.0) {
        return false;
    }
    match profile {
        GrowthProfile::Modulus { omega } => omega(h) <= 0.5 * sigma,
        GrowthProfile::Sobolev { rho, .. } => {
            let samples = 64;
            (0..=samples).all(|j| {
                let s = (t - h) + h * j as f64 / samples as f64;
                (rho(t) - rho(s.max(0.0))).abs() <= 0.5 * sigma
            })
        }
    }
}

/// Backward-in-time averaged cut-off raised to the `1/(q+1)` power:
/// `((1/h) ∫_{t-h}^t η_σ ds)^{1/(q+1)}`, with `η_σ` extended by zero for
/// negative times. The window integral is a right-endpoint step sum with
/// substep `dt_sub` (`h` must be a multiple), which makes the discrete time
/// difference of the `(q+1)`-th power an exact window telescope.
pub fn eta_sigma_h(
    domain: &TimeSlicedDomain,
    profile: &GrowthProfile,
    sigma: f64,
    h: f64,
    t: f64,
    h_x: f64,
    q: f64,
    dt_sub: f64,
) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("eta_sigma_h needs sigma > 0, got {sigma}")));
    }
    if !eta_window_admissible(profile, sigma, h, t) {
        return Err(Error::Domain(format!(
            "averaging window h = {h} inadmissible for sigma = {sigma} under the configured growth profile"
        )));
    }
    let k = (h / dt_sub).round();
    if k < 1.0 || (h / dt_sub - k).abs() > 1e-9 * k {
        return Err(Error::Domain(format!(
            "window {h} must be a positive multiple of the substep {dt_sub}"
        )));
    }
    let k = k as usize;
    let grid = domain.grid(h_x)?;
    let mut acc = vec![0.0; grid.len()];
    for j in 0..k {
        let s = t - j as f64 * dt_sub;
        if s < 0.0 {
            continue; // zero extension
        }
        let slice = rasterize(domain, s, h_x)?;
        let eta = eta_sigma(&slice, sigma)?;
        for (a, e) in acc.iter_mut().zip(&eta) {
            *a += e;
        }
    }
    let inv = 1.0 / k as f64;
    Ok(acc.iter().map(|&a| (a * inv).powf(1.0 / (q + 1.0))).collect())
}

/// Fraction of sampled space-time cells whose spatial node either sits on the
/// discrete slice boundary or flips membership to the next sample time.
/// A numerical proxy for the lateral boundary having zero space-time measure.
pub fn boundary_cell_fraction(
    domain: &TimeSlicedDomain,
    h_x: f64,
    n_times: usize,
) -> Result<f64> {
    let mut crossed = 0usize;
    let mut total = 0usize;
    let dt = domain.t_final / n_times as f64;
    let mut prev: Option<SliceGrid> = None;
    for k in 0..n_times {
        let t = k as f64 * dt;
        let slice = rasterize(domain, t, h_x)?;
        let bnodes: std::collections::HashSet<usize> =
            boundary_nodes(&slice).into_iter().collect();
        for i in 0..slice.indicator.len() {
            total += 1;
            let flips = prev.as_ref().map_or(false, |p| p.indicator[i] != slice.indicator[i]);
            if (slice.indicator[i] && bnodes.contains(&i)) || flips {
                crossed += 1;
            }
        }
        prev = Some(slice);
    }
    Ok(crossed as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box_domain(kind: DomainKind) -> TimeSlicedDomain {
        TimeSlicedDomain::new(&[0.0, 0.0], &[1.0, 1.0], 1.0, kind).unwrap()
    }

    fn centered_domain(kind: DomainKind, t_final: f64) -> TimeSlicedDomain {
        TimeSlicedDomain::new(&[-1.0, -1.0], &[1.0, 1.0], t_final, kind).unwrap()
    }

    #[test]
    fn rasterize_full_cylinder() {
        let dom = unit_box_domain(DomainKind::Cylinder(Region::All));
        let slice = rasterize(&dom, 0.3, 1.0 / 16.0).unwrap();
        assert!(slice.indicator.iter().all(|&b| b));
        // distance equals distance to the box faces
        let mut x = vec![0.0; 2];
        for i in 0..slice.grid.len() {
            slice.grid.node_into(i, &mut x);
            let expect = slice.grid.face_distance(&x);
            assert!((slice.dist[i] - expect).abs() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn rasterize_petrovskii_rule() {
        // lambda = 1, K = 1, |t - T| = 0.5: membership iff |x| < 0.5
        let dom = centered_domain(
            DomainKind::Petrovskii { center: vec![0.0, 0.0], lambda: 1.0, k_scale: 1.0 },
            1.0,
        );
        let slice = rasterize(&dom, 0.5, 1.0 / 8.0).unwrap();
        let mut x = vec![0.0; 2];
        for i in 0..slice.grid.len() {
            slice.grid.node_into(i, &mut x);
            assert_eq!(slice.indicator[i], x[0] * x[0] + x[1] * x[1] < 0.25, "node {i}");
        }
    }

    #[test]
    fn rasterize_shrinking_ball_rule() {
        let dom = unit_box_domain(DomainKind::ShrinkingBall {
            center: vec![0.5, 0.5],
            r0: 0.8,
            rate: 0.3,
        });
        let slice = rasterize(&dom, 1.0 - 1e-12, 1.0 / 8.0).unwrap();
        let mut x = vec![0.0; 2];
        for i in 0..slice.grid.len() {
            slice.grid.node_into(i, &mut x);
            let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
            assert_eq!(slice.indicator[i], r2 < 0.25, "node {i}");
        }
    }

    #[test]
    fn rasterize_rejects_bad_inputs() {
        let dom = unit_box_domain(DomainKind::Cylinder(Region::All));
        assert!(rasterize(&dom, 1.5, 0.125).is_err());
        assert!(rasterize(&dom, 0.0, -0.125).is_err());
        assert!(TimeSlicedDomain::new(&[0.0], &[0.0], 1.0, DomainKind::Cylinder(Region::All))
            .is_err());
    }

    #[test]
    fn excess_zero_on_cylinder_and_expanding() {
        let h = 1.0 / 16.0;
        let cyl = unit_box_domain(DomainKind::Cylinder(Region::Ball {
            center: vec![0.5, 0.5],
            radius: 0.3,
        }));
        assert_eq!(complementary_excess(&cyl, 0.1, 0.9, h).unwrap(), 0.0);
        let grow = unit_box_domain(DomainKind::ExpandingBall {
            center: vec![0.5, 0.5],
            r0: 0.2,
            rate: 0.2,
        });
        assert_eq!(complementary_excess(&grow, 0.1, 0.9, h).unwrap(), 0.0);
    }

    #[test]
    fn excess_nested_balls_matches_rate() {
        let h = 1.0 / 32.0;
        let c = 0.3;
        let dom = centered_domain(
            DomainKind::ShrinkingBall { center: vec![0.0, 0.0], r0: 0.8, rate: c },
            1.0,
        );
        for (s, t) in [(0.0, 0.5), (0.25, 0.75), (0.0, 0.9)] {
            let e = complementary_excess(&dom, s, t, h).unwrap();
            let exact = c * (t - s);
            assert!((e - exact).abs() <= 2.0 * h, "s={s} t={t}: {e} vs {exact}");
        }
    }

    #[test]
    fn excess_power_pinch_closed_form() {
        let h = 1.0 / 64.0;
        let (lambda, k) = (0.5, 0.8);
        let t_final = 1.0;
        let dom = centered_domain(
            DomainKind::Petrovskii { center: vec![0.0, 0.0], lambda, k_scale: k },
            t_final,
        );
        for (s, t) in [(0.0, 0.4), (0.3, 0.7), (0.5, 0.95)] {
            let e = complementary_excess(&dom, s, t, h).unwrap();
            let exact = k * ((t_final - s).powf(lambda) - (t_final - t).powf(lambda));
            assert!((e - exact).abs() <= 2.0 * h, "s={s} t={t}: {e} vs {exact}");
        }
    }

    #[test]
    fn inner_parallel_identity_and_ball() {
        let dom = centered_domain(
            DomainKind::Cylinder(Region::Ball { center: vec![0.0, 0.0], radius: 1.0 - 1e-9 }),
            1.0,
        );
        let h = 1.0 / 32.0;
        let slice = rasterize(&dom, 0.0, h).unwrap();
        let same = inner_parallel_set(&slice, 0.0).unwrap();
        assert_eq!(same.indicator, slice.indicator);

        let shrunk = inner_parallel_set(&slice, 0.3).unwrap();
        let mut x = vec![0.0; 2];
        for i in 0..shrunk.grid.len() {
            shrunk.grid.node_into(i, &mut x);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if r < 0.7 - 1.5 * h {
                assert!(shrunk.indicator[i], "inside node {i} dropped");
            }
            if r > 0.7 + 1.5 * h {
                assert!(!shrunk.indicator[i], "outside node {i} kept");
            }
        }

        let max_dist = slice.dist.iter().cloned().fold(0.0, f64::max);
        let empty = inner_parallel_set(&slice, max_dist).unwrap();
        assert_eq!(empty.member_count(), 0);
        assert!(inner_parallel_set(&slice, -0.1).is_err());
    }

    #[test]
    fn inner_parallel_composes() {
        let dom = centered_domain(
            DomainKind::Cylinder(Region::Ball { center: vec![0.1, -0.2], radius: 0.75 }),
            1.0,
        );
        let h = 1.0 / 32.0;
        let slice = rasterize(&dom, 0.0, h).unwrap();
        let (s1, s2) = (0.15, 0.2);
        let twice = inner_parallel_set(&inner_parallel_set(&slice, s1).unwrap(), s2).unwrap();
        let once = inner_parallel_set(&slice, s1 + s2).unwrap();
        for i in 0..once.grid.len() {
            if twice.indicator[i] != once.indicator[i] {
                // mismatches may only sit in a one-cell band around the offset
                assert!(
                    (slice.dist[i] - (s1 + s2)).abs() <= h,
                    "node {i}: dist {} vs band {}",
                    slice.dist[i],
                    s1 + s2
                );
            }
        }
    }

    #[test]
    fn density_half_space_passes() {
        let rule: SliceRule = Arc::new(|x: &[f64], _| x[0] < 0.5);
        let dom = unit_box_domain(DomainKind::Custom(rule));
        let v = measure_density_check(&dom, 0.0, 0.4, &[0.1, 0.2], 1.0 / 64.0).unwrap();
        assert!(v.pass, "min ratio {}", v.min_ratio);
        assert!(v.min_ratio >= 0.4);
    }

    #[test]
    fn density_ball_exterior_passes() {
        let rule: SliceRule =
            Arc::new(|x: &[f64], _| (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) > 0.09);
        let dom = unit_box_domain(DomainKind::Custom(rule));
        let v = measure_density_check(&dom, 0.0, 0.4, &[0.05, 0.1], 1.0 / 64.0).unwrap();
        assert!(v.pass, "min ratio {}", v.min_ratio);
    }

    #[test]
    fn density_isolated_slit_fails() {
        // complement is a single excluded node at the center
        let rule: SliceRule =
            Arc::new(|x: &[f64], _| !((x[0] - 0.5).abs() < 0.01 && (x[1] - 0.5).abs() < 0.01));
        let dom = unit_box_domain(DomainKind::Custom(rule));
        let v = measure_density_check(&dom, 0.0, 0.05, &[0.2], 1.0 / 64.0).unwrap();
        assert!(!v.pass, "min ratio {}", v.min_ratio);
    }

    #[test]
    fn growth_check_variants() {
        let h = 1.0 / 32.0;
        let times: Vec<f64> = (0..8).map(|k| 0.9 * k as f64 / 7.0).collect();

        let cyl = unit_box_domain(DomainKind::Cylinder(Region::All));
        let v = growth_condition_check(&cyl, &GrowthProfile::zero(), &times, h).unwrap();
        assert!(v.pass);

        let (lambda, k) = (0.5, 0.8);
        let pinch = centered_domain(
            DomainKind::Petrovskii { center: vec![0.0, 0.0], lambda, k_scale: k },
            1.0,
        );
        let path = GrowthProfile::power_path(k, lambda, 1.0, 1.5);
        let v = growth_condition_check(&pinch, &path, &times, h).unwrap();
        assert!(v.pass, "violation {}", v.max_violation);
        assert!(v.max_violation.abs() <= 2.0 * h);

        let c = 0.4;
        let ball = centered_domain(
            DomainKind::ShrinkingBall { center: vec![0.0, 0.0], r0: 0.8, rate: c },
            1.0,
        );
        let weak = GrowthProfile::linear(c / 2.0);
        let v = growth_condition_check(&ball, &weak, &times, h).unwrap();
        assert!(!v.pass, "violation {}", v.max_violation);
    }

    #[test]
    fn r_exponent_branches() {
        assert!((r_exponent(2, 2.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(r_exponent(2, 1.5, 1.0).unwrap().is_infinite());
        assert!((r_exponent(2, 3.0, 3.0).unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert!(r_exponent(2, 1.2, 1.0).is_err());
    }

    #[test]
    fn eta_sigma_values() {
        let dom = unit_box_domain(DomainKind::Cylinder(Region::All));
        let slice = rasterize(&dom, 0.0, 1.0 / 16.0).unwrap();
        let sigma = 0.1;
        let eta = eta_sigma(&slice, sigma).unwrap();
        for i in 0..slice.grid.len() {
            let r = slice.dist[i] / sigma;
            let expect = (r - 1.0).clamp(0.0, 1.0);
            assert!((eta[i] - expect).abs() < 1e-15);
        }
        assert!(eta_sigma(&slice, 0.0).is_err());
    }

    #[test]
    fn eta_sigma_h_cylinder_reduces_to_power() {
        let dom = unit_box_domain(DomainKind::Cylinder(Region::All));
        let profile = GrowthProfile::zero();
        let (sigma, h, q, dt) = (0.1, 0.2, 1.0, 0.05);
        let t = 0.6; // t >= h: no zero extension
        let field = eta_sigma_h(&dom, &profile, sigma, h, t, 1.0 / 16.0, q, dt).unwrap();
        let slice = rasterize(&dom, t, 1.0 / 16.0).unwrap();
        let eta = eta_sigma(&slice, sigma).unwrap();
        for i in 0..field.len() {
            assert!((field[i] - eta[i].powf(1.0 / (q + 1.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_sigma_h_zero_extension_factor() {
        let dom = unit_box_domain(DomainKind::Cylinder(Region::All));
        let profile = GrowthProfile::zero();
        let (sigma, q, dt) = (0.05, 2.0, 0.05);
        let h = 0.4;
        let t = 0.2; // only samples t, t-dt, ..., >= 0 contribute: 5 of 8
        let field = eta_sigma_h(&dom, &profile, sigma, h, t, 1.0 / 16.0, q, dt).unwrap();
        let slice = rasterize(&dom, t, 1.0 / 16.0).unwrap();
        let eta = eta_sigma(&slice, sigma).unwrap();
        let frac: f64 = 5.0 / 8.0;
        for i in 0..field.len() {
            if eta[i] == 1.0 {
                let expect = frac.powf(1.0 / (q + 1.0));
                assert!((field[i] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eta_sigma_h_rejects_wide_window() {
        let c = 0.4;
        let dom = centered_domain(
            DomainKind::ShrinkingBall { center: vec![0.0, 0.0], r0: 0.8, rate: c },
            1.0,
        );
        let profile = GrowthProfile::linear(c);
        // omega(h) = c h <= sigma/2 requires h <= 0.0125 for sigma = 0.01
        let bad = eta_sigma_h(&dom, &profile, 0.01, 0.1, 0.5, 1.0 / 16.0, 1.0, 0.05);
        assert!(bad.is_err());
    }

    #[test]
    fn excess_triangle_on_nonincreasing() {
        let h = 1.0 / 32.0;
        for dom in [
            centered_domain(
                DomainKind::ShrinkingBall { center: vec![0.0, 0.0], r0: 0.8, rate: 0.4 },
                1.0,
            ),
            centered_domain(
                DomainKind::Petrovskii { center: vec![0.0, 0.0], lambda: 0.5, k_scale: 0.8 },
                1.0,
            ),
        ] {
            for (s, m, t) in [(0.0, 0.3, 0.6), (0.1, 0.5, 0.9)] {
                let a = complementary_excess(&dom, s, t, h).unwrap();
                let b = complementary_excess(&dom, s, m, h).unwrap();
                let c = complementary_excess(&dom, m, t, h).unwrap();
                assert!(a <= b + c + 2.0 * h, "triangle: {a} vs {b} + {c}");
            }
        }
    }

    #[test]
    fn boundary_fraction_shrinks_with_resolution() {
        let dom = centered_domain(
            DomainKind::ShrinkingBall { center: vec![0.0, 0.0], r0: 0.8, rate: 0.3 },
            1.0,
        );
        let coarse = boundary_cell_fraction(&dom, 1.0 / 16.0, 8).unwrap();
        let fine = boundary_cell_fraction(&dom, 1.0 / 64.0, 32).unwrap();
        assert!(fine < coarse, "fraction did not shrink: {coarse} -> {fine}");
    }

    #[test]
    fn edt_matches_brute_force() {
        let dom = centered_domain(
            DomainKind::Cylinder(Region::Ball { center: vec![0.2, -0.1], radius: 0.6 }),
            1.0,
        );
        let slice = rasterize(&dom, 0.0, 1.0 / 16.0).unwrap();
        let d = edt_to_sites(&slice.grid, &slice.indicator, false);
        let comp: Vec<usize> =
            (0..slice.indicator.len()).filter(|&i| !slice.indicator[i]).collect();
        let mut x = vec![0.0; 2];
        let mut y = vec![0.0; 2];
        for i in 0..slice.grid.len() {
            slice.grid.node_into(i, &mut x);
            let brute = comp
                .iter()
                .map(|&j| {
                    slice.grid.node_into(j, &mut y);
                    dist2(&x, &y).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((d[i] - brute).abs() < 1e-9, "node {i}: {} vs {}", d[i], brute);
        }
    }
}
