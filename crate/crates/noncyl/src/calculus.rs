//! Pointwise algebra of the flow: the signed power map, the Bregman-type
//! boundary term, the variational integrand with its growth envelope, and
//! the two-sided power inequalities as computable records.

use std::sync::Arc;

use crate::{Error, Result};

/// Signed power map `|u|^{α-1} u` on vectors; preserves direction, maps the
/// magnitude to its α-th power, and sends 0 to 0.
pub fn power(u: &[f64], alpha: f64, out: &mut [f64]) {
    debug_assert!(alpha > 0.0);
    let m = norm(u);
    if m == 0.0 {
        out.fill(0.0);
        return;
    }
    let scale = m.powf(alpha - 1.0);
    for (o, &ui) in out.iter_mut().zip(u) {
        *o = scale * ui;
    }
}

pub fn power_vec(u: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    power(u, alpha, &mut out);
    out
}

/// Scalar shortcut for `power`.
pub fn power_scalar(u: f64, alpha: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.abs().powf(alpha - 1.0) * u
    }
}

pub fn norm(u: &[f64]) -> f64 {
    u.iter().map(|&a| a * a).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Boundary term `𝔟[u,v] = |v|^{q+1}/(q+1) + q|u|^{q+1}/(q+1) - ⟦u⟧^q·v`:
/// the Bregman distance of `|·|^{q+1}/(q+1)`, nonnegative and zero iff u = v.
pub fn boundary_term(u: &[f64], v: &[f64], q: f64) -> f64 {
    let mu = norm(u);
    let mv = norm(v);
    let uq_dot_v = if mu == 0.0 { 0.0 } else { mu.powf(q - 1.0) * dot(u, v) };
    mv.powf(q + 1.0) / (q + 1.0) + q * mu.powf(q + 1.0) / (q + 1.0) - uq_dot_v
}

/// `(⟦v⟧^q - ⟦u⟧^q) · (v - u)`, the symmetrized pairing equal to
/// `𝔟[u,v] + 𝔟[v,u]`.
pub fn power_pairing(u: &[f64], v: &[f64], q: f64) -> f64 {
    let pu = power_vec(u, q);
    let pv = power_vec(v, q);
    (0..u.len()).map(|i| (pv[i] - pu[i]) * (v[i] - u[i])).sum()
}

/// Pointwise-evaluable variational integrand `f(x, u, ξ)` with its first
/// derivatives. `ξ` is the N×n gradient flattened row-major (component-major).
pub trait Integrand: Send + Sync {
    fn eval(&self, x: &[f64], u: &[f64], xi: &[f64]) -> f64;
    /// Writes `D_ξ f` into `out` (same layout as `ξ`).
    fn grad_xi(&self, x: &[f64], u: &[f64], xi: &[f64], out: &mut [f64]);
    /// Writes `D_u f` into `out`.
    fn grad_u(&self, x: &[f64], u: &[f64], xi: &[f64], out: &mut [f64]);
}

/// `coeff · |ξ|^p`. With `coeff = 1/p` the flux is `|ξ|^{p-2} ξ`.
pub struct PowerIntegrand {
    pub p: f64,
    pub coeff: f64,
}

impl Integrand for PowerIntegrand {
    fn eval(&self, _x: &[f64], _u: &[f64], xi: &[f64]) -> f64 {
        self.coeff * norm(xi).powf(self.p)
    }

    fn grad_xi(&self, _x: &[f64], _u: &[f64], xi: &[f64], out: &mut [f64]) {
        let m = norm(xi);
        if m == 0.0 {
            out.fill(0.0);
            return;
        }
        let s = self.coeff * self.p * m.powf(self.p - 2.0);
        for (o, &g) in out.iter_mut().zip(xi) {
            *o = s * g;
        }
    }

    fn grad_u(&self, _x: &[f64], _u: &[f64], _xi: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `coeff · (δ² + |ξ|²)^{p/2}`, the nondegenerate regularization.
pub struct RegularizedPowerIntegrand {
    pub p: f64,
    pub coeff: f64,
    pub delta: f64,
}

impl Integrand for RegularizedPowerIntegrand {
    fn eval(&self, _x: &[f64], _u: &[f64], xi: &[f64]) -> f64 {
        let m2 = self.delta * self.delta + xi.iter().map(|&g| g * g).sum::<f64>();
        self.coeff * m2.powf(0.5 * self.p)
    }

    fn grad_xi(&self, _x: &[f64], _u: &[f64], xi: &[f64], out: &mut [f64]) {
        let m2 = self.delta * self.delta + xi.iter().map(|&g| g * g).sum::<f64>();
        let s = self.coeff * self.p * m2.powf(0.5 * self.p - 1.0);
        for (o, &g) in out.iter_mut().zip(xi) {
            *o = s * g;
        }
    }

    fn grad_u(&self, _x: &[f64], _u: &[f64], _xi: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `coeff·|ξ|^p + mu·|u|^p`, exercising the `D_u f` path.
pub struct PowerWithZerothOrder {
    pub p: f64,
    pub coeff: f64,
    pub mu: f64,
}

impl Integrand for PowerWithZerothOrder {
    fn eval(&self, _x: &[f64], u: &[f64], xi: &[f64]) -> f64 {
        self.coeff * norm(xi).powf(self.p) + self.mu * norm(u).powf(self.p)
    }

    fn grad_xi(&self, _x: &[f64], _u: &[f64], xi: &[f64], out: &mut [f64]) {
        let m = norm(xi);
        if m == 0.0 {
            out.fill(0.0);
            return;
        }
        let s = self.coeff * self.p * m.powf(self.p - 2.0);
        for (o, &g) in out.iter_mut().zip(xi) {
            *o = s * g;
        }
    }

    fn grad_u(&self, _x: &[f64], u: &[f64], _xi: &[f64], out: &mut [f64]) {
        let m = norm(u);
        if m == 0.0 {
            out.fill(0.0);
            return;
        }
        let s = self.mu * self.p * m.powf(self.p - 2.0);
        for (o, &ui) in out.iter_mut().zip(u) {
            *o = s * ui;
        }
    }
}

pub type SpatialField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Integrand together with exponents, the coercivity/growth envelope and the
/// inhomogeneity `G`.
#[derive(Clone)]
pub struct IntegrandSpec {
    pub p: f64,
    pub q: f64,
    pub nu: f64,
    pub big_l: f64,
    pub g: SpatialField,
    pub f: Arc<dyn Integrand>,
    pub n_comp: usize,
}

impl IntegrandSpec {
    pub fn new(
        p: f64,
        q: f64,
        nu: f64,
        big_l: f64,
        g: SpatialField,
        f: Arc<dyn Integrand>,
        n_comp: usize,
    ) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Integrand(format!("exponent p must exceed 1, got {p}")));
        }
        if !(q > 0.0) {
            return Err(Error::Integrand(format!("exponent q must be positive, got {q}")));
        }
        if !(0.0 < nu && nu <= big_l) {
            return Err(Error::Integrand(format!(
                "coercivity constants must satisfy 0 < nu <= L, got nu={nu}, L={big_l}"
            )));
        }
        if n_comp == 0 {
            return Err(Error::Integrand("codomain dimension must be >= 1".into()));
        }
        Ok(IntegrandSpec { p, q, nu, big_l, g, f, n_comp })
    }

    /// `coeff |ξ|^p` with the matching envelope and `G = 0`.
    pub fn p_power(p: f64, q: f64, coeff: f64, n_comp: usize) -> Result<Self> {
        IntegrandSpec::new(
            p,
            q,
            coeff,
            coeff,
            Arc::new(|_| 0.0),
            Arc::new(PowerIntegrand { p, coeff }),
            n_comp,
        )
    }

    pub fn holder_conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

/// One sample of the growth / convexity / Lipschitz-quotient checks.
#[derive(Clone, Debug)]
pub struct GrowthSample {
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub midpoint_convex_ok: bool,
    pub lipschitz_quotient: f64,
}

/// Verdict of the envelope check on a sample set.
#[derive(Clone, Debug)]
pub struct IntegrandVerdict {
    pub pass: bool,
    pub violations: usize,
    /// Largest Lipschitz quotient `|f1 - f2| / (bracket · (|Δu| + |Δξ|))`.
    pub max_lipschitz_quotient: f64,
    pub first_violation: Option<String>,
}

/// Spot-checks `ν|ξ|^p ≤ f ≤ L(|ξ|^p + |u|^p + G)`, midpoint convexity in
/// `(u, ξ)`, and records the local Lipschitz quotient of pairs.
pub fn integrand_growth_check(
    spec: &IntegrandSpec,
    samples: &[(Vec<f64>, Vec<f64>, Vec<f64>)],
) -> IntegrandVerdict {
    let mut verdict = IntegrandVerdict {
        pass: true,
        violations: 0,
        max_lipschitz_quotient: 0.0,
        first_violation: None,
    };
    let tol = 1e-10;
    let mut record = |verdict: &mut IntegrandVerdict, what: String| {
        verdict.violations += 1;
        if verdict.first_violation.is_none() {
            verdict.first_violation = Some(what);
        }
    };
    for w in samples.windows(2) {
        let (x1, u1, xi1) = (&w[0].0, &w[0].1, &w[0].2);
        let (_, u2, xi2) = (&w[1].0, &w[1].1, &w[1].2);
        let f1 = spec.f.eval(x1, u1, xi1);
        let f2 = spec.f.eval(x1, u2, xi2);

        let lower = spec.nu * norm(xi1).powf(spec.p);
        let upper = spec.big_l
            * (norm(xi1).powf(spec.p) + norm(u1).powf(spec.p) + (spec.g)(x1));
        let scale = 1.0 + lower.abs() + upper.abs();
        if f1 < lower - tol * scale {
            record(&mut verdict, format!("lower growth bound fails: f={f1} < {lower}"));
        }
        if f1 > upper + tol * scale {
            record(&mut verdict, format!("upper growth bound fails: f={f1} > {upper}"));
        }

        // midpoint convexity in (u, xi)
        let um: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| 0.5 * (a + b)).collect();
        let xim: Vec<f64> = xi1.iter().zip(xi2).map(|(a, b)| 0.5 * (a + b)).collect();
        let fm = spec.f.eval(x1, &um, &xim);
        if fm > 0.5 * (f1 + f2) + tol * (1.0 + f1.abs() + f2.abs()) {
            record(&mut verdict, format!("midpoint convexity fails: {fm} > {}", 0.5 * (f1 + f2)));
        }

        // local Lipschitz quotient against the p-growth bracket
        let du = u1.iter().zip(u2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let dxi = xi1.iter().zip(xi2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if du + dxi > 1e-12 {
            let bracket = (norm(xi1) + norm(xi2) + norm(u1) + norm(u2)).powf(spec.p - 1.0)
                + (spec.g)(x1).abs().powf(1.0 / spec.holder_conjugate());
            if bracket > 1e-300 {
                let quot = (f1 - f2).abs() / (bracket * (du + dxi));
                verdict.max_lipschitz_quotient = verdict.max_lipschitz_quotient.max(quot);
            }
        }
    }
    verdict.pass = verdict.violations == 0;
    verdict
}

/// All quantities entering the pointwise power inequalities for one pair,
/// so the harness can form the constant-free facts and the constant-bearing
/// ratios.
#[derive(Clone, Debug)]
pub struct LemmaRecord {
    /// `|⟦v⟧^α - ⟦u⟧^α|`
    pub power_diff: f64,
    /// `(|u| + |v|)^{α-1} |v - u|`
    pub graded_diff: f64,
    /// `|v - u|^α`
    pub plain_diff_pow: f64,
    /// `|u - v|^{q+1}`
    pub diff_q1: f64,
    /// `(|u|^{(q+1)/2} + |v|^{(q+1)/2}) |⟦u⟧^{(q+1)/2} - ⟦v⟧^{(q+1)/2}|`
    pub half_graded: f64,
    /// `|⟦u⟧^{(q+1)/2} - ⟦v⟧^{(q+1)/2}|²`
    pub half_power_sq: f64,
    /// `𝔟[u,v]`
    pub boundary: f64,
    /// `(⟦v⟧^q - ⟦u⟧^q) · (v - u)`
    pub pairing: f64,
}

/// Evaluates every side of the power inequalities at exponent `alpha`
/// (used both as the generic α and as q).
pub fn lemma_record(u: &[f64], v: &[f64], alpha: f64) -> LemmaRecord {
    let pu = power_vec(u, alpha);
    let pv = power_vec(v, alpha);
    let power_diff = norm(&pu.iter().zip(&pv).map(|(a, b)| b - a).collect::<Vec<_>>());
    let diff = norm(&u.iter().zip(v).map(|(a, b)| b - a).collect::<Vec<_>>());
    let graded_diff = (norm(u) + norm(v)).powf(alpha - 1.0) * diff;
    let half = 0.5 * (alpha + 1.0);
    let hu = power_vec(u, half);
    let hv = power_vec(v, half);
    let half_diff = norm(&hu.iter().zip(&hv).map(|(a, b)| a - b).collect::<Vec<_>>());
    LemmaRecord {
        power_diff,
        graded_diff,
        plain_diff_pow: diff.powf(alpha),
        diff_q1: diff.powf(alpha + 1.0),
        half_graded: (norm(u).powf(half) + norm(v).powf(half)) * half_diff,
        half_power_sq: half_diff * half_diff,
        boundary: boundary_term(u, v, alpha),
        pairing: power_pairing(u, v, alpha),
    }
}

/// Constants of the power inequalities fitted on the exhaustive planar scan.
/// By homogeneity and rotational invariance every pair `(u, v)` in any
/// dimension reduces to `u = e1`, `v = r(cos φ, sin φ)` (or the swapped
/// chart), so a dense scan over `(r, φ)` is extremal.
#[derive(Clone, Debug)]
pub struct FittedConstants {
    pub alpha: f64,
    /// Two-sided constant of the graded difference bound.
    pub c_graded: f64,
    /// `|v-u|^α ≤ C |⟦v⟧^α - ⟦u⟧^α|` (only for α > 1).
    pub c_plain: Option<f64>,
    /// `|u-v|^{q+1} ≤ c · half_graded`.
    pub c_half_graded: f64,
    /// `half_power_sq ≤ c · 𝔟[u,v]`.
    pub c_bregman_lower: f64,
}

pub fn fit_constants(alpha: f64, scan: usize) -> FittedConstants {
    let mut c_graded: f64 = 0.0;
    let mut c_plain: f64 = 0.0;
    let mut c_half_graded: f64 = 0.0;
    let mut c_bregman_lower: f64 = 0.0;
    let mut absorb = |rec: &LemmaRecord,
                      c_graded: &mut f64,
                      c_plain: &mut f64,
                      c_half: &mut f64,
                      c_breg: &mut f64| {
        if rec.graded_diff > 1e-300 && rec.power_diff > 1e-300 {
            *c_graded = c_graded
                .max(rec.power_diff / rec.graded_diff)
                .max(rec.graded_diff / rec.power_diff);
        }
        if rec.power_diff > 1e-300 {
            *c_plain = c_plain.max(rec.plain_diff_pow / rec.power_diff);
        }
        if rec.half_graded > 1e-300 {
            *c_half = c_half.max(rec.diff_q1 / rec.half_graded);
        }
        if rec.boundary > 1e-300 {
            *c_breg = c_breg.max(rec.half_power_sq / rec.boundary);
        }
    };
    for ir in 0..=scan {
        let r = ir as f64 / scan as f64;
        for ip in 0..scan {
            let phi = 2.0 * std::f64::consts::PI * ip as f64 / scan as f64;
            let a = [1.0, 0.0];
            let b = [r * phi.cos(), r * phi.sin()];
            if (a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-9 {
                continue;
            }
            let rec = lemma_record(&a, &b, alpha);
            absorb(&rec, &mut c_graded, &mut c_plain, &mut c_half_graded, &mut c_bregman_lower);
            let rec = lemma_record(&b, &a, alpha);
            absorb(&rec, &mut c_graded, &mut c_plain, &mut c_half_graded, &mut c_bregman_lower);
        }
    }
    FittedConstants {
        alpha,
        c_graded,
        c_plain: if alpha > 1.0 { Some(c_plain) } else { None },
        c_half_graded,
        c_bregman_lower,
    }
}
