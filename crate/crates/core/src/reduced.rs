//! Critical points of the reduced energy in `(r, h)` and `(r, ρ, h)`.
//!
//! Three gradient forms are available for the synchronized problem:
//!
//! * `F1Display`: the two partial derivatives of `F₁ = A0 + P(r) - 2C e^{-2π√(1-h²)r/k} - D e^{-2rh}`
//!   as usually printed. That `r` derivative has no `1/k` on the neighbor term, so it is
//!   not the gradient of `F₁`; [`display_mismatch`] measures the gap.
//! * `F1Exact`: the true gradient of `F₁`. Its fixed-point form is the contraction map.
//! * `Expansion`: the gradient of the per-slice expansion with kernel prefactors, in whichever
//!   basis the constants were fitted.
//!
//! `P(r) = a·A1/r^m + b·A2/r^n`. The usual `F₁` uses one constant for both interaction
//! terms; here the vertical one is `D`, which reduces to it for `D = C`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{seg_expansion, sync_terms, ExpansionConstants, InteractionBasis, PotentialParams};
use crate::geometry::{neighbor_distance, vertical_distance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradientForm {
    F1Display,
    F1Exact,
    Expansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Curvature {
    Max,
    Min,
    Saddle,
    Degenerate,
}

impl Curvature {
    pub fn label(self) -> &'static str {
        match self {
            Curvature::Max => "max",
            Curvature::Min => "min",
            Curvature::Saddle => "saddle",
            Curvature::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedCriticalPoint {
    pub r_star: f64,
    pub h_star: f64,
    pub rho_star: Option<f64>,
    /// Norm of the gradient in logarithmic coordinates, `|(r∂_r F, ρ∂_ρ F, h∂_h F)|`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub in_window: bool,
    pub curvature: Curvature,
}

/// Half-widths of the window around `r = (m/2π) k ln k`, `hk = π(m+2)/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub delta: f64,
    pub delta1: f64,
}

impl Window {
    pub fn default_for(m: f64) -> Self {
        Self { delta: m / (8.0 * PI), delta1: PI * (m + 2.0) / (4.0 * m) }
    }

    pub fn center(m: f64, k: usize) -> (f64, f64) {
        let kf = k as f64;
        (m / (2.0 * PI) * kf * kf.ln(), PI * (m + 2.0) / (m * kf))
    }

    pub fn contains(&self, m: f64, k: usize, r: f64, h: f64) -> bool {
        let kf = k as f64;
        (r / (kf * kf.ln()) - m / (2.0 * PI)).abs() <= self.delta
            && (h * kf - PI * (m + 2.0) / m).abs() <= self.delta1
    }
}

/// Synchronized reduced problem at fixed `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedProblem {
    pub constants: ExpansionConstants,
    pub pot: PotentialParams,
    pub k: usize,
    pub form: GradientForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub window: Option<Window>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200, window: None }
    }
}

fn check_rh(r: f64, h: f64) -> Result<()> {
    if !(r > 0.0 && h > 0.0 && h < 1.0) {
        return Err(Error::InvalidArgument(format!("need r > 0 and 0 < h < 1, got r = {r}, h = {h}")));
    }
    Ok(())
}

impl ReducedProblem {
    pub fn new(constants: ExpansionConstants, pot: PotentialParams, k: usize, form: GradientForm) -> Result<Self> {
        pot.validate()?;
        if k < 2 {
            return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
        }
        Ok(Self { constants, pot, k, form })
    }

    fn potential(&self, r: f64) -> (f64, f64) {
        let (p, c) = (&self.pot, &self.constants);
        let v = p.a * c.a1 / r.powf(p.m) + p.b * c.a2 / r.powf(p.n);
        let d = -p.m * p.a * c.a1 / r.powf(p.m + 1.0) - p.n * p.b * c.a2 / r.powf(p.n + 1.0);
        (v, d)
    }

    /// Reduced energy whose gradient the chosen form represents (the display form shares
    /// the `F₁` energy).
    pub fn energy(&self, r: f64, h: f64) -> f64 {
        let c = &self.constants;
        match self.form {
            GradientForm::F1Display | GradientForm::F1Exact => {
                let a = 2.0 * PI * (1.0 - h * h).sqrt() / self.k as f64;
                c.a0 + self.potential(r).0 - 2.0 * c.c_beta * (-a * r).exp() - c.d_beta * (-2.0 * r * h).exp()
            }
            GradientForm::Expansion => {
                let t = sync_terms(c, &self.pot, self.k, r, h);
                t.constant + t.potential + t.neighbor + t.vertical
            }
        }
    }

    /// `(∂_r, ∂_h)` of the chosen form.
    pub fn gradient(&self, r: f64, h: f64) -> (f64, f64) {
        let c = &self.constants;
        let kf = self.k as f64;
        let sq = (1.0 - h * h).sqrt();
        let dp = self.potential(r).1;
        match self.form {
            GradientForm::F1Display | GradientForm::F1Exact => {
                let hh = (-2.0 * PI * sq * r / kf).exp();
                let gg = (-2.0 * r * h).exp();
                let neighbor_r = if self.form == GradientForm::F1Display {
                    4.0 * c.c_beta * PI * sq * hh
                } else {
                    4.0 * c.c_beta * PI * sq * hh / kf
                };
                let fr = dp + neighbor_r + 2.0 * c.d_beta * h * gg;
                let fh = -4.0 * c.c_beta * PI * h * r / sq * hh / kf + 2.0 * c.d_beta * r * gg;
                (fr, fh)
            }
            GradientForm::Expansion => {
                let (gnr, gnh, gvr, gvh) = kernel_gradients(c.basis, self.k, r, h);
                (dp - 2.0 * c.c_beta * gnr - c.d_beta * gvr, -2.0 * c.c_beta * gnh - c.d_beta * gvh)
            }
        }
    }

    fn log_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (r, h) = (x[0].exp(), x[1].exp());
        let (fr, fh) = self.gradient(r, h);
        DVector::from_vec(vec![r * fr, h * fh])
    }

    /// Jacobian of the gradient field by central differences, step `1e-5·scale`.
    pub fn hessian(&self, r: f64, h: f64) -> Matrix2<f64> {
        let (er, eh) = (1e-5 * r, 1e-5 * h);
        let (a1, b1) = self.gradient(r + er, h);
        let (a0, b0) = self.gradient(r - er, h);
        let (a3, b3) = self.gradient(r, h + eh);
        let (a2, b2) = self.gradient(r, h - eh);
        Matrix2::new(
            (a1 - a0) / (2.0 * er),
            (a3 - a2) / (2.0 * eh),
            (b1 - b0) / (2.0 * er),
            (b3 - b2) / (2.0 * eh),
        )
    }

    pub fn curvature(&self, r: f64, h: f64) -> Curvature {
        let m = self.hessian(r, h);
        // scale to log coordinates so both eigenvalues are comparable
        let d = Matrix2::new(r, 0.0, 0.0, h);
        let s = d * m * d;
        classify(SymmetricEigen::new(0.5 * (s + s.transpose())).eigenvalues.as_slice())
    }

    fn no_root_reason(&self) -> Option<String> {
        let c = &self.constants;
        if c.c_beta == 0.0 && c.d_beta == 0.0 {
            return Some("all interaction constants vanish".into());
        }
        if c.c_beta == 0.0 {
            return Some("C_beta = 0: the h-derivative never vanishes".into());
        }
        None
    }

    fn finish(&self, r: f64, h: f64, grad_norm: f64, iterations: usize, window: Option<Window>) -> ReducedCriticalPoint {
        let w = window.unwrap_or_else(|| Window::default_for(self.pot.m));
        ReducedCriticalPoint {
            r_star: r,
            h_star: h,
            rho_star: None,
            grad_norm,
            iterations,
            in_window: w.contains(self.pot.m, self.k, r, h),
            curvature: self.curvature(r, h),
        }
    }
}

fn classify(eig: &[f64]) -> Curvature {
    let scale = eig.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 || eig.iter().any(|x| x.abs() <= 1e-9 * scale) {
        Curvature::Degenerate
    } else if eig.iter().all(|x| *x < 0.0) {
        Curvature::Max
    } else if eig.iter().all(|x| *x > 0.0) {
        Curvature::Min
    } else {
        Curvature::Saddle
    }
}

/// `(∂_r g_n, ∂_h g_n, ∂_r g_v, ∂_h g_v)` for the expansion kernels.
pub fn kernel_gradients(basis: InteractionBasis, k: usize, r: f64, h: f64) -> (f64, f64, f64, f64) {
    let kf = k as f64;
    let sq = (1.0 - h * h).sqrt();
    match basis {
        InteractionBasis::ScaledLateral => {
            let a = 2.0 * PI * sq / kf;
            let en = kf / r * (-a * r).exp();
            let ev = kf / r * (-2.0 * r * h).exp();
            let da_dh = -2.0 * PI * h / (kf * sq);
            (en * (-1.0 / r - a), -en * r * da_dh, ev * (-1.0 / r - 2.0 * h), -2.0 * r * ev)
        }
        InteractionBasis::ExactDistance => {
            let dn = neighbor_distance(k, r, h);
            let dv = vertical_distance(r, h);
            let dk = |d: f64| -(-d).exp() * (1.0 / d + 1.0 / (d * d));
            let s = (PI / kf).sin();
            let (gn, gv) = (dk(dn), dk(dv));
            (gn * 2.0 * sq * s, gn * (-2.0 * r * h * s / sq), gv * 2.0 * h, gv * 2.0 * r)
        }
    }
}

/// Relative gap between the displayed `r` derivative and a central difference of `F₁`.
pub fn display_mismatch(c: &ExpansionConstants, pot: &PotentialParams, k: usize, r: f64, h: f64) -> Result<f64> {
    let shown = ReducedProblem::new(*c, *pot, k, GradientForm::F1Display)?;
    let e = 1e-5 * r;
    let fd = (shown.energy(r + e, h) - shown.energy(r - e, h)) / (2.0 * e);
    let (fr, _) = shown.gradient(r, h);
    Ok((fr - fd).abs() / fd.abs().max(f64::MIN_POSITIVE))
}

/// Solves a small linear system, reporting a singular Jacobian.
fn solve_linear(j: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = j.clone().svd(true, true);
    let s = &svd.singular_values;
    let (smax, smin) = (s.max(), s.min());
    if !(smin > 1e-13 * smax) {
        return Err(Error::SingularJacobian(format!("singular values {smax:.3e} / {smin:.3e}")));
    }
    svd.solve(rhs, 0.0).map_err(|e| Error::SingularJacobian(e.to_string()))
}

fn jacobian(g: &impl Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for c in 0..n {
        let e = 1e-6;
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[c] += e;
        xm[c] -= e;
        jac.set_column(c, &((g(&xp) - g(&xm)) / (2.0 * e)));
    }
    jac
}

/// A few undamped steps past the tolerance, kept only while they reduce the norm. The
/// tolerance is absolute, so for weakly scaled problems it would otherwise stop early.
fn polish(g: &impl Fn(&DVector<f64>) -> DVector<f64>, mut x: DVector<f64>, mut gx: DVector<f64>, it: usize) -> (DVector<f64>, f64, usize) {
    for _ in 0..3 {
        let Ok(step) = solve_linear(&jacobian(g, &x), &(-&gx)) else { break };
        let trial = &x + step;
        let gt = g(&trial);
        if !(gt.norm() < gx.norm()) {
            break;
        }
        (x, gx) = (trial, gt);
    }
    let norm = gx.norm();
    (x, norm, it)
}

/// Damped Newton on `g(x) = 0` with a central-difference Jacobian and step halving.
fn damped_newton(g: impl Fn(&DVector<f64>) -> DVector<f64>, x0: DVector<f64>, tol: f64, max_iter: usize) -> Result<(DVector<f64>, f64, usize)> {
    let n = x0.len();
    let mut x = x0;
    let mut gx = g(&x);
    for it in 0..max_iter {
        let norm = gx.norm();
        if !norm.is_finite() {
            return Err(Error::Diverged { iterations: it, reason: "non-finite gradient".into() });
        }
        if norm < tol {
            return Ok(polish(&g, x, gx, it));
        }
        let step = solve_linear(&jacobian(&g, &x), &(-&gx))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &x + &step * t;
            let gt = g(&trial);
            if gt.norm().is_finite() && gt.norm() < norm {
                x = trial;
                gx = gt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Close to machine precision the merit function stops decreasing.
            if norm < 1e3 * tol {
                let polished = polish(&g, x, gx, it);
                if polished.1 < tol {
                    return Ok(polished);
                }
            }
            return Err(Error::Diverged { iterations: it, reason: format!("line search failed at gradient norm {norm:.3e}") });
        }
    }
    let norm = gx.norm();
    if norm < tol {
        return Ok((x, norm, max_iter));
    }
    Err(Error::Diverged { iterations: max_iter, reason: format!("gradient norm {norm:.3e} after the iteration cap") })
}

/// Damped Newton in `(ln r, ln h)` on the chosen gradient form.
pub fn solve_newton(p: &ReducedProblem, initial: (f64, f64), opts: &NewtonOptions) -> Result<ReducedCriticalPoint> {
    check_rh(initial.0, initial.1)?;
    if let Some(reason) = p.no_root_reason() {
        return Err(Error::NoCriticalPoint(reason));
    }
    let x0 = DVector::from_vec(vec![initial.0.ln(), initial.1.ln()]);
    let (x, norm, it) = damped_newton(|x| p.log_gradient(x), x0, opts.tol, opts.max_iter)?;
    let (r, h) = (x[0].exp(), x[1].exp());
    if !(h < 1.0) {
        return Err(Error::Diverged { iterations: it, reason: format!("h left (0, 1): {h}") });
    }
    Ok(p.finish(r, h, norm, it, opts.window))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractionOrder {
    /// `r` from `H*` first, then `h` from `G*` with the new `r`.
    Sequential,
    /// Both coordinates from the old iterate.
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub order: ContractionOrder,
    /// Starting point; the window center when `None`.
    pub initial: Option<(f64, f64)>,
    pub window: Option<Window>,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000, order: ContractionOrder::Sequential, initial: None, window: None }
    }
}

/// One application of the fixed-point map. Errors if `H*` or `G*` leave (0, 1).
pub fn contraction_step(p: &ReducedProblem, r: f64, h: f64, order: ContractionOrder, iterate: usize) -> Result<(f64, f64)> {
    let c = &p.constants;
    let kf = p.k as f64;
    let sq = (1.0 - h * h).sqrt();
    let dp = p.potential(r).1;
    let h_target = kf * (-dp) / (4.0 * c.c_beta * PI * (sq + h * h / sq));
    if !(h_target > 0.0 && h_target < 1.0) {
        return Err(Error::MapLeftWindow { iterate, reason: format!("H* = {h_target:e} at (r, h) = ({r}, {h})") });
    }
    let r_new = -kf * h_target.ln() / (2.0 * PI * sq);
    let factor = 2.0 * PI * c.c_beta * h / (c.d_beta * kf * sq);
    let (g_target, r_for_h) = match order {
        // H(r', h) equals H* by construction
        ContractionOrder::Sequential => (factor * h_target, r_new),
        ContractionOrder::Simultaneous => (factor * (-2.0 * PI * sq * r / kf).exp(), r),
    };
    if !(g_target > 0.0 && g_target < 1.0) {
        return Err(Error::MapLeftWindow { iterate, reason: format!("G* = {g_target:e} at (r, h) = ({r}, {h})") });
    }
    let h_new = -g_target.ln() / (2.0 * r_for_h);
    if !(h_new > 0.0 && h_new < 1.0) {
        return Err(Error::MapLeftWindow { iterate, reason: format!("h' = {h_new} at (r, h) = ({r}, {h})") });
    }
    Ok((r_new, h_new))
}

/// Fixed-point iteration of the `(H, G)` inversion map. Solves the `F1Exact` system.
pub fn solve_contraction(p: &ReducedProblem, opts: &ContractionOptions) -> Result<ReducedCriticalPoint> {
    if let Some(reason) = p.no_root_reason() {
        return Err(Error::NoCriticalPoint(reason));
    }
    if p.constants.d_beta <= 0.0 || p.constants.c_beta < 0.0 {
        return Err(Error::InvalidArgument("the contraction map needs C_beta > 0 and D_beta > 0".into()));
    }
    let exact = ReducedProblem { form: GradientForm::F1Exact, ..*p };
    let (mut r, mut h) = opts.initial.unwrap_or_else(|| Window::center(p.pot.m, p.k));
    check_rh(r, h)?;
    let mut last = f64::INFINITY;
    let mut increases = 0;
    // period-two orbits never trip the monotone check, so also demand progress per 100 steps
    let mut checkpoint = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (rn, hn) = contraction_step(&exact, r, h, opts.order, it)?;
        let dist = (rn - r).abs() + r * (hn - h).abs();
        (r, h) = (rn, hn);
        if dist < opts.tol {
            let (fr, fh) = exact.gradient(r, h);
            let norm = (r * fr).hypot(h * fh);
            return Ok(exact.finish(r, h, norm, it, opts.window));
        }
        if dist > last {
            increases += 1;
            if increases >= 5 {
                return Err(Error::NotContracting(it));
            }
        } else {
            increases = 0;
        }
        if it % 100 == 0 {
            if dist > 0.9 * checkpoint {
                return Err(Error::NotContracting(it));
            }
            checkpoint = dist;
        }
        last = dist;
    }
    Err(Error::Diverged { iterations: opts.max_iter, reason: "contraction did not reach tolerance".into() })
}

/// Synthetic `F1` constants with a critical point at `(r*, h*)`: `C` and `m` are chosen by
/// the caller, `D` follows from the `h` equation and `A1` (with `a = 1`, `b = 0`) from the
/// `r` equation.
pub fn plant_root(k: usize, m: f64, r: f64, h: f64, c_beta: f64) -> Result<(ExpansionConstants, PotentialParams)> {
    check_rh(r, h)?;
    let kf = k as f64;
    let sq = (1.0 - h * h).sqrt();
    let hh = (-2.0 * PI * sq * r / kf).exp();
    let gg = (-2.0 * r * h).exp();
    let d_beta = 2.0 * PI * c_beta * h * hh / (kf * sq * gg);
    let a1 = 4.0 * c_beta * PI * hh * (sq + h * h / sq) / kf * r.powf(m + 1.0) / m;
    let mut c = ExpansionConstants::zero(InteractionBasis::ScaledLateral);
    c.a0 = 1.0;
    c.a1 = a1;
    c.c_beta = c_beta;
    c.d_beta = d_beta;
    Ok((c, PotentialParams { a: 1.0, m, b: 0.0, n: m }))
}

/// Segregated reduced problem built on `seg_expansion`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegregatedProblem {
    pub constants: ExpansionConstants,
    pub pot: PotentialParams,
    pub k: usize,
}

impl SegregatedProblem {
    pub fn energy(&self, r: f64, rho: f64, h: f64) -> f64 {
        seg_expansion(&self.constants, &self.pot, self.k, r, rho, h) / self.k as f64
    }

    /// `(∂_r, ∂_ρ, ∂_h)` of the per-slice energy. The interspecies term is differenced
    /// numerically; everything else is analytic.
    pub fn gradient(&self, r: f64, rho: f64, h: f64) -> Vector3<f64> {
        let c = &self.constants;
        let (m, n) = (self.pot.m, self.pot.n);
        let (a_r, a_h, v_r, v_h) = kernel_gradients(c.basis, self.k, r, h);
        let (b_r, b_h, w_r, w_h) = kernel_gradients(c.basis, self.k, rho, h);
        let mut g = Vector3::new(
            -m * c.b1 / r.powf(m + 1.0) - c.c1 * a_r - c.d1 * v_r,
            -n * c.b2 / rho.powf(n + 1.0) - c.c2 * b_r - c.d2 * w_r,
            -c.c1 * a_h - c.d1 * v_h - c.c2 * b_h - c.d2 * w_h,
        );
        if c.seg_cross != 0.0 {
            let mut only = ExpansionConstants::zero(c.basis);
            only.seg_cross = c.seg_cross;
            let f = |r: f64, rho: f64, h: f64| seg_expansion(&only, &self.pot, self.k, r, rho, h) / self.k as f64;
            let (er, ep, eh) = (1e-6 * r, 1e-6 * rho, 1e-6 * h);
            g[0] += (f(r + er, rho, h) - f(r - er, rho, h)) / (2.0 * er);
            g[1] += (f(r, rho + ep, h) - f(r, rho - ep, h)) / (2.0 * ep);
            g[2] += (f(r, rho, h + eh) - f(r, rho, h - eh)) / (2.0 * eh);
        }
        g
    }

    fn log_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (r, rho, h) = (x[0].exp(), x[1].exp(), x[2].exp());
        let g = self.gradient(r, rho, h);
        DVector::from_vec(vec![r * g[0], rho * g[1], h * g[2]])
    }

    pub fn curvature(&self, r: f64, rho: f64, h: f64) -> Curvature {
        let p = [r, rho, h];
        let mut m = Matrix3::zeros();
        for c in 0..3 {
            let e = 1e-5 * p[c];
            let mut hi = p;
            let mut lo = p;
            hi[c] += e;
            lo[c] -= e;
            let col = (self.gradient(hi[0], hi[1], hi[2]) - self.gradient(lo[0], lo[1], lo[2])) / (2.0 * e);
            m.set_column(c, &col);
        }
        let d = Matrix3::from_diagonal(&Vector3::new(r, rho, h));
        let s = d * m * d;
        classify(SymmetricEigen::new(0.5 * (s + s.transpose())).eigenvalues.as_slice())
    }
}

pub fn solve_segregated(p: &SegregatedProblem, initial: (f64, f64, f64), opts: &NewtonOptions) -> Result<ReducedCriticalPoint> {
    p.pot.validate()?;
    check_rh(initial.0, initial.2)?;
    check_rh(initial.1, initial.2)?;
    let c = &p.constants;
    if [c.c1, c.d1, c.c2, c.d2, c.seg_cross].iter().all(|x| *x == 0.0) {
        return Err(Error::NoCriticalPoint("all interaction constants vanish".into()));
    }
    let x0 = DVector::from_vec(vec![initial.0.ln(), initial.1.ln(), initial.2.ln()]);
    let (x, norm, it) = damped_newton(|x| p.log_gradient(x), x0, opts.tol, opts.max_iter)?;
    let (r, rho, h) = (x[0].exp(), x[1].exp(), x[2].exp());
    if !(h < 1.0) {
        return Err(Error::Diverged { iterations: it, reason: format!("h left (0, 1): {h}") });
    }
    let w = opts.window.unwrap_or_else(|| Window::default_for(p.pot.m));
    Ok(ReducedCriticalPoint {
        r_star: r,
        h_star: h,
        rho_star: Some(rho),
        grad_norm: norm,
        iterations: it,
        in_window: w.contains(p.pot.m, p.k, r, h) && w.contains(p.pot.m, p.k, rho, h),
        curvature: p.curvature(r, rho, h),
    })
}

/// Segregated constants with a critical point at `(r*, ρ*, h*)`. `B1`, `B2` and `D2` are
/// solved from the three gradient equations; the other constants come from `template`.
pub fn plant_segregated(template: &ExpansionConstants, pot: &PotentialParams, k: usize, r: f64, rho: f64, h: f64) -> Result<ExpansionConstants> {
    let mut c = *template;
    c.b1 = 0.0;
    c.b2 = 0.0;
    c.d2 = 0.0;
    c.seg_cross = 0.0;
    let p = SegregatedProblem { constants: c, pot: *pot, k };
    let g = p.gradient(r, rho, h);
    let (_, _, w_r, w_h) = kernel_gradients(c.basis, k, rho, h);
    // ∂_h: g[2] - D2·w_h = 0
    if w_h == 0.0 {
        return Err(Error::InvalidArgument("vertical kernel has no h dependence here".into()));
    }
    c.d2 = g[2] / w_h;
    c.b1 = g[0] * r.powf(pot.m + 1.0) / pot.m;
    c.b2 = (g[1] - c.d2 * w_r) * rho.powf(pot.n + 1.0) / pot.n;
    if c.d2 <= 0.0 {
        return Err(Error::InvalidArgument(format!("planted root needs D2 > 0, got {}", c.d2)));
    }
    Ok(c)
}

/// One row of a scaling sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub point: Option<ReducedCriticalPoint>,
    /// `r*/(k ln k)`.
    pub r_scaled: Option<f64>,
    /// `h*·k`.
    pub h_scaled: Option<f64>,
    pub error: Option<String>,
}

pub fn scaling_sweep(c: &ExpansionConstants, pot: &PotentialParams, k_list: &[usize], form: GradientForm, window: Option<Window>) -> Result<Vec<SweepRow>> {
    pot.validate()?;
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let result = ReducedProblem::new(*c, *pot, k, form).and_then(|p| {
            let opts = NewtonOptions { window, ..Default::default() };
            solve_newton(&p, Window::center(pot.m, k), &opts)
        });
        let kf = k as f64;
        rows.push(match result {
            Ok(pt) => SweepRow {
                k,
                r_scaled: Some(pt.r_star / (kf * kf.ln())),
                h_scaled: Some(pt.h_star * kf),
                point: Some(pt),
                error: None,
            },
            Err(e) => SweepRow { k, point: None, r_scaled: None, h_scaled: None, error: Some(e.to_string()) },
        });
    }
    Ok(rows)
}

/// `k,r_star,h_star,rho_star,grad_norm,iters,in_window,curvature`; failed rows keep `k` and
/// leave the rest empty.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("k,r_star,h_star,rho_star,grad_norm,iters,in_window,curvature\n");
    for row in rows {
        match &row.point {
            Some(p) => {
                let rho = p.rho_star.map_or(String::new(), |x| format!("{x:.16e}"));
                out.push_str(&format!(
                    "{},{:.16e},{:.16e},{},{:.16e},{},{},{}\n",
                    row.k, p.r_star, p.h_star, rho, p.grad_norm, p.iterations, p.in_window, p.curvature.label()
                ));
            }
            None => out.push_str(&format!("{},,,,,,,failed\n", row.k)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_constants() -> (ExpansionConstants, PotentialParams) {
        let mut c = ExpansionConstants::zero(InteractionBasis::ScaledLateral);
        c.a0 = 75.6;
        c.a1 = 18.9;
        c.a2 = 18.9;
        c.c_beta = 29.4;
        c.d_beta = 29.4;
        (c, PotentialParams { a: 1.0, m: 2.0, b: 1.0, n: 2.0 })
    }

    fn fd_gradient(p: &ReducedProblem, r: f64, h: f64) -> (f64, f64) {
        let (er, eh) = (1e-5 * r, 1e-5 * h);
        (
            (p.energy(r + er, h) - p.energy(r - er, h)) / (2.0 * er),
            (p.energy(r, h + eh) - p.energy(r, h - eh)) / (2.0 * eh),
        )
    }

    #[test]
    fn no_root_without_neighbor_interaction() {
        let (mut c, pot) = sample_constants();
        c.c_beta = 0.0;
        let p = ReducedProblem::new(c, pot, 10, GradientForm::F1Exact).unwrap();
        for (r, h) in [(5.0, 0.1), (20.0, 0.5), (100.0, 0.05)] {
            assert!(p.gradient(r, h).0 < 0.0 || c.d_beta > 0.0);
            assert!(p.gradient(r, h).1 > 0.0);
        }
        assert!(matches!(solve_newton(&p, (10.0, 0.2), &NewtonOptions::default()), Err(Error::NoCriticalPoint(_))));
        c.d_beta = 0.0;
        let p = ReducedProblem::new(c, pot, 10, GradientForm::F1Exact).unwrap();
        assert!(p.gradient(10.0, 0.3).0 < 0.0);
    }

    #[test]
    fn gradient_forms_match_finite_differences_at_window_center() {
        let (c, pot) = sample_constants();
        for k in [10, 20, 40] {
            let (r, h) = Window::center(2.0, k);
            for form in [GradientForm::F1Exact, GradientForm::Expansion] {
                let p = ReducedProblem::new(c, pot, k, form).unwrap();
                let (a, b) = p.gradient(r, h);
                let (x, y) = fd_gradient(&p, r, h);
                assert!((a - x).abs() < 1e-6 * x.abs() && (b - y).abs() < 1e-6 * y.abs(), "{form:?} k={k}");
            }
            let mut e = c;
            e.basis = InteractionBasis::ExactDistance;
            let p = ReducedProblem::new(e, pot, k, GradientForm::Expansion).unwrap();
            let (a, b) = p.gradient(r, h);
            let (x, y) = fd_gradient(&p, r, h);
            assert!((a - x).abs() < 1e-6 * x.abs() && (b - y).abs() < 1e-6 * y.abs());
            // the printed r-derivative is off by the missing 1/k on the neighbor term
            assert!(display_mismatch(&c, &pot, k, r, h).unwrap() > 1e-3);
        }
    }

    #[test]
    fn h_equation_reduces_to_balance() {
        let (c, pot) = sample_constants();
        let k = 20;
        let p = ReducedProblem::new(c, pot, k, GradientForm::F1Exact).unwrap();
        let root = solve_newton(&p, Window::center(2.0, k), &NewtonOptions::default()).unwrap();
        let (r, h) = (root.r_star, root.h_star);
        let sq = (1.0 - h * h).sqrt();
        let lhs = (-2.0 * r * h).exp();
        let rhs = 2.0 * PI * h / (sq * k as f64) * (-2.0 * PI * sq * r / k as f64).exp();
        assert!((lhs / rhs - 1.0).abs() < 1e-8);
        let (fr, fh) = p.gradient(r, h);
        assert!((r * fr).hypot(h * fh) < 1e-10);
    }

    #[test]
    fn planted_roots_are_recovered() {
        for (k, r, h, cb) in [(10, 12.0, 0.55, 3.0), (20, 40.0, 0.3, 10.0), (40, 100.0, 0.15, 25.0)] {
            let (c, pot) = plant_root(k, 2.0, r, h, cb).unwrap();
            let p = ReducedProblem::new(c, pot, k, GradientForm::F1Exact).unwrap();
            let n = solve_newton(&p, (1.1 * r, 0.9 * h), &NewtonOptions::default()).unwrap();
            assert!((n.r_star / r - 1.0).abs() < 1e-8 && (n.h_star / h - 1.0).abs() < 1e-8);
            let t = solve_contraction(&p, &ContractionOptions { initial: Some((1.1 * r, 0.9 * h)), ..Default::default() }).unwrap();
            assert!((t.r_star / n.r_star - 1.0).abs() < 1e-6 && (t.h_star / n.h_star - 1.0).abs() < 1e-6);
            let s = solve_contraction(&p, &ContractionOptions {
                initial: Some((1.1 * r, 0.9 * h)),
                order: ContractionOrder::Simultaneous,
                ..Default::default()
            })
            .unwrap();
            assert!((s.r_star / r - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn fixed_point_is_stationary() {
        let (c, pot) = plant_root(20, 2.0, 40.0, 0.3, 10.0).unwrap();
        let p = ReducedProblem::new(c, pot, 20, GradientForm::F1Exact).unwrap();
        let (r, h) = contraction_step(&p, 40.0, 0.3, ContractionOrder::Sequential, 0).unwrap();
        assert!((r - 40.0).abs() < 1e-12 * 40.0 && (h - 0.3).abs() < 1e-12);
    }

    #[test]
    fn oscillating_map_is_reported() {
        let (rc, hc) = Window::center(2.0, 10);
        let (c, pot) = plant_root(10, 2.0, 0.85 * rc, 1.13 * hc, 1.0).unwrap();
        let p = ReducedProblem::new(c, pot, 10, GradientForm::F1Exact).unwrap();
        assert!(matches!(solve_contraction(&p, &ContractionOptions::default()), Err(Error::NotContracting(_))));
        // Newton does not care
        assert!(solve_newton(&p, (rc, hc), &NewtonOptions::default()).is_ok());
    }

    #[test]
    fn contraction_reports_leaving_the_window() {
        let (mut c, pot) = sample_constants();
        c.a1 = 1e9;
        let p = ReducedProblem::new(c, pot, 10, GradientForm::F1Exact).unwrap();
        assert!(matches!(solve_contraction(&p, &ContractionOptions::default()), Err(Error::MapLeftWindow { .. })));
    }

    #[test]
    fn doubling_a1_follows_log_balance() {
        let (c, pot) = sample_constants();
        let k = 40;
        let p = ReducedProblem::new(c, pot, k, GradientForm::F1Exact).unwrap();
        let base = solve_newton(&p, Window::center(2.0, k), &NewtonOptions::default()).unwrap();
        let mut c2 = c;
        c2.a1 *= 2.0;
        c2.a2 *= 2.0;
        let p2 = ReducedProblem::new(c2, pot, k, GradientForm::F1Exact).unwrap();
        let moved = solve_newton(&p2, (base.r_star, base.h_star), &NewtonOptions::default()).unwrap();
        let (r, h) = (base.r_star, base.h_star);
        let a = 2.0 * PI * (1.0 - h * h).sqrt() / k as f64;
        let predicted = -(2.0f64).ln() / (a - 3.0 / r);
        let actual = moved.r_star - r;
        assert!((actual / predicted - 1.0).abs() < 0.05, "{actual} vs {predicted}");
    }

    #[test]
    fn symmetric_segregated_solution() {
        let mut c = ExpansionConstants::zero(InteractionBasis::ScaledLateral);
        (c.b0, c.b1, c.b2, c.c1, c.c2, c.d1, c.d2) = (75.0, 18.9, 18.9, 29.4, 29.4, 29.4, 29.4);
        let pot = PotentialParams { a: 1.0, m: 2.0, b: 1.0, n: 2.0 };
        let p = SegregatedProblem { constants: c, pot, k: 20 };
        let (r0, h0) = Window::center(2.0, 20);
        let sol = solve_segregated(&p, (r0, 1.05 * r0, h0), &NewtonOptions::default()).unwrap();
        assert!((sol.r_star - sol.rho_star.unwrap()).abs() < 1e-8 * sol.r_star);
        let mut z = c;
        (z.c1, z.c2, z.d1, z.d2) = (0.0, 0.0, 0.0, 0.0);
        let q = SegregatedProblem { constants: z, pot, k: 20 };
        assert!(matches!(solve_segregated(&q, (r0, r0, h0), &NewtonOptions::default()), Err(Error::NoCriticalPoint(_))));
    }

    #[test]
    fn segregated_planted_root() {
        let mut t = ExpansionConstants::zero(InteractionBasis::ExactDistance);
        (t.c1, t.d1, t.c2) = (180.0, 90.0, 150.0);
        let pot = PotentialParams { a: 1.0, m: 2.0, b: 1.0, n: 2.5 };
        let (k, r, rho, h) = (12, 30.0, 33.0, 0.35);
        let c = plant_segregated(&t, &pot, k, r, rho, h).unwrap();
        let p = SegregatedProblem { constants: c, pot, k };
        let sol = solve_segregated(&p, (1.03 * r, 0.97 * rho, 1.02 * h), &NewtonOptions::default()).unwrap();
        assert!((sol.r_star / r - 1.0).abs() < 1e-8);
        assert!((sol.rho_star.unwrap() / rho - 1.0).abs() < 1e-8);
        assert!((sol.h_star / h - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sweep_table() {
        let (c, pot) = sample_constants();
        let rows = scaling_sweep(&c, &pot, &[10, 20], GradientForm::Expansion, None).unwrap();
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("k,r_star,h_star,rho_star,grad_norm,iters,in_window,curvature\n10,"));
        assert_eq!(csv.lines().count(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn newton_and_contraction_agree_on_plants(k in 20usize..100, t in 0.0f64..1.0, u in 0.0f64..1.0, cb in 1.0f64..50.0) {
            let (rc, hc) = Window::center(2.0, k);
            let (r, h) = (rc * (0.85 + 0.3 * t), hc * (0.85 + 0.3 * u));
            let (c, pot) = plant_root(k, 2.0, r, h, cb).unwrap();
            let p = ReducedProblem::new(c, pot, k, GradientForm::F1Exact).unwrap();
            let n = solve_newton(&p, (rc, hc), &NewtonOptions::default()).unwrap();
            let s = solve_contraction(&p, &ContractionOptions::default()).unwrap();
            prop_assert!((n.r_star / r - 1.0).abs() < 1e-8 && (n.h_star / h - 1.0).abs() < 1e-8);
            prop_assert!((s.r_star / n.r_star - 1.0).abs() < 1e-6 && (s.h_star / n.h_star - 1.0).abs() < 1e-6);
        }
    }
}
