//! Radial ground state of `-Δw + w = μ w³` in R³.
//!
//! The profile is found by shooting on `w(0)`: too large a value makes the trajectory
//! cross zero, too small a value makes it turn upward. Bisection is carried to machine
//! precision. Past the radius where the two bracketing trajectories start to separate,
//! the table is completed by integrating inward from `s_max`, starting on the exact
//! decaying solution `c e^{-s}/s` of the linearized equation, with `c` matched to the
//! outward trajectory.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::least_squares;
use crate::ode::dopri5;

pub const DEFAULT_S_MAX: f64 = 30.0;
pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_TOL: f64 = 1e-10;

const ODE_RTOL: f64 = 1e-13;
/// Relative separation of the two bracketing trajectories tolerated in the outward table.
const SPLIT_TOL: f64 = 1e-11;

/// Tabulated radial ground state `W_μ` with its derivative and tail model.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    mu: f64,
    step: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
    tail_amplitude: f64,
    tail_rate_fit: f64,
    tail_cutoff: f64,
    mass2: f64,
    mass4: f64,
    grad2: f64,
    interaction_base: f64,
    moment_error: f64,
    match_radius: f64,
    /// Quintic Hermite coefficients per grid interval in the local variable t ∈ [0, 1].
    coeffs: Vec<[f64; 6]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    CrossedZero,
    TurnedUp,
    Reached,
}

struct Shot {
    outcome: Outcome,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

/// Result of fitting `log w = log A - rate·s - power·log s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    pub power: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileMoments {
    pub mass2: f64,
    pub mass4: f64,
    pub interaction_base: f64,
}

/// JSON sidecar written next to the `s,w,dw` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSidecar {
    pub mu: f64,
    pub tail_amplitude: f64,
    pub tail_cutoff: f64,
    pub mass2: f64,
    pub mass4: f64,
    pub interaction_base: f64,
}

fn radial_rhs(mu: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |s, y| [y[1], y[0] - mu * y[0] * y[0] * y[0] - 2.0 * y[1] / s]
}

fn series_start(mu: f64, w0: f64, s: f64) -> [f64; 2] {
    let c2 = (w0 - mu * w0.powi(3)) / 6.0;
    let c4 = (1.0 - 3.0 * mu * w0 * w0) * c2 / 20.0;
    [
        w0 + c2 * s * s + c4 * s.powi(4),
        2.0 * c2 * s + 4.0 * c4 * s.powi(3),
    ]
}

fn shoot(mu: f64, w0: f64, step: f64, nodes: usize) -> Result<Shot> {
    let f = radial_rhs(mu);
    let mut values = Vec::with_capacity(nodes);
    let mut derivs = Vec::with_capacity(nodes);
    values.push(w0);
    derivs.push(0.0);
    // Series on a short start interval, then the integrator up to the first node.
    let s_start = 1e-4 * step;
    let mut y = series_start(mu, w0, s_start);
    y = dopri5(&f, s_start, step, y, ODE_RTOL, 1e-300).ok_or(Error::ShootingOverflow { s: step })?;
    values.push(y[0]);
    derivs.push(y[1]);
    for i in 1..nodes - 1 {
        let (s0, s1) = (i as f64 * step, (i + 1) as f64 * step);
        y = dopri5(&f, s0, s1, y, ODE_RTOL, 1e-300).ok_or(Error::ShootingOverflow { s: s1 })?;
        if !(y[0].abs() < 1e8) {
            return Err(Error::ShootingOverflow { s: s1 });
        }
        values.push(y[0]);
        derivs.push(y[1]);
        if y[0] <= 0.0 {
            return Ok(Shot { outcome: Outcome::CrossedZero, values, derivs });
        }
        if y[1] > 0.0 {
            return Ok(Shot { outcome: Outcome::TurnedUp, values, derivs });
        }
    }
    Ok(Shot { outcome: Outcome::Reached, values, derivs })
}

fn quintic_coeffs(step: f64, p: [f64; 3], q: [f64; 3]) -> [f64; 6] {
    let (p0, d0, s0) = (p[0], p[1] * step, p[2] * step * step);
    let (p1, d1, s1) = (q[0], q[1] * step, q[2] * step * step);
    let r0 = p1 - p0 - d0 - 0.5 * s0;
    let r1 = d1 - d0 - s0;
    let r2 = s1 - s0;
    [
        p0,
        d0,
        0.5 * s0,
        10.0 * r0 - 4.0 * r1 + 0.5 * r2,
        -15.0 * r0 + 7.0 * r1 - r2,
        6.0 * r0 - 3.0 * r1 + 0.5 * r2,
    ]
}

/// Composite Simpson on a uniform grid with an even number of intervals.
fn simpson(step: f64, f: &[f64]) -> f64 {
    let n = f.len() - 1;
    debug_assert!(n % 2 == 0);
    let mut acc = f[0] + f[n];
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * step / 3.0
}

/// Simpson at spacing `h` and `2h`; returns the fine value and the Richardson error estimate.
fn simpson_with_error(step: f64, f: &[f64]) -> (f64, f64) {
    let fine = simpson(step, f);
    let coarse: Vec<f64> = f.iter().step_by(2).copied().collect();
    let coarse = simpson(2.0 * step, &coarse);
    (fine, (fine - coarse).abs() / 15.0)
}

impl RadialProfile {
    /// Solves with the default grid step.
    pub fn solve(mu: f64, s_max: f64, tol: f64) -> Result<Self> {
        Self::solve_with_step(mu, s_max, tol, DEFAULT_STEP)
    }

    pub fn solve_default(mu: f64) -> Result<Self> {
        Self::solve(mu, DEFAULT_S_MAX, DEFAULT_TOL)
    }

    pub fn solve_with_step(mu: f64, s_max: f64, tol: f64, step: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
        }
        if !(s_max >= 20.0) {
            return Err(Error::InvalidArgument(format!("s_max must be at least 20, got {s_max}")));
        }
        if !(tol > 0.0 && tol <= 1e-8) {
            return Err(Error::InvalidArgument(format!("tol must lie in (0, 1e-8], got {tol}")));
        }
        if !(step > 0.0 && step <= 0.01) {
            return Err(Error::InvalidArgument(format!("grid step must lie in (0, 0.01], got {step}")));
        }
        // Interval count rounded up to a multiple of 4 so Simpson can be run at h and 2h.
        let mut intervals = (s_max / step).ceil() as usize;
        intervals = intervals.div_ceil(4) * 4;
        let step = s_max / intervals as f64;
        let nodes = intervals + 1;

        let scale = mu.sqrt().recip();
        let mut lo = 0.5 * scale;
        if shoot(mu, lo, step, nodes)?.outcome != Outcome::TurnedUp {
            return Err(Error::BracketNotConverged(format!(
                "lower bracket {lo} does not turn upward"
            )));
        }
        let mut hi = 2.0 * scale;
        while shoot(mu, hi, step, nodes)?.outcome != Outcome::CrossedZero {
            hi *= 2.0;
            if hi > 1e3 * scale {
                return Err(Error::BracketNotConverged(
                    "no upper bracket crossing zero below 1e3/sqrt(mu)".into(),
                ));
            }
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match shoot(mu, mid, step, nodes)?.outcome {
                Outcome::CrossedZero => hi = mid,
                Outcome::TurnedUp => lo = mid,
                Outcome::Reached => {
                    lo = mid;
                    hi = mid;
                    break;
                }
            }
        }
        if hi - lo > tol {
            return Err(Error::BracketNotConverged(format!(
                "bracket width {} exceeds tol {tol}",
                hi - lo
            )));
        }

        let low = shoot(mu, lo, step, nodes)?;
        let high = shoot(mu, hi, step, nodes)?;
        let common = low.values.len().min(high.values.len());
        let mut split = 0;
        for i in 0..common {
            let a = low.values[i];
            let b = high.values[i];
            if a <= 0.0 || b <= 0.0 || (a - b).abs() > SPLIT_TOL * a.min(b) {
                break;
            }
            split = i;
        }
        let match_index = split.min(intervals / 2);
        if (match_index as f64) * step < 3.0 {
            return Err(Error::BracketNotConverged(format!(
                "bracketing trajectories separate already at s = {}",
                match_index as f64 * step
            )));
        }

        let mut values = vec![0.0; nodes];
        let mut derivs = vec![0.0; nodes];
        for i in 0..=match_index {
            values[i] = 0.5 * (low.values[i] + high.values[i]);
            derivs[i] = 0.5 * (low.derivs[i] + high.derivs[i]);
        }
        derivs[0] = 0.0;

        // Inward integration from s_max on the decaying branch, amplitude matched at s_m.
        let s_match = match_index as f64 * step;
        let w_match = values[match_index];
        let f = radial_rhs(mu);
        let inward = |c: f64| -> Result<(Vec<[f64; 2]>, [f64; 2])> {
            let mut out = vec![[0.0; 2]; nodes];
            let s = s_max;
            let mut y = [c * (-s).exp() / s, -c * (-s).exp() * (1.0 / s + 1.0 / (s * s))];
            out[intervals] = y;
            for i in (match_index..intervals).rev() {
                let (s0, s1) = ((i + 1) as f64 * step, i as f64 * step);
                y = dopri5(&f, s0, s1, y, ODE_RTOL, 1e-300)
                    .ok_or(Error::ShootingOverflow { s: s1 })?;
                out[i] = y;
            }
            Ok((out, y))
        };
        let mut amplitude = w_match * s_match * s_match.exp();
        for _ in 0..6 {
            let (_, y) = inward(amplitude)?;
            amplitude *= w_match / y[0];
        }
        let (outer, _) = inward(amplitude)?;
        for i in match_index + 1..nodes {
            values[i] = outer[i][0];
            derivs[i] = outer[i][1];
        }

        let mut profile = Self::from_table(mu, step, values, derivs, 0.0)?;
        profile.match_radius = s_match;
        Ok(profile)
    }

    /// Builds a profile from a uniform table. `tail_amplitude = 0` refits it.
    fn from_table(
        mu: f64,
        step: f64,
        values: Vec<f64>,
        derivs: Vec<f64>,
        tail_amplitude: f64,
    ) -> Result<Self> {
        let nodes = values.len();
        let s_max = (nodes - 1) as f64 * step;
        let second = |i: usize| -> f64 {
            let w = values[i];
            if i == 0 {
                (w - mu * w.powi(3)) / 3.0
            } else {
                w - mu * w.powi(3) - 2.0 * derivs[i] / (i as f64 * step)
            }
        };
        let coeffs = (0..nodes - 1)
            .map(|i| {
                quintic_coeffs(
                    step,
                    [values[i], derivs[i], second(i)],
                    [values[i + 1], derivs[i + 1], second(i + 1)],
                )
            })
            .collect();

        // Tail model on [0.6, 0.9]·s_max with the power fixed at 1.
        let (lo, hi) = (0.6 * s_max, 0.9 * s_max);
        let window: Vec<usize> = (0..nodes)
            .filter(|&i| {
                let s = i as f64 * step;
                s >= lo && s <= hi
            })
            .collect();
        let rows: Vec<Vec<f64>> = window.iter().map(|&i| vec![1.0, -(i as f64 * step)]).collect();
        let rhs: Vec<f64> = window
            .iter()
            .map(|&i| (values[i] * i as f64 * step).ln())
            .collect();
        let tail_rate_fit = least_squares(&rows, &rhs, 1e12)?.coefficients[1];
        let fitted_amplitude = (window
            .iter()
            .map(|&i| {
                let s = i as f64 * step;
                (values[i] * s).ln() + s
            })
            .sum::<f64>()
            / window.len() as f64)
            .exp();
        let tail_amplitude = if tail_amplitude > 0.0 { tail_amplitude } else { fitted_amplitude };

        let mut p = Self {
            mu,
            step,
            values,
            derivs,
            tail_amplitude,
            tail_rate_fit,
            tail_cutoff: s_max,
            mass2: 0.0,
            mass4: 0.0,
            grad2: 0.0,
            interaction_base: 0.0,
            moment_error: 0.0,
            match_radius: s_max,
            coeffs,
        };
        p.compute_moments()?;
        Ok(p)
    }

    fn compute_moments(&mut self) -> Result<()> {
        let four_pi = 4.0 * std::f64::consts::PI;
        let grid: Vec<f64> = (0..self.values.len()).map(|i| i as f64 * self.step).collect();
        let c = self.tail_amplitude;
        let sc = self.tail_cutoff;
        let integrand = |g: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..grid.len()).map(g).collect() };
        let w = &self.values;
        let dw = &self.derivs;
        let (m2, e2) = simpson_with_error(self.step, &integrand(&|i| grid[i].powi(2) * w[i].powi(2)));
        let (m4, e4) = simpson_with_error(self.step, &integrand(&|i| grid[i].powi(2) * w[i].powi(4)));
        let (g2, eg) = simpson_with_error(self.step, &integrand(&|i| grid[i].powi(2) * dw[i].powi(2)));
        let (ib, eb) = simpson_with_error(
            self.step,
            &integrand(&|i| grid[i] * w[i].powi(3) * grid[i].sinh()),
        );
        // Tail contributions past the table (closed forms of the tail model, leading order).
        let tail2 = c * c * (-2.0 * sc).exp() / 2.0;
        let tail_g2 = tail2 * (1.0 + 2.0 / sc);
        let tail4 = c.powi(4) * (-4.0 * sc).exp() / (4.0 * sc * sc);
        let tail_b = c.powi(3) * (-2.0 * sc).exp() / (4.0 * sc * sc);
        self.mass2 = four_pi * (m2 + tail2);
        self.mass4 = four_pi * (m4 + tail4);
        self.grad2 = four_pi * (g2 + tail_g2);
        self.interaction_base = four_pi * (ib + tail_b);
        let rel = [e2 / m2, e4 / m4, eg / g2, eb / ib]
            .into_iter()
            .fold(0.0f64, f64::max);
        self.moment_error = rel;
        if !(rel < 1e-6) {
            return Err(Error::QuadratureNotConverged(format!(
                "radial moments changed by {rel:.2e} (relative) under grid refinement"
            )));
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| i as f64 * self.step)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn center_value(&self) -> f64 {
        self.values[0]
    }

    pub fn tail_amplitude(&self) -> f64 {
        self.tail_amplitude
    }

    /// Fitted exponential rate on the tail window (diagnostic; the stored model uses 1).
    pub fn tail_rate_fit(&self) -> f64 {
        self.tail_rate_fit
    }

    pub fn tail_cutoff(&self) -> f64 {
        self.tail_cutoff
    }

    /// Radius where the outward table hands over to the inward one.
    pub fn match_radius(&self) -> f64 {
        self.match_radius
    }

    pub fn mass2(&self) -> f64 {
        self.mass2
    }

    pub fn mass4(&self) -> f64 {
        self.mass4
    }

    /// `∫|∇W|²`.
    pub fn grad2(&self) -> f64 {
        self.grad2
    }

    /// `∫ W³(y) e^{y₁} dy`.
    pub fn interaction_base(&self) -> f64 {
        self.interaction_base
    }

    /// Largest relative change of the radial moments between grid h and 2h.
    pub fn moment_error(&self) -> f64 {
        self.moment_error
    }

    pub fn moments(&self) -> ProfileMoments {
        ProfileMoments {
            mass2: self.mass2,
            mass4: self.mass4,
            interaction_base: self.interaction_base,
        }
    }

    fn tail(&self, s: f64) -> (f64, f64) {
        let e = self.tail_amplitude * (-s).exp() / s;
        (e, -e * (1.0 + 1.0 / s))
    }

    /// `W(s)` for any `s ≥ 0`.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        if s >= self.tail_cutoff {
            return self.tail(s).0;
        }
        let x = s / self.step;
        let i = (x as usize).min(self.coeffs.len() - 1);
        let t = x - i as f64;
        let a = &self.coeffs[i];
        a[0] + t * (a[1] + t * (a[2] + t * (a[3] + t * (a[4] + t * a[5]))))
    }

    /// `(W(s), W'(s))`.
    #[inline]
    pub fn value_and_deriv(&self, s: f64) -> (f64, f64) {
        if s >= self.tail_cutoff {
            return self.tail(s);
        }
        let x = s / self.step;
        let i = (x as usize).min(self.coeffs.len() - 1);
        let t = x - i as f64;
        let a = &self.coeffs[i];
        let v = a[0] + t * (a[1] + t * (a[2] + t * (a[3] + t * (a[4] + t * a[5]))));
        let d = a[1] + t * (2.0 * a[2] + t * (3.0 * a[3] + t * (4.0 * a[4] + t * 5.0 * a[5])));
        (v, d / self.step)
    }

    /// Second derivative of the interpolant (tail model past the cutoff).
    pub fn second_deriv(&self, s: f64) -> f64 {
        if s >= self.tail_cutoff {
            let e = self.tail_amplitude * (-s).exp() / s;
            return e * (1.0 + 2.0 / s + 2.0 / (s * s));
        }
        let x = s / self.step;
        let i = (x as usize).min(self.coeffs.len() - 1);
        let t = x - i as f64;
        let a = &self.coeffs[i];
        let d2 = 2.0 * a[2] + t * (6.0 * a[3] + t * (12.0 * a[4] + t * 20.0 * a[5]));
        d2 / (self.step * self.step)
    }

    /// `ΔW = W - μW³`.
    #[inline]
    pub fn laplacian_from_value(&self, w: f64) -> f64 {
        w - self.mu * w * w * w
    }

    /// Max over interval midpoints of `|w'' + 2w'/s - w + μw³|`.
    pub fn ode_residual_max(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| {
                let s = (i as f64 + 0.5) * self.step;
                let (w, dw) = self.value_and_deriv(s);
                (self.second_deriv(s) + 2.0 * dw / s - w + self.mu * w.powi(3)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Least-squares fit of `log w = log A - rate·s - power·log s` on grid nodes in `window`.
    pub fn decay_fit(&self, window: (f64, f64)) -> Result<DecayFit> {
        let (a, b) = window;
        if !(a > 5.0 && b <= self.tail_cutoff && b > a) {
            return Err(Error::InvalidArgument(format!(
                "decay window [{a}, {b}] must satisfy 5 < a < b <= {}",
                self.tail_cutoff
            )));
        }
        if b - a < 1.0 {
            return Err(Error::IllConditioned(format!(
                "decay window [{a}, {b}] is narrower than 1"
            )));
        }
        let pts: Vec<f64> = self.grid().filter(|s| *s >= a && *s <= b).collect();
        let rows: Vec<Vec<f64>> = pts.iter().map(|s| vec![1.0, -s, -s.ln()]).collect();
        let rhs: Vec<f64> = pts.iter().map(|s| self.value(*s).ln()).collect();
        let fit = least_squares(&rows, &rhs, 1e10)?;
        Ok(DecayFit {
            amplitude: fit.coefficients[0].exp(),
            rate: fit.coefficients[1],
            power: fit.coefficients[2],
            residual: fit.residual_norm,
        })
    }

    pub fn sidecar(&self) -> ProfileSidecar {
        ProfileSidecar {
            mu: self.mu,
            tail_amplitude: self.tail_amplitude,
            tail_cutoff: self.tail_cutoff,
            mass2: self.mass2,
            mass4: self.mass4,
            interaction_base: self.interaction_base,
        }
    }

    /// `s,w,dw` table, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,w,dw\n");
        for (i, (w, dw)) in self.values.iter().zip(&self.derivs).enumerate() {
            let s = i as f64 * self.step;
            let _ = writeln!(out, "{s:.16e},{w:.16e},{dw:.16e}");
        }
        out
    }

    pub fn write(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv())?;
        std::fs::write(json_path, serde_json::to_string_pretty(&self.sidecar())? + "\n")?;
        Ok(())
    }

    /// Rebuilds a profile from its CSV table and sidecar.
    pub fn from_csv(csv: &str, sidecar: &ProfileSidecar) -> Result<Self> {
        let mut lines = csv.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "s,w,dw" => {}
            _ => {
                return Err(Error::Parse { line: 1, message: "expected header `s,w,dw`".into() })
            }
        }
        let mut s = Vec::new();
        let mut values = Vec::new();
        let mut derivs = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Parse { line: n + 1, message: "expected 3 columns".into() });
            }
            let parse = |t: &str| {
                t.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: n + 1,
                    message: e.to_string(),
                })
            };
            s.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
            derivs.push(parse(cols[2])?);
        }
        if s.len() < 9 || (s.len() - 1) % 4 != 0 {
            return Err(Error::Parse {
                line: s.len() + 1,
                message: "table needs 4j+1 rows".into(),
            });
        }
        let step = s[1] - s[0];
        for (i, si) in s.iter().enumerate() {
            if (si - i as f64 * step).abs() > 1e-9 * step.max(1.0) * (i as f64 + 1.0) {
                return Err(Error::Parse { line: i + 2, message: "grid is not uniform".into() });
            }
        }
        Self::from_table(sidecar.mu, step, values, derivs, sidecar.tail_amplitude)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn w1() -> &'static RadialProfile {
        static P: OnceLock<RadialProfile> = OnceLock::new();
        P.get_or_init(|| RadialProfile::solve_default(1.0).unwrap())
    }

    #[test]
    fn profile_is_positive_and_decreasing() {
        let p = w1();
        assert!(p.values().iter().all(|w| *w > 0.0));
        assert!(p.values().windows(2).all(|w| w[1] < w[0]));
        assert_eq!(p.derivs()[0], 0.0);
        assert!(p.derivs()[1..].iter().all(|d| *d < 0.0));
    }

    #[test]
    fn ode_residual_is_small() {
        let p = w1();
        assert!(p.ode_residual_max() < 1e-6 * p.center_value(), "{}", p.ode_residual_max());
    }

    #[test]
    fn equation_identity_holds() {
        let p = w1();
        let lhs = p.grad2() + p.mass2();
        assert!((lhs - p.mass4()).abs() / p.mass4() < 1e-6, "{lhs} vs {}", p.mass4());
    }

    #[test]
    fn tail_matches_table_at_cutoff() {
        let p = w1();
        let s = p.tail_cutoff();
        let table = *p.values().last().unwrap();
        let model = p.tail_amplitude() * (-s).exp() / s;
        assert!((table - model).abs() / table < 5e-3);
        assert!((p.tail_rate_fit() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn value_endpoints() {
        let p = w1();
        assert_eq!(p.value(0.0), p.center_value());
        let s = 2.0 * p.tail_cutoff();
        assert_eq!(p.value(s), p.tail_amplitude() * (-s).exp() / s);
        let sc = p.tail_cutoff();
        let below = p.value(sc * (1.0 - 1e-12));
        let above = p.value(sc);
        assert!((below - above).abs() / above < 5e-3);
    }

    #[test]
    fn interpolant_hits_nodes() {
        let p = w1();
        for i in [1usize, 17, 400, 1234, 2999] {
            let s = i as f64 * p.step();
            assert!((p.value(s) - p.values()[i]).abs() <= 1e-14 * p.values()[i].max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn finite_difference_laplacian_matches_identity() {
        let p = w1();
        for s in [0.5, 1.3, 2.7, 5.0, 9.1, 14.2] {
            let h = 1e-3;
            let lap_fd = (p.value(s + h) - 2.0 * p.value(s) + p.value(s - h)) / (h * h)
                + (p.value(s + h) - p.value(s - h)) / (h * s);
            let lap = p.laplacian_from_value(p.value(s));
            assert!((lap_fd - lap).abs() < 1e-4 * lap.abs(), "s={s}: {lap_fd} vs {lap}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(RadialProfile::solve(0.0, 30.0, 1e-10).is_err());
        assert!(RadialProfile::solve(1.0, 10.0, 1e-10).is_err());
        assert!(RadialProfile::solve(1.0, 30.0, 1e-3).is_err());
    }

    #[test]
    fn decay_fit_rejects_narrow_window() {
        assert!(matches!(w1().decay_fit((8.0, 8.5)), Err(Error::IllConditioned(_))));
        assert!(w1().decay_fit((3.0, 15.0)).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let p = w1();
        let q = RadialProfile::from_csv(&p.to_csv(), &p.sidecar()).unwrap();
        for s in [0.0, 0.123, 3.3, 17.77, 29.99, 45.0] {
            assert!((p.value(s) - q.value(s)).abs() <= 1e-15 * p.value(s));
        }
        assert!((p.mass4() - q.mass4()).abs() < 1e-12 * p.mass4());
    }
}
