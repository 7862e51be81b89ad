//! Multi-bump approximate solutions and their strong-form residuals.
//!
//! Every bump is an amplitude-scaled copy of the μ = 1 ground state `W`. Profiles for other
//! μ follow from `W_μ = μ^{-1/2} W`, so a segregated site of species `u` carries amplitude
//! `1/√μ₁` and its Laplacian is still `a·(W - W³)`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingParams;
use crate::error::{Error, Result};
use crate::geometry::{distance, BumpConfiguration, Point, Species};
use crate::ground_state::RadialProfile;
use crate::potential::Potential;
use crate::quadrature::BoxRule;

/// Beyond this distance a bump contributes below 1e-17 and is skipped.
const BUMP_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: Point,
    /// Signed amplitude of the `u` component.
    pub u_amp: f64,
    /// Signed amplitude of the `v` component.
    pub v_amp: f64,
}

/// Bumps related by a symmetry of the energy density. Integrals over the whole space are
/// `Σ multiplicity · ∫ χ_rep f` with χ the partition of unity below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Orbit {
    pub representative: usize,
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct AnsatzField {
    config: Option<BumpConfiguration>,
    coupling: CouplingParams,
    profile: Arc<RadialProfile>,
    bumps: Vec<Bump>,
    orbits: Vec<Orbit>,
}

/// Value and gradient of both components at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldJet {
    pub u: f64,
    pub v: f64,
    pub grad_u: [f64; 3],
    pub grad_v: [f64; 3],
}

fn check_base(profile: &RadialProfile) -> Result<()> {
    if (profile.mu() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "the ansatz is built on the mu = 1 ground state, got mu = {}",
            profile.mu()
        )));
    }
    Ok(())
}

impl AnsatzField {
    pub fn new(
        config: BumpConfiguration,
        coupling: CouplingParams,
        profile: Arc<RadialProfile>,
    ) -> Result<Self> {
        check_base(&profile)?;
        let sites = config.sites()?;
        let n_first = 2 * config.k;
        let bumps = if config.family.is_segregated() {
            let (su, sv) = (coupling.mu1.sqrt().recip(), coupling.mu2.sqrt().recip());
            sites
                .iter()
                .map(|s| match s.species {
                    Species::V => Bump { center: s.position, u_amp: 0.0, v_amp: s.sign * sv },
                    _ => Bump { center: s.position, u_amp: s.sign * su, v_amp: 0.0 },
                })
                .collect()
        } else {
            let (a, g) = coupling.amplitudes()?;
            sites
                .iter()
                .map(|s| Bump { center: s.position, u_amp: s.sign * a, v_amp: s.sign * g })
                .collect()
        };
        // Rotations by 2π/k and the z reflection act transitively on each species' sites.
        let mut orbits = vec![Orbit { representative: 0, multiplicity: n_first }];
        if config.family.is_segregated() {
            orbits.push(Orbit { representative: n_first, multiplicity: n_first });
        }
        Ok(Self { config: Some(config), coupling, profile, bumps, orbits })
    }

    /// Free-form bump list. Each bump forms its own orbit.
    pub fn from_bumps(
        coupling: CouplingParams,
        profile: Arc<RadialProfile>,
        bumps: Vec<Bump>,
    ) -> Result<Self> {
        let orbits = (0..bumps.len()).map(|i| Orbit { representative: i, multiplicity: 1 }).collect();
        Self::with_orbits(coupling, profile, bumps, orbits)
    }

    /// Free-form bump list with caller-declared orbits. The caller guarantees that the energy
    /// density is invariant under a group mapping each orbit's bumps onto each other.
    pub fn with_orbits(
        coupling: CouplingParams,
        profile: Arc<RadialProfile>,
        bumps: Vec<Bump>,
        orbits: Vec<Orbit>,
    ) -> Result<Self> {
        check_base(&profile)?;
        if bumps.is_empty() {
            return Err(Error::InvalidArgument("an ansatz needs at least one bump".into()));
        }
        let covered: usize = orbits.iter().map(|o| o.multiplicity).sum();
        if covered != bumps.len() || orbits.iter().any(|o| o.representative >= bumps.len()) {
            return Err(Error::InvalidArgument("orbits must cover every bump exactly once".into()));
        }
        Ok(Self { config: None, coupling, profile, bumps, orbits })
    }

    pub fn config(&self) -> Option<&BumpConfiguration> {
        self.config.as_ref()
    }

    pub fn coupling(&self) -> &CouplingParams {
        &self.coupling
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn profile_arc(&self) -> Arc<RadialProfile> {
        Arc::clone(&self.profile)
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn orbits(&self) -> &[Orbit] {
        &self.orbits
    }

    pub fn centers(&self) -> Vec<Point> {
        self.bumps.iter().map(|b| b.center).collect()
    }

    /// Smallest distance between two bump centers (infinite for a single bump).
    pub fn min_separation(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (i, a) in self.bumps.iter().enumerate() {
            for b in &self.bumps[i + 1..] {
                d = d.min(distance(a.center, b.center));
            }
        }
        d
    }

    /// Factor relating the field at a point and at its 2π/k rotation.
    pub fn rotation_sign(&self) -> Option<f64> {
        self.config.as_ref().map(|c| c.family.rotation_sign())
    }

    pub fn eval_field(&self, p: Point) -> (f64, f64) {
        let (mut u, mut v) = (0.0, 0.0);
        for b in &self.bumps {
            let s = distance(p, b.center);
            if s < BUMP_CUTOFF {
                let w = self.profile.value(s);
                u += b.u_amp * w;
                v += b.v_amp * w;
            }
        }
        (u, v)
    }

    pub fn eval_jet(&self, p: Point) -> FieldJet {
        let mut j = FieldJet::default();
        for b in &self.bumps {
            let d = [p[0] - b.center[0], p[1] - b.center[1], p[2] - b.center[2]];
            let s = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if s >= BUMP_CUTOFF {
                continue;
            }
            let (w, dw) = self.profile.value_and_deriv(s);
            j.u += b.u_amp * w;
            j.v += b.v_amp * w;
            if s > 0.0 {
                let g = dw / s;
                for c in 0..3 {
                    j.grad_u[c] += b.u_amp * g * d[c];
                    j.grad_v[c] += b.v_amp * g * d[c];
                }
            }
        }
        j
    }

    /// Analytic Laplacian from `ΔW = W - W³`, summed bump by bump.
    pub fn eval_laplacian(&self, p: Point) -> (f64, f64) {
        let (mut lu, mut lv) = (0.0, 0.0);
        for b in &self.bumps {
            let s = distance(p, b.center);
            if s < BUMP_CUTOFF {
                let lw = self.profile.laplacian_from_value(self.profile.value(s));
                lu += b.u_amp * lw;
                lv += b.v_amp * lw;
            }
        }
        (lu, lv)
    }

    /// Strong-form residuals `-Δu + Pu - μ₁u³ - βuv²` and the `v` counterpart.
    pub fn eval_residual(&self, p: Point, pot_p: &Potential, pot_q: &Potential) -> (f64, f64) {
        // -Δ(aW) + aW = aW³ per bump, so only the potential excess and the nonlinear
        // mismatch survive.
        let (mut u, mut v, mut cu, mut cv) = (0.0, 0.0, 0.0, 0.0);
        for b in &self.bumps {
            let s = distance(p, b.center);
            if s < BUMP_CUTOFF {
                let w = self.profile.value(s);
                let w3 = w * w * w;
                u += b.u_amp * w;
                v += b.v_amp * w;
                cu += b.u_amp * w3;
                cv += b.v_amp * w3;
            }
        }
        let r = crate::geometry::norm(p);
        let c = &self.coupling;
        let ru = pot_p.excess(r) * u + cu - c.mu1 * u * u * u - c.beta * u * v * v;
        let rv = pot_q.excess(r) * v + cv - c.mu2 * v * v * v - c.beta * u * u * v;
        (ru, rv)
    }

    /// Partition-of-unity width `τ²`: wide enough for smooth transitions, narrow enough
    /// that a box of half-width 12 never owns a noticeable share of another bump.
    pub fn partition_width(&self) -> f64 {
        let d = self.min_separation();
        if d.is_finite() { (0.25 * d).max(2.0) } else { 2.0 }
    }

    /// Weight `χ_i(x) = 1 / (1 + Σ_{j≠i} exp((|x-c_i|² - |x-c_j|²) / (2τ²)))`.
    #[inline]
    pub fn partition_weight(&self, i: usize, p: Point, tau2: f64) -> f64 {
        let ci = self.bumps[i].center;
        let di = sq_dist(p, ci);
        let mut sum = 0.0;
        for (j, b) in self.bumps.iter().enumerate() {
            if j != i {
                let e = (di - sq_dist(p, b.center)) / (2.0 * tau2);
                if e > -60.0 {
                    sum += e.exp();
                }
            }
        }
        1.0 / (1.0 + sum)
    }

    /// Samples `x,y,z,u,v` on a regular grid covering every bump plus `margin`.
    pub fn sample_csv(&self, spacing: f64, margin: f64) -> Result<String> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidArgument("sampling spacing must be positive".into()));
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for b in &self.bumps {
            for c in 0..3 {
                lo[c] = lo[c].min(b.center[c] - margin);
                hi[c] = hi[c].max(b.center[c] + margin);
            }
        }
        let n: Vec<usize> = (0..3).map(|c| ((hi[c] - lo[c]) / spacing).floor() as usize + 1).collect();
        if n.iter().product::<usize>() > 5_000_000 {
            return Err(Error::InvalidArgument("sampling grid exceeds 5e6 points".into()));
        }
        let mut out = String::from("x,y,z,u,v\n");
        for i in 0..n[0] {
            for j in 0..n[1] {
                for l in 0..n[2] {
                    let p = [
                        lo[0] + i as f64 * spacing,
                        lo[1] + j as f64 * spacing,
                        lo[2] + l as f64 * spacing,
                    ];
                    let (u, v) = self.eval_field(p);
                    writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", p[0], p[1], p[2], u, v)
                        .expect("writing to a String");
                }
            }
        }
        Ok(out)
    }
}

#[inline]
fn sq_dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Box quadrature settings shared by the energy and residual integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Half-width of the cube around each orbit representative.
    pub half_width: f64,
    pub panel_width: f64,
    /// Gauss–Legendre order at the coarsest level.
    pub order: usize,
    /// Order increase per refinement level.
    pub order_step: usize,
    /// Number of levels, at least 2 so an error estimate exists.
    pub levels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { half_width: 12.0, panel_width: 1.5, order: 8, order_step: 4, levels: 2 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width >= 6.0 && self.panel_width > 0.0 && self.order >= 2 && self.levels >= 2) {
            return Err(Error::InvalidArgument(format!("unusable quadrature settings {self:?}")));
        }
        Ok(())
    }

    pub fn order_at(&self, level: usize) -> usize {
        self.order + level * self.order_step
    }
}

/// Result of a localized integral at every refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedIntegral<const N: usize> {
    pub levels: Vec<[f64; N]>,
    /// Largest weighted density on the box surfaces at the finest level.
    pub boundary_max: f64,
}

impl<const N: usize> LocalizedIntegral<N> {
    pub fn value(&self) -> [f64; N] {
        *self.levels.last().expect("at least one level")
    }

    /// `|Q_L - Q_{L-1}|` per component for the last two levels.
    pub fn error(&self) -> [f64; N] {
        let n = self.levels.len();
        let mut e = [0.0; N];
        for c in 0..N {
            e[c] = (self.levels[n - 1][c] - self.levels[n - 2][c]).abs();
        }
        e
    }

    /// Successive differences `|Q_{l+1} - Q_l|` summed over components.
    pub fn error_history(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| (0..N).map(|c| (w[1][c] - w[0][c]).abs()).sum())
            .collect()
    }
}

/// `∫ f` over R³ as `Σ_orbits multiplicity · ∫_box χ_rep f`. `f` must share the symmetry
/// encoded by the orbits.
pub fn integrate_localized<const N: usize>(
    field: &AnsatzField,
    spec: &QuadratureSpec,
    density: impl Fn(Point) -> [f64; N] + Sync,
) -> Result<LocalizedIntegral<N>> {
    spec.validate()?;
    let tau2 = field.partition_width();
    let mut levels = Vec::with_capacity(spec.levels);
    let mut boundary_max: f64 = 0.0;
    for level in 0..spec.levels {
        let order = spec.order_at(level);
        let mut total = [0.0; N];
        for orbit in field.orbits() {
            let rep = orbit.representative;
            let rule = BoxRule::cube(field.bumps[rep].center, spec.half_width, spec.panel_width, order);
            let weighted = |p: Point| {
                let chi = field.partition_weight(rep, p, tau2);
                let mut v = density(p);
                for x in v.iter_mut() {
                    *x *= chi;
                }
                v
            };
            let part = rule.integrate(&weighted);
            for c in 0..N {
                total[c] += orbit.multiplicity as f64 * part[c];
            }
            if level + 1 == spec.levels {
                let edge = rule.boundary_max(|p| weighted(p).iter().map(|x| x.abs()).sum());
                boundary_max = boundary_max.max(edge);
            }
        }
        if total.iter().any(|x| !x.is_finite()) {
            return Err(Error::QuadratureNotConverged("non-finite localized integral".into()));
        }
        levels.push(total);
    }
    Ok(LocalizedIntegral { levels, boundary_max })
}

/// L² norms of the strong-form residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorm {
    pub ell_u: f64,
    pub ell_v: f64,
    pub total: f64,
    /// Refinement difference of `total`.
    pub error_estimate: f64,
    /// Whether `(r, h)` lies in the admissible window; the norm is computed regardless.
    pub in_window: bool,
}

/// Window test `r/(k ln k) ∈ m/(2π) ± δ`, `hk ∈ π(m+2)/m ± δ₁` with the default widths.
pub fn in_default_window(k: usize, r: f64, h: f64, m: f64) -> bool {
    if k < 2 {
        return false;
    }
    let kf = k as f64;
    let (delta, delta1) = (m / (8.0 * PI), PI * (m + 2.0) / (4.0 * m));
    ((r / (kf * kf.ln())) - m / (2.0 * PI)).abs() <= delta
        && (h * kf - PI * (m + 2.0) / m).abs() <= delta1
}

pub fn residual_norm(
    field: &AnsatzField,
    pot_p: &Potential,
    pot_q: &Potential,
    spec: &QuadratureSpec,
) -> Result<ResidualNorm> {
    let q = integrate_localized(field, spec, |p| {
        let (ru, rv) = field.eval_residual(p, pot_p, pot_q);
        [ru * ru, rv * rv]
    })?;
    let [su, sv] = q.value();
    let total = (su + sv).sqrt();
    let coarse = q.levels[q.levels.len() - 2];
    let error_estimate = (total - (coarse[0] + coarse[1]).max(0.0).sqrt()).abs();
    let in_window = match (field.config(), pot_p.leading_law()) {
        (Some(c), Some((_, m))) => in_default_window(c.k, c.r, c.h, m),
        _ => false,
    };
    Ok(ResidualNorm { ell_u: su.sqrt(), ell_v: sv.sqrt(), total, error_estimate, in_window })
}
