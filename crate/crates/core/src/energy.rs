//! Direct quadrature of the energy functional
//!
//! ```text
//! I(u,v) = ½∫(|∇u|² + P u² + |∇v|² + Q v²) - ¼∫(μ₁u⁴ + μ₂v⁴) - (β/2)∫u²v²
//! ```
//!
//! Each bump's own contribution is a one-dimensional radial integral known from the profile
//! moments. Only the remainder (potential excess, overlaps between bumps) goes through the
//! three-dimensional box quadrature, which keeps the cancellation-prone part small.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ansatz::{integrate_localized, AnsatzField, Bump, Orbit, QuadratureSpec};
use crate::error::{Error, Result};
use crate::geometry::{distance, norm, Point};
use crate::ground_state::RadialProfile;
use crate::potential::Potential;
use crate::quadrature::{BoxRule, CompositeRule};

/// Largest bump count accepted by the direct path.
pub const MAX_DIRECT_BUMPS: usize = 16;
/// Pairs farther apart than this have overlaps below e^{-25} and are dropped.
pub const OVERLAP_CUTOFF: f64 = 25.0;
/// Remainder exponent used for the neglected-term bounds.
pub const SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic_potential_u: f64,
    pub kinetic_potential_v: f64,
    pub quartic_u: f64,
    pub quartic_v: f64,
    pub cross: f64,
    pub total: f64,
    pub error_estimate: f64,
}

impl EnergyBreakdown {
    fn from_parts(p: [f64; 5], error_estimate: f64) -> Self {
        Self {
            kinetic_potential_u: p[0],
            kinetic_potential_v: p[1],
            quartic_u: p[2],
            quartic_v: p[3],
            cross: p[4],
            total: p[0] + p[1] - p[2] - p[3] - p[4],
            error_estimate,
        }
    }

    fn parts(&self) -> [f64; 5] {
        [
            self.kinetic_potential_u,
            self.kinetic_potential_v,
            self.quartic_u,
            self.quartic_v,
            self.cross,
        ]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Energy split into the exact self part and the quadrature remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDetail {
    pub breakdown: EnergyBreakdown,
    /// Sum of isolated single-bump energies.
    pub self_part: EnergyBreakdown,
    /// Everything else: potential excess and overlaps.
    pub remainder: EnergyBreakdown,
    /// `|Q_{l+1} - Q_l|` of the remainder total for each refinement step.
    pub error_history: Vec<f64>,
    pub boundary_max: f64,
}

fn self_energy(field: &AnsatzField) -> [f64; 5] {
    let p = field.profile();
    let c = field.coupling();
    let (m2, m4, g2) = (p.mass2(), p.mass4(), p.grad2());
    let mut out = [0.0; 5];
    for b in field.bumps() {
        let (a2, c2) = (b.u_amp * b.u_amp, b.v_amp * b.v_amp);
        out[0] += 0.5 * a2 * (g2 + m2);
        out[1] += 0.5 * c2 * (g2 + m2);
        out[2] += 0.25 * c.mu1 * a2 * a2 * m4;
        out[3] += 0.25 * c.mu2 * c2 * c2 * m4;
        out[4] += 0.5 * c.beta * a2 * c2 * m4;
    }
    out
}

/// Energy density minus the single-bump densities, component by component.
fn remainder_density(field: &AnsatzField, pot_p: &Potential, pot_q: &Potential, x: Point) -> [f64; 5] {
    let prof = field.profile();
    let c = field.coupling();
    let (mut u, mut v) = (0.0, 0.0);
    let mut gu = [0.0; 3];
    let mut gv = [0.0; 3];
    // self sums: |∇|² + (·)² for u and v, fourth powers, and same-site u²v²
    let (mut su, mut sv, mut qu, mut qv, mut suv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for b in field.bumps() {
        let d = [x[0] - b.center[0], x[1] - b.center[1], x[2] - b.center[2]];
        let s = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if s >= 40.0 {
            continue;
        }
        let (w, dw) = prof.value_and_deriv(s);
        let g = if s > 0.0 { dw / s } else { 0.0 };
        let (a, e) = (b.u_amp, b.v_amp);
        u += a * w;
        v += e * w;
        for k in 0..3 {
            gu[k] += a * g * d[k];
            gv[k] += e * g * d[k];
        }
        let (w2, dw2) = (w * w, dw * dw);
        su += a * a * (dw2 + w2);
        sv += e * e * (dw2 + w2);
        qu += (a * a * w2) * (a * a * w2);
        qv += (e * e * w2) * (e * e * w2);
        suv += a * a * e * e * w2 * w2;
    }
    let r = norm(x);
    let (u2, v2) = (u * u, v * v);
    let gu2 = gu[0] * gu[0] + gu[1] * gu[1] + gu[2] * gu[2];
    let gv2 = gv[0] * gv[0] + gv[1] * gv[1] + gv[2] * gv[2];
    [
        0.5 * (gu2 + u2 - su) + 0.5 * pot_p.excess(r) * u2,
        0.5 * (gv2 + v2 - sv) + 0.5 * pot_q.excess(r) * v2,
        0.25 * c.mu1 * (u2 * u2 - qu),
        0.25 * c.mu2 * (v2 * v2 - qv),
        0.5 * c.beta * (u2 * v2 - suv),
    ]
}

pub fn energy_direct_detailed(
    field: &AnsatzField,
    pot_p: &Potential,
    pot_q: &Potential,
    spec: &QuadratureSpec,
) -> Result<EnergyDetail> {
    let n = field.bumps().len();
    if n > MAX_DIRECT_BUMPS {
        return Err(Error::InvalidArgument(format!(
            "{n} bumps exceed the direct-quadrature limit of {MAX_DIRECT_BUMPS}; \
             use the fitted expansion for larger k"
        )));
    }
    let q = integrate_localized(field, spec, |x| remainder_density(field, pot_p, pot_q, x))?;
    let rem = q.value();
    let err: f64 = q.error().iter().sum();
    let selfp = self_energy(field);
    let mut total = [0.0; 5];
    for c in 0..5 {
        total[c] = selfp[c] + rem[c];
    }
    let breakdown = EnergyBreakdown::from_parts(total, err);
    let scale = breakdown.total.abs().max(1.0);
    // Box truncation audit: the weighted density must have died out on every box face.
    if q.boundary_max > 1e-8 * scale {
        return Err(Error::QuadratureNotConverged(format!(
            "partition audit: density {:.3e} on the box boundary; enlarge the boxes",
            q.boundary_max
        )));
    }
    if err > 1e-4 * scale {
        return Err(Error::QuadratureNotConverged(format!(
            "energy refinement difference {err:.3e} exceeds 1e-4 of |total| = {:.6e}",
            breakdown.total
        )));
    }
    Ok(EnergyDetail {
        breakdown,
        self_part: EnergyBreakdown::from_parts(selfp, 0.0),
        remainder: EnergyBreakdown::from_parts(rem, err),
        error_history: q.error_history(),
        boundary_max: q.boundary_max,
    })
}

pub fn energy_direct(
    field: &AnsatzField,
    pot_p: &Potential,
    pot_q: &Potential,
    spec: &QuadratureSpec,
) -> Result<EnergyBreakdown> {
    Ok(energy_direct_detailed(field, pot_p, pot_q, spec)?.breakdown)
}

/// A quadrature value with its refinement difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn check_relative(name: &str, e: Estimate, tol: f64) -> Result<Estimate> {
    if e.error > tol * e.value.abs() {
        return Err(Error::QuadratureNotConverged(format!(
            "{name}: refinement difference {:.3e} vs value {:.6e}",
            e.error, e.value
        )));
    }
    Ok(e)
}

fn unit(direction: Point) -> Result<Point> {
    let n = norm(direction);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidArgument("direction must be a nonzero vector".into()));
    }
    Ok([direction[0] / n, direction[1] / n, direction[2] / n])
}

/// `∫ W³(y) W(y - d·e) dy` by box quadrature around the origin.
pub fn pair_interaction(profile: &RadialProfile, d: f64, direction: Point) -> Result<Estimate> {
    if !(d >= 4.0) {
        return Err(Error::InvalidArgument(format!("pair distance must be at least 4, got {d}")));
    }
    let e = unit(direction)?;
    let c = [d * e[0], d * e[1], d * e[2]];
    let f = |y: Point| {
        let w = profile.value(norm(y));
        [w * w * w * profile.value(distance(y, c))]
    };
    let values: Vec<f64> = [8usize, 12]
        .iter()
        .map(|&order| BoxRule::cube([0.0; 3], 12.0, 1.5, order).integrate(f)[0])
        .collect();
    check_relative(
        "pair interaction",
        Estimate { value: values[1], error: (values[1] - values[0]).abs() },
        1e-4,
    )
}

/// `∫ (pot(|x|) - 1) W²(x - x̄) dx` for a bump at distance `center_radius` from the origin,
/// reduced to the radial and polar-angle variables around the bump.
pub fn potential_correction(
    profile: &RadialProfile,
    potential: &Potential,
    center_radius: f64,
) -> Result<Estimate> {
    if !(center_radius >= 10.0) {
        return Err(Error::InvalidArgument(format!(
            "center radius must be at least 10, got {center_radius}"
        )));
    }
    potential_correction_any(profile, potential, center_radius)
}

/// Same integral without the far-field precondition; used for bumps close to the origin.
fn potential_correction_any(
    profile: &RadialProfile,
    potential: &Potential,
    center_radius: f64,
) -> Result<Estimate> {
    if potential.is_constant() {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let r = center_radius;
    let run = |order: usize| {
        let srule = CompositeRule::with_panel_width(0.0, 25.0, 1.0, order);
        let trule = CompositeRule::new(-1.0, 1.0, 4, order + 6);
        srule.integrate(|s| {
            let w = profile.value(s);
            let inner = trule.integrate(|t| {
                let x = (r * r + s * s + 2.0 * r * s * t).max(0.0).sqrt();
                potential.excess(x)
            });
            2.0 * PI * s * s * w * w * inner
        })
    };
    let (coarse, fine) = (run(8), run(12));
    let e = Estimate { value: fine, error: (fine - coarse).abs() };
    if e.error > 1e-4 * e.value.abs() && e.error > 1e-14 {
        return Err(Error::QuadratureNotConverged(format!(
            "potential correction: refinement difference {:.3e} vs value {:.6e}",
            e.error, e.value
        )));
    }
    Ok(e)
}

/// `∫ W₁²(y) W₂²(y - d·e) dy`, integrated in cylindrical coordinates about the axis
/// through both centers.
pub fn cross_species_overlap(p1: &RadialProfile, p2: &RadialProfile, d: f64) -> Result<Estimate> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidArgument(format!("distance must be positive, got {d}")));
    }
    let run = |order: usize| {
        let zrule = CompositeRule::with_panel_width(-14.0, d + 14.0, 1.0, order);
        let prule = CompositeRule::with_panel_width(0.0, 14.0, 1.0, order);
        zrule.integrate(|z| {
            prule.integrate(|rho| {
                let w1 = p1.value(z.hypot(rho));
                let w2 = p2.value((z - d).hypot(rho));
                2.0 * PI * rho * w1 * w1 * w2 * w2
            })
        })
    };
    let (coarse, fine) = (run(8), run(12));
    check_relative("cross-species overlap", Estimate { value: fine, error: (fine - coarse).abs() }, 1e-6)
}

/// Overlap energy `I(b₁+b₂) - I(b₁) - I(b₂)` of two bumps with constant potentials.
pub fn pair_overlap_energy(field_template: &AnsatzField, b1: Bump, b2: Bump, spec: &QuadratureSpec) -> Result<Estimate> {
    let coupling = *field_template.coupling();
    let profile = field_template.profile_arc();
    let swap_symmetric = (b1.u_amp.abs() - b2.u_amp.abs()).abs() < 1e-15
        && (b1.v_amp.abs() - b2.v_amp.abs()).abs() < 1e-15
        && (b1.u_amp * b2.v_amp - b1.v_amp * b2.u_amp).abs() < 1e-15;
    let pair = if swap_symmetric {
        AnsatzField::with_orbits(coupling, profile, vec![b1, b2], vec![Orbit { representative: 0, multiplicity: 2 }])?
    } else {
        AnsatzField::from_bumps(coupling, profile, vec![b1, b2])?
    };
    let flat = Potential::constant();
    let q = integrate_localized(&pair, spec, |x| remainder_density(&pair, &flat, &flat, x))?;
    let total = |v: [f64; 5]| v[0] + v[1] - v[2] - v[3] - v[4];
    let n = q.levels.len();
    let value = total(q.levels[n - 1]);
    Ok(Estimate { value, error: (value - total(q.levels[n - 2])).abs() })
}

/// Two bumps of the synchronized amplitudes placed at `±d/2` on the z axis with signs
/// `(+1, sign)`; returns the overlap energy.
pub fn signed_pair_overlap(
    field_template: &AnsatzField,
    d: f64,
    sign: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let (a, g) = field_template.coupling().amplitudes()?;
    let b1 = Bump { center: [0.0, 0.0, 0.5 * d], u_amp: a, v_amp: g };
    let b2 = Bump { center: [0.0, 0.0, -0.5 * d], u_amp: sign * a, v_amp: sign * g };
    pair_overlap_energy(field_template, b1, b2, spec)
}

/// Energy rebuilt from isolated pieces: self energies, potential corrections and pairwise
/// overlaps. Triple overlaps and potential-overlap cross terms are neglected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub self_energy: f64,
    pub potential_corrections: f64,
    pub pair_overlaps: f64,
    pub total: f64,
    /// `Σ_pairs A_i A_j · mass4 · e^{-(1+σ) d_ij}`, the size of the neglected terms.
    pub neglected_bound: f64,
}

pub fn energy_decomposition(
    field: &AnsatzField,
    pot_p: &Potential,
    pot_q: &Potential,
    spec: &QuadratureSpec,
) -> Result<Decomposition> {
    let prof = field.profile();
    let selfp = self_energy(field);
    let self_energy = selfp[0] + selfp[1] - selfp[2] - selfp[3] - selfp[4];
    let mut corrections = 0.0;
    let mut pc_cache: BTreeMap<(u64, bool), f64> = BTreeMap::new();
    let mut pc = |pot: &Potential, r: f64, second: bool| -> Result<f64> {
        if let Some(v) = pc_cache.get(&(r.to_bits(), second)) {
            return Ok(*v);
        }
        let v = potential_correction_any(prof, pot, r)?.value;
        pc_cache.insert((r.to_bits(), second), v);
        Ok(v)
    };
    for b in field.bumps() {
        let r = (norm(b.center) * 1e9).round() / 1e9;
        if b.u_amp != 0.0 {
            corrections += 0.5 * b.u_amp * b.u_amp * pc(pot_p, r, false)?;
        }
        if b.v_amp != 0.0 {
            corrections += 0.5 * b.v_amp * b.v_amp * pc(pot_q, r, true)?;
        }
    }
    // Pair overlaps depend only on the distance and the amplitude pattern.
    type Key = (u64, [u64; 4]);
    let mut cache: BTreeMap<Key, f64> = BTreeMap::new();
    let mut overlaps = 0.0;
    let mut bound = 0.0;
    let bumps = field.bumps();
    for i in 0..bumps.len() {
        for j in i + 1..bumps.len() {
            let d = distance(bumps[i].center, bumps[j].center);
            if d >= OVERLAP_CUTOFF {
                continue;
            }
            let (bi, bj) = (bumps[i], bumps[j]);
            let amp_i = bi.u_amp.abs().max(bi.v_amp.abs());
            let amp_j = bj.u_amp.abs().max(bj.v_amp.abs());
            bound += amp_i * amp_j * prof.mass4() * (-(1.0 + SIGMA) * d).exp();
            let key: Key = (
                ((d * 1e9).round() as u64),
                [bi.u_amp.to_bits(), bi.v_amp.to_bits(), bj.u_amp.to_bits(), bj.v_amp.to_bits()],
            );
            let value = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let placed_i = Bump { center: [0.0, 0.0, 0.5 * d], ..bi };
                    let placed_j = Bump { center: [0.0, 0.0, -0.5 * d], ..bj };
                    let v = pair_overlap_energy(field, placed_i, placed_j, spec)?.value;
                    cache.insert(key, v);
                    v
                }
            };
            overlaps += value;
        }
    }
    Ok(Decomposition {
        self_energy,
        potential_corrections: corrections,
        pair_overlaps: overlaps,
        total: self_energy + corrections + overlaps,
        neglected_bound: bound,
    })
}

/// Rows of the `k,r,h,rho,total,err` sweep table.
pub fn sweep_csv(rows: &[(usize, f64, f64, Option<f64>, EnergyBreakdown)]) -> String {
    let mut out = String::from("k,r,h,rho,total,err\n");
    for (k, r, h, rho, e) in rows {
        let rho = rho.map_or(String::new(), |x| format!("{x:.16e}"));
        out.push_str(&format!(
            "{k},{r:.16e},{h:.16e},{rho},{:.16e},{:.16e}\n",
            e.total, e.error_estimate
        ));
    }
    out
}

/// Shared base profile for callers that only need `W₁`.
pub fn base_profile() -> Result<Arc<RadialProfile>> {
    Ok(Arc::new(RadialProfile::solve_default(1.0)?))
}

impl EnergyBreakdown {
    /// Largest deviation from the bookkeeping identity.
    pub fn bookkeeping_defect(&self) -> f64 {
        let p = self.parts();
        (self.total - (p[0] + p[1] - p[2] - p[3] - p[4])).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingParams;
    use crate::geometry::BumpConfiguration;
    use crate::potential::builtin_potential;
    use std::sync::OnceLock;

    fn base() -> Arc<RadialProfile> {
        static P: OnceLock<Arc<RadialProfile>> = OnceLock::new();
        Arc::clone(P.get_or_init(|| base_profile().unwrap()))
    }

    fn coupling(mu: f64) -> CouplingParams {
        CouplingParams::new(mu, mu, 0.0).unwrap()
    }

    #[test]
    fn separated_pair_is_twice_the_single_energy() {
        let c = CouplingParams::new(1.0, 1.0, 0.3).unwrap();
        let (a, g) = c.amplitudes().unwrap();
        let bumps = vec![
            Bump { center: [0.0, 0.0, 20.0], u_amp: a, v_amp: g },
            Bump { center: [0.0, 0.0, -20.0], u_amp: a, v_amp: g },
        ];
        let f = AnsatzField::with_orbits(c, base(), bumps, vec![Orbit { representative: 0, multiplicity: 2 }]).unwrap();
        let flat = Potential::constant();
        let spec = QuadratureSpec { order: 6, order_step: 2, ..Default::default() };
        let e = energy_direct(&f, &flat, &flat, &spec).unwrap();
        let want = 2.0 * 0.25 * (a * a + g * g) * base().mass4();
        assert!((e.total - want).abs() < 1e-4 * want, "{} vs {want}", e.total);
        assert!(e.bookkeeping_defect() < 1e-12);
    }

    #[test]
    fn single_energy_scales_with_mu() {
        // W_μ = μ^{-1/2} W makes the energy of one segregated bump scale as 1/μ.
        let flat = Potential::constant();
        let spec = QuadratureSpec { order: 6, order_step: 2, ..Default::default() };
        let mut totals = Vec::new();
        for mu in [1.0, 4.0] {
            let c = coupling(mu);
            let f = AnsatzField::from_bumps(c, base(), vec![Bump { center: [0.0; 3], u_amp: mu.sqrt().recip(), v_amp: 0.0 }]).unwrap();
            totals.push(energy_direct(&f, &flat, &flat, &spec).unwrap().total);
        }
        assert!((totals[1] / totals[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_configurations() {
        let f = AnsatzField::new(BumpConfiguration::synchronized(9, 40.0, 0.3).unwrap(), coupling(1.0), base()).unwrap();
        let flat = Potential::constant();
        assert!(matches!(energy_direct(&f, &flat, &flat, &QuadratureSpec::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn potential_correction_properties() {
        let p = base();
        let zero = builtin_potential(0.0, 2.0).unwrap();
        assert_eq!(potential_correction(&p, &zero, 20.0).unwrap().value, 0.0);
        let one = builtin_potential(0.5, 2.0).unwrap();
        let two = builtin_potential(1.0, 2.0).unwrap();
        let v1 = potential_correction(&p, &one, 20.0).unwrap().value;
        let v2 = potential_correction(&p, &two, 20.0).unwrap().value;
        assert!((v2 - 2.0 * v1).abs() < 1e-10 * v2.abs());
        let a40 = potential_correction(&p, &two, 40.0).unwrap().value;
        let a80 = potential_correction(&p, &two, 80.0).unwrap().value;
        assert!(((a80 / a40) / 0.25 - 1.0).abs() < 0.03);
        assert!((a80 * 6400.0 / p.mass2() - 1.0).abs() < 0.01);
    }

    #[test]
    fn pair_interaction_is_isotropic() {
        let p = base();
        let a = pair_interaction(&p, 8.0, [1.0, 0.0, 0.0]).unwrap();
        let b = pair_interaction(&p, 8.0, [1.0, 0.0, 1.0]).unwrap();
        assert!((a.value - b.value).abs() < 1e-4 * a.value);
        let lead = p.tail_amplitude() * p.interaction_base() * (-8.0f64).exp() / 8.0;
        assert!((a.value / lead - 1.0).abs() < 1e-3, "{} vs {lead}", a.value);
    }

    #[test]
    fn cross_overlap_is_symmetric_and_positive() {
        let p = base();
        let v = cross_species_overlap(&p, &p, 8.0).unwrap();
        assert!(v.value > 0.0);
        let q = RadialProfile::solve_default(2.0).unwrap();
        let x = cross_species_overlap(&p, &q, 8.0).unwrap().value;
        let y = cross_species_overlap(&q, &p, 8.0).unwrap().value;
        assert!((x - y).abs() < 1e-6 * x);
    }

    #[test]
    fn sweep_csv_format() {
        let e = EnergyBreakdown::from_parts([1.0, 1.0, 0.25, 0.25, 0.0], 1e-9);
        let csv = sweep_csv(&[(4, 8.0, 0.5, None, e)]);
        assert!(csv.starts_with("k,r,h,rho,total,err\n4,8.0000000000000000e0,"));
    }
}
