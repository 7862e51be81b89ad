//! Constants of the coupled system: synchronized amplitudes, the β partition, and the
//! analytic energy constants built from the base profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_state::RadialProfile;

/// Position of β relative to the nondegeneracy set
/// `(-√(μ₁μ₂), 0) ∪ (0, min μ) ∪ (max μ, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowClass {
    /// β ∈ (0, min(μ₁, μ₂)).
    AttractiveSmall,
    /// β ∈ (-√(μ₁μ₂), 0). The countable exceptional set inside this interval is not excluded.
    Repulsive,
    /// β ∈ (max(μ₁, μ₂), ∞).
    AttractiveLarge,
    /// Everything else, including β = 0 and β ∈ [min μ, max μ].
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub window_class: WindowClass,
    /// Set whenever the class cannot be certified because the exceptional sequence is unknown.
    pub exceptional_set_unchecked: bool,
}

/// Analytic candidates for the expansion constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConstants {
    pub a0: f64,
    /// `[α²·mass2, α²·mass2/2]`.
    pub a1_candidates: [f64; 2],
    /// `[γ²·mass2, γ²·mass2/2]`.
    pub a2_candidates: [f64; 2],
}

fn check_mu(mu1: f64, mu2: f64) -> Result<()> {
    if mu1 > 0.0 && mu2 > 0.0 && mu1.is_finite() && mu2.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "mu1 and mu2 must be positive, got ({mu1}, {mu2})"
        )))
    }
}

/// True when `(αW, γW)` exists: β ∈ (-√(μ₁μ₂), min μ) ∪ (max μ, ∞).
pub fn amplitudes_defined(mu1: f64, mu2: f64, beta: f64) -> bool {
    let lo = -(mu1 * mu2).sqrt();
    (beta > lo && beta < mu1.min(mu2)) || beta > mu1.max(mu2)
}

pub fn synchronized_amplitudes(mu1: f64, mu2: f64, beta: f64) -> Result<(f64, f64)> {
    check_mu(mu1, mu2)?;
    if !amplitudes_defined(mu1, mu2, beta) {
        return Err(Error::InadmissibleCoupling(format!(
            "beta = {beta} is outside (-sqrt(mu1 mu2), min mu) U (max mu, inf) for mu = ({mu1}, {mu2})"
        )));
    }
    let det = mu1 * mu2 - beta * beta;
    Ok((((mu2 - beta) / det).sqrt(), ((mu1 - beta) / det).sqrt()))
}

pub fn classify_beta(mu1: f64, mu2: f64, beta: f64) -> WindowClass {
    let lo = -(mu1 * mu2).sqrt();
    if beta > lo && beta < 0.0 {
        WindowClass::Repulsive
    } else if beta > 0.0 && beta < mu1.min(mu2) {
        WindowClass::AttractiveSmall
    } else if beta > mu1.max(mu2) {
        WindowClass::AttractiveLarge
    } else {
        WindowClass::Outside
    }
}

impl CouplingParams {
    pub fn new(mu1: f64, mu2: f64, beta: f64) -> Result<Self> {
        check_mu(mu1, mu2)?;
        if !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be finite, got {beta}")));
        }
        let amps = synchronized_amplitudes(mu1, mu2, beta).ok();
        let window_class = classify_beta(mu1, mu2, beta);
        Ok(Self {
            mu1,
            mu2,
            beta,
            alpha: amps.map(|a| a.0),
            gamma: amps.map(|a| a.1),
            window_class,
            exceptional_set_unchecked: window_class == WindowClass::Repulsive,
        })
    }

    pub fn amplitudes(&self) -> Result<(f64, f64)> {
        match (self.alpha, self.gamma) {
            (Some(a), Some(g)) => Ok((a, g)),
            _ => Err(Error::InadmissibleCoupling(format!(
                "no synchronized amplitudes for beta = {}",
                self.beta
            ))),
        }
    }

    /// Largest of `|μ₁α² + βγ² - 1|` and `|βα² + μ₂γ² - 1|`.
    pub fn amplitude_residual(&self) -> Result<f64> {
        let (a, g) = self.amplitudes()?;
        let (a2, g2) = (a * a, g * g);
        let r1 = self.mu1 * a2 + self.beta * g2 - 1.0;
        let r2 = self.beta * a2 + self.mu2 * g2 - 1.0;
        Ok(r1.abs().max(r2.abs()))
    }

    /// Constants of the synchronized expansion. `profile` must be the μ = 1 ground state.
    pub fn analytic_constants(&self, profile: &RadialProfile) -> Result<AnalyticConstants> {
        let (a, g) = self.amplitudes()?;
        if (profile.mu() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "analytic constants use the mu = 1 base profile, got mu = {}",
                profile.mu()
            )));
        }
        let coeff = (self.mu1 + self.mu2 - 2.0 * self.beta)
            / (2.0 * (self.mu1 * self.mu2 - self.beta * self.beta));
        let m2 = profile.mass2();
        Ok(AnalyticConstants {
            a0: coeff * profile.mass4(),
            a1_candidates: [a * a * m2, 0.5 * a * a * m2],
            a2_candidates: [g * g * m2, 0.5 * g * g * m2],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decoupled_amplitudes_are_one() {
        let (a, g) = synchronized_amplitudes(1.0, 1.0, 0.0).unwrap();
        assert_eq!((a, g), (1.0, 1.0));
    }

    #[test]
    fn equal_mu_attractive() {
        let (a, g) = synchronized_amplitudes(2.0, 2.0, 1.0).unwrap();
        let want = (1.0f64 / 3.0).sqrt();
        assert!((a - want).abs() < 1e-15 && (g - want).abs() < 1e-15);
        assert!((2.0 * a * a + g * g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_vanishes_at_upper_edge() {
        let (_, g) = synchronized_amplitudes(1.0, 2.0, 1.0 - 1e-10).unwrap();
        assert!(g < 1e-4);
        assert!(synchronized_amplitudes(1.0, 2.0, 1.5).is_err());
        assert!(synchronized_amplitudes(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_beta(1.0, 1.0, -0.5), WindowClass::Repulsive);
        assert_eq!(classify_beta(1.0, 1.0, 0.5), WindowClass::AttractiveSmall);
        assert_eq!(classify_beta(1.0, 1.0, -2.0), WindowClass::Outside);
        assert_eq!(classify_beta(1.0, 2.0, 3.0), WindowClass::AttractiveLarge);
        assert_eq!(classify_beta(1.0, 2.0, 1.5), WindowClass::Outside);
        assert!(CouplingParams::new(1.0, 1.0, -0.5).unwrap().exceptional_set_unchecked);
    }

    #[test]
    fn decoupled_constants() {
        let p = RadialProfile::solve_default(1.0).unwrap();
        let c = CouplingParams::new(1.0, 1.0, 0.0).unwrap().analytic_constants(&p).unwrap();
        assert!((c.a0 - p.mass4()).abs() < 1e-12 * p.mass4());
        assert_eq!(c.a1_candidates, [p.mass2(), 0.5 * p.mass2()]);
    }

    #[test]
    fn synchronized_pair_solves_constant_potential_system() {
        let p = RadialProfile::solve_default(1.0).unwrap();
        let c = CouplingParams::new(1.5, 0.8, 0.3).unwrap();
        let (a, g) = c.amplitudes().unwrap();
        let w0 = p.center_value();
        for s in [0.3, 1.0, 2.5, 4.0, 7.5] {
            let (w, dw) = p.value_and_deriv(s);
            let lap = p.second_deriv(s) + 2.0 * dw / s;
            let (u, v) = (a * w, g * w);
            let ru = -a * lap + u - c.mu1 * u.powi(3) - c.beta * u * v * v;
            let rv = -g * lap + v - c.mu2 * v.powi(3) - c.beta * u * u * v;
            assert!(ru.abs().max(rv.abs()) < 1e-6 * w0.powi(3), "s={s}: {ru} {rv}");
        }
    }

    proptest! {
        #[test]
        fn classification_is_symmetric(mu1 in 0.1f64..5.0, mu2 in 0.1f64..5.0, beta in -6.0f64..6.0) {
            prop_assert_eq!(classify_beta(mu1, mu2, beta), classify_beta(mu2, mu1, beta));
        }

        #[test]
        fn amplitude_identities(mu1 in 0.2f64..4.0, mu2 in 0.2f64..4.0, t in 0.01f64..0.99, upper in any::<bool>()) {
            let beta = if upper {
                mu1.max(mu2) + 0.01 + 3.0 * t
            } else {
                let lo = -(mu1 * mu2).sqrt();
                lo + (mu1.min(mu2) - lo) * t
            };
            let c = CouplingParams::new(mu1, mu2, beta).unwrap();
            prop_assert!(c.amplitude_residual().unwrap() < 1e-12);
        }
    }
}
