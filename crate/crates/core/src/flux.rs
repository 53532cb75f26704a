//! Flavor fluxes at source and detector.

use serde::Serialize;

use crate::error::{require, Result};
use crate::flavor::Flavor;
use crate::oscillation::ProbabilityMatrix;

/// How far a probability matrix row may sum away from 1.
pub const STOCHASTIC_TOL: f64 = 1e-8;

/// Relative flavor fluxes (φ_e, φ_μ, φ_τ). Only ratios are meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlavorFlux {
    pub phi_e: f64,
    pub phi_mu: f64,
    pub phi_tau: f64,
}

impl FlavorFlux {
    pub fn new(phi_e: f64, phi_mu: f64, phi_tau: f64) -> Result<Self> {
        for (name, v) in [("phi_e", phi_e), ("phi_mu", phi_mu), ("phi_tau", phi_tau)] {
            require(v.is_finite() && v >= 0.0, || {
                format!("{name} must be finite and ≥ 0, got {v}")
            })?;
        }
        Ok(Self {
            phi_e,
            phi_mu,
            phi_tau,
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.phi_e, self.phi_mu, self.phi_tau]
    }

    pub fn get(&self, flavor: Flavor) -> f64 {
        self.as_array()[flavor.index()]
    }

    pub fn total(&self) -> f64 {
        self.phi_e + self.phi_mu + self.phi_tau
    }

    /// Fractions summing to 1.
    pub fn normalized(&self) -> Result<FlavorFlux> {
        let t = self.total();
        require(t > 0.0, || {
            "flux with zero total has no flavor ratio".into()
        })?;
        Ok(FlavorFlux {
            phi_e: self.phi_e / t,
            phi_mu: self.phi_mu / t,
            phi_tau: self.phi_tau / t,
        })
    }
}

/// π⁺ → μ⁺ ν_μ → e⁺ ν_e ν̄_μ ν_μ: one ν_e for every two ν_μ, no ν_τ.
pub fn pion_chain_source() -> FlavorFlux {
    FlavorFlux {
        phi_e: 1.0 / 3.0,
        phi_mu: 2.0 / 3.0,
        phi_tau: 0.0,
    }
}

/// φ^D_β = Σ_α P_αβ φ^S_α.
pub fn detector_flux(p: &ProbabilityMatrix, source: &FlavorFlux) -> Result<FlavorFlux> {
    let residual = p.stochastic_residual();
    require(residual <= STOCHASTIC_TOL, || {
        format!("probability matrix is not row-stochastic (residual {residual:e})")
    })?;
    require(p.0.iter().flatten().all(|v| *v >= 0.0), || {
        "negative transition probability".into()
    })?;
    let s = source.as_array();
    let mut out = [0.0; 3];
    for (beta, slot) in out.iter_mut().enumerate() {
        *slot = (0..3).map(|alpha| p.0[alpha][beta] * s[alpha]).sum();
    }
    FlavorFlux::new(out[0], out[1], out[2])
}

/// L∞ distance between the normalized flavor ratios of `a` and `b`.
pub fn ratio_deviation(a: &FlavorFlux, b: &FlavorFlux) -> Result<f64> {
    let (na, nb) = (a.normalized()?.as_array(), b.normalized()?.as_array());
    Ok(na
        .iter()
        .zip(nb.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pion_chain_ratios() {
        let s = pion_chain_source();
        assert!((s.normalized().unwrap().total() - 1.0).abs() < 1e-15);
        assert_eq!(s.phi_tau, 0.0);
        assert!((s.phi_mu / s.phi_e - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_propagation() {
        let s = pion_chain_source();
        assert_eq!(
            detector_flux(&ProbabilityMatrix::identity(), &s).unwrap(),
            s
        );
    }

    #[test]
    fn rejects_non_stochastic() {
        let mut p = ProbabilityMatrix::identity();
        p.0[0][0] = 0.9;
        assert!(detector_flux(&p, &pion_chain_source()).is_err());
    }

    #[test]
    fn deviation_extremes() {
        let a = FlavorFlux::new(1.0, 0.0, 0.0).unwrap();
        let b = FlavorFlux::new(0.0, 1.0, 0.0).unwrap();
        assert_eq!(ratio_deviation(&a, &a).unwrap(), 0.0);
        assert_eq!(ratio_deviation(&a, &b).unwrap(), 1.0);
        let scaled = FlavorFlux::new(3.0, 0.0, 0.0).unwrap();
        assert_eq!(ratio_deviation(&a, &scaled).unwrap(), 0.0);
        let zero = FlavorFlux::new(0.0, 0.0, 0.0).unwrap();
        assert!(ratio_deviation(&a, &zero).is_err());
        assert!(FlavorFlux::new(-1.0, 0.0, 0.0).is_err());
    }
}
