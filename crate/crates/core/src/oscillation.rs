//! Unitary vacuum oscillations: dispersion, oscillation lengths, phases and
//! flavor transition probabilities.
//!
//! Probabilities are computed from the evolved amplitude
//! `A_αβ = Σ_j U_βj U*_αj exp(−i (m_j² − m_1²) L / 2E)`; the common phase
//! `exp(−i(E t − m_1² L/2E))` is dropped since only squared-mass differences
//! are observable. The equivalent pair-sum expansion lives in [`crate::oracle`].

use std::f64::consts::PI;
use std::ops::Index;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{require, Result};
use crate::flavor::{Flavor, MassSpectrum, MixingMatrix};

/// Largest m/E for which the ultra-relativistic expansion is trusted.
pub const RELATIVISTIC_LIMIT: f64 = 1e-3;

/// Slack allowed on probabilities before clamping to [0, 1].
pub const PROBABILITY_SLACK: f64 = 1e-12;

fn positive(what: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v > 0.0, || {
        format!("{what} must be finite and > 0, got {v}")
    })
}

fn non_negative(what: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v >= 0.0, || {
        format!("{what} must be finite and ≥ 0, got {v}")
    })
}

pub fn is_ultra_relativistic(energy: f64, mass: f64) -> bool {
    mass < RELATIVISTIC_LIMIT * energy
}

/// Exact momentum √(E² − m²) of a state with energy `energy` and mass `mass`.
pub fn momentum(energy: f64, mass: f64) -> Result<f64> {
    check_dispersion_args(energy, mass)?;
    // (E − m)(E + m) avoids cancellation in E² − m²
    Ok(((energy - mass) * (energy + mass)).sqrt())
}

/// E − p = m²/(E + p), accurate where E − √(E² − m²) would cancel.
pub fn momentum_deficit(energy: f64, mass: f64) -> Result<f64> {
    let p = momentum(energy, mass)?;
    Ok(mass * mass / (energy + p))
}

/// Second-order approximant E − m²/2E of [`momentum`].
pub fn momentum_approx(energy: f64, mass: f64) -> Result<f64> {
    check_dispersion_args(energy, mass)?;
    Ok(energy - mass * mass / (2.0 * energy))
}

fn check_dispersion_args(energy: f64, mass: f64) -> Result<()> {
    positive("energy", energy)?;
    non_negative("mass", mass)?;
    require(mass < energy, || {
        format!("mass {mass} eV must be below energy {energy} eV")
    })?;
    if !is_ultra_relativistic(energy, mass) {
        log::warn!(
            "m/E = {:e} exceeds the ultra-relativistic regime",
            mass / energy
        );
    }
    Ok(())
}

/// L_O = 4πE/Δm², eV⁻¹.
pub fn oscillation_length(energy: f64, dm2: f64) -> Result<f64> {
    positive("energy", energy)?;
    positive("dm2", dm2)?;
    Ok(4.0 * PI * energy / dm2)
}

/// Φ = Δm² L / 2E = 2π L / L_O.
pub fn quantum_phase(energy: f64, dm2: f64, baseline: f64) -> Result<f64> {
    positive("energy", energy)?;
    Ok(dm2 * baseline / (2.0 * energy))
}

/// A neutrino of definite energy produced in flavor `source`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Beam {
    /// eV.
    pub energy: f64,
    /// eV⁻¹.
    pub baseline: f64,
    pub source: Flavor,
}

impl Beam {
    pub fn new(energy: f64, baseline: f64, source: Flavor) -> Result<Self> {
        positive("energy", energy)?;
        non_negative("baseline", baseline)?;
        Ok(Self {
            energy,
            baseline,
            source,
        })
    }

    /// Whether every mass in `spectrum` is ultra-relativistic at this energy.
    /// Outside that regime results are still produced, with a warning.
    pub fn is_relativistic(&self, spectrum: &MassSpectrum) -> bool {
        spectrum
            .masses()
            .iter()
            .all(|&m| is_ultra_relativistic(self.energy, m))
    }
}

/// Mass-basis components of the evolved state: U*_{αj} e^{−i(m_j² − m_1²)L/2E}.
pub(crate) fn evolved_mass_amplitudes(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    alpha: Flavor,
    energy: f64,
    baseline: f64,
) -> [Complex64; 3] {
    let start = u.flavor_amplitudes(alpha);
    let offsets = spectrum.squared_mass_offsets();
    let mut out = start;
    for j in 0..3 {
        let phase = offsets[j] * baseline / (2.0 * energy);
        out[j] = start[j] * Complex64::from_polar(1.0, -phase);
    }
    out
}

pub(crate) fn clamp_probability(p: f64) -> f64 {
    debug_assert!(
        (-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) || !p.is_finite(),
        "probability {p} out of range"
    );
    p.clamp(0.0, 1.0)
}

fn warn_if_slow(beam: &Beam, spectrum: &MassSpectrum) {
    if !beam.is_relativistic(spectrum) {
        log::warn!(
            "beam energy {:e} eV is not ultra-relativistic for this spectrum",
            beam.energy
        );
    }
}

/// P(ν_α → ν_β) for unitary vacuum propagation.
pub fn transition_probability(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    beam: &Beam,
    beta: Flavor,
) -> f64 {
    warn_if_slow(beam, spectrum);
    let a = evolved_mass_amplitudes(u, spectrum, beam.source, beam.energy, beam.baseline);
    let amp: Complex64 = (0..3).map(|j| u.entry(beta, j) * a[j]).sum();
    clamp_probability(amp.norm_sqr())
}

/// Row-stochastic 3×3 matrix; entry `[α][β]` is P(ν_α → ν_β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityMatrix(pub [[f64; 3]; 3]);

impl ProbabilityMatrix {
    pub fn identity() -> Self {
        Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn get(&self, alpha: Flavor, beta: Flavor) -> f64 {
        self.0[alpha.index()][beta.index()]
    }

    pub fn row_sums(&self) -> [f64; 3] {
        self.0.map(|row| row.iter().sum())
    }

    /// max over rows of |Σ_β P_αβ − 1|.
    pub fn stochastic_residual(&self) -> f64 {
        self.row_sums()
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ProbabilityMatrix) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Entries in row-major order (ee, eμ, eτ, μe, ...).
    pub fn flat(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for (i, v) in self.0.iter().flatten().enumerate() {
            out[i] = *v;
        }
        out
    }
}

impl Index<(Flavor, Flavor)> for ProbabilityMatrix {
    type Output = f64;

    fn index(&self, (a, b): (Flavor, Flavor)) -> &f64 {
        &self.0[a.index()][b.index()]
    }
}

/// All nine unitary transition probabilities at energy `energy` (eV) and
/// baseline `baseline` (eV⁻¹).
pub fn probability_matrix(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
) -> Result<ProbabilityMatrix> {
    let mut p = [[0.0; 3]; 3];
    for alpha in Flavor::ALL {
        let beam = Beam::new(energy, baseline, alpha)?;
        for beta in Flavor::ALL {
            p[alpha.index()][beta.index()] = transition_probability(u, spectrum, &beam, beta);
        }
    }
    Ok(ProbabilityMatrix(p))
}

/// Fully decohered limit Σ_j |U_αj|² |U_βj|², reached when every
/// oscillation phase averages out.
pub fn phase_averaged_matrix(u: &MixingMatrix) -> ProbabilityMatrix {
    let mut p = [[0.0; 3]; 3];
    for alpha in Flavor::ALL {
        for beta in Flavor::ALL {
            p[alpha.index()][beta.index()] = (0..3)
                .map(|j| u.entry(alpha, j).norm_sqr() * u.entry(beta, j).norm_sqr())
                .sum();
        }
    }
    ProbabilityMatrix(p)
}

/// Energies of a uniform midpoint grid over [E(1−w), E(1+w)].
pub fn band_energies(center: f64, relative_width: f64, samples: usize) -> Result<Vec<f64>> {
    positive("energy", center)?;
    require((0.0..1.0).contains(&relative_width), || {
        format!("relative width must lie in [0, 1), got {relative_width}")
    })?;
    require(samples >= 1, || {
        "at least one energy sample is required".into()
    })?;
    let lo = center * (1.0 - relative_width);
    let span = 2.0 * relative_width * center;
    Ok((0..samples)
        .map(|i| lo + span * (i as f64 + 0.5) / samples as f64)
        .collect())
}

/// Mean of [`transition_probability`] over a detector energy band.
#[allow(clippy::too_many_arguments)]
pub fn band_averaged_probability(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    center: f64,
    relative_width: f64,
    baseline: f64,
    alpha: Flavor,
    beta: Flavor,
    samples: usize,
) -> Result<f64> {
    let energies = band_energies(center, relative_width, samples)?;
    let mut total = 0.0;
    for &e in &energies {
        total += transition_probability(u, spectrum, &Beam::new(e, baseline, alpha)?, beta);
    }
    Ok(total / energies.len() as f64)
}
