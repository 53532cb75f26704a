//! Where in (E, L) the collapse-induced damping becomes observable, and
//! what bound on ξ a null observation implies.
//!
//! Oscillations are visible when Δm² ≈ 4πE/L. Substituting that into the
//! damping exponent makes the onset D proportional to L, and setting the
//! exponent to 1 gives the closed-form observability length
//!
//! ```text
//! L = m_P² / (8πξ [A − (m_j m_k E / 2π) ln(6πe(m_j + m_k) / (5 G_F m_j m_k E))])
//! ```
//!
//! which is finite only below E* = 6π(m_j + m_k)/(5 G_F m_j m_k), where
//! the onset catches up with the baseline.

use std::f64::consts::{E as EULER, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::collapse::{
    damped_probability_matrix_with_exponents, damping_exponent, decoherence_onset, pair_dampings,
    CollapseParams, PairDamping,
};
use crate::constants::PhysicalConstants;
use crate::error::{require, Error, Result};
use crate::flavor::{MassSpectrum, MixingMatrix};
use crate::flux::{detector_flux, ratio_deviation, FlavorFlux};
use crate::numeric::{bisect, bracket_positive, ROOT_REL_TOL};
use crate::oscillation::{probability_matrix, ProbabilityMatrix};

/// Default damping exponent that counts as observable (an e⁻¹ suppression).
pub const DEFAULT_THRESHOLD: f64 = 1.0;

/// Δm² = 4πE/L at which a baseline L spans one oscillation length.
pub fn matched_dm2(energy: f64, baseline: f64) -> Result<f64> {
    require(energy.is_finite() && energy > 0.0, || {
        format!("energy must be > 0, got {energy}")
    })?;
    require(baseline.is_finite() && baseline > 0.0, || {
        format!("baseline must be > 0, got {baseline}")
    })?;
    Ok(4.0 * PI * energy / baseline)
}

fn check_pair(m_j: f64, m_k: f64) -> Result<()> {
    require(
        m_j.is_finite() && m_j > 0.0 && m_k.is_finite() && m_k > 0.0,
        || format!("pair masses must be > 0, got ({m_j}, {m_k})"),
    )
}

/// E* (eV) beyond which no finite observability length exists.
///
/// Solved as the energy at which the decoherence onset, under the matched
/// Δm², reaches the baseline itself. The bracketed quantity of the
/// closed-form length touches zero there without changing sign, so the
/// onset condition is the one bisected.
pub fn max_observable_energy(m_j: f64, m_k: f64, constants: &PhysicalConstants) -> Result<f64> {
    check_pair(m_j, m_k)?;
    let params = CollapseParams::with_constants(1.0, *constants)?;
    // D/L is independent of L once Δm² = 4πE/L; any reference baseline works
    let reference = 1.0;
    let excess = |energy: f64| {
        let dm2 = 4.0 * PI * energy / reference;
        match decoherence_onset(m_j, m_k, energy, dm2, &params) {
            Ok(Some(d)) => d / reference - 1.0,
            _ => f64::NAN,
        }
    };
    let guess = (m_j + m_k) / (constants.fermi_constant * m_j * m_k);
    let (lo, hi) = bracket_positive(excess, guess, 200)?;
    bisect(excess, lo, hi, ROOT_REL_TOL)
}

/// Closed-form observability length in eV⁻¹.
pub fn observability_length(
    m_j: f64,
    m_k: f64,
    energy: f64,
    params: &CollapseParams,
) -> Result<f64> {
    check_pair(m_j, m_k)?;
    require(energy.is_finite() && energy > 0.0, || {
        format!("energy must be > 0, got {energy}")
    })?;
    require(params.xi > 0.0, || {
        "xi must be > 0 for a finite observability length".into()
    })?;
    let c = &params.constants;
    let a = 3.0 * (m_j + m_k) / (5.0 * c.fermi_constant);
    let x = m_j * m_k * energy;
    if x >= 2.0 * PI * a {
        return Err(Error::OutOfDomain(format!(
            "no finite observability length at E = {energy:e} eV: the decoherence onset exceeds the baseline"
        )));
    }
    let log_arg = 6.0 * PI * EULER * (m_j + m_k) / (5.0 * c.fermi_constant * x);
    let bracket = a - x / (2.0 * PI) * log_arg.ln();
    if bracket <= 0.0 {
        return Err(Error::OutOfDomain(format!(
            "no finite observability length at E = {energy:e} eV (bracket {bracket:e})"
        )));
    }
    Ok(c.planck_mass.powi(2) / (8.0 * PI * params.xi * bracket))
}

pub fn observability_length_ly(
    m_j: f64,
    m_k: f64,
    energy: f64,
    params: &CollapseParams,
) -> Result<f64> {
    Ok(params
        .constants
        .natural_to_lightyears(observability_length(m_j, m_k, energy, params)?))
}

/// The E → 0 limit m_P² · 5G_F / (8πξ · 3(m_j + m_k)), eV⁻¹.
pub fn minimal_observability_length(m_j: f64, m_k: f64, params: &CollapseParams) -> Result<f64> {
    check_pair(m_j, m_k)?;
    require(params.xi > 0.0, || "xi must be > 0".into())?;
    let c = &params.constants;
    Ok(c.planck_mass.powi(2) * 5.0 * c.fermi_constant / (8.0 * PI * params.xi * 3.0 * (m_j + m_k)))
}

/// Energy (eV) at which the observability length equals `target` (eV⁻¹).
pub fn energy_at_observability_length(
    m_j: f64,
    m_k: f64,
    target: f64,
    params: &CollapseParams,
) -> Result<f64> {
    let floor = minimal_observability_length(m_j, m_k, params)?;
    if target <= floor {
        return Err(Error::OutOfDomain(format!(
            "baseline {target:e} eV⁻¹ is below the minimal observability length {floor:e}"
        )));
    }
    let e_star = max_observable_energy(m_j, m_k, &params.constants)?;
    let gap = |energy: f64| match observability_length(m_j, m_k, energy, params) {
        Ok(l) => l - target,
        Err(_) => f64::INFINITY,
    };
    bisect(gap, e_star * 1e-12, e_star, ROOT_REL_TOL)
}

/// Largest ξ compatible with a damping exponent below `threshold` at
/// (E, L), taking Δm² = 4πE/L. Linear in `threshold`.
pub fn xi_upper_bound(
    m_j: f64,
    m_k: f64,
    energy: f64,
    baseline: f64,
    threshold: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    check_pair(m_j, m_k)?;
    require(threshold.is_finite() && threshold > 0.0, || {
        format!("threshold must be > 0, got {threshold}")
    })?;
    let dm2 = matched_dm2(energy, baseline)?;
    let unit = CollapseParams::with_constants(1.0, *constants)?;
    let exponent = damping_exponent(m_j, m_k, energy, dm2, baseline, &unit)?;
    if exponent <= 0.0 {
        return Err(Error::Unbounded(format!(
            "no damping accumulates at E = {energy:e} eV, L = {baseline:e} eV⁻¹"
        )));
    }
    Ok(threshold / exponent)
}

/// The (E, L) region in which damping of strength ξ is observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservabilityWindow {
    /// [0, E*] in eV.
    pub energy_range: [f64; 2],
    /// [L(E → 0), cap] in light-years.
    pub baseline_range: [f64; 2],
    /// Energy at which the observability length reaches the cap, eV.
    pub energy_at_cap: f64,
    pub xi: f64,
    pub masses: (f64, f64),
}

/// Observability window for a pair, with baselines capped at
/// `max_baseline_ly` (e.g. the size of the observable universe).
pub fn observability_window(
    m_j: f64,
    m_k: f64,
    params: &CollapseParams,
    max_baseline_ly: f64,
) -> Result<ObservabilityWindow> {
    let c = &params.constants;
    let e_star = max_observable_energy(m_j, m_k, c)?;
    let floor = minimal_observability_length(m_j, m_k, params)?;
    let cap = c.lightyears_to_natural(max_baseline_ly)?;
    let energy_at_cap = energy_at_observability_length(m_j, m_k, cap, params)?;
    Ok(ObservabilityWindow {
        energy_range: [0.0, e_star],
        baseline_range: [c.natural_to_lightyears(floor), max_baseline_ly],
        energy_at_cap,
        xi: params.xi,
        masses: (m_j, m_k),
    })
}

/// Fixed inputs of a grid scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSetup {
    pub mixing_angles: crate::flavor::MixingAngles,
    pub spectrum: MassSpectrum,
    pub params: CollapseParams,
    /// Zero-based mass pair whose onset and exponent are reported under the
    /// matched-Δm² condition.
    pub pair: (usize, usize),
    pub source: FlavorFlux,
}

impl ScanSetup {
    fn validate(&self) -> Result<()> {
        let (j, k) = self.pair;
        require(j < 3 && k < 3 && j != k, || {
            format!("invalid mass pair ({j}, {k})")
        })?;
        require(self.source.total() > 0.0, || {
            "source flux must have a positive total".into()
        })?;
        self.mixing_angles.validate()
    }
}

/// Observability quantities under Δm² = 4πE/L for the scan pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedCondition {
    pub dm2: f64,
    /// eV⁻¹; infinite if the pair never decoheres.
    pub onset: f64,
    pub exponent: f64,
}

/// One evaluated (E, L) point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanCell {
    pub energy: f64,
    pub baseline_ly: f64,
    /// `None` at L = 0.
    pub matched: Option<MatchedCondition>,
    /// Onsets and exponents of the actual spectrum's pairs (12, 13, 23).
    pub pairs: [PairDamping; 3],
    pub undamped: ProbabilityMatrix,
    pub damped: ProbabilityMatrix,
    pub detector_undamped: FlavorFlux,
    pub detector_damped: FlavorFlux,
    /// L∞ distance between undamped and damped detector flavor ratios.
    pub deviation: f64,
}

/// Evaluates one grid point.
pub fn evaluate_cell(setup: &ScanSetup, energy: f64, baseline_ly: f64) -> Result<ScanCell> {
    setup.validate()?;
    let c = &setup.params.constants;
    let baseline = c.lightyears_to_natural(baseline_ly)?;
    let u = MixingMatrix::from_angles(&setup.mixing_angles);
    let spectrum = &setup.spectrum;

    let matched = if baseline > 0.0 {
        let (m_j, m_k) = (spectrum.mass(setup.pair.0), spectrum.mass(setup.pair.1));
        let dm2 = matched_dm2(energy, baseline)?;
        let onset =
            decoherence_onset(m_j, m_k, energy, dm2, &setup.params)?.unwrap_or(f64::INFINITY);
        let exponent = damping_exponent(m_j, m_k, energy, dm2, baseline, &setup.params)?;
        Some(MatchedCondition {
            dm2,
            onset,
            exponent,
        })
    } else {
        None
    };

    let pairs = pair_dampings(spectrum, energy, baseline, &setup.params)?;
    let undamped = probability_matrix(&u, spectrum, energy, baseline)?;
    let damped = if pairs.iter().all(|p| p.exponent == 0.0) {
        undamped
    } else {
        damped_probability_matrix_with_exponents(
            &u,
            spectrum,
            energy,
            baseline,
            pairs.map(|p| p.exponent),
        )?
    };
    let detector_undamped = detector_flux(&undamped, &setup.source)?;
    let detector_damped = detector_flux(&damped, &setup.source)?;
    let deviation = ratio_deviation(&detector_undamped, &detector_damped)?;
    Ok(ScanCell {
        energy,
        baseline_ly,
        matched,
        pairs,
        undamped,
        damped,
        detector_undamped,
        detector_damped,
        deviation,
    })
}

/// Cells over an energy × baseline grid, energy-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanGrid {
    pub energies: Vec<f64>,
    pub baselines_ly: Vec<f64>,
    pub cells: Vec<ScanCell>,
}

impl ScanGrid {
    pub fn cell(&self, energy_index: usize, baseline_index: usize) -> &ScanCell {
        &self.cells[energy_index * self.baselines_ly.len() + baseline_index]
    }
}

fn check_grid(name: &str, grid: &[f64], allow_zero: bool) -> Result<()> {
    require(!grid.is_empty(), || format!("{name} grid is empty"))?;
    require(
        grid.iter()
            .all(|v| v.is_finite() && (*v > 0.0 || (allow_zero && *v == 0.0))),
        || format!("{name} grid values must be finite and positive"),
    )?;
    require(grid.windows(2).all(|w| w[0] < w[1]), || {
        format!("{name} grid must be strictly increasing")
    })
}

/// Evaluates every (E, L) cell. Cells are computed in parallel and stored
/// in grid order.
pub fn scan_window(setup: &ScanSetup, energies: &[f64], baselines_ly: &[f64]) -> Result<ScanGrid> {
    check_grid("energy", energies, false)?;
    check_grid("baseline", baselines_ly, false)?;
    setup.validate()?;
    let n_l = baselines_ly.len();
    let cells = (0..energies.len() * n_l)
        .into_par_iter()
        .map(|idx| evaluate_cell(setup, energies[idx / n_l], baselines_ly[idx % n_l]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanGrid {
        energies: energies.to_vec(),
        baselines_ly: baselines_ly.to_vec(),
        cells,
    })
}
