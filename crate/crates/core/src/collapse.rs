//! Gravity-induced (Diósi–Penrose) decoherence of the mass superposition.
//!
//! Each pair of mass states (j, k) is treated as two uniform spheres of
//! radius a = G_F·m whose centers drift apart as Δm² L / 2E². The Newtonian
//! self-energy of the difference of the two mass distributions,
//!
//! ```text
//! ΔE(L) = 8πξ G [ 3m_j²/5a_j + 3m_k²/5a_k − m_j m_k / d(L) ]
//!       = 8πξ G [ A − B / L ],   A = 3(m_j + m_k)/(5 G_F),   B = 2 m_j m_k E²/Δm²,
//! ```
//!
//! vanishes at the onset D = B/A and is integrated from there to give the
//! exponent Γ that damps the (j, k) coherence of the flavor density matrix.
//! Here G = 1/m_P².

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::error::{require, Result};
use crate::flavor::{Flavor, MassSpectrum, MixingMatrix, MASS_PAIRS};
use crate::oscillation::{clamp_probability, evolved_mass_amplitudes, ProbabilityMatrix};

/// Collapse strength ξ together with the constants that fix G, G_F and the
/// effective radius rule a = G_F·m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseParams {
    pub xi: f64,
    pub constants: PhysicalConstants,
}

impl CollapseParams {
    pub fn new(xi: f64) -> Result<Self> {
        Self::with_constants(xi, PhysicalConstants::default())
    }

    pub fn with_constants(xi: f64, constants: PhysicalConstants) -> Result<Self> {
        require(xi.is_finite() && xi >= 0.0, || {
            format!("xi must be finite and ≥ 0, got {xi}")
        })?;
        Ok(Self { xi, constants })
    }

    /// Same constants, different ξ.
    pub fn with_xi(&self, xi: f64) -> Result<Self> {
        Self::with_constants(xi, self.constants)
    }

    /// a = G_F·m, eV⁻¹.
    pub fn effective_radius(&self, mass: f64) -> f64 {
        self.constants.fermi_constant * mass
    }

    /// 8πξ/m_P², the prefactor shared by every ΔE expression.
    fn prefactor(&self) -> f64 {
        8.0 * PI * self.xi * self.constants.gravitational_coupling()
    }
}

/// A uniform sphere of mass `mass` (eV) and radius `radius` (eV⁻¹).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalMass {
    pub mass: f64,
    pub radius: f64,
    pub center: [f64; 3],
}

impl SphericalMass {
    pub fn new(mass: f64, radius: f64, center: [f64; 3]) -> Result<Self> {
        require(mass.is_finite() && mass > 0.0, || {
            format!("sphere mass must be > 0, got {mass}")
        })?;
        require(radius.is_finite() && radius > 0.0, || {
            format!("sphere radius must be > 0, got {radius}")
        })?;
        require(center.iter().all(|c| c.is_finite()), || {
            "sphere center must be finite".into()
        })?;
        Ok(Self {
            mass,
            radius,
            center,
        })
    }

    /// Uniform density 3m / 4πa³.
    pub fn density(&self) -> f64 {
        3.0 * self.mass / (4.0 * PI * self.radius.powi(3))
    }

    pub fn distance_to(&self, other: &SphericalMass) -> f64 {
        self.center
            .iter()
            .zip(other.center.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn sphere_self_term(mass: f64, radius: f64) -> f64 {
    if mass == 0.0 {
        0.0
    } else {
        3.0 * mass * mass / (5.0 * radius)
    }
}

/// ΔE for two displaced uniform spheres:
/// 8πξ/m_P² · [3m_j²/5a_j + 3m_k²/5a_k − m_j m_k/d], in eV.
pub fn delta_e_pairwise(
    m_j: f64,
    m_k: f64,
    a_j: f64,
    a_k: f64,
    separation: f64,
    params: &CollapseParams,
) -> Result<f64> {
    for (what, m, a) in [("j", m_j, a_j), ("k", m_k, a_k)] {
        require(m.is_finite() && m >= 0.0, || {
            format!("mass {what} must be ≥ 0, got {m}")
        })?;
        require(m == 0.0 || (a.is_finite() && a > 0.0), || {
            format!("radius {what} must be > 0 for a massive state, got {a}")
        })?;
    }
    require(separation > 0.0, || {
        format!("separation must be > 0, got {separation}")
    })?;
    let bracket = sphere_self_term(m_j, a_j) + sphere_self_term(m_k, a_k) - m_j * m_k / separation;
    Ok(params.prefactor() * bracket)
}

/// Displacement Δm² L / 2E² (eV⁻¹) accumulated between two mass states of
/// common energy E after a baseline L.
pub fn separation(energy: f64, dm2: f64, baseline: f64) -> Result<f64> {
    require(energy.is_finite() && energy > 0.0, || {
        format!("energy must be > 0, got {energy}")
    })?;
    Ok(dm2.abs() * baseline / (2.0 * energy * energy))
}

/// The pair constants A, B of ΔE(L) = 8πξ G (A − B/L) and the onset D = B/A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCoefficients {
    /// 3(m_j + m_k)/(5 G_F), eV³.
    pub a: f64,
    /// 2 m_j m_k E²/Δm², eV².
    pub b: f64,
    /// D = B/A, eV⁻¹.
    pub onset: f64,
}

impl PairCoefficients {
    /// `None` when the pair never separates or carries no mass.
    pub fn new(
        m_j: f64,
        m_k: f64,
        energy: f64,
        dm2: f64,
        params: &CollapseParams,
    ) -> Result<Option<Self>> {
        require(energy.is_finite() && energy > 0.0, || {
            format!("energy must be > 0, got {energy}")
        })?;
        for m in [m_j, m_k] {
            require(m.is_finite() && m >= 0.0, || {
                format!("masses must be ≥ 0, got {m}")
            })?;
        }
        require(dm2.is_finite(), || "dm2 must be finite".into())?;
        if m_j == 0.0 || m_k == 0.0 || dm2 == 0.0 {
            return Ok(None);
        }
        let a = 3.0 * (m_j + m_k) / (5.0 * params.constants.fermi_constant);
        let b = 2.0 * m_j * m_k * energy * energy / dm2.abs();
        Ok(Some(Self { a, b, onset: b / a }))
    }
}

/// ΔE for the pair after baseline L, eV. Negative before the onset.
pub fn delta_e_of_baseline(
    m_j: f64,
    m_k: f64,
    energy: f64,
    dm2: f64,
    baseline: f64,
    params: &CollapseParams,
) -> Result<f64> {
    require(m_j > 0.0 && m_k > 0.0, || "both masses must be > 0".into())?;
    require(dm2 != 0.0, || "dm2 must be non-zero".into())?;
    require(baseline.is_finite() && baseline > 0.0, || {
        format!("baseline must be > 0, got {baseline}")
    })?;
    let c = PairCoefficients::new(m_j, m_k, energy, dm2, params)?.expect("non-degenerate pair");
    Ok(params.prefactor() * (c.a - c.b / baseline))
}

/// Baseline D (eV⁻¹) at which ΔE of the pair crosses zero:
/// 10 G_F m_j m_k E² / (3 (m_j + m_k) Δm²). `None` for a degenerate pair,
/// which is never damped.
pub fn decoherence_onset(
    m_j: f64,
    m_k: f64,
    energy: f64,
    dm2: f64,
    params: &CollapseParams,
) -> Result<Option<f64>> {
    Ok(PairCoefficients::new(m_j, m_k, energy, dm2, params)?.map(|c| c.onset))
}

/// x − ln(1 + x) without cancellation for small x.
fn x_minus_ln1p(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // x²/2 − x³/3 + x⁴/4 − ...
        let mut term = x * x;
        let mut sum = 0.0;
        let mut n = 2.0;
        loop {
            let next = term / n;
            sum += next;
            if next.abs() <= 1e-17 * sum.abs() {
                return sum;
            }
            term *= -x;
            n += 1.0;
        }
    } else {
        x - x.ln_1p()
    }
}

/// Γ = ∫_D^L ΔE(L′) dL′ = 8πξ G [A(L − D) − B ln(L/D)]; zero for L ≤ D and
/// for degenerate pairs.
pub fn damping_exponent(
    m_j: f64,
    m_k: f64,
    energy: f64,
    dm2: f64,
    baseline: f64,
    params: &CollapseParams,
) -> Result<f64> {
    require(baseline.is_finite() && baseline >= 0.0, || {
        format!("baseline must be ≥ 0, got {baseline}")
    })?;
    let Some(c) = PairCoefficients::new(m_j, m_k, energy, dm2, params)? else {
        return Ok(0.0);
    };
    if baseline <= c.onset {
        return Ok(0.0);
    }
    // with D = B/A: A(L − D) − B ln(L/D) = B [x − ln(1 + x)], x = (L − D)/D
    let x = (baseline - c.onset) / c.onset;
    Ok(params.prefactor() * c.b * x_minus_ln1p(x))
}

/// Damping state of one mass pair at a given (E, L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairDamping {
    /// Zero-based mass indices, j < k.
    pub j: usize,
    pub k: usize,
    /// Onset D in eV⁻¹; `None` if the pair never decoheres.
    pub onset: Option<f64>,
    pub exponent: f64,
}

/// Onsets and exponents of the three pairs (12, 13, 23).
pub fn pair_dampings(
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
    params: &CollapseParams,
) -> Result<[PairDamping; 3]> {
    let mut out = [PairDamping {
        j: 0,
        k: 0,
        onset: None,
        exponent: 0.0,
    }; 3];
    for (slot, &(j, k)) in out.iter_mut().zip(MASS_PAIRS.iter()) {
        let (m_j, m_k, dm2) = (spectrum.mass(j), spectrum.mass(k), spectrum.dm2(j, k));
        *slot = PairDamping {
            j,
            k,
            onset: decoherence_onset(m_j, m_k, energy, dm2, params)?,
            exponent: damping_exponent(m_j, m_k, energy, dm2, baseline, params)?,
        };
    }
    Ok(out)
}

fn pair_slot(j: usize, k: usize) -> usize {
    match (j.min(k), j.max(k)) {
        (0, 1) => 0,
        (0, 2) => 1,
        (1, 2) => 2,
        _ => unreachable!("diagonal pair"),
    }
}

fn damped_row(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
    alpha: Flavor,
    exponents: &[f64; 3],
) -> [f64; 3] {
    let a = evolved_mass_amplitudes(u, spectrum, alpha, energy, baseline);
    let suppression = exponents.map(|g| (-g).exp());
    let mut row = [0.0; 3];
    for beta in Flavor::ALL {
        // c_j = U_βj ρ-amplitude; P = Σ_jk c_j c_k* w_jk with w_jj = 1
        let c: [Complex64; 3] = std::array::from_fn(|j| u.entry(beta, j) * a[j]);
        let mut p: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        for &(j, k) in MASS_PAIRS.iter() {
            p += 2.0 * (c[j] * c[k].conj()).re * suppression[pair_slot(j, k)];
        }
        row[beta.index()] = clamp_probability(p);
    }
    row
}

fn check_beam(energy: f64, baseline: f64) -> Result<()> {
    require(energy.is_finite() && energy > 0.0, || {
        format!("energy must be > 0, got {energy}")
    })?;
    require(baseline.is_finite() && baseline >= 0.0, || {
        format!("baseline must be ≥ 0, got {baseline}")
    })
}

/// Transition probabilities with the (j, k) coherences suppressed by
/// e^{−Γ_jk}. `exponents` are ordered as the pairs (12, 13, 23).
pub fn damped_probability_matrix_with_exponents(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
    exponents: [f64; 3],
) -> Result<ProbabilityMatrix> {
    check_beam(energy, baseline)?;
    require(exponents.iter().all(|g| *g >= 0.0 && !g.is_nan()), || {
        format!("damping exponents must be ≥ 0, got {exponents:?}")
    })?;
    let mut p = [[0.0; 3]; 3];
    for alpha in Flavor::ALL {
        p[alpha.index()] = damped_row(u, spectrum, energy, baseline, alpha, &exponents);
    }
    Ok(ProbabilityMatrix(p))
}

/// Damped transition probabilities; identical to the unitary ones at ξ = 0.
pub fn damped_probability_matrix(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
    params: &CollapseParams,
) -> Result<ProbabilityMatrix> {
    let dampings = pair_dampings(spectrum, energy, baseline, params)?;
    damped_probability_matrix_with_exponents(
        u,
        spectrum,
        energy,
        baseline,
        dampings.map(|d| d.exponent),
    )
}

/// Damped P(ν_α → ν_β).
pub fn damped_transition_probability(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
    alpha: Flavor,
    beta: Flavor,
    params: &CollapseParams,
) -> Result<f64> {
    check_beam(energy, baseline)?;
    let exponents = pair_dampings(spectrum, energy, baseline, params)?.map(|d| d.exponent);
    Ok(damped_row(u, spectrum, energy, baseline, alpha, &exponents)[beta.index()])
}

/// Order-of-magnitude lifetime Δr/m² (Planck units) of a superposition of
/// a body of mass `grams` displaced by `meters`, in seconds.
pub fn mean_life_estimate(grams: f64, meters: f64, constants: &PhysicalConstants) -> Result<f64> {
    require(grams.is_finite() && grams > 0.0, || {
        format!("mass must be > 0 g, got {grams}")
    })?;
    require(meters.is_finite() && meters > 0.0, || {
        format!("displacement must be > 0 m, got {meters}")
    })?;
    let mass = constants.grams_to_ev(grams)?;
    let spread = constants.meters_to_natural(meters)?;
    let lifetime = spread * (constants.planck_mass / mass).powi(2);
    constants.natural_time_to_seconds(lifetime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flavor::MixingAngles;
    use crate::oscillation::{phase_averaged_matrix, probability_matrix};

    const YEAR: f64 = 365.25 * 86400.0;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn params(xi: f64) -> CollapseParams {
        CollapseParams::new(xi).unwrap()
    }

    #[test]
    fn pairwise_limits() {
        let p = params(1.0);
        assert_eq!(delta_e_pairwise(0.0, 0.0, 0.0, 0.0, 1.0, &p).unwrap(), 0.0);
        let (m, a) = (2.0, p.effective_radius(2.0));
        let far = delta_e_pairwise(m, m, a, a, 1e300, &p).unwrap();
        let asymptote = 8.0 * PI / PLANCK_MASS2 * (2.0 * 3.0 * m * m / (5.0 * a));
        assert!(rel(far, asymptote) < 1e-14);
        assert!(delta_e_pairwise(m, m, a, a, 0.0, &p).is_err());
        assert!(delta_e_pairwise(-1.0, m, a, a, 1.0, &p).is_err());
    }

    const PLANCK_MASS2: f64 = crate::constants::PLANCK_MASS * crate::constants::PLANCK_MASS;

    #[test]
    fn separation_values() {
        assert_eq!(separation(1e9, 2.5e-3, 0.0).unwrap(), 0.0);
        assert_eq!(separation(1e9, 0.0, 1e20).unwrap(), 0.0);
        let d = separation(1e9, 2.5e-3, 5.03e12).unwrap();
        assert!(rel(d, 6.3e-9) < 2e-3, "{d:e}");
        assert!(rel(d * crate::constants::HBAR_C, 1.24e-15) < 1e-2);
        assert!(separation(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn baseline_form_asymptote() {
        let p = params(1.0);
        let huge = delta_e_of_baseline(2.0, 2.0, 1e20, 1e-3, 1e300, &p).unwrap();
        let a = 3.0 * 4.0 / (5.0 * crate::constants::FERMI_CONSTANT);
        assert!(rel(a, 2.06e23) < 2e-3);
        assert!(rel(huge, 8.0 * PI * a / PLANCK_MASS2) < 1e-14);
        assert!(rel(huge, 3.5e-32) < 1e-2, "{huge:e}");
        assert!(delta_e_of_baseline(2.0, 2.0, 1e20, 0.0, 1.0, &p).is_err());
        assert!(delta_e_of_baseline(2.0, 2.0, 1e20, 1e-3, 0.0, &p).is_err());
        assert!(delta_e_of_baseline(0.0, 2.0, 1e20, 1e-3, 1.0, &p).is_err());
    }

    #[test]
    fn onset_is_the_root() {
        let p = params(1.0);
        let d = decoherence_onset(2.0, 2.0, 1e22, 1e-5, &p)
            .unwrap()
            .unwrap();
        let at = delta_e_of_baseline(2.0, 2.0, 1e22, 1e-5, d, &p).unwrap();
        let scale = delta_e_of_baseline(2.0, 2.0, 1e22, 1e-5, 1e300, &p).unwrap();
        assert!(at.abs() <= 1e-10 * scale);
        let d2 = decoherence_onset(2.0, 2.0, 2e22, 1e-5, &p)
            .unwrap()
            .unwrap();
        assert!(rel(d2, 4.0 * d) < 1e-15);
        assert_eq!(decoherence_onset(0.0, 2.0, 1e22, 1e-5, &p).unwrap(), None);
        assert_eq!(decoherence_onset(2.0, 2.0, 1e22, 0.0, &p).unwrap(), None);
    }

    #[test]
    fn exponent_zero_up_to_onset() {
        let p = params(1.0);
        let d = decoherence_onset(2.0, 2.0, 1e22, 1e-5, &p)
            .unwrap()
            .unwrap();
        assert_eq!(damping_exponent(2.0, 2.0, 1e22, 1e-5, d, &p).unwrap(), 0.0);
        assert_eq!(
            damping_exponent(2.0, 2.0, 1e22, 1e-5, 0.5 * d, &p).unwrap(),
            0.0
        );
        assert_eq!(
            damping_exponent(2.0, 2.0, 1e22, 0.0, 1e40, &p).unwrap(),
            0.0
        );
        assert!(damping_exponent(2.0, 2.0, 1e22, 1e-5, 1.0001 * d, &p).unwrap() > 0.0);
        let g1 = damping_exponent(2.0, 2.0, 1e22, 1e-5, 10.0 * d, &p).unwrap();
        let g3 = damping_exponent(2.0, 2.0, 1e22, 1e-5, 10.0 * d, &params(3.0)).unwrap();
        assert!(rel(g3, 3.0 * g1) < 1e-15);
    }

    #[test]
    fn exponent_at_twice_onset() {
        let p = params(1.0);
        let c = PairCoefficients::new(2.0, 2.0, 1e22, 1e-5, &p)
            .unwrap()
            .unwrap();
        let g = damping_exponent(2.0, 2.0, 1e22, 1e-5, 2.0 * c.onset, &p).unwrap();
        let closed = 8.0 * PI / PLANCK_MASS2 * (c.a * c.onset - c.b * 2f64.ln());
        assert!(rel(g, closed) < 1e-12);
    }

    #[test]
    fn small_x_series_matches_direct() {
        for x in [0.099, 0.05, 1e-3] {
            assert!(rel(x_minus_ln1p(x), x - x.ln_1p()) < 1e-9);
        }
        assert!(rel(x_minus_ln1p(0.2), 0.2 - 0.2f64.ln_1p()) < 1e-15);
    }

    #[test]
    fn damped_equals_unitary_at_zero_xi() {
        let u = MixingMatrix::from_angles(&MixingAngles::new(0.58, 0.15, 0.84, 3.9).unwrap());
        let s = MassSpectrum::default_degenerate();
        let c = PhysicalConstants::default();
        let (e, l) = (1e22, c.lightyears_to_natural(1e10).unwrap());
        let unitary = probability_matrix(&u, &s, e, l).unwrap();
        let damped = damped_probability_matrix(&u, &s, e, l, &params(0.0)).unwrap();
        assert!(unitary.max_abs_diff(&damped) < 1e-14);
    }

    #[test]
    fn strong_damping_reaches_phase_average() {
        let u = MixingMatrix::from_angles(&MixingAngles::new(0.58, 0.15, 0.84, 1.1).unwrap());
        let s = MassSpectrum::default_degenerate();
        let p = damped_probability_matrix_with_exponents(&u, &s, 1e9, 3e12, [50.0; 3]).unwrap();
        assert!(p.max_abs_diff(&phase_averaged_matrix(&u)) < 1e-15);
        assert!(p.stochastic_residual() < 1e-10);
        assert!(
            damped_probability_matrix_with_exponents(&u, &s, 1e9, 3e12, [-1.0, 0.0, 0.0]).is_err()
        );
    }

    #[test]
    fn single_probability_matches_matrix() {
        let u = MixingMatrix::from_angles(&MixingAngles::default_global_fit());
        let s = MassSpectrum::default_degenerate();
        let c = PhysicalConstants::default();
        let l = c.lightyears_to_natural(1e9).unwrap();
        let p = params(1e-2);
        let m = damped_probability_matrix(&u, &s, 1e22, l, &p).unwrap();
        let one =
            damped_transition_probability(&u, &s, 1e22, l, Flavor::Mu, Flavor::Tau, &p).unwrap();
        assert_eq!(one, m.get(Flavor::Mu, Flavor::Tau));
    }

    #[test]
    fn mean_life_text_estimates() {
        let c = PhysicalConstants::default();
        let nucleon = mean_life_estimate(1.67e-24, 1e-15, &c).unwrap();
        assert!(nucleon > 1e7 * YEAR, "{:e} yr", nucleon / YEAR);
        let dust = mean_life_estimate(1e-4, 1e-3, &c).unwrap();
        assert!((1e-14..=1e-12).contains(&dust), "{dust:e}");
        let planck = mean_life_estimate(c.ev_to_grams(c.planck_mass), c.planck_length, &c).unwrap();
        assert!(rel(planck, c.planck_time_seconds()) < 1e-12);
        assert!(mean_life_estimate(0.0, 1.0, &c).is_err());
        assert!(mean_life_estimate(1.0, -1.0, &c).is_err());
    }

    #[test]
    fn sphere_validation() {
        assert!(SphericalMass::new(0.0, 1.0, [0.0; 3]).is_err());
        assert!(SphericalMass::new(1.0, 0.0, [0.0; 3]).is_err());
        let s = SphericalMass::new(1.0, 2.0, [0.0; 3]).unwrap();
        assert!(rel(s.density(), 3.0 / (32.0 * PI)) < 1e-15);
        assert!(CollapseParams::new(-1.0).is_err());
    }
}
