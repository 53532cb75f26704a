//! Independent reference computations for every closed form in the crate.
//!
//! Nothing on the primary path calls into this module. Each check pairs a
//! library result with a differently derived value and records the
//! comparison in an [`OracleReport`].

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::collapse::{
    damped_probability_matrix_with_exponents, damping_exponent, decoherence_onset,
    delta_e_of_baseline, delta_e_pairwise, CollapseParams, SphericalMass,
};
use crate::error::{require, Error, Result};
use crate::flavor::{Flavor, MassSpectrum, MixingAngles, MixingMatrix, MASS_PAIRS};
use crate::numeric::{bisect, bracket_positive, integrate};
use crate::observability::{matched_dm2, max_observable_energy, observability_length};
use crate::oscillation::{probability_matrix, ProbabilityMatrix};

pub const ALGEBRAIC_TOL: f64 = 1e-10;
pub const QUADRATURE_TOL: f64 = 1e-9;
pub const ROOT_TOL: f64 = 1e-6;
/// Near E* the closed-form bracket is a difference of nearly equal terms.
pub const NEAR_EDGE_ROOT_TOL: f64 = 1e-4;
pub const STOCHASTIC_TOL: f64 = 1e-2;

/// Fewest Monte Carlo samples [`delta_e_numeric`] accepts.
pub const MIN_SAMPLES: usize = 1000;

/// Outcome of one primary-versus-oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub primary: f64,
    pub oracle: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl OracleReport {
    /// Compares `primary` against `oracle` relative to `max(|oracle|, floor)`.
    /// Below 1e-300 the comparison falls back to absolute error.
    pub fn compare(
        name: impl Into<String>,
        primary: f64,
        oracle: f64,
        floor: f64,
        tolerance: f64,
    ) -> Self {
        let reference = oracle.abs().max(floor);
        let diff = (primary - oracle).abs();
        let relative_error = if reference < 1e-300 {
            diff
        } else {
            diff / reference
        };
        Self {
            name: name.into(),
            primary,
            oracle,
            relative_error,
            tolerance,
            passed: relative_error <= tolerance,
            detail: String::new(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} primary={:.16e} oracle={:.16e} rel_err={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.primary,
            self.oracle,
            self.relative_error,
            self.tolerance
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Transition probability from the pair-sum expansion
/// `δ_αβ − Σ_{j≠k} U*_αj U_αk U_βj U*_βk [1 − e^{iΔm²_jk L/2E − Γ_jk}]`
/// with Δm²_jk = m_k² − m_j². Γ is ordered (12, 13, 23).
pub fn pair_sum_probability(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
    alpha: Flavor,
    beta: Flavor,
    exponents: [f64; 3],
) -> f64 {
    let gamma = |j: usize, k: usize| {
        let slot = MASS_PAIRS
            .iter()
            .position(|&p| p == (j.min(k), j.max(k)))
            .expect("off-diagonal");
        exponents[slot]
    };
    let mut sum = Complex64::new(if alpha == beta { 1.0 } else { 0.0 }, 0.0);
    for j in 0..3 {
        for k in 0..3 {
            if j == k {
                continue;
            }
            let w = u.entry(alpha, j).conj()
                * u.entry(alpha, k)
                * u.entry(beta, j)
                * u.entry(beta, k).conj();
            let phase = spectrum.dm2(j, k) * baseline / (2.0 * energy);
            let factor = Complex64::from_polar((-gamma(j, k)).exp(), phase);
            sum -= w * (Complex64::new(1.0, 0.0) - factor);
        }
    }
    sum.re
}

/// |Σ_j U*_αj e^{−i m_j² L/2E} U_βj|² with absolute squared masses, i.e.
/// without removing the common phase.
pub fn amplitude_probability(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
    alpha: Flavor,
    beta: Flavor,
) -> f64 {
    (0..3)
        .map(|j| {
            let m = spectrum.mass(j);
            u.entry(alpha, j).conj()
                * Complex64::from_polar(1.0, -m * m * baseline / (2.0 * energy))
                * u.entry(beta, j)
        })
        .sum::<Complex64>()
        .norm_sqr()
}

fn worst_entry(
    name: &str,
    primary: &ProbabilityMatrix,
    oracle: impl Fn(Flavor, Flavor) -> f64,
    tolerance: f64,
) -> OracleReport {
    let mut worst: Option<OracleReport> = None;
    for a in Flavor::ALL {
        for b in Flavor::ALL {
            let r = OracleReport::compare(name, primary.get(a, b), oracle(a, b), 1.0, tolerance)
                .with_detail(format!("worst entry P_{a}{b}"));
            if worst
                .as_ref()
                .is_none_or(|w| r.relative_error > w.relative_error)
            {
                worst = Some(r);
            }
        }
    }
    worst.expect("nine entries")
}

/// Signature of a probability-matrix implementation under test.
pub type ProbabilityFn =
    dyn Fn(&MixingMatrix, &MassSpectrum, f64, f64) -> Result<ProbabilityMatrix>;

/// Unitary probabilities against the pair-sum expansion. Probabilities are
/// compared on an absolute scale (floor 1).
pub fn verify_probability(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
) -> Result<OracleReport> {
    verify_probability_with(&probability_matrix, u, spectrum, energy, baseline)
}

pub fn verify_probability_with(
    primary: &ProbabilityFn,
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
) -> Result<OracleReport> {
    let p = primary(u, spectrum, energy, baseline)?;
    Ok(worst_entry(
        "probability",
        &p,
        |a, b| pair_sum_probability(u, spectrum, energy, baseline, a, b, [0.0; 3]),
        ALGEBRAIC_TOL,
    ))
}

/// Damped density-matrix probabilities against the damped pair-sum form.
pub fn verify_damped_probability(
    u: &MixingMatrix,
    spectrum: &MassSpectrum,
    energy: f64,
    baseline: f64,
    exponents: [f64; 3],
) -> Result<OracleReport> {
    let p = damped_probability_matrix_with_exponents(u, spectrum, energy, baseline, exponents)?;
    Ok(worst_entry(
        "damped_probability",
        &p,
        |a, b| pair_sum_probability(u, spectrum, energy, baseline, a, b, exponents),
        ALGEBRAIC_TOL,
    ))
}

fn unit_ball_point(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        if p.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return p;
        }
    }
}

/// Monte Carlo estimate of ∬ ρ_a(r) ρ_b(r′)/|r − r′| for every pair of the
/// given spheres, all from one shared sample set.
fn interaction_integrals(spheres: &[SphericalMass], samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spheres.len();
    let mut sums = vec![vec![0.0; n]; n];
    for _ in 0..samples {
        let x = unit_ball_point(&mut rng);
        let y = unit_ball_point(&mut rng);
        for (a, sa) in spheres.iter().enumerate() {
            for (b, sb) in spheres.iter().enumerate() {
                let dist = (0..3)
                    .map(|i| {
                        let d =
                            (sa.center[i] + sa.radius * x[i]) - (sb.center[i] + sb.radius * y[i]);
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt();
                sums[a][b] += 1.0 / dist;
            }
        }
    }
    for (a, row) in sums.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v *= spheres[a].mass * spheres[b].mass / samples as f64;
        }
    }
    sums
}

/// 4πξ/m_P² ∬ [ρ1 − ρ2](r) [ρ1 − ρ2](r′) / |r − r′| dr dr′ by Monte Carlo
/// with `samples` point pairs. `rho2 = None` leaves ρ1 alone.
///
/// Partially overlapping spheres are rejected; identical ones give 0.
pub fn delta_e_numeric(
    rho1: &SphericalMass,
    rho2: Option<&SphericalMass>,
    params: &CollapseParams,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    require(samples >= MIN_SAMPLES, || {
        format!("at least {MIN_SAMPLES} samples required, got {samples}")
    })?;
    let prefactor = 4.0 * PI * params.xi * params.constants.gravitational_coupling();
    let Some(rho2) = rho2 else {
        return Ok(prefactor * interaction_integrals(&[*rho1], samples, seed)[0][0]);
    };
    let d = rho1.distance_to(rho2);
    let radii = rho1.radius + rho2.radius;
    if d < radii && rho1 != rho2 {
        return Err(Error::Overlap {
            separation: d,
            radii,
        });
    }
    let i = interaction_integrals(&[*rho1, *rho2], samples, seed);
    Ok(prefactor * (i[0][0] + i[1][1] - i[0][1] - i[1][0]))
}

/// Two spheres on the x axis, `separation` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpherePair {
    pub m_j: f64,
    pub m_k: f64,
    pub a_j: f64,
    pub a_k: f64,
    pub separation: f64,
}

/// Two-sphere ΔE against the Monte Carlo double integral; 1% tolerance.
pub fn verify_delta_e(
    config: &SpherePair,
    params: &CollapseParams,
    samples: usize,
    seed: u64,
) -> Result<OracleReport> {
    let rho1 = SphericalMass::new(config.m_j, config.a_j, [0.0; 3])?;
    let rho2 = SphericalMass::new(config.m_k, config.a_k, [config.separation, 0.0, 0.0])?;
    let oracle = delta_e_numeric(&rho1, Some(&rho2), params, samples, seed)?;
    let primary = if config.separation == 0.0 && rho1 == rho2 {
        0.0
    } else {
        delta_e_pairwise(
            config.m_j,
            config.m_k,
            config.a_j,
            config.a_k,
            config.separation,
            params,
        )?
    };
    Ok(
        OracleReport::compare("delta_e", primary, oracle, 0.0, STOCHASTIC_TOL)
            .with_detail(format!("{samples} samples, seed {seed}")),
    )
}

/// Closed-form damping exponent against adaptive quadrature of ΔE(L′)
/// over [D, L], integrated in ln L′.
pub fn damping_by_quadrature(
    m_j: f64,
    m_k: f64,
    energy: f64,
    dm2: f64,
    baseline: f64,
    params: &CollapseParams,
) -> Result<f64> {
    let Some(onset) = decoherence_onset(m_j, m_k, energy, dm2, params)? else {
        return Ok(0.0);
    };
    if baseline <= onset {
        return Ok(0.0);
    }
    let integrand = |s: f64| {
        let l = s.exp();
        delta_e_of_baseline(m_j, m_k, energy, dm2, l, params).unwrap_or(f64::NAN) * l
    };
    Ok(integrate(integrand, onset.ln(), baseline.ln(), 1e-13, 0.0, 10_000)?.value)
}

pub fn verify_damping(
    m_j: f64,
    m_k: f64,
    energy: f64,
    dm2: f64,
    baseline: f64,
    params: &CollapseParams,
) -> Result<OracleReport> {
    let primary = damping_exponent(m_j, m_k, energy, dm2, baseline, params)?;
    let oracle = damping_by_quadrature(m_j, m_k, energy, dm2, baseline, params)?;
    Ok(OracleReport::compare(
        "damping",
        primary,
        oracle,
        0.0,
        QUADRATURE_TOL,
    ))
}

/// Onset found by bisecting the sign change of ΔE(L).
pub fn onset_by_bisection(
    m_j: f64,
    m_k: f64,
    energy: f64,
    dm2: f64,
    params: &CollapseParams,
) -> Result<f64> {
    let f = |l: f64| delta_e_of_baseline(m_j, m_k, energy, dm2, l, params).unwrap_or(f64::NAN);
    let (lo, hi) = bracket_positive(f, 1.0, 2000)?;
    bisect(f, lo, hi, 1e-14)
}

pub fn verify_onset(
    m_j: f64,
    m_k: f64,
    energy: f64,
    dm2: f64,
    params: &CollapseParams,
) -> Result<OracleReport> {
    let primary = decoherence_onset(m_j, m_k, energy, dm2, params)?
        .ok_or_else(|| Error::InvalidInput("degenerate pair has no onset".into()))?;
    let oracle = onset_by_bisection(m_j, m_k, energy, dm2, params)?;
    Ok(OracleReport::compare(
        "onset",
        primary,
        oracle,
        0.0,
        QUADRATURE_TOL,
    ))
}

/// Baseline at which the damping exponent with Δm² = 4πE/L reaches 1,
/// by bisection. `None` if the exponent never reaches 1.
pub fn observability_length_by_bisection(
    m_j: f64,
    m_k: f64,
    energy: f64,
    params: &CollapseParams,
) -> Result<Option<f64>> {
    let excess = |l: f64| match matched_dm2(energy, l) {
        Ok(dm2) => damping_exponent(m_j, m_k, energy, dm2, l, params).unwrap_or(f64::NAN) - 1.0,
        Err(_) => f64::NAN,
    };
    let guess = params.constants.planck_mass.powi(2) * params.constants.fermi_constant
        / (m_j + m_k).max(1e-300);
    match bracket_positive(excess, guess, 1100) {
        Ok((lo, hi)) => Ok(Some(bisect(excess, lo, hi, 1e-13)?)),
        Err(Error::RootNotBracketed { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn verify_observability(
    m_j: f64,
    m_k: f64,
    energy: f64,
    params: &CollapseParams,
) -> Result<OracleReport> {
    verify_observability_at(m_j, m_k, energy, params, ROOT_TOL)
}

pub fn verify_observability_at(
    m_j: f64,
    m_k: f64,
    energy: f64,
    params: &CollapseParams,
    tolerance: f64,
) -> Result<OracleReport> {
    let closed = match observability_length(m_j, m_k, energy, params) {
        Ok(l) => Some(l),
        Err(Error::OutOfDomain(_)) => None,
        Err(e) => return Err(e),
    };
    let solved = observability_length_by_bisection(m_j, m_k, energy, params)?;
    Ok(match (closed, solved) {
        (Some(p), Some(o)) => OracleReport::compare("observability", p, o, 0.0, tolerance),
        (None, None) => OracleReport {
            name: "observability".into(),
            primary: f64::INFINITY,
            oracle: f64::INFINITY,
            relative_error: 0.0,
            tolerance,
            passed: true,
            detail: "both undefined: no finite length".into(),
        },
        (p, o) => OracleReport {
            name: "observability".into(),
            primary: p.unwrap_or(f64::INFINITY),
            oracle: o.unwrap_or(f64::INFINITY),
            relative_error: f64::INFINITY,
            tolerance,
            passed: false,
            detail: "domains disagree".into(),
        },
    })
}

/// Which family of checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckGroup {
    Probability,
    DeltaE,
    Damping,
    Observability,
}

impl CheckGroup {
    pub const ALL: [CheckGroup; 4] = [
        CheckGroup::Probability,
        CheckGroup::DeltaE,
        CheckGroup::Damping,
        CheckGroup::Observability,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "probability" => Ok(CheckGroup::Probability),
            "delta_e" | "delta-e" => Ok(CheckGroup::DeltaE),
            "damping" => Ok(CheckGroup::Damping),
            "observability" => Ok(CheckGroup::Observability),
            other => Err(Error::InvalidInput(format!(
                "unknown check group `{other}`"
            ))),
        }
    }
}

/// Monte Carlo sample count for [`delta_e_numeric`].
pub fn resolution_samples(resolution: &str) -> Result<usize> {
    match resolution {
        "low" => Ok(100_000),
        "medium" => Ok(400_000),
        "high" => Ok(1_600_000),
        n => n.parse::<usize>().map_err(|_| {
            Error::InvalidInput(format!(
                "resolution must be low|medium|high or a count, got `{n}`"
            ))
        }),
    }
}

/// Runs the full set of oracle checks at a fixed configuration. Reports are
/// ordered deterministically by group and then by case.
pub fn run_suite(
    groups: &[CheckGroup],
    samples: usize,
    seed: u64,
    params: &CollapseParams,
) -> Result<Vec<OracleReport>> {
    let mut out = Vec::new();
    let label = |mut r: OracleReport, case: &str| {
        r.name = format!("{}:{case}", r.name);
        r
    };
    let c = params.constants;

    if groups.contains(&CheckGroup::Probability) {
        let spectrum = MassSpectrum::default_degenerate();
        let cases: [(&str, MixingMatrix, f64, f64); 4] = [
            ("identity", MixingMatrix::identity(), 1e9, 3.1e12),
            (
                "global_fit",
                MixingMatrix::from_angles(&MixingAngles::default_global_fit()),
                1e9,
                3.1e12,
            ),
            (
                "cp_phase",
                MixingMatrix::from_angles(&MixingAngles::new(0.59, 0.15, 0.86, 4.1)?),
                2e9,
                7.7e12,
            ),
            (
                "tri_bimaximal",
                MixingMatrix::from_angles(&MixingAngles::tri_bimaximal()),
                5e8,
                9.0e13,
            ),
        ];
        for (case, u, e, l) in cases {
            out.push(label(verify_probability(&u, &spectrum, e, l)?, case));
        }
        let u = MixingMatrix::from_angles(&MixingAngles::new(0.59, 0.15, 0.86, 4.1)?);
        out.push(label(
            verify_damped_probability(&u, &spectrum, 2e9, 7.7e12, [0.1, 0.7, 2.5])?,
            "cp_phase",
        ));
    }

    if groups.contains(&CheckGroup::DeltaE) {
        let unit = params.with_xi(1.0)?;
        let a = unit.effective_radius(2.0);
        let cases = [
            (
                "equal_far",
                SpherePair {
                    m_j: 2.0,
                    m_k: 2.0,
                    a_j: a,
                    a_k: a,
                    separation: 20.0 * a,
                },
            ),
            (
                "unequal_far",
                SpherePair {
                    m_j: 1.0,
                    m_k: 3.0,
                    a_j: 0.5 * a,
                    a_k: 1.5 * a,
                    separation: 25.0 * a,
                },
            ),
            (
                "coincident",
                SpherePair {
                    m_j: 2.0,
                    m_k: 2.0,
                    a_j: a,
                    a_k: a,
                    separation: 0.0,
                },
            ),
        ];
        for (case, pair) in cases {
            out.push(label(verify_delta_e(&pair, &unit, samples, seed)?, case));
        }
    }

    if groups.contains(&CheckGroup::Damping) {
        let p = params.with_xi(1.0)?;
        let (e, dm2) = (1e22, 1e-5);
        let onset = decoherence_onset(2.0, 2.0, e, dm2, &p)?.expect("massive pair");
        out.push(label(
            verify_onset(2.0, 2.0, e, dm2, &p)?,
            "closed_vs_bisection",
        ));
        out.push(label(
            verify_damping(2.0, 2.0, e, dm2, onset, &p)?,
            "at_onset",
        ));
        out.push(label(
            verify_damping(2.0, 2.0, e, dm2, 2.0 * onset, &p)?,
            "twice_onset",
        ));
        let far = c.lightyears_to_natural(1e10)?;
        out.push(label(
            verify_damping(2.0, 2.000_001, e, 7.4e-5, far, &p)?,
            "cosmological",
        ));
        out.push(label(
            verify_damping(0.05, 0.09, 1e12, 2.5e-3, 1e3 * onset, &p)?,
            "light_pair",
        ));
    }

    if groups.contains(&CheckGroup::Observability) {
        let p = params.with_xi(1.0)?;
        let e_star = max_observable_energy(2.0, 2.0, &c)?;
        out.push(label(
            verify_observability(2.0, 2.0, 1e22, &p)?,
            "below_edge",
        ));
        out.push(label(
            verify_observability(2.0, 2.0, 0.3 * e_star, &p)?,
            "mid_window",
        ));
        out.push(label(
            verify_observability_at(2.0, 2.0, 0.99 * e_star, &p, NEAR_EDGE_ROOT_TOL)?,
            "near_edge",
        ));
        out.push(label(
            verify_observability(2.0, 2.0, 1.5 * e_star, &p)?,
            "above_edge",
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_fallback_to_absolute() {
        let r = OracleReport::compare("x", 1e-310, 0.0, 0.0, 1e-9);
        assert!(r.passed);
        let r = OracleReport::compare("x", 1.0, 1.1, 0.0, 1e-3);
        assert!(!r.passed);
        assert!(r.to_string().starts_with("FAIL x"));
    }

    #[test]
    fn identity_mixing_is_exact() {
        let r = verify_probability(
            &MixingMatrix::identity(),
            &MassSpectrum::default_degenerate(),
            1e9,
            5e12,
        )
        .unwrap();
        assert_eq!(r.relative_error, 0.0);
    }

    #[test]
    fn amplitude_oracle_agrees_at_moderate_phase() {
        let u = MixingMatrix::from_angles(&MixingAngles::new(0.59, 0.15, 0.86, 4.1).unwrap());
        let s = MassSpectrum::new(0.01, 0.015, 0.05).unwrap();
        let (e, l) = (1e9, 2e12);
        let p = probability_matrix(&u, &s, e, l).unwrap();
        for a in Flavor::ALL {
            for b in Flavor::ALL {
                assert!((p.get(a, b) - amplitude_probability(&u, &s, e, l, a, b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coincident_spheres_cancel_exactly() {
        let p = CollapseParams::new(1.0).unwrap();
        let s = SphericalMass::new(2.0, 1e-3, [0.0; 3]).unwrap();
        assert_eq!(delta_e_numeric(&s, Some(&s), &p, 2000, 7).unwrap(), 0.0);
        let partial = SphericalMass::new(2.0, 1e-3, [1e-3, 0.0, 0.0]).unwrap();
        assert!(matches!(
            delta_e_numeric(&s, Some(&partial), &p, 2000, 7),
            Err(Error::Overlap { .. })
        ));
        assert!(delta_e_numeric(&s, None, &p, 10, 7).is_err());
    }

    #[test]
    fn above_edge_both_undefined() {
        let p = CollapseParams::new(1.0).unwrap();
        let r = verify_observability(2.0, 2.0, 1e24, &p).unwrap();
        assert!(r.passed);
        assert!(r.primary.is_infinite());
    }

    #[test]
    fn group_parsing() {
        assert_eq!(CheckGroup::parse("damping").unwrap(), CheckGroup::Damping);
        assert!(CheckGroup::parse("nope").is_err());
        assert_eq!(resolution_samples("low").unwrap(), 100_000);
        assert_eq!(resolution_samples("5000").unwrap(), 5000);
        assert!(resolution_samples("lots").is_err());
    }
}
