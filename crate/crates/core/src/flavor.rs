//! Leptonic mixing matrix and neutrino mass spectrum.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{require, Error, Result};

/// Neutrino flavor; the row index of the mixing matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Flavor {
    E,
    Mu,
    Tau,
}

impl Flavor {
    pub const ALL: [Flavor; 3] = [Flavor::E, Flavor::Mu, Flavor::Tau];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Flavor::E => "e",
            Flavor::Mu => "mu",
            Flavor::Tau => "tau",
        }
    }
}

impl TryFrom<usize> for Flavor {
    type Error = Error;

    fn try_from(i: usize) -> Result<Self> {
        Flavor::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("flavor index {i} out of range 0..3")))
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Three mixing angles and the Dirac phase, all in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingAngles {
    pub theta12: f64,
    pub theta13: f64,
    pub theta23: f64,
    pub delta_cp: f64,
}

impl MixingAngles {
    pub fn new(theta12: f64, theta13: f64, theta23: f64, delta_cp: f64) -> Result<Self> {
        let a = Self {
            theta12,
            theta13,
            theta23,
            delta_cp,
        };
        a.validate()?;
        Ok(a)
    }

    /// Builds angles from sin²θ values.
    pub fn from_sin2(s12sq: f64, s13sq: f64, s23sq: f64, delta_cp: f64) -> Result<Self> {
        for (name, v) in [
            ("sin2_theta12", s12sq),
            ("sin2_theta13", s13sq),
            ("sin2_theta23", s23sq),
        ] {
            require((0.0..=1.0).contains(&v), || {
                format!("{name} must lie in [0, 1], got {v}")
            })?;
        }
        Self::new(
            s12sq.sqrt().asin(),
            s13sq.sqrt().asin(),
            s23sq.sqrt().asin(),
            delta_cp,
        )
    }

    /// Tri-bimaximal mixing: sin²θ12 = 1/3, θ23 = π/4, θ13 = 0.
    pub fn tri_bimaximal() -> Self {
        Self {
            theta12: (1.0f64 / 3.0).sqrt().asin(),
            theta13: 0.0,
            theta23: PI / 4.0,
            delta_cp: 0.0,
        }
    }

    /// Shipped defaults: sin²θ12 = 0.307, sin²θ23 = 0.545, sin²θ13 = 0.022, δ = 0.
    pub fn default_global_fit() -> Self {
        Self::from_sin2(0.307, 0.022, 0.545, 0.0).expect("default angles are in range")
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("theta12", self.theta12),
            ("theta13", self.theta13),
            ("theta23", self.theta23),
        ] {
            require((0.0..=FRAC_PI_2).contains(&v), || {
                format!("{name} must lie in [0, π/2], got {v}")
            })?;
        }
        require((0.0..2.0 * PI).contains(&self.delta_cp), || {
            format!("delta_cp must lie in [0, 2π), got {}", self.delta_cp)
        })
    }

    /// The CP-conjugate angle set, δ → −δ (mod 2π).
    pub fn cp_conjugate(&self) -> Self {
        let delta_cp = if self.delta_cp == 0.0 {
            0.0
        } else {
            2.0 * PI - self.delta_cp
        };
        Self { delta_cp, ..*self }
    }
}

/// 3×3 mixing matrix; rows are flavors (e, μ, τ), columns mass states (1, 2, 3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingMatrix {
    u: [[Complex64; 3]; 3],
}

type Mat3 = [[Complex64; 3]; 3];

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl MixingMatrix {
    /// Wraps an arbitrary matrix. Unitarity is not enforced here; see
    /// [`MixingMatrix::unitarity_residual`].
    pub fn from_raw(u: [[Complex64; 3]; 3]) -> Self {
        Self { u }
    }

    pub fn identity() -> Self {
        let o = real(0.0);
        let l = real(1.0);
        Self {
            u: [[l, o, o], [o, l, o], [o, o, l]],
        }
    }

    /// Standard parameterization U = R23 · Δ(δ) R13 Δ(−δ) · R12 with
    /// Δ(δ) = diag(1, 1, e^{iδ}).
    pub fn from_angles(angles: &MixingAngles) -> Self {
        let (s12, c12) = angles.theta12.sin_cos();
        let (s13, c13) = angles.theta13.sin_cos();
        let (s23, c23) = angles.theta23.sin_cos();
        let phase = Complex64::from_polar(1.0, angles.delta_cp);
        let o = real(0.0);
        let l = real(1.0);

        let r23 = [
            [l, o, o],
            [o, real(c23), real(s23)],
            [o, real(-s23), real(c23)],
        ];
        let r13 = [
            [real(c13), o, real(s13) * phase.conj()],
            [o, l, o],
            [real(-s13) * phase, o, real(c13)],
        ];
        let r12 = [
            [real(c12), real(s12), o],
            [real(-s12), real(c12), o],
            [o, o, l],
        ];
        Self {
            u: matmul(&matmul(&r23, &r13), &r12),
        }
    }

    /// U_{αj}.
    pub fn entry(&self, alpha: Flavor, j: usize) -> Complex64 {
        self.u[alpha.index()][j]
    }

    pub fn raw(&self) -> &[[Complex64; 3]; 3] {
        &self.u
    }

    /// Entrywise complex conjugate, the mixing matrix for antineutrinos.
    pub fn conj(&self) -> Self {
        let mut u = self.u;
        u.iter_mut().flatten().for_each(|z| *z = z.conj());
        Self { u }
    }

    /// max over entries of |U·U† − I|.
    pub fn unitarity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let s: Complex64 = (0..3).map(|j| self.u[a][j] * self.u[b][j].conj()).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    /// Coefficients of |ν_α⟩ in the mass basis: (U*_{α1}, U*_{α2}, U*_{α3}).
    pub fn flavor_amplitudes(&self, alpha: Flavor) -> [Complex64; 3] {
        let row = self.u[alpha.index()];
        [row[0].conj(), row[1].conj(), row[2].conj()]
    }
}

/// Shorthand for [`MixingMatrix::from_angles`].
pub fn build_mixing_matrix(angles: &MixingAngles) -> MixingMatrix {
    MixingMatrix::from_angles(angles)
}

pub fn check_unitarity(u: &MixingMatrix) -> f64 {
    u.unitarity_residual()
}

/// Index-checked form of [`MixingMatrix::flavor_amplitudes`].
pub fn flavor_amplitudes(u: &MixingMatrix, alpha: usize) -> Result<[Complex64; 3]> {
    Ok(u.flavor_amplitudes(Flavor::try_from(alpha)?))
}

/// Neutrino masses m1, m2, m3 in eV, in the order given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassSpectrum {
    masses: [f64; 3],
}

impl MassSpectrum {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Result<Self> {
        for (i, m) in [m1, m2, m3].into_iter().enumerate() {
            require(m.is_finite() && m >= 0.0, || {
                format!("m{} must be finite and ≥ 0, got {m}", i + 1)
            })?;
        }
        Ok(Self {
            masses: [m1, m2, m3],
        })
    }

    /// Masses from m1 and the splittings Δm²_21, Δm²_31 (eV²).
    pub fn from_splittings(m1: f64, dm2_21: f64, dm2_31: f64) -> Result<Self> {
        let m2sq = m1 * m1 + dm2_21;
        let m3sq = m1 * m1 + dm2_31;
        require(m2sq >= 0.0 && m3sq >= 0.0, || {
            "splittings imply a negative squared mass".into()
        })?;
        Self::new(m1, m2sq.sqrt(), m3sq.sqrt())
    }

    /// Near-degenerate default: m1 = 2 eV with Δm²_21 = 7.42e-5 eV² and
    /// Δm²_31 = 2.517e-3 eV².
    pub fn default_degenerate() -> Self {
        Self::from_splittings(2.0, 7.42e-5, 2.517e-3).expect("default splittings are valid")
    }

    pub fn masses(&self) -> [f64; 3] {
        self.masses
    }

    /// m_j for a zero-based mass index.
    pub fn mass(&self, j: usize) -> f64 {
        self.masses[j]
    }

    /// Δm²_jk = m_k² − m_j², evaluated as (m_k − m_j)(m_k + m_j) so that
    /// near-degenerate masses keep their splitting.
    pub fn dm2(&self, j: usize, k: usize) -> f64 {
        let (mj, mk) = (self.masses[j], self.masses[k]);
        if j == k {
            return 0.0;
        }
        let d = (mk - mj) * (mk + mj);
        // antisymmetry must be exact
        if j < k {
            d
        } else {
            -self.dm2(k, j)
        }
    }

    /// m_j² − m_1², the phase offsets used by amplitude evolution.
    pub fn squared_mass_offsets(&self) -> [f64; 3] {
        [0.0, self.dm2(0, 1), self.dm2(0, 2)]
    }
}

/// Unordered mass-state pairs (j < k), zero-based.
pub const MASS_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
