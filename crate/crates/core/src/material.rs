//! Isotropic linear elasticity with thermal expansion, fracture parameters
//! and elastic wave speeds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Voigt vector (xx, yy, xy). Strains carry the engineering shear γ12.
pub type Voigt = [f64; 3];
pub type Matrix3 = [[f64; 3]; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("material `{name}`: {msg}")]
    Invalid { name: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisMode {
    #[default]
    PlaneStrain,
    PlaneStress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialModel {
    pub name: String,
    /// Young's modulus, Pa.
    #[serde(rename = "E")]
    pub youngs_modulus: f64,
    #[serde(rename = "nu")]
    pub poisson_ratio: f64,
    /// kg/m^3
    #[serde(rename = "rho")]
    pub density: f64,
    /// Critical energy release rate, J/m^2.
    #[serde(rename = "Gc")]
    pub fracture_energy: f64,
    /// Tensile strength for strength-based initiation, Pa.
    #[serde(rename = "ft", default, skip_serializing_if = "Option::is_none")]
    pub tensile_strength: Option<f64>,
    /// Linear thermal expansion coefficient, 1/K.
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub mode: AnalysisMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpeeds {
    pub dilatational: f64,
    pub shear: f64,
    pub rayleigh: f64,
}

impl MaterialModel {
    pub fn new(name: &str, e: f64, nu: f64, rho: f64, gc: f64) -> Self {
        MaterialModel {
            name: name.to_string(),
            youngs_modulus: e,
            poisson_ratio: nu,
            density: rho,
            fracture_energy: gc,
            tensile_strength: None,
            alpha: 0.0,
            mode: AnalysisMode::PlaneStrain,
        }
    }

    pub fn with_strength(mut self, ft: f64) -> Self {
        self.tensile_strength = Some(ft);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_mode(mut self, mode: AnalysisMode) -> Self {
        self.mode = mode;
        self
    }

    fn invalid(&self, msg: impl Into<String>) -> MaterialError {
        MaterialError::Invalid {
            name: self.name.clone(),
            msg: msg.into(),
        }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.youngs_modulus > 0.0 && self.youngs_modulus.is_finite()) {
            return Err(self.invalid(format!("E must be positive, got {}", self.youngs_modulus)));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(self.invalid(format!("nu must lie in [0, 0.5), got {}", self.poisson_ratio)));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(self.invalid(format!("rho must be positive, got {}", self.density)));
        }
        if !(self.fracture_energy > 0.0 && self.fracture_energy.is_finite()) {
            return Err(self.invalid(format!("Gc must be positive, got {}", self.fracture_energy)));
        }
        if let Some(ft) = self.tensile_strength {
            if !(ft > 0.0 && ft.is_finite()) {
                return Err(self.invalid(format!("ft must be positive, got {ft}")));
            }
        }
        if !self.alpha.is_finite() {
            return Err(self.invalid("alpha must be finite"));
        }
        Ok(())
    }

    /// In-plane thermal strain per kelvin. Plane strain carries the
    /// out-of-plane constraint as the factor (1 + nu).
    pub fn effective_alpha(&self) -> f64 {
        match self.mode {
            AnalysisMode::PlaneStrain => self.alpha * (1.0 + self.poisson_ratio),
            AnalysisMode::PlaneStress => self.alpha,
        }
    }
}

/// Constitutive matrix in Voigt order (xx, yy, xy) with engineering shear.
pub fn elastic_matrix(m: &MaterialModel) -> Result<Matrix3, MaterialError> {
    m.validate()?;
    let e = m.youngs_modulus;
    let nu = m.poisson_ratio;
    Ok(match m.mode {
        AnalysisMode::PlaneStrain => {
            let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
            [
                [c * (1.0 - nu), c * nu, 0.0],
                [c * nu, c * (1.0 - nu), 0.0],
                [0.0, 0.0, c * (1.0 - 2.0 * nu) / 2.0],
            ]
        }
        AnalysisMode::PlaneStress => {
            let c = e / (1.0 - nu * nu);
            [
                [c, c * nu, 0.0],
                [c * nu, c, 0.0],
                [0.0, 0.0, c * (1.0 - nu) / 2.0],
            ]
        }
    })
}

/// Dilatational and shear speeds from the 3D relations; Rayleigh speed from
/// Viktorov's approximation `v_s (0.862 + 1.14 nu) / (1 + nu)`.
pub fn wave_speeds(m: &MaterialModel) -> Result<WaveSpeeds, MaterialError> {
    m.validate()?;
    let e = m.youngs_modulus;
    let nu = m.poisson_ratio;
    let rho = m.density;
    let dilatational = (e * (1.0 - nu) / ((1.0 + nu) * (1.0 - 2.0 * nu) * rho)).sqrt();
    let shear = (e / (2.0 * (1.0 + nu) * rho)).sqrt();
    let rayleigh = shear * (0.862 + 1.14 * nu) / (1.0 + nu);
    Ok(WaveSpeeds {
        dilatational,
        shear,
        rayleigh,
    })
}

pub fn mat_vec(c: &Matrix3, v: &Voigt) -> Voigt {
    [
        c[0][0] * v[0] + c[0][1] * v[1] + c[0][2] * v[2],
        c[1][0] * v[0] + c[1][1] * v[1] + c[1][2] * v[2],
        c[2][0] * v[0] + c[2][1] * v[1] + c[2][2] * v[2],
    ]
}

/// sigma = C : (eps - eps_th), eps_th = alpha_eff * dT * (1, 1, 0).
pub fn stress_update(m: &MaterialModel, eps: &Voigt, d_temp: f64) -> Result<Voigt, MaterialError> {
    let c = elastic_matrix(m)?;
    let th = m.effective_alpha() * d_temp;
    Ok(mat_vec(&c, &[eps[0] - th, eps[1] - th, eps[2]]))
}
