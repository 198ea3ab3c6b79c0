//! Explicit Newmark integration (beta = 0) with prescribed-velocity ramps,
//! thermal ramps and an energy ledger. DOF `2 * node + d` is direction `d`
//! of `node`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::material::{wave_speeds, MaterialError, MaterialModel};
use crate::mesh::Mesh2D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("ramp time t0 must be positive, got {0}")]
    RampTime(f64),
    #[error("safety factor must lie in (0, 1], got {0}")]
    Safety(f64),
    #[error("Newmark gamma must lie in [0.5, 1], got {0}")]
    Gamma(f64),
    #[error("time step must be positive and finite, got {0}")]
    TimeStep(f64),
    #[error("DOF {0} is both velocity-prescribed and fixed")]
    ConflictingConstraint(usize),
    #[error("DOF {dof} out of range ({ndof} DOFs)")]
    DofOutOfRange { dof: usize, ndof: usize },
    #[error("free DOF {0} has non-positive mass")]
    MassNotPositive(usize),
    #[error("numerical instability at step {step}: non-finite value at DOF {dof}")]
    NonFinite { step: usize, dof: usize },
    #[error("element {0} has no material")]
    MissingMaterial(usize),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("{0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RampShape {
    /// Hold the target after `t0`.
    #[default]
    Hold,
    /// Drop back to zero after `t0`.
    ReturnToZero,
}

/// Linear ramp from zero to `target` over `[0, t0]`.
pub fn ramp_value(target: f64, t0: f64, t: f64, shape: RampShape) -> Result<f64, DynamicsError> {
    if !(t0 > 0.0) {
        return Err(DynamicsError::RampTime(t0));
    }
    Ok(if t <= t0 {
        target * t.max(0.0) / t0
    } else {
        match shape {
            RampShape::Hold => target,
            RampShape::ReturnToZero => 0.0,
        }
    })
}

/// Time derivative of [`ramp_value`]: `target / t0` inside the ramp, zero after.
pub fn ramp_rate(target: f64, t0: f64, t: f64) -> f64 {
    if t < t0 {
        target / t0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityBc {
    pub dofs: Vec<usize>,
    pub v0: f64,
    pub t0: f64,
    #[serde(default)]
    pub shape: RampShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalRamp {
    pub delta: f64,
    pub t0: f64,
    #[serde(default)]
    pub shape: RampShape,
}

/// Kinematic constraints and the thermal history. Body forces and tractions
/// enter through [`ForceModel::external_force`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadProgram {
    pub velocity: Vec<VelocityBc>,
    pub fixed: Vec<usize>,
    pub thermal: Option<ThermalRamp>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Constraint {
    Free,
    Fixed,
    Velocity(usize),
}

impl LoadProgram {
    pub fn validate(&self, ndof: usize) -> Result<(), DynamicsError> {
        self.constraints(ndof).map(|_| ())
    }

    fn constraints(&self, ndof: usize) -> Result<Vec<Constraint>, DynamicsError> {
        let mut c = vec![Constraint::Free; ndof];
        for (k, bc) in self.velocity.iter().enumerate() {
            if !(bc.t0 > 0.0) {
                return Err(DynamicsError::RampTime(bc.t0));
            }
            for &d in &bc.dofs {
                if d >= ndof {
                    return Err(DynamicsError::DofOutOfRange { dof: d, ndof });
                }
                c[d] = Constraint::Velocity(k);
            }
        }
        for &d in &self.fixed {
            if d >= ndof {
                return Err(DynamicsError::DofOutOfRange { dof: d, ndof });
            }
            if let Constraint::Velocity(_) = c[d] {
                return Err(DynamicsError::ConflictingConstraint(d));
            }
            c[d] = Constraint::Fixed;
        }
        if let Some(th) = &self.thermal {
            if !(th.t0 > 0.0) {
                return Err(DynamicsError::RampTime(th.t0));
            }
        }
        Ok(c)
    }

    pub fn temperature(&self, t: f64) -> f64 {
        match &self.thermal {
            Some(th) => ramp_value(th.delta, th.t0, t, th.shape).unwrap_or(0.0),
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub d_temp: f64,
}

impl KinematicState {
    pub fn at_rest(ndof: usize) -> Self {
        KinematicState {
            t: 0.0,
            u: vec![0.0; ndof],
            v: vec![0.0; ndof],
            a: vec![0.0; ndof],
            d_temp: 0.0,
        }
    }
}

/// Per-unit-thickness energies, J/m.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub kinetic: f64,
    pub strain: f64,
    /// Work of applied loads, prescribed motion and temperature change.
    pub external_work: f64,
    pub dissipated: f64,
}

impl EnergyLedger {
    /// `W_ext - (T + U + U_d)`.
    pub fn imbalance(&self) -> f64 {
        self.external_work - (self.kinetic + self.strain + self.dissipated)
    }
}

/// The spatial discretization seen by the integrator.
pub trait ForceModel {
    /// Lumped mass per DOF.
    fn mass(&self) -> &[f64];
    /// Writes `f_int(u)` into `f` and returns the stored strain energy.
    fn internal_force(&mut self, u: &[f64], d_temp: f64, f: &mut [f64]) -> Result<f64, DynamicsError>;
    /// Writes applied nodal loads at time `t` into `f`.
    fn external_force(&self, t: f64, f: &mut [f64]);
    /// Work done on the body per unit temperature increase at the state of
    /// the last `internal_force` call.
    fn thermal_power(&self) -> f64 {
        0.0
    }
}

/// `safety * min_e(h_min / v_d)` over all elements.
pub fn stable_timestep(
    mesh: &Mesh2D,
    region_materials: &[Option<MaterialModel>],
    safety: f64,
) -> Result<f64, DynamicsError> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(DynamicsError::Safety(safety));
    }
    let mut speeds = Vec::with_capacity(region_materials.len());
    for m in region_materials {
        speeds.push(match m {
            Some(m) => Some(wave_speeds(m)?.dilatational),
            None => None,
        });
    }
    let mut dt = f64::INFINITY;
    for (e, el) in mesh.elements.iter().enumerate() {
        let vd = speeds
            .get(el.region)
            .copied()
            .flatten()
            .ok_or(DynamicsError::MissingMaterial(e))?;
        dt = dt.min(mesh.element_min_edge(e) / vd);
    }
    Ok(safety * dt)
}

/// Owns the constraint map, force buffers and energy ledger of one run.
pub struct Integrator {
    pub dt: f64,
    pub gamma: f64,
    pub step: usize,
    pub ledger: EnergyLedger,
    loads: LoadProgram,
    constraints: Vec<Constraint>,
    f_int: Vec<f64>,
    f_ext: Vec<f64>,
    /// Generalized nodal force doing work at the last step.
    work_force: Vec<f64>,
    thermal_power: f64,
}

impl Integrator {
    /// Validates inputs and fills `state.a` (and the ledger) for `state.t`.
    pub fn new<M: ForceModel>(
        loads: LoadProgram,
        dt: f64,
        gamma: f64,
        state: &mut KinematicState,
        model: &mut M,
    ) -> Result<Self, DynamicsError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DynamicsError::TimeStep(dt));
        }
        if !(0.5..=1.0).contains(&gamma) {
            return Err(DynamicsError::Gamma(gamma));
        }
        let ndof = state.u.len();
        let constraints = loads.constraints(ndof)?;
        let mass = model.mass();
        for (d, c) in constraints.iter().enumerate() {
            if *c == Constraint::Free && !(mass[d] > 0.0) {
                return Err(DynamicsError::MassNotPositive(d));
            }
        }
        let mut it = Integrator {
            dt,
            gamma,
            step: 0,
            ledger: EnergyLedger::default(),
            loads,
            constraints,
            f_int: vec![0.0; ndof],
            f_ext: vec![0.0; ndof],
            work_force: vec![0.0; ndof],
            thermal_power: 0.0,
        };
        state.d_temp = it.loads.temperature(state.t);
        let mut a = std::mem::take(&mut state.a);
        for d in 0..ndof {
            it.apply_constraint_kinematics(d, state.t, &mut state.v[d]);
        }
        let strain = it.accelerations(state, &mut a, model)?;
        state.a = a;
        it.thermal_power = model.thermal_power();
        it.ledger.strain = strain;
        it.ledger.kinetic = kinetic_energy(model.mass(), &state.v);
        it.check_finite(state)?;
        Ok(it)
    }

    pub fn loads(&self) -> &LoadProgram {
        &self.loads
    }

    /// Nodal internal forces from the most recent evaluation.
    pub fn internal_forces(&self) -> &[f64] {
        &self.f_int
    }

    fn apply_constraint_kinematics(&self, d: usize, t: f64, v: &mut f64) {
        match self.constraints[d] {
            Constraint::Free => {}
            Constraint::Fixed => *v = 0.0,
            Constraint::Velocity(k) => {
                let bc = &self.loads.velocity[k];
                *v = ramp_value(bc.v0, bc.t0, t, bc.shape).unwrap_or(0.0);
            }
        }
    }

    /// Evaluates forces at `state.u`, fills `a` and the work-conjugate force.
    fn accelerations<M: ForceModel>(
        &mut self,
        state: &KinematicState,
        a: &mut [f64],
        model: &mut M,
    ) -> Result<f64, DynamicsError> {
        let strain = model.internal_force(&state.u, state.d_temp, &mut self.f_int)?;
        self.f_ext.iter_mut().for_each(|x| *x = 0.0);
        model.external_force(state.t, &mut self.f_ext);
        let mass = model.mass();
        for d in 0..a.len() {
            match self.constraints[d] {
                Constraint::Free => {
                    a[d] = (self.f_ext[d] - self.f_int[d]) / mass[d];
                    self.work_force[d] = self.f_ext[d];
                }
                Constraint::Fixed => {
                    a[d] = 0.0;
                    self.work_force[d] = 0.0;
                }
                Constraint::Velocity(k) => {
                    let bc = &self.loads.velocity[k];
                    a[d] = ramp_rate(bc.v0, bc.t0, state.t);
                    // Reaction plus applied load on a driven DOF.
                    self.work_force[d] = mass[d] * a[d] + self.f_int[d];
                }
            }
        }
        Ok(strain)
    }

    fn check_finite(&self, state: &KinematicState) -> Result<(), DynamicsError> {
        for (d, ((u, v), a)) in state.u.iter().zip(&state.v).zip(&state.a).enumerate() {
            if !(u.is_finite() && v.is_finite() && a.is_finite()) {
                return Err(DynamicsError::NonFinite { step: self.step, dof: d });
            }
        }
        Ok(())
    }

    /// Advances one step:
    /// `u+ = u + v dt + a dt^2 / 2`, `a+ = M^-1 (f_ext - f_int(u+))`,
    /// `v+ = v + ((1 - gamma) a + gamma a+) dt`. Prescribed DOFs take the
    /// ramp velocity, integrate it with the trapezoid rule and take the ramp
    /// rate as acceleration; fixed DOFs stay at zero.
    pub fn step<M: ForceModel>(&mut self, state: &mut KinematicState, model: &mut M) -> Result<(), DynamicsError> {
        let dt = self.dt;
        let t1 = state.t + dt;
        let ndof = state.u.len();
        let mut du = vec![0.0; ndof];
        for d in 0..ndof {
            du[d] = match self.constraints[d] {
                Constraint::Free => state.v[d] * dt + 0.5 * state.a[d] * dt * dt,
                Constraint::Fixed => -state.u[d],
                Constraint::Velocity(_) => {
                    let mut v1 = 0.0;
                    self.apply_constraint_kinematics(d, t1, &mut v1);
                    0.5 * (state.v[d] + v1) * dt
                }
            };
        }
        let old_force = self.work_force.clone();
        let old_temp = state.d_temp;
        let a_old = state.a.clone();
        for d in 0..ndof {
            state.u[d] += du[d];
        }
        state.t = t1;
        state.d_temp = self.loads.temperature(t1);
        self.step += 1;

        let mut a_new = vec![0.0; ndof];
        let strain = self.accelerations(state, &mut a_new, model)?;
        for d in 0..ndof {
            match self.constraints[d] {
                Constraint::Free => {
                    state.v[d] += ((1.0 - self.gamma) * a_old[d] + self.gamma * a_new[d]) * dt;
                }
                _ => self.apply_constraint_kinematics(d, t1, &mut state.v[d]),
            }
        }
        state.a = a_new;
        self.check_finite(state)?;

        let mut dw = 0.0;
        for d in 0..ndof {
            dw += 0.5 * (old_force[d] + self.work_force[d]) * du[d];
        }
        let thermal = model.thermal_power();
        dw += 0.5 * (self.thermal_power + thermal) * (state.d_temp - old_temp);
        self.thermal_power = thermal;
        self.ledger.external_work += dw;
        self.ledger.strain = strain;
        self.ledger.kinetic = kinetic_energy(model.mass(), &state.v);
        Ok(())
    }
}

pub fn kinetic_energy(mass: &[f64], v: &[f64]) -> f64 {
    0.5 * mass.iter().zip(v).map(|(m, v)| m * v * v).sum::<f64>()
}
