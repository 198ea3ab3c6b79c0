//! Couples the smoothed-FEM force model, the explicit integrator and the
//! crack front into a steppable simulation.

use rayon::prelude::*;
use thiserror::Error;

use crate::cem::{advance_front, initiate_from_strength, CemError, CrackEvent, CrackFront, TipOrigin};
use crate::dynamics::{DynamicsError, EnergyLedger, ForceModel, Integrator, KinematicState, LoadProgram};
use crate::esfem::{
    assemble_external_force, assemble_internal_force, assemble_lumped_mass, element_constitutive, Constitutive,
    ElementState, EsfemError, SmoothingDomains,
};
use crate::material::{MaterialModel, Voigt};
use crate::mesh::{build_edge_topology, EdgeTopology, Mesh2D, MeshError};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Esfem(#[from] EsfemError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Cem(#[from] CemError),
    #[error("region `{0}` has no material")]
    MissingMaterial(String),
}

impl SimulationError {
    pub fn is_instability(&self) -> bool {
        matches!(self, SimulationError::Dynamics(DynamicsError::NonFinite { .. }))
    }
}

/// Smoothed-FEM internal forces over the surviving smoothing domains.
pub struct FractureModel {
    pub mesh: Mesh2D,
    pub topo: EdgeTopology,
    pub constitutive: Vec<Constitutive>,
    pub domains: SmoothingDomains,
    /// Stress per domain from the latest force evaluation.
    pub stresses: Vec<Voigt>,
    mass: Vec<f64>,
    applied: Vec<f64>,
    thermal_power: f64,
}

impl FractureModel {
    pub fn new(
        mesh: Mesh2D,
        region_materials: &[Option<MaterialModel>],
        body: [f64; 2],
        tractions: &[(usize, [f64; 2])],
    ) -> Result<Self, SimulationError> {
        for (r, name) in mesh.regions.iter().enumerate() {
            let used = mesh.elements.iter().any(|e| e.region == r);
            if used && region_materials.get(r).map_or(true, |m| m.is_none()) {
                return Err(SimulationError::MissingMaterial(name.clone()));
            }
        }
        let topo = build_edge_topology(&mesh)?;
        let constitutive = element_constitutive(&mesh, region_materials)?;
        let densities: Vec<Option<f64>> = region_materials.iter().map(|m| m.as_ref().map(|m| m.density)).collect();
        let mass = assemble_lumped_mass(&mesh, &densities)?;
        let applied = assemble_external_force(&mesh, &topo, body, tractions)?;
        let states = vec![ElementState::Intact; mesh.elements.len()];
        let domains = SmoothingDomains::build(&mesh, &topo, &states)?.with_materials(&constitutive);
        let stresses = vec![[0.0; 3]; domains.len()];
        Ok(FractureModel {
            mesh,
            topo,
            constitutive,
            domains,
            stresses,
            mass,
            applied,
            thermal_power: 0.0,
        })
    }

    /// Rebuilds the smoothing domains after element failures.
    pub fn rebuild(&mut self, states: &[ElementState]) -> Result<(), SimulationError> {
        self.domains = SmoothingDomains::build(&self.mesh, &self.topo, states)?.with_materials(&self.constitutive);
        self.stresses = vec![[0.0; 3]; self.domains.len()];
        Ok(())
    }

    /// Latest stress per topology edge; `None` for edges without a domain.
    pub fn edge_stresses(&self) -> Vec<Option<Voigt>> {
        self.domains
            .edge_to_domain
            .iter()
            .map(|d| d.map(|k| self.stresses[k]))
            .collect()
    }
}

impl ForceModel for FractureModel {
    fn mass(&self) -> &[f64] {
        &self.mass
    }

    fn internal_force(&mut self, u: &[f64], d_temp: f64, f: &mut [f64]) -> Result<f64, DynamicsError> {
        // Domains are independent; results come back in domain order so the
        // sums below do not depend on the worker count.
        let per_domain: Vec<(Voigt, f64, f64)> = self
            .domains
            .domains
            .par_iter()
            .map(|d| {
                let s = d.stress(&d.strain(u), d_temp);
                (s, d.energy(&s), d.thermal_power(&s))
            })
            .collect();
        let mut energy = 0.0;
        let mut thermal = 0.0;
        for (k, (s, e, p)) in per_domain.into_iter().enumerate() {
            self.stresses[k] = s;
            energy += e;
            thermal += p;
        }
        self.thermal_power = thermal;
        assemble_internal_force(&self.domains, &self.stresses, f).map_err(|e| DynamicsError::Model(e.to_string()))?;
        Ok(energy)
    }

    fn external_force(&self, _t: f64, f: &mut [f64]) {
        f.copy_from_slice(&self.applied);
    }

    fn thermal_power(&self) -> f64 {
        self.thermal_power
    }
}

/// Strength-based initiation on a set of boundary edges.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthInitiation {
    pub edges: Vec<usize>,
    /// Upper bound on tips spawned this way over the whole run.
    pub max_tips: usize,
}

pub struct SimulationSetup {
    pub mesh: Mesh2D,
    pub region_materials: Vec<Option<MaterialModel>>,
    pub loads: LoadProgram,
    pub body: [f64; 2],
    pub tractions: Vec<(usize, [f64; 2])>,
    pub dt: f64,
    pub gamma: f64,
    /// Boundary edges that carry a crack tip from the start.
    pub initial_tips: Vec<usize>,
    pub strength: Option<StrengthInitiation>,
    /// Crack growth on or off.
    pub fracture: bool,
}

pub struct Simulation {
    pub model: FractureModel,
    pub state: KinematicState,
    pub integrator: Integrator,
    pub front: CrackFront,
    pub fracture: bool,
    gc: Vec<f64>,
    ft: Vec<Option<f64>>,
    strength: Option<StrengthInitiation>,
    strength_spawned: usize,
}

impl Simulation {
    pub fn new(setup: SimulationSetup) -> Result<Self, SimulationError> {
        let mut model = FractureModel::new(setup.mesh, &setup.region_materials, setup.body, &setup.tractions)?;
        let ndof = 2 * model.mesh.nodes.len();
        let mut state = KinematicState::at_rest(ndof);
        let integrator = Integrator::new(setup.loads, setup.dt, setup.gamma, &mut state, &mut model)?;
        let material = |e: usize| setup.region_materials[model.mesh.elements[e].region].as_ref();
        let gc = (0..model.mesh.elements.len())
            .map(|e| material(e).map_or(f64::INFINITY, |m| m.fracture_energy))
            .collect();
        let ft = (0..model.mesh.elements.len()).map(|e| material(e).and_then(|m| m.tensile_strength)).collect();
        let mut front = CrackFront::new(model.mesh.elements.len());
        if setup.fracture {
            for &edge in &setup.initial_tips {
                front.add_tip(&model.topo, edge, TipOrigin::Initial, 0.0)?;
            }
        }
        Ok(Simulation {
            model,
            state,
            integrator,
            front,
            fracture: setup.fracture,
            gc,
            ft,
            strength: setup.strength,
            strength_spawned: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn steps(&self) -> usize {
        self.integrator.step
    }

    /// Energies including dissipation.
    pub fn ledger(&self) -> EnergyLedger {
        let mut l = self.integrator.ledger;
        l.dissipated = self.front.dissipated;
        l
    }

    /// One time step followed by crack initiation and growth.
    pub fn step(&mut self) -> Result<Vec<CrackEvent>, SimulationError> {
        self.integrator.step(&mut self.state, &mut self.model)?;
        if !self.fracture {
            return Ok(Vec::new());
        }
        let stresses = self.model.edge_stresses();
        if let Some(s) = &self.strength {
            if self.strength_spawned < s.max_tips {
                let spawned =
                    initiate_from_strength(&mut self.front, &self.model.topo, &stresses, &self.ft, &s.edges, self.state.t)?;
                if spawned.is_some() {
                    self.strength_spawned += 1;
                }
            }
        }
        let events = advance_front(
            &mut self.front,
            &self.model.mesh,
            &self.model.topo,
            &stresses,
            &self.state.u,
            &self.gc,
            self.state.t,
        )?;
        if self.front.take_changed() {
            self.model.rebuild(&self.front.states)?;
            // Refresh stresses and stored energy on the reduced domain set.
            let mut scratch = vec![0.0; self.state.u.len()];
            self.integrator.ledger.strain =
                self.model.internal_force(&self.state.u, self.state.d_temp, &mut scratch)?;
        }
        Ok(events)
    }
}
