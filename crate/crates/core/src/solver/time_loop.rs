//! Staggered time integration.
//!
//! Per step: freeze material values from `(d_n, θ_n)`, solve the coupled
//! field problem with Newton's method, update the dissolution levels from the
//! converged current densities, refresh the activation flags, then record
//! the process signature. A failed step leaves the last good state intact.

use nalgebra::Vector3;

use crate::dissolution::{activation_update, currents_from_density, effective_current, update_level, CutoffLedger, IpState};
use crate::error::{EcmError, Result};
use crate::fem::element::Mode;
use crate::fem::shape::gauss_points;
use crate::fem::{EffectiveProps, GaussPointData, N_GP};
use crate::geometry::{Mesh, Region, UnitCellGeom};
use crate::materials::MaterialTable;
use crate::postprocess::{
    active_profile, dissolved_volume, equivalent_surface, roughness, RoughnessProfile, SignatureRecord,
    SignatureSeries, SurfaceAxes,
};
use crate::solver::assembly::{assemble, Assembler, DofMap, GlobalSystem, ResidualNorms, StepData};
use crate::solver::bc::{self, Dirichlet};
use crate::solver::linear::{LinearSolver, LinearStats, LinearStrategy};
use crate::solver::newton::{newton_solve, NewtonSettings, NonlinearProblem};

/// Everything needed to start a run.
#[derive(Clone, Debug)]
pub struct SimulationSetup {
    pub mesh: Mesh,
    pub materials: MaterialTable,
    pub dt: f64,
    pub t_end: f64,
    pub dirichlet: Vec<Dirichlet>,
    pub initial_temperature: f64,
    /// Volumetric heat source q*, W/m³.
    pub heat_source: f64,
    pub newton: NewtonSettings,
    pub linear: LinearStrategy,
    pub krylov_tol: f64,
    /// Mean level at which an element counts as electrolyte.
    pub dissolved_threshold: f64,
    pub axes: SurfaceAxes,
    /// Node set whose adjacent elements carry the recorded vertical charge.
    pub anode_set: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    pub newton_iterations: usize,
    pub history: Vec<[f64; 2]>,
    /// `Σ Δd V_uc` of this step.
    pub dissolved: f64,
    pub cutoff: f64,
    /// `Σ I_eff Δt` over the updated points, A s.
    pub effective_charge: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub max_newton_iterations: usize,
    pub linear: LinearStats,
}

pub struct Simulation {
    mesh: Mesh,
    materials: MaterialTable,
    dt: f64,
    n_steps: usize,
    dirichlet: Vec<Dirichlet>,
    heat_source: f64,
    newton: NewtonSettings,
    threshold: f64,
    axes: SurfaceAxes,
    v_eff: f64,
    asm: Assembler,
    linear: LinearSolver,
    sys: GlobalSystem,
    gps: Vec<[GaussPointData; N_GP]>,
    cells: Vec<UnitCellGeom>,
    neighbors: Vec<Vec<usize>>,
    props: Vec<[EffectiveProps; N_GP]>,
    ip: Vec<[IpState; N_GP]>,
    surface0: Vec<bool>,
    anode_elements: Vec<usize>,
    anode_area: f64,
    charge: f64,
    ledger: CutoffLedger,
    state: FieldState,
    step: usize,
    series: SignatureSeries,
    stats: RunStats,
}

impl Simulation {
    pub fn new(setup: SimulationSetup) -> Result<Self> {
        let SimulationSetup {
            mesh,
            materials,
            dt,
            t_end,
            dirichlet,
            initial_temperature,
            heat_source,
            newton,
            linear,
            krylov_tol,
            dissolved_threshold,
            axes,
            anode_set,
        } = setup;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(EcmError::Config(format!("time step must be positive, got {dt}")));
        }
        if !(t_end >= dt * (1.0 - 1e-9)) || !t_end.is_finite() {
            return Err(EcmError::Config(format!("end time {t_end} must be at least one time step {dt}")));
        }
        if !(initial_temperature > 0.0) {
            return Err(EcmError::Config(format!("initial temperature must be positive, got {initial_temperature}")));
        }
        if !(dissolved_threshold > 0.0 && dissolved_threshold <= 1.0) {
            return Err(EcmError::Config(format!("dissolved threshold {dissolved_threshold} outside (0, 1]")));
        }
        if !heat_source.is_finite() || !(krylov_tol > 0.0) {
            return Err(EcmError::Config("heat source must be finite and the Krylov tolerance positive".into()));
        }
        if axes.vertical > 2 || axes.lateral > 2 || axes.vertical == axes.lateral {
            return Err(EcmError::Config(format!("invalid surface axes {axes:?}")));
        }
        newton.validate()?;
        materials.validate()?;
        let n_steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;

        let [fixed_v, fixed_t] = bc::constrained(&dirichlet, mesh.n_nodes())?;
        check_grounded(&mesh, &fixed_v)?;
        let dofs = DofMap::new(&fixed_v, &fixed_t);
        let asm = Assembler::new(&mesh, dofs)?;
        let linear = LinearSolver::new(linear, asm.dofs.n_free_v, asm.dofs.n_free(), krylov_tol);
        let sys = GlobalSystem::new(&asm, mesh.n_elements());
        let gps = (0..mesh.n_elements())
            .map(|e| gauss_points(&mesh.element_coords(e), e))
            .collect::<Result<Vec<_>>>()?;
        let cells = mesh.unit_cells()?;
        let neighbors = mesh.face_neighbors();
        let ip: Vec<[IpState; N_GP]> = mesh.regions.iter().map(|&r| [IpState::new(r); N_GP]).collect();
        let (anode_elements, anode_area) = match &anode_set {
            Some(name) => {
                let elems = mesh.elements_on_node_set(mesh.node_set(name)?);
                let area = elems.iter().map(|&e| N_GP as f64 * cells[e].a_uc[axes.vertical]).sum();
                (elems, area)
            }
            None => (Vec::new(), 0.0),
        };
        let v_eff = materials.metal_v_eff();
        let n_nodes = mesh.n_nodes();
        let mut sim = Self {
            props: vec![[EffectiveProps::default(); N_GP]; mesh.n_elements()],
            surface0: vec![false; mesh.n_elements()],
            mesh,
            materials,
            dt,
            n_steps,
            dirichlet,
            heat_source,
            newton,
            threshold: dissolved_threshold,
            axes,
            v_eff,
            asm,
            linear,
            sys,
            gps,
            cells,
            neighbors,
            ip,
            anode_elements,
            anode_area,
            charge: 0.0,
            ledger: CutoffLedger::default(),
            state: FieldState { t: 0.0, v: vec![0.0; n_nodes], theta: vec![initial_temperature; n_nodes] },
            step: 0,
            series: SignatureSeries::default(),
            stats: RunStats::default(),
        };
        sim.refresh_activation();
        sim.surface0 = sim.element_active();
        sim.initial_potential()?;
        Ok(sim)
    }

    /// Static potential field at t = 0 with the temperature held at its
    /// initial values; provides the field history for the first rate term.
    fn initial_potential(&mut self) -> Result<()> {
        bc::apply(&self.dirichlet, 0.0, &mut self.state.v, &mut self.state.theta);
        self.freeze_props();
        let e_prev = vec![[Vector3::zeros(); N_GP]; self.mesh.n_elements()];
        let data = StepData {
            gps: &self.gps,
            props: &self.props,
            e_prev: &e_prev,
            theta_prev: &self.state.theta,
            inv_dt: 0.0,
            eps0: self.materials.electric_constant,
            q_star: self.heat_source,
        };
        assemble(&self.asm, &data, &self.state.v, &self.state.theta, Mode::Potential, &mut self.sys)?;
        let nv = self.asm.dofs.n_free_v;
        let b = self.sys.free_rhs(&self.asm.dofs);
        let x = self.linear.solve_potential(self.asm.matrix(&self.sys.values), &b[..nv])?;
        for n in 0..self.mesh.n_nodes() {
            if let Some(i) = self.asm.dofs.free_index(n, 0) {
                self.state.v[n] += x[i];
            }
        }
        assemble(&self.asm, &data, &self.state.v, &self.state.theta, Mode::Residual, &mut self.sys)?;
        for (s, e) in self.ip.iter_mut().zip(&self.sys.e) {
            for g in 0..N_GP {
                s[g].e_prev = e[g];
            }
        }
        Ok(())
    }

    fn freeze_props(&mut self) {
        for e in 0..self.mesh.n_elements() {
            let conn = self.mesh.elements[e];
            let mean = self.ip[e].iter().map(|p| p.d).sum::<f64>() / N_GP as f64;
            let joule = self.mesh.regions[e] == Region::Metal && mean < self.threshold;
            for g in 0..N_GP {
                let theta: f64 = (0..8).map(|a| self.gps[e][g].n[a] * self.state.theta[conn[a]]).sum();
                self.props[e][g] = EffectiveProps::freeze(&self.materials, self.ip[e][g].d, theta, joule);
            }
        }
    }

    fn refresh_activation(&mut self) {
        let mean = self.mean_d();
        let active = activation_update(&self.neighbors, &self.mesh.regions, &mean, self.threshold);
        for (s, a) in self.ip.iter_mut().zip(active) {
            s.iter_mut().for_each(|p| p.active = a);
        }
    }

    pub fn finished(&self) -> bool {
        self.step >= self.n_steps
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn step(&mut self) -> Result<StepReport> {
        if self.finished() {
            return Err(EcmError::Invariant("all time steps have been taken".into()));
        }
        let n = self.step + 1;
        let t = n as f64 * self.dt;
        self.freeze_props();
        let mut v = self.state.v.clone();
        let mut theta = self.state.theta.clone();
        bc::apply(&self.dirichlet, t, &mut v, &mut theta);
        let e_prev: Vec<[Vector3<f64>; N_GP]> = self.ip.iter().map(|s| s.map(|p| p.e_prev)).collect();
        let mode = if self.asm.dofs.n_free_t == 0 { Mode::Potential } else { Mode::Full };
        let data = StepData {
            gps: &self.gps,
            props: &self.props,
            e_prev: &e_prev,
            theta_prev: &self.state.theta,
            inv_dt: 1.0 / self.dt,
            eps0: self.materials.electric_constant,
            q_star: self.heat_source,
        };
        let mut problem = StepProblem {
            asm: &self.asm,
            data,
            sys: &mut self.sys,
            linear: &mut self.linear,
            v: &mut v,
            theta: &mut theta,
            mode,
        };
        let newton = newton_solve(&mut problem, &self.newton)?;
        if let Some(n) = theta.iter().position(|&x| !(x > 0.0)) {
            return Err(EcmError::Invariant(format!("temperature {} at node {n} is not positive", theta[n])));
        }

        // Level updates are computed first so a failure leaves the state untouched.
        let mut report = StepReport { step: n, t, newton_iterations: newton.iterations, history: newton.history, ..Default::default() };
        let mut updates = Vec::new();
        for e in 0..self.mesh.n_elements() {
            let uc = &self.cells[e];
            for g in 0..N_GP {
                let p = &self.ip[e][g];
                if !p.active || p.d >= 1.0 {
                    continue;
                }
                let currents = currents_from_density(&self.sys.j[e][g], uc);
                let up = update_level(p.d, currents, self.v_eff, uc.v_uc, self.dt, true)?;
                report.dissolved += (up.d - p.d) * uc.v_uc;
                report.cutoff += up.cutoff;
                report.effective_charge += effective_current(up.raw, currents) * self.dt;
                updates.push((e, g, up.d));
            }
        }
        for (e, g, d) in updates {
            self.ip[e][g].d = d;
        }
        for (s, field) in self.ip.iter_mut().zip(&self.sys.e) {
            for g in 0..N_GP {
                s[g].e_prev = field[g];
            }
        }
        let vert = self.axes.vertical;
        for &e in &self.anode_elements {
            for g in 0..N_GP {
                let dq = (self.cells[e].a_uc[vert] * self.sys.j[e][g][vert]).abs() * self.dt;
                self.ip[e][g].charge += dq;
                self.charge += dq;
            }
        }
        self.ledger.record(report.dissolved, report.cutoff);
        self.refresh_activation();
        self.state = FieldState { t, v, theta };
        self.step = n;
        self.stats.steps = n;
        self.stats.newton_iterations += report.newton_iterations;
        self.stats.max_newton_iterations = self.stats.max_newton_iterations.max(report.newton_iterations);
        self.stats.linear = self.linear.stats;
        let record = self.record();
        self.series.push(record)?;
        Ok(report)
    }

    /// Runs all remaining steps.
    pub fn run(&mut self) -> Result<()> {
        while !self.finished() {
            self.step()?;
        }
        Ok(())
    }

    fn record(&self) -> SignatureRecord {
        let (rz, ra) = self.roughness().unwrap_or((f64::NAN, f64::NAN));
        SignatureRecord {
            t: self.state.t,
            q_per_a: self.charge_per_area(),
            rz,
            ra,
            v_dis: self.dissolved_volume(),
            v_co: self.ledger.v_co,
        }
    }

    pub fn charge_per_area(&self) -> f64 {
        if self.anode_area > 0.0 {
            self.charge / self.anode_area
        } else {
            0.0
        }
    }

    pub fn dissolved_volume(&self) -> f64 {
        dissolved_volume(&self.ip, &self.cells, &self.mesh.regions)
    }

    pub fn ledger(&self) -> &CutoffLedger {
        &self.ledger
    }

    /// `(Rz, Ra)` of the profile through the active element centres.
    pub fn roughness(&self) -> Result<(f64, f64)> {
        Ok(roughness(&RoughnessProfile::new(self.surface_profile())?))
    }

    pub fn surface_profile(&self) -> Vec<[f64; 2]> {
        active_profile(&self.mesh, &self.element_active(), self.axes)
    }

    /// Volume-equivalent surface height per column near the initial surface.
    pub fn equivalent_surface(&self) -> Vec<[f64; 2]> {
        equivalent_surface(&self.mesh, &self.mean_d(), &self.cells, &self.surface0, self.axes)
    }

    pub fn element_active(&self) -> Vec<bool> {
        self.ip.iter().map(|s| s[0].active).collect()
    }

    pub fn mean_d(&self) -> Vec<f64> {
        self.ip.iter().map(|s| s.iter().map(|p| p.d).sum::<f64>() / N_GP as f64).collect()
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn ip_states(&self) -> &[[IpState; N_GP]] {
        &self.ip
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn unit_cells(&self) -> &[UnitCellGeom] {
        &self.cells
    }

    pub fn series(&self) -> &SignatureSeries {
        &self.series
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn linear_strategy(&self) -> LinearStrategy {
        self.linear.strategy()
    }

    /// Current densities at the Gauss points of the last converged solve.
    pub fn current_density(&self) -> &[[Vector3<f64>; N_GP]] {
        &self.sys.j
    }

    /// Nodal residuals `[potential, temperature]` at the last evaluation.
    pub fn nodal_residuals(&self) -> (&[f64], &[f64]) {
        (&self.sys.r_v, &self.sys.r_t)
    }
}

/// Every connected part of the mesh needs a prescribed potential.
fn check_grounded(mesh: &Mesh, fixed_v: &[bool]) -> Result<()> {
    let n = mesh.n_nodes();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut used = vec![false; n];
    for conn in &mesh.elements {
        for &a in conn {
            used[a] = true;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, conn[0]));
            parent[ra] = rb;
        }
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(EcmError::Singular(format!("node {i} belongs to no element")));
    }
    let mut grounded = vec![false; n];
    for (i, _) in fixed_v.iter().enumerate().filter(|(_, f)| **f) {
        let r = find(&mut parent, i);
        grounded[r] = true;
    }
    let mut floating = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if r == i && !grounded[r] {
            floating.push(i);
        }
    }
    if floating.is_empty() {
        Ok(())
    } else {
        Err(EcmError::Singular(format!(
            "{} mesh component(s) without a prescribed potential (containing nodes {:?})",
            floating.len(),
            floating
        )))
    }
}

struct StepProblem<'a> {
    asm: &'a Assembler,
    data: StepData<'a>,
    sys: &'a mut GlobalSystem,
    linear: &'a mut LinearSolver,
    v: &'a mut [f64],
    theta: &'a mut [f64],
    mode: Mode,
}

impl NonlinearProblem for StepProblem<'_> {
    fn assemble(&mut self, with_tangent: bool) -> Result<ResidualNorms> {
        let mode = if with_tangent { self.mode } else { Mode::Residual };
        assemble(self.asm, &self.data, self.v, self.theta, mode, self.sys)?;
        Ok(self.sys.norms(&self.asm.dofs))
    }

    fn solve_and_update(&mut self) -> Result<()> {
        let dofs = &self.asm.dofs;
        let b = self.sys.free_rhs(dofs);
        let x = self.linear.solve(self.asm.matrix(&self.sys.values), &b)?;
        for n in 0..dofs.n_nodes() {
            if let Some(i) = dofs.free_index(n, 0) {
                self.v[n] += x[i];
            }
            if let Some(i) = dofs.free_index(n, 1) {
                self.theta[n] += x[i];
            }
        }
        Ok(())
    }
}
