//! Semi-implicit Euler-Maruyama stepping of the coupled phase-field /
//! chemical-potential / nutrient system, and full trajectory integration.
//!
//! Each step solves one linear 3N x 3N system with unknown ordering
//! [phi, mu, sigma]:
//!
//!   (1) M phi + dt K_{m1(phi_n)} mu - dt chi K_{m1(phi_n)} sigma
//!         = M phi_n + dt (beta M_{f(phi_n)} sigma_n - alpha f-load) + noise
//!   (2) M mu - eps^2 K phi - 3/4 M phi = load(Psi_e'(phi_n))
//!   (3) M sigma + dt K_{m2(sigma_n)} sigma - dt chi K_{m1(phi_n)} phi
//!         = M sigma_n - dt delta M_{f(phi_n)} sigma_n + noise
//!
//! The expansive potential part is explicit, the linear contractive part
//! implicit (convex-concave splitting), so the step is linear. Weighted
//! matrices are frozen at time level n. Dirichlet sigma rows, when
//! configured, are replaced by identity rows before the solve.

use crate::assembly::{Assembler, SparseMatrix};
use crate::constitutive::{
    growth_f, initial_phi0, mobility, psi_prime, psi_split, GrowthSpec, MobilitySpec,
    PotentialSpec,
};
use crate::error::SimError;
use crate::linalg::{
    compose_block3, default_max_iter, set_identity_row, solve, solve_interleaved, spmv,
    DEFAULT_TOL,
};
use crate::mesh::Grid;
use crate::noise::{noise_load_phi, noise_load_sigma, wiener_increment, NoiseSpec, RngStream};
use crate::postproc::{energy, field_integral};

/// Boundary condition for the nutrient field. The phase field and chemical
/// potential always carry natural (zero-flux) conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaBc {
    NeumannZero,
    DirichletConstant(f64),
}

/// All physical and numerical parameters of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub epsilon: f64,
    pub chi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub m1: MobilitySpec,
    pub m2: MobilitySpec,
    pub f: GrowthSpec,
    pub potential: PotentialSpec,
    pub noise: NoiseSpec,
    pub sigma_bc: SigmaBc,
    pub dt: f64,
    pub t_end: f64,
    /// Experimental lumped-mass option; off for all standard runs.
    pub lumped_mass: bool,
    /// Relative residual tolerance of the per-step solver.
    pub solver_tol: f64,
    /// Solve the phi-mu block and the sigma block alternately, sweeping until
    /// the residual of the full coupled system meets the solver contract.
    /// This is the production path: the monolithic Krylov solve stagnates on
    /// fine grids at strong chemotaxis coupling, while the decoupled sweeps
    /// (whose fixed-point loop gain stays well below one for the reference
    /// parameters) converge in a handful of iterations. Disable only for
    /// small-grid cross-checks against the monolithic and dense solvers.
    pub decoupled: bool,
}

impl Default for ModelParams {
    /// The reference tumor-growth setup on the unit square.
    fn default() -> Self {
        ModelParams {
            epsilon: 0.01,
            chi: 5.0,
            alpha: 1.0,
            beta: 15.0,
            delta: 100.0,
            m1: MobilitySpec::QuarticInterface { floor: 1e-16 },
            m2: MobilitySpec::Constant(10.0),
            f: GrowthSpec::Logistic,
            potential: PotentialSpec::quartic(),
            noise: NoiseSpec::default(),
            sigma_bc: SigmaBc::DirichletConstant(1.0),
            dt: 0.01,
            t_end: 1.0,
            lumped_mass: false,
            solver_tol: DEFAULT_TOL,
            decoupled: true,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.epsilon > 0.0) {
            return Err(SimError::InvalidInput("epsilon must be positive".into()));
        }
        for (name, v) in [
            ("chi", self.chi),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("delta", self.delta),
            ("nu", self.noise.nu),
            ("sigma_amp", self.noise.sigma_amp),
        ] {
            if !(v >= 0.0) {
                return Err(SimError::InvalidInput(format!("{name} must be nonnegative")));
            }
        }
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidInput("dt must be positive".into()));
        }
        if !(self.t_end >= 0.0) {
            return Err(SimError::InvalidInput("t_end must be nonnegative".into()));
        }
        if !(self.solver_tol > 0.0) {
            return Err(SimError::InvalidInput("solver_tol must be positive".into()));
        }
        let (m0, _) = self.m1.bounds();
        let (m0b, _) = self.m2.bounds();
        if !(m0 > 0.0) || !(m0b > 0.0) {
            return Err(SimError::InvalidInput("mobility floor must be positive".into()));
        }
        Ok(())
    }
}

/// Nodal coefficient vectors at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl State {
    fn all_finite(&self) -> bool {
        self.phi.iter().all(|v| v.is_finite())
            && self.mu.iter().all(|v| v.is_finite())
            && self.sigma.iter().all(|v| v.is_finite())
    }
}

/// Constant operators plus per-step scratch for the weighted matrices.
/// Sparsity patterns are fixed after construction; only values change.
pub struct StepOperators {
    pub asm: Assembler,
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    k_m1: SparseMatrix,
    k_m2: SparseMatrix,
    m_f: SparseMatrix,
    boundary: Vec<usize>,
}

impl StepOperators {
    pub fn new(grid: &Grid, params: &ModelParams) -> StepOperators {
        let asm = Assembler::new(grid);
        let mut mass = asm.mass();
        if params.lumped_mass {
            lump(&mut mass);
        }
        let stiffness = asm.stiffness();
        let k_m1 = stiffness.clone();
        let k_m2 = stiffness.clone();
        let m_f = mass.clone();
        let boundary = (0..grid.num_nodes())
            .filter(|&i| grid.is_boundary_node(i))
            .collect();
        StepOperators {
            asm,
            mass,
            stiffness,
            k_m1,
            k_m2,
            m_f,
            boundary,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.asm.grid()
    }
}

fn lump(m: &mut SparseMatrix) {
    for i in 0..m.nrows {
        let lo = m.row_offsets[i];
        let hi = m.row_offsets[i + 1];
        let row_sum: f64 = m.values[lo..hi].iter().sum();
        for k in lo..hi {
            m.values[k] = if m.col_indices[k] == i { row_sum } else { 0.0 };
        }
    }
}

/// Nodal interpolation of the initial data, with the chemical potential
/// recovered once from its defining equation
/// `M mu = eps^2 K phi + load(Psi'(phi))`.
pub fn initialize(ops: &StepOperators, params: &ModelParams) -> Result<State, SimError> {
    let grid = ops.grid();
    let n = grid.num_nodes();
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            let (x, y) = grid.node_coords(i);
            initial_phi0(x, y)
        })
        .collect();
    let mut sigma = vec![0.0; n];
    if let SigmaBc::DirichletConstant(v) = params.sigma_bc {
        for &i in &ops.boundary {
            sigma[i] = v;
        }
    }
    let psi_p: Vec<f64> = phi.iter().map(|&p| psi_prime(p, params.potential)).collect();
    let kphi = spmv(&ops.stiffness, &phi)?;
    let load = ops.asm.load_vector(&psi_p)?;
    let rhs: Vec<f64> = (0..n)
        .map(|i| params.epsilon * params.epsilon * kphi[i] + load[i])
        .collect();
    let mu = solve(&ops.mass, &rhs, params.solver_tol, default_max_iter(n))?;
    Ok(State {
        t: 0.0,
        phi,
        mu,
        sigma,
    })
}

struct StepWork {
    rhs: Vec<f64>,
    matrix: SparseMatrix,
}

fn build_system(
    state: &State,
    ops: &mut StepOperators,
    params: &ModelParams,
    g1: &[f64],
    g2: &[f64],
) -> Result<StepWork, SimError> {
    let n = ops.grid().num_nodes();
    let dt = params.dt;

    // Nodal coefficient evaluations frozen at time level n.
    let f_vals: Vec<f64> = state.phi.iter().map(|&p| growth_f(p, params.f)).collect();
    let psi_e: Vec<f64> = state.phi.iter().map(|&p| psi_split(p).0).collect();
    let contractive = psi_split(0.0).1;

    // Coefficient matrices use the nonlinearity of the interpolated field at
    // the quadrature points; nodal sampling of the degenerate quartic
    // mobility loses spatial accuracy wherever the interface is only a few
    // cells wide.
    {
        let StepOperators {
            asm, k_m1, k_m2, m_f, ..
        } = ops;
        asm.mapped_stiffness_into(&state.phi, |p| mobility(p, params.m1), &mut k_m1.values)?;
        asm.mapped_stiffness_into(&state.sigma, |s| mobility(s, params.m2), &mut k_m2.values)?;
        asm.mapped_mass_into(&state.phi, |p| growth_f(p, params.f), &mut m_f.values)?;
    }

    let m_phi = spmv(&ops.mass, &state.phi)?;
    let m_sigma = spmv(&ops.mass, &state.sigma)?;
    let mf_sigma = spmv(&ops.m_f, &state.sigma)?;
    let f_load = ops.asm.load_vector(&f_vals)?;
    let psi_e_load = ops.asm.load_vector(&psi_e)?;

    let mut rhs = vec![0.0; 3 * n];
    for i in 0..n {
        rhs[i] = m_phi[i] + dt * (params.beta * mf_sigma[i] - params.alpha * f_load[i]) + g1[i];
        rhs[n + i] = psi_e_load[i];
        rhs[2 * n + i] = m_sigma[i] - dt * params.delta * mf_sigma[i] + g2[i];
    }

    let eps2 = params.epsilon * params.epsilon;
    let mass = &ops.mass.values;
    let k = &ops.stiffness.values;
    let km1 = &ops.k_m1.values;
    let km2 = &ops.k_m2.values;
    let blocks: [[Vec<(f64, &[f64])>; 3]; 3] = [
        [
            vec![(1.0, mass.as_slice())],
            vec![(dt, km1.as_slice())],
            vec![(-dt * params.chi, km1.as_slice())],
        ],
        [
            vec![(-eps2, k.as_slice()), (-contractive, mass.as_slice())],
            vec![(1.0, mass.as_slice())],
            vec![],
        ],
        [
            // The chemotaxis cross term carries the phase-field mobility
            // weight, which vanishes away from the interface; weighting it
            // by m2 instead closes a chi^2 m1 m2 feedback loop through the
            // implicit coupling that drives the operator through a
            // resonance (singular 1 + dt*lambda) at the reference
            // parameters.
            vec![(-dt * params.chi, km1.as_slice())],
            vec![],
            vec![(1.0, mass.as_slice()), (dt, km2.as_slice())],
        ],
    ];
    let matrix = compose_block3(
        &ops.mass.row_offsets,
        &ops.mass.col_indices,
        n,
        &blocks,
    );
    Ok(StepWork { rhs, matrix })
}

/// One semi-implicit Euler-Maruyama step. Noise increments are always drawn
/// (phi modes first, then sigma modes, node order ascending) so the stream
/// position is independent of the noise amplitudes; `noise_log`, when given,
/// receives the raw increments of this step.
pub fn step(
    state: &State,
    ops: &mut StepOperators,
    params: &ModelParams,
    rng: &mut RngStream,
    mut noise_log: Option<&mut Vec<f64>>,
) -> Result<State, SimError> {
    let n = ops.grid().num_nodes();
    if !state.all_finite() {
        return Err(SimError::NonFiniteState { step: 0 });
    }

    let xi1 = wiener_increment(rng, n, params.dt);
    let xi2 = wiener_increment(rng, n, params.dt);
    if let Some(log) = noise_log.as_deref_mut() {
        log.extend_from_slice(&xi1);
        log.extend_from_slice(&xi2);
    }
    let g1 = noise_load_phi(&ops.asm, &ops.mass, &state.phi, &params.noise, &xi1)?;
    let g2 = noise_load_sigma(&ops.asm, &ops.mass, &params.noise, &xi2)?;

    let z = if params.decoupled {
        solve_decoupled(state, ops, params, &g1, &g2)?
    } else {
        let StepWork { mut rhs, mut matrix } = build_system(state, ops, params, &g1, &g2)?;
        if let SigmaBc::DirichletConstant(v) = params.sigma_bc {
            for &i in &ops.boundary {
                set_identity_row(&mut matrix, &mut rhs, 2 * n + i, v);
            }
        }
        solve_interleaved(&matrix, &rhs, params.solver_tol, default_max_iter(3 * n), 3)?
    };

    let mut sigma = z[2 * n..].to_vec();
    // The iterative solve leaves O(tol) slack on the identity rows; pin the
    // boundary values exactly.
    if let SigmaBc::DirichletConstant(v) = params.sigma_bc {
        for &i in &ops.boundary {
            sigma[i] = v;
        }
    }
    Ok(State {
        t: state.t + params.dt,
        phi: z[..n].to_vec(),
        mu: z[n..2 * n].to_vec(),
        sigma,
    })
}

/// Fixed-point decoupling: solve the phi-mu block with sigma frozen, then
/// the sigma block with the updated phi and mu, sweeping until the true
/// residual of the full coupled system meets the solver contract. A residual
/// criterion is used instead of an iterate-increment one because the latter
/// is floored by inner-solver error amplified by the system's conditioning.
fn solve_decoupled(
    state: &State,
    ops: &mut StepOperators,
    params: &ModelParams,
    g1: &[f64],
    g2: &[f64],
) -> Result<Vec<f64>, SimError> {
    const MAX_SWEEPS: usize = 50;
    let n = ops.grid().num_nodes();
    let StepWork { mut rhs, mut matrix } = build_system(state, ops, params, g1, g2)?;
    if let SigmaBc::DirichletConstant(v) = params.sigma_bc {
        for &i in &ops.boundary {
            set_identity_row(&mut matrix, &mut rhs, 2 * n + i, v);
        }
    }
    let bnorm = crate::linalg::norm2(&rhs).max(f64::MIN_POSITIVE);
    // One order looser than the inner solves, which set the attainable floor.
    let tol = params.solver_tol * 10.0;

    let mut z = Vec::with_capacity(3 * n);
    z.extend_from_slice(&state.phi);
    z.extend_from_slice(&state.mu);
    z.extend_from_slice(&state.sigma);
    if let SigmaBc::DirichletConstant(v) = params.sigma_bc {
        for &i in &ops.boundary {
            z[2 * n + i] = v;
        }
    }

    let mut residual = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        // (a) phi-mu sweep: freeze the sigma unknowns at the current iterate.
        let mut a = matrix.clone();
        let mut r = rhs.clone();
        for i in 0..n {
            set_identity_row(&mut a, &mut r, 2 * n + i, z[2 * n + i]);
        }
        let znew = solve_interleaved(&a, &r, params.solver_tol, default_max_iter(3 * n), 3)?;
        z[..2 * n].copy_from_slice(&znew[..2 * n]);

        // (b) sigma sweep: freeze the updated phi and mu unknowns.
        let mut a = matrix.clone();
        let mut r = rhs.clone();
        for i in 0..2 * n {
            set_identity_row(&mut a, &mut r, i, z[i]);
        }
        let snew = solve_interleaved(&a, &r, params.solver_tol, default_max_iter(3 * n), 3)?;
        z[2 * n..].copy_from_slice(&snew[2 * n..]);

        let az = spmv(&matrix, &z)?;
        residual = az
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * bnorm {
            return Ok(z);
        }
    }
    Err(SimError::NonConvergence {
        iterations: MAX_SWEEPS,
        residual,
        tolerance: tol * bnorm,
    })
}

/// Observation cadence and outputs recorded during a trajectory.
#[derive(Debug, Clone)]
pub struct ObserverConfig {
    /// Record quantities of interest every this many steps (0 disables all
    /// but the initial and final observation).
    pub qoi_every: usize,
    /// Times at which full field snapshots are kept (matched to the nearest
    /// step).
    pub snapshot_times: Vec<f64>,
    /// Record the raw Wiener increments of every step.
    pub log_noise: bool,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            qoi_every: 1,
            snapshot_times: Vec::new(),
            log_noise: false,
        }
    }
}

/// Names of the recorded quantity-of-interest columns, in order.
pub const QOI_NAMES: [&str; 3] = ["tumor_volume", "nutrient_volume", "energy"];

/// Time series and snapshots recorded from one trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub tumor_volume: Vec<f64>,
    pub nutrient_volume: Vec<f64>,
    pub energy: Vec<f64>,
    pub snapshots: Vec<State>,
    pub noise_log: Vec<f64>,
    pub final_state: State,
}

impl Trajectory {
    pub fn qoi_columns(&self) -> Vec<(String, Vec<f64>)> {
        vec![
            (QOI_NAMES[0].into(), self.tumor_volume.clone()),
            (QOI_NAMES[1].into(), self.nutrient_volume.clone()),
            (QOI_NAMES[2].into(), self.energy.clone()),
        ]
    }

    pub fn qoi_at(&self, idx: usize) -> [f64; 3] {
        [
            self.tumor_volume[idx],
            self.nutrient_volume[idx],
            self.energy[idx],
        ]
    }
}

/// Integrate from t = 0 to t_end, recording QoIs at the configured cadence
/// and snapshots at the requested times.
pub fn run_simulation(
    grid: &Grid,
    params: &ModelParams,
    seed: u64,
    obs: &ObserverConfig,
) -> Result<Trajectory, SimError> {
    params.validate()?;
    let mut ops = StepOperators::new(grid, params);
    run_with_operators(&mut ops, params, seed, obs)
}

/// Same as [`run_simulation`] but reusing prebuilt operators (the symbolic
/// assembly phase is shared across ensemble samples).
pub fn run_with_operators(
    ops: &mut StepOperators,
    params: &ModelParams,
    seed: u64,
    obs: &ObserverConfig,
) -> Result<Trajectory, SimError> {
    let n_steps = (params.t_end / params.dt).round() as usize;
    let mut rng = RngStream::new(seed);
    let mut state = initialize(ops, params).map_err(|e| SimError::StepFailed {
        step: 0,
        source: Box::new(e),
    })?;

    let mut snapshot_steps: Vec<usize> = obs
        .snapshot_times
        .iter()
        .map(|&ts| ((ts / params.dt).round() as usize).min(n_steps))
        .collect();
    snapshot_steps.sort_unstable();
    snapshot_steps.dedup();

    let mut traj = Trajectory {
        times: Vec::new(),
        tumor_volume: Vec::new(),
        nutrient_volume: Vec::new(),
        energy: Vec::new(),
        snapshots: Vec::new(),
        noise_log: Vec::new(),
        final_state: state.clone(),
    };

    fn observe(
        traj: &mut Trajectory,
        state: &State,
        step_idx: usize,
        n_steps: usize,
        mass: &SparseMatrix,
        grid: &Grid,
        params: &ModelParams,
        obs: &ObserverConfig,
        snapshot_steps: &[usize],
    ) -> Result<(), SimError> {
        let record_qoi = step_idx == 0
            || step_idx == n_steps
            || (obs.qoi_every > 0 && step_idx % obs.qoi_every == 0);
        if record_qoi {
            traj.times.push(state.t);
            traj.tumor_volume.push(field_integral(mass, &state.phi)?);
            traj.nutrient_volume.push(field_integral(mass, &state.sigma)?);
            traj.energy.push(energy(
                grid,
                &state.phi,
                &state.sigma,
                params.epsilon,
                params.chi,
                params.potential,
            )?);
        }
        if snapshot_steps.contains(&step_idx) {
            traj.snapshots.push(state.clone());
        }
        Ok(())
    }

    let grid = ops.grid().clone();
    observe(
        &mut traj, &state, 0, n_steps, &ops.mass, &grid, params, obs, &snapshot_steps,
    )?;

    for step_idx in 1..=n_steps {
        let noise_log = if obs.log_noise {
            Some(&mut traj.noise_log)
        } else {
            None
        };
        state = step(&state, ops, params, &mut rng, noise_log).map_err(|e| {
            let e = match e {
                SimError::NonFiniteState { .. } => SimError::NonFiniteState { step: step_idx },
                other => other,
            };
            SimError::StepFailed {
                step: step_idx,
                source: Box::new(e),
            }
        })?;
        // Uniform grid in time; avoids accumulation drift.
        state.t = step_idx as f64 * params.dt;
        observe(
            &mut traj, &state, step_idx, n_steps, &ops.mass, &grid, params, obs, &snapshot_steps,
        )?;
    }

    traj.final_state = state;
    Ok(traj)
}
