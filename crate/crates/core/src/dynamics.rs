//! Time evolution under Hamiltonian functions of the form
//! h(ψ) = ⟨ψ|H|ψ⟩ + Σ ε ⟨ψ|Y|ψ⟩²/⟨ψ|ψ⟩.
//!
//! Three engines are provided: the exact flow of a single nonlinear term
//! (the generator commutes with its own observable, so freezing ⟨Y⟩ at the
//! step start gives the exact substep), a Strang-symmetrized composition for
//! bipartite systems built from per-conditional local flows plus the
//! interaction, and a monolithic fixed-step RK4 on the full composed
//! derivative used as an independent cross-check.

use num_complex::Complex64 as C64;

use crate::algebra::{hermiticity_defect, CMatrix, CVector, StateVector};
use crate::error::{Error, Result};

/// Largest admissible Trotter step, in units of the reference coupling.
pub const DT_MAX: f64 = 0.1;

/// Conditional vectors with squared norm below this are fixed points of the
/// local flow (homogeneity of degree one gives them zero tangent).
const ZERO_NORM_SQ: f64 = 1e-280;

/// One nonlinear contribution ε·⟨Y⟩²/⟨ψ|ψ⟩ to a Hamiltonian function.
#[derive(Debug, Clone)]
pub struct NonlinearTerm {
    pub strength: f64,
    /// Hermitian observable; here always an involution (Y² = 𝟙), though the
    /// integrators only require Hermiticity.
    pub observable: CMatrix,
}

/// Hamiltonian function of a single system: a Hermitian linear part plus
/// nonlinear expectation-squared terms.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub linear_op: CMatrix,
    pub nonlinear_terms: Vec<NonlinearTerm>,
}

impl HamiltonianSpec {
    pub fn new(linear_op: CMatrix, nonlinear_terms: Vec<NonlinearTerm>) -> Result<Self> {
        let spec = Self {
            linear_op,
            nonlinear_terms,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Purely linear Hamiltonian ⟨ψ|H|ψ⟩.
    pub fn linear(linear_op: CMatrix) -> Result<Self> {
        Self::new(linear_op, Vec::new())
    }

    /// Free system of dimension `dim` (zero generator).
    pub fn free(dim: usize) -> Self {
        Self {
            linear_op: CMatrix::zeros(dim, dim),
            nonlinear_terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.linear_op.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.linear_op.nrows() != self.linear_op.ncols() {
            return Err(Error::ShapeMismatch("linear operator must be square".into()));
        }
        if hermiticity_defect(&self.linear_op) > 1e-12 {
            return Err(Error::InvalidConfiguration(
                "linear operator is not Hermitian to 1e-12".into(),
            ));
        }
        for term in &self.nonlinear_terms {
            if term.observable.nrows() != self.dim() || term.observable.ncols() != self.dim() {
                return Err(Error::ShapeMismatch(
                    "nonlinear observable dimension mismatch".into(),
                ));
            }
            if hermiticity_defect(&term.observable) > 1e-12 {
                return Err(Error::InvalidConfiguration(
                    "nonlinear observable is not Hermitian to 1e-12".into(),
                ));
            }
        }
        Ok(())
    }

    /// h(ψ) evaluated on the normalized version of `psi`.
    pub fn energy(&self, psi: &CVector) -> f64 {
        let n2 = psi.norm_squared();
        if n2 < ZERO_NORM_SQ {
            return 0.0;
        }
        let mut h = psi.dotc(&(&self.linear_op * psi)).re / n2;
        for term in &self.nonlinear_terms {
            let y = psi.dotc(&(&term.observable * psi)).re / n2;
            h += term.strength * y * y;
        }
        h
    }
}

/// Linear coupling g·H_int between the two factors.
#[derive(Debug, Clone)]
pub struct Interaction {
    pub strength: f64,
    pub operator: CMatrix,
}

/// A bipartite system: local Hamiltonian functions extended by the sum over
/// conditional vectors, plus a linear interaction. The composition maps
/// product states to product states whenever the interaction vanishes.
#[derive(Debug, Clone)]
pub struct BipartiteSpec {
    pub local_a: HamiltonianSpec,
    pub local_b: HamiltonianSpec,
    pub interaction: Interaction,
}

impl BipartiteSpec {
    pub fn new(
        local_a: HamiltonianSpec,
        local_b: HamiltonianSpec,
        interaction: Interaction,
    ) -> Result<Self> {
        let spec = Self {
            local_a,
            local_b,
            interaction,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.local_a.dim(), self.local_b.dim())
    }

    pub fn joint_dim(&self) -> usize {
        self.local_a.dim() * self.local_b.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.local_a.validate()?;
        self.local_b.validate()?;
        let d = self.joint_dim();
        if self.interaction.operator.nrows() != d || self.interaction.operator.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "interaction operator must be {d}x{d}"
            )));
        }
        if hermiticity_defect(&self.interaction.operator) > 1e-12 {
            return Err(Error::InvalidConfiguration(
                "interaction operator is not Hermitian to 1e-12".into(),
            ));
        }
        Ok(())
    }

    /// Composed Hamiltonian function on the normalized state: interaction
    /// expectation plus the per-conditional local energies.
    pub fn energy(&self, psi: &CVector) -> f64 {
        let n2 = psi.norm_squared();
        if n2 < ZERO_NORM_SQ {
            return 0.0;
        }
        let (da, db) = self.dims();
        let mut h = self.interaction.strength
            * psi.dotc(&(&self.interaction.operator * psi)).re
            / n2;
        for j in 0..db {
            let cond = extract_column(psi, da, db, j);
            h += conditional_energy(&self.local_a, &cond) / n2;
        }
        for i in 0..da {
            let cond = extract_row(psi, da, db, i);
            h += conditional_energy(&self.local_b, &cond) / n2;
        }
        h
    }
}

/// Homogeneous local energy of an unnormalized conditional vector:
/// ⟨c|H|c⟩ + Σ ε ⟨c|Y|c⟩²/⟨c|c⟩.
fn conditional_energy(spec: &HamiltonianSpec, cond: &CVector) -> f64 {
    let n2 = cond.norm_squared();
    if n2 < ZERO_NORM_SQ {
        return 0.0;
    }
    let mut h = cond.dotc(&(&spec.linear_op * cond)).re;
    for term in &spec.nonlinear_terms {
        let raw = cond.dotc(&(&term.observable * cond)).re;
        h += term.strength * raw * raw / n2;
    }
    h
}

/// Either side of the `integrate` entry point.
#[derive(Debug, Clone)]
pub enum System {
    Single(HamiltonianSpec),
    Bipartite(BipartiteSpec),
}

impl System {
    pub fn dim(&self) -> usize {
        match self {
            System::Single(s) => s.dim(),
            System::Bipartite(s) => s.joint_dim(),
        }
    }

    pub fn energy(&self, psi: &CVector) -> f64 {
        match self {
            System::Single(s) => s.energy(psi),
            System::Bipartite(s) => s.energy(psi),
        }
    }

    fn max_nonlinear_strength(&self) -> f64 {
        let sum = |s: &HamiltonianSpec| -> f64 {
            s.nonlinear_terms.iter().map(|t| t.strength.abs()).sum()
        };
        match self {
            System::Single(s) => sum(s),
            System::Bipartite(s) => sum(&s.local_a).max(sum(&s.local_b)),
        }
    }
}

impl From<HamiltonianSpec> for System {
    fn from(s: HamiltonianSpec) -> Self {
        System::Single(s)
    }
}

impl From<BipartiteSpec> for System {
    fn from(s: BipartiteSpec) -> Self {
        System::Bipartite(s)
    }
}

// ---------------------------------------------------------------------------
// derivatives (monolithic form)
// ---------------------------------------------------------------------------

/// Tangent −i[H + Σ ε(2yY − y²𝟙)]ψ with y = ⟨ψ|Y|ψ⟩/⟨ψ|ψ⟩.
///
/// Homogeneous of degree one: scaling ψ by any complex c scales the tangent
/// by c; the zero vector maps to the zero tangent.
pub fn nonlinear_derivative(psi: &CVector, spec: &HamiltonianSpec) -> CVector {
    let n2 = psi.norm_squared();
    let mut out = &spec.linear_op * psi;
    if n2 >= ZERO_NORM_SQ {
        for term in &spec.nonlinear_terms {
            let y_psi = &term.observable * psi;
            let y = psi.dotc(&y_psi).re / n2;
            let eps = term.strength;
            out += y_psi * C64::new(2.0 * eps * y, 0.0) - psi * C64::new(eps * y * y, 0.0);
        }
    }
    out * C64::new(0.0, -1.0)
}

/// Composed tangent of the bipartite system: interaction plus the local
/// tangents applied to each conditional vector independently.
pub fn bipartite_derivative(psi: &CVector, spec: &BipartiteSpec) -> CVector {
    let (da, db) = spec.dims();
    let mut out =
        (&spec.interaction.operator * psi) * C64::new(0.0, -spec.interaction.strength);
    for j in 0..db {
        let cond = extract_column(psi, da, db, j);
        let tangent = nonlinear_derivative(&cond, &spec.local_a);
        scatter_column_add(&mut out, &tangent, db, j);
    }
    for i in 0..da {
        let cond = extract_row(psi, da, db, i);
        let tangent = nonlinear_derivative(&cond, &spec.local_b);
        scatter_row_add(&mut out, &tangent, db, i);
    }
    out
}

fn extract_column(psi: &CVector, da: usize, db: usize, j: usize) -> CVector {
    CVector::from_fn(da, |i, _| psi[i * db + j])
}

fn extract_row(psi: &CVector, _da: usize, db: usize, i: usize) -> CVector {
    CVector::from_fn(db, |j, _| psi[i * db + j])
}

fn scatter_column_add(out: &mut CVector, col: &CVector, db: usize, j: usize) {
    for i in 0..col.len() {
        out[i * db + j] += col[i];
    }
}

fn scatter_row_add(out: &mut CVector, row: &CVector, db: usize, i: usize) {
    for j in 0..row.len() {
        out[i * db + j] += row[j];
    }
}

fn scatter_column_set(out: &mut CVector, col: &CVector, db: usize, j: usize) {
    for i in 0..col.len() {
        out[i * db + j] = col[i];
    }
}

fn scatter_row_set(out: &mut CVector, row: &CVector, db: usize, i: usize) {
    for j in 0..row.len() {
        out[i * db + j] = row[j];
    }
}

// ---------------------------------------------------------------------------
// exact substeps
// ---------------------------------------------------------------------------

/// Eigendecomposition of a Hermitian operator, reused across steps so that
/// every substep is an exact unitary.
#[derive(Debug, Clone)]
struct PreparedHermitian {
    eigvecs: CMatrix,
    eigvals: Vec<f64>,
    zero: bool,
}

impl PreparedHermitian {
    fn new(op: &CMatrix) -> Self {
        let eig = op.clone().symmetric_eigen();
        let eigvals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let zero = eigvals.iter().all(|&l| l.abs() < 1e-300);
        Self {
            eigvecs: eig.eigenvectors,
            eigvals,
            zero,
        }
    }

    /// v ← e^{−i angle·Op} v.
    fn apply_exp(&self, v: &mut CVector, angle: f64) {
        if angle == 0.0 || self.zero {
            return;
        }
        let mut coeffs = self.eigvecs.adjoint() * &*v;
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= C64::from_polar(1.0, -angle * self.eigvals[k]);
        }
        *v = &self.eigvecs * coeffs;
    }
}

/// Exact flow of a single nonlinear term over `dt`, with the expectation
/// frozen at the step start. Because the generator 2yY − y²𝟙 commutes with
/// Y, ⟨Y⟩ is conserved along the pure term flow and the frozen-coefficient
/// exponential is the exact propagator, not an approximation.
#[derive(Debug, Clone)]
struct PreparedNonlinearTerm {
    strength: f64,
    observable: CMatrix,
    prepared: PreparedHermitian,
}

impl PreparedNonlinearTerm {
    fn new(term: &NonlinearTerm) -> Self {
        Self {
            strength: term.strength,
            observable: term.observable.clone(),
            prepared: PreparedHermitian::new(&term.observable),
        }
    }

    fn apply(&self, v: &mut CVector, dt: f64) {
        let n2 = v.norm_squared();
        if n2 < ZERO_NORM_SQ || self.strength == 0.0 {
            return;
        }
        let y = v.dotc(&(&self.observable * &*v)).re / n2;
        // e^{−i dt ε (2y Y − y² 𝟙)}
        self.prepared.apply_exp(v, 2.0 * dt * self.strength * y);
        let phase = C64::from_polar(1.0, dt * self.strength * y * y);
        for c in v.iter_mut() {
            *c *= phase;
        }
    }
}

/// Applies e^{−i dt ε (2y₀Y − y₀²𝟙)} with y₀ frozen at the step start; exact
/// for the pure-term flow. A zero state is returned unchanged.
pub fn local_nonlinear_step(
    psi: &CVector,
    observable: &CMatrix,
    strength: f64,
    dt: f64,
) -> Result<CVector> {
    if dt <= 0.0 {
        return Err(Error::Domain("dt must be positive".into()));
    }
    if observable.nrows() != psi.len() || observable.ncols() != psi.len() {
        return Err(Error::ShapeMismatch(
            "observable dimension does not match state".into(),
        ));
    }
    let term = PreparedNonlinearTerm::new(&NonlinearTerm {
        strength,
        observable: observable.clone(),
    });
    let mut v = psi.clone();
    term.apply(&mut v, dt);
    Ok(v)
}

/// Exact symmetric flow of one local Hamiltonian function over `dt`:
/// linear half-step, nested nonlinear terms, linear half-step.
#[derive(Debug, Clone)]
struct PreparedLocalFlow {
    linear: PreparedHermitian,
    terms: Vec<PreparedNonlinearTerm>,
}

impl PreparedLocalFlow {
    fn new(spec: &HamiltonianSpec) -> Self {
        Self {
            linear: PreparedHermitian::new(&spec.linear_op),
            terms: spec
                .nonlinear_terms
                .iter()
                .map(PreparedNonlinearTerm::new)
                .collect(),
        }
    }

    fn apply(&self, v: &mut CVector, dt: f64) {
        self.linear.apply_exp(v, 0.5 * dt);
        Self::apply_terms(&self.terms, v, dt);
        self.linear.apply_exp(v, 0.5 * dt);
    }

    /// Symmetric (Strang-nested) composition of the term flows.
    fn apply_terms(terms: &[PreparedNonlinearTerm], v: &mut CVector, dt: f64) {
        match terms {
            [] => {}
            [only] => only.apply(v, dt),
            [first, rest @ ..] => {
                first.apply(v, 0.5 * dt);
                Self::apply_terms(rest, v, dt);
                first.apply(v, 0.5 * dt);
            }
        }
    }
}

/// Interaction propagator: exact diagonal phases when H_int is diagonal in
/// the computational basis, otherwise the dense unitary from the
/// eigendecomposition (supported, slower).
#[derive(Debug, Clone)]
enum InteractionFlow {
    Diagonal(Vec<f64>),
    Dense(PreparedHermitian),
}

impl InteractionFlow {
    fn new(op: &CMatrix) -> Self {
        let mut off_diag = 0.0f64;
        for i in 0..op.nrows() {
            for j in 0..op.ncols() {
                if i != j {
                    off_diag = off_diag.max(op[(i, j)].norm());
                }
            }
        }
        if off_diag < 1e-14 {
            InteractionFlow::Diagonal((0..op.nrows()).map(|i| op[(i, i)].re).collect())
        } else {
            InteractionFlow::Dense(PreparedHermitian::new(op))
        }
    }

    fn apply(&self, v: &mut CVector, angle: f64) {
        if angle == 0.0 {
            return;
        }
        match self {
            InteractionFlow::Diagonal(diag) => {
                for (k, c) in v.iter_mut().enumerate() {
                    *c *= C64::from_polar(1.0, -angle * diag[k]);
                }
            }
            InteractionFlow::Dense(prep) => prep.apply_exp(v, angle),
        }
    }
}

/// Strang-symmetrized one-step propagator for a bipartite system:
/// half-step local A, half-step local B, full interaction step, half-step
/// local B, half-step local A. Local substeps act on each unnormalized
/// conditional vector independently; zero conditionals are fixed points.
pub struct WeinbergPropagator {
    spec: BipartiteSpec,
    flow_a: PreparedLocalFlow,
    flow_b: PreparedLocalFlow,
    interaction: InteractionFlow,
}

impl WeinbergPropagator {
    pub fn new(spec: BipartiteSpec) -> Result<Self> {
        spec.validate()?;
        let flow_a = PreparedLocalFlow::new(&spec.local_a);
        let flow_b = PreparedLocalFlow::new(&spec.local_b);
        let interaction = InteractionFlow::new(&spec.interaction.operator);
        Ok(Self {
            spec,
            flow_a,
            flow_b,
            interaction,
        })
    }

    pub fn spec(&self) -> &BipartiteSpec {
        &self.spec
    }

    fn local_a(&self, psi: &mut CVector, dt: f64) {
        let (da, db) = self.spec.dims();
        for j in 0..db {
            let mut cond = extract_column(psi, da, db, j);
            if cond.norm_squared() >= ZERO_NORM_SQ {
                self.flow_a.apply(&mut cond, dt);
                scatter_column_set(psi, &cond, db, j);
            }
        }
    }

    fn local_b(&self, psi: &mut CVector, dt: f64) {
        let (da, db) = self.spec.dims();
        for i in 0..da {
            let mut cond = extract_row(psi, da, db, i);
            if cond.norm_squared() >= ZERO_NORM_SQ {
                self.flow_b.apply(&mut cond, dt);
                scatter_row_set(psi, &cond, db, i);
            }
        }
    }

    pub fn step_vector(&self, psi: &mut CVector, dt: f64) {
        self.local_a(psi, 0.5 * dt);
        self.local_b(psi, 0.5 * dt);
        self.interaction
            .apply(psi, dt * self.spec.interaction.strength);
        self.local_b(psi, 0.5 * dt);
        self.local_a(psi, 0.5 * dt);
    }
}

/// One Strang-composed step of the bipartite flow.
pub fn weinberg_step(psi: &StateVector, spec: &BipartiteSpec, dt: f64) -> Result<StateVector> {
    if !(dt > 0.0 && dt <= DT_MAX) {
        return Err(Error::Domain(format!(
            "dt must lie in (0, {DT_MAX}], got {dt}"
        )));
    }
    if psi.dim() != spec.joint_dim() {
        return Err(Error::ShapeMismatch(format!(
            "state dimension {} does not match joint dimension {}",
            psi.dim(),
            spec.joint_dim()
        )));
    }
    let prop = WeinbergPropagator::new(spec.clone())?;
    let mut v = psi.amplitudes().clone();
    prop.step_vector(&mut v, dt);
    StateVector::new(v)
}

// ---------------------------------------------------------------------------
// integration driver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorMode {
    /// Strang-composed exact substeps (default).
    Trotter,
    /// Classic fixed-step RK4 on the monolithic composed derivative;
    /// independent of the splitting and used to cross-check it.
    Rk4,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub mode: IntegratorMode,
    /// Internal substeps per sample interval; 0 selects automatically from
    /// the nonlinear strength so strong nonlinearities keep the energy
    /// monitor honest. Sampling is always on the `dt` grid.
    pub substeps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            mode: IntegratorMode::Trotter,
            substeps: 0,
        }
    }
}

/// Per-sample record of the conserved quantities.
#[derive(Debug, Clone, Copy)]
pub struct StepMonitor {
    /// Norm relative to the initial norm, before any renormalization.
    pub norm: f64,
    /// Hamiltonian function h(ψ) on the normalized state.
    pub energy: f64,
}

/// Sampled evolution together with its conservation monitors.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub monitors: Vec<StepMonitor>,
    /// Largest pre-renormalization deviation |‖ψ‖/‖ψ₀‖ − 1| seen on any step.
    pub max_norm_drift: f64,
    /// Largest |h(t) − h(0)| over the run.
    pub max_energy_drift: f64,
    /// Number of renormalization events (drift beyond 1e-12).
    pub renormalizations: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Integrates the system from `psi0` to `t_final`, sampling every `dt`.
///
/// Norm is restored to the initial norm whenever the relative drift exceeds
/// 1e-12; the energy monitor must stay within 1e-6·|h(0)| + 1e-9, and the
/// run aborts with a diverged error if either monitor exceeds ten times its
/// tolerance.
pub fn integrate(
    psi0: &StateVector,
    system: &System,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_opts(psi0, system, t_final, dt, IntegrateOptions::default())
}

pub fn integrate_opts(
    psi0: &StateVector,
    system: &System,
    t_final: f64,
    dt: f64,
    opts: IntegrateOptions,
) -> Result<Trajectory> {
    if !(t_final > 0.0) || !(dt > 0.0) {
        return Err(Error::Domain("t_final and dt must be positive".into()));
    }
    if psi0.dim() != system.dim() {
        return Err(Error::ShapeMismatch(format!(
            "state dimension {} does not match system dimension {}",
            psi0.dim(),
            system.dim()
        )));
    }

    let substeps = if opts.substeps > 0 {
        opts.substeps
    } else {
        auto_substeps(system, dt)
    };
    let dt_sub = dt / substeps as f64;

    let propagator = match (&opts.mode, system) {
        (IntegratorMode::Trotter, System::Bipartite(spec)) => {
            Some(WeinbergPropagator::new(spec.clone())?)
        }
        _ => None,
    };
    let single_flow = match (&opts.mode, system) {
        (IntegratorMode::Trotter, System::Single(spec)) => Some(PreparedLocalFlow::new(spec)),
        _ => None,
    };

    let n_steps = (t_final / dt).round().max(1.0) as usize;
    let norm0 = psi0.norm();
    let mut v = psi0.amplitudes().clone();
    let h0 = system.energy(&v);
    let energy_tol = 1e-6 * h0.abs() + 1e-9;
    let norm_tol = 1e-8;

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut monitors = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(psi0.clone());
    monitors.push(StepMonitor {
        norm: 1.0,
        energy: h0,
    });

    let mut max_norm_drift = 0.0f64;
    let mut max_energy_drift = 0.0f64;
    let mut renormalizations = 0usize;

    for step in 1..=n_steps {
        for _ in 0..substeps {
            match &opts.mode {
                IntegratorMode::Trotter => match system {
                    System::Bipartite(_) => {
                        propagator.as_ref().unwrap().step_vector(&mut v, dt_sub)
                    }
                    System::Single(_) => single_flow.as_ref().unwrap().apply(&mut v, dt_sub),
                },
                IntegratorMode::Rk4 => rk4_step(&mut v, system, dt_sub),
            }
        }
        let t = step as f64 * dt;

        let rel_norm = v.norm() / norm0;
        let drift = (rel_norm - 1.0).abs();
        max_norm_drift = max_norm_drift.max(drift);
        if drift > 10.0 * norm_tol {
            return Err(Error::IntegrationDiverged {
                time: t,
                monitor: format!("norm drift {drift:.3e} exceeds 10x tolerance {norm_tol:.1e}"),
            });
        }
        if drift > 1e-12 {
            let scale = C64::new(1.0 / rel_norm, 0.0);
            for c in v.iter_mut() {
                *c *= scale;
            }
            renormalizations += 1;
        }

        let h = system.energy(&v);
        let e_drift = (h - h0).abs();
        max_energy_drift = max_energy_drift.max(e_drift);
        if e_drift > 10.0 * energy_tol {
            return Err(Error::IntegrationDiverged {
                time: t,
                monitor: format!(
                    "energy drift {e_drift:.3e} exceeds 10x tolerance {energy_tol:.1e}"
                ),
            });
        }

        times.push(t);
        states.push(StateVector::new(v.clone())?);
        monitors.push(StepMonitor {
            norm: rel_norm,
            energy: h,
        });
    }

    Ok(Trajectory {
        times,
        states,
        monitors,
        max_norm_drift,
        max_energy_drift,
        renormalizations,
    })
}

/// Strong nonlinearities are substepped so the splitting error stays within
/// the energy monitor. For the bipartite composition the measured drift law
/// is ≈ 0.7·g²·ε·dt_sub², and the monitor allows 1e-6·|h(0)| ≈ 5e-7·g, so
/// dt_sub ≤ 6e-4/√(gε) keeps a 2x margin.
fn auto_substeps(system: &System, dt: f64) -> usize {
    let s = system.max_nonlinear_strength();
    let needed = match system {
        System::Bipartite(spec) => {
            let gs = spec.interaction.strength.abs() * s;
            if gs <= 0.0 {
                return 1;
            }
            6e-4 / gs.sqrt()
        }
        System::Single(_) => {
            if s <= 0.0 {
                return 1;
            }
            2.5e-3 / s
        }
    };
    ((dt / needed).ceil() as usize).max(1)
}

fn rk4_step(v: &mut CVector, system: &System, dt: f64) {
    let deriv = |x: &CVector| -> CVector {
        match system {
            System::Single(spec) => nonlinear_derivative(x, spec),
            System::Bipartite(spec) => bipartite_derivative(x, spec),
        }
    };
    let k1 = deriv(v);
    let k2 = deriv(&(&*v + &k1 * C64::new(0.5 * dt, 0.0)));
    let k3 = deriv(&(&*v + &k2 * C64::new(0.5 * dt, 0.0)));
    let k4 = deriv(&(&*v + &k3 * C64::new(dt, 0.0)));
    *v += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
        * C64::new(dt / 6.0, 0.0);
}

/// |⟨a|b⟩| for the normalized versions of `a`, `b`; 1 means physically
/// identical states.
pub fn state_overlap(a: &StateVector, b: &StateVector) -> f64 {
    a.overlap(b).norm() / (a.norm() * b.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{partial_trace_and_entropy, StateVector, Subsystem};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// σ_y in the sign convention of the cat encoding: i|0⟩⟨1| − i|1⟩⟨0|.
    fn sigma_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 1.), c(0., -1.), c(0., 0.)])
    }

    fn qubit_pair_spec(g: f64, eps: f64) -> BipartiteSpec {
        let local = HamiltonianSpec::new(
            CMatrix::zeros(2, 2),
            vec![NonlinearTerm {
                strength: eps,
                observable: sigma_y(),
            }],
        )
        .unwrap();
        let mut h_int = CMatrix::zeros(4, 4);
        h_int[(1, 1)] = c(1.0, 0.0);
        h_int[(2, 2)] = c(1.0, 0.0);
        BipartiteSpec::new(
            local.clone(),
            local,
            Interaction {
                strength: g,
                operator: h_int,
            },
        )
        .unwrap()
    }

    fn cat_product() -> StateVector {
        StateVector::from_components(&[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)])
            .unwrap()
    }

    #[test]
    fn derivative_reduces_to_linear_at_zero_strength() {
        let h =
            CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0.2, 0.1), c(0.2, -0.1), c(-0.5, 0.)]);
        let spec = HamiltonianSpec::new(h.clone(), vec![]).unwrap();
        let psi = CVector::from_row_slice(&[c(0.6, 0.1), c(0.3, -0.7)]);
        let got = nonlinear_derivative(&psi, &spec);
        let expect = (&h * &psi) * c(0.0, -1.0);
        assert!((got - expect).norm() < 1e-14);
    }

    #[test]
    fn derivative_nonlinear_term_vanishes_on_zero_expectation_state() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.3, 0.), c(0., 0.), c(0., 0.), c(0.9, 0.)]);
        let spec = HamiltonianSpec::new(
            h.clone(),
            vec![NonlinearTerm {
                strength: 1.7,
                observable: sigma_y(),
            }],
        )
        .unwrap();
        // <0|sigma_y|0> = 0
        let psi = CVector::from_row_slice(&[c(1., 0.), c(0., 0.)]);
        let got = nonlinear_derivative(&psi, &spec);
        let expect = (&h * &psi) * c(0.0, -1.0);
        assert!((got - expect).norm() < 1e-14);
    }

    #[test]
    fn derivative_on_negative_eigenvector_matches_hand_evaluation() {
        // psi = (|0> + i|1>)/sqrt(2) is the -1 eigenvector of this sigma_y,
        // so the nonlinear piece acts as -i eps (-2 sigma_y - 1) psi = -i eps psi.
        let eps = 0.8;
        let spec = HamiltonianSpec::new(
            CMatrix::zeros(2, 2),
            vec![NonlinearTerm {
                strength: eps,
                observable: sigma_y(),
            }],
        )
        .unwrap();
        let s = 0.5f64.sqrt();
        let psi = CVector::from_row_slice(&[c(s, 0.), c(0., s)]);
        let y = psi.dotc(&(sigma_y() * &psi)).re;
        assert_abs_diff_eq!(y, -1.0, epsilon = 1e-14);
        let got = nonlinear_derivative(&psi, &spec);
        let expect = &psi * c(0.0, -eps);
        assert!((got - expect).norm() < 1e-14);
    }

    #[test]
    fn derivative_is_homogeneous_of_degree_one() {
        let spec = qubit_pair_spec(0.7, 0.4);
        let psi =
            CVector::from_row_slice(&[c(0.4, 0.1), c(0.3, -0.2), c(-0.1, 0.5), c(0.2, 0.2)]);
        let scale = c(1.3, -0.8);
        let base = bipartite_derivative(&psi, &spec);
        let scaled = bipartite_derivative(&(&psi * scale), &spec);
        assert!((scaled - base * scale).norm() < 1e-12);
    }

    #[test]
    fn derivative_of_zero_vector_is_zero() {
        let spec = HamiltonianSpec::new(
            CMatrix::zeros(2, 2),
            vec![NonlinearTerm {
                strength: 2.0,
                observable: sigma_y(),
            }],
        )
        .unwrap();
        let zero = CVector::zeros(2);
        assert_eq!(nonlinear_derivative(&zero, &spec).norm(), 0.0);
    }

    #[test]
    fn local_step_identity_at_zero_strength() {
        let psi = CVector::from_row_slice(&[c(0.6, 0.1), c(0.3, -0.7)]);
        let out = local_nonlinear_step(&psi, &sigma_y(), 0.0, 1e-2).unwrap();
        assert!((out - psi).norm() < 1e-15);
    }

    #[test]
    fn local_step_on_eigenvector_is_a_global_phase() {
        // +1 eigenvector of this sigma_y is (|0> - i|1>)/sqrt(2);
        // y0 = 1, so the step multiplies by e^{-i dt eps}.
        let s = 0.5f64.sqrt();
        let psi = CVector::from_row_slice(&[c(s, 0.), c(0., -s)]);
        let (eps, dt) = (0.9, 0.05);
        let out = local_nonlinear_step(&psi, &sigma_y(), eps, dt).unwrap();
        let expect = &psi * C64::from_polar(1.0, -dt * eps);
        assert!((out - expect).norm() < 1e-13);
    }

    #[test]
    fn local_step_conserves_its_own_expectation() {
        let psi = CVector::from_row_slice(&[c(0.8, 0.15), c(-0.35, 0.42)]);
        let y = sigma_y();
        let before = psi.dotc(&(&y * &psi)).re / psi.norm_squared();
        let out = local_nonlinear_step(&psi, &y, 1.3, 0.07).unwrap();
        let after = out.dotc(&(&y * &out)).re / out.norm_squared();
        assert_abs_diff_eq!(before, after, epsilon = 1e-12);
    }

    #[test]
    fn zero_coupling_keeps_product_states_product() {
        for eps in [0.5, 2.0, 5.0] {
            let spec = qubit_pair_spec(0.0, eps);
            let mut psi = cat_product();
            for _ in 0..200 {
                psi = weinberg_step(&psi, &spec, 0.05).unwrap();
            }
            let red = partial_trace_and_entropy(&psi, (2, 2), Subsystem::A).unwrap();
            assert!(red.entropy < 1e-10, "entropy {} at eps {eps}", red.entropy);
        }
    }

    #[test]
    fn linear_case_accumulates_interaction_phases() {
        // eps = 0, g = 1: amplitudes (1, e^{-igt}, e^{-igt}, 1)/2.
        let spec = qubit_pair_spec(1.0, 0.0);
        let dt = 1e-3;
        let mut psi = cat_product();
        let steps = 500;
        for _ in 0..steps {
            psi = weinberg_step(&psi, &spec, dt).unwrap();
        }
        let t = steps as f64 * dt;
        let ph = C64::from_polar(0.5, -t);
        let amps = psi.amplitudes();
        assert!((amps[0] - c(0.5, 0.0)).norm() < 1e-9);
        assert!((amps[1] - ph).norm() < 1e-9);
        assert!((amps[2] - ph).norm() < 1e-9);
        assert!((amps[3] - c(0.5, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn weinberg_step_rejects_oversized_dt() {
        let spec = qubit_pair_spec(1.0, 0.1);
        assert!(matches!(
            weinberg_step(&cat_product(), &spec, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn splitting_is_second_order_in_dt() {
        let spec = qubit_pair_spec(1.0, 0.4);
        let system = System::Bipartite(spec);
        let run = |dt: f64| {
            integrate_opts(
                &cat_product(),
                &system,
                1.0,
                dt,
                IntegrateOptions {
                    mode: IntegratorMode::Trotter,
                    substeps: 1,
                },
            )
            .unwrap()
            .final_state()
            .clone()
        };
        let coarse = run(4e-3);
        let mid = run(2e-3);
        let fine = run(1e-3);
        let e1 = (coarse.amplitudes() - mid.amplitudes()).norm();
        let e2 = (mid.amplitudes() - fine.amplitudes()).norm();
        let ratio = e1 / e2;
        assert!(
            (3.0..5.5).contains(&ratio),
            "expected ~4x shrink, got {ratio}"
        );
    }

    #[test]
    fn integrate_matches_exact_diagonal_propagator() {
        let spec = qubit_pair_spec(1.0, 0.0);
        let traj = integrate(
            &cat_product(),
            &System::Bipartite(spec),
            std::f64::consts::PI,
            1e-3,
        )
        .unwrap();
        let t = *traj.times.last().unwrap();
        let ph = C64::from_polar(0.5, -t);
        let amps = traj.final_state().amplitudes().clone();
        assert!((amps[0] - c(0.5, 0.0)).norm() < 1e-9);
        assert!((amps[1] - ph).norm() < 1e-9);
    }

    #[test]
    fn trotter_and_rk4_agree() {
        let system = System::Bipartite(qubit_pair_spec(0.5, 0.3));
        let t_final = 2.0;
        let trotter = integrate(&cat_product(), &system, t_final, 1e-3).unwrap();
        let rk4 = integrate_opts(
            &cat_product(),
            &system,
            t_final,
            1e-3,
            IntegrateOptions {
                mode: IntegratorMode::Rk4,
                substeps: 1,
            },
        )
        .unwrap();
        let overlap = state_overlap(trotter.final_state(), rk4.final_state());
        assert!(
            overlap > 1.0 - 1e-6,
            "overlap deficit {:.2e}",
            1.0 - overlap
        );
    }

    #[test]
    fn non_diagonal_interaction_falls_back_to_dense_exponential() {
        let sx = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let h_int = sx.kronecker(&sx);
        let local = HamiltonianSpec::free(2);
        let spec = BipartiteSpec::new(
            local.clone(),
            local,
            Interaction {
                strength: 0.7,
                operator: h_int,
            },
        )
        .unwrap();
        let system = System::Bipartite(spec);
        let trotter = integrate(&cat_product(), &system, 1.0, 1e-3).unwrap();
        let rk4 = integrate_opts(
            &cat_product(),
            &system,
            1.0,
            1e-3,
            IntegrateOptions {
                mode: IntegratorMode::Rk4,
                substeps: 1,
            },
        )
        .unwrap();
        assert!(state_overlap(trotter.final_state(), rk4.final_state()) > 1.0 - 1e-8);
    }

    #[test]
    fn no_spontaneous_entanglement_over_long_runs() {
        for eps in [0.5, 5.0] {
            let system = System::Bipartite(qubit_pair_spec(0.0, eps));
            let traj = integrate(&cat_product(), &system, 10.0, 1e-2).unwrap();
            let worst = traj
                .states
                .iter()
                .map(|s| {
                    partial_trace_and_entropy(s, (2, 2), Subsystem::A)
                        .unwrap()
                        .entropy
                })
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-8, "entropy {worst} at eps {eps}");
        }
    }

    #[test]
    fn evolution_commutes_with_complex_scaling() {
        let system = System::Bipartite(qubit_pair_spec(0.8, 0.6));
        let scale = c(0.37, 1.21);
        let base = integrate(&cat_product(), &system, 1.5, 1e-3).unwrap();
        let scaled0 = StateVector::new(cat_product().amplitudes() * scale).unwrap();
        let scaled = integrate(&scaled0, &system, 1.5, 1e-3).unwrap();
        let expect = base.final_state().amplitudes() * scale;
        let got = scaled.final_state().amplitudes().clone();
        assert!(
            (got - expect).norm() / cat_product().norm() < 1e-9,
            "projective invariance violated"
        );
    }

    #[test]
    fn monitors_stay_within_tolerances() {
        let system = System::Bipartite(qubit_pair_spec(1.0, 0.4));
        let traj = integrate(&cat_product(), &system, 6.0, 1e-3).unwrap();
        assert!(traj.max_norm_drift < 1e-8);
        let h0 = traj.monitors[0].energy;
        assert!(traj.max_energy_drift <= 1e-6 * h0.abs() + 1e-9);
    }

    #[test]
    fn strong_nonlinearities_get_substepped() {
        let system = System::Bipartite(qubit_pair_spec(0.2, 6.0));
        assert!(auto_substeps(&system, 1e-3) >= 2);
        // and the run survives its own energy monitor
        let traj = integrate(&cat_product(), &system, 3.0, 1e-3).unwrap();
        let h0 = traj.monitors[0].energy;
        assert!(traj.max_energy_drift <= 1e-6 * h0.abs() + 1e-9);
    }

    #[test]
    fn single_system_trotter_matches_rk4() {
        // oscillator-style single system: H = n + eps <Y>^2 with Y = parity
        let cfg = crate::algebra::FockConfig::new(32, 1.0).unwrap();
        let ops = crate::algebra::build_fock_ops(&cfg).unwrap();
        let spec = HamiltonianSpec::new(
            ops.number.clone(),
            vec![NonlinearTerm {
                strength: 0.3,
                observable: ops.parity.clone(),
            }],
        )
        .unwrap();
        let psi0 = crate::algebra::coherent_state(&cfg, c(0.8, 0.0)).unwrap();
        let system = System::Single(spec);
        let a = integrate(&psi0, &system, 2.0, 1e-3).unwrap();
        let b = integrate_opts(
            &psi0,
            &system,
            2.0,
            1e-3,
            IntegrateOptions {
                mode: IntegratorMode::Rk4,
                substeps: 1,
            },
        )
        .unwrap();
        assert!(state_overlap(a.final_state(), b.final_state()) > 1.0 - 1e-7);
    }
}
