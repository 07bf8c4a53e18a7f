//! Controlled system `x' = −A x + 1'_ω u` and its minimal-norm null control
//! for `p = r = 2`.
//!
//! Time integrals use the midpoint rule on `τ_j = (j + 1/2)T/n_t`. The same
//! nodes serve the Duhamel integral and the Gramian
//! `Λ_T φ = Σ_j Δt S_{s_j} 1_ω S†_{s_j} φ`, so with `u_j = 1_ω S†_{T−τ_j} φ`
//! the identities `x(T) = S_T x₀ + Λ_T φ` and `‖u‖² = ⟨Λ_T φ, φ⟩` hold exactly
//! at the discrete level.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cert_engine::{CertBundle, LogValue};
use crate::error::{invalid, ObsError, Result};
use crate::scalar::Real;
use crate::spectral::{io, midpoints, EllipticSymbol, Field, Simulator, SymbolTable};
use crate::thickness::Mask;

/// Time nodes summed by one rayon task; fixed so that the reduction order does
/// not depend on the thread count.
const NODES_PER_TASK: usize = 8;

/// Conjugate-gradient settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgOptions<T> {
    /// Stop once `‖Λφ + S_T x₀‖₂ ≤ tol·‖x₀‖₂`.
    pub tol: T,
    pub max_iter: usize,
    /// Tikhonov shift `ε` added to `Λ_T`; a nonzero value marks the run as
    /// not certified.
    #[serde(default)]
    pub epsilon: T,
    /// Precondition with the inverse of the full-mask Gramian scaled by the
    /// observed fraction, a Fourier multiplier.
    #[serde(default = "yes")]
    pub precondition: bool,
}

fn yes() -> bool {
    true
}

impl<T: Real> Default for CgOptions<T> {
    fn default() -> Self {
        CgOptions {
            tol: T::lit(1e-10),
            max_iter: 200,
            epsilon: T::zero(),
            precondition: true,
        }
    }
}

/// Operators of the control problem on one grid.
pub struct ControlProblem<'a, T: Real> {
    sim: &'a Simulator<T>,
    table: SymbolTable<T>,
    adjoint: SymbolTable<T>,
    mask: &'a Mask<T>,
    horizon: T,
    nodes: Vec<T>,
}

impl<'a, T: Real> ControlProblem<'a, T> {
    pub fn new(
        sim: &'a Simulator<T>,
        symbol: &EllipticSymbol<T>,
        mask: &'a Mask<T>,
        horizon: T,
        n_t: usize,
    ) -> Result<Self> {
        sim.grid().ensure_same(mask.grid())?;
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(invalid("T", "horizon must be finite and > 0"));
        }
        if n_t == 0 {
            return Err(invalid("n_t", "at least one time node required"));
        }
        let table = sim.tabulate(symbol)?;
        let adjoint = table.conjugate();
        Ok(ControlProblem {
            sim,
            table,
            adjoint,
            mask,
            horizon,
            nodes: midpoints(horizon, n_t),
        })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    fn dt(&self) -> T {
        self.horizon / T::from_usize_lossy(self.nodes.len())
    }

    fn restrict(&self, f: &mut Field<T>) {
        for (v, &m) in f.values_mut().iter_mut().zip(self.mask.bits()) {
            if !m {
                *v = num_complex::Complex::new(T::zero(), T::zero());
            }
        }
    }

    /// Ordered sum of `term(j)` over all nodes, chunked for rayon.
    fn node_sum(&self, term: impl Fn(usize) -> Result<Field<T>> + Sync) -> Result<Field<T>> {
        let n = self.nodes.len();
        let chunks: Vec<Field<T>> = (0..n.div_ceil(NODES_PER_TASK))
            .into_par_iter()
            .map(|c| {
                let mut acc = Field::zeros(self.sim.grid());
                for j in c * NODES_PER_TASK..((c + 1) * NODES_PER_TASK).min(n) {
                    acc.axpy(T::one(), &term(j)?)?;
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        let mut total = Field::zeros(self.sim.grid());
        for c in &chunks {
            total.axpy(T::one(), c)?;
        }
        Ok(total)
    }

    /// `S_T x₀ + Σ_j Δt S_{T−τ_j}(1_ω u_j)`.
    pub fn duhamel(&self, x0: &Field<T>, u: &[Field<T>]) -> Result<Field<T>> {
        if u.len() != self.nodes.len() {
            return Err(ObsError::GridMismatch(format!(
                "{} control samples for {} time nodes",
                u.len(),
                self.nodes.len()
            )));
        }
        for uj in u {
            self.sim.grid().ensure_same(uj.grid())?;
        }
        let dt = self.dt();
        let forced = self.node_sum(|j| {
            let mut v = u[j].clone();
            self.restrict(&mut v);
            Ok(self
                .sim
                .semigroup_apply_table(&self.table, self.horizon - self.nodes[j], &v)?
                .scaled(dt))
        })?;
        let mut x = self.sim.semigroup_apply_table(&self.table, self.horizon, x0)?;
        x.axpy(T::one(), &forced)?;
        Ok(x)
    }

    /// `Λ_T φ`.
    pub fn gramian_apply(&self, phi: &Field<T>) -> Result<Field<T>> {
        self.sim.grid().ensure_same(phi.grid())?;
        let dt = self.dt();
        self.node_sum(|j| {
            let s = self.nodes[j];
            let mut v = self.sim.semigroup_apply_table(&self.adjoint, s, phi)?;
            self.restrict(&mut v);
            Ok(self.sim.semigroup_apply_table(&self.table, s, &v)?.scaled(dt))
        })
    }

    /// `u_j = 1_ω S†_{T−τ_j} φ` at every node.
    pub fn control_from(&self, phi: &Field<T>) -> Result<Vec<Field<T>>> {
        self.nodes
            .par_iter()
            .map(|&tau| {
                let mut v = self.sim.semigroup_apply_table(&self.adjoint, self.horizon - tau, phi)?;
                self.restrict(&mut v);
                Ok(v)
            })
            .collect()
    }

    /// `(Σ_j Δt ‖u_j‖₂²)^{1/2}`.
    pub fn control_norm(&self, u: &[Field<T>]) -> T {
        let dt = self.dt();
        u.iter()
            .fold(T::zero(), |acc, uj| acc + uj.inner(uj).re * dt)
            .sqrt()
    }

    /// `(ρ_ω Σ_j Δt e^{−2 s_j re a(ξ)} + ε)^{−1}` per FFT slot, `ρ_ω` the
    /// observed fraction of cells.
    fn preconditioner(&self, epsilon: T) -> Vec<T> {
        let dt = self.dt();
        let fraction = T::from_usize_lossy(self.mask.count()) / T::from_usize_lossy(self.mask.bits().len());
        self.table
            .values()
            .iter()
            .map(|a| {
                let g = self
                    .nodes
                    .iter()
                    .fold(T::zero(), |acc, &s| acc + (-T::lit(2.0) * s * a.re).exp() * dt);
                T::one() / (fraction * g + epsilon)
            })
            .collect()
    }

    fn free_evolution(&self, x0: &Field<T>) -> Result<Field<T>> {
        self.sim.semigroup_apply_table(&self.table, self.horizon, x0)
    }
}

pub fn duhamel_solve<T: Real>(
    sim: &Simulator<T>,
    symbol: &EllipticSymbol<T>,
    mask: &Mask<T>,
    x0: &Field<T>,
    u: &[Field<T>],
    horizon: T,
) -> Result<Field<T>> {
    ControlProblem::new(sim, symbol, mask, horizon, u.len().max(1))?.duhamel(x0, u)
}

pub fn gramian_apply<T: Real>(
    sim: &Simulator<T>,
    symbol: &EllipticSymbol<T>,
    mask: &Mask<T>,
    horizon: T,
    n_t: usize,
    phi: &Field<T>,
) -> Result<Field<T>> {
    ControlProblem::new(sim, symbol, mask, horizon, n_t)?.gramian_apply(phi)
}

/// Outcome of [`hum_control`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ControlResult<T> {
    #[serde(rename = "T")]
    pub horizon: T,
    pub n_t: usize,
    pub x0_norm: T,
    /// `‖u‖_{L₂((0,T);L₂(ω))}`.
    pub cost: T,
    /// The three evaluations of `cost²`: `‖u‖²`, `⟨Λφ, φ⟩`, `−⟨S_T x₀, φ⟩`.
    pub cost_sq_control: T,
    pub cost_sq_gramian: T,
    pub cost_sq_rhs: T,
    /// Largest relative spread among the three.
    pub cost_identity_rel_dev: T,
    /// `‖x(T)‖₂ / ‖x₀‖₂` from an independent Duhamel solve.
    pub terminal_residual: T,
    pub cg_iterations: usize,
    /// `‖Λφ + S_T x₀‖₂ / ‖x₀‖₂` after each iteration, starting at `φ = 0`.
    pub cg_history: Vec<T>,
    pub epsilon: T,
    /// `ε = 0`.
    pub certified: bool,
    pub ln_cobs: Option<T>,
    /// `C_obs‖x₀‖₂ / cost`.
    pub margin: Option<LogValue<T>>,
    /// Control samples `u(τ_j)`; dumped separately as binary frames.
    #[serde(skip)]
    pub controls: Vec<Field<T>>,
}

impl<T: Real> ControlResult<T> {
    /// `Some(cost ≤ C_obs‖x₀‖₂)` when a bound was supplied.
    pub fn bound_holds(&self) -> Option<bool> {
        self.margin.as_ref().map(|m| m.ln >= T::zero())
    }

    /// Writes `u(τ_j)` to `dir/control_{j:05}.obsf`.
    pub fn write_frames(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (j, u) in self.controls.iter().enumerate() {
            io::write_field(&dir.join(format!("control_{j:05}.obsf")), u)?;
        }
        Ok(())
    }
}

/// Solves `(Λ_T + ε) φ = −S_T x₀` by (preconditioned) conjugate gradients and returns the
/// minimal-norm control `u(τ) = 1_ω S†_{T−τ} φ` with its cost.
#[allow(clippy::too_many_arguments)]
pub fn hum_control<T: Real>(
    sim: &Simulator<T>,
    symbol: &EllipticSymbol<T>,
    mask: &Mask<T>,
    x0: &Field<T>,
    horizon: T,
    n_t: usize,
    cg: &CgOptions<T>,
    bound: Option<&CertBundle<T>>,
) -> Result<ControlResult<T>> {
    if !(cg.tol > T::zero()) || !(cg.epsilon >= T::zero()) {
        return Err(invalid("cg", "tol must be > 0 and epsilon >= 0"));
    }
    if mask.is_empty() {
        return Err(invalid("mask", "observation set is empty"));
    }
    let problem = ControlProblem::new(sim, symbol, mask, horizon, n_t)?;
    let x0_norm = x0.inner(x0).re.sqrt();
    let ln_cobs = bound.map(|b| b.best_ln_cobs());
    if x0.is_zero() {
        return Ok(ControlResult {
            horizon,
            n_t,
            x0_norm,
            cost: T::zero(),
            cost_sq_control: T::zero(),
            cost_sq_gramian: T::zero(),
            cost_sq_rhs: T::zero(),
            cost_identity_rel_dev: T::zero(),
            terminal_residual: T::zero(),
            cg_iterations: 0,
            cg_history: vec![T::zero()],
            epsilon: cg.epsilon,
            certified: cg.epsilon == T::zero(),
            ln_cobs,
            margin: ln_cobs.map(|_| LogValue::from_ln(T::infinity())),
            controls: vec![Field::zeros(sim.grid()); n_t],
        });
    }
    if cg.epsilon > T::zero() {
        log::warn!("regularized Gramian (epsilon = {}): the control is not certified", cg.epsilon);
    }

    let apply = |v: &Field<T>| -> Result<Field<T>> {
        let mut out = problem.gramian_apply(v)?;
        if cg.epsilon > T::zero() {
            out.axpy(cg.epsilon, v)?;
        }
        Ok(out)
    };
    let weights = cg.precondition.then(|| problem.preconditioner(cg.epsilon));
    let precondition = |v: &Field<T>| -> Result<Field<T>> {
        match &weights {
            Some(w) => sim.apply_multiplier(v, |i| num_complex::Complex::new(w[i], T::zero())),
            None => Ok(v.clone()),
        }
    };
    let free = problem.free_evolution(x0)?;
    let rhs = free.scaled(-T::one());
    let mut phi = Field::zeros(sim.grid());
    let mut r = rhs.clone();
    let mut z = precondition(&r)?;
    let mut p = z.clone();
    let mut rz = r.inner(&z).re;
    let mut rr = r.inner(&r).re;
    let threshold = cg.tol * x0_norm;
    let mut history = vec![rr.sqrt() / x0_norm];
    let mut iterations = 0;
    while rr.sqrt() > threshold {
        if iterations == cg.max_iter {
            return Err(ObsError::NonConvergence {
                iterations,
                last_residual: (rr.sqrt() / x0_norm).as_f64(),
                history: history.iter().map(|h| h.as_f64()).collect(),
            });
        }
        let ap = apply(&p)?;
        let pap = p.inner(&ap).re;
        if !(pap > T::zero()) {
            log::warn!("CG breakdown: <p, Λp> = {pap}");
            return Err(ObsError::NonConvergence {
                iterations,
                last_residual: (rr.sqrt() / x0_norm).as_f64(),
                history: history.iter().map(|h| h.as_f64()).collect(),
            });
        }
        let alpha = rz / pap;
        phi.axpy(alpha, &p)?;
        r.axpy(-alpha, &ap)?;
        rr = r.inner(&r).re;
        z = precondition(&r)?;
        let rz_new = r.inner(&z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        p = {
            let mut next = z.clone();
            next.axpy(beta, &p)?;
            next
        };
        iterations += 1;
        history.push(rr.sqrt() / x0_norm);
    }

    let controls = problem.control_from(&phi)?;
    let cost_sq_control = {
        let c = problem.control_norm(&controls);
        c * c
    };
    let cost_sq_gramian = problem.gramian_apply(&phi)?.inner(&phi).re;
    let cost_sq_rhs = -free.inner(&phi).re;
    let sq = [cost_sq_control, cost_sq_gramian, cost_sq_rhs];
    let hi = sq.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let lo = sq.iter().fold(T::infinity(), |m, &v| m.min(v));
    let cost_identity_rel_dev = (hi - lo) / hi.abs();
    let terminal = problem.duhamel(x0, &controls)?;
    let terminal_residual = terminal.inner(&terminal).re.sqrt() / x0_norm;
    let cost = cost_sq_control.sqrt();
    let margin = ln_cobs.map(|l| LogValue::from_ln(l + x0_norm.ln() - cost.ln()));
    Ok(ControlResult {
        horizon,
        n_t,
        x0_norm,
        cost,
        cost_sq_control,
        cost_sq_gramian,
        cost_sq_rhs,
        cost_identity_rel_dev,
        terminal_residual,
        cg_iterations: iterations,
        cg_history: history,
        epsilon: cg.epsilon,
        certified: cg.epsilon == T::zero(),
        ln_cobs,
        margin,
        controls,
    })
}
