//! Reduced energy functionals on grid potentials.
//!
//! Densities drop the constant prefactor of the reduced volume form and the
//! fibre volume; everything here is a ratio by `V` or a comparison in time.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::grid::tree_sum;
use crate::flow::{FlowOperator, Grid, NodeEval};
use crate::linalg::dot;
use crate::real::Real;

/// `ρ_u = det D²u · Π (c_α, ∇u + s)` at each node.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDensity<T> {
    pub values: Vec<T>,
}

impl<T: Real> ReducedDensity<T> {
    pub fn from_evals(evals: &[NodeEval<T>]) -> Self {
        Self { values: evals.iter().map(|e| e.density()).collect() }
    }

    pub fn check(&self) -> Result<()> {
        match self.values.iter().position(|v| !(*v >= T::zero())) {
            Some(i) => Err(Error::numerical(format!("negative reduced density at node {i}"))),
            None => Ok(()),
        }
    }
}

/// `∫ ρ_u dx` (trapezoid rule).
pub fn volume<T: Real>(grid: &Grid<T>, rho: &ReducedDensity<T>) -> Result<T> {
    rho.check()?;
    Ok(grid.integrate(&rho.values))
}

/// `(1/V) ∫ φ (ρ₀ − ρ) dx`.
pub fn i_functional<T: Real>(grid: &Grid<T>, phi: &[T], rho0: &ReducedDensity<T>, rho: &ReducedDensity<T>, v: T) -> Result<T> {
    if phi.len() != grid.len() || rho0.values.len() != grid.len() || rho.values.len() != grid.len() {
        return Err(Error::config("field sizes do not match the grid"));
    }
    let f: Vec<T> = (0..phi.len()).map(|i| phi[i] * (rho0.values[i] - rho.values[i])).collect();
    Ok(grid.integrate(&f) / v)
}

/// `θ = (ξ, ∇u)` at each node.
pub fn theta_reduced<T: Real>(evals: &[NodeEval<T>], xi: &[T]) -> Vec<T> {
    evals.iter().map(|e| dot(xi, &e.grad)).collect()
}

/// `e^{θ} ρ_u` with `θ` shifted by a constant so that it integrates to `V`,
/// the normalization `∫ e^{θ_X} ωⁿ = V`.
pub fn tilted_density<T: Real>(grid: &Grid<T>, evals: &[NodeEval<T>], xi: &[T], v: T) -> Vec<T> {
    let theta = theta_reduced(evals, xi);
    let top = theta.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let raw: Vec<T> = evals.iter().zip(&theta).map(|(e, &th)| (th - top).exp() * e.density()).collect();
    let scale = v / grid.integrate(&raw);
    raw.into_iter().map(|x| x * scale).collect()
}

/// `J̃(φ)` along `u₀ + s·φ`, `φ = ū − u₀` with `ū = S + ψ`, by composite
/// Simpson in `s`.
pub fn j_tilde<T: Real>(op: &FlowOperator<T>, psi: &[T], xi: &[T], v: T, path_steps: usize) -> Result<T> {
    if path_steps < 8 || path_steps % 2 == 1 {
        return Err(Error::config("path_steps must be even and at least 8"));
    }
    let grid = &op.grid;
    let phi = op.phi_values(psi);
    let base = tilted_density(grid, &op.eval_reference()?, xi, v);
    let mut terms = Vec::with_capacity(path_steps + 1);
    for k in 0..=path_steps {
        let s = T::from_usize_lossy(k) / T::from_usize_lossy(path_steps);
        let evals = op.eval_all_blend(s, psi).map_err(|e| Error::numerical(format!("J̃ path at s = {s:?}: {e}")))?;
        let ts = tilted_density(grid, &evals, xi, v);
        let f: Vec<T> = (0..phi.len()).map(|i| phi[i] * (base[i] - ts[i])).collect();
        let wk = if k == 0 || k == path_steps {
            T::one()
        } else if k % 2 == 1 {
            T::lit(4.0)
        } else {
            T::lit(2.0)
        };
        terms.push(wk * grid.integrate(&f));
    }
    let h = T::one() / T::from_usize_lossy(path_steps);
    Ok(tree_sum(&terms) * h / T::lit(3.0) / v)
}

/// `F̃(φ) = J̃(φ) − (1/V)∫ φ e^{θ₀} ρ₀ − log((1/V)∫ e^{−φ} w₀)`, where
/// `w₀ ∝ e^{−u₀}` has mass `V`.
pub fn f_tilde<T: Real>(op: &FlowOperator<T>, psi: &[T], xi: &[T], v: T, path_steps: usize) -> Result<T> {
    let grid = &op.grid;
    let j = j_tilde(op, psi, xi, v, path_steps)?;
    let phi = op.phi_values(psi);
    let base = tilted_density(grid, &op.eval_reference()?, xi, v);
    let lin: Vec<T> = phi.iter().zip(&base).map(|(&p, &b)| p * b).collect();
    let log_ratio = log_integral_exp_neg(grid, &op.potential_values(psi)) - log_integral_exp_neg(grid, &op.u0_values());
    Ok(j - grid.integrate(&lin) / v - log_ratio)
}

/// `log ∫ e^{−f} dx` without overflow.
pub fn log_integral_exp_neg<T: Real>(grid: &Grid<T>, f: &[T]) -> T {
    let lo = f.iter().fold(T::infinity(), |a, &b| a.min(b));
    let terms: Vec<T> = f.iter().enumerate().map(|(i, &x)| grid.weight(i) * (lo - x).exp()).collect();
    tree_sum(&terms).ln() - lo
}

/// `(1/V) ∫ ∇u̇ᵀ (D²u)⁻¹ ∇u̇ · e^{θ} ρ_u dx`, with the normalized tilt.
pub fn dissipation<T: Real>(op: &FlowOperator<T>, evals: &[NodeEval<T>], udot: &[T], xi: &[T], v: T) -> T {
    let weight = tilted_density(&op.grid, evals, xi, v);
    let q: Vec<T> = (0..udot.len())
        .into_par_iter()
        .map(|i| {
            let (g, _) = op.fd_derivs(udot, i);
            dot(&g, &evals[i].inv_hess.matvec(&g)) * weight[i]
        })
        .collect();
    op.grid.integrate(&q) / v
}

/// `μ̃(t) = −∫₀ᵗ dissipation`, left Riemann sums over the accepted steps.
pub fn k_energy_trace<T: Real>(times: &[T], dissipation: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = T::zero();
    for k in 0..times.len() {
        if k > 0 {
            acc = acc - dissipation[k - 1] * (times[k] - times[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// `(osc φ, osc φ / (1 + I)^{n+1})`.
pub fn oscillation_check<T: Real>(phi: &[T], i_value: T, n: usize) -> (T, T) {
    let hi = phi.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let lo = phi.iter().fold(T::infinity(), |a, &b| a.min(b));
    let osc = if phi.is_empty() { T::zero() } else { hi - lo };
    let denom = (T::one() + i_value).powi(n as i32 + 1);
    (osc, osc / denom)
}
