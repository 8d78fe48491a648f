//! Time stepping, normalization and run bookkeeping.

use std::str::FromStr;

use rayon::prelude::*;

use super::grid::{tree_sum, Grid};
use super::operator::{FlowOperator, NodeEval};
use super::path::LaggedPath;
use crate::error::{Error, Result};
use crate::functionals::{self, ReducedDensity};
use crate::linalg::{dot, norm, sub, Matrix};
use crate::quadrature::{integrate_poly, WeightedPolytope};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase2 {
    /// Plain flow in a fixed frame.
    Off,
    /// Recentered along the lagged smoothed path of integer-time minimum points.
    SmoothedPath,
    /// Modified by a fixed field `ξ` from `t = 0`.
    FixedXi,
}

impl FromStr for Phase2 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Self::Off),
            "smoothed_path" => Ok(Self::SmoothedPath),
            "fixed_xi" => Ok(Self::FixedXi),
            _ => Err(Error::config(format!("unknown phase2 mode {s:?} (off | smoothed_path | fixed_xi)"))),
        }
    }
}

impl Phase2 {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Off => "off",
            Self::SmoothedPath => "smoothed_path",
            Self::FixedXi => "fixed_xi",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    LinearlyImplicit,
    Explicit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig<T> {
    pub dt_init: T,
    pub dt_max: T,
    pub t_max: T,
    /// Convergence threshold on `sup |∂u/∂t − mean|`.
    pub tol: T,
    pub phase2: Phase2,
    /// Field for [`Phase2::FixedXi`].
    pub xi: Vec<T>,
    pub delta: T,
    /// Grow `dt` after accepted steps; otherwise `dt` stays at `dt_init`.
    pub adaptive: bool,
    pub scheme: Scheme,
    pub stop_on_convergence: bool,
    /// Largest admissible boundary-to-peak ratio of `e^{−ū}` at start.
    pub truncation_tol: T,
    /// Steps whose interior gradients leave `(1 + max_gradient_excess)·2Δ` are rejected.
    pub max_gradient_excess: T,
    /// Steps moving `φ` by more than this in sup-norm are rejected.
    pub max_update: T,
    pub max_halvings: usize,
    pub growth: T,
}

impl<T: Real> Default for FlowConfig<T> {
    fn default() -> Self {
        Self {
            dt_init: T::lit(0.01),
            dt_max: T::lit(0.25),
            t_max: T::lit(20.0),
            tol: T::lit(1e-6),
            phase2: Phase2::Off,
            xi: Vec::new(),
            delta: T::lit(0.2),
            adaptive: true,
            scheme: Scheme::LinearlyImplicit,
            stop_on_convergence: true,
            truncation_tol: T::lit(1e-4),
            max_gradient_excess: T::lit(1e-2),
            max_update: T::lit(0.5),
            max_halvings: 20,
            growth: T::lit(1.5),
        }
    }
}

/// Node values of a potential on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField<T> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
}

/// Everything needed to continue a run bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState<T> {
    pub t: T,
    pub steps: usize,
    pub rejected: usize,
    /// `ũ − S` in the recentered frame (`S` the split potential of the
    /// operator), normalized so `∫ e^{−ũ} = V`.
    pub psi: Vec<T>,
    pub dt: T,
    /// Integer-time minimum points `x_0, x_1, …`.
    pub samples: Vec<Vec<T>>,
    pub k_energy: T,
    /// Dissipation at the current state (used by the next left Riemann step).
    pub dissipation: T,
    /// `(t, x_t)` over the trailing unit time window.
    pub window: Vec<(T, Vec<T>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow<T> {
    pub t: T,
    pub c_t: T,
    pub m_t: T,
    pub x_t: Vec<T>,
    pub volume: T,
    pub k_energy: T,
    pub dissipation: T,
    pub sup_dudt: T,
    pub osc: T,
    pub i_value: T,
    pub sandwich_gap: T,
    /// `‖φ̄_t‖_∞`.
    pub phi_sup: T,
    /// `max_{t−1 ≤ t′ ≤ t} |x_t − x_t′|`.
    pub drift: T,
    /// `|x′_t − x_t|` for the lagged smoothed path.
    pub path_gap: T,
    pub osc_ratio: T,
    /// Largest `gauge_{2Δ}(∇ū) − 1` over interior nodes.
    pub grad_excess: T,
    /// `F̃(φ̄_t)` at integer times, except under the smoothed path.
    pub f_tilde: Option<T>,
}

#[derive(Clone, Debug)]
pub struct FlowResult<T> {
    pub converged: bool,
    pub rows: Vec<TraceRow<T>>,
    pub state: FlowState<T>,
    pub potential: PotentialField<T>,
}

/// Normalization constant `c = log V − log ∫ e^{−u} dx`.
pub fn normalize_c<T: Real>(grid: &Grid<T>, u: &[T], dh_mass: T) -> T {
    dh_mass.ln() - functionals::log_integral_exp_neg(grid, u)
}

/// Weighted mean of `f` under `e^{−u}`.
fn gibbs_mean<T: Real>(grid: &Grid<T>, u: &[T], f: &[T]) -> T {
    let lo = u.iter().fold(T::infinity(), |a, &b| a.min(b));
    let w: Vec<T> = u.iter().enumerate().map(|(i, &x)| grid.weight(i) * (lo - x).exp()).collect();
    let wf: Vec<T> = w.iter().zip(f).map(|(&a, &b)| a * b).collect();
    tree_sum(&wf) / tree_sum(&w)
}

/// Point where a lexicographically first grid argmin of `u` is refined by one
/// Newton step on the local quadratic model (clipped to one cell).
pub fn min_point<T: Real>(op: &FlowOperator<T>, psi: &[T]) -> Result<(Vec<T>, T)> {
    let u: Vec<T> = op.potential_values(psi);
    let mut best = 0;
    for (i, &v) in u.iter().enumerate() {
        if v < u[best] {
            best = i;
        }
    }
    if op.grid.on_boundary(best) {
        let m = op.grid.multi_index(best);
        return Err(Error::Flow { node: m[..op.dim()].to_vec(), reason: "minimum on the box boundary: enlarge half_width".to_string() });
    }
    let e = op.eval_node(psi, best)?;
    let mut step: Vec<T> = e.inv_hess.matvec(&e.grad).into_iter().map(|x| -x).collect();
    let big = step.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    if big > op.grid.spacing {
        let s = op.grid.spacing / big;
        step.iter_mut().for_each(|x| *x = *x * s);
    }
    let hs = e.hess.matvec(&step);
    let m = u[best] + dot(&e.grad, &step) + T::lit(0.5) * dot(&step, &hs);
    let x = op.grid.coords(best).iter().zip(&step).map(|(&a, &b)| a + b).collect();
    Ok((x, m))
}

/// `sup |log ρ_u + (ξ, ∇u) + u − μ|` over interior nodes, `μ` the `e^{−u}`-weighted mean.
pub fn soliton_residual<T: Real>(op: &FlowOperator<T>, psi: &[T], xi: &[T]) -> Result<T> {
    let evals = op.eval_all(psi)?;
    let e = op.rhs_from(psi, &evals, Some(xi));
    let u: Vec<T> = op.potential_values(psi);
    let mu = gibbs_mean(&op.grid, &u, &e);
    Ok((0..e.len()).filter(|&i| !op.grid.on_boundary(i)).fold(T::zero(), |a, i| a.max((e[i] - mu).abs())))
}

/// Least-squares `ξ` (and constant) making `log ρ_u + u + (ξ, ∇u)` constant
/// over the interior nodes, weighted by `e^{−u}`.
pub fn fit_xi<T: Real>(op: &FlowOperator<T>, psi: &[T]) -> Result<Vec<T>> {
    let evals = op.eval_all(psi)?;
    let e0 = op.rhs_from(psi, &evals, None);
    let u: Vec<T> = op.potential_values(psi);
    let lo = u.iter().fold(T::infinity(), |a, &b| a.min(b));
    let r = op.dim();
    let k = r + 1;
    let mut ata = Matrix::zeros(k, k);
    let mut atb = vec![T::zero(); k];
    for (i, ev) in evals.iter().enumerate().filter(|(i, _)| !op.grid.on_boundary(*i)) {
        let w = op.grid.weight(i) * (lo - u[i]).exp();
        let mut row = ev.grad.clone();
        row.push(-T::one());
        for a in 0..k {
            atb[a] = atb[a] - w * row[a] * e0[i];
            for b in 0..k {
                ata[(a, b)] = ata[(a, b)] + w * row[a] * row[b];
            }
        }
    }
    let sol = ata.solve(&atb).ok_or_else(|| Error::numerical("ξ fit normal equations are singular"))?;
    Ok(sol[..r].to_vec())
}

/// A running flow: operator, configuration and mutable state.
pub struct Flow<T> {
    pub op: FlowOperator<T>,
    pub config: FlowConfig<T>,
    pub dh_mass: T,
    pub manifold_dim: usize,
    pub state: FlowState<T>,
    rho0: ReducedDensity<T>,
    evals: Vec<NodeEval<T>>,
    path: LaggedPath<T>,
    /// Reason of the most recent rejected step attempt.
    pub last_rejection: Option<String>,
}

impl<T: Real> Flow<T> {
    /// Starts from `S + ψ₀` (default `ψ₀ = 0`).
    pub fn new(
        op: FlowOperator<T>,
        wp: &WeightedPolytope<T>,
        manifold_dim: usize,
        config: FlowConfig<T>,
        psi0: Option<Vec<T>>,
    ) -> Result<Self> {
        let dh_mass = integrate_poly(wp);
        let mut psi = psi0.unwrap_or_else(|| vec![T::zero(); op.len()]);
        if psi.len() != op.len() {
            return Err(Error::config("initial potential does not match the grid"));
        }
        Self::check_config(&op, &config)?;
        op.apply_closure(&mut psi);
        gauge_project(&op, &mut psi, dh_mass);
        let state = FlowState {
            t: T::zero(),
            steps: 0,
            rejected: 0,
            psi,
            dt: config.dt_init,
            samples: Vec::new(),
            k_energy: T::zero(),
            dissipation: T::zero(),
            window: Vec::new(),
        };
        let mut flow = Self::assemble(op, config, dh_mass, manifold_dim, state)?;
        flow.check_truncation()?;
        let (x, _) = flow.min_point()?;
        flow.state.samples.push(x.clone());
        flow.path.push(x.clone());
        flow.state.window.push((T::zero(), x));
        let udot = flow.udot(&flow.state.psi, &flow.evals, flow.state.t);
        flow.state.dissipation = functionals::dissipation(&flow.op, &flow.evals, &udot, &flow.theta_field(), dh_mass);
        Ok(flow)
    }

    /// Continues from a saved state.
    pub fn resume(
        op: FlowOperator<T>,
        wp: &WeightedPolytope<T>,
        manifold_dim: usize,
        config: FlowConfig<T>,
        state: FlowState<T>,
    ) -> Result<Self> {
        if state.psi.len() != op.len() || state.samples.is_empty() {
            return Err(Error::config("checkpoint does not match the grid"));
        }
        Self::check_config(&op, &config)?;
        Self::assemble(op, config, integrate_poly(wp), manifold_dim, state)
    }

    fn check_config(op: &FlowOperator<T>, c: &FlowConfig<T>) -> Result<()> {
        if !(c.dt_init > T::zero()) || !(c.dt_max >= c.dt_init) {
            return Err(Error::config("need 0 < dt_init ≤ dt_max"));
        }
        if !(c.t_max >= T::zero()) || !(c.tol > T::zero()) {
            return Err(Error::config("need t_max ≥ 0 and tol > 0"));
        }
        if c.phase2 == Phase2::FixedXi && c.xi.len() != op.dim() {
            return Err(Error::config("fixed_xi mode needs ξ of the grid dimension"));
        }
        Ok(())
    }

    fn assemble(op: FlowOperator<T>, config: FlowConfig<T>, dh_mass: T, manifold_dim: usize, state: FlowState<T>) -> Result<Self> {
        let rho0 = ReducedDensity::from_evals(&op.eval_reference()?);
        let evals = op.eval_all(&state.psi)?;
        let mut path = LaggedPath::new(config.delta)?;
        for s in &state.samples {
            path.push(s.clone());
        }
        Ok(Self { op, config, dh_mass, manifold_dim, state, rho0, evals, path, last_rejection: None })
    }

    fn check_truncation(&self) -> Result<()> {
        let u = self.u_bar(&self.state.psi);
        let lo = u.iter().fold(T::infinity(), |a, &b| a.min(b));
        let lo_edge = (0..u.len()).filter(|&i| self.op.grid.on_boundary(i)).fold(T::infinity(), |a, i| a.min(u[i]));
        let ratio = (lo - lo_edge).exp();
        if ratio > self.config.truncation_tol {
            return Err(Error::config(format!(
                "boundary density e^(-u) is {ratio:.3e} of its peak (limit {:.1e}): increase half_width",
                self.config.truncation_tol.as_f64()
            )));
        }
        Ok(())
    }

    fn u_bar(&self, psi: &[T]) -> Vec<T> {
        self.op.potential_values(psi)
    }

    /// Recentering offset `x′_t` and transport field `w = dx′/dt`.
    pub fn frame(&self, t: T) -> (Vec<T>, Vec<T>) {
        let r = self.op.dim();
        match self.config.phase2 {
            Phase2::Off => (vec![T::zero(); r], vec![T::zero(); r]),
            Phase2::FixedXi => (self.config.xi.iter().map(|&x| x * t).collect(), self.config.xi.clone()),
            Phase2::SmoothedPath => {
                (self.path.value(t).unwrap_or_else(|| vec![T::zero(); r]), self.path.derivative(t).unwrap_or_else(|| vec![T::zero(); r]))
            }
        }
    }

    /// Field used for `θ` in the functionals: the flow's `w` when it is fixed.
    fn theta_field(&self) -> Vec<T> {
        match self.config.phase2 {
            Phase2::FixedXi => self.config.xi.clone(),
            _ => vec![T::zero(); self.op.dim()],
        }
    }

    /// `g = log ρ + ū + (w, ∇ū)` and its `e^{−ū}` mean.
    fn g_and_mean(&self, psi: &[T], evals: &[NodeEval<T>], t: T) -> (Vec<T>, T) {
        let (_, w) = self.frame(t);
        let mut g = self.op.rhs_from(psi, evals, Some(&w));
        // Boundary nodes move with their interior projections.
        self.op.apply_closure(&mut g);
        let mean = gibbs_mean(&self.op.grid, &self.u_bar(psi), &g);
        (g, mean)
    }

    fn udot(&self, psi: &[T], evals: &[NodeEval<T>], t: T) -> Vec<T> {
        let (g, mean) = self.g_and_mean(psi, evals, t);
        g.into_iter().map(|x| x - mean).collect()
    }

    /// `(x_t, m_t)` in original coordinates.
    pub fn min_point(&self) -> Result<(Vec<T>, T)> {
        let (y, m) = min_point(&self.op, &self.state.psi)?;
        let (xp, _) = self.frame(self.state.t);
        Ok((xp.iter().zip(&y).map(|(&a, &b)| a + b).collect(), m))
    }

    pub fn potential(&self) -> PotentialField<T> {
        PotentialField { grid: self.op.grid.clone(), values: self.u_bar(&self.state.psi) }
    }

    pub fn finished(&self) -> bool {
        self.state.t >= self.config.t_max
    }

    /// Diagnostics of the current state.
    pub fn row(&self) -> Result<TraceRow<T>> {
        let s = &self.state;
        let (g, mean) = self.g_and_mean(&s.psi, &self.evals, s.t);
        let sup_dudt = g.iter().fold(T::zero(), |a, &b| a.max((b - mean).abs()));
        let (x_t, m_t) = self.min_point()?;
        let rho = ReducedDensity::from_evals(&self.evals);
        let volume = functionals::volume(&self.op.grid, &rho)?;
        let phi = self.op.phi_values(&s.psi);
        let i_value = functionals::i_functional(&self.op.grid, &phi, &self.rho0, &rho, self.dh_mass)?;
        let (osc, osc_ratio) = functionals::oscillation_check(&phi, i_value, self.manifold_dim);
        let sandwich_gap = functionals::log_integral_exp_neg(&self.op.grid, &self.u_bar(&s.psi)) - volume.ln();
        let phi_sup = phi.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        let drift = s.window.iter().fold(T::zero(), |a, (_, x)| a.max(norm(&sub(&x_t, x))));
        let lagged = self.path.value(s.t).unwrap_or_else(|| x_t.clone());
        let path_gap = norm(&sub(&lagged, &x_t));
        // under the smoothed path ψ lives in a translating frame with no matching θ
        let f_tilde = if s.t.fract() == T::zero() && self.config.phase2 != Phase2::SmoothedPath {
            Some(functionals::f_tilde(&self.op, &s.psi, &self.theta_field(), self.dh_mass, 8)?)
        } else {
            None
        };
        Ok(TraceRow {
            t: s.t,
            c_t: -mean,
            m_t,
            x_t,
            volume,
            k_energy: s.k_energy,
            dissipation: s.dissipation,
            sup_dudt,
            osc,
            i_value,
            sandwich_gap,
            phi_sup,
            drift,
            path_gap,
            osc_ratio,
            grad_excess: self.gradient_excess(&self.evals).0,
            f_tilde,
        })
    }

    /// One accepted step (with internal rejection and halving).
    pub fn step(&mut self) -> Result<()> {
        let t = self.state.t;
        let stop = (t.floor() + T::one()).min(self.config.t_max);
        let mut dt = self.state.dt;
        let mut last_err = None;
        for _ in 0..=self.config.max_halvings {
            let mut dt_try = dt.min(stop - t);
            if stop - (t + dt_try) < dt_try * T::lit(1e-6) {
                dt_try = stop - t;
            }
            let t_new = if dt_try == stop - t { stop } else { t + dt_try };
            match self.try_step(t_new, dt_try) {
                Ok((psi, evals)) => {
                    self.accept(t_new, dt_try, psi, evals)?;
                    let next = if self.config.adaptive { (dt * self.config.growth).min(self.config.dt_max) } else { dt };
                    self.state.dt = next;
                    return Ok(());
                }
                Err(e) => {
                    self.state.rejected += 1;
                    self.last_rejection = Some(e.to_string());
                    last_err = Some(e);
                    dt = dt * T::lit(0.5);
                }
            }
        }
        Err(last_err.unwrap_or_else(|| Error::numerical("step failed")))
    }

    fn try_step(&self, t_new: T, dt: T) -> Result<(Vec<T>, Vec<NodeEval<T>>)> {
        let psi = &self.state.psi;
        let (g, mean) = self.g_and_mean(psi, &self.evals, t_new);
        let rhs: Vec<T> = g.iter().map(|&x| dt * (x - mean)).collect();
        let delta = match self.config.scheme {
            Scheme::Explicit => rhs,
            Scheme::LinearlyImplicit => {
                let (_, w) = self.frame(t_new);
                self.op.implicit_matrix(&self.evals, Some(&w), dt).factor()?.solve(&rhs)
            }
        };
        let big = delta.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        if !(big <= self.config.max_update) {
            return Err(Error::numerical(format!("update {big:?} exceeds max_update")));
        }
        let mut next: Vec<T> = psi.iter().zip(&delta).map(|(&a, &b)| a + b).collect();
        self.op.apply_closure(&mut next);
        gauge_project(&self.op, &mut next, self.dh_mass);
        let evals = self.op.eval_all(&next)?;
        self.check_gradient_range(&evals)?;
        Ok((next, evals))
    }

    /// Largest `gauge_{2Δ}(∇ū) − 1` over interior nodes, with its node.
    pub fn gradient_excess(&self, evals: &[NodeEval<T>]) -> (T, usize) {
        let domain = &self.op.reference_domain;
        let grid = &self.op.grid;
        (0..evals.len())
            .into_par_iter()
            .filter(|&i| !grid.on_boundary(i))
            .map(|i| (domain.gauge(&evals[i].grad) - T::one(), i))
            .reduce(|| (T::neg_infinity(), 0), |a, b| if b.0 > a.0 { b } else { a })
    }

    /// Rejects states whose interior gradients leave `(1 + max_gradient_excess)·2Δ`.
    fn check_gradient_range(&self, evals: &[NodeEval<T>]) -> Result<()> {
        let (excess, i) = self.gradient_excess(evals);
        if excess > self.config.max_gradient_excess {
            let m = self.op.grid.multi_index(i);
            return Err(Error::Flow { node: m[..self.op.dim()].to_vec(), reason: format!("gradient left 2Δ (gauge excess {excess:e})") });
        }
        Ok(())
    }

    fn accept(&mut self, t_new: T, dt: T, psi: Vec<T>, evals: Vec<NodeEval<T>>) -> Result<()> {
        let s = &mut self.state;
        s.k_energy = s.k_energy - s.dissipation * dt;
        s.t = t_new;
        s.steps += 1;
        s.psi = psi;
        self.evals = evals;
        let (x, _) = self.min_point()?;
        let udot = self.udot(&self.state.psi, &self.evals, t_new);
        self.state.dissipation = functionals::dissipation(&self.op, &self.evals, &udot, &self.theta_field(), self.dh_mass);
        let s = &mut self.state;
        if t_new.fract() == T::zero() {
            s.samples.push(x.clone());
            self.path.push(x.clone());
        }
        s.window.push((t_new, x));
        s.window.retain(|(tw, _)| *tw >= t_new - T::one());
        Ok(())
    }

    /// Steps until `t_max` or convergence, calling `observe` on each row
    /// (including the initial one).
    pub fn run(mut self, mut observe: impl FnMut(&Self, &TraceRow<T>) -> Result<()>) -> Result<FlowResult<T>> {
        let mut rows = Vec::new();
        let first = self.row()?;
        observe(&self, &first)?;
        let mut converged = first.sup_dudt < self.config.tol;
        rows.push(first);
        while !self.finished() && !(converged && self.config.stop_on_convergence) {
            self.step()?;
            let row = self.row()?;
            converged = row.sup_dudt < self.config.tol;
            observe(&self, &row)?;
            rows.push(row);
        }
        let potential = self.potential();
        Ok(FlowResult { converged, rows, state: self.state, potential })
    }
}

/// Shifts `φ` so that `∫ e^{−(u₀ + φ)} dx = V`.
pub fn gauge_project<T: Real>(op: &FlowOperator<T>, psi: &mut [T], dh_mass: T) {
    let u = op.potential_values(psi);
    let kappa = functionals::log_integral_exp_neg(&op.grid, &u) - dh_mass.ln();
    psi.iter_mut().for_each(|p| *p = *p + kappa);
}

/// Reduced potential `u₀(x) = log Σ_v e^{(v, x)}` sampled on a grid.
pub fn reference_potential<T: Real>(op: &FlowOperator<T>) -> PotentialField<T> {
    PotentialField { grid: op.grid.clone(), values: op.u0_values() }
}
