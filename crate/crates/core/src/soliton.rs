//! The soliton vector field: the tilt `ξ` at which the DH-weighted tilted
//! barycenter of `2Δ` vanishes.
//!
//! `ξ` minimizes the strictly convex log-partition `L(ξ) = log ∫ e^{(ξ,p)} π`,
//! whose gradient is the tilted barycenter and whose Hessian is the tilted
//! covariance; Newton with backtracking finds it.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::polytope::Polytope;
use crate::quadrature::{tilted_moments, TiltOptions, WeightedPolytope};
use crate::real::Real;
use crate::root_datum::DerivedRoots;

#[derive(Clone, Debug, PartialEq)]
pub struct SolitonReport<T> {
    pub xi: Vec<T>,
    /// Norm of the normalized tilted barycenter at `xi`.
    pub residual_norm: T,
    pub newton_iters: usize,
    /// `log ∫ e^{(ξ,p)} π(p + s) dp` at `xi`.
    pub objective_value: T,
    /// Smallest eigenvalue of the tilted covariance at `xi`.
    pub hessian_min_eig: T,
}

/// The weighted polytope `2Δ` with weight `Π (c_α, p + s)`.
pub fn soliton_problem<T: Real>(delta: &Polytope<T>, roots: &DerivedRoots<T>) -> Result<WeightedPolytope<T>> {
    WeightedPolytope::new(delta.scaled(T::lit(2.0))?, roots.restricted_roots.clone(), roots.shift_s.clone())
}

fn tilt_opts<T: Real>() -> TiltOptions<T> {
    TiltOptions { rel_tol: T::lit(1e-12).max(T::epsilon() * T::lit(100.0)), ..TiltOptions::default() }
}

/// Normalized tilted barycenter `∫ p e^{(ξ,p)} π / ∫ e^{(ξ,p)} π`.
pub fn futaki_residual<T: Real>(wp: &WeightedPolytope<T>, xi: &[T]) -> Result<Vec<T>> {
    Ok(tilted_moments(wp, xi, false, &tilt_opts())?.barycenter())
}

pub fn solve_xi<T: Real>(wp: &WeightedPolytope<T>, tol: T) -> Result<SolitonReport<T>> {
    let r = wp.domain.dim();
    if wp.domain.interior_margin(&vec![T::zero(); r]) <= T::zero() {
        return Err(Error::domain("0 is not interior to the soliton domain"));
    }
    let opts = tilt_opts();
    let max_iter = 100;
    let mut xi = vec![T::zero(); r];
    let mut m = tilted_moments(wp, &xi, true, &opts)?;
    let mut trace = Vec::new();
    for iter in 0..=max_iter {
        let g = m.barycenter();
        let gnorm = norm(&g);
        trace.push(gnorm);
        let h = m.covariance().expect("second moments requested");
        if gnorm <= tol {
            let (eig, _) = h.symmetric_eigen();
            return Ok(SolitonReport {
                xi,
                residual_norm: gnorm,
                newton_iters: iter,
                objective_value: m.log_mass(),
                hessian_min_eig: eig[0],
            });
        }
        let step = h.solve(&g).ok_or_else(|| Error::numerical("singular tilted covariance"))?;
        let d: Vec<T> = step.iter().map(|&x| -x).collect();
        let slope = dot(&g, &d);
        let f0 = m.log_mass();
        let mut t = T::one();
        loop {
            let trial: Vec<T> = xi.iter().zip(&d).map(|(&a, &b)| a + t * b).collect();
            let mt = tilted_moments(wp, &trial, true, &opts)?;
            // Near the optimum the decrease drops below rounding; accept a full step there.
            let flat = -slope <= T::lit(1e-20).max(T::epsilon() * f0.abs().max(T::one()));
            if mt.log_mass() <= f0 + T::lit(1e-4) * t * slope || flat {
                xi = trial;
                m = mt;
                break;
            }
            t = t * T::lit(0.5);
            if t < T::lit(1e-12) {
                return Err(Error::numerical(format!("line search failed; residual trace {trace:?}")));
            }
        }
    }
    Err(Error::numerical(format!("Newton did not converge; residual trace {trace:?}")))
}

/// Hessian of the log-partition at `xi` (the tilted covariance).
pub fn log_partition_hessian<T: Real>(wp: &WeightedPolytope<T>, xi: &[T]) -> Result<Matrix<T>> {
    Ok(tilted_moments(wp, xi, true, &tilt_opts())?.covariance().expect("second moments requested"))
}
