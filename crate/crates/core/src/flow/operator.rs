//! Finite-difference evaluation of the reduced flow operator and its
//! linearization.
//!
//! A potential is stored as `ψ = ū − S`, where `S` is a log-sum-exp over the
//! vertices of `2Δ` and `2·(Δ ∩ ℤʳ)`. Unlike the vertex-only reference `u₀`,
//! `S` has Hessian decay matching smooth metrics near the box faces, so the
//! differenced part stays small relative to the exact part. Derivatives of
//! `S` and `u₀` are exact; derivatives of `ψ` are central differences, the
//! mixed ones taken along one diagonal per axis pair: `∂²ψ/∂x_k∂x_l` is
//! `±(D_{k±l} − D_k − D_l)/2` with `D_d` the second difference along `d`, and
//! the diagonal `e_k − sign(∂²S/∂x_k∂x_l)·e_l`. Near a wall of the fan of
//! `2Δ`, where `D²S` is nearly singular along the wall and `ψ` nearly constant
//! along it, this keeps the differenced curvature in that direction exact.
//!
//! The flow is solved at interior nodes only. Boundary nodes carry the
//! closure `ψ_b = ψ_{p(b)}`, where `p(b)` is reached by stepping inward along
//! the admissible lattice direction of least curvature of `S` (repeated until
//! interior). Far out `ψ` is asymptotically constant along exactly those
//! directions (the rays of the fan of `2Δ`), whereas a plain Neumann
//! condition would freeze its slope across any wall meeting the box
//! obliquely. Boundary nodes take their derivatives from `p(b)` (falling back
//! to those of `S` alone when that mix is not convex); they enter only the
//! quadratures, with weights of the order of the truncation error.

use rayon::prelude::*;

use super::banded::BandMatrix;
use super::grid::Grid;
use super::reference::{Jet, ReferencePotential};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::polytope::Polytope;
use crate::quadrature::WeightedPolytope;
use crate::real::Real;

/// Largest number of lattice points of `Δ` used in the split potential.
const MAX_SPLIT_POINTS: usize = 4096;

/// Grid, potentials and root data shared by every step.
#[derive(Clone, Debug)]
pub struct FlowOperator<T> {
    pub grid: Grid<T>,
    /// `2Δ`, the closure of the gradient image.
    pub reference_domain: Polytope<T>,
    /// The vertex log-sum-exp `u₀`.
    pub reference: ReferencePotential<T>,
    pub ref_jets: Vec<Jet<T>>,
    /// The split potential `S`.
    pub split: ReferencePotential<T>,
    pub split_jets: Vec<Jet<T>>,
    /// Closure target `p(b)` per node (the node itself when interior).
    pub closure: Vec<usize>,
    /// Bit `pair_index(k, l)` set: the mixed difference uses `e_k − e_l`.
    pub anti_diagonal: Vec<u8>,
    /// Restricted roots `c_α`.
    pub roots: Vec<Vec<T>>,
    pub shift: Vec<T>,
}

/// Derivatives of a potential at a node and the derived quantities.
#[derive(Clone, Debug)]
pub struct NodeEval<T> {
    pub grad: Vec<T>,
    pub hess: Matrix<T>,
    pub inv_hess: Matrix<T>,
    pub log_det: T,
    /// `(c_α, ∇ū + s)` per root.
    pub pairings: Vec<T>,
}

impl<T: Real> NodeEval<T> {
    /// `log det D²ū + Σ log (c_α, ∇ū + s)`.
    pub fn log_density(&self) -> T {
        self.log_det + self.pairings.iter().map(|p| p.ln()).sum::<T>()
    }

    /// `det D²ū · Π (c_α, ∇ū + s)`.
    pub fn density(&self) -> T {
        self.log_density().exp()
    }
}

impl<T: Real> FlowOperator<T> {
    /// Split potential over the vertices of `2Δ` and `2·(Δ ∩ ℤʳ)`.
    pub fn new(grid: Grid<T>, two_delta: Polytope<T>, roots: Vec<Vec<T>>, shift: Vec<T>) -> Result<Self> {
        let points = ReferencePotential::doubled_lattice_points(&two_delta, MAX_SPLIT_POINTS);
        Self::with_split_points(grid, two_delta, &points, roots, shift)
    }

    pub fn with_split_points(grid: Grid<T>, two_delta: Polytope<T>, points: &[Vec<T>], roots: Vec<Vec<T>>, shift: Vec<T>) -> Result<Self> {
        let r = grid.dim;
        if two_delta.dim() != r || shift.len() != r || roots.iter().any(|c| c.len() != r) {
            return Err(Error::config("grid, polytope and root dimensions disagree"));
        }
        let reference = ReferencePotential::new(&two_delta)?;
        let split = ReferencePotential::from_points(&two_delta, points)?;
        let jets = |p: &ReferencePotential<T>| -> Vec<Jet<T>> { (0..grid.len()).into_par_iter().map(|i| p.jet(&grid.coords(i))).collect() };
        let ref_jets = jets(&reference);
        let split_jets = jets(&split);
        let anti_diagonal = split_jets
            .iter()
            .map(|j| {
                let mut bits = 0u8;
                for k in 0..r {
                    for l in k + 1..r {
                        if j.hess[(k, l)] > T::zero() {
                            bits |= 1 << pair_index(k, l);
                        }
                    }
                }
                bits
            })
            .collect();
        let closure = closure_targets(&grid, &split_jets);
        Ok(Self { grid, reference_domain: two_delta, reference, ref_jets, split, split_jets, closure, anti_diagonal, roots, shift })
    }

    /// Operator for the weighted polytope `(2Δ, c_α, s)` of the soliton problem.
    pub fn from_weighted(grid: Grid<T>, wp: &WeightedPolytope<T>) -> Result<Self> {
        Self::new(grid, wp.domain.clone(), wp.weight_roots.clone(), wp.shift.clone())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn u0_values(&self) -> Vec<T> {
        self.ref_jets.iter().map(|j| j.value).collect()
    }

    /// `ū = S + ψ`.
    pub fn potential_values(&self, psi: &[T]) -> Vec<T> {
        self.split_jets.iter().zip(psi).map(|(j, &p)| j.value + p).collect()
    }

    /// `φ = ū − u₀`.
    pub fn phi_values(&self, psi: &[T]) -> Vec<T> {
        (0..psi.len()).map(|i| self.split_jets[i].value + psi[i] - self.ref_jets[i].value).collect()
    }

    /// `ψ` for a potential given by node values `ū`.
    pub fn psi_from_potential(&self, u: &[T]) -> Vec<T> {
        self.split_jets.iter().zip(u).map(|(j, &v)| v - j.value).collect()
    }

    fn flow_error(&self, idx: usize, reason: String) -> Error {
        let m = self.grid.multi_index(idx);
        Error::Flow { node: m[..self.grid.dim].to_vec(), reason }
    }

    /// Closure target of a node (the node itself when interior).
    pub fn project(&self, idx: usize) -> usize {
        self.closure[idx]
    }

    /// Imposes the closure on the boundary nodes of `f`.
    pub fn apply_closure(&self, f: &mut [T]) {
        for i in 0..f.len() {
            let p = self.project(i);
            if p != i {
                f[i] = f[p];
            }
        }
    }

    fn anti(&self, idx: usize, k: usize, l: usize) -> bool {
        self.anti_diagonal[idx] & (1 << pair_index(k, l)) != 0
    }

    /// Central-difference gradient and Hessian of a node field, taken at the
    /// nearest interior node.
    pub fn fd_derivs(&self, f: &[T], idx: usize) -> (Vec<T>, Matrix<T>) {
        let g = &self.grid;
        let idx = self.project(idx);
        let r = g.dim;
        let h = g.spacing;
        let two = T::lit(2.0);
        let mut grad = vec![T::zero(); r];
        let mut hess = Matrix::zeros(r, r);
        let f0 = f[idx];
        for k in 0..r {
            let sk = g.stride(k);
            let (fp, fm) = (f[idx + sk], f[idx - sk]);
            grad[k] = (fp - fm) / (two * h);
            hess[(k, k)] = (fp - two * f0 + fm) / (h * h);
        }
        for k in 0..r {
            for l in k + 1..r {
                let (sk, sl) = (g.stride(k), g.stride(l));
                let (plus, minus) = if self.anti(idx, k, l) { (idx + sk - sl, idx + sl - sk) } else { (idx + sk + sl, idx - sk - sl) };
                let dd = (f[plus] - two * f0 + f[minus]) / (h * h);
                let m = (dd - hess[(k, k)] - hess[(l, l)]) / two;
                let m = if self.anti(idx, k, l) { -m } else { m };
                hess[(k, l)] = m;
                hess[(l, k)] = m;
            }
        }
        (grad, hess)
    }

    /// Derivatives of `ū = S + ψ` at `idx`, with convexity and chamber checks.
    pub fn eval_node(&self, psi: &[T], idx: usize) -> Result<NodeEval<T>> {
        self.eval_blend(T::one(), psi, idx)
    }

    /// Derivatives of `(1 − s) u₀ + s (S + ψ)` at `idx`. The Hessian is a
    /// convex combination, so it stays definite whenever both ends are.
    pub fn eval_blend(&self, s: T, psi: &[T], idx: usize) -> Result<NodeEval<T>> {
        let (gp, hp) = self.fd_derivs(psi, idx);
        let res = self.eval_with(s, &gp, &hp, idx);
        if res.is_err() && self.grid.on_boundary(idx) {
            let r = self.dim();
            return self.eval_with(s, &vec![T::zero(); r], &Matrix::zeros(r, r), idx);
        }
        res
    }

    fn eval_with(&self, s: T, gp: &[T], hp: &Matrix<T>, idx: usize) -> Result<NodeEval<T>> {
        let (a, b) = (&self.ref_jets[idx], &self.split_jets[idx]);
        let ms = T::one() - s;
        let r = self.dim();
        let grad: Vec<T> = (0..r).map(|k| ms * a.grad[k] + s * (b.grad[k] + gp[k])).collect();
        let mut hess = Matrix::zeros(r, r);
        for k in 0..r {
            for l in 0..r {
                hess[(k, l)] = ms * a.hess[(k, l)] + s * (b.hess[(k, l)] + hp[(k, l)]);
            }
        }
        let chol = hess.cholesky().ok_or_else(|| self.flow_error(idx, "Hessian is not positive-definite".to_string()))?;
        let log_det = (0..r).map(|i| chol[(i, i)].ln()).sum::<T>() * T::lit(2.0);
        let inv_hess = hess.inverse().ok_or_else(|| self.flow_error(idx, "Hessian is singular".to_string()))?;
        let shifted: Vec<T> = grad.iter().zip(&self.shift).map(|(&a, &b)| a + b).collect();
        let mut pairings = Vec::with_capacity(self.roots.len());
        for c in &self.roots {
            let p = dot(c, &shifted);
            if !(p > T::zero()) {
                return Err(self.flow_error(idx, format!("root pairing {p:e} ≤ 0: gradient left the chamber")));
            }
            pairings.push(p);
        }
        Ok(NodeEval { grad, hess, inv_hess, log_det, pairings })
    }

    pub fn eval_all_blend(&self, s: T, psi: &[T]) -> Result<Vec<NodeEval<T>>> {
        (0..self.len()).into_par_iter().map(|i| self.eval_blend(s, psi, i)).collect()
    }

    /// Evaluations of the reference `u₀` itself.
    pub fn eval_reference(&self) -> Result<Vec<NodeEval<T>>> {
        self.eval_all_blend(T::zero(), &vec![T::zero(); self.len()])
    }

    pub fn eval_all(&self, psi: &[T]) -> Result<Vec<NodeEval<T>>> {
        (0..self.len()).into_par_iter().map(|i| self.eval_node(psi, i)).collect()
    }

    /// `log det D²ū + ū + Σ log (c_α, ∇ū + s) + (w, ∇ū)` at every node.
    pub fn rhs_from(&self, psi: &[T], evals: &[NodeEval<T>], w: Option<&[T]>) -> Vec<T> {
        evals
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let transport = w.map_or(T::zero(), |w| dot(w, &e.grad));
                e.log_density() + self.split_jets[i].value + psi[i] + transport
            })
            .collect()
    }

    pub fn rhs(&self, psi: &[T], w: Option<&[T]>) -> Result<Vec<T>> {
        let evals = self.eval_all(psi)?;
        Ok(self.rhs_from(psi, &evals, w))
    }

    /// Half-bandwidth of the stencil in flat indices.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim()).map(|k| self.grid.stride(k)).sum()
    }

    /// `I − dt·J` on interior rows, with `J` the linearization of the
    /// operator without the zeroth-order `ū` term:
    /// `J δ = tr((D²ū)⁻¹ D²δ) + (Σ c_α/(c_α, ∇ū+s) + w, ∇δ)`, boundary
    /// neighbours folded onto their interior projections. Boundary rows are
    /// the identity.
    pub fn implicit_matrix(&self, evals: &[NodeEval<T>], w: Option<&[T]>, dt: T) -> BandMatrix<T> {
        let g = &self.grid;
        let r = g.dim;
        let h = g.spacing;
        let bw = self.bandwidth();
        let rows: Vec<Vec<(usize, T)>> = evals
            .par_iter()
            .enumerate()
            .map(|(idx, e)| {
                if g.on_boundary(idx) {
                    return vec![(idx, T::one())];
                }
                let mut b = w.map_or_else(|| vec![T::zero(); r], |w| w.to_vec());
                for (c, &p) in self.roots.iter().zip(&e.pairings) {
                    for k in 0..r {
                        b[k] = b[k] + c[k] / p;
                    }
                }
                let a = &e.inv_hess;
                let mut entries: Vec<(usize, T)> = Vec::with_capacity(1 + 2 * r + 4 * r * r);
                let mut push = |j: usize, v: T| entries.push((self.project(j), v));
                push(idx, T::one());
                let two = T::lit(2.0);
                let hh = h * h;
                // tr(A D²δ) with D²δ as in `fd_derivs`: the mixed entry
                // ±(D_diag − D_k − D_l)/2 moves ∓A_kl onto D_k and D_l.
                let mut axis = vec![T::zero(); r];
                for k in 0..r {
                    axis[k] = a[(k, k)];
                }
                for k in 0..r {
                    for l in k + 1..r {
                        let (sk, sl) = (g.stride(k), g.stride(l));
                        let anti = self.anti(idx, k, l);
                        let c = if anti { -a[(k, l)] } else { a[(k, l)] };
                        axis[k] = axis[k] - c;
                        axis[l] = axis[l] - c;
                        let (plus, minus) = if anti { (idx + sk - sl, idx + sl - sk) } else { (idx + sk + sl, idx - sk - sl) };
                        push(idx, dt * two * c / hh);
                        push(plus, -dt * c / hh);
                        push(minus, -dt * c / hh);
                    }
                }
                for k in 0..r {
                    let sk = g.stride(k);
                    let diff = axis[k] / hh;
                    let adv = b[k] / (two * h);
                    push(idx, dt * two * diff);
                    push(idx + sk, -dt * (diff + adv));
                    push(idx - sk, -dt * (diff - adv));
                }
                entries
            })
            .collect();
        let mut m = BandMatrix::zeros(self.len(), bw, bw);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row {
                m.add(i, j, v);
            }
        }
        m
    }
}

/// Interior node reached from each boundary node by inward steps along the
/// admissible direction `d ∈ {−1, 0, 1}ʳ` minimizing `dᵀ D²S d / |d|²`.
fn closure_targets<T: Real>(grid: &Grid<T>, jets: &[Jet<T>]) -> Vec<usize> {
    let r = grid.dim;
    let last = grid.points_per_axis - 1;
    let step = |idx: usize| -> usize {
        let m = grid.multi_index(idx);
        let mut best: Option<(T, [isize; 3])> = None;
        let count = 3usize.pow(r as u32);
        'dirs: for code in 0..count {
            let mut d = [0isize; 3];
            let mut c = code;
            for a in 0..r {
                d[a] = (c % 3) as isize - 1;
                c /= 3;
                let need = if m[a] == 0 {
                    1
                } else if m[a] == last {
                    -1
                } else {
                    0
                };
                if need != 0 && d[a] != need {
                    continue 'dirs;
                }
            }
            let len2 = d[..r].iter().map(|&x| x * x).sum::<isize>();
            if len2 == 0 {
                continue;
            }
            let mut q = T::zero();
            for a in 0..r {
                for b in 0..r {
                    q = q + T::lit((d[a] * d[b]) as f64) * jets[idx].hess[(a, b)];
                }
            }
            let q = q / T::lit(len2 as f64);
            if best.as_ref().is_none_or(|(bq, _)| q < *bq) {
                best = Some((q, d));
            }
        }
        let d = best.expect("an inward direction exists").1;
        let target: Vec<usize> = (0..r).map(|a| (m[a] as isize + d[a]) as usize).collect();
        grid.flat_index(&target)
    };
    (0..grid.len())
        .map(|idx| {
            let mut cur = idx;
            while grid.on_boundary(cur) {
                cur = step(cur);
            }
            cur
        })
        .collect()
}

/// Bit position of the axis pair `k < l`.
fn pair_index(k: usize, l: usize) -> usize {
    match (k, l) {
        (0, 1) => 0,
        (0, 2) => 1,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp1_operator(n: usize) -> FlowOperator<f64> {
        let two_delta = Polytope::from_vertices(&[vec![-2.0], vec![2.0]]).unwrap();
        let grid = Grid::new(1, 4.0, n).unwrap();
        FlowOperator::with_split_points(grid, two_delta, &[], vec![], vec![0.0]).unwrap()
    }

    #[test]
    fn rhs_at_reference_matches_closed_form() {
        // u₀ = log(e^{-2x} + e^{2x}): log u₀'' + u₀ at x = 0 is log 4 + log 2.
        let op = cp1_operator(81);
        let phi = vec![0.0; op.len()];
        let rhs = op.rhs(&phi, None).unwrap();
        let mid = op.len() / 2;
        assert!((rhs[mid] - (4f64.ln() + 2f64.ln())).abs() < 1e-12);
        for (i, v) in rhs.iter().enumerate() {
            let x = op.grid.coords(i)[0];
            let sech = 1.0 / (2.0 * x).cosh();
            let closed = (4.0 * sech * sech).ln() + ((-2.0 * x).exp() + (2.0 * x).exp()).ln();
            assert!((v - closed).abs() < 1e-9);
        }
    }

    #[test]
    fn fd_is_second_order() {
        let mut errs = Vec::new();
        for n in [41, 81] {
            let op = cp1_operator(n);
            let phi: Vec<f64> = (0..op.len()).map(|i| (0.5 * op.grid.coords(i)[0]).sin()).collect();
            let mut err: f64 = 0.0;
            for i in 1..op.len() - 1 {
                let x = op.grid.coords(i)[0];
                let (_, hs) = op.fd_derivs(&phi, i);
                err = err.max((hs[(0, 0)] + 0.25 * (0.5 * x).sin()).abs());
            }
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }

    #[test]
    fn split_potential_includes_lattice_points() {
        let two_delta = Polytope::from_vertices(&[vec![-2.0], vec![2.0]]).unwrap();
        let grid = Grid::new(1, 3.0, 31).unwrap();
        let op = FlowOperator::new(grid, two_delta, vec![], vec![0.0]).unwrap();
        assert_eq!(op.split.vertices.len(), 3);
        for i in 0..op.len() {
            let x: f64 = op.grid.coords(i)[0];
            let s = ((-2.0 * x).exp() + 1.0 + (2.0 * x).exp()).ln();
            assert!((op.split_jets[i].value - s).abs() < 1e-12);
        }
        // Interior: the blend at s = 0 is u₀ regardless of ψ.
        let psi: Vec<f64> = (0..op.len()).map(|i| op.grid.coords(i)[0].sin()).collect();
        let e = op.eval_blend(0.0, &psi, 15).unwrap();
        assert!((e.hess[(0, 0)] - op.ref_jets[15].hess[(0, 0)]).abs() < 1e-14);
    }

    #[test]
    fn one_root_adds_log_pairing() {
        let two_delta = Polytope::from_vertices(&[vec![-2.0], vec![2.0]]).unwrap();
        let grid = Grid::new(1, 3.0, 31).unwrap();
        let toric = FlowOperator::new(grid.clone(), two_delta.clone(), vec![], vec![3.0]).unwrap();
        let horo = FlowOperator::new(grid, two_delta, vec![vec![1.0]], vec![3.0]).unwrap();
        let phi = vec![0.0; toric.len()];
        let a = toric.rhs(&phi, None).unwrap();
        let b = horo.rhs(&phi, None).unwrap();
        let w0 = horo.rhs(&phi, Some(&[0.0])).unwrap();
        for i in 0..a.len() {
            let kappa: f64 = toric.split_jets[i].grad[0] + 3.0;
            assert!((b[i] - a[i] - kappa.ln()).abs() < 1e-12);
            assert_eq!(w0[i], b[i]);
        }
    }

    #[test]
    fn implicit_matrix_annihilates_constants() {
        let two_delta = Polytope::from_vertices(&[vec![-2.0, 0.0], vec![0.0, -2.0], vec![4.0, -2.0], vec![-2.0, 4.0]]).unwrap();
        let grid = Grid::new(2, 3.0, 9).unwrap();
        let op = FlowOperator::new(grid, two_delta, vec![], vec![0.0, 0.0]).unwrap();
        let phi = vec![0.0; op.len()];
        let evals = op.eval_all(&phi).unwrap();
        let m = op.implicit_matrix(&evals, Some(&[0.3, -0.1]), 0.1);
        for i in 0..op.len() {
            let s: f64 = (0..op.len()).map(|j| m.get(i, j)).sum();
            let scale: f64 = (0..op.len()).map(|j| m.get(i, j).abs()).sum();
            assert!((s - 1.0).abs() < 1e-12 * scale, "row {i}: {s}");
        }
    }

    fn koiso_operator(n: usize) -> FlowOperator<f64> {
        let two_delta = Polytope::from_vertices(&[vec![-2.0, 0.0], vec![0.0, -2.0], vec![4.0, -2.0], vec![-2.0, 4.0]]).unwrap();
        FlowOperator::new(Grid::new(2, 4.0, n).unwrap(), two_delta, vec![], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn mixed_difference_is_exact_along_the_chosen_diagonal() {
        let op = koiso_operator(33);
        let f: Vec<f64> = (0..op.len())
            .map(|i| {
                let x = op.grid.coords(i);
                (0.7 * (x[0] - x[1])).sin()
            })
            .collect();
        let g: Vec<f64> = (0..op.len())
            .map(|i| {
                let x = op.grid.coords(i);
                (0.7 * (x[0] + x[1])).sin()
            })
            .collect();
        let mut checked = [0, 0];
        for i in 0..op.len() {
            if op.grid.on_boundary(i) {
                continue;
            }
            let (field, d) = if op.anti(i, 0, 1) { (&g, [1.0, -1.0]) } else { (&f, [1.0, 1.0]) };
            let (_, hs) = op.fd_derivs(field, i);
            let q = d[0] * d[0] * hs[(0, 0)] + 2.0 * d[0] * d[1] * hs[(0, 1)] + d[1] * d[1] * hs[(1, 1)];
            assert!(q.abs() < 1e-10, "node {i}: {q}");
            checked[op.anti(i, 0, 1) as usize] += 1;
        }
        assert!(checked[0] > 0, "{checked:?}");
    }

    #[test]
    fn implicit_matrix_matches_linearized_operator() {
        let op = koiso_operator(17);
        let psi = vec![0.0; op.len()];
        let evals = op.eval_all(&psi).unwrap();
        let w = [0.3, -0.1];
        let dt = 0.07;
        let m = op.implicit_matrix(&evals, Some(&w), dt);
        let mut delta: Vec<f64> = (0..op.len()).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.01).collect();
        op.apply_closure(&mut delta);
        for i in 0..op.len() {
            if op.grid.on_boundary(i) {
                continue;
            }
            let lhs: f64 = (0..op.len()).map(|j| m.get(i, j) * delta[j]).sum();
            let (gd, hd) = op.fd_derivs(&delta, i);
            let a = &evals[i].inv_hess;
            let tr = a[(0, 0)] * hd[(0, 0)] + 2.0 * a[(0, 1)] * hd[(0, 1)] + a[(1, 1)] * hd[(1, 1)];
            let expect = delta[i] - dt * (tr + w[0] * gd[0] + w[1] * gd[1]);
            assert!((lhs - expect).abs() < 1e-9 * (1.0 + expect.abs()), "row {i}: {lhs} vs {expect}");
        }
    }
}
