//! Convex polytopes of dimension r ≤ 3 with both vertex and halfspace
//! descriptions, the reflexive dual, reflectivity checks, and the minimum
//! volume enclosing ellipsoid.
//!
//! Hulls are computed by brute-force facet enumeration over r-subsets of the
//! input points, which is plenty for the handful of vertices these polytopes
//! carry.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub, Matrix};
use crate::real::Real;
use crate::root_datum::{DerivedRoots, RootDatum};

/// `(normal, y) ≤ offset`, with `normal` of unit Euclidean length.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace<T> {
    pub normal: Vec<T>,
    pub offset: T,
}

impl<T: Real> Halfspace<T> {
    /// `offset − (normal, y)`: nonnegative inside, the Euclidean distance to the hyperplane.
    pub fn slack(&self, y: &[T]) -> T {
        self.offset - dot(&self.normal, y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polytope<T> {
    /// Extreme points; counter-clockwise when r = 2.
    pub vertices: Vec<Vec<T>>,
    pub halfspaces: Vec<Halfspace<T>>,
}

/// Geometric tolerance scaled to the size of the data.
pub(crate) fn geom_tol<T: Real>(scale: T) -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(1e4)) * scale.max(T::one())
}

/// Unit normal of the hyperplane through `pts` (exactly r points in ℝʳ), if
/// they are affinely independent.
fn hyperplane_normal<T: Real>(pts: &[&Vec<T>], tol: T) -> Option<Vec<T>> {
    let r = pts[0].len();
    let n = match r {
        1 => vec![T::one()],
        2 => {
            let d = sub(pts[1], pts[0]);
            vec![-d[1], d[0]]
        }
        3 => {
            let a = sub(pts[1], pts[0]);
            let b = sub(pts[2], pts[0]);
            vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
        }
        _ => return None,
    };
    let len = norm(&n);
    if len <= tol * tol.max(T::lit(1e-6)) {
        return None;
    }
    Some(n.iter().map(|&x| x / len).collect())
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

impl<T: Real> Polytope<T> {
    /// Convex hull of `points` in ℝʳ, r ∈ {1, 2, 3}.
    pub fn from_vertices(points: &[Vec<T>]) -> Result<Self> {
        let r = points.first().map(|p| p.len()).unwrap_or(0);
        if r == 0 || r > 3 {
            return Err(Error::domain(format!("polytope dimension must be 1, 2 or 3 (got {r})")));
        }
        if points.iter().any(|p| p.len() != r) {
            return Err(Error::domain("points of mixed dimension"));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::domain("non-finite coordinate"));
        }
        let scale = points.iter().flatten().fold(T::zero(), |m, &x| m.max(x.abs()));
        let tol = geom_tol(scale);
        // near-duplicates span ill-conditioned planes
        let mut unique: Vec<Vec<T>> = Vec::with_capacity(points.len());
        for p in points {
            if !unique.iter().any(|q| q.iter().zip(p).all(|(&a, &b)| (a - b).abs() <= tol)) {
                unique.push(p.clone());
            }
        }
        let points = &unique[..];

        let mut halfspaces: Vec<Halfspace<T>> = Vec::new();
        for_each_subset(points.len(), r, &mut |idx| {
            let pts: Vec<&Vec<T>> = idx.iter().map(|&i| &points[i]).collect();
            let Some(n) = hyperplane_normal(&pts, tol) else { return };
            let off = dot(&n, pts[0]);
            let (mut above, mut below) = (false, false);
            for q in points {
                let v = dot(&n, q) - off;
                above |= v > tol;
                below |= v < -tol;
            }
            let h = match (above, below) {
                (false, true) => Halfspace { normal: n, offset: off },
                (true, false) => Halfspace { normal: n.iter().map(|&x| -x).collect(), offset: -off },
                _ => return,
            };
            let dup = halfspaces
                .iter()
                .any(|g| (g.offset - h.offset).abs() <= tol && g.normal.iter().zip(&h.normal).all(|(&a, &b)| (a - b).abs() <= tol.sqrt()));
            if !dup {
                halfspaces.push(h);
            }
        });
        if halfspaces.len() < r + 1 {
            return Err(Error::domain("points do not span a full-dimensional polytope"));
        }

        // A point is extreme iff the normals of the facets tight at it have rank r.
        let mut vertices: Vec<Vec<T>> = Vec::new();
        for p in points {
            let tight: Vec<Vec<T>> = halfspaces.iter().filter(|h| h.slack(p).abs() <= tol).map(|h| h.normal.clone()).collect();
            if tight.len() < r || Matrix::from_rows(&tight).rank(T::lit(1e-7)) < r {
                continue;
            }
            if !vertices.iter().any(|v| v.iter().zip(p).all(|(&a, &b)| (a - b).abs() <= tol)) {
                vertices.push(p.clone());
            }
        }
        if r == 2 {
            sort_ccw(&mut vertices);
        }
        if r == 1 {
            vertices.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        }
        Ok(Self { vertices, halfspaces })
    }

    /// Bounded intersection of halfspaces `(normal, y) ≤ offset` (normals need not be unit).
    pub fn from_halfspaces(halfspaces: &[(Vec<T>, T)]) -> Result<Self> {
        let r = halfspaces.first().map(|h| h.0.len()).unwrap_or(0);
        if r == 0 || r > 3 {
            return Err(Error::domain(format!("polytope dimension must be 1, 2 or 3 (got {r})")));
        }
        let scale = halfspaces.iter().map(|(n, b)| b.abs() / norm(n).max(T::min_positive_value())).fold(T::zero(), |m, x| m.max(x));
        let tol = geom_tol(scale);
        let mut pts = Vec::new();
        for_each_subset(halfspaces.len(), r, &mut |idx| {
            let a = Matrix::from_rows(&idx.iter().map(|&i| halfspaces[i].0.clone()).collect::<Vec<_>>());
            let b: Vec<T> = idx.iter().map(|&i| halfspaces[i].1).collect();
            let Some(lu) = a.lu() else { return };
            if lu.det().abs() <= T::lit(1e-12) {
                return;
            }
            let y = lu.solve(&b);
            if y.iter().all(|x| x.is_finite()) && halfspaces.iter().all(|(n, off)| dot(n, &y) <= *off + tol * norm(n).max(T::one())) {
                pts.push(y);
            }
        });
        if pts.is_empty() {
            return Err(Error::domain("halfspaces describe an empty or unbounded set"));
        }
        let p = Self::from_vertices(&pts)?;
        // On an unbounded set the hull of the vertices has a facet cutting
        // through the set, which no input halfspace supports.
        for h in &p.halfspaces {
            let supported = halfspaces.iter().any(|(n, off)| {
                let l = norm(n);
                (*off / l - h.offset).abs() <= tol && n.iter().zip(&h.normal).all(|(&a, &b)| (a / l - b).abs() <= tol.sqrt())
            });
            if !supported {
                return Err(Error::domain("halfspaces describe an unbounded set"));
            }
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn max_vertex_norm(&self) -> T {
        self.vertices.iter().map(|v| norm(v)).fold(T::zero(), |m, x| m.max(x))
    }

    fn tol(&self) -> T {
        let scale = self.vertices.iter().flatten().fold(T::zero(), |m, &x| m.max(x.abs()));
        geom_tol(scale)
    }

    /// `max_p (x, p)` over the vertices.
    pub fn support_value(&self, x: &[T]) -> T {
        self.vertices.iter().map(|v| dot(x, v)).fold(T::neg_infinity(), |m, y| m.max(y))
    }

    /// Index of a vertex attaining the support value.
    pub fn support_vertex(&self, x: &[T]) -> usize {
        let mut best = 0;
        for (i, v) in self.vertices.iter().enumerate() {
            if dot(x, v) > dot(x, &self.vertices[best]) {
                best = i;
            }
        }
        best
    }

    /// Smallest halfspace slack of `y`: positive in the interior, the distance to the boundary.
    pub fn interior_margin(&self, y: &[T]) -> T {
        self.halfspaces.iter().map(|h| h.slack(y)).fold(T::infinity(), |m, s| m.min(s))
    }

    /// Minkowski gauge `min {λ ≥ 0 : y ∈ λP}`, for `0` interior to `P`.
    pub fn gauge(&self, y: &[T]) -> T {
        self.halfspaces.iter().map(|h| dot(&h.normal, y) / h.offset).fold(T::zero(), |m, g| m.max(g))
    }

    pub fn contains(&self, y: &[T], slack: T) -> bool {
        self.interior_margin(y) >= -slack
    }

    pub fn vertex_mean(&self) -> Vec<T> {
        let n = T::from_usize_lossy(self.vertices.len());
        (0..self.dim()).map(|j| self.vertices.iter().map(|v| v[j]).sum::<T>() / n).collect()
    }

    /// Image under `y ↦ a y + b` for invertible `a`.
    pub fn map_affine(&self, a: &Matrix<T>, b: &[T]) -> Result<Self> {
        let pts: Vec<Vec<T>> = self.vertices.iter().map(|v| a.matvec(v).iter().zip(b).map(|(&x, &y)| x + y).collect()).collect();
        Self::from_vertices(&pts)
    }

    pub fn scaled(&self, s: T) -> Result<Self> {
        let pts: Vec<Vec<T>> = self.vertices.iter().map(|v| v.iter().map(|&x| s * x).collect()).collect();
        Self::from_vertices(&pts)
    }

    pub fn translated(&self, t: &[T]) -> Result<Self> {
        let pts: Vec<Vec<T>> = self.vertices.iter().map(|v| v.iter().zip(t).map(|(&x, &y)| x + y).collect()).collect();
        Self::from_vertices(&pts)
    }

    /// Vertex indices tight at each facet; counter-clockwise about the outward
    /// normal when r = 3.
    pub fn facet_vertices(&self) -> Vec<Vec<usize>> {
        let tol = self.tol();
        self.halfspaces
            .iter()
            .map(|h| {
                let mut idx: Vec<usize> = (0..self.vertices.len()).filter(|&i| h.slack(&self.vertices[i]).abs() <= tol).collect();
                if self.dim() == 3 && idx.len() > 3 {
                    order_facet_3d(&self.vertices, &h.normal, &mut idx);
                }
                idx
            })
            .collect()
    }

    /// Every vertex satisfies every halfspace and every facet is tight at ≥ r vertices.
    pub fn check_consistency(&self) -> bool {
        let tol = self.tol();
        let r = self.dim();
        self.vertices.iter().all(|v| self.halfspaces.iter().all(|h| h.slack(v) >= -tol))
            && self.facet_vertices().iter().all(|f| f.len() >= r)
    }
}

fn sort_ccw<T: Real>(v: &mut [Vec<T>]) {
    let n = T::from_usize_lossy(v.len());
    let cx = v.iter().map(|p| p[0]).sum::<T>() / n;
    let cy = v.iter().map(|p| p[1]).sum::<T>() / n;
    v.sort_by(|a, b| {
        let ta = (a[1] - cy).atan2(a[0] - cx);
        let tb = (b[1] - cy).atan2(b[0] - cx);
        ta.partial_cmp(&tb).unwrap()
    });
}

fn order_facet_3d<T: Real>(verts: &[Vec<T>], normal: &[T], idx: &mut [usize]) {
    let n = T::from_usize_lossy(idx.len());
    let c: Vec<T> = (0..3).map(|j| idx.iter().map(|&i| verts[i][j]).sum::<T>() / n).collect();
    let e1 = {
        let d = sub(&verts[idx[0]], &c);
        let l = norm(&d);
        d.into_iter().map(|x| x / l).collect::<Vec<_>>()
    };
    let e2 = vec![normal[1] * e1[2] - normal[2] * e1[1], normal[2] * e1[0] - normal[0] * e1[2], normal[0] * e1[1] - normal[1] * e1[0]];
    let angle = |i: usize| {
        let d = sub(&verts[i], &c);
        dot(&d, &e2).atan2(dot(&d, &e1))
    };
    idx.sort_by(|&a, &b| angle(a).partial_cmp(&angle(b)).unwrap());
}

/// `Δ = −s − Δ⁺` where `s` is the restricted `2ρ_P`.
pub fn delta_from_moment<T: Real>(delta_plus: &Polytope<T>, two_rho_p_restricted: &[T]) -> Polytope<T> {
    let pts: Vec<Vec<T>> =
        delta_plus.vertices.iter().map(|p| p.iter().zip(two_rho_p_restricted).map(|(&x, &s)| -s - x).collect()).collect();
    Polytope::from_vertices(&pts).expect("affine image of a valid polytope")
}

/// Inverse of [`delta_from_moment`]: `Δ⁺ = −s − Δ`.
pub fn moment_from_delta<T: Real>(delta: &Polytope<T>, two_rho_p_restricted: &[T]) -> Polytope<T> {
    delta_from_moment(delta, two_rho_p_restricted)
}

pub fn support_value<T: Real>(p: &Polytope<T>, x: &[T]) -> T {
    p.support_value(x)
}

/// Outcome of the Fano-data checks; failures are listed, not raised.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport<T> {
    /// Distance from 0 to the boundary of Δ (negative if outside).
    pub zero_margin: T,
    pub zero_interior: bool,
    /// `max (α, p)` over `α ∈ Φ_P⁺` and vertices `p` of `−Δ⁺`; 0 when there are no roots.
    pub f_prime: T,
    /// `min (α, p)` over the same set; must be nonnegative.
    pub min_pairing: T,
    /// Margin of `−2ρ_P` inside `Δ⁺` (the flipped-chamber form of `2ρ_P ∈ Int(−Δ⁺)`).
    pub two_rho_margin: T,
    pub two_rho_interior: bool,
    pub violations: Vec<String>,
}

impl<T> ValidationReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_fano_data<T: Real>(delta: &Polytope<T>, delta_plus: &Polytope<T>, roots: &DerivedRoots<T>) -> ValidationReport<T> {
    let r = delta.dim();
    let tol = delta.tol().max(delta_plus.tol());
    let mut violations = Vec::new();
    if delta_plus.dim() != r || roots.rank_r() != r {
        violations.push("dimension mismatch between Δ, Δ⁺ and the root data".to_string());
    }
    let zero = vec![T::zero(); r];
    let zero_margin = delta.interior_margin(&zero);
    let zero_interior = zero_margin > tol;
    if !zero_interior {
        violations.push("0 ∉ Int(Δ)".to_string());
    }
    let (mut f_prime, mut min_pairing) = (T::zero(), T::zero());
    if !roots.restricted_roots.is_empty() {
        f_prime = T::neg_infinity();
        min_pairing = T::infinity();
        for c in &roots.restricted_roots {
            for p in &delta_plus.vertices {
                let v = -dot(c, p);
                f_prime = f_prime.max(v);
                min_pairing = min_pairing.min(v);
            }
        }
        if min_pairing < -tol {
            violations.push(format!("root pairing on −Δ⁺ is negative (min {min_pairing:e})"));
        }
    }
    let neg_two_rho: Vec<T> = roots.two_rho_restricted().into_iter().map(|x| -x).collect();
    let two_rho_margin = if delta_plus.dim() == neg_two_rho.len() { delta_plus.interior_margin(&neg_two_rho) } else { T::neg_infinity() };
    let two_rho_interior = two_rho_margin > tol;
    if !two_rho_interior {
        violations.push("−2ρ_P ∉ Int(Δ⁺)".to_string());
    }
    ValidationReport { zero_margin, zero_interior, f_prime, min_pairing, two_rho_margin, two_rho_interior, violations }
}

/// `Q* = {m : (m, q) ≥ −1 for all q ∈ Q}`.
pub fn dual_polytope<T: Real>(q: &Polytope<T>) -> Result<Polytope<T>> {
    let r = q.dim();
    if q.interior_margin(&vec![T::zero(); r]) <= q.tol() {
        return Err(Error::domain("0 is not interior to the polytope; dual is unbounded"));
    }
    let hs: Vec<(Vec<T>, T)> = q.vertices.iter().map(|v| (v.iter().map(|&x| -x).collect(), T::one())).collect();
    Polytope::from_halfspaces(&hs)
}

/// Per-condition outcome of the reflectivity test.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectivityReport {
    pub vertices_in_lattice: bool,
    pub dual_vertices_in_dual_lattice: bool,
    pub coroots_in_q: bool,
    pub details: Vec<String>,
}

impl ReflectivityReport {
    pub fn reflective(&self) -> bool {
        self.vertices_in_lattice && self.dual_vertices_in_dual_lattice && self.coroots_in_q
    }
}

fn near_integer_coords<T: Real>(basis: &Matrix<T>, v: &[T]) -> bool {
    let tol = T::lit(1e-9).max(T::epsilon() * T::lit(1e4));
    match basis.solve(v) {
        Some(c) => c.iter().all(|&x| (x - x.round()).abs() <= tol),
        None => false,
    }
}

/// Reflectivity of `q ⊂ 𝔞₁` with respect to `lattice_basis` (columns in `a1_basis`
/// coordinates) and the scaled coroots `α∨/a_α`, `α ∈ Φ_P⁺`.
pub fn is_reflective<T: Real>(
    q: &Polytope<T>,
    datum: &RootDatum<T>,
    roots: &DerivedRoots<T>,
    lattice_basis: &[Vec<T>],
) -> Result<ReflectivityReport> {
    let r = q.dim();
    if lattice_basis.len() != r || lattice_basis.iter().any(|b| b.len() != r) {
        return Err(Error::config("lattice basis must have r vectors of length r"));
    }
    let basis = Matrix::from_cols(lattice_basis);
    if basis.rank(T::lit(1e-12)) < r {
        return Err(Error::config("lattice basis is not independent"));
    }
    let dual_basis = basis.inverse().expect("independent basis").transpose();
    let special: Vec<Vec<T>> = roots
        .phi_coroots
        .iter()
        .zip(&roots.phi_a_alpha)
        .map(|(cv, &a)| datum.restrict_to_a1(cv).into_iter().map(|x| x / a).collect())
        .collect();
    let tol = q.tol();
    let mut details = Vec::new();

    let zero_inside = q.interior_margin(&vec![T::zero(); r]) > tol;
    if !zero_inside {
        details.push("0 ∉ Int(Q)".to_string());
    }
    let mut vertices_in_lattice = zero_inside;
    for v in &q.vertices {
        let listed = special.iter().any(|s| s.iter().zip(v).all(|(&a, &b)| (a - b).abs() <= tol));
        if !listed && !near_integer_coords(&basis, v) {
            vertices_in_lattice = false;
            details.push(format!("vertex {v:?} is neither a lattice point nor a scaled coroot"));
        }
    }
    let mut dual_vertices_in_dual_lattice = false;
    if zero_inside {
        let qd = dual_polytope(q)?;
        dual_vertices_in_dual_lattice = true;
        for m in &qd.vertices {
            if !near_integer_coords(&dual_basis, m) {
                dual_vertices_in_dual_lattice = false;
                details.push(format!("dual vertex {m:?} is not in the dual lattice"));
            }
        }
    }
    let mut coroots_in_q = true;
    for s in &special {
        if !q.contains(s, tol) {
            coroots_in_q = false;
            details.push(format!("scaled coroot {s:?} lies outside Q"));
        }
    }
    Ok(ReflectivityReport { vertices_in_lattice, dual_vertices_in_dual_lattice, coroots_in_q, details })
}

/// `{y : (y − c)ᵀ M (y − c) ≤ 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid<T> {
    pub center: Vec<T>,
    pub shape: Matrix<T>,
}

impl<T: Real> Ellipsoid<T> {
    pub fn new(center: Vec<T>, shape: Matrix<T>) -> Result<Self> {
        if shape.rows() != center.len() || shape.cols() != center.len() {
            return Err(Error::domain("ellipsoid shape/center size mismatch"));
        }
        if !shape.is_symmetric(T::lit(1e-9) * shape.max_abs()) || shape.cholesky().is_none() {
            return Err(Error::domain("ellipsoid shape is not symmetric positive-definite"));
        }
        Ok(Self { center, shape })
    }

    /// `(y − c)ᵀ M (y − c)`.
    pub fn gauge(&self, y: &[T]) -> T {
        let d = sub(y, &self.center);
        dot(&d, &self.shape.matvec(&d))
    }

    /// `max_{y ∈ E} (n, y)`.
    pub fn support(&self, n: &[T]) -> T {
        let inv = self.shape.inverse().expect("positive-definite shape");
        dot(n, &self.center) + dot(n, &inv.matvec(n)).sqrt()
    }

    /// Homothety about the center by factor `lambda`.
    pub fn scaled(&self, lambda: T) -> Self {
        Self { center: self.center.clone(), shape: self.shape.scale(T::one() / (lambda * lambda)) }
    }

    /// Semi-axis lengths in ascending order.
    pub fn semi_axes(&self) -> Vec<T> {
        let (vals, _) = self.shape.symmetric_eigen();
        let mut axes: Vec<T> = vals.into_iter().map(|l| T::one() / l.sqrt()).collect();
        axes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        axes
    }

    /// `(1/r) E ⊂ Ω ⊂ E` up to `slack`, with Ω the polytope.
    pub fn sandwiches(&self, omega: &Polytope<T>, slack: T) -> bool {
        let r = T::from_usize_lossy(self.center.len());
        let outer = omega.vertices.iter().all(|v| self.gauge(v) <= T::one() + slack);
        let inner = self.scaled(T::one() / r);
        let inner_ok = omega.halfspaces.iter().all(|h| inner.support(&h.normal) <= h.offset + slack);
        outer && inner_ok
    }
}

/// Minimum-volume enclosing ellipsoid of the convex hull of `points`, to
/// relative accuracy `eps`, by the Khachiyan iteration with away steps. The
/// result is rescaled so that every point lies inside.
pub fn min_enclosing_ellipsoid<T: Real>(points: &[Vec<T>], eps: T) -> Result<Ellipsoid<T>> {
    if !(eps > T::zero()) {
        return Err(Error::domain("eps must be positive"));
    }
    let r = points.first().map(|p| p.len()).unwrap_or(0);
    let m = points.len();
    if r == 0 || m < r + 1 {
        return Err(Error::domain("too few points for a full-dimensional ellipsoid"));
    }
    let lifted: Vec<Vec<T>> = points.iter().map(|p| p.iter().copied().chain(std::iter::once(T::one())).collect()).collect();
    let d1 = T::from_usize_lossy(r + 1);
    let mut u = vec![T::one() / T::from_usize_lossy(m); m];
    let max_iter = 100_000;
    let mut converged = false;
    for _ in 0..max_iter {
        let mut x = Matrix::<T>::zeros(r + 1, r + 1);
        for (q, &w) in lifted.iter().zip(&u) {
            for i in 0..=r {
                for j in 0..=r {
                    x[(i, j)] = x[(i, j)] + w * q[i] * q[j];
                }
            }
        }
        let lu = x.lu().ok_or_else(|| Error::domain("points do not affinely span the space"))?;
        if lu.det().abs() <= T::min_positive_value() {
            return Err(Error::domain("points do not affinely span the space"));
        }
        let g: Vec<T> = lifted.iter().map(|q| dot(q, &lu.solve(q))).collect();
        let (mut jmax, mut jmin) = (0, usize::MAX);
        for i in 0..m {
            if g[i] > g[jmax] {
                jmax = i;
            }
            if u[i] > T::zero() && (jmin == usize::MAX || g[i] < g[jmin]) {
                jmin = i;
            }
        }
        let up = g[jmax] / d1 - T::one();
        let down = T::one() - g[jmin] / d1;
        if up <= eps && down <= eps {
            converged = true;
            break;
        }
        if up >= down {
            let step = (g[jmax] - d1) / (d1 * (g[jmax] - T::one()));
            for w in u.iter_mut() {
                *w = *w * (T::one() - step);
            }
            u[jmax] = u[jmax] + step;
        } else {
            let full = u[jmin] / (T::one() - u[jmin]);
            let step = ((d1 - g[jmin]) / (d1 * (g[jmin] - T::one()))).min(full);
            for w in u.iter_mut() {
                *w = *w * (T::one() + step);
            }
            u[jmin] = (u[jmin] - step).max(T::zero());
        }
    }
    if !converged {
        return Err(Error::numerical("minimum enclosing ellipsoid iteration did not converge"));
    }
    let center: Vec<T> = (0..r).map(|j| points.iter().zip(&u).map(|(p, &w)| w * p[j]).sum()).collect();
    let mut cov = Matrix::<T>::zeros(r, r);
    for (p, &w) in points.iter().zip(&u) {
        let d = sub(p, &center);
        for i in 0..r {
            for j in 0..r {
                cov[(i, j)] = cov[(i, j)] + w * d[i] * d[j];
            }
        }
    }
    let shape =
        cov.inverse().ok_or_else(|| Error::domain("points do not affinely span the space"))?.scale(T::one() / T::from_usize_lossy(r));
    let mut e = Ellipsoid { center, shape };
    let worst = points.iter().map(|p| e.gauge(p)).fold(T::zero(), |a, b| a.max(b));
    if worst > T::one() {
        e.shape = e.shape.scale(T::one() / worst);
    }
    Ok(e)
}

/// Volume-preserving affine map `y ↦ c + L (y − c)` sending an ellipsoid to a
/// ball of radius `radius` about its center.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizingMap<T> {
    pub linear: Matrix<T>,
    pub center: Vec<T>,
    pub radius: T,
}

impl<T: Real> NormalizingMap<T> {
    pub fn apply(&self, y: &[T]) -> Vec<T> {
        let d = self.linear.matvec(&sub(y, &self.center));
        d.iter().zip(&self.center).map(|(&a, &c)| a + c).collect()
    }

    /// Translation part `c − L c`.
    pub fn translation(&self) -> Vec<T> {
        sub(&self.center, &self.linear.matvec(&self.center))
    }
}

pub fn normalizing_map<T: Real>(e: &Ellipsoid<T>) -> NormalizingMap<T> {
    let r = T::from_usize_lossy(e.center.len());
    let root = e.shape.sqrt_spd();
    let det = e.shape.det();
    let radius = det.powf(-T::one() / (T::lit(2.0) * r));
    NormalizingMap { linear: root.scale(radius), center: e.center.clone(), radius }
}
