//! Integration over polytopes against the Duistermaat–Heckman weight
//! `π(p) = Π (α, p + shift)` and exponential tilts `e^{(ξ, p)}`.
//!
//! Polynomial integrals are evaluated exactly from barycentric monomial
//! moments over a triangulation, in any [`Field`] (floats or rationals).
//! Tilted integrals use a collapsed Gauss–Legendre rule per simplex with
//! global longest-edge bisection until the result stabilizes.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::polytope::{geom_tol, Polytope};
use crate::real::{Field, Real};

/// Vertices of an r-simplex (r + 1 points).
pub type Simplex<T> = Vec<Vec<T>>;

/// A polytope carrying the weight `Π_α (c_α, p + shift)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPolytope<T> {
    pub domain: Polytope<T>,
    pub weight_roots: Vec<Vec<T>>,
    pub shift: Vec<T>,
}

impl<T: Real> WeightedPolytope<T> {
    pub fn new(domain: Polytope<T>, weight_roots: Vec<Vec<T>>, shift: Vec<T>) -> Result<Self> {
        let r = domain.dim();
        if shift.len() != r || weight_roots.iter().any(|c| c.len() != r) {
            return Err(Error::domain("weight data dimension differs from the polytope"));
        }
        let wp = Self { domain, weight_roots, shift };
        let scale = wp.domain.max_vertex_norm() + crate::linalg::norm(&wp.shift);
        let tol = geom_tol(scale);
        for v in &wp.domain.vertices {
            for (a, b) in wp.affine_forms() {
                if dot(&a, v) + b < -tol * crate::linalg::norm(&a).max(T::one()) {
                    return Err(Error::domain("weight is negative on the polytope"));
                }
            }
        }
        Ok(wp)
    }

    /// Unit weight.
    pub fn plain(domain: Polytope<T>) -> Self {
        let r = domain.dim();
        Self { domain, weight_roots: Vec::new(), shift: vec![T::zero(); r] }
    }

    /// `(a, b)` with `weight(p) = Π (a, p) + b`.
    pub fn affine_forms(&self) -> Vec<(Vec<T>, T)> {
        self.weight_roots.iter().map(|c| (c.clone(), dot(c, &self.shift))).collect()
    }

    pub fn weight(&self, p: &[T]) -> T {
        self.weight_roots
            .iter()
            .fold(T::one(), |acc, c| acc * c.iter().zip(p.iter().zip(&self.shift)).map(|(&a, (&x, &s))| a * (x + s)).sum::<T>())
    }

    pub fn degree(&self) -> usize {
        self.weight_roots.len()
    }
}

fn field_abs<F: Field>(x: F) -> F {
    if x < F::zero() {
        -x
    } else {
        x
    }
}

fn field_factorial<F: Field>(n: usize) -> F {
    (1..=n).fold(F::one(), |acc, k| acc * F::from_usize(k).expect("small integer"))
}

/// Determinant by elimination, choosing the largest-magnitude pivot.
fn field_det<F: Field>(mut a: Vec<Vec<F>>) -> F {
    let n = a.len();
    let mut det = F::one();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| field_abs(a[i][k].clone()).partial_cmp(&field_abs(a[j][k].clone())).unwrap()).unwrap();
        if a[p][k].is_zero() {
            return F::zero();
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det = det * a[k][k].clone();
        for i in k + 1..n {
            let (top, rest) = a.split_at_mut(i);
            let (pivot, row) = (&top[k], &mut rest[0]);
            let f = row[k].clone() / pivot[k].clone();
            for (x, p) in row[k..].iter_mut().zip(&pivot[k..]) {
                *x = x.clone() - p.clone() * f.clone();
            }
        }
    }
    det
}

/// `|det(v_i − v_0)|`, i.e. `r!` times the simplex volume.
fn simplex_det_abs<F: Field>(s: &[Vec<F>]) -> F {
    let rows = s[1..].iter().map(|v| v.iter().zip(&s[0]).map(|(a, b)| a.clone() - b.clone()).collect()).collect();
    field_abs(field_det(rows))
}

pub fn simplex_volume<T: Real>(s: &[Vec<T>]) -> T {
    simplex_det_abs(s) / field_factorial::<T>(s.len() - 1)
}

/// Exact `∫_S Π_k ((a_k, p) + b_k) dp` over a simplex `S`.
///
/// Each affine form is linear in barycentric coordinates; the product is
/// expanded into barycentric monomials, whose moments are
/// `∫_S λ^m = r! vol(S) Π m_i! / (r + |m|)!`.
pub fn integrate_affine_product<F: Field>(simplex: &[Vec<F>], forms: &[(Vec<F>, F)]) -> F {
    let r = simplex.len() - 1;
    let mut poly: BTreeMap<Vec<u16>, F> = BTreeMap::new();
    poly.insert(vec![0; r + 1], F::one());
    for (a, b) in forms {
        let vals: Vec<F> = simplex.iter().map(|v| a.iter().zip(v).fold(b.clone(), |acc, (x, y)| acc + x.clone() * y.clone())).collect();
        let mut next: BTreeMap<Vec<u16>, F> = BTreeMap::new();
        for (m, c) in &poly {
            for (i, val) in vals.iter().enumerate() {
                if val.is_zero() {
                    continue;
                }
                let mut m2 = m.clone();
                m2[i] += 1;
                let e = next.entry(m2).or_insert_with(F::zero);
                *e = e.clone() + c.clone() * val.clone();
            }
        }
        poly = next;
    }
    let deg = forms.len();
    let denom = field_factorial::<F>(r + deg);
    let sum = poly.iter().fold(F::zero(), |acc, (m, c)| {
        let num = m.iter().fold(F::one(), |p, &k| p * field_factorial::<F>(k as usize));
        acc + c.clone() * num
    });
    simplex_det_abs(simplex) * sum / denom
}

/// Fan triangulation from the vertex mean: one simplex per edge (r = 2) or
/// per triangle of each fanned facet (r = 3).
pub fn triangulate<T: Real>(p: &Polytope<T>) -> Vec<Simplex<T>> {
    let r = p.dim();
    let v = &p.vertices;
    match r {
        1 => vec![v.clone()],
        2 => {
            let c = p.vertex_mean();
            (0..v.len()).map(|i| vec![c.clone(), v[i].clone(), v[(i + 1) % v.len()].clone()]).collect()
        }
        _ => {
            let c = p.vertex_mean();
            let mut out = Vec::new();
            for f in p.facet_vertices() {
                for k in 1..f.len() - 1 {
                    out.push(vec![c.clone(), v[f[0]].clone(), v[f[k]].clone(), v[f[k + 1]].clone()]);
                }
            }
            out
        }
    }
}

fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Volume of a polytope.
pub fn volume<T: Real>(p: &Polytope<T>) -> T {
    let v: Vec<T> = triangulate(p).iter().map(|s| simplex_volume(s)).collect();
    pairwise_sum(&v)
}

/// `∫_P weight(p) dp`, exact up to floating-point rounding.
pub fn integrate_poly<T: Real>(wp: &WeightedPolytope<T>) -> T {
    let forms = wp.affine_forms();
    let parts: Vec<T> = triangulate(&wp.domain).par_iter().map(|s| integrate_affine_product(s, &forms)).collect();
    pairwise_sum(&parts)
}

fn to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// `∫_P weight(p) dp` in exact rational arithmetic on the (dyadic) input data.
pub fn integrate_poly_exact(wp: &WeightedPolytope<f64>) -> BigRational {
    let forms: Vec<(Vec<BigRational>, BigRational)> = wp
        .affine_forms()
        .iter()
        .map(|(a, _)| {
            let a: Vec<BigRational> = a.iter().map(|&x| to_rational(x)).collect();
            let shift: Vec<BigRational> = wp.shift.iter().map(|&x| to_rational(x)).collect();
            let b = a.iter().zip(&shift).fold(BigRational::zero(), |acc, (x, y)| acc + x * y);
            (a, b)
        })
        .collect();
    let mut total = BigRational::zero();
    for s in triangulate(&wp.domain) {
        let s: Vec<Vec<BigRational>> = s.iter().map(|v| v.iter().map(|&x| to_rational(x)).collect()).collect();
        total += integrate_affine_product(&s, &forms);
    }
    total
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or_else(|| {
        // Numerator or denominator too large for a direct conversion.
        let shift = q.denom().bits().max(q.numer().bits()) as i64 - 1000;
        let scale = BigInt::one() << shift.max(0) as usize;
        let n = (q.numer() / &scale).to_f64().unwrap_or(f64::NAN);
        let d = (q.denom() / &scale).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Gauss–Legendre nodes and weights on `[0, 1]` (weights sum to 1).
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(0.5 * (1.0 - x));
        nodes[n - 1 - i] = T::lit(0.5 * (1.0 + x));
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    (nodes, weights)
}

/// Quadrature on the reference simplex, as barycentric coordinates
/// `λ_1..λ_r` (with `λ_0 = 1 − Σλ`) and weights summing to `1/r!`.
#[derive(Clone, Debug)]
pub struct SimplexRule<T> {
    pub bary: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> SimplexRule<T> {
    /// Collapsed tensor rule with `order` Gauss points per direction.
    pub fn collapsed(r: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre::<T>(order);
        let mut bary = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; r];
        loop {
            // λ_1 = u_1, λ_k = u_k Π_{j<k} (1 − u_j), Jacobian Π_k (1 − u_k)^{r−k}.
            let mut rem = T::one();
            let mut jac = T::one();
            let mut wt = T::one();
            let mut lam = Vec::with_capacity(r);
            for &i in &idx {
                let u = x[i];
                lam.push(u * rem);
                wt = wt * w[i];
                jac = jac * rem;
                rem = rem * (T::one() - u);
            }
            bary.push(lam);
            weights.push(wt * jac);
            let mut k = 0;
            loop {
                if k == r {
                    return Self { bary, weights };
                }
                idx[k] += 1;
                if idx[k] < order {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Physical nodes and weights on `s`.
    pub fn apply(&self, s: &[Vec<T>]) -> impl Iterator<Item = (Vec<T>, T)> + '_ {
        let det = simplex_det_abs(s);
        let s = s.to_vec();
        self.bary.iter().zip(&self.weights).map(move |(lam, &w)| {
            let mut p = s[0].clone();
            for (k, &l) in lam.iter().enumerate() {
                for (pj, (&a, &b)) in p.iter_mut().zip(s[k + 1].iter().zip(&s[0])) {
                    *pj = *pj + l * (a - b);
                }
            }
            (p, w * det)
        })
    }
}

fn bisect<T: Real>(s: &[Vec<T>]) -> [Simplex<T>; 2] {
    let mut best = (0, 1, T::neg_infinity());
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let d: T = s[i].iter().zip(&s[j]).map(|(&a, &b)| (a - b) * (a - b)).sum();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i, j, _) = best;
    let mid: Vec<T> = s[i].iter().zip(&s[j]).map(|(&a, &b)| (a + b) / T::lit(2.0)).collect();
    let mut a = s.to_vec();
    let mut b = s.to_vec();
    a[j] = mid.clone();
    b[i] = mid;
    [a, b]
}

/// Weighted moments of `e^{(ξ, p)} π(p)`, each stored divided by `e^{log_scale}`
/// to keep large tilts finite.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltedMoments<T> {
    pub log_scale: T,
    pub mass: T,
    pub first: Vec<T>,
    /// Present only when requested.
    pub second: Option<Matrix<T>>,
}

impl<T: Real> TiltedMoments<T> {
    /// `log ∫ e^{(ξ,p)} π dp`.
    pub fn log_mass(&self) -> T {
        self.log_scale + self.mass.ln()
    }

    /// Tilted barycenter `∫ p e^{(ξ,p)} π / ∫ e^{(ξ,p)} π`.
    pub fn barycenter(&self) -> Vec<T> {
        self.first.iter().map(|&x| x / self.mass).collect()
    }

    /// Tilted covariance, the Hessian of the log-partition function.
    pub fn covariance(&self) -> Option<Matrix<T>> {
        let second = self.second.as_ref()?;
        let b = self.barycenter();
        let r = b.len();
        let mut c = Matrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                c[(i, j)] = second[(i, j)] / self.mass - b[i] * b[j];
            }
        }
        Some(c)
    }
}

/// Settings for the tilted integrals.
#[derive(Clone, Copy, Debug)]
pub struct TiltOptions<T> {
    pub order: usize,
    pub rel_tol: T,
    pub max_levels: usize,
}

impl<T: Real> Default for TiltOptions<T> {
    fn default() -> Self {
        Self { order: 8, rel_tol: T::lit(1e-10).max(T::epsilon() * T::lit(100.0)), max_levels: 12 }
    }
}

fn moments_on<T: Real>(
    wp: &WeightedPolytope<T>,
    simplices: &[Simplex<T>],
    rule: &SimplexRule<T>,
    xi: &[T],
    scale: T,
    with_second: bool,
) -> Vec<T> {
    let r = xi.len();
    let width = 1 + r + if with_second { r * r } else { 0 };
    let parts: Vec<Vec<T>> = simplices
        .par_iter()
        .map(|s| {
            let mut acc = vec![T::zero(); width];
            for (p, w) in rule.apply(s) {
                let f = w * (dot(xi, &p) - scale).exp() * wp.weight(&p);
                acc[0] = acc[0] + f;
                for i in 0..r {
                    acc[1 + i] = acc[1 + i] + f * p[i];
                    if with_second {
                        for j in 0..r {
                            acc[1 + r + i * r + j] = acc[1 + r + i * r + j] + f * p[i] * p[j];
                        }
                    }
                }
            }
            acc
        })
        .collect();
    (0..width).map(|k| pairwise_sum(&parts.iter().map(|a| a[k]).collect::<Vec<_>>())).collect()
}

/// Tilted mass, first (and optionally second) moments with refinement until
/// every component changes by less than `rel_tol` relative to the mass scale.
pub fn tilted_moments<T: Real>(wp: &WeightedPolytope<T>, xi: &[T], with_second: bool, opts: &TiltOptions<T>) -> Result<TiltedMoments<T>> {
    let r = wp.domain.dim();
    if xi.len() != r {
        return Err(Error::domain("tilt vector has wrong dimension"));
    }
    let rule = SimplexRule::collapsed(r, opts.order);
    let scale = wp.domain.support_value(xi);
    let extent = wp.domain.max_vertex_norm().max(T::one());
    let mut simplices = triangulate(&wp.domain);
    let mut prev = moments_on(wp, &simplices, &rule, xi, scale, with_second);
    let mut achieved = T::infinity();
    for _ in 0..opts.max_levels {
        simplices = simplices.iter().flat_map(|s| bisect(s)).collect();
        let cur = moments_on(wp, &simplices, &rule, xi, scale, with_second);
        let m = cur[0].abs().max(T::min_positive_value());
        achieved = cur
            .iter()
            .zip(&prev)
            .enumerate()
            .map(|(k, (&a, &b))| {
                let ref_scale = if k == 0 {
                    m
                } else if k <= r {
                    m * extent
                } else {
                    m * extent * extent
                };
                (a - b).abs() / ref_scale
            })
            .fold(T::zero(), |x, y| x.max(y));
        prev = cur;
        if achieved < opts.rel_tol {
            return Ok(pack(prev, r, scale, with_second));
        }
    }
    Err(Error::numerical(format!("tilted integral did not converge: relative change {achieved:e} after {} refinements", opts.max_levels)))
}

fn pack<T: Real>(v: Vec<T>, r: usize, scale: T, with_second: bool) -> TiltedMoments<T> {
    let second = with_second.then(|| {
        let mut m = Matrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                m[(i, j)] = v[1 + r + i * r + j];
            }
        }
        m
    });
    TiltedMoments { log_scale: scale, mass: v[0], first: v[1..=r].to_vec(), second }
}

/// `∫_P e^{(ξ,p)} weight(p) dp`.
pub fn integrate_exp<T: Real>(wp: &WeightedPolytope<T>, xi: &[T]) -> Result<T> {
    let m = tilted_moments(wp, xi, false, &TiltOptions::default())?;
    Ok(m.mass * m.log_scale.exp())
}

/// `∫_P p e^{(ξ,p)} weight(p) dp`.
pub fn tilted_moment<T: Real>(wp: &WeightedPolytope<T>, xi: &[T]) -> Result<Vec<T>> {
    let m = tilted_moments(wp, xi, false, &TiltOptions::default())?;
    let s = m.log_scale.exp();
    Ok(m.first.iter().map(|&x| x * s).collect())
}
