use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::polytope::Polytope;
use crate::real::Real;

/// `u(x) = log Σ_v e^{(v, x)}` over a point set `v` with hull `2Δ` (by
/// default its vertices, giving the reference `u₀`), with exact
/// derivatives: `∇u₀` is the softmax mean of the vertices and `D²u₀` their
/// softmax covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferencePotential<T> {
    pub vertices: Vec<Vec<T>>,
}

/// Value, gradient and Hessian at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    pub value: T,
    pub grad: Vec<T>,
    pub hess: Matrix<T>,
}

impl<T: Real> ReferencePotential<T> {
    pub fn new(two_delta: &Polytope<T>) -> Result<Self> {
        let r = two_delta.dim();
        if two_delta.vertices.len() < r + 1 {
            return Err(Error::domain("reference polytope is not full-dimensional"));
        }
        if two_delta.interior_margin(&vec![T::zero(); r]) <= T::zero() {
            return Err(Error::domain("0 is not interior to 2Δ"));
        }
        Ok(Self { vertices: two_delta.vertices.clone() })
    }

    /// Log-sum-exp over arbitrary points whose hull is `2Δ`, e.g. the vertices
    /// together with `2·(Δ ∩ ℤʳ)`.
    pub fn from_points(two_delta: &Polytope<T>, points: &[Vec<T>]) -> Result<Self> {
        let base = Self::new(two_delta)?;
        let slack = T::lit(1e-9) * (T::one() + two_delta.max_vertex_norm());
        if let Some(p) = points.iter().find(|p| p.len() != two_delta.dim() || !two_delta.contains(p, slack)) {
            return Err(Error::domain(format!("point {p:?} lies outside 2Δ")));
        }
        let mut vertices = base.vertices;
        for p in points {
            if !vertices.iter().any(|v| v.iter().zip(p).all(|(a, b)| (*a - *b).abs() <= slack)) {
                vertices.push(p.clone());
            }
        }
        Ok(Self { vertices })
    }

    /// `2·(Δ ∩ ℤʳ)` for `Δ = ½·2Δ`, or an empty list when there are more than `cap`.
    pub fn doubled_lattice_points(two_delta: &Polytope<T>, cap: usize) -> Vec<Vec<T>> {
        let r = two_delta.dim();
        let half = T::lit(0.5);
        let lo: Vec<i64> = (0..r)
            .map(|j| two_delta.vertices.iter().map(|v| v[j] * half).fold(T::infinity(), |a, b| a.min(b)))
            .map(|x| x.ceil().to_i64().unwrap_or(0))
            .collect();
        let hi: Vec<i64> = (0..r)
            .map(|j| two_delta.vertices.iter().map(|v| v[j] * half).fold(T::neg_infinity(), |a, b| a.max(b)))
            .map(|x| x.floor().to_i64().unwrap_or(-1))
            .collect();
        let count: i64 = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1).max(0)).product();
        if count <= 0 || count as usize > cap {
            return Vec::new();
        }
        let slack = T::lit(1e-9) * (T::one() + two_delta.max_vertex_norm());
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            let p: Vec<T> = cur.iter().map(|&k| T::lit(2.0 * k as f64)).collect();
            if two_delta.contains(&p, slack) {
                out.push(p);
            }
            let mut j = 0;
            while j < r {
                cur[j] += 1;
                if cur[j] <= hi[j] {
                    break;
                }
                cur[j] = lo[j];
                j += 1;
            }
            if j == r {
                break;
            }
        }
        out
    }

    pub fn value(&self, x: &[T]) -> T {
        let s: Vec<T> = self.vertices.iter().map(|v| crate::linalg::dot(v, x)).collect();
        let m = s.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        m + s.iter().map(|&e| (e - m).exp()).sum::<T>().ln()
    }

    pub fn jet(&self, x: &[T]) -> Jet<T> {
        let r = x.len();
        let s: Vec<T> = self.vertices.iter().map(|v| crate::linalg::dot(v, x)).collect();
        let m = s.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let e: Vec<T> = s.iter().map(|&y| (y - m).exp()).collect();
        let z: T = e.iter().copied().sum();
        let p: Vec<T> = e.iter().map(|&y| y / z).collect();
        let grad: Vec<T> = (0..r).map(|j| self.vertices.iter().zip(&p).map(|(v, &w)| w * v[j]).sum()).collect();
        // Covariance accumulated from centered vertices to avoid cancellation.
        let mut hess = Matrix::zeros(r, r);
        for (v, &w) in self.vertices.iter().zip(&p) {
            for i in 0..r {
                let di = v[i] - grad[i];
                for j in 0..r {
                    hess[(i, j)] = hess[(i, j)] + w * di * (v[j] - grad[j]);
                }
            }
        }
        Jet { value: m + z.ln(), grad, hess }
    }
}
