//! Lie-combinatorial input data and the quantities derived from it.
//!
//! Coordinates: `𝔞` carries the scalar product given by `gram`; characters
//! (roots) are covectors and pair with elements of `𝔞` by the plain dot
//! product. The t-vector of a character is `t_χ = gram⁻¹ χ`.
//!
//! Sign convention: the unipotent-radical roots are taken as `Φ⁺ \ Φ_I⁺`
//! (the mirror image of the negative-Borel set). The reduced formulas are
//! invariant under the global flip `(roots, ρ_P, Δ⁺) ↦ −(roots, ρ_P, Δ⁺)`, so
//! with this choice every pairing `(α, p)`, `p ∈ −Δ⁺`, and every
//! `(α, ∇u + 4t_ρ)` is nonnegative exactly as written, and moment polytopes
//! are supplied in the anti-dominant chamber.
//!
//! On `𝔞₁` everything is expressed in `a1_basis` coordinates: gradients and
//! polytopes are covectors, and a root `α` pairs with a covector `q` through
//! its restricted vector `c_α = (BᵀGB)⁻¹ Bᵀ α` as `c_α · q`.

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::real::Real;

/// Classical root-system families with a standard orthonormal realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootFamily {
    A,
    B,
    C,
    D,
    G2,
}

impl std::str::FromStr for RootFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(RootFamily::A),
            "B" => Ok(RootFamily::B),
            "C" => Ok(RootFamily::C),
            "D" => Ok(RootFamily::D),
            "G2" | "G" => Ok(RootFamily::G2),
            other => Err(Error::config(format!("unknown root family {other:?}"))),
        }
    }
}

/// Tolerance for integrality checks, loose enough for `f32` input.
fn loose_tol<T: Real>() -> T {
    T::lit(1e-8).max(T::epsilon() * T::lit(1e3))
}

fn unit<T: Real>(d: usize, i: usize) -> Vec<T> {
    let mut v = vec![T::zero(); d];
    v[i] = T::one();
    v
}

fn comb<T: Real>(d: usize, terms: &[(usize, f64)]) -> Vec<T> {
    let mut v = vec![T::zero(); d];
    for &(i, c) in terms {
        v[i] = v[i] + T::lit(c);
    }
    v
}

fn check_family_rank(family: RootFamily, rank: usize) -> Result<()> {
    let ok = match family {
        RootFamily::A | RootFamily::B | RootFamily::C => rank >= 1,
        RootFamily::D => rank >= 2,
        RootFamily::G2 => rank == 2,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!("unsupported root system {family:?}{rank}")))
    }
}

/// Ambient dimension of the standard realization.
pub fn classical_ambient_dim(family: RootFamily, rank: usize) -> Result<usize> {
    check_family_rank(family, rank)?;
    Ok(match family {
        RootFamily::A => rank + 1,
        RootFamily::G2 => 3,
        _ => rank,
    })
}

/// All positive roots of a classical system in its standard orthonormal realization.
pub fn build_classical_roots<T: Real>(family: RootFamily, rank: usize) -> Result<Vec<Vec<T>>> {
    let d = classical_ambient_dim(family, rank)?;
    let n = rank;
    let mut roots = Vec::new();
    match family {
        RootFamily::A => {
            for i in 0..d {
                for j in i + 1..d {
                    roots.push(comb(d, &[(i, 1.0), (j, -1.0)]));
                }
            }
        }
        RootFamily::B | RootFamily::C | RootFamily::D => {
            for i in 0..n {
                for j in i + 1..n {
                    roots.push(comb(d, &[(i, 1.0), (j, -1.0)]));
                    roots.push(comb(d, &[(i, 1.0), (j, 1.0)]));
                }
            }
            match family {
                RootFamily::B => roots.extend((0..n).map(|i| unit(d, i))),
                RootFamily::C => roots.extend((0..n).map(|i| comb(d, &[(i, 2.0)]))),
                _ => {}
            }
        }
        RootFamily::G2 => {
            let a1: Vec<T> = comb(d, &[(0, 1.0), (1, -1.0)]);
            let a2: Vec<T> = comb(d, &[(0, -2.0), (1, 1.0), (2, 1.0)]);
            for (p, q) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (3.0, 2.0)] {
                roots.push(a1.iter().zip(&a2).map(|(&x, &y)| T::lit(p) * x + T::lit(q) * y).collect());
            }
        }
    }
    Ok(roots)
}

/// Simple roots of a classical system, matching [`build_classical_roots`].
pub fn classical_simple_roots<T: Real>(family: RootFamily, rank: usize) -> Result<Vec<Vec<T>>> {
    let d = classical_ambient_dim(family, rank)?;
    let n = rank;
    let mut simple: Vec<Vec<T>> = Vec::new();
    match family {
        RootFamily::A => {
            simple.extend((0..n).map(|i| comb(d, &[(i, 1.0), (i + 1, -1.0)])));
        }
        RootFamily::B | RootFamily::C | RootFamily::D => {
            simple.extend((0..n - 1).map(|i| comb(d, &[(i, 1.0), (i + 1, -1.0)])));
            simple.push(match family {
                RootFamily::B => unit(d, n - 1),
                RootFamily::C => comb(d, &[(n - 1, 2.0)]),
                _ => comb(d, &[(n - 2, 1.0), (n - 1, 1.0)]),
            });
        }
        RootFamily::G2 => {
            simple.push(comb(d, &[(0, 1.0), (1, -1.0)]));
            simple.push(comb(d, &[(0, -2.0), (1, 1.0), (2, 1.0)]));
        }
    }
    Ok(simple)
}

/// Ambient Euclidean structure, simple roots, parabolic subset and `𝔞₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootDatum<T> {
    pub ambient_dim: usize,
    pub gram: Matrix<T>,
    pub simple_roots: Vec<Vec<T>>,
    pub subset_i: Vec<usize>,
    pub a1_basis: Vec<Vec<T>>,
    pub rank_r: usize,
    gram_inv: Matrix<T>,
    /// `BᵀGB` for the `a1_basis` matrix `B`.
    a1_gram: Matrix<T>,
}

impl<T: Real> RootDatum<T> {
    pub fn new(gram: Matrix<T>, simple_roots: Vec<Vec<T>>, subset_i: Vec<usize>, a1_basis: Vec<Vec<T>>) -> Result<Self> {
        let d = gram.rows();
        if d == 0 || gram.cols() != d {
            return Err(Error::config("gram must be a non-empty square matrix"));
        }
        if !gram.is_symmetric(T::lit(1e-12) * gram.max_abs().max(T::one())) {
            return Err(Error::config("gram is not symmetric"));
        }
        if gram.cholesky().is_none() {
            return Err(Error::config("gram is not positive-definite"));
        }
        for v in simple_roots.iter().chain(&a1_basis) {
            if v.len() != d {
                return Err(Error::config(format!("vector of length {} in a {d}-dimensional datum", v.len())));
            }
        }
        if !simple_roots.is_empty() && Matrix::from_cols(&simple_roots).rank(loose_tol::<T>()) != simple_roots.len() {
            return Err(Error::config("simple roots are linearly dependent"));
        }
        if let Some(&bad) = subset_i.iter().find(|&&i| i >= simple_roots.len()) {
            return Err(Error::config(format!("subset index {bad} is not a simple-root index")));
        }
        if a1_basis.is_empty() {
            return Err(Error::config("a1_basis must span a positive-dimensional space"));
        }
        let b = Matrix::from_cols(&a1_basis);
        let a1_gram = b.transpose().matmul(&gram).matmul(&b);
        if a1_gram.cholesky().is_none() {
            return Err(Error::config("a1_basis is not linearly independent"));
        }
        let gram_inv = gram.inverse().ok_or_else(|| Error::config("gram is singular"))?;
        let mut subset_i = subset_i;
        subset_i.sort_unstable();
        subset_i.dedup();
        Ok(Self { ambient_dim: d, rank_r: a1_basis.len(), gram, simple_roots, subset_i, a1_basis, gram_inv, a1_gram })
    }

    /// Identity gram, classical simple roots, `𝔞₁ = 𝔞`.
    pub fn classical(family: RootFamily, rank: usize, subset_i: Vec<usize>) -> Result<Self> {
        let d = classical_ambient_dim(family, rank)?;
        let a1 = (0..d).map(|i| unit(d, i)).collect();
        Self::new(Matrix::identity(d), classical_simple_roots(family, rank)?, subset_i, a1)
    }

    /// `t_χ = gram⁻¹ χ`.
    pub fn t_vector(&self, chi: &[T]) -> Vec<T> {
        self.gram_inv.matvec(chi)
    }

    /// `(a, b) = aᵀ G b` on `𝔞`.
    pub fn scalar(&self, a: &[T], b: &[T]) -> T {
        dot(a, &self.gram.matvec(b))
    }

    /// `α∨ = 2 t_α / ‖t_α‖²`.
    pub fn coroot(&self, alpha: &[T]) -> Vec<T> {
        let t = self.t_vector(alpha);
        let n2 = self.scalar(&t, &t);
        t.iter().map(|&x| T::lit(2.0) * x / n2).collect()
    }

    /// Gram of `a1_basis` under the scalar product.
    pub fn a1_gram(&self) -> &Matrix<T> {
        &self.a1_gram
    }

    /// Gram-orthogonal projection of `v ∈ 𝔞` onto `𝔞₁`, in `a1_basis` coordinates.
    pub fn restrict_to_a1(&self, v: &[T]) -> Vec<T> {
        let b = Matrix::from_cols(&self.a1_basis);
        let rhs = b.transpose().matvec(&self.gram.matvec(v));
        self.a1_gram.solve(&rhs).expect("a1 gram validated at construction")
    }

    /// Restriction of a character (covector) to `𝔞₁`: `Bᵀ χ`.
    pub fn restrict_covector(&self, chi: &[T]) -> Vec<T> {
        self.a1_basis.iter().map(|b| dot(b, chi)).collect()
    }

    /// Expansion of `beta` in simple roots (least squares), with residual norm.
    fn simple_expansion(&self, beta: &[T]) -> Result<Vec<T>> {
        let k = self.simple_roots.len();
        if k == 0 {
            return Err(Error::config("positive roots supplied without simple roots"));
        }
        let a = Matrix::from_cols(&self.simple_roots);
        let at = a.transpose();
        let c = at.matmul(&a).solve(&at.matvec(beta)).ok_or_else(|| Error::config("simple roots are linearly dependent"))?;
        let back = a.matvec(&c);
        let resid = back.iter().zip(beta).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()));
        if resid > loose_tol::<T>() {
            return Err(Error::config("positive root outside the span of the simple roots"));
        }
        Ok(c)
    }

    /// Derive `Φ_P⁺`, `2ρ_P`, coroots, `a_α`, and restrictions to `𝔞₁`.
    pub fn derive(&self, positive_roots: &[Vec<T>]) -> Result<DerivedRoots<T>> {
        let d = self.ambient_dim;
        let mut phi_p_plus = Vec::new();
        let mut expansions = Vec::new();
        for beta in positive_roots {
            if beta.len() != d {
                return Err(Error::config("positive root has wrong dimension"));
            }
            let c = self.simple_expansion(beta)?;
            let tol = loose_tol::<T>();
            if c.iter().any(|&x| x < -tol || (x - x.round()).abs() > tol) {
                return Err(Error::config("positive root is not a nonnegative integer combination of simple roots"));
            }
            let coeffs: Vec<u32> = c.iter().map(|&x| x.round().to_u32().unwrap_or(0)).collect();
            if coeffs.iter().all(|&x| x == 0) {
                return Err(Error::config("zero vector supplied as a root"));
            }
            let outside_i = coeffs.iter().enumerate().any(|(idx, &x)| x > 0 && self.subset_i.binary_search(&idx).is_err());
            if outside_i {
                phi_p_plus.push(beta.clone());
                expansions.push(coeffs);
            }
        }
        for (idx, s) in self.simple_roots.iter().enumerate() {
            let present = positive_roots.iter().any(|b| b.iter().zip(s).all(|(&x, &y)| (x - y).abs() <= loose_tol::<T>()));
            if !present {
                return Err(Error::config(format!("simple root {idx} missing from positive roots")));
            }
        }

        let mut two_rho_p = vec![T::zero(); d];
        for a in &phi_p_plus {
            for (acc, &x) in two_rho_p.iter_mut().zip(a) {
                *acc = *acc + x;
            }
        }
        let coroots: Vec<Vec<T>> = self.simple_roots.iter().map(|a| self.coroot(a)).collect();
        let a_alpha = coroots.iter().map(|cv| dot(&two_rho_p, cv)).collect();
        let phi_coroots: Vec<Vec<T>> = phi_p_plus.iter().map(|a| self.coroot(a)).collect();
        let phi_a_alpha = phi_coroots.iter().map(|cv| dot(&two_rho_p, cv)).collect();
        let shift_s = self.restrict_covector(&two_rho_p).into_iter().map(|x| T::lit(2.0) * x).collect();
        let restricted_roots = phi_p_plus.iter().map(|a| self.restrict_to_a1(&self.t_vector(a))).collect();

        Ok(DerivedRoots {
            manifold_dim_n: self.rank_r + phi_p_plus.len(),
            phi_p_plus,
            expansions,
            two_rho_p,
            coroots,
            a_alpha,
            phi_coroots,
            phi_a_alpha,
            shift_s,
            restricted_roots,
        })
    }
}

/// Quantities derived from a [`RootDatum`] and its positive roots.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedRoots<T> {
    /// Roots of the unipotent radical, `Φ⁺ \ Φ_I⁺`.
    pub phi_p_plus: Vec<Vec<T>>,
    /// Simple-root coefficients of each element of `phi_p_plus`.
    pub expansions: Vec<Vec<u32>>,
    pub two_rho_p: Vec<T>,
    /// `α∨` for each simple root, in `𝔞` coordinates.
    pub coroots: Vec<Vec<T>>,
    /// `⟨2ρ_P, α∨⟩` for each simple root.
    pub a_alpha: Vec<T>,
    /// `α∨` for each element of `phi_p_plus`.
    pub phi_coroots: Vec<Vec<T>>,
    /// `⟨2ρ_P, α∨⟩` for each element of `phi_p_plus`.
    pub phi_a_alpha: Vec<T>,
    /// Covector restriction of `4 t_{ρ_P}` to `𝔞₁`, i.e. `2 Bᵀ(2ρ_P)`.
    pub shift_s: Vec<T>,
    /// `c_α` for each element of `phi_p_plus`.
    pub restricted_roots: Vec<Vec<T>>,
    pub manifold_dim_n: usize,
}

impl<T: Real> DerivedRoots<T> {
    /// Toric data: no roots and zero shift on an `r`-dimensional `𝔞₁`.
    pub fn toric(r: usize) -> Self {
        Self {
            phi_p_plus: Vec::new(),
            expansions: Vec::new(),
            two_rho_p: Vec::new(),
            coroots: Vec::new(),
            a_alpha: Vec::new(),
            phi_coroots: Vec::new(),
            phi_a_alpha: Vec::new(),
            shift_s: vec![T::zero(); r],
            restricted_roots: Vec::new(),
            manifold_dim_n: r,
        }
    }

    pub fn rank_r(&self) -> usize {
        self.shift_s.len()
    }

    /// Covector restriction of `2ρ_P` to `𝔞₁`.
    pub fn two_rho_restricted(&self) -> Vec<T> {
        self.shift_s.iter().map(|&x| x / T::lit(2.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closure of the simple roots under addition of simple roots, using the
    /// Cartan integers (α-string rule). Independent of the classical tables.
    fn closure_by_strings(simple: &[Vec<f64>]) -> usize {
        let k = simple.len();
        let ip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut roots: Vec<Vec<f64>> = simple.to_vec();
        let mut i = 0;
        while i < roots.len() {
            let beta = roots[i].clone();
            for s in simple.iter().take(k) {
                // p = how far beta - s, beta - 2s, ... stays a root; q = p - <beta, s∨>
                let mut p = 0;
                loop {
                    let cand: Vec<f64> = beta.iter().zip(s).map(|(b, x)| b - (p as f64 + 1.0) * x).collect();
                    if roots.iter().any(|r| r.iter().zip(&cand).all(|(a, b)| (a - b).abs() < 1e-9)) {
                        p += 1;
                    } else {
                        break;
                    }
                }
                let q = p as f64 - 2.0 * ip(&beta, s) / ip(s, s);
                if q >= 1.0 {
                    let next: Vec<f64> = beta.iter().zip(s).map(|(b, x)| b + x).collect();
                    if !roots.iter().any(|r| r.iter().zip(&next).all(|(a, b)| (a - b).abs() < 1e-9)) {
                        roots.push(next);
                    }
                }
            }
            i += 1;
        }
        roots.len()
    }

    #[test]
    fn classical_counts() {
        for n in 1..=5 {
            assert_eq!(build_classical_roots::<f64>(RootFamily::A, n).unwrap().len(), n * (n + 1) / 2);
            assert_eq!(build_classical_roots::<f64>(RootFamily::B, n).unwrap().len(), n * n);
            assert_eq!(build_classical_roots::<f64>(RootFamily::C, n).unwrap().len(), n * n);
        }
        for n in 2..=5 {
            assert_eq!(build_classical_roots::<f64>(RootFamily::D, n).unwrap().len(), n * (n - 1));
        }
        assert_eq!(build_classical_roots::<f64>(RootFamily::G2, 2).unwrap().len(), 6);
        assert!(build_classical_roots::<f64>(RootFamily::D, 1).is_err());
        assert!(build_classical_roots::<f64>(RootFamily::G2, 3).is_err());
        assert!(build_classical_roots::<f64>(RootFamily::A, 0).is_err());
    }

    #[test]
    fn a1_and_a2_match_string_closure() {
        let a1 = build_classical_roots::<f64>(RootFamily::A, 1).unwrap();
        assert_eq!(a1.len(), 1);
        assert!((a1[0].iter().map(|x| x * x).sum::<f64>() - 2.0).abs() < 1e-15);
        for (fam, n) in
            [(RootFamily::A, 2), (RootFamily::A, 3), (RootFamily::B, 3), (RootFamily::C, 3), (RootFamily::D, 4), (RootFamily::G2, 2)]
        {
            let simple = classical_simple_roots::<f64>(fam, n).unwrap();
            let table = build_classical_roots::<f64>(fam, n).unwrap();
            assert_eq!(closure_by_strings(&simple), table.len(), "{fam:?}{n}");
        }
        let a2 = build_classical_roots::<f64>(RootFamily::A, 2).unwrap();
        let s = classical_simple_roots::<f64>(RootFamily::A, 2).unwrap();
        let sum: Vec<f64> = s[0].iter().zip(&s[1]).map(|(a, b)| a + b).collect();
        assert!(a2.contains(&s[0]) && a2.contains(&s[1]) && a2.contains(&sum));
    }

    #[test]
    fn b2_square_lengths() {
        let b2 = build_classical_roots::<f64>(RootFamily::B, 2).unwrap();
        let mut lens: Vec<f64> = b2.iter().map(|r| r.iter().map(|x| x * x).sum()).collect();
        lens.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(lens, vec![1.0, 1.0, 2.0, 2.0]);
    }

    /// Simple-root coordinates with the Cartan-form gram: the inverse gram is
    /// the matrix of scalar products `(α_i, α_j)`.
    fn a2_cartan_datum(subset: Vec<usize>) -> RootDatum<f64> {
        let cartan_form = Matrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let gram = cartan_form.inverse().unwrap();
        RootDatum::new(gram, vec![vec![1.0, 0.0], vec![0.0, 1.0]], subset, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn a1_empty_subset() {
        let datum = RootDatum::new(Matrix::<f64>::from_rows(&[vec![0.5]]), vec![vec![1.0]], vec![], vec![vec![1.0]]).unwrap();
        let d = datum.derive(&[vec![1.0]]).unwrap();
        assert_eq!(d.phi_p_plus, vec![vec![1.0]]);
        assert_eq!(d.two_rho_p, vec![1.0]);
        // gram 1/2 ⇒ t_α = 2α, ‖t_α‖² = 2 ⇒ α∨ = 2α.
        assert!((d.coroots[0][0] - 2.0).abs() < 1e-15);
        assert!((d.a_alpha[0] - 2.0).abs() < 1e-15);
        assert_eq!(d.manifold_dim_n, 2);
    }

    #[test]
    fn a2_empty_subset() {
        let datum = a2_cartan_datum(vec![]);
        let d = datum.derive(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(d.two_rho_p, vec![2.0, 2.0]);
        // oracle: ⟨2α₁+2α₂, α₁∨⟩ = 2·2 + 2·(−1) via the Cartan matrix.
        let cartan = [[2.0, -1.0], [-1.0, 2.0]];
        for (i, a) in d.a_alpha.iter().enumerate() {
            let oracle: f64 = (0..2).map(|j| 2.0 * cartan[j][i]).sum();
            assert!((a - oracle).abs() < 1e-12 && (a - 2.0).abs() < 1e-12);
        }
        for (s, cv) in datum.simple_roots.iter().zip(&d.coroots) {
            assert!((dot(s, cv) - 2.0).abs() < 1e-12);
        }
        assert_eq!(d.manifold_dim_n, 2 + 3);
    }

    #[test]
    fn full_subset_is_toric() {
        let datum = a2_cartan_datum(vec![0, 1]);
        let d = datum.derive(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(d.phi_p_plus.is_empty());
        assert_eq!(d.two_rho_p, vec![0.0, 0.0]);
        assert_eq!(d.shift_s, vec![0.0, 0.0]);
    }

    #[test]
    fn partial_subset_selects_roots_outside_levi() {
        let datum = a2_cartan_datum(vec![0]);
        let d = datum.derive(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(d.phi_p_plus, vec![vec![0.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(d.two_rho_p, vec![1.0, 2.0]);
        let sum: Vec<f64> = (0..2).map(|j| d.phi_p_plus.iter().map(|a| a[j]).sum()).collect();
        assert_eq!(sum, d.two_rho_p);
    }

    #[test]
    fn shift_two_paths_agree() {
        let datum = RootDatum::classical(RootFamily::B, 2, vec![1]).unwrap();
        let pos = build_classical_roots::<f64>(RootFamily::B, 2).unwrap();
        let d = datum.derive(&pos).unwrap();
        // vector route: restrict 4 t_ρ = 2 t_{2ρ}, then lower the index with the 𝔞₁ gram.
        let t = datum.t_vector(&d.two_rho_p);
        let v = datum.restrict_to_a1(&t.iter().map(|x| 2.0 * x).collect::<Vec<_>>());
        let lowered = datum.a1_gram().matvec(&v);
        for (a, b) in lowered.iter().zip(&d.shift_s) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_examples() {
        let gram = Matrix::<f64>::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.0], vec![0.0, 0.0, 3.0]]);
        let datum = RootDatum::new(gram, vec![], vec![], vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let v = vec![0.3, -1.2, 0.0];
        let c = datum.restrict_to_a1(&v);
        assert!((c[0] - 0.3).abs() < 1e-14 && (c[1] + 1.2).abs() < 1e-14);
        let orth = datum.restrict_to_a1(&[0.0, 0.0, 1.0]);
        assert!(orth.iter().all(|x| x.abs() < 1e-15));
        let id = RootDatum::new(Matrix::<f64>::identity(2), vec![], vec![], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(id.restrict_to_a1(&[4.0, -2.0]), vec![4.0, -2.0]);
    }

    #[test]
    fn validation_errors() {
        let bad_gram = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(RootDatum::new(bad_gram, vec![], vec![], vec![vec![1.0, 0.0]]).is_err());
        let dep = RootDatum::new(Matrix::<f64>::identity(2), vec![vec![1.0, 1.0], vec![2.0, 2.0]], vec![], vec![vec![1.0, 0.0]]);
        assert!(dep.is_err());
        let bad_i = RootDatum::new(Matrix::<f64>::identity(1), vec![vec![1.0]], vec![3], vec![vec![1.0]]);
        assert!(bad_i.is_err());
        let bad_a1 = RootDatum::new(Matrix::<f64>::identity(2), vec![], vec![], vec![vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert!(bad_a1.is_err());
    }

    #[test]
    fn derive_is_deterministic_and_generic() {
        let datum = RootDatum::<f32>::classical(RootFamily::A, 3, vec![0]).unwrap();
        let pos = build_classical_roots::<f32>(RootFamily::A, 3).unwrap();
        let a = datum.derive(&pos).unwrap();
        let b = datum.derive(&pos).unwrap();
        assert_eq!(a, b);
        for (s, cv) in datum.simple_roots.iter().zip(&a.coroots) {
            assert!((dot(s, cv) - 2.0).abs() < 1e-5);
        }
    }
}
