//! A C¹ path through points sampled at integer times: piecewise linear,
//! with each corner at an interior integer `i` replaced on `[i − δ, i + δ]`
//! by the cubic Hermite blend matching the linear pieces' values and slopes.

use crate::error::{Error, Result};
use crate::real::Real;

/// Cubic `P(τ) = a τ³ + b τ² + c τ + d` per coordinate on `τ ∈ [0, 1]`,
/// used as `f_i(t) = P((t − (i − δ)) / 2δ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteBlock<T> {
    pub center: usize,
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
    pub d: Vec<T>,
}

impl<T: Real> HermiteBlock<T> {
    /// From the endpoint values `x0 = x'(i − δ)`, `x1 = x'(i + δ)` and slopes `d0`, `d1`.
    pub fn new(center: usize, delta: T, x0: &[T], x1: &[T], d0: &[T], d1: &[T]) -> Self {
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let tdelta = two * delta;
        let r = x0.len();
        let mut blk =
            Self { center, a: Vec::with_capacity(r), b: Vec::with_capacity(r), c: Vec::with_capacity(r), d: Vec::with_capacity(r) };
        for j in 0..r {
            let dx = x1[j] - x0[j];
            blk.a.push(-two * dx + tdelta * (d0[j] + d1[j]));
            blk.b.push(three * dx - tdelta * (two * d0[j] + d1[j]));
            blk.c.push(tdelta * d0[j]);
            blk.d.push(x0[j]);
        }
        blk
    }

    pub fn eval(&self, tau: T) -> Vec<T> {
        (0..self.a.len()).map(|j| ((self.a[j] * tau + self.b[j]) * tau + self.c[j]) * tau + self.d[j]).collect()
    }

    /// `dP/dτ`.
    pub fn eval_deriv(&self, tau: T) -> Vec<T> {
        let (two, three) = (T::lit(2.0), T::lit(3.0));
        (0..self.a.len()).map(|j| (three * self.a[j] * tau + two * self.b[j]) * tau + self.c[j]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedPath<T> {
    /// `x_i` at `t = i`.
    pub samples: Vec<Vec<T>>,
    pub delta: T,
    /// One block per interior integer `1 ≤ i ≤ len − 2`.
    pub blocks: Vec<HermiteBlock<T>>,
}

impl<T: Real> SmoothedPath<T> {
    pub fn new(samples: Vec<Vec<T>>, delta: T) -> Result<Self> {
        if !(delta > T::zero() && delta < T::lit(0.25)) {
            return Err(Error::config("smoothing delta must lie in (0, 1/4)"));
        }
        if samples.len() < 2 {
            return Err(Error::config("smoothed path needs at least two samples"));
        }
        let mut path = Self { samples, delta, blocks: Vec::new() };
        for i in 1..path.samples.len() - 1 {
            let x0 = path.linear(T::from_usize_lossy(i) - delta);
            let x1 = path.linear(T::from_usize_lossy(i) + delta);
            let d0 = path.slope(i - 1);
            let d1 = path.slope(i);
            path.blocks.push(HermiteBlock::new(i, delta, &x0, &x1, &d0, &d1));
        }
        Ok(path)
    }

    /// Last sample time.
    pub fn end(&self) -> T {
        T::from_usize_lossy(self.samples.len() - 1)
    }

    fn slope(&self, i: usize) -> Vec<T> {
        self.samples[i + 1].iter().zip(&self.samples[i]).map(|(&a, &b)| a - b).collect()
    }

    /// The unsmoothed piecewise-linear interpolant (constant outside `[0, end]`).
    pub fn linear(&self, t: T) -> Vec<T> {
        if t <= T::zero() {
            return self.samples[0].clone();
        }
        if t >= self.end() {
            return self.samples.last().unwrap().clone();
        }
        let i = t.floor().to_usize().unwrap().min(self.samples.len() - 2);
        let eps = t - T::from_usize_lossy(i);
        self.samples[i].iter().zip(&self.samples[i + 1]).map(|(&a, &b)| (T::one() - eps) * a + eps * b).collect()
    }

    fn block_at(&self, t: T) -> Option<(&HermiteBlock<T>, T)> {
        let i = t.round().to_usize()?;
        if i == 0 || i + 1 >= self.samples.len() {
            return None;
        }
        let lo = T::from_usize_lossy(i) - self.delta;
        if t < lo || t > T::from_usize_lossy(i) + self.delta {
            return None;
        }
        Some((&self.blocks[i - 1], (t - lo) / (T::lit(2.0) * self.delta)))
    }

    /// `x'_t`.
    pub fn value(&self, t: T) -> Vec<T> {
        match self.block_at(t) {
            Some((blk, tau)) => blk.eval(tau),
            None => self.linear(t),
        }
    }

    /// `dx'_t/dt` (zero outside `[0, end]`).
    pub fn derivative(&self, t: T) -> Vec<T> {
        let r = self.samples[0].len();
        if let Some((blk, tau)) = self.block_at(t) {
            let s = T::one() / (T::lit(2.0) * self.delta);
            return blk.eval_deriv(tau).into_iter().map(|x| x * s).collect();
        }
        if t < T::zero() || t >= self.end() {
            return vec![T::zero(); r];
        }
        let i = t.floor().to_usize().unwrap().min(self.samples.len() - 2);
        self.slope(i)
    }

    /// Largest `|x_{i+1} − x_i|`.
    pub fn max_gap(&self) -> T {
        (0..self.samples.len() - 1).map(|i| crate::linalg::norm(&self.slope(i))).fold(T::zero(), |a, b| a.max(b))
    }

    /// Upper bound for `|dx'/dt|` from the block coefficients and the linear slopes.
    pub fn derivative_bound(&self) -> T {
        let two = T::lit(2.0);
        let s = T::one() / (two * self.delta);
        let blocks = self.blocks.iter().map(|b| {
            let mut sq = T::zero();
            for j in 0..b.a.len() {
                let m = T::lit(3.0) * b.a[j].abs() + two * b.b[j].abs() + b.c[j].abs();
                sq = sq + m * m;
            }
            sq.sqrt() * s
        });
        blocks.fold(self.max_gap(), |a, b| a.max(b))
    }
}

/// Online version of the smoothed path: `x'_t = S(t − lag)` where `S` is the
/// smoothed path of the integer-time samples seen so far and `lag = 1 + δ`,
/// so every value needed at time `t` is already known.
#[derive(Clone, Debug, PartialEq)]
pub struct LaggedPath<T> {
    pub delta: T,
    pub samples: Vec<Vec<T>>,
    path: Option<SmoothedPath<T>>,
}

impl<T: Real> LaggedPath<T> {
    pub fn new(delta: T) -> Result<Self> {
        if !(delta > T::zero() && delta < T::lit(0.25)) {
            return Err(Error::config("smoothing delta must lie in (0, 1/4)"));
        }
        Ok(Self { delta, samples: Vec::new(), path: None })
    }

    pub fn lag(&self) -> T {
        T::one() + self.delta
    }

    pub fn push(&mut self, x: Vec<T>) {
        self.samples.push(x);
        if self.samples.len() >= 2 {
            self.path = Some(SmoothedPath::new(self.samples.clone(), self.delta).expect("delta validated"));
        }
    }

    pub fn value(&self, t: T) -> Option<Vec<T>> {
        let first = self.samples.first()?;
        Some(match &self.path {
            Some(p) => p.value(t - self.lag()),
            None => first.clone(),
        })
    }

    pub fn derivative(&self, t: T) -> Option<Vec<T>> {
        let first = self.samples.first()?;
        Some(match &self.path {
            Some(p) => p.derivative(t - self.lag()),
            None => vec![T::zero(); first.len()],
        })
    }

    pub fn smoothed(&self) -> Option<&SmoothedPath<T>> {
        self.path.as_ref()
    }
}
