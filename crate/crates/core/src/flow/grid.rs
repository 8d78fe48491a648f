use crate::error::{Error, Result};
use crate::real::Real;

/// Uniform tensor grid on `[−R, R]ʳ` with `N` points per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub dim: usize,
    pub points_per_axis: usize,
    pub half_width: T,
    pub spacing: T,
}

impl<T: Real> Grid<T> {
    pub fn new(dim: usize, half_width: T, points_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::config(format!("grid dimension must be 1, 2 or 3 (got {dim})")));
        }
        if points_per_axis < 5 {
            return Err(Error::config("points_per_axis must be at least 5"));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::config("half_width must be positive"));
        }
        let spacing = T::lit(2.0) * half_width / T::from_usize_lossy(points_per_axis - 1);
        Ok(Self { dim, points_per_axis, half_width, spacing })
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat-index stride of `axis` (the last axis is contiguous).
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dim - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut m = [0; 3];
        for axis in (0..self.dim).rev() {
            m[axis] = idx % n;
            idx /= n;
        }
        m
    }

    pub fn flat_index(&self, m: &[usize]) -> usize {
        m[..self.dim].iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    pub fn axis_coord(&self, i: usize) -> T {
        -self.half_width + T::from_usize_lossy(i) * self.spacing
    }

    pub fn coords(&self, idx: usize) -> Vec<T> {
        let m = self.multi_index(idx);
        (0..self.dim).map(|a| self.axis_coord(m[a])).collect()
    }

    /// Whether the node lies on the boundary of the box.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        m[..self.dim].iter().any(|&i| i == 0 || i + 1 == self.points_per_axis)
    }

    /// Trapezoid-rule weight of a node.
    pub fn weight(&self, idx: usize) -> T {
        let m = self.multi_index(idx);
        let half = T::lit(0.5);
        m[..self.dim].iter().fold(T::one(), |w, &i| {
            let edge = i == 0 || i + 1 == self.points_per_axis;
            w * self.spacing * if edge { half } else { T::one() }
        })
    }

    /// Trapezoid-rule integral of node values.
    pub fn integrate(&self, values: &[T]) -> T {
        let terms: Vec<T> = values.iter().enumerate().map(|(i, &v)| v * self.weight(i)).collect();
        tree_sum(&terms)
    }

    /// Nearest node to a point (clamped into the box).
    pub fn nearest(&self, x: &[T]) -> usize {
        let m: Vec<usize> = x
            .iter()
            .map(|&c| {
                let f = ((c + self.half_width) / self.spacing).round();
                let f = f.max(T::zero()).min(T::from_usize_lossy(self.points_per_axis - 1));
                f.to_usize().unwrap_or(0)
            })
            .collect();
        self.flat_index(&m)
    }
}

/// Deterministic pairwise summation.
pub fn tree_sum<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        2..=16 => xs.iter().fold(T::zero(), |a, &b| a + b),
        n => tree_sum(&xs[..n / 2]) + tree_sum(&xs[n / 2..]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let g = Grid::<f64>::new(3, 2.0, 5).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(idx)), idx);
        }
        assert_eq!(g.stride(0), 25);
        assert_eq!(g.coords(0), vec![-2.0, -2.0, -2.0]);
        assert_eq!(g.coords(g.len() - 1), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let g = Grid::<f64>::new(2, 1.0, 11).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| 1.0 + g.coords(i)[0] + 2.0 * g.coords(i)[1]).collect();
        assert!((g.integrate(&vals) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::<f64>::new(1, 1.0, 4).is_err());
        assert!(Grid::<f64>::new(4, 1.0, 9).is_err());
        assert!(Grid::<f64>::new(1, -1.0, 9).is_err());
    }
}
