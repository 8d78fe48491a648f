use crate::error::{Error, Result};
use crate::real::Real;

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored by rows.
#[derive(Clone, Debug)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![T::zero(); n * (kl + ku + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn pos(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside band");
        i * self.width() + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if j + self.kl < i || j > i + self.ku {
            T::zero()
        } else {
            self.data[self.pos(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let p = self.pos(i, j);
        self.data[p] = self.data[p] + v;
    }

    /// Mutable view of row `i` restricted to the band, with the column of its first entry.
    pub fn row_mut(&mut self, i: usize) -> (usize, &mut [T]) {
        let w = self.width();
        let first = i.saturating_sub(self.kl);
        let skip = first + self.kl - i;
        (first, &mut self.data[i * w + skip..(i + 1) * w])
    }

    /// LU factorization in place without pivoting.
    pub fn factor(mut self) -> Result<BandLu<T>> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width());
        for k in 0..n {
            let pivot = self.data[k * w + kl];
            let row_scale = self.data[k * w..(k + 1) * w].iter().fold(T::zero(), |m, &x| m.max(x.abs()));
            if !(pivot.abs() > row_scale * T::epsilon() * T::lit(16.0)) {
                return Err(Error::numerical(format!("zero pivot at row {k} in band factorization")));
            }
            let jend = (k + ku + 1).min(n);
            for i in k + 1..(k + kl + 1).min(n) {
                let lik_pos = i * w + (k + kl - i);
                let l = self.data[lik_pos] / pivot;
                self.data[lik_pos] = l;
                if l == T::zero() {
                    continue;
                }
                let (top, bottom) = self.data.split_at_mut(i * w);
                let krow = &top[k * w + kl + 1..k * w + kl + 1 + (jend - k - 1)];
                let irow = &mut bottom[(k + 1 + kl - i)..(k + 1 + kl - i) + (jend - k - 1)];
                for (a, &b) in irow.iter_mut().zip(krow) {
                    *a = *a - l * b;
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

/// Factors of a [`BandMatrix`] (unit lower triangle and upper triangle share storage).
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    m: BandMatrix<T>,
}

impl<T: Real> BandLu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let (n, kl, ku) = (self.m.n, self.m.kl, self.m.ku);
        let w = self.m.width();
        let d = &self.m.data;
        let mut y = b.to_vec();
        for i in 0..n {
            let j0 = i.saturating_sub(kl);
            let mut s = y[i];
            for j in j0..i {
                s = s - d[i * w + (j + kl - i)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..(i + ku + 1).min(n) {
                s = s - d[i * w + (j + kl - i)] * y[j];
            }
            y[i] = s / d[i * w + kl];
        }
        y
    }
}
