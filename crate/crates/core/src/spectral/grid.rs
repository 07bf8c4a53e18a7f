use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ObsError, Result};
use crate::scalar::Real;

/// Periodic box `⨉ [−Lᵢ/2, Lᵢ/2)` sampled with `Nᵢ` points per axis.
///
/// Spatial lattice `x_j = −L/2 + j·dx`; frequency lattice `ξ_k = 2πk/L` with
/// `k ∈ {−N/2, …, N/2−1}` stored in FFT order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    shape: Vec<usize>,
    lengths: Vec<T>,
}

impl<T: Real> GridSpec<T> {
    pub fn new(shape: Vec<usize>, lengths: Vec<T>) -> Result<Self> {
        let d = shape.len();
        if !(1..=3).contains(&d) {
            return Err(invalid("d", format!("dimension must be 1..=3, got {d}")));
        }
        if lengths.len() != d {
            return Err(invalid("box", "one period per axis required"));
        }
        for &n in &shape {
            if n < 8 || !n.is_power_of_two() {
                return Err(invalid("N", format!("must be a power of two >= 8, got {n}")));
            }
        }
        for &l in &lengths {
            if !(l > T::zero()) || !l.is_finite() {
                return Err(invalid("box", format!("period must be finite and > 0, got {l}")));
            }
        }
        Ok(GridSpec { shape, lengths })
    }

    /// Same `n` and period on every axis.
    pub fn cubic(dim: usize, n: usize, length: T) -> Result<Self> {
        Self::new(vec![n; dim], vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    /// Total number of lattice points.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> T {
        self.lengths[axis] / T::from_usize_lossy(self.shape[axis])
    }

    /// `∏ dxᵢ`.
    pub fn cell_volume(&self) -> T {
        (0..self.dim()).fold(T::one(), |acc, a| acc * self.spacing(a))
    }

    pub fn volume(&self) -> T {
        self.lengths.iter().fold(T::one(), |acc, &l| acc * l)
    }

    pub fn coord(&self, axis: usize, idx: usize) -> T {
        -self.lengths[axis] / T::lit(2.0) + T::from_usize_lossy(idx) * self.spacing(axis)
    }

    /// Signed wavenumber index of FFT slot `idx`.
    pub fn wavenumber(&self, axis: usize, idx: usize) -> i64 {
        let n = self.shape[axis] as i64;
        let k = idx as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn frequency(&self, axis: usize, idx: usize) -> T {
        let k = self.wavenumber(axis, idx) as f64;
        T::lit(2.0 * k) * T::PI() / self.lengths[axis]
    }

    /// Frequency spacing `2π/Lᵢ`.
    pub fn frequency_spacing(&self, axis: usize) -> T {
        T::lit(2.0) * T::PI() / self.lengths[axis]
    }

    /// Largest resolvable `|ξᵢ| = πNᵢ/Lᵢ` along `axis`.
    pub fn nyquist(&self, axis: usize) -> T {
        T::PI() * T::from_usize_lossy(self.shape[axis]) / self.lengths[axis]
    }

    /// Smallest per-axis Nyquist frequency.
    pub fn min_nyquist(&self) -> T {
        (0..self.dim())
            .map(|a| self.nyquist(a))
            .fold(T::infinity(), |a, b| a.min(b))
    }

    /// Row-major multi-index of a flat position (last axis fastest).
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.dim()).rev() {
            out[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
        out
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0usize, |acc, (&i, &n)| acc * n + i)
    }

    /// Spatial coordinates of flat position `flat`.
    pub fn point(&self, flat: usize) -> [T; 3] {
        let idx = self.unravel(flat);
        let mut x = [T::zero(); 3];
        for a in 0..self.dim() {
            x[a] = self.coord(a, idx[a]);
        }
        x
    }

    pub fn frequency_point(&self, flat: usize) -> [T; 3] {
        let idx = self.unravel(flat);
        let mut xi = [T::zero(); 3];
        for a in 0..self.dim() {
            xi[a] = self.frequency(a, idx[a]);
        }
        xi
    }

    pub fn ensure_same(&self, other: &GridSpec<T>) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(ObsError::GridMismatch(format!(
                "{:?} x {:?} vs {:?} x {:?}",
                self.shape, self.lengths, other.shape, other.lengths
            )))
        }
    }
}

/// Complex samples on the spatial lattice of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: GridSpec<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> Field<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ObsError::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(ObsError::Format("field contains non-finite samples".into()));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: &GridSpec<T>) -> Self {
        Field {
            values: vec![Complex::new(T::zero(), T::zero()); grid.len()],
            grid: grid.clone(),
        }
    }

    /// Samples `f(x)` at every lattice point.
    pub fn from_fn(grid: &GridSpec<T>, f: impl Fn(&[T]) -> Complex<T>) -> Self {
        let d = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..d])
            })
            .collect();
        Field {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_parts_unchecked(grid: GridSpec<T>, values: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == T::zero() && v.im == T::zero())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// `self + s·other`.
    pub fn axpy(&mut self, s: T, other: &Field<T>) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + *b * s;
        }
        Ok(())
    }

    pub fn scaled(&self, s: T) -> Field<T> {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| *v * s).collect(),
        }
    }

    /// `L₂` inner product `Σ conj(f) g dx^d`.
    pub fn inner(&self, other: &Field<T>) -> Complex<T> {
        let dv = self.grid.cell_volume();
        let s = self
            .values
            .iter()
            .zip(&other.values)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b);
        s * dv
    }
}
