//! Fourier-multiplier backend on a periodic box approximating `ℝ^d`.
//!
//! The continuum transform is the unitary one with angular frequency,
//! `𝔉f(ξ) = (2π)^{−d/2} ∫ f(x) e^{−iξ·x} dx`. [`Simulator::to_spectrum`] and
//! [`Simulator::from_spectrum`] approximate it with the scaling `dx^d/(2π)^{d/2}`
//! and `dξ^d/(2π)^{d/2}` so that kernel formulas hold as written. Pure
//! multipliers bypass the scaling since it cancels.

mod grid;
pub mod io;
mod symbol;

use std::sync::Arc;

use num_complex::Complex;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

pub use grid::{Field, GridSpec};
pub use symbol::{ellipticity_constant, EllipticSymbol, SymbolTerm};

use crate::cert_engine::LpIndex;
use crate::error::{invalid, ObsError, Result};
use crate::scalar::Real;

/// Smooth cutoff: 1 on `[0, 1/2]`, 0 on `[1, ∞)`, and
/// `φ(1−u)/(φ(1−u)+φ(u))` with `u = 2r−1`, `φ(s) = e^{−1/s}` in between.
pub fn cutoff_eta<T: Real>(r: T) -> T {
    let half = T::lit(0.5);
    if r <= half {
        return T::one();
    }
    if r >= T::one() {
        return T::zero();
    }
    let phi = |s: T| if s > T::zero() { (-T::one() / s).exp() } else { T::zero() };
    let u = T::lit(2.0) * r - T::one();
    let a = phi(T::one() - u);
    let b = phi(u);
    a / (a + b)
}

/// Symbol values `a(ξ_k)` on the frequency lattice, in FFT order.
#[derive(Clone, Debug)]
pub struct SymbolTable<T> {
    values: Vec<Complex<T>>,
}

impl<T: Real> SymbolTable<T> {
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn conjugate(&self) -> Self {
        SymbolTable {
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }
}

/// Test-vector families for [`Simulator::sample_field`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind<T> {
    /// i.i.d. standard normal real samples.
    White,
    /// White noise with every mode `|ξ| > λ` removed.
    BandLimited { lambda: T },
    /// `e^{−|x−x₀|²/(4s)}`.
    GaussianBump { s: T, center: Vec<T> },
}

/// FFT plans and frequency tables for one grid.
///
/// Plans are shared (`Arc`) and immutable; every transform allocates its own
/// scratch, so a simulator can be used from several threads at once.
pub struct Simulator<T: Real> {
    grid: GridSpec<T>,
    forward: Vec<Arc<dyn Fft<T>>>,
    inverse: Vec<Arc<dyn Fft<T>>>,
    xi: Vec<[T; 3]>,
    xi_norm: Vec<T>,
}

impl<T: Real> Simulator<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.shape().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.shape().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let xi: Vec<[T; 3]> = (0..grid.len()).map(|i| grid.frequency_point(i)).collect();
        let xi_norm = xi
            .iter()
            .map(|x| x.iter().fold(T::zero(), |s, &v| s + v * v).sqrt())
            .collect();
        Simulator {
            grid,
            forward,
            inverse,
            xi,
            xi_norm,
        }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    /// `|ξ_k|` in FFT order.
    pub fn frequency_norms(&self) -> &[T] {
        &self.xi_norm
    }

    pub fn frequencies(&self) -> &[[T; 3]] {
        &self.xi
    }

    fn transform(&self, data: &mut [Complex<T>], inverse: bool) {
        let shape = self.grid.shape();
        let d = shape.len();
        let plans = if inverse { &self.inverse } else { &self.forward };
        for axis in 0..d {
            let n = shape[axis];
            let stride: usize = shape[axis + 1..].iter().product();
            let outer: usize = shape[..axis].iter().product();
            let plan = &plans[axis];
            let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
            if stride == 1 {
                for line in data.chunks_exact_mut(n) {
                    plan.process_with_scratch(line, &mut scratch);
                }
                continue;
            }
            let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for (j, b) in buf.iter_mut().enumerate() {
                        *b = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut buf, &mut scratch);
                    for (j, b) in buf.iter().enumerate() {
                        data[base + j * stride] = *b;
                    }
                }
            }
        }
    }

    fn check_grid(&self, f: &Field<T>) -> Result<()> {
        self.grid.ensure_same(f.grid())
    }

    /// `(−1)^{Σkᵢ}`: phase of the lattice offset `x₀ = −L/2`.
    fn offset_phase(&self, flat: usize) -> T {
        let idx = self.grid.unravel(flat);
        let parity: usize = idx[..self.grid.dim()].iter().sum();
        if parity.is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        }
    }

    /// Continuum-scaled transform `𝔉f(ξ_k)` in FFT order.
    pub fn to_spectrum(&self, f: &Field<T>) -> Result<Vec<Complex<T>>> {
        self.check_grid(f)?;
        let mut data = f.values().to_vec();
        self.transform(&mut data, false);
        let d = self.grid.dim() as i32;
        let scale = self.grid.cell_volume() / (T::lit(2.0) * T::PI()).powi(d).sqrt();
        for (i, v) in data.iter_mut().enumerate() {
            *v = *v * (scale * self.offset_phase(i));
        }
        Ok(data)
    }

    /// Inverse of [`Simulator::to_spectrum`].
    pub fn from_spectrum(&self, spectrum: Vec<Complex<T>>) -> Result<Field<T>> {
        if spectrum.len() != self.grid.len() {
            return Err(ObsError::GridMismatch("spectrum length".into()));
        }
        let mut data = spectrum;
        let d = self.grid.dim();
        let dxi = (0..d).fold(T::one(), |acc, a| acc * self.grid.frequency_spacing(a));
        let scale = dxi / (T::lit(2.0) * T::PI()).powi(d as i32).sqrt();
        for (i, v) in data.iter_mut().enumerate() {
            *v = *v * self.offset_phase(i);
        }
        self.transform(&mut data, true);
        for v in data.iter_mut() {
            *v = *v * scale;
        }
        Ok(Field::from_parts_unchecked(self.grid.clone(), data))
    }

    /// `𝔉⁻¹ m 𝔉 f` for a multiplier given per FFT slot.
    pub fn apply_multiplier(&self, f: &Field<T>, m: impl Fn(usize) -> Complex<T>) -> Result<Field<T>> {
        self.check_grid(f)?;
        let mut data = f.values().to_vec();
        self.transform(&mut data, false);
        for (i, v) in data.iter_mut().enumerate() {
            *v = *v * m(i);
        }
        self.transform(&mut data, true);
        let inv_n = T::one() / T::from_usize_lossy(self.grid.len());
        for v in data.iter_mut() {
            *v = *v * inv_n;
        }
        Ok(Field::from_parts_unchecked(self.grid.clone(), data))
    }

    pub fn tabulate(&self, symbol: &EllipticSymbol<T>) -> Result<SymbolTable<T>> {
        if symbol.dim() != self.grid.dim() {
            return Err(ObsError::GridMismatch(format!(
                "symbol in dimension {} on a {}-dimensional grid",
                symbol.dim(),
                self.grid.dim()
            )));
        }
        let d = self.grid.dim();
        Ok(SymbolTable {
            values: self.xi.iter().map(|x| symbol.eval(&x[..d])).collect(),
        })
    }

    /// `S_t f = 𝔉⁻¹ e^{−t a} 𝔉 f`. `t = 0` returns `f` unchanged.
    pub fn semigroup_apply(&self, symbol: &EllipticSymbol<T>, t: T, f: &Field<T>) -> Result<Field<T>> {
        let table = self.tabulate(symbol)?;
        self.semigroup_apply_table(&table, t, f)
    }

    pub fn semigroup_apply_table(&self, table: &SymbolTable<T>, t: T, f: &Field<T>) -> Result<Field<T>> {
        if !(t >= T::zero()) || !t.is_finite() {
            return Err(invalid("t", format!("time must be finite and >= 0, got {t}")));
        }
        self.check_grid(f)?;
        if t == T::zero() {
            return Ok(f.clone());
        }
        self.apply_multiplier(f, |i| (-table.values[i] * t).exp())
    }

    /// `P_λ f = 𝔉⁻¹ χ_λ 𝔉 f` with `χ_λ(ξ) = η(|ξ|/λ)`.
    pub fn projector_apply(&self, lambda: T, f: &Field<T>) -> Result<Field<T>> {
        if !(lambda > T::zero()) {
            return Err(invalid("lambda", format!("cutoff must be > 0, got {lambda}")));
        }
        self.apply_multiplier(f, |i| Complex::new(cutoff_eta(self.xi_norm[i] / lambda), T::zero()))
    }

    /// Heat-type kernel `p_t = (2π)^{−d/2} 𝔉⁻¹ e^{−t a}` sampled on the grid.
    pub fn kernel_field(&self, symbol: &EllipticSymbol<T>, t: T) -> Result<Field<T>> {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(invalid("t", format!("kernel needs t > 0, got {t}")));
        }
        let table = self.tabulate(symbol)?;
        let d = self.grid.dim() as i32;
        let norm = T::one() / (T::lit(2.0) * T::PI()).powi(d).sqrt();
        let spectrum = table.values.iter().map(|a| (-*a * t).exp() * norm).collect();
        self.from_spectrum(spectrum)
    }

    /// `(2π)^{−d/2} ‖𝔉⁻¹ χ_λ‖_{L₁}`.
    pub fn cutoff_kernel_l1(&self, lambda: T) -> Result<T> {
        if !(lambda > T::zero()) {
            return Err(invalid("lambda", "cutoff must be > 0"));
        }
        let spectrum = self
            .xi_norm
            .iter()
            .map(|&r| Complex::new(cutoff_eta(r / lambda), T::zero()))
            .collect();
        let g = self.from_spectrum(spectrum)?;
        let d = self.grid.dim() as i32;
        Ok(lp_norm(&g, LpIndex::Finite(T::one()))? / (T::lit(2.0) * T::PI()).powi(d).sqrt())
    }

    /// Deterministic test fields; see [`FieldKind`].
    pub fn sample_field(&self, kind: &FieldKind<T>, seed: u64) -> Result<Field<T>> {
        match kind {
            FieldKind::White => Ok(white_noise(&self.grid, seed)),
            FieldKind::BandLimited { lambda } => {
                if !(*lambda > T::zero()) {
                    return Err(invalid("lambda", "band limit must be > 0"));
                }
                let w = white_noise(&self.grid, seed);
                let lambda = *lambda;
                self.apply_multiplier(&w, |i| {
                    if self.xi_norm[i] <= lambda {
                        Complex::new(T::one(), T::zero())
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
            }
            FieldKind::GaussianBump { s, center } => {
                if center.len() != self.grid.dim() {
                    return Err(invalid("center", "one coordinate per axis required"));
                }
                if !(*s > T::zero()) {
                    return Err(invalid("s", "bump width must be > 0"));
                }
                let four_s = T::lit(4.0) * *s;
                Ok(Field::from_fn(&self.grid, |x| {
                    let r2 = x
                        .iter()
                        .zip(center)
                        .fold(T::zero(), |acc, (&a, &c)| acc + (a - c) * (a - c));
                    Complex::new((-r2 / four_s).exp(), T::zero())
                }))
            }
        }
    }
}

/// Seed for sub-stream `stream` of `master`: the first word of ChaCha8 seeded
/// with `master` and switched to stream `stream`. Every per-sample RNG in the
/// toolkit is derived this way.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Real standard-normal samples from a ChaCha8 stream seeded with `seed`.
pub fn white_noise<T: Real>(grid: &GridSpec<T>, seed: u64) -> Field<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            Complex::new(T::lit(v), T::zero())
        })
        .collect();
    Field::from_parts_unchecked(grid.clone(), values)
}

/// Riemann sum `(Σ |f(x_j)|^p dx^d)^{1/p}`; `p = ∞` gives `max |f|`.
pub fn lp_norm<T: Real>(f: &Field<T>, p: LpIndex<T>) -> Result<T> {
    match p {
        LpIndex::Infinity => Ok(f.max_abs()),
        LpIndex::Finite(p) => {
            if !(p >= T::one()) || !p.is_finite() {
                return Err(invalid("p", format!("must lie in [1, inf], got {p}")));
            }
            let dv = f.grid().cell_volume();
            let two = T::lit(2.0);
            let s = if p == two {
                f.values().iter().fold(T::zero(), |acc, v| acc + v.norm_sqr())
            } else {
                f.values().iter().fold(T::zero(), |acc, v| acc + v.norm().powf(p))
            };
            Ok((s * dv).powf(T::one() / p))
        }
    }
}

/// `L_p` norm of `1_ω f` for a boolean mask given per lattice point.
pub fn masked_lp_norm<T: Real>(f: &Field<T>, mask: &[bool], p: LpIndex<T>) -> Result<T> {
    if mask.len() != f.values().len() {
        return Err(ObsError::GridMismatch("mask size".into()));
    }
    let restricted: Vec<Complex<T>> = f
        .values()
        .iter()
        .zip(mask)
        .map(|(v, &m)| if m { *v } else { Complex::new(T::zero(), T::zero()) })
        .collect();
    lp_norm(&Field::from_parts_unchecked(f.grid().clone(), restricted), p)
}

/// Midpoint value of `(∫₀^T g(τ)^r dτ)^{1/r}` from samples at the `n`
/// midpoints; `r = ∞` takes the largest sample.
pub fn lr_time_norm<T: Real>(samples: &[T], r: LpIndex<T>, horizon: T) -> Result<T> {
    if samples.is_empty() {
        return Err(invalid("samples", "time norm of an empty sample set"));
    }
    if !(horizon > T::zero()) {
        return Err(invalid("T", "horizon must be > 0"));
    }
    match r {
        LpIndex::Infinity => Ok(samples.iter().fold(T::zero(), |m, &g| m.max(g.abs()))),
        LpIndex::Finite(r) => {
            if !(r >= T::one()) || !r.is_finite() {
                return Err(invalid("r", format!("must lie in [1, inf], got {r}")));
            }
            let dt = horizon / T::from_usize_lossy(samples.len());
            let s = samples.iter().fold(T::zero(), |acc, &g| acc + g.abs().powf(r));
            Ok((s * dt).powf(T::one() / r))
        }
    }
}

/// Midpoints `(j + 1/2) T / n`.
pub fn midpoints<T: Real>(horizon: T, n: usize) -> Vec<T> {
    let dt = horizon / T::from_usize_lossy(n);
    (0..n)
        .map(|j| (T::from_usize_lossy(j) + T::lit(0.5)) * dt)
        .collect()
}

/// Semigroup and projector bounds obtained by quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorBounds<T> {
    /// `max(1, ‖p₁‖_{L₁})`, which bounds `‖S_t‖_{p→p}` for every `t` by Young
    /// and scaling.
    #[serde(rename = "M")]
    pub semigroup_bound: T,
    /// Unclamped quadrature of `‖p₁‖_{L₁}`.
    pub kernel_l1: T,
    /// `(2π)^{−d/2} ‖𝔉⁻¹χ₁‖_{L₁}`.
    #[serde(rename = "C_d")]
    pub projector_bound: T,
}

/// `M` from the kernel on `kernel_grid`, `C_d` from the cutoff on
/// `cutoff_grid`. The cutoff grid needs a fine frequency lattice (large box).
pub fn estimate_m_and_cd<T: Real>(
    symbol: &EllipticSymbol<T>,
    kernel_grid: &GridSpec<T>,
    cutoff_grid: &GridSpec<T>,
) -> Result<OperatorBounds<T>> {
    ellipticity_constant(symbol, 1000)?;
    let sim = Simulator::new(kernel_grid.clone());
    let p1 = sim.kernel_field(symbol, T::one())?;
    let kernel_l1 = lp_norm(&p1, LpIndex::Finite(T::one()))?;
    let cut = Simulator::new(cutoff_grid.clone());
    let projector_bound = cut.cutoff_kernel_l1(T::one())?;
    Ok(OperatorBounds {
        semigroup_bound: kernel_l1.max(T::one()),
        kernel_l1,
        projector_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(n: usize, l: f64) -> GridSpec<f64> {
        GridSpec::cubic(1, n, l).unwrap()
    }

    #[test]
    fn eta_shape() {
        assert_eq!(cutoff_eta(0.0f64), 1.0);
        assert_eq!(cutoff_eta(0.5f64), 1.0);
        assert_eq!(cutoff_eta(1.0f64), 0.0);
        assert!((cutoff_eta(0.75f64) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = cutoff_eta(0.5 + i as f64 / 200.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn transform_roundtrip() {
        let g = GridSpec::new(vec![16, 8, 8], vec![3.0, 2.0, 5.0]).unwrap();
        let sim = Simulator::new(g.clone());
        let f = white_noise(&g, 3);
        let back = sim.from_spectrum(sim.to_spectrum(&f).unwrap()).unwrap();
        let err = back
            .values()
            .iter()
            .zip(f.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(err <= 1e-12 * f.max_abs());
    }

    #[test]
    fn gaussian_spectrum_matches_continuum() {
        // 𝔉 e^{−x²/2} = e^{−ξ²/2}
        let g = grid1(256, 40.0);
        let sim = Simulator::new(g.clone());
        let f = Field::from_fn(&g, |x| Complex::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        let s = sim.to_spectrum(&f).unwrap();
        for (i, v) in s.iter().enumerate() {
            let xi = g.frequency(0, i);
            assert!((v - Complex::new((-xi * xi / 2.0).exp(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn semigroup_zero_time_is_identity() {
        let g = grid1(64, 10.0);
        let sim = Simulator::new(g.clone());
        let f = white_noise(&g, 1);
        let out = sim.semigroup_apply(&EllipticSymbol::laplacian(1), 0.0, &f).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn semigroup_rejects_other_grid_and_negative_time() {
        let sim = Simulator::new(grid1(64, 10.0));
        let f = white_noise(&grid1(32, 10.0), 1);
        let lap = EllipticSymbol::laplacian(1);
        assert!(matches!(sim.semigroup_apply(&lap, 1.0, &f), Err(ObsError::GridMismatch(_))));
        let f = white_noise(sim.grid(), 1);
        assert!(sim.semigroup_apply(&lap, -1.0, &f).is_err());
    }

    #[test]
    fn projector_extremes() {
        let g = grid1(64, 10.0);
        let sim = Simulator::new(g.clone());
        let f = white_noise(&g, 2);
        let ny = g.nyquist(0);
        let same = sim.projector_apply(2.0 * ny + 1.0, &f).unwrap();
        for (a, b) in same.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        // single mode k = 10, |ξ| = 2π·10/10 ≈ 6.28 > λ = 5
        let mode = Field::from_fn(&g, |x| Complex::new(0.0, 2.0 * std::f64::consts::PI * x[0]).exp());
        let killed = sim.projector_apply(5.0, &mode).unwrap();
        assert!(killed.max_abs() < 1e-12);
        assert!(sim.projector_apply(0.0, &f).is_err());
    }

    #[test]
    fn kernel_rejects_zero_time() {
        let sim = Simulator::new(grid1(64, 10.0));
        assert!(sim.kernel_field(&EllipticSymbol::laplacian(1), 0.0).is_err());
    }

    #[test]
    fn heat_kernel_mass_and_shape() {
        let g = grid1(256, 40.0);
        let sim = Simulator::new(g.clone());
        let t = 1.5;
        let p = sim.kernel_field(&EllipticSymbol::laplacian(1), t).unwrap();
        let mass: f64 = p.values().iter().map(|v| v.re).sum::<f64>() * g.cell_volume();
        assert!((mass - 1.0).abs() < 1e-12);
        let peak = (4.0 * std::f64::consts::PI * t).powf(-0.5);
        for (i, v) in p.values().iter().enumerate() {
            let x = g.coord(0, i);
            let exact = peak * (-x * x / (4.0 * t)).exp();
            assert!((v.re - exact).abs() <= 1e-6 * peak);
        }
    }

    #[test]
    fn norms() {
        let g = grid1(64, 8.0);
        let one = Field::from_fn(&g, |_| Complex::new(1.0, 0.0));
        assert!((lp_norm(&one, LpIndex::Finite(2.0)).unwrap() - 8.0f64.sqrt()).abs() < 1e-14);
        assert_eq!(lp_norm(&one, LpIndex::Infinity).unwrap(), 1.0);
        let g = grid1(512, 40.0);
        let gauss = Field::from_fn(&g, |x| Complex::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        let v = lp_norm(&gauss, LpIndex::Finite(2.0)).unwrap();
        assert!((v - std::f64::consts::PI.powf(0.25)).abs() < 1e-6);
    }

    #[test]
    fn time_norms() {
        assert_eq!(lr_time_norm(&[1.0; 10], LpIndex::Finite(1.0), 2.5).unwrap(), 2.5);
        assert_eq!(lr_time_norm(&[1.0; 10], LpIndex::Infinity, 2.5).unwrap(), 1.0);
        let ts = midpoints(1.0, 1000);
        let v = lr_time_norm(&ts, LpIndex::Finite(2.0), 1.0).unwrap();
        assert!((v - 1.0 / 3.0f64.sqrt()).abs() < 1e-3);
        assert!(lr_time_norm::<f64>(&[], LpIndex::Finite(2.0), 1.0).is_err());
    }

    #[test]
    fn sample_fields() {
        let g = grid1(128, 20.0);
        let sim = Simulator::new(g.clone());
        let a = sim.sample_field(&FieldKind::White, 9).unwrap();
        let b = sim.sample_field(&FieldKind::White, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sim.sample_field(&FieldKind::White, 10).unwrap());

        let lambda = 3.0;
        let bl = sim.sample_field(&FieldKind::BandLimited { lambda }, 4).unwrap();
        let spec = sim.to_spectrum(&bl).unwrap();
        let peak = spec.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for (i, v) in spec.iter().enumerate() {
            if sim.frequency_norms()[i] > lambda {
                assert!(v.norm() <= 1e-13 * peak);
            }
        }
        // fixed point of P_{2λ'} once λ' ≥ λ
        let proj = sim.projector_apply(2.0 * lambda, &bl).unwrap();
        for (x, y) in proj.values().iter().zip(bl.values()) {
            assert!((x - y).norm() < 1e-12);
        }

        let bump = sim
            .sample_field(&FieldKind::GaussianBump { s: 1.0, center: vec![0.0] }, 0)
            .unwrap();
        for (i, v) in bump.values().iter().enumerate() {
            let x = g.coord(0, i);
            assert_eq!(v.re, (-x * x / 4.0).exp());
        }
    }

    #[test]
    fn heat_semigroup_bound_is_one() {
        let kg = grid1(512, 40.0);
        let cg = grid1(4096, 400.0);
        let b = estimate_m_and_cd(&EllipticSymbol::laplacian(1), &kg, &cg).unwrap();
        assert!((b.kernel_l1 - 1.0).abs() < 1e-10);
        assert_eq!(b.semigroup_bound, 1.0);
        assert!(b.projector_bound >= 1.0);
    }
}
