use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ObsError, Result};
use crate::scalar::Real;

/// One monomial `coeff · ξ^α` of a symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm<T> {
    pub exponents: Vec<u32>,
    pub coeff: Complex<T>,
}

/// Homogeneous polynomial symbol `a(ξ) = Σ_{|α|₁=m} a_α i^{|α|₁} ξ^α` of even
/// degree `m`.
///
/// Terms store the coefficient of `ξ^α` in `a`, i.e. `a_α i^m`; the operator
/// is `A f = Σ a_α ∂^α f = 𝔉⁻¹(a 𝔉 f)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticSymbol<T> {
    dim: usize,
    degree: u32,
    terms: Vec<SymbolTerm<T>>,
}

impl<T: Real> EllipticSymbol<T> {
    /// Builds a symbol from the coefficients of `ξ^α` in `a(ξ)`.
    pub fn from_symbol_terms(dim: usize, terms: Vec<SymbolTerm<T>>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("d", format!("dimension must be 1..=3, got {dim}")));
        }
        let first = terms.first().ok_or_else(|| invalid("coeffs", "symbol has no terms"))?;
        let degree: u32 = first.exponents.iter().sum();
        for t in &terms {
            if t.exponents.len() != dim {
                return Err(invalid("coeffs", "multi-index length must equal the dimension"));
            }
            if t.exponents.iter().sum::<u32>() != degree {
                return Err(invalid("coeffs", "symbol must be homogeneous"));
            }
        }
        if degree < 2 || !degree.is_multiple_of(2) {
            return Err(invalid("m", format!("degree must be even and >= 2, got {degree}")));
        }
        Ok(EllipticSymbol { dim, degree, terms })
    }

    /// Builds a symbol from the operator coefficients `a_α` of `Σ a_α ∂^α`.
    pub fn from_operator_coeffs(dim: usize, coeffs: Vec<(Vec<u32>, Complex<T>)>) -> Result<Self> {
        let terms = coeffs
            .into_iter()
            .map(|(exponents, a)| {
                let m: u32 = exponents.iter().sum();
                // i^m for even m is ±1
                let sign = if (m / 2).is_multiple_of(2) { T::one() } else { -T::one() };
                SymbolTerm {
                    exponents,
                    coeff: a * sign,
                }
            })
            .collect();
        Self::from_symbol_terms(dim, terms)
    }

    /// `a(ξ) = |ξ|²`, the symbol of `−Δ`.
    pub fn laplacian(dim: usize) -> Self {
        let terms = (0..dim)
            .map(|j| {
                let mut e = vec![0; dim];
                e[j] = 2;
                SymbolTerm {
                    exponents: e,
                    coeff: Complex::new(T::one(), T::zero()),
                }
            })
            .collect();
        EllipticSymbol {
            dim,
            degree: 2,
            terms,
        }
    }

    /// `a(ξ) = Σ_j ξ_j^m`.
    pub fn sum_of_powers(dim: usize, degree: u32) -> Result<Self> {
        let terms = (0..dim)
            .map(|j| {
                let mut e = vec![0; dim];
                e[j] = degree;
                SymbolTerm {
                    exponents: e,
                    coeff: Complex::new(T::one(), T::zero()),
                }
            })
            .collect();
        Self::from_symbol_terms(dim, terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> &[SymbolTerm<T>] {
        &self.terms
    }

    /// `ā`, the symbol of the Hilbert adjoint.
    pub fn conjugate(&self) -> Self {
        let mut s = self.clone();
        for t in &mut s.terms {
            t.coeff = t.coeff.conj();
        }
        s
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff = t.coeff * s;
        }
        out
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.im == T::zero())
    }

    pub fn eval(&self, xi: &[T]) -> Complex<T> {
        self.terms
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, t| {
                let mono = t
                    .exponents
                    .iter()
                    .zip(xi)
                    .fold(T::one(), |m, (&e, &x)| m * x.powi(e as i32));
                acc + t.coeff * mono
            })
    }
}

/// Minimum of `re a` over the unit sphere, refined locally around the best
/// sample.
fn sphere_minimum<T: Real>(symbol: &EllipticSymbol<T>, samples: usize) -> T {
    let re_at = |xi: &[T]| symbol.eval(xi).re;
    let two_pi = T::lit(2.0) * T::PI();
    match symbol.dim() {
        1 => re_at(&[T::one()]).min(re_at(&[-T::one()])),
        2 => {
            let f = |th: T| re_at(&[th.cos(), th.sin()]);
            let h = two_pi / T::from_usize_lossy(samples);
            let (best_j, best) = (0..samples)
                .map(|j| (j, f(h * T::from_usize_lossy(j))))
                .fold((0, T::infinity()), |a, b| if b.1 < a.1 { b } else { a });
            let c = h * T::from_usize_lossy(best_j);
            best.min(golden_min(f, c - h, c + h, 80))
        }
        _ => {
            let f = |th: T, ph: T| re_at(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
            let n_th = (samples / 2).max(2);
            let h_th = T::PI() / T::from_usize_lossy(n_th);
            let h_ph = two_pi / T::from_usize_lossy(samples);
            let mut best = (T::zero(), T::zero(), T::infinity());
            for i in 0..=n_th {
                let th = h_th * T::from_usize_lossy(i);
                for j in 0..samples {
                    let ph = h_ph * T::from_usize_lossy(j);
                    let v = f(th, ph);
                    if v < best.2 {
                        best = (th, ph, v);
                    }
                }
            }
            // pattern search around the best sample
            let (mut th, mut ph, mut val) = best;
            let (mut s_th, mut s_ph) = (h_th, h_ph);
            for _ in 0..200 {
                let mut moved = false;
                for (dt, dp) in [(s_th, T::zero()), (-s_th, T::zero()), (T::zero(), s_ph), (T::zero(), -s_ph)] {
                    let v = f(th + dt, ph + dp);
                    if v < val {
                        th = th + dt;
                        ph = ph + dp;
                        val = v;
                        moved = true;
                    }
                }
                if !moved {
                    s_th = s_th / T::lit(2.0);
                    s_ph = s_ph / T::lit(2.0);
                }
            }
            val
        }
    }
}

fn golden_min<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, iters: usize) -> T {
    let g = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Ellipticity constant `c = min_{|ξ|=1} re a(ξ)`; by homogeneity
/// `re a(ξ) ≥ c|ξ|^m` everywhere.
///
/// `sphere_samples` is the number of samples per angular dimension (at least
/// 1000).
pub fn ellipticity_constant<T: Real>(symbol: &EllipticSymbol<T>, sphere_samples: usize) -> Result<T> {
    if sphere_samples < 1000 {
        return Err(invalid("sphere_samples", "at least 1000 samples per angular dimension"));
    }
    let c = sphere_minimum(symbol, sphere_samples);
    if !(c > T::zero()) {
        return Err(ObsError::NotStronglyElliptic { min_re: c.as_f64() });
    }
    Ok(c)
}
