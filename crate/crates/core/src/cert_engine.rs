//! Explicit observability constants from an uncertainty relation and a
//! dissipation estimate.
//!
//! Given a semigroup bound `‖S_t‖ ≤ M e^{ωt}`, an uncertainty relation
//! `‖P_λ x‖ ≤ d₀ e^{d₁ λ^{γ₁}} ‖C P_λ x‖` and a dissipation estimate
//! `‖(1 − P_λ) S_t x‖ ≤ d₂ e^{−d₃ λ^{γ₂} t^{γ₃}} ‖x‖`, this module evaluates
//! the closed-form final-state observability constant
//!
//! ```text
//! C_obs = C₁ / T^{1/r} · exp(C₂ / T^{γ₁γ₃/(γ₂−γ₁)} + C₃ T)
//! ```
//!
//! together with the sharper series bound it dominates, plus the constant
//! pipelines (Logvinenko–Sereda, Riesz–Thorin, L₂ dissipation) used for
//! strongly elliptic operators on `ℝ^d`.
//!
//! Everything that can overflow is carried in log-space; [`LogValue`] keeps
//! `ln C` and exposes the plain value only when it is representable.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ObsError, Result};
use crate::scalar::{log_add_exp, Real};

/// Version tag written into every serialized [`CertBundle`].
pub const CERT_SCHEMA_VERSION: u32 = 1;

/// Hard cap on the number of series terms.
pub const SERIES_TERM_CAP: usize = 10_000;

/// Lebesgue index in `[1, ∞]`, used for the time index `r` and the space
/// index `p`.
///
/// `∞` is its own variant so that it never enters exponent arithmetic as a
/// float infinity. Serialized as a number or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LpIndex<T> {
    Finite(T),
    Infinity,
}

impl<T: Real> LpIndex<T> {
    /// `1/r`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> T {
        match self {
            LpIndex::Finite(r) => T::one() / r,
            LpIndex::Infinity => T::zero(),
        }
    }

    /// `T^{1/r}`, equal to 1 for `r = ∞`.
    pub fn horizon_factor(self, horizon: T) -> T {
        match self {
            LpIndex::Finite(r) => horizon.powf(T::one() / r),
            LpIndex::Infinity => T::one(),
        }
    }

    /// Rejects finite indices outside `[1, ∞)`.
    pub fn check(self) -> Result<()> {
        match self {
            LpIndex::Finite(r) if !(r >= T::one()) || !r.is_finite() => {
                Err(invalid("r", format!("must lie in [1, inf], got {r}")))
            }
            _ => Ok(()),
        }
    }
}

impl<T: Real> fmt::Display for LpIndex<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpIndex::Finite(r) => write!(f, "{r}"),
            LpIndex::Infinity => f.write_str("inf"),
        }
    }
}

impl<T: Real> Serialize for LpIndex<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LpIndex::Finite(r) => r.serialize(s),
            LpIndex::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de, T: Real> Deserialize<'de> for LpIndex<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V<T>(std::marker::PhantomData<T>);
        impl<T: Real> Visitor<'_> for V<T> {
            type Value = LpIndex<T>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number >= 1 or the string \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                Ok(LpIndex::Finite(T::lit(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(LpIndex::Finite(T::lit(v as f64)))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(LpIndex::Finite(T::lit(v as f64)))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(LpIndex::Infinity),
                    other => Err(E::custom(format!("unknown time index `{other}`"))),
                }
            }
        }
        d.deserialize_any(V(std::marker::PhantomData))
    }
}

/// A positive quantity stored through its logarithm.
///
/// `value` is `Some(exp(ln))` when that is a finite float and `None` when it
/// would overflow, so an overflow is never silently turned into infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogValue<T> {
    pub ln: T,
    pub value: Option<T>,
}

impl<T: Real> LogValue<T> {
    pub fn from_ln(ln: T) -> Self {
        let v = ln.exp();
        LogValue {
            ln,
            value: v.is_finite().then_some(v),
        }
    }

    pub fn from_value(v: T) -> Self {
        Self::from_ln(v.ln())
    }
}

/// Inputs of the abstract observability estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct AbstractParams<T> {
    /// Semigroup bound `M ≥ 1` in `‖S_t‖ ≤ M e^{ωt}`.
    #[serde(rename = "M")]
    pub semigroup_bound: T,
    /// Growth rate `ω`.
    pub omega: T,
    /// Spectral threshold `λ* ≥ 0`.
    pub lambda_star: T,
    pub d0: T,
    pub d1: T,
    pub gamma1: T,
    pub d2: T,
    pub d3: T,
    pub gamma2: T,
    pub gamma3: T,
    /// Operator norm of the observation operator.
    #[serde(rename = "norm_C")]
    pub norm_c: T,
    /// Time horizon `T > 0`.
    #[serde(rename = "T")]
    pub horizon: T,
    pub r: LpIndex<T>,
}

impl<T: Real> AbstractParams<T> {
    /// Checks every invariant. `d₁ > 0` is required for the proof constants.
    pub fn validate(&self) -> Result<()> {
        self.check(false)
    }

    /// `d₁ = 0` is admissible for the closed form, which is continuous in `d₁`
    /// at zero; the proof constants (`ν₀`, the series) are not.
    fn check(&self, allow_zero_d1: bool) -> Result<()> {
        let fields = [
            ("M", self.semigroup_bound),
            ("omega", self.omega),
            ("lambda_star", self.lambda_star),
            ("d0", self.d0),
            ("d1", self.d1),
            ("gamma1", self.gamma1),
            ("d2", self.d2),
            ("d3", self.d3),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("norm_C", self.norm_c),
            ("T", self.horizon),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.semigroup_bound < T::one() {
            return Err(invalid("M", "must be >= 1"));
        }
        if self.d2 < T::one() {
            return Err(invalid("d2", "must be >= 1"));
        }
        if self.lambda_star < T::zero() {
            return Err(invalid("lambda_star", "must be >= 0"));
        }
        for (name, v) in [
            ("d0", self.d0),
            ("gamma1", self.gamma1),
            ("d3", self.d3),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("norm_C", self.norm_c),
            ("T", self.horizon),
        ] {
            if v <= T::zero() {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if self.d1 < T::zero() || (!allow_zero_d1 && self.d1 == T::zero()) {
            return Err(invalid("d1", format!("must be > 0, got {}", self.d1)));
        }
        if self.gamma1 >= self.gamma2 {
            return Err(invalid(
                "gamma2",
                format!("gamma1 = {} must be < gamma2 = {}", self.gamma1, self.gamma2),
            ));
        }
        self.r.check()
    }

    fn omega_plus(&self) -> T {
        self.omega.max(T::zero())
    }
}

/// Which side of `T₀` the horizon falls on. `T = T₀` uses `Short`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonBranch {
    /// `T ≤ T₀`: `α = α₀`, `ν = ν₀ (T₀/T)^{γ₃/(γ₂−γ₁)}`.
    Short,
    /// `T > T₀`: `α = α₀ (T/T₀)^{γ₃/γ₂}`, `ν = ν₀`.
    Long,
}

/// Constants appearing in the iteration argument behind the estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants<T> {
    pub alpha0: T,
    pub nu0: T,
    #[serde(rename = "T0")]
    pub t0: T,
    pub branch: HorizonBranch,
    pub alpha: T,
    pub nu: T,
    #[serde(rename = "K1")]
    pub k1: T,
    #[serde(rename = "K2")]
    pub k2: T,
    #[serde(rename = "K3")]
    pub k3: T,
    pub omega_plus: T,
    /// `α^{γ₂} / 4^{γ₃}`, at least 2 by construction.
    pub growth: T,
}

fn finite<T: Real>(name: &'static str, v: T) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ObsError::NonFiniteConstant {
            name,
            detail: format!("evaluated to {v}"),
        })
    }
}

fn four<T: Real>() -> T {
    T::lit(4.0)
}

/// `e · ln 2`.
fn e_ln2<T: Real>() -> T {
    T::E() * T::LN_2()
}

/// `α₀, ν₀, T₀`, the branch-dependent `α, ν`, and `K₁, K₂, K₃`.
pub fn derived_constants<T: Real>(params: &AbstractParams<T>) -> Result<DerivedConstants<T>> {
    params.validate()?;
    let p = params;
    let two = T::lit(2.0);
    let ln4 = four::<T>().ln();
    let omega_plus = p.omega_plus();
    let gap = p.gamma2 - p.gamma1;

    let ln_k1 = (p.d0 * p.norm_c + T::one()).ln()
        + p.d2.ln()
        + two * p.semigroup_bound.ln()
        + T::lit(1.25) * omega_plus * p.horizon;
    let k1 = finite("K1", ln_k1.exp())?;
    let ln_4k1 = ln4 + ln_k1;

    let ln_alpha0 = (T::LN_2() + p.gamma3 * ln4) / gap;
    let alpha0 = finite("alpha0", ln_alpha0.exp())?;

    let nu_uncertainty = ((two * ln_4k1).ln() - (e_ln2::<T>() * p.d1).ln()) / p.gamma1;
    let nu_uncertainty = nu_uncertainty.exp();
    let nu0 = finite("nu0", nu_uncertainty.max(two * p.lambda_star))?;
    let ln_nu0 = nu0.ln();

    let ln_t0 = ((two * p.d1).ln() + p.gamma2 * ln_alpha0 - p.d3.ln() - gap * ln_nu0) / p.gamma3;
    let t0 = finite("T0", ln_t0.exp())?;
    let ln_t = p.horizon.ln();

    let (branch, ln_alpha, ln_nu) = if p.horizon <= t0 {
        (
            HorizonBranch::Short,
            ln_alpha0,
            ln_nu0 + p.gamma3 / gap * (ln_t0 - ln_t),
        )
    } else {
        (
            HorizonBranch::Long,
            ln_alpha0 + p.gamma3 / p.gamma2 * (ln_t - ln_t0),
            ln_nu0,
        )
    };
    let alpha = finite("alpha", ln_alpha.exp())?;
    let nu = finite("nu", ln_nu.exp())?;

    let growth = finite("growth", (p.gamma2 * ln_alpha - p.gamma3 * ln4).exp())?;
    let dissipation_part = (p.d3.ln() + p.gamma3 * (ln_t - ln4) + p.gamma2 * ln_nu).exp();
    let uncertainty_part = (p.d1.ln() + p.gamma1 * ln_nu).exp();
    let k2 = finite("K2", dissipation_part - uncertainty_part)?;
    let k3 = finite("K3", k2 / (growth - T::one()) - uncertainty_part)?;

    Ok(DerivedConstants {
        alpha0,
        nu0,
        t0,
        branch,
        alpha,
        nu,
        k1,
        k2,
        k3,
        omega_plus,
        growth,
    })
}

/// The three closed-form constants and the resulting `C_obs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm<T> {
    #[serde(rename = "C1")]
    pub c1: LogValue<T>,
    #[serde(rename = "C2")]
    pub c2: T,
    #[serde(rename = "C3")]
    pub c3: T,
    pub cobs: LogValue<T>,
}

/// Certified constants with every input they were computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct CertBundle<T> {
    pub schema_version: u32,
    pub params: AbstractParams<T>,
    /// Absent when `d₁ = 0`, where the proof constants degenerate.
    pub derived: Option<DerivedConstants<T>>,
    #[serde(rename = "C1")]
    pub c1: LogValue<T>,
    #[serde(rename = "C2")]
    pub c2: T,
    #[serde(rename = "C3")]
    pub c3: T,
    pub cobs_closed: LogValue<T>,
    pub cobs_series: Option<LogValue<T>>,
    pub series_terms_used: Option<usize>,
    pub inputs_provenance: String,
}

impl<T: Real> CertBundle<T> {
    /// The sharpest certified constant available, as a log.
    pub fn best_ln_cobs(&self) -> T {
        match &self.cobs_series {
            Some(s) => s.ln.min(self.cobs_closed.ln),
            None => self.cobs_closed.ln,
        }
    }

    pub fn with_provenance(mut self, text: impl Into<String>) -> Self {
        self.inputs_provenance = text.into();
        self
    }
}

fn closed_form<T: Real>(p: &AbstractParams<T>) -> Result<ClosedForm<T>> {
    p.check(true)?;
    let two = T::lit(2.0);
    let four = four::<T>();
    let gap = p.gamma2 - p.gamma1;
    let m = p.semigroup_bound;

    let growth_branch = T::lit(8.0) / e_ln2::<T>()
        * (four * p.d2 * m * m * (p.d0 * p.norm_c + T::one())).ln();
    let threshold_branch = four * p.d1 * (two * p.lambda_star).powf(p.gamma1);
    let ln_c1 = (four * m * p.d0).ln() + growth_branch.max(threshold_branch);
    let ln_c1 = finite("C1", ln_c1)?;

    let c2 = if p.d1 == T::zero() {
        T::zero()
    } else {
        let inner = p.gamma1 * T::LN_2()
            + p.gamma1 * p.gamma2 / gap * (two * four.powf(p.gamma3)).ln()
            + p.gamma2 * p.d1.ln()
            - p.gamma1 * p.d3.ln();
        finite("C2", (four.ln() + inner / gap).exp())?
    };
    let c3 = p.omega_plus() * (T::one() + T::lit(10.0) / e_ln2::<T>());

    let blowup_exponent = p.gamma1 * p.gamma3 / gap;
    let ln_cobs = ln_c1 - p.r.reciprocal() * p.horizon.ln()
        + c2 / p.horizon.powf(blowup_exponent)
        + c3 * p.horizon;
    let ln_cobs = finite("ln C_obs", ln_cobs)?;
    Ok(ClosedForm {
        c1: LogValue::from_ln(ln_c1),
        c2,
        c3,
        cobs: LogValue::from_ln(ln_cobs),
    })
}

/// Closed-form `C₁, C₂, C₃` and `C_obs`. Series fields are left empty.
pub fn cobs_closed_form<T: Real>(params: &AbstractParams<T>) -> Result<CertBundle<T>> {
    let cf = closed_form(params)?;
    Ok(CertBundle {
        schema_version: CERT_SCHEMA_VERSION,
        params: params.clone(),
        derived: None,
        c1: cf.c1,
        c2: cf.c2,
        c3: cf.c3,
        cobs_closed: cf.cobs,
        cobs_series: None,
        series_terms_used: None,
        inputs_provenance: "abstract parameters supplied directly".to_string(),
    })
}

/// `ln` of the k-th summand `(4K₁)^k exp(−K₃ q^k)`, `q = α^{γ₂}/4^{γ₃}`.
pub fn series_term_ln<T: Real>(derived: &DerivedConstants<T>, k: usize) -> T {
    let kf = T::from_usize_lossy(k);
    let ln_a = (four::<T>() * derived.k1).ln();
    kf * ln_a - derived.k3 * derived.growth.powf(kf)
}

/// `ln Σ_{k≥1} (4K₁)^k exp(−K₃ q^k)` and the number of terms summed.
///
/// Summation stops once the current term is below `rel_tol` times the
/// partial sum and the terms are decreasing; the remaining tail is then
/// bounded by a geometric series with the current (decreasing) term ratio
/// and added, so the result never underestimates the infinite sum.
pub fn ln_iteration_series<T: Real>(derived: &DerivedConstants<T>, rel_tol: T) -> Result<(T, usize)> {
    let ln_a = (four::<T>() * derived.k1).ln();
    let ln_tol = rel_tol.ln();
    let mut ln_sum = T::neg_infinity();
    let mut prev = T::neg_infinity();
    let mut q_pow = T::one();
    for k in 1..=SERIES_TERM_CAP {
        q_pow = q_pow * derived.growth;
        let ln_term = T::from_usize_lossy(k) * ln_a - derived.k3 * q_pow;
        if ln_term.is_nan() {
            return Err(ObsError::NonFiniteConstant {
                name: "series term",
                detail: format!("term {k} is NaN"),
            });
        }
        ln_sum = log_add_exp(ln_sum, ln_term);
        if !ln_sum.is_finite() {
            return Err(ObsError::NonFiniteConstant {
                name: "series partial sum",
                detail: format!("partial sum after {k} terms is {}", ln_sum.exp()),
            });
        }
        let decreasing = k > 1 && ln_term < prev;
        if decreasing && ln_term < ln_tol + ln_sum {
            // ratio t_{k+1}/t_k = 4K₁ exp(−K₃ q^k (q−1)), decreasing in k
            let ln_ratio = ln_a - derived.k3 * q_pow * (derived.growth - T::one());
            if ln_ratio < T::zero() {
                let ratio = ln_ratio.exp();
                let ln_tail = ln_term + ln_ratio - (-ratio).ln_1p();
                ln_sum = log_add_exp(ln_sum, ln_tail);
            }
            return Ok((ln_sum, k));
        }
        prev = ln_term;
    }
    Err(ObsError::SeriesNonConvergence {
        cap: SERIES_TERM_CAP,
    })
}

/// Fills both the closed form and the series bound `C̃_obs`.
///
/// The series is the `r = 1` bound; general `r` multiplies it by `T^{1−1/r}`.
pub fn cobs_series_bound<T: Real>(params: &AbstractParams<T>, rel_tol: T) -> Result<CertBundle<T>> {
    if !(rel_tol > T::zero() && rel_tol < T::one()) {
        return Err(invalid("rel_tol", format!("must lie in (0, 1), got {rel_tol}")));
    }
    let derived = derived_constants(params)?;
    let mut bundle = cobs_closed_form(params)?;
    let p = params;
    let (ln_sum, terms) = ln_iteration_series(&derived, rel_tol)?;

    let low_freq = p.d1 * derived.nu.powf(p.gamma1);
    let iterated = derived.k2 / (derived.growth - T::one()) + ln_sum;
    let ln_r1 = (T::lit(2.0) * p.semigroup_bound * p.d0).ln() - p.horizon.ln()
        + derived.omega_plus * p.horizon
        + log_add_exp(low_freq, iterated);
    let ln_series = ln_r1 + (T::one() - p.r.reciprocal()) * p.horizon.ln();
    let ln_series = finite("ln C~_obs", ln_series)?;

    bundle.derived = Some(derived);
    bundle.cobs_series = Some(LogValue::from_ln(ln_series));
    bundle.series_terms_used = Some(terms);
    Ok(bundle)
}

/// Series bound when `d₁ > 0`, closed form alone otherwise.
pub fn certify<T: Real>(params: &AbstractParams<T>, rel_tol: T) -> Result<CertBundle<T>> {
    if params.d1 > T::zero() {
        cobs_series_bound(params, rel_tol)
    } else {
        cobs_closed_form(params)
    }
}

/// Upper bound `(2 ln A / (B e ln 2))^{ln A / ln 2} / B` for
/// `Σ_{k≥1} A^k e^{−B 2^k}`, valid for `A > 1`, `B > 0`.
pub fn series_tail_bound<T: Real>(a: T, b: T) -> Result<T> {
    if !(a > T::one()) {
        return Err(invalid("A", "must be > 1"));
    }
    if !(b > T::zero()) {
        return Err(invalid("B", "must be > 0"));
    }
    let ln_a = a.ln();
    let base = T::lit(2.0) * ln_a / (b * e_ln2::<T>());
    Ok(base.powf(ln_a / T::LN_2()) / b)
}

/// Continuous-family constants obtained from a discrete family `(P_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousConstants<T> {
    pub d0: T,
    pub d1: T,
    pub d2: T,
    pub d3: T,
    pub lambda_star: T,
}

/// `d₀ = d̃₀ e^{d̃₁}`, `d₁ = 2^{γ₁} d̃₁`, `d₂ = d̃₂`, `d₃ = d̃₃`, `λ* = 0`.
pub fn discrete_to_continuous<T: Real>(
    d0t: T,
    d1t: T,
    d2t: T,
    d3t: T,
    gamma1: T,
) -> Result<ContinuousConstants<T>> {
    for (name, v) in [("d0", d0t), ("d1", d1t), ("d3", d3t), ("gamma1", gamma1)] {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(invalid(name, format!("must be finite and > 0, got {v}")));
        }
    }
    if !(d2t >= T::one()) {
        return Err(invalid("d2", format!("must be >= 1, got {d2t}")));
    }
    Ok(ContinuousConstants {
        d0: finite("d0", d0t * d1t.exp())?,
        d1: T::lit(2.0).powf(gamma1) * d1t,
        d2: d2t,
        d3: d3t,
        lambda_star: T::zero(),
    })
}

/// Uncertainty constants for a `(ρ, L)`-thick set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsConstants<T> {
    pub d0: T,
    pub ln_d0: T,
    pub d1: T,
    pub gamma1: T,
}

/// `d₀ = (K^d/ρ)^{Kd}`, `d₁ = 2K |L|₁ ln(K^d/ρ)`, `γ₁ = 1`.
pub fn ls_constants<T: Real>(rho: T, lengths: &[T], k: T, dim: usize) -> Result<LsConstants<T>> {
    if !(rho > T::zero() && rho <= T::one()) {
        return Err(invalid("rho", format!("must lie in (0, 1], got {rho}")));
    }
    if !(k >= T::one()) || !k.is_finite() {
        return Err(invalid("K", format!("must be finite and >= 1, got {k}")));
    }
    if dim == 0 || lengths.len() != dim {
        return Err(invalid(
            "L",
            format!("expected {dim} window lengths, got {}", lengths.len()),
        ));
    }
    if lengths.iter().any(|l| !(*l > T::zero()) || !l.is_finite()) {
        return Err(invalid("L", "window lengths must be finite and > 0"));
    }
    let d = T::from_usize_lossy(dim);
    // ln(K^d / ρ) ≥ 0
    let ln_ratio = d * k.ln() - rho.ln();
    let ln_d0 = k * d * ln_ratio;
    let l1 = lengths.iter().fold(T::zero(), |acc, &l| acc + l);
    Ok(LsConstants {
        d0: finite("d0", ln_d0.exp())?,
        ln_d0,
        d1: T::lit(2.0) * k * l1 * ln_ratio,
        gamma1: T::one(),
    })
}

/// Riesz–Thorin parameters `(p₀, θ)` with `1/p = (1−θ)/p₀ + θ/2`.
pub fn interpolation_params<T: Real>(p: T) -> Result<(T, T)> {
    if !(p > T::one()) || !p.is_finite() {
        return Err(invalid("p", format!("must lie in (1, inf), got {p}")));
    }
    let two = T::lit(2.0);
    if p == two {
        return Ok((two, T::one()));
    }
    if p < two {
        let p0 = p * p - two * p + two;
        let theta = (-two * p * p + T::lit(6.0) * p - T::lit(4.0)) / (-p * p * p + two * p * p);
        Ok((p0, theta))
    } else {
        Ok((two * p, T::one() / (p - T::one())))
    }
}

/// Dissipation constants on `L_p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationConstants<T> {
    pub d2: T,
    pub d3: T,
    pub gamma2: T,
    pub gamma3: T,
}

/// `d₂ = ((1 + C_d) M)^{1−θ}`, `d₃ = cθ/2^m`, `γ₂ = m`, `γ₃ = 1`.
pub fn dissipation_constants<T: Real>(
    c: T,
    degree: u32,
    p: T,
    semigroup_bound: T,
    projector_bound: T,
) -> Result<DissipationConstants<T>> {
    if !(c > T::zero()) || !c.is_finite() {
        return Err(invalid("c", format!("must be finite and > 0, got {c}")));
    }
    if degree < 2 || !degree.is_multiple_of(2) {
        return Err(invalid("m", format!("degree must be even and >= 2, got {degree}")));
    }
    if !(semigroup_bound >= T::one()) {
        return Err(invalid("M", "must be >= 1"));
    }
    if !(projector_bound > T::zero()) {
        return Err(invalid("C_d", "must be > 0"));
    }
    let (_, theta) = interpolation_params(p)?;
    let m = T::from_usize_lossy(degree as usize);
    let d2 = ((T::one() + projector_bound) * semigroup_bound).powf(T::one() - theta);
    Ok(DissipationConstants {
        d2,
        d3: c * theta / T::lit(2.0).powf(m),
        gamma2: m,
        gamma3: T::one(),
    })
}

/// Inputs of the elliptic pipeline on `L_p(ℝ^d)` with a `(ρ, L)`-thick set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct EllipticInputs<T> {
    pub rho: T,
    #[serde(rename = "L")]
    pub lengths: Vec<T>,
    /// Logvinenko–Sereda universal constant; no numeric value is known.
    #[serde(rename = "K", default = "default_ls_constant::<T>")]
    pub ls_constant: T,
    /// Ellipticity constant.
    pub c: T,
    /// Degree of the symbol.
    pub m: u32,
    pub p: T,
    #[serde(rename = "M")]
    pub semigroup_bound: T,
    #[serde(rename = "C_d")]
    pub projector_bound: T,
    #[serde(rename = "T")]
    pub horizon: T,
    pub r: LpIndex<T>,
}

fn default_ls_constant<T: Real>() -> T {
    T::one()
}

/// Chains [`ls_constants`] and [`dissipation_constants`] into the
/// abstract estimate with `ω = 0`, `λ* = 0`, `‖C‖ = 1`.
pub fn elliptic_cobs<T: Real>(inputs: &EllipticInputs<T>, rel_tol: T) -> Result<CertBundle<T>> {
    let dim = inputs.lengths.len();
    let ls = ls_constants(inputs.rho, &inputs.lengths, inputs.ls_constant, dim)?;
    let diss = dissipation_constants(
        inputs.c,
        inputs.m,
        inputs.p,
        inputs.semigroup_bound,
        inputs.projector_bound,
    )?;
    let params = AbstractParams {
        semigroup_bound: inputs.semigroup_bound,
        omega: T::zero(),
        lambda_star: T::zero(),
        d0: ls.d0,
        d1: ls.d1,
        gamma1: ls.gamma1,
        d2: diss.d2,
        d3: diss.d3,
        gamma2: diss.gamma2,
        gamma3: diss.gamma3,
        norm_c: T::one(),
        horizon: inputs.horizon,
        r: inputs.r,
    };
    let bundle = certify(&params, rel_tol)?;
    Ok(bundle.with_provenance(format!(
        "elliptic pipeline: rho={}, L={:?}, K={}, c={}, m={}, p={}, M={}, C_d={}; \
         d0,d1 from Logvinenko-Sereda constants, d2,d3 from L2 dissipation + Riesz-Thorin; \
         omega=0, lambda_star=0, norm_C=1",
        inputs.rho,
        inputs.lengths,
        inputs.ls_constant,
        inputs.c,
        inputs.m,
        inputs.p,
        inputs.semigroup_bound,
        inputs.projector_bound
    )))
}
