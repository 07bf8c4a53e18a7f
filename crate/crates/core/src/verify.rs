//! Empirical checks: fitted uncertainty constants, the exact `L₂`
//! dissipation inequality, observability ratios and the non-thick blow-up.
//!
//! Sample loops run on rayon and collect in sample order, so every result is
//! bit-identical for a fixed seed whatever the thread count. Per-sample seeds
//! come from [`derive_seed`] with the sample index as stream.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cert_engine::{AbstractParams, CertBundle, DissipationConstants, LogValue, LpIndex};
use crate::error::{invalid, ObsError, Result};
use crate::scalar::Real;
use crate::spectral::{
    cutoff_eta, derive_seed, ellipticity_constant, lp_norm, lr_time_norm, masked_lp_norm, midpoints,
    white_noise, EllipticSymbol, Field, GridSpec, Simulator, SymbolTable,
};
use crate::thickness::{gen_mask, thickness_rho, Mask, MaskFamily};

/// Denominators below this are treated as zero.
pub const DENOMINATOR_FLOOR: f64 = 1e-300;

/// Slack allowed in the pointwise dissipation inequality.
pub const DISSIPATION_SLACK: f64 = 1e-12;

/// Angular resolution for the ellipticity constant; coarser on the 2-sphere
/// where the sample count is squared.
pub(crate) fn sphere_samples(dim: usize) -> usize {
    if dim >= 3 {
        1000
    } else {
        4096
    }
}

/// Upper envelope `ln d₀ + d₁λ` of the worst log-ratios
/// `ln(‖P_λx‖_p / ‖1_ω P_λx‖_p)`, with `γ₁ = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct FitResult<T> {
    pub p: LpIndex<T>,
    pub samples: usize,
    pub seed: u64,
    pub lambdas: Vec<T>,
    pub worst_log_ratio: Vec<T>,
    /// Sample attaining the worst ratio at each `λ`.
    pub worst_sample: Vec<usize>,
    pub ln_d0: T,
    pub d1: T,
    pub gamma1: T,
    /// Largest gap between the envelope and a data point.
    pub residual_max: T,
}

impl<T: Real> FitResult<T> {
    pub fn d0(&self) -> T {
        self.ln_d0.exp()
    }

    pub fn envelope(&self, lambda: T) -> T {
        self.ln_d0 + self.d1 * lambda
    }
}

/// Support line over `(λᵢ, yᵢ)` minimizing the total gap subject to
/// domination, `b ≥ 0` and `s ≥ 0`. The optimum of this two-variable LP sits
/// on a vertex, so the candidates are enumerated.
pub fn envelope_fit<T: Real>(lambdas: &[T], ys: &[T]) -> Result<(T, T)> {
    if lambdas.is_empty() || lambdas.len() != ys.len() {
        return Err(invalid("lambdas", "need one worst ratio per lambda and at least one point"));
    }
    let n = lambdas.len();
    let mut candidates = vec![(T::zero(), T::zero())];
    for i in 0..n {
        candidates.push((ys[i].max(T::zero()), T::zero()));
        if lambdas[i] > T::zero() {
            candidates.push((T::zero(), (ys[i] / lambdas[i]).max(T::zero())));
        }
        for j in i + 1..n {
            let dl = lambdas[j] - lambdas[i];
            if dl != T::zero() {
                let s = (ys[j] - ys[i]) / dl;
                let b = ys[i] - s * lambdas[i];
                if s >= T::zero() && b >= T::zero() {
                    candidates.push((b, s));
                }
            }
        }
    }
    let scale = ys.iter().fold(T::one(), |m, &y| m.max(y.abs()));
    let tol = T::lit(1e-12) * scale;
    let total: T = lambdas.iter().fold(T::zero(), |a, &l| a + l);
    let mut best: Option<(T, T, T)> = None;
    for (b, s) in candidates {
        let feasible = lambdas.iter().zip(ys).all(|(&l, &y)| b + s * l >= y - tol);
        if !feasible {
            continue;
        }
        let objective = T::from_usize_lossy(n) * b + s * total;
        if best.is_none_or(|(_, _, o)| objective < o) {
            best = Some((b, s, objective));
        }
    }
    let (mut b, s, _) = best.expect("a horizontal line through the largest point is always feasible");
    // close any rounding gap so that domination holds exactly
    let deficit = lambdas
        .iter()
        .zip(ys)
        .fold(T::zero(), |m, (&l, &y)| m.max(y - (b + s * l)));
    b = b + deficit;
    Ok((b, s))
}

fn check_lambdas<T: Real>(grid: &GridSpec<T>, lambdas: &[T]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(invalid("lambdas", "at least one cutoff required"));
    }
    let limit = grid.min_nyquist() / T::lit(4.0);
    for &l in lambdas {
        if !(l > T::zero()) || l > limit {
            return Err(invalid(
                "lambdas",
                format!("cutoff {l} must lie in (0, Nyquist/4 = {limit}]"),
            ));
        }
    }
    Ok(())
}

fn check_mask<T: Real>(grid: &GridSpec<T>, mask: &Mask<T>) -> Result<()> {
    grid.ensure_same(mask.grid())?;
    if mask.is_empty() {
        return Err(invalid("mask", "observation set is empty"));
    }
    Ok(())
}

/// Worst `ln(‖P_λx‖_p / ‖1_ω P_λx‖_p)` over white-noise samples `x`, for
/// each `λ`, and its envelope fit.
pub fn fit_uncertainty<T: Real>(
    sim: &Simulator<T>,
    mask: &Mask<T>,
    lambdas: &[T],
    samples: usize,
    p: LpIndex<T>,
    seed: u64,
) -> Result<FitResult<T>> {
    let grid = sim.grid();
    grid.ensure_same(mask.grid())?;
    check_lambdas(grid, lambdas)?;
    p.check()?;
    if samples == 0 {
        return Err(invalid("samples", "at least one sample required"));
    }
    let floor = T::lit(DENOMINATOR_FLOOR);
    let per_sample: Vec<Vec<T>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let x = white_noise(grid, derive_seed(seed, s as u64));
            lambdas
                .iter()
                .map(|&lambda| {
                    let f = sim.projector_apply(lambda, &x)?;
                    let num = lp_norm(&f, p)?;
                    let den = masked_lp_norm(&f, mask.bits(), p)?;
                    if !(den > floor) {
                        return Err(ObsError::RatioOverflow {
                            sample: s,
                            lambda: lambda.as_f64(),
                        });
                    }
                    Ok((num / den).ln())
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    let mut worst = vec![T::neg_infinity(); lambdas.len()];
    let mut worst_sample = vec![0usize; lambdas.len()];
    for (s, row) in per_sample.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            if v > worst[k] {
                worst[k] = v;
                worst_sample[k] = s;
            }
        }
    }
    let (ln_d0, d1) = envelope_fit(lambdas, &worst)?;
    let residual_max = lambdas
        .iter()
        .zip(&worst)
        .fold(T::zero(), |m, (&l, &y)| m.max(ln_d0 + d1 * l - y));
    Ok(FitResult {
        p,
        samples,
        seed,
        lambdas: lambdas.to_vec(),
        worst_log_ratio: worst,
        worst_sample,
        ln_d0,
        d1,
        gamma1: T::one(),
        residual_max,
    })
}

/// Abstract observability inputs from a fit and dissipation constants, with `λ* = 0`,
/// `ω = 0` and `‖C‖ = ‖1_ω‖ = 1`.
pub fn params_from_fit<T: Real>(
    fit: &FitResult<T>,
    dissipation: &DissipationConstants<T>,
    semigroup_bound: T,
    horizon: T,
    r: LpIndex<T>,
) -> AbstractParams<T> {
    AbstractParams {
        semigroup_bound,
        omega: T::zero(),
        lambda_star: T::zero(),
        d0: fit.d0(),
        d1: fit.d1,
        gamma1: fit.gamma1,
        d2: dissipation.d2,
        d3: dissipation.d3,
        gamma2: dissipation.gamma2,
        gamma3: dissipation.gamma3,
        norm_c: T::one(),
        horizon,
        r,
    }
}

/// One `(λ, t)` cell of the dissipation check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationEntry<T> {
    pub lambda: T,
    pub t: T,
    /// `max_ξ |(1 − χ_λ(ξ)) e^{−t a(ξ)}|` over grid frequencies.
    pub measured: T,
    /// `e^{−c t (λ/2)^m}`.
    pub bound: T,
    /// `bound − measured`.
    pub margin: T,
    /// Frequency attaining `measured`.
    pub worst_xi: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport<T> {
    pub c: T,
    pub degree: u32,
    pub entries: Vec<DissipationEntry<T>>,
    /// Indices into `entries` with `margin < −1e−12`.
    pub violations: Vec<usize>,
}

impl<T: Real> DissipationReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn ensure_passed(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(&i) => {
                let e = &self.entries[i];
                Err(ObsError::HypothesisViolation(format!(
                    "dissipation fails at lambda = {}, t = {}, xi = {:?}: {} > {}",
                    e.lambda, e.t, e.worst_xi, e.measured, e.bound
                )))
            }
        }
    }
}

/// Pointwise check of `|(1 − χ_λ) e^{−ta}| ≤ e^{−ct(λ/2)^m}` on every grid
/// frequency, with `c` the ellipticity constant of `symbol`.
pub fn check_dissipation<T: Real>(
    sim: &Simulator<T>,
    symbol: &EllipticSymbol<T>,
    lambdas: &[T],
    times: &[T],
) -> Result<DissipationReport<T>> {
    for &l in lambdas {
        if !(l > T::zero()) {
            return Err(invalid("lambdas", format!("cutoffs must be > 0, got {l}")));
        }
    }
    for &t in times {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(invalid("times", format!("times must be finite and > 0, got {t}")));
        }
    }
    let c = ellipticity_constant(symbol, sphere_samples(symbol.dim()))?;
    let table = sim.tabulate(symbol)?;
    let degree = symbol.degree();
    let m = T::from_usize_lossy(degree as usize);
    let d = sim.grid().dim();
    let norms = sim.frequency_norms();
    let xi = sim.frequencies();
    let cells: Vec<(T, T)> = lambdas
        .iter()
        .flat_map(|&l| times.iter().map(move |&t| (l, t)))
        .collect();
    let entries: Vec<DissipationEntry<T>> = cells
        .par_iter()
        .map(|&(lambda, t)| {
            let mut measured = T::zero();
            let mut arg = 0usize;
            for (i, a) in table.values().iter().enumerate() {
                let v = (T::one() - cutoff_eta(norms[i] / lambda)) * (-t * a.re).exp();
                if v > measured {
                    measured = v;
                    arg = i;
                }
            }
            let bound = (-c * t * (lambda / T::lit(2.0)).powf(m)).exp();
            DissipationEntry {
                lambda,
                t,
                measured,
                bound,
                margin: bound - measured,
                worst_xi: xi[arg][..d].to_vec(),
            }
        })
        .collect();
    let slack = T::lit(DISSIPATION_SLACK);
    let violations = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.margin < -slack)
        .map(|(i, _)| i)
        .collect();
    Ok(DissipationReport {
        c,
        degree,
        entries,
        violations,
    })
}

/// `‖S_T x₀‖_p` and `‖1_ω S_· x₀‖_{L_r((0,T);L_p)}` on `n_t` midpoints.
#[allow(clippy::too_many_arguments)]
pub fn observability_parts<T: Real>(
    sim: &Simulator<T>,
    table: &SymbolTable<T>,
    mask: &Mask<T>,
    x0: &Field<T>,
    horizon: T,
    r: LpIndex<T>,
    p: LpIndex<T>,
    n_t: usize,
) -> Result<(T, T)> {
    if x0.is_zero() {
        return Err(ObsError::ZeroInitialState);
    }
    if n_t == 0 {
        return Err(invalid("n_t", "at least one time node required"));
    }
    let numerator = lp_norm(&sim.semigroup_apply_table(table, horizon, x0)?, p)?;
    let observed = midpoints(horizon, n_t)
        .into_iter()
        .map(|t| masked_lp_norm(&sim.semigroup_apply_table(table, t, x0)?, mask.bits(), p))
        .collect::<Result<Vec<T>>>()?;
    let denominator = lr_time_norm(&observed, r, horizon)?;
    Ok((numerator, denominator))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ObsRatioReport<T> {
    #[serde(rename = "T")]
    pub horizon: T,
    pub r: LpIndex<T>,
    pub p: LpIndex<T>,
    pub n_t: usize,
    pub seed: u64,
    /// `‖S_T x₀‖_p / ‖1_ω S_· x₀‖_{L_r((0,T);L_p)}` per sample.
    pub ratios: Vec<T>,
    /// Largest ratio.
    pub c_emp: T,
    pub worst_sample: usize,
    /// `ln C_obs` of the supplied bound.
    pub ln_cobs: Option<T>,
    /// `C_obs / C_emp`.
    pub margin: Option<LogValue<T>>,
}

impl<T: Real> ObsRatioReport<T> {
    /// `Some(margin ≥ 1)` when a bound was supplied.
    pub fn bound_holds(&self) -> Option<bool> {
        self.margin.as_ref().map(|m| m.ln >= T::zero())
    }
}

/// Empirical observability constant over white-noise initial states.
#[allow(clippy::too_many_arguments)]
pub fn estimate_observability_ratio<T: Real>(
    sim: &Simulator<T>,
    symbol: &EllipticSymbol<T>,
    mask: &Mask<T>,
    horizon: T,
    r: LpIndex<T>,
    p: LpIndex<T>,
    samples: usize,
    n_t: usize,
    seed: u64,
    bound: Option<&CertBundle<T>>,
) -> Result<ObsRatioReport<T>> {
    let grid = sim.grid();
    check_mask(grid, mask)?;
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(invalid("T", "horizon must be finite and > 0"));
    }
    r.check()?;
    p.check()?;
    if samples == 0 {
        return Err(invalid("samples", "at least one sample required"));
    }
    let table = sim.tabulate(symbol)?;
    let floor = T::lit(DENOMINATOR_FLOOR);
    let ratios: Vec<T> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let x0 = white_noise(grid, derive_seed(seed, s as u64));
            let (num, den) = observability_parts(sim, &table, mask, &x0, horizon, r, p, n_t)?;
            if !(den > floor) {
                return Err(ObsError::DenominatorUnderflow { sample: s });
            }
            Ok(num / den)
        })
        .collect::<Result<_>>()?;
    let (worst_sample, c_emp) = ratios
        .iter()
        .enumerate()
        .fold((0usize, T::neg_infinity()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let ln_cobs = bound.map(|b| b.best_ln_cobs());
    let margin = ln_cobs.map(|l| LogValue::from_ln(l - c_emp.ln()));
    Ok(ObsRatioReport {
        horizon,
        r,
        p,
        n_t,
        seed,
        ratios,
        c_emp,
        worst_sample,
        ln_cobs,
        margin,
    })
}

/// How the periodic box grows with the hole radius `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthRule<T> {
    /// Box length per unit radius; at least 8.
    pub box_per_radius: T,
    /// Box length used for `n = 0` and as a lower bound.
    pub min_box: T,
    /// Target lattice spacing; `N` is the next power of two.
    pub spacing: T,
    /// Window length for the reported thickness at fixed `L`.
    pub window: T,
}

impl<T: Real> Default for GrowthRule<T> {
    fn default() -> Self {
        GrowthRule {
            box_per_radius: T::lit(8.0),
            min_box: T::lit(16.0),
            spacing: T::lit(0.125),
            window: T::one(),
        }
    }
}

impl<T: Real> GrowthRule<T> {
    pub fn grid(&self, dim: usize, radius: T) -> Result<GridSpec<T>> {
        if !(self.box_per_radius >= T::lit(8.0)) {
            return Err(invalid("box_per_radius", "box must be at least 8 radii"));
        }
        if !(self.spacing > T::zero()) || !(self.min_box > T::zero()) {
            return Err(invalid("spacing", "spacing and min_box must be > 0"));
        }
        let length = (self.box_per_radius * radius).max(self.min_box);
        let cells = (length / self.spacing).ceil().to_usize().unwrap_or(0).max(8);
        GridSpec::cubic(dim, cells.next_power_of_two(), length)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow<T> {
    /// Hole radius.
    pub n: T,
    pub box_length: T,
    pub cells: usize,
    /// `ρ` of the holed mask at window length `GrowthRule::window`.
    pub rho_fixed_l: T,
    /// `‖S_T f_n‖_p` with `f_n = p₁`.
    pub numerator: T,
    /// `‖p_{T+1}‖_p` evaluated directly.
    pub kernel_norm: T,
    pub denominator: T,
    pub ratio: T,
}

/// Observability ratio of `f_n = p₁` centered in a hole of radius `n`, on a
/// box grown by `rule`. `n = 0` observes the whole box.
#[allow(clippy::too_many_arguments)]
pub fn counterexample_sweep<T: Real>(
    symbol: &EllipticSymbol<T>,
    radii: &[T],
    horizon: T,
    r: LpIndex<T>,
    p: LpIndex<T>,
    n_t: usize,
    rule: &GrowthRule<T>,
) -> Result<Vec<CounterexampleRow<T>>> {
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(invalid("T", "horizon must be finite and > 0"));
    }
    r.check()?;
    p.check()?;
    let d = symbol.dim();
    radii
        .iter()
        .map(|&n| {
            if !(n >= T::zero()) {
                return Err(invalid("radii", format!("radius must be >= 0, got {n}")));
            }
            let grid = rule.grid(d, n)?;
            let sim = Simulator::new(grid.clone());
            let mask = if n == T::zero() {
                Mask::full(&grid)
            } else {
                gen_mask(
                    &grid,
                    &MaskFamily::Holed {
                        radius: n,
                        center: vec![T::zero(); d],
                    },
                )?
            };
            let rho_fixed_l = thickness_rho(&mask, &vec![rule.window; d])?.rho;
            let table = sim.tabulate(symbol)?;
            let f = sim.kernel_field(symbol, T::one())?;
            let (numerator, denominator) = observability_parts(&sim, &table, &mask, &f, horizon, r, p, n_t)?;
            let kernel_norm = lp_norm(&sim.kernel_field(symbol, horizon + T::one())?, p)?;
            if !(denominator > T::lit(DENOMINATOR_FLOOR)) {
                return Err(ObsError::DenominatorUnderflow { sample: 0 });
            }
            Ok(CounterexampleRow {
                n,
                box_length: grid.lengths()[0],
                cells: grid.shape()[0],
                rho_fixed_l,
                numerator,
                kernel_norm,
                denominator,
                ratio: numerator / denominator,
            })
        })
        .collect()
}
