//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every expected value is recomputed here from first principles
//! rather than taken from the library.

use std::f64::consts::{E, LN_2, PI};
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex;
use obscert::cert_engine::{
    certify, cobs_closed_form, cobs_series_bound, derived_constants, dissipation_constants, AbstractParams,
    CertBundle, HorizonBranch, LpIndex,
};
use obscert::cli::{run, ExperimentConfig, RunOptions};
use obscert::control::{hum_control, CgOptions};
use obscert::spectral::{derive_seed, ellipticity_constant, white_noise, EllipticSymbol, Field, GridSpec, Simulator};
use obscert::thickness::{gen_mask, thickness_rho, thickness_rho_bruteforce, Mask, MaskFamily};
use obscert::verify::{
    check_dissipation, counterexample_sweep, estimate_observability_ratio, fit_uncertainty, params_from_fit,
    GrowthRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("runtime {:.2} s exceeds {limit_s} s", elapsed.as_secs_f64())
    })
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_params(rng: &mut ChaCha8Rng) -> AbstractParams<f64> {
    let gamma1 = log_uniform(rng, 0.2, 2.0);
    AbstractParams {
        semigroup_bound: log_uniform(rng, 1.0, 10.0),
        omega: rng.random_range(-1.0..2.0),
        lambda_star: if rng.random_bool(0.2) { 0.0 } else { log_uniform(rng, 0.01, 5.0) },
        d0: log_uniform(rng, 1.0, 1e3),
        d1: log_uniform(rng, 0.01, 10.0),
        gamma1,
        d2: log_uniform(rng, 1.0, 10.0),
        d3: log_uniform(rng, 0.01, 10.0),
        gamma2: gamma1 + log_uniform(rng, 1.0, 3.0),
        gamma3: log_uniform(rng, 0.5, 2.0),
        norm_c: log_uniform(rng, 0.1, 10.0),
        horizon: log_uniform(rng, 0.1, 10.0),
        r: LpIndex::Finite(1.0),
    }
}

/// Proof constants evaluated directly in `f64`.
struct Oracle {
    alpha: f64,
    nu: f64,
    k1: f64,
    k2: f64,
    k3: f64,
    q: f64,
    short: bool,
}

fn oracle(p: &AbstractParams<f64>) -> Oracle {
    let wp = p.omega.max(0.0);
    let m = p.semigroup_bound;
    let gap = p.gamma2 - p.gamma1;
    let t = p.horizon;
    let k1 = (p.d0 * p.norm_c + 1.0) * p.d2 * m * m * (1.25 * wp * t).exp();
    let alpha0 = (2.0 * 4f64.powf(p.gamma3)).powf(1.0 / gap);
    let nu0 = (2.0 * (4.0 * k1).ln() / (E * LN_2 * p.d1))
        .powf(1.0 / p.gamma1)
        .max(2.0 * p.lambda_star);
    let t0 = (2.0 * p.d1 * alpha0.powf(p.gamma2) / (p.d3 * nu0.powf(gap))).powf(1.0 / p.gamma3);
    let short = t <= t0;
    let (alpha, nu) = if short {
        (alpha0, nu0 * (t0 / t).powf(p.gamma3 / gap))
    } else {
        (alpha0 * (t / t0).powf(p.gamma3 / p.gamma2), nu0)
    };
    let q = alpha.powf(p.gamma2) / 4f64.powf(p.gamma3);
    let k2 = p.d3 * (t / 4.0).powf(p.gamma3) * nu.powf(p.gamma2) - p.d1 * nu.powf(p.gamma1);
    // equivalent form of K₃ obtained from the identity d₃T^{γ₃}ν^{γ₂−γ₁} = 2d₁α^{γ₂}
    let k3 = nu.powf(p.gamma1) * p.d1 * q / (q - 1.0);
    Oracle {
        alpha,
        nu,
        k1,
        k2,
        k3,
        q,
        short,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b5c_e271);
    let mut worst_identity = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut min_gap = f64::INFINITY;
    let (mut short, mut long) = (0, 0);
    for i in 0..1000 {
        let p = random_params(&mut rng);
        let d = derived_constants(&p).map_err(|e| format!("tuple {i}: {e}"))?;
        let o = oracle(&p);
        let lhs = p.d3 * p.horizon.powf(p.gamma3) * d.nu.powf(p.gamma2 - p.gamma1);
        let rhs = 2.0 * p.d1 * d.alpha.powf(p.gamma2);
        worst_identity = worst_identity.max(rel(lhs, rhs));
        for (a, b) in [(d.alpha, o.alpha), (d.nu, o.nu), (d.k1, o.k1), (d.k2, o.k2), (d.k3, o.k3), (d.growth, o.q)] {
            worst_oracle = worst_oracle.max(rel(a, b));
        }
        ensure((d.branch == HorizonBranch::Short) == o.short, || format!("tuple {i}: branch"))?;
        if o.short {
            short += 1;
        } else {
            long += 1;
        }
        let k3_floor = 2.0 * (4.0 * d.k1).ln() / (E * LN_2);
        ensure(d.k2 > d.k3 && d.k3 > 0.0 && d.k3 >= k3_floor * (1.0 - 1e-12), || {
            format!("tuple {i}: K2 = {}, K3 = {}, floor = {k3_floor}", d.k2, d.k3)
        })?;
        let closed = cobs_closed_form(&p).map_err(|e| format!("tuple {i}: {e}"))?;
        let series = cobs_series_bound(&p, 1e-12).map_err(|e| format!("tuple {i}: {e}"))?;
        let ln_series = series.cobs_series.as_ref().expect("series bound").ln;
        let ln_closed = closed.cobs_closed.ln;
        min_gap = min_gap.min(ln_closed - ln_series);
        ensure(ln_series <= ln_closed + 1e-12 * ln_closed.abs().max(1.0), || {
            format!("tuple {i}: ln C_series = {ln_series} > ln C_closed = {ln_closed}")
        })?;
    }
    ensure(worst_identity <= 1e-12, || format!("identity rel. error {worst_identity:e}"))?;
    ensure(worst_oracle <= 1e-10, || format!("oracle rel. error {worst_oracle:e}"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!(
        "1000 tuples ({short} short, {long} long horizon), 0 violations; identity rel. err {worst_identity:.1e}; \
         min ln(closed/series) = {min_gap:.3}; {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

/// Smooth cutoff written out independently of the library.
fn eta(r: f64) -> f64 {
    let phi = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let u = 2.0 * r - 1.0;
        phi(1.0 - u) / (phi(1.0 - u) + phi(u))
    }
}

fn signed_k(i: usize, n: usize) -> f64 {
    if i < n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Name, symbol, exact ellipticity constant and pointwise symbol.
type DissCase = (&'static str, EllipticSymbol<f64>, f64, fn(f64, f64) -> f64);

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let n = 64;
    let l = 16.0;
    let grid = GridSpec::cubic(2, n, l).map_err(|e| e.to_string())?;
    let sim = Simulator::new(grid);
    let lambdas = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0];
    let times = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0];
    let cases: [DissCase; 2] = [
        ("|xi|^2", EllipticSymbol::laplacian(2), 1.0, |a, b| a * a + b * b),
        (
            "xi1^4+xi2^4",
            EllipticSymbol::sum_of_powers(2, 4).map_err(|e| e.to_string())?,
            0.5,
            |a, b| a.powi(4) + b.powi(4),
        ),
    ];
    let mut worst_margin = f64::INFINITY;
    let mut cells = 0;
    for (name, symbol, c_exact, a) in &cases {
        let report = check_dissipation(&sim, symbol, &lambdas, &times).map_err(|e| e.to_string())?;
        ensure(rel(report.c, *c_exact) < 1e-9, || format!("{name}: c = {} vs {c_exact}", report.c))?;
        ensure(report.violations.is_empty(), || {
            format!("{name}: {} violations", report.violations.len())
        })?;
        let m = symbol.degree() as f64;
        for e in &report.entries {
            let mut sup = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let xi = 2.0 * PI * signed_k(i, n) / l;
                    let zeta = 2.0 * PI * signed_k(j, n) / l;
                    let r = (xi * xi + zeta * zeta).sqrt();
                    sup = sup.max((1.0 - eta(r / e.lambda)) * (-e.t * a(xi, zeta)).exp());
                }
            }
            let bound = (-c_exact * e.t * (e.lambda / 2.0).powf(m)).exp();
            ensure(sup <= bound + 1e-12, || {
                format!("{name}: oracle sup {sup} > {bound} at lambda = {}, t = {}", e.lambda, e.t)
            })?;
            ensure((sup - e.measured).abs() <= 1e-14, || {
                format!("{name}: library sup {} vs oracle {sup}", e.measured)
            })?;
            worst_margin = worst_margin.min(bound - sup);
            cells += 1;
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "{cells} (lambda, t) cells over 2 symbols, 0 violations; min margin {worst_margin:.3e}; {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn linf_rel(a: &[Complex<f64>], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm())) / scale
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    // Gaussian closed form: S_t e^{−x²/4} = (1+t)^{−1/2} e^{−x²/(4(1+t))}
    let grid = GridSpec::cubic(1, 256, 40.0).map_err(|e| e.to_string())?;
    let sim = Simulator::new(grid.clone());
    let heat = EllipticSymbol::laplacian(1);
    let f = Field::from_fn(&grid, |x: &[f64]| Complex::new((-x[0] * x[0] / 4.0).exp(), 0.0));
    let xs: Vec<f64> = (0..256).map(|j| -20.0 + j as f64 * 40.0 / 256.0).collect();
    let mut gauss_err = 0.0f64;
    for t in [0.1f64, 0.5, 1.0, 2.0] {
        let st = sim.semigroup_apply(&heat, t, &f).map_err(|e| e.to_string())?;
        let exact: Vec<f64> = xs
            .iter()
            .map(|x| (1.0 / (1.0 + t)).sqrt() * (-x * x / (4.0 * (1.0 + t))).exp())
            .collect();
        gauss_err = gauss_err.max(linf_rel(st.values(), &exact));
    }
    ensure(gauss_err <= 1e-6, || format!("Gaussian rel. Linf error {gauss_err:e}"))?;

    // composition on random fields
    let mut comp_err = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for k in 0..20 {
        let x = white_noise(&grid, derive_seed(7, k));
        let (t, s) = (rng.random_range(0.01..1.0), rng.random_range(0.01..1.0));
        let a = sim
            .semigroup_apply(&heat, t, &sim.semigroup_apply(&heat, s, &x).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let b = sim.semigroup_apply(&heat, t + s, &x).map_err(|e| e.to_string())?;
        let mut d = a.clone();
        d.axpy(-1.0, &b).map_err(|e| e.to_string())?;
        comp_err = comp_err.max((d.inner(&d).re / b.inner(&b).re).sqrt());
    }
    ensure(comp_err <= 1e-10, || format!("composition rel. error {comp_err:e}"))?;

    // m = 2: kernel against the analytic heat kernel (which obeys the scaling law exactly)
    let mut heat_kernel_err = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        let p = sim.kernel_field(&heat, t).map_err(|e| e.to_string())?;
        let exact: Vec<f64> = xs
            .iter()
            .map(|x| (4.0 * PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp())
            .collect();
        heat_kernel_err = heat_kernel_err.max(linf_rel(p.values(), &exact));
    }
    ensure(heat_kernel_err <= 1e-4, || format!("m = 2 kernel rel. error {heat_kernel_err:e}"))?;

    // m = 4: p_16(x_j) = 16^{−1/4} p₁(x_j/2) and x_j/2 is the lattice point j/2 + N/4
    let n = 2048;
    let big = GridSpec::cubic(1, n, 160.0).map_err(|e| e.to_string())?;
    let sim4 = Simulator::new(big);
    let quartic = EllipticSymbol::sum_of_powers(1, 4).map_err(|e| e.to_string())?;
    let p1 = sim4.kernel_field(&quartic, 1.0).map_err(|e| e.to_string())?;
    let p16 = sim4.kernel_field(&quartic, 16.0).map_err(|e| e.to_string())?;
    let scale = p16.max_abs();
    let mut quartic_err = 0.0f64;
    for j in (0..n).step_by(2) {
        let predicted: Complex<f64> = p1.values()[j / 2 + n / 4] * 0.5;
        quartic_err = quartic_err.max((p16.values()[j] - predicted).norm() / scale);
    }
    ensure(quartic_err <= 1e-4, || format!("m = 4 scaling rel. error {quartic_err:e}"))?;
    Ok(format!(
        "Gaussian {gauss_err:.1e}, composition {comp_err:.1e}, m=2 kernel {heat_kernel_err:.1e}, \
         m=4 scaling {quartic_err:.1e}; {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let grid = GridSpec::cubic(2, 64, 64.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    let mut compare = |mask: &Mask<f64>, l: [f64; 2], what: &str| -> Result<(), String> {
        let fast = thickness_rho(mask, &l).map_err(|e| e.to_string())?;
        let slow = thickness_rho_bruteforce(mask, &l).map_err(|e| e.to_string())?;
        checked += 1;
        ensure(fast == slow, || format!("{what}: {fast:?} != {slow:?}"))
    };
    for k in 0..100 {
        let density = rng.random_range(0.0..1.0);
        let mask = gen_mask(&grid, &MaskFamily::Random { density, seed: k }).map_err(|e| e.to_string())?;
        let l = [rng.random_range(1..=64) as f64, rng.random_range(1..=64) as f64];
        compare(&mask, l, &format!("random mask {k}"))?;
    }
    let mut structured: Vec<(Mask<f64>, [f64; 2], String)> = vec![
        (Mask::full(&grid), [7.0, 5.0], "full".into()),
        (Mask::empty(&grid), [3.0, 9.0], "empty".into()),
    ];
    for (i, period) in [2usize, 3, 5, 8, 16, 64].iter().enumerate() {
        let m = gen_mask(&grid, &MaskFamily::PeriodicStripes { duty: 0.5, period: *period }).map_err(|e| e.to_string())?;
        structured.push((m, [*period as f64, (i + 1) as f64], format!("stripes period {period}")));
    }
    for (radius, l) in [(3.0, [6.0, 6.0]), (8.0, [16.0, 4.0]), (20.0, [40.0, 40.0]), (31.5, [64.0, 64.0])] {
        let m = gen_mask(
            &grid,
            &MaskFamily::Holed {
                radius,
                center: vec![0.5, -3.0],
            },
        )
        .map_err(|e| e.to_string())?;
        structured.push((m, l, format!("hole radius {radius}")));
    }
    let mut single = Mask::empty(&grid);
    single.bits_mut()[64 * 17 + 40] = true;
    structured.push((single.clone(), [64.0, 64.0], "single cell, box window".into()));
    structured.push((single, [1.0, 1.0], "single cell, unit window".into()));
    let checker: Vec<bool> = (0..64 * 64).map(|i| (i / 64 + i % 64) % 2 == 0).collect();
    let checker = Mask::new(grid.clone(), checker).map_err(|e| e.to_string())?;
    structured.push((checker.clone(), [2.0, 2.0], "checkerboard 2x2".into()));
    structured.push((checker.clone(), [3.0, 3.0], "checkerboard 3x3".into()));
    let random = gen_mask(&grid, &MaskFamily::Random { density: 0.3, seed: 99 }).map_err(|e| e.to_string())?;
    let shifted = random.shifted(&[13, 50]).map_err(|e| e.to_string())?;
    structured.push((random, [5.0, 11.0], "random 0.3".into()));
    structured.push((shifted, [5.0, 11.0], "random 0.3 shifted".into()));
    let column = Mask::new(grid.clone(), (0..64 * 64).map(|i| i % 64 == 0).collect()).map_err(|e| e.to_string())?;
    structured.push((column.clone(), [64.0, 1.0], "single column, thin window".into()));
    structured.push((column, [1.0, 64.0], "single column, wide window".into()));
    ensure(structured.len() == 20, || format!("{} structured masks", structured.len()))?;
    for (m, l, what) in &structured {
        compare(m, *l, what)?;
    }
    Ok(format!(
        "{checked} masks (100 random, 20 structured), all identical; {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

/// Shared setting of criteria 5 and 7: d = 1 heat on a box of 16 with 128
/// cells, stripes of width 1/2 and period 1.
struct Pipeline {
    sim: Simulator<f64>,
    heat: EllipticSymbol<f64>,
    mask: Mask<f64>,
    bundle: CertBundle<f64>,
}

const PIPELINE_SEED: u64 = 2024;

fn pipeline() -> Result<(Pipeline, String), String> {
    let grid = GridSpec::cubic(1, 128, 16.0).map_err(|e| e.to_string())?;
    let mask = gen_mask(&grid, &MaskFamily::PeriodicStripes { duty: 0.5, period: 8 }).map_err(|e| e.to_string())?;
    let rho = thickness_rho(&mask, &[1.0]).map_err(|e| e.to_string())?.rho;
    ensure(rho == 0.5, || format!("stripe thickness {rho}"))?;
    let sim = Simulator::new(grid);
    let heat = EllipticSymbol::laplacian(1);
    let lambdas: Vec<f64> = (1..=8).map(|k| 0.75 * k as f64).collect();
    let fit = fit_uncertainty(&sim, &mask, &lambdas, 64, LpIndex::Finite(2.0), derive_seed(PIPELINE_SEED, 1))
        .map_err(|e| e.to_string())?;
    for (l, y) in fit.lambdas.iter().zip(&fit.worst_log_ratio) {
        ensure(fit.ln_d0 + fit.d1 * l >= *y, || format!("envelope below data at lambda = {l}"))?;
    }
    let c = ellipticity_constant(&heat, 4096).map_err(|e| e.to_string())?;
    let diss = dissipation_constants(c, 2, 2.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    ensure(diss.d2 == 1.0 && rel(diss.d3, 0.25) < 1e-12, || {
        format!("d2 = {}, d3 = {}", diss.d2, diss.d3)
    })?;
    let params = params_from_fit(&fit, &diss, 1.0, 0.5, LpIndex::Finite(2.0));
    let bundle = certify(&params, 1e-12).map_err(|e| e.to_string())?;
    let note = format!("d0 = {:.4}, d1 = {:.4}, ln C_obs = {:.2}", fit.d0(), fit.d1, bundle.best_ln_cobs());
    Ok((
        Pipeline {
            sim,
            heat,
            mask,
            bundle,
        },
        note,
    ))
}

fn criterion_5(p: &Pipeline, note: &str) -> Outcome {
    let start = Instant::now();
    let two = LpIndex::Finite(2.0);
    let report = estimate_observability_ratio(
        &p.sim,
        &p.heat,
        &p.mask,
        0.5,
        two,
        two,
        64,
        256,
        derive_seed(PIPELINE_SEED, 2),
        Some(&p.bundle),
    )
    .map_err(|e| e.to_string())?;
    ensure(report.ratios.len() == 64 && report.ratios.iter().all(|r| r.is_finite() && *r > 0.0), || {
        "non-finite ratio".into()
    })?;
    let ln_margin = p.bundle.best_ln_cobs() - report.c_emp.ln();
    ensure(ln_margin >= 0.0, || format!("ln(C_obs/C_emp) = {ln_margin}"))?;
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "C_emp = {:.4}, {note}, ln(C_obs/C_emp) = {ln_margin:.2}; {:.2} s",
        report.c_emp,
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let heat = EllipticSymbol::laplacian(1);
    let two = LpIndex::Finite(2.0);
    let radii = [2.0, 4.0, 8.0, 16.0];
    let rows = counterexample_sweep(&heat, &radii, 0.1, two, two, 256, &GrowthRule::default()).map_err(|e| e.to_string())?;
    // ‖p_t‖₂ = (8πt)^{−1/4} for the heat kernel on ℝ
    let exact = (8.0 * PI * 1.1f64).powf(-0.25);
    let mut num_err = 0.0f64;
    for r in &rows {
        ensure(r.box_length >= 8.0 * r.n, || format!("box {} for n = {}", r.box_length, r.n))?;
        num_err = num_err.max(rel(r.numerator, exact));
    }
    ensure(num_err <= 1e-8, || format!("numerator rel. deviation {num_err:e}"))?;
    for w in rows.windows(2) {
        ensure(w[1].ratio >= 0.99 * w[0].ratio, || {
            format!("ratio drops from {} (n = {}) to {} (n = {})", w[0].ratio, w[0].n, w[1].ratio, w[1].n)
        })?;
    }
    let growth = rows[3].ratio / rows[0].ratio;
    ensure(growth >= 10.0, || format!("ratio(16)/ratio(2) = {growth}"))?;
    within(start.elapsed(), 60.0)?;
    let listing: Vec<String> = rows.iter().map(|r| format!("{}:{:.3e}", r.n, r.ratio)).collect();
    Ok(format!(
        "ratios {}; ratio(16)/ratio(2) = {growth:.3e}; numerator dev {num_err:.1e}; {:.2} s",
        listing.join(", "),
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_7(p: &Pipeline) -> Outcome {
    let start = Instant::now();
    let grid = p.sim.grid();
    let x0 = white_noise(grid, derive_seed(PIPELINE_SEED, 3));
    let n_t = 256;
    let cg = CgOptions::default();
    let res = hum_control(&p.sim, &p.heat, &p.mask, &x0, 0.5, n_t, &cg, Some(&p.bundle)).map_err(|e| e.to_string())?;
    ensure(res.cg_iterations <= 200, || format!("{} CG iterations", res.cg_iterations))?;

    // independent Duhamel sum and control norm
    let dt = 0.5 / n_t as f64;
    let mut x = p.sim.semigroup_apply(&p.heat, 0.5, &x0).map_err(|e| e.to_string())?;
    let mut norm_sq = 0.0;
    for (j, u) in res.controls.iter().enumerate() {
        let tau = (j as f64 + 0.5) * dt;
        let mut masked = u.clone();
        for (v, &m) in masked.values_mut().iter_mut().zip(p.mask.bits()) {
            if !m {
                *v = Complex::new(0.0, 0.0);
            }
        }
        let pushed = p.sim.semigroup_apply(&p.heat, 0.5 - tau, &masked).map_err(|e| e.to_string())?;
        x.axpy(dt, &pushed).map_err(|e| e.to_string())?;
        norm_sq += dt * u.inner(u).re;
    }
    let x0_norm = x0.inner(&x0).re.sqrt();
    let residual = x.inner(&x).re.sqrt() / x0_norm;
    ensure(residual <= 1e-6, || format!("terminal residual {residual:e}"))?;
    let three = [norm_sq, res.cost_sq_gramian, res.cost_sq_rhs];
    let hi = three.iter().cloned().fold(f64::MIN, f64::max);
    let lo = three.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (hi - lo) / hi;
    ensure(spread <= 1e-8, || format!("cost identity spread {spread:e}: {three:?}"))?;
    let ln_slack = p.bundle.best_ln_cobs() + x0_norm.ln() - norm_sq.sqrt().ln();
    ensure(ln_slack >= 0.0, || format!("cost exceeds C_obs |x0| (ln slack {ln_slack})"))?;
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "{} CG iterations, residual {residual:.2e}, cost {:.4} (|x0| = {x0_norm:.3}), identity spread {spread:.1e}, \
         ln(C_obs|x0|/cost) = {ln_slack:.2}; {:.2} s",
        res.cg_iterations,
        norm_sq.sqrt(),
        start.elapsed().as_secs_f64()
    ))
}

fn csv_bodies(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.push((name, std::fs::read(&path).map_err(|e| e.to_string())?));
        }
    }
    out.sort();
    Ok(out)
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let configs = [
        r#"{"command":"verify-ur","seed":5,"params":{"grid":{"shape":[64],"box":[16.0]},
            "mask":{"family":"periodic_stripes","duty":0.5,"period":4},"lambdas":[1.0,2.0,3.0],"samples":16}}"#,
        r#"{"command":"verify-obs","seed":6,"params":{"grid":{"shape":[64],"box":[16.0]},
            "symbol":{"kind":"laplacian","dim":1},"mask":{"family":"periodic_stripes","duty":0.5,"period":4},
            "T":0.5,"samples":16,"n_t":64,"bound":{"source":"fit","lambdas":[1.0,2.0,3.0],"samples":16}}}"#,
        r#"{"command":"verify-diss","params":{"grid":{"shape":[32,32],"box":[8.0,8.0]},
            "symbol":{"kind":"sum_of_powers","dim":2,"degree":4},"lambdas":[1.0,2.0,4.0],"times":[0.1,0.5]}}"#,
        r#"{"command":"counterexample","params":{"symbol":{"kind":"laplacian","dim":1},"radii":[0.0,2.0,4.0],
            "T":0.1,"n_t":64}}"#,
        r#"{"command":"thickness","params":{"grid":{"shape":[32,32],"box":[4.0,4.0]},
            "mask":{"family":"random","density":0.4,"seed":11},"L":[1.0,0.5],"bruteforce":true}}"#,
        r#"{"command":"control","seed":8,"params":{"grid":{"shape":[64],"box":[8.0]},
            "symbol":{"kind":"laplacian","dim":1},"mask":{"family":"periodic_stripes","duty":0.5,"period":8},
            "x0":{"kind":"white"},"T":0.5,"n_t":64}}"#,
    ];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for (k, text) in configs.iter().enumerate() {
        let cfg = ExperimentConfig::from_json(text).map_err(|e| format!("config {k}: {e}"))?;
        let mut bodies = Vec::new();
        for (tag, threads) in [("a", 1), ("b", 4), ("c", 4)] {
            let dir = tmp.path().join(format!("{k}{tag}"));
            let opts = RunOptions {
                out_dir: dir.clone(),
                threads: Some(threads),
                ..Default::default()
            };
            let outcome = run(&cfg, &opts).map_err(|e| format!("config {k}: {e}"))?;
            ensure(outcome.status.code() == 0, || format!("config {k}: status {:?}", outcome.status))?;
            bodies.push(csv_bodies(&dir)?);
        }
        ensure(!bodies[0].is_empty(), || format!("config {k}: no CSV written"))?;
        ensure(bodies[0] == bodies[1] && bodies[1] == bodies[2], || {
            format!("config {:?}: CSV bodies differ across reruns", cfg.command)
        })?;
        files += bodies[0].len();
    }
    Ok(format!(
        "{} experiments x (1, 4, 4 threads): {files} CSV files byte-identical; {:.2} s",
        configs.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: u32, outcome: Outcome| match outcome {
        Ok(msg) => println!("criterion {n}: PASS: {msg}"),
        Err(msg) => {
            failures += 1;
            println!("criterion {n}: FAIL: {msg}");
        }
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    match pipeline() {
        Ok((p, note)) => {
            report(5, criterion_5(&p, &note));
            report(6, criterion_6());
            report(7, criterion_7(&p));
        }
        Err(e) => {
            report(5, Err(format!("pipeline setup: {e}")));
            report(6, criterion_6());
            report(7, Err(format!("pipeline setup: {e}")));
        }
    }
    report(8, criterion_8());
    if failures > 0 {
        println!("acceptance: {failures} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 8 criteria passed");
}
