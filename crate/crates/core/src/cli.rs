//! Batch front-end behind the `obscert` binary.
//!
//! A run reads one JSON config
//!
//! ```json
//! { "command": "verify-obs", "seed": 7, "params": { ... } }
//! ```
//!
//! validates `params` against the command's schema (unknown fields are
//! rejected) and writes its artifacts plus `manifest.json` into the output
//! directory. All randomness derives from the master seed: consumer `k` gets
//! `derive_seed(master, k)` (see [`crate::spectral::derive_seed`]) and splits it
//! again per sample.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cert_engine::{
    certify, dissipation_constants, elliptic_cobs, AbstractParams, CertBundle, EllipticInputs, LpIndex,
};
use crate::control::{hum_control, CgOptions};
use crate::error::{invalid, ObsError, Result};
use crate::spectral::{
    derive_seed, ellipticity_constant, io, EllipticSymbol, FieldKind, GridSpec, Simulator, SymbolTerm,
};
use crate::thickness::{
    gen_mask, mask_from_pbm, mask_to_pbm, thickness_rho, thickness_rho_bruteforce, Mask, MaskFamily,
    ThicknessReport,
};
use crate::verify::{
    check_dissipation, counterexample_sweep, estimate_observability_ratio, fit_uncertainty, params_from_fit,
    GrowthRule,
};

/// Seed streams of the consumers of the master seed.
pub mod streams {
    pub const FIT: u64 = 1;
    pub const OBS: u64 = 2;
    pub const CONTROL_X0: u64 = 3;
}

/// Exit statuses of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    InvalidConfig,
    HypothesisViolation,
    NonConvergence,
    Io,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::InvalidConfig => 2,
            Status::HypothesisViolation => 3,
            Status::NonConvergence => 4,
            Status::Io => 5,
        }
    }

    pub fn of_error(err: &ObsError) -> Status {
        match err {
            ObsError::InvalidParams { .. }
            | ObsError::GridMismatch(_)
            | ObsError::WindowTooLarge { .. }
            | ObsError::NotStronglyElliptic { .. }
            | ObsError::ZeroInitialState
            | ObsError::Format(_)
            | ObsError::Json(_) => Status::InvalidConfig,
            ObsError::HypothesisViolation(_)
            | ObsError::NonFiniteConstant { .. }
            | ObsError::DenominatorUnderflow { .. }
            | ObsError::RatioOverflow { .. } => Status::HypothesisViolation,
            ObsError::SeriesNonConvergence { .. } | ObsError::NonConvergence { .. } => Status::NonConvergence,
            ObsError::Io(_) => Status::Io,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Cert,
    EllipticCert,
    VerifyUr,
    VerifyDiss,
    VerifyObs,
    Counterexample,
    Thickness,
    Control,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Cert => "cert",
            CommandKind::EllipticCert => "elliptic-cert",
            CommandKind::VerifyUr => "verify-ur",
            CommandKind::VerifyDiss => "verify-diss",
            CommandKind::VerifyObs => "verify-obs",
            CommandKind::Counterexample => "counterexample",
            CommandKind::Thickness => "thickness",
            CommandKind::Control => "control",
        }
    }
}

/// Raw config file; `params` is checked against the schema of `command`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub shape: Vec<usize>,
    #[serde(rename = "box")]
    pub lengths: Vec<f64>,
}

impl GridConfig {
    fn build(&self) -> Result<GridSpec<f64>> {
        GridSpec::new(self.shape.clone(), self.lengths.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub exponents: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Principal symbol `a(ξ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolConfig {
    /// `|ξ|²`.
    Laplacian { dim: usize },
    /// `Σ ξᵢ^m`.
    SumOfPowers { dim: usize, degree: u32 },
    /// Explicit coefficients of `ξ^α` in `a(ξ)`.
    Terms { dim: usize, terms: Vec<TermConfig> },
}

impl SymbolConfig {
    fn build(&self) -> Result<EllipticSymbol<f64>> {
        match self {
            SymbolConfig::Laplacian { dim } => {
                if !(1..=3).contains(dim) {
                    return Err(invalid("dim", "must be 1..=3"));
                }
                Ok(EllipticSymbol::laplacian(*dim))
            }
            SymbolConfig::SumOfPowers { dim, degree } => EllipticSymbol::sum_of_powers(*dim, *degree),
            SymbolConfig::Terms { dim, terms } => EllipticSymbol::from_symbol_terms(
                *dim,
                terms
                    .iter()
                    .map(|t| SymbolTerm {
                        exponents: t.exponents.clone(),
                        coeff: Complex::new(t.re, t.im),
                    })
                    .collect(),
            ),
        }
    }
}

/// A generated mask or a mask file (`.pbm`, or a 0/1 binary field).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaskSource {
    File { file: PathBuf },
    Generated(MaskFamily<f64>),
}

impl MaskSource {
    fn build(&self, grid: &GridSpec<f64>, base: &Path) -> Result<Mask<f64>> {
        let mask = match self {
            MaskSource::Generated(family) => gen_mask(grid, family)?,
            MaskSource::File { file } => {
                let path = base.join(file);
                if path.extension().is_some_and(|e| e == "pbm") {
                    mask_from_pbm(&std::fs::read_to_string(&path)?, Some(grid.lengths().to_vec()))?
                } else {
                    Mask::from_field(&io::read_field(&path)?)?
                }
            }
        };
        grid.ensure_same(mask.grid())?;
        Ok(mask)
    }
}

/// Where a run's certified `C_obs` comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundSource {
    /// A `CertBundle` JSON file.
    CertFile { path: PathBuf },
    /// Envelope-fitted uncertainty constants on the run's grid and mask, with
    /// exact dissipation constants of the symbol.
    Fit {
        lambdas: Vec<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "one", rename = "M")]
        semigroup_bound: f64,
        #[serde(default = "one", rename = "C_d")]
        projector_bound: f64,
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
    },
}

fn default_samples() -> usize {
    64
}

fn default_n_t() -> usize {
    256
}

fn one() -> f64 {
    1.0
}

fn two() -> LpIndex<f64> {
    LpIndex::Finite(2.0)
}

fn default_rel_tol() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertConfig {
    pub params: AbstractParams<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticCertConfig {
    pub inputs: EllipticInputs<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyUrConfig {
    pub grid: GridConfig,
    pub mask: MaskSource,
    pub lambdas: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "two")]
    pub p: LpIndex<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyDissConfig {
    pub grid: GridConfig,
    pub symbol: SymbolConfig,
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyObsConfig {
    pub grid: GridConfig,
    pub symbol: SymbolConfig,
    pub mask: MaskSource,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "two")]
    pub r: LpIndex<f64>,
    #[serde(default = "two")]
    pub p: LpIndex<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[serde(default)]
    pub bound: Option<BoundSource>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub symbol: SymbolConfig,
    pub radii: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "two")]
    pub r: LpIndex<f64>,
    #[serde(default = "two")]
    pub p: LpIndex<f64>,
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[serde(default)]
    pub growth: GrowthRule<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThicknessConfig {
    pub grid: GridConfig,
    pub mask: MaskSource,
    #[serde(rename = "L")]
    pub lengths: Vec<f64>,
    /// Also run the brute-force count and require agreement.
    #[serde(default)]
    pub bruteforce: bool,
}

/// Initial state of a control run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    White,
    BandLimited { lambda: f64 },
    GaussianBump { s: f64, center: Vec<f64> },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub grid: GridConfig,
    pub symbol: SymbolConfig,
    pub mask: MaskSource,
    pub x0: InitialState,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[serde(default)]
    pub cg: CgOptions<f64>,
    #[serde(default)]
    pub bound: Option<BoundSource>,
    /// Write every `u(τ_j)` as a binary frame under `frames/`.
    #[serde(default)]
    pub dump_frames: bool,
}

/// Validated parameters of one command.
#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    Cert(CertConfig),
    EllipticCert(EllipticCertConfig),
    VerifyUr(VerifyUrConfig),
    VerifyDiss(VerifyDissConfig),
    VerifyObs(VerifyObsConfig),
    Counterexample(CounterexampleConfig),
    Thickness(ThicknessConfig),
    Control(ControlConfig),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn experiment(&self) -> Result<Experiment> {
        let p = self.params.clone();
        Ok(match self.command {
            CommandKind::Cert => Experiment::Cert(serde_json::from_value(p)?),
            CommandKind::EllipticCert => Experiment::EllipticCert(serde_json::from_value(p)?),
            CommandKind::VerifyUr => Experiment::VerifyUr(serde_json::from_value(p)?),
            CommandKind::VerifyDiss => Experiment::VerifyDiss(serde_json::from_value(p)?),
            CommandKind::VerifyObs => Experiment::VerifyObs(serde_json::from_value(p)?),
            CommandKind::Counterexample => Experiment::Counterexample(serde_json::from_value(p)?),
            CommandKind::Thickness => Experiment::Thickness(serde_json::from_value(p)?),
            CommandKind::Control => Experiment::Control(serde_json::from_value(p)?),
        })
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Per-run settings outside the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Worker cap; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Directory relative file paths in the config resolve against.
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: CommandKind,
    pub config_sha256: String,
    pub master_seed: u64,
    pub seed_rule: &'static str,
    pub threads: Option<usize>,
    pub status: Status,
    pub message: Option<String>,
    pub artifacts: Vec<String>,
    pub certified: Option<CertBundle<f64>>,
}

/// Result of [`run`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: Status,
    pub message: Option<String>,
    pub artifacts: Vec<PathBuf>,
}

struct Artifacts<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Artifacts<'_> {
    fn write(&mut self, name: &str, body: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, text + "\n")
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Outcome of one command before the manifest is written.
struct Done {
    status: Status,
    message: Option<String>,
    certified: Option<CertBundle<f64>>,
}

impl Done {
    fn ok(certified: Option<CertBundle<f64>>) -> Self {
        Done {
            status: Status::Success,
            message: None,
            certified,
        }
    }

    fn violation(message: String, certified: Option<CertBundle<f64>>) -> Self {
        Done {
            status: Status::HypothesisViolation,
            message: Some(message),
            certified,
        }
    }
}

/// Runs `config` inside a thread pool of `opts.threads` workers.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let experiment = config.experiment()?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = opts.threads {
            if n == 0 {
                return Err(invalid("threads", "must be >= 1"));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| invalid("threads", e.to_string()))?
    };
    std::fs::create_dir_all(&opts.out_dir)?;
    let master = opts.seed.or(config.seed).unwrap_or(0);
    let mut artifacts = Artifacts {
        dir: &opts.out_dir,
        written: Vec::new(),
    };
    let done = pool.install(|| dispatch(&experiment, master, &opts.base_dir, &mut artifacts));
    let done = match done {
        Ok(d) => d,
        Err(err) => {
            let status = Status::of_error(&err);
            if status == Status::InvalidConfig || status == Status::Io {
                return Err(err);
            }
            let mut report = serde_json::json!({ "error": err.to_string() });
            if let ObsError::NonConvergence { history, .. } = &err {
                report["residual_history"] = serde_json::json!(history);
            }
            artifacts.json("failure.json", &report)?;
            Done {
                status,
                message: Some(err.to_string()),
                certified: None,
            }
        }
    };
    if done.status == Status::HypothesisViolation && !artifacts.written.iter().any(|p| p.ends_with("failure.json")) {
        artifacts.json("failure.json", &serde_json::json!({ "error": done.message }))?;
    }
    let names = artifacts
        .written
        .iter()
        .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    let manifest = Manifest {
        tool: "obscert",
        version: env!("CARGO_PKG_VERSION"),
        command: config.command,
        config_sha256: config.hash(),
        master_seed: master,
        seed_rule: "consumer k uses derive_seed(master, k): ChaCha8 seeded with master on stream k, first u64; samples split the same way by index",
        threads: opts.threads,
        status: done.status,
        message: done.message.clone(),
        artifacts: names,
        certified: done.certified,
    };
    artifacts.json("manifest.json", &manifest)?;
    Ok(RunOutcome {
        status: done.status,
        message: done.message,
        artifacts: artifacts.written,
    })
}

fn dispatch(exp: &Experiment, master: u64, base: &Path, out: &mut Artifacts) -> Result<Done> {
    match exp {
        Experiment::Cert(c) => {
            let bundle = certify(&c.params, c.rel_tol)?.with_provenance("user-supplied parameters");
            out.json("cert.json", &bundle)?;
            Ok(Done::ok(Some(bundle)))
        }
        Experiment::EllipticCert(c) => {
            let bundle = elliptic_cobs(&c.inputs, c.rel_tol)?;
            out.json("cert.json", &bundle)?;
            Ok(Done::ok(Some(bundle)))
        }
        Experiment::VerifyUr(c) => {
            let grid = c.grid.build()?;
            let mask = c.mask.build(&grid, base)?;
            let sim = Simulator::new(grid);
            let fit = fit_uncertainty(&sim, &mask, &c.lambdas, c.samples, c.p, derive_seed(master, streams::FIT))?;
            out.write(
                "fit.csv",
                csv(
                    "lambda,worst_log_ratio,fitted_bound,worst_sample",
                    fit.lambdas.iter().enumerate().map(|(k, &l)| {
                        vec![
                            num(l),
                            num(fit.worst_log_ratio[k]),
                            num(fit.envelope(l)),
                            fit.worst_sample[k].to_string(),
                        ]
                    }),
                ),
            )?;
            out.json("fit.json", &fit)?;
            Ok(Done::ok(None))
        }
        Experiment::VerifyDiss(c) => {
            let sim = Simulator::new(c.grid.build()?);
            let symbol = c.symbol.build()?;
            let report = check_dissipation(&sim, &symbol, &c.lambdas, &c.times)?;
            out.write(
                "dissipation.csv",
                csv(
                    "lambda,t,measured,bound,margin",
                    report
                        .entries
                        .iter()
                        .map(|e| vec![num(e.lambda), num(e.t), num(e.measured), num(e.bound), num(e.margin)]),
                ),
            )?;
            out.json("dissipation.json", &report)?;
            match report.ensure_passed() {
                Ok(()) => Ok(Done::ok(None)),
                Err(e) => Ok(Done::violation(e.to_string(), None)),
            }
        }
        Experiment::VerifyObs(c) => {
            let grid = c.grid.build()?;
            let mask = c.mask.build(&grid, base)?;
            let symbol = c.symbol.build()?;
            let sim = Simulator::new(grid);
            let bound = match &c.bound {
                Some(b) => Some(resolve_bound(b, &sim, &symbol, &mask, c.horizon, c.r, c.p, master, base, out)?),
                None => None,
            };
            let report = estimate_observability_ratio(
                &sim,
                &symbol,
                &mask,
                c.horizon,
                c.r,
                c.p,
                c.samples,
                c.n_t,
                derive_seed(master, streams::OBS),
                bound.as_ref(),
            )?;
            out.write(
                "obs_ratios.csv",
                csv(
                    "sample_id,ratio",
                    report.ratios.iter().enumerate().map(|(i, &r)| vec![i.to_string(), num(r)]),
                ),
            )?;
            out.json("obs.json", &report)?;
            match report.bound_holds() {
                Some(false) => Ok(Done::violation(
                    format!(
                        "observability margin below 1: ln(C_obs / C_emp) = {}",
                        report.margin.as_ref().map_or(f64::NAN, |m| m.ln)
                    ),
                    bound,
                )),
                _ => Ok(Done::ok(bound)),
            }
        }
        Experiment::Counterexample(c) => {
            let symbol = c.symbol.build()?;
            let rows = counterexample_sweep(&symbol, &c.radii, c.horizon, c.r, c.p, c.n_t, &c.growth)?;
            out.write(
                "counterexample.csv",
                csv(
                    "n,box,cells,rho_fixed_l,numerator,kernel_norm,denominator,ratio",
                    rows.iter().map(|r| {
                        vec![
                            num(r.n),
                            num(r.box_length),
                            r.cells.to_string(),
                            num(r.rho_fixed_l),
                            num(r.numerator),
                            num(r.kernel_norm),
                            num(r.denominator),
                            num(r.ratio),
                        ]
                    }),
                ),
            )?;
            out.json("counterexample.json", &rows)?;
            Ok(Done::ok(None))
        }
        Experiment::Thickness(c) => {
            let grid = c.grid.build()?;
            let mask = c.mask.build(&grid, base)?;
            let report = thickness_rho(&mask, &c.lengths)?;
            let mut csv_body = format!("{}\n{}\n", ThicknessReport::<f64>::CSV_HEADER, report.csv_row());
            if c.bruteforce {
                let brute = thickness_rho_bruteforce(&mask, &c.lengths)?;
                csv_body.push_str(&brute.csv_row());
                csv_body.push('\n');
                if brute != report {
                    out.write("thickness.csv", csv_body)?;
                    return Ok(Done::violation(
                        "prefix-sum and brute-force thickness disagree".into(),
                        None,
                    ));
                }
            }
            out.write("thickness.csv", csv_body)?;
            out.json("thickness.json", &report)?;
            if grid.dim() <= 2 {
                out.write("mask.pbm", mask_to_pbm(&mask)?)?;
            } else {
                let path = out.dir.join("mask.obsf");
                io::write_field(&path, &mask.to_field())?;
                out.written.push(path.clone());
                out.written.push(io::sidecar_path(&path));
            }
            Ok(Done::ok(None))
        }
        Experiment::Control(c) => {
            let grid = c.grid.build()?;
            let mask = c.mask.build(&grid, base)?;
            let symbol = c.symbol.build()?;
            let sim = Simulator::new(grid.clone());
            let x0_seed = derive_seed(master, streams::CONTROL_X0);
            let x0 = match &c.x0 {
                InitialState::White => sim.sample_field(&FieldKind::White, x0_seed)?,
                InitialState::BandLimited { lambda } => {
                    sim.sample_field(&FieldKind::BandLimited { lambda: *lambda }, x0_seed)?
                }
                InitialState::GaussianBump { s, center } => sim.sample_field(
                    &FieldKind::GaussianBump {
                        s: *s,
                        center: center.clone(),
                    },
                    x0_seed,
                )?,
                InitialState::File { path } => {
                    let f = io::read_field(&base.join(path))?;
                    grid.ensure_same(f.grid())?;
                    f
                }
            };
            let r2 = LpIndex::Finite(2.0);
            let bound = match &c.bound {
                Some(b) => Some(resolve_bound(b, &sim, &symbol, &mask, c.horizon, r2, r2, master, base, out)?),
                None => None,
            };
            let result = hum_control(&sim, &symbol, &mask, &x0, c.horizon, c.n_t, &c.cg, bound.as_ref())?;
            out.write(
                "cg_history.csv",
                csv(
                    "iteration,relative_residual",
                    result
                        .cg_history
                        .iter()
                        .enumerate()
                        .map(|(k, &h)| vec![k.to_string(), num(h)]),
                ),
            )?;
            out.json("control.json", &result)?;
            if c.dump_frames {
                result.write_frames(&out.dir.join("frames"))?;
            }
            match result.bound_holds() {
                Some(false) => Ok(Done::violation(
                    format!("control cost {} exceeds C_obs * |x0|", result.cost),
                    bound,
                )),
                _ => Ok(Done::ok(bound)),
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn resolve_bound(
    source: &BoundSource,
    sim: &Simulator<f64>,
    symbol: &EllipticSymbol<f64>,
    mask: &Mask<f64>,
    horizon: f64,
    r: LpIndex<f64>,
    p: LpIndex<f64>,
    master: u64,
    base: &Path,
    out: &mut Artifacts,
) -> Result<CertBundle<f64>> {
    match source {
        BoundSource::CertFile { path } => {
            let text = std::fs::read_to_string(base.join(path))?;
            Ok(serde_json::from_str(&text)?)
        }
        BoundSource::Fit {
            lambdas,
            samples,
            semigroup_bound,
            projector_bound,
            rel_tol,
        } => {
            let p_finite = match p {
                LpIndex::Finite(v) => v,
                LpIndex::Infinity => return Err(invalid("p", "fitted bounds need a finite p")),
            };
            let fit = fit_uncertainty(sim, mask, lambdas, *samples, p, derive_seed(master, streams::FIT))?;
            let c = ellipticity_constant(symbol, crate::verify::sphere_samples(symbol.dim()))?;
            let diss = dissipation_constants(c, symbol.degree(), p_finite, *semigroup_bound, *projector_bound)?;
            let params = params_from_fit(&fit, &diss, *semigroup_bound, horizon, r);
            let bundle = certify(&params, *rel_tol)?.with_provenance(format!(
                "uncertainty constants envelope-fitted over {} samples at {} cutoffs on this grid; \
                 dissipation constants from c = {c:.17e}, m = {}",
                fit.samples,
                fit.lambdas.len(),
                symbol.degree()
            ));
            out.json("fit.json", &fit)?;
            Ok(bundle)
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "obscert", version, about = "Certified observability constants, verification and HUM control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "OBSCERT_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Observability constant from abstract parameters.
    Cert(CommonArgs),
    /// Observability constant of an elliptic operator with a thick set.
    EllipticCert(CommonArgs),
    /// Envelope fit of the uncertainty constants.
    VerifyUr(CommonArgs),
    /// Pointwise dissipation check.
    VerifyDiss(CommonArgs),
    /// Empirical observability ratio, optionally against a bound.
    VerifyObs(CommonArgs),
    /// Hole-radius sweep for a non-thick observation set.
    Counterexample(CommonArgs),
    /// Thickness of a mask.
    Thickness(CommonArgs),
    /// Minimal-norm null control.
    Control(CommonArgs),
}

impl CliCommand {
    fn split(&self) -> (CommandKind, &CommonArgs) {
        match self {
            CliCommand::Cert(a) => (CommandKind::Cert, a),
            CliCommand::EllipticCert(a) => (CommandKind::EllipticCert, a),
            CliCommand::VerifyUr(a) => (CommandKind::VerifyUr, a),
            CliCommand::VerifyDiss(a) => (CommandKind::VerifyDiss, a),
            CliCommand::VerifyObs(a) => (CommandKind::VerifyObs, a),
            CliCommand::Counterexample(a) => (CommandKind::Counterexample, a),
            CliCommand::Thickness(a) => (CommandKind::Thickness, a),
            CliCommand::Control(a) => (CommandKind::Control, a),
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args(cli: Cli) -> i32 {
    let (kind, args) = cli.command.split();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return Status::Io.code();
        }
    };
    let config = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return Status::InvalidConfig.code();
        }
    };
    if config.command != kind {
        eprintln!(
            "error: config is for `{}` but the subcommand is `{}`",
            config.command.name(),
            kind.name()
        );
        return Status::InvalidConfig.code();
    }
    let opts = RunOptions {
        out_dir: args.out.clone(),
        seed: args.seed,
        threads: args.threads,
        base_dir: args
            .config
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default(),
    };
    match run(&config, &opts) {
        Ok(outcome) => {
            if let Some(msg) = &outcome.message {
                eprintln!("{}: {msg}", kind.name());
            }
            for a in &outcome.artifacts {
                log::info!("wrote {}", a.display());
            }
            outcome.status.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            Status::of_error(&e).code()
        }
    }
}
