//! Command-line front end: figure data as CSV, scenario simulation and the
//! self-verification report.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{
    f1, f3_realistic, single_photon_probability, success_probability, AnalyticsError,
    RealisticParams,
};
use crate::fock::{cat_state, DetectorModel, FockCutoff, FockError, Parity, C64};
use crate::optimize::{
    alpha_grid, amplification_comparison, default_alpha_grid, success_beta_params, sweep,
    tolerance_curves, CurveAxis, OptimizationReport, OptimizeError, ReportRow, Scheme, SweepSpec,
};
use crate::pipeline::{run_circuit, CircuitSpec, CircuitStage, PipelineError, RunResult};
use crate::verify::{self, CutoffChoice, VerifyReport};

/// Failed-row fraction above which a sweep counts as degraded.
pub const MAX_FAILED_FRACTION: f64 = 0.05;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0} verification checks failed: {1}")]
    Verification(usize, String),
    #[error("{scheme:?} sweep: {fraction:.3} of rows failed")]
    Degraded { scheme: Scheme, fraction: f64 },
    #[error("{0}")]
    TailTooLarge(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Process exit code.
    pub fn code(&self) -> u8 {
        match self {
            Self::Verification(..) => 1,
            Self::Degraded { .. } => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Verification(..) => "verification_failed",
            Self::Degraded { .. } => "sweep_degraded",
            Self::TailTooLarge(_) => "tail_too_large",
            Self::Precondition(_) => "precondition",
            Self::Config(_) => "invalid_config",
            Self::Usage(_) => "usage",
            Self::Io(_) => "io",
        }
    }

    fn hint(&self) -> Option<&'static str> {
        match self {
            Self::TailTooLarge(_) => Some("raise --cutoff"),
            Self::Verification(..) => Some("see the report for details"),
            Self::Usage(_) => Some("run with --help"),
            _ => None,
        }
    }

    /// Single-line `E<code>:<kind>: <message>[; hint: ...]` form.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        match self.hint() {
            Some(h) => format!("E{}:{}: {msg}; hint: {h}", self.code(), self.kind()),
            None => format!("E{}:{}: {msg}", self.code(), self.kind()),
        }
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::TailTooLarge { .. } => Self::TailTooLarge(e.to_string()),
            e => Self::Precondition(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Fock(f) => f.into(),
            e => Self::Precondition(e.to_string()),
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::Fock(f) => f.into(),
            e => Self::Precondition(e.to_string()),
        }
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        Self::Precondition(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// resolves exactly one photon
    #[default]
    Nr1,
    /// click / no-click avalanche photodiode
    Apd,
}

impl From<DetectorKind> for DetectorModel {
    fn from(d: DetectorKind) -> Self {
        match d {
            DetectorKind::Nr1 => DetectorModel::NumberResolvingOne,
            DetectorKind::Apd => DetectorModel::ClickApd,
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "sqcat", version, about = "Cat states from photon subtraction on squeezed vacuum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimal fidelities and squeezing of every scheme versus α
    Fig1(GridArgs),
    /// Three-photon fidelity around its optimum in r and β
    Fig2(Fig2Args),
    /// Success probability of the β = 0 three-photon scheme versus α
    Fig4(GridArgs),
    /// Simulate one circuit configuration from a TOML scenario file
    Simulate(SimulateArgs),
    /// Run every verification check and write a JSON report
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub alpha_step: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

impl GridArgs {
    /// The requested grid; the default one unless a bound or step is given.
    pub fn grid(&self) -> Result<Vec<f64>> {
        if self.alpha_min.is_none() && self.alpha_max.is_none() && self.alpha_step.is_none() {
            return Ok(default_alpha_grid());
        }
        let lo = self.alpha_min.unwrap_or(0.2);
        let hi = self.alpha_max.unwrap_or(5.0);
        let step = self.alpha_step.unwrap_or(0.05);
        alpha_grid(lo, hi, step).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args, Debug)]
pub struct Fig2Args {
    /// Amplitudes, comma separated
    #[arg(long = "alpha", value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub alphas: Vec<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario file (TOML)
    pub config: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long, value_enum)]
    pub detector: Option<DetectorKind>,
    /// Output file
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Force this Fock cutoff on every numerical check
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Parses `args` and runs the command; `Ok` means exit code 0.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return Err(CliError::Usage(first.trim_start_matches("error: ").to_string()));
        }
    };
    let written = match cli.command {
        Command::Fig1(a) => cmd_fig1(&a.grid()?, &a.out, a.format),
        Command::Fig2(a) => cmd_fig2(&a.alphas, &a.out, a.format),
        Command::Fig4(a) => cmd_fig4(&a.grid()?, &a.out, a.format),
        Command::Simulate(a) => {
            let mut config = ScenarioConfig::load(&a.config)?;
            config.apply_overrides(&a)?;
            cmd_simulate(&config).map(|(path, _)| vec![path])
        }
        Command::Verify(a) => {
            let cutoff = a.cutoff.map(FockCutoff::new).transpose()?;
            let (path, report) = cmd_verify(CutoffChoice(cutoff), &a.out)?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            verdict(&report).map(|()| vec![path])
        }
    };
    match written {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Err(e) => Err(e),
    }
}

/// `%g`-style rendering with 12 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let fixed = format!("{x:.*}", (11 - exp) as usize);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    format_number(x.unwrap_or(f64::NAN))
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes every file only after all of them were rendered.
fn write_all(dir: &Path, files: Vec<(String, String)>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

fn check_degradation(reports: &[&OptimizationReport]) -> Result<()> {
    for r in reports {
        let fraction = r.failure_fraction();
        if fraction > MAX_FAILED_FRACTION {
            return Err(CliError::Degraded { scheme: r.scheme, fraction });
        }
    }
    Ok(())
}

fn run_sweep(grid: &[f64], scheme: Scheme) -> Result<OptimizationReport> {
    let spec = SweepSpec::new(grid.to_vec(), scheme).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(sweep(&spec))
}

/// Writes `fig1_fidelity.csv` and `fig1_squeezing.csv` (or `fig1.json`).
/// Files are written even when a sweep is degraded; the error follows.
pub fn cmd_fig1(grid: &[f64], out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let schemes = [
        Scheme::EvenZero,
        Scheme::OnePhoton,
        Scheme::EvenTwo,
        Scheme::ThreePhoton,
        Scheme::ThreePhotonBetaZero,
    ];
    let reports = schemes
        .iter()
        .map(|&s| run_sweep(grid, s))
        .collect::<Result<Vec<_>>>()?;
    let [f0, f1, f2, f3, f3b] = &reports[..] else { unreachable!() };
    let files = match format {
        OutputFormat::Json => vec![("fig1.json".to_string(), json(&reports)?)],
        OutputFormat::Csv => {
            let fid = csv(
                &["alpha", "F0", "F1", "F2", "F3", "F3_beta0"],
                (0..grid.len()).map(|i| {
                    let mut row = vec![format_number(grid[i])];
                    row.extend([f0, f1, f2, f3, f3b].iter().map(|r| opt(r.rows[i].fidelity)));
                    row
                }),
            );
            let sq = csv(
                &["alpha", "r1", "r3", "r3_beta0"],
                (0..grid.len()).map(|i| {
                    let mut row = vec![format_number(grid[i])];
                    row.extend([f1, f3, f3b].iter().map(|r| opt(r.rows[i].r)));
                    row
                }),
            );
            vec![("fig1_fidelity.csv".into(), fid), ("fig1_squeezing.csv".into(), sq)]
        }
    };
    let paths = write_all(out, files)?;
    check_degradation(&reports.iter().collect::<Vec<_>>())?;
    Ok(paths)
}

/// One curve file per amplitude and axis plus `fig2_markers.csv` with the
/// location and value of each maximum.
pub fn cmd_fig2(alphas: &[f64], out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    if alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(CliError::Usage("amplitudes must be positive and finite".into()));
    }
    let curves = tolerance_curves(alphas)?;
    let files = match format {
        OutputFormat::Json => vec![("fig2.json".to_string(), json(&curves)?)],
        OutputFormat::Csv => {
            let mut files = Vec::with_capacity(curves.len() + 1);
            for c in &curves {
                let (axis, column) = match c.axis {
                    CurveAxis::Squeezing => ("r", "r"),
                    CurveAxis::Displacement => ("beta", "beta"),
                };
                let body = csv(
                    &[column, "F3"],
                    c.points.iter().map(|&(x, f)| vec![format_number(x), format_number(f)]),
                );
                files.push((format!("fig2_alpha_{}_{axis}.csv", format_number(c.alpha)), body));
            }
            let markers = csv(
                &["alpha", "axis", "argmax", "F3_max"],
                curves.iter().map(|c| {
                    let axis = match c.axis {
                        CurveAxis::Squeezing => "r",
                        CurveAxis::Displacement => "beta",
                    };
                    vec![
                        format_number(c.alpha),
                        axis.to_string(),
                        format_number(c.max_at),
                        format_number(c.max_fidelity),
                    ]
                }),
            );
            files.push(("fig2_markers.csv".into(), markers));
            files
        }
    };
    write_all(out, files)
}

/// Writes `fig4_success.csv` (alpha,P) and `fig4_parameters.csv` with the
/// optimal squeezing and transmissivities.
pub fn cmd_fig4(grid: &[f64], out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let report = run_sweep(grid, Scheme::SuccessBetaZero)?;
    let files = match format {
        OutputFormat::Json => vec![("fig4.json".to_string(), json(&report)?)],
        OutputFormat::Csv => {
            let rows = &report.rows;
            let p = csv(
                &["alpha", "P"],
                rows.iter().map(|r| vec![format_number(r.alpha), opt(r.probability)]),
            );
            let params = csv(
                &["alpha", "r", "T1", "T2", "T3", "F3_beta0"],
                rows.iter().map(|r: &ReportRow| {
                    vec![
                        format_number(r.alpha),
                        opt(r.r),
                        opt(r.t1),
                        opt(r.t2),
                        opt(r.t3),
                        opt(r.fidelity),
                    ]
                }),
            );
            vec![("fig4_success.csv".into(), p), ("fig4_parameters.csv".into(), params)]
        }
    };
    let paths = write_all(out, files)?;
    check_degradation(&[&report])?;
    Ok(paths)
}

/// Circuit variants a scenario can describe.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioScheme {
    /// one tap; defaults maximize the herald probability at the optimal `rT₁`
    OnePhoton,
    /// three bare taps with the transmissivities maximizing the probability
    ThreePhotonBetaZero,
    /// three taps, the last two displaced, realizing `(â² - β²)â`
    ThreePhoton,
}

/// A simulation scenario. Unset circuit parameters take the values of the
/// scheme's own optimization at each amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scheme: ScenarioScheme,
    pub alpha: Option<f64>,
    #[serde(default)]
    pub alpha_im: f64,
    pub alpha_grid: Option<Vec<f64>>,
    pub r: Option<f64>,
    pub beta: Option<f64>,
    pub beta_im: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub detector: DetectorKind,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

fn unit_open(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(t) if !(t > 0.0 && t < 1.0) => Err(CliError::Config(format!("{name} = {t} outside (0, 1)"))),
        _ => Ok(()),
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let alphas = self.alphas();
        if alphas.is_empty() {
            return Err(CliError::Config("set alpha or alpha_grid".into()));
        }
        if self.alpha.is_some() && self.alpha_grid.is_some() {
            return Err(CliError::Config("alpha and alpha_grid are exclusive".into()));
        }
        for a in &alphas {
            if !(a.is_finite() && a.norm() > 0.0) {
                return Err(CliError::Config(format!("alpha = {a} must be nonzero and finite")));
            }
        }
        if let Some(r) = self.r {
            if !(0.0..1.0).contains(&r) {
                return Err(CliError::Config(format!("r = {r} outside [0, 1)")));
            }
        }
        unit_open("t1", self.t1)?;
        unit_open("t2", self.t2)?;
        unit_open("t3", self.t3)?;
        for (name, v) in [("beta", self.beta), ("beta_im", self.beta_im), ("alpha_im", Some(self.alpha_im))] {
            if v.is_some_and(|v| !v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be finite")));
            }
        }
        if self.cutoff == Some(0) {
            return Err(CliError::Config("cutoff must be at least 1".into()));
        }
        if self.scheme == ScenarioScheme::OnePhoton && (self.t2.is_some() || self.t3.is_some()) {
            return Err(CliError::Config("one_photon has a single tap; t2 and t3 do not apply".into()));
        }
        Ok(())
    }

    fn apply_overrides(&mut self, a: &SimulateArgs) -> Result<()> {
        if let Some(alpha) = a.alpha {
            self.alpha = Some(alpha);
            self.alpha_grid = None;
        }
        if a.cutoff.is_some() {
            self.cutoff = a.cutoff;
        }
        if let Some(d) = a.detector {
            self.detector = d;
        }
        if a.out.is_some() {
            self.output = a.out.clone();
        }
        if a.format.is_some() {
            self.format = a.format;
        }
        self.validate()
    }

    /// The amplitudes to simulate.
    pub fn alphas(&self) -> Vec<C64> {
        let re: Vec<f64> = match (&self.alpha, &self.alpha_grid) {
            (Some(a), _) => vec![*a],
            (None, Some(g)) => g.clone(),
            (None, None) => Vec::new(),
        };
        re.into_iter().map(|a| C64::new(a, self.alpha_im)).collect()
    }

    fn beta_override(&self) -> Option<C64> {
        match (self.beta, self.beta_im) {
            (None, None) => None,
            (re, im) => Some(C64::new(re.unwrap_or(0.0), im.unwrap_or(0.0))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircuitParameters {
    pub r: f64,
    pub t1: f64,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub beta_re: f64,
    pub beta_im: f64,
}

/// Gaps between the closed forms and the simulation.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Discrepancies {
    /// closed-form fidelity against the number-resolving simulation
    pub fidelity_abs: Option<f64>,
    /// closed-form probability against the number-resolving simulation
    pub probability_rel: Option<f64>,
    /// number-resolving minus click-detector fidelity
    pub apd_fidelity_delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationResult {
    pub scheme: ScenarioScheme,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub detector: DetectorKind,
    pub parameters: CircuitParameters,
    pub fidelity_vs_target_cat: f64,
    pub probability: f64,
    pub per_stage_probabilities: Vec<f64>,
    pub cutoff_used: usize,
    pub closed_form_fidelity: Option<f64>,
    pub closed_form_probability: Option<f64>,
    pub discrepancies: Discrepancies,
}

enum Resolved {
    One { r: f64, t1: f64, beta: C64 },
    Three(RealisticParams),
}

fn resolve(config: &ScenarioConfig, alpha: C64) -> Result<Resolved> {
    let beta = config.beta_override();
    match config.scheme {
        ScenarioScheme::OnePhoton => {
            let (r, t1) = match (config.r, config.t1) {
                (Some(r), Some(t1)) => (r, t1),
                (r, t1) => {
                    let amp = amplification_comparison(alpha.norm())?;
                    (r.unwrap_or(amp.r), t1.unwrap_or(amp.t1))
                }
            };
            Ok(Resolved::One { r, t1, beta: beta.unwrap_or_default() })
        }
        ScenarioScheme::ThreePhotonBetaZero | ScenarioScheme::ThreePhoton => {
            let base = if config.scheme == ScenarioScheme::ThreePhoton {
                success_beta_params(alpha.norm())?
            } else {
                let row = run_sweep(&[alpha.norm()], Scheme::SuccessBetaZero)?.rows.remove(0);
                if let Some(e) = row.error {
                    return Err(CliError::Precondition(e));
                }
                let get = |v: Option<f64>| v.ok_or_else(|| CliError::Precondition("incomplete optimum".into()));
                RealisticParams::new(get(row.r)?, get(row.t1)?, get(row.t2)?, get(row.t3)?, C64::default())?
            };
            let r = config.r.unwrap_or(base.r());
            let t1 = config.t1.unwrap_or(base.t1());
            let t2 = config.t2.unwrap_or(base.t2());
            let b = beta.unwrap_or(base.beta());
            let retie = config.t3.is_none() && b != C64::default() && (config.t2.is_some() || beta.is_some());
            let p = if retie {
                RealisticParams::tied(r, t1, t2, b)?
            } else {
                RealisticParams::new(r, t1, t2, config.t3.unwrap_or(base.t3()), b)?
            };
            Ok(Resolved::Three(p))
        }
    }
}

fn simulate_one(config: &ScenarioConfig, alpha: C64) -> Result<SimulationResult> {
    let resolved = resolve(config, alpha)?;
    let nr1 = DetectorModel::NumberResolvingOne;
    let (spec, parameters, closed_f, closed_p) = match &resolved {
        Resolved::One { r, t1, beta } => {
            let cutoff = match config.cutoff {
                Some(n) => FockCutoff::new(n)?,
                None => FockCutoff::policy(*r, alpha.norm())?,
            };
            let stage = CircuitStage::subtracting(*t1, *beta, nr1)?;
            let spec = CircuitSpec::new(*r, vec![stage], cutoff)?;
            // a bare tap leaves t^n̂ â|sq(r)⟩ ∝ â|sq(rT)⟩
            let (cf, cp) = if *beta == C64::default() {
                (Some(f1(alpha, r * t1)?), Some(single_photon_probability(*r, *t1)?))
            } else {
                (None, None)
            };
            let params = CircuitParameters { r: *r, t1: *t1, t2: None, t3: None, beta_re: beta.re, beta_im: beta.im };
            (spec, params, cf, cp)
        }
        Resolved::Three(p) => {
            let cutoff = match config.cutoff {
                Some(n) => FockCutoff::new(n)?,
                None => FockCutoff::policy(p.r(), alpha.norm())?,
            };
            let spec = CircuitSpec::three_photon(p, nr1, cutoff)?;
            let params = CircuitParameters {
                r: p.r(),
                t1: p.t1(),
                t2: Some(p.t2()),
                t3: Some(p.t3()),
                beta_re: p.beta().re,
                beta_im: p.beta().im,
            };
            (spec, params, Some(f3_realistic(alpha, p)?), Some(success_probability(p)?))
        }
    };
    let cat = cat_state(alpha, Parity::Odd, spec.cutoff)?;
    let reference: RunResult = run_circuit(&spec)?;
    let f_ref = reference.output.fidelity_with(&cat)?;
    let mut discrepancies = Discrepancies {
        fidelity_abs: closed_f.map(|f| (f - f_ref).abs()),
        probability_rel: closed_p.map(|p| (p - reference.probability).abs() / p),
        apd_fidelity_delta: None,
    };
    let (result, fidelity) = match config.detector {
        DetectorKind::Nr1 => (reference, f_ref),
        DetectorKind::Apd => {
            let apd = run_circuit(&spec.with_detector(DetectorModel::ClickApd))?;
            let f = apd.output.fidelity_with(&cat)?;
            discrepancies.apd_fidelity_delta = Some(f_ref - f);
            (apd, f)
        }
    };
    Ok(SimulationResult {
        scheme: config.scheme,
        alpha_re: alpha.re,
        alpha_im: alpha.im,
        detector: config.detector,
        parameters,
        fidelity_vs_target_cat: fidelity,
        probability: result.probability,
        per_stage_probabilities: result.per_stage_probabilities,
        cutoff_used: spec.cutoff.n_max(),
        closed_form_fidelity: closed_f,
        closed_form_probability: closed_p,
        discrepancies,
    })
}

/// Simulates every amplitude of the scenario; nothing is written.
pub fn simulate(config: &ScenarioConfig) -> Result<Vec<SimulationResult>> {
    config.validate()?;
    config.alphas().into_iter().map(|a| simulate_one(config, a)).collect()
}

fn render_simulation(results: &[SimulationResult], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json if results.len() == 1 => json(&results[0]),
        OutputFormat::Json => json(&results),
        OutputFormat::Csv => {
            let mut out = String::from(
                "alpha_re,alpha_im,fidelity_vs_target_cat,probability,closed_form_fidelity,closed_form_probability,cutoff_used\n",
            );
            for r in results {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    format_number(r.alpha_re),
                    format_number(r.alpha_im),
                    format_number(r.fidelity_vs_target_cat),
                    format_number(r.probability),
                    opt(r.closed_form_fidelity),
                    opt(r.closed_form_probability),
                    r.cutoff_used
                );
            }
            Ok(out)
        }
    }
}

/// Runs the scenario and writes the report to its output path (default
/// `simulate.json` or `simulate.csv`).
pub fn cmd_simulate(config: &ScenarioConfig) -> Result<(PathBuf, Vec<SimulationResult>)> {
    let results = simulate(config)?;
    let format = config.format.unwrap_or(OutputFormat::Json);
    let body = render_simulation(&results, format)?;
    let path = config.output.clone().unwrap_or_else(|| {
        PathBuf::from(match format {
            OutputFormat::Json => "simulate.json",
            OutputFormat::Csv => "simulate.csv",
        })
    });
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok((path, results))
}

/// Runs every check and writes `verify_report.json` into `out`.
pub fn cmd_verify(cutoff: CutoffChoice, out: &Path) -> Result<(PathBuf, VerifyReport)> {
    let report = verify::run_all(cutoff);
    let path = write_all(out, vec![("verify_report.json".into(), json(&report)?)])?.remove(0);
    Ok((path, report))
}

/// `Err` naming the failed checks unless the report passed.
pub fn verdict(report: &VerifyReport) -> Result<()> {
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.len(), failed.join(", ")))
    }
}
