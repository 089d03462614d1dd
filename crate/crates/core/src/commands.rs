//! Batch commands behind the `locnot` binary. Each command returns a
//! serializable report and, when an output directory is configured, writes its
//! JSON and CSV files there.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{default_scan_angles, fit_fringe, fringe_from_rho, FringeData, MeasurementSetting, ProjectorTag};
use crate::density::{BellState, DensityMatrix};
use crate::dsl::parse_circuit_dsl;
use crate::error::Error;
use crate::gate::{build_conceptual_cnot, build_experimental_cnot, Circuit, ExperimentalParams, QubitAmplitudes};
use crate::noise::{run_with_mismatch, truth_table, OverlapParam};
use crate::tomography::{
    analyze_with, chsh_max, expected_counts, fidelity, linear_entropy, poisson_draw, simulate_counts, tangle,
    CountRecord, MleOptions, SettingPair, TomographyResult, ValueWithSigma,
};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    NotConverged(String),
}

impl CommandError {
    /// 1 for bad input or I/O, 2 when a reconstruction hit its iteration cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Invalid(_) | CommandError::Io { .. } => 1,
            CommandError::NotConverged(_) => 2,
        }
    }
}

pub type CommandResult<T> = std::result::Result<T, CommandError>;

#[derive(Debug, Clone, PartialEq)]
pub enum CircuitSource {
    Conceptual,
    Experimental,
    File(PathBuf),
}

impl FromStr for CircuitSource {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "conceptual" => CircuitSource::Conceptual,
            "experimental" => CircuitSource::Experimental,
            path => CircuitSource::File(PathBuf::from(path)),
        })
    }
}

impl std::fmt::Display for CircuitSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CircuitSource::Conceptual => f.write_str("conceptual"),
            CircuitSource::Experimental => f.write_str("experimental"),
            CircuitSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub circuit: CircuitSource,
    pub xi: f64,
    pub seed: u64,
    /// Counts per input (truth table), per angle (fringes) or per setting
    /// (tomography).
    pub counts: u64,
    pub out_dir: Option<PathBuf>,
    pub phi_c: Option<f64>,
    pub theta_third: Option<f64>,
    pub mode: Mode,
    pub resamples: usize,
    pub scan_points: usize,
    /// Iteration cap for maximum-likelihood reconstruction.
    pub max_iterations: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            circuit: CircuitSource::Conceptual,
            xi: 1.0,
            seed: 0,
            counts: 100_000,
            out_dir: None,
            phi_c: None,
            theta_third: None,
            mode: Mode::Analytic,
            resamples: 50,
            scan_points: 19,
            max_iterations: MleOptions::default().max_iterations,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CommandResult<()> {
        OverlapParam::new(self.xi)?;
        if self.counts == 0 {
            return Err(Error::InvalidArgument("counts must be at least 1".into()).into());
        }
        if self.scan_points < 3 {
            return Err(Error::InvalidArgument("a fringe scan needs at least 3 points".into()).into());
        }
        if self.circuit != CircuitSource::Experimental && (self.phi_c.is_some() || self.theta_third.is_some()) {
            return Err(Error::InvalidArgument(
                "--phi-c and --theta-third apply only to the experimental circuit".into(),
            )
            .into());
        }
        Ok(())
    }

    pub fn mle_options(&self) -> MleOptions {
        MleOptions {
            max_iterations: self.max_iterations,
            ..MleOptions::default()
        }
    }

    pub fn overlap(&self) -> CommandResult<OverlapParam> {
        Ok(OverlapParam::new(self.xi)?)
    }

    pub fn build_circuit(&self) -> CommandResult<Circuit> {
        self.validate()?;
        match &self.circuit {
            CircuitSource::Conceptual => Ok(build_conceptual_cnot()),
            CircuitSource::Experimental => {
                let mut params = ExperimentalParams::default();
                if let Some(phi) = self.phi_c {
                    params.phi_c = phi;
                }
                if let Some(theta) = self.theta_third {
                    params.theta_third = theta;
                }
                Ok(build_experimental_cnot(params))
            }
            CircuitSource::File(path) => {
                let text = fs::read_to_string(path).map_err(|source| CommandError::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(parse_circuit_dsl(&text)?)
            }
        }
    }

    fn write_file(&self, name: &str, contents: &str) -> CommandResult<()> {
        let Some(dir) = &self.out_dir else {
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(|source| CommandError::Io {
            path: dir.clone(),
            source,
        })?;
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| CommandError::Io { path, source })
    }
}

/// Independent 64-bit seed for sub-task `stream` of a run.
fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_numbers(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_numbers),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_report_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("reports serialize to JSON");
    round_numbers(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("JSON value serializes");
    s.push('\n');
    s
}

fn fmt_csv(x: f64) -> String {
    format!("{}", round_sig(x))
}

pub const BASIS_LABELS: [&str; 4] = ["00", "01", "10", "11"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthTableReport {
    pub circuit: String,
    pub xi: f64,
    pub mode: Mode,
    /// `table[input][output]`; each row sums to 1.
    pub table: [[f64; 4]; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<[[f64; 4]; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<[[u64; 4]; 4]>,
    /// Post-selection probability for each logical input.
    pub success_probability: [f64; 4],
}

impl TruthTableReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("input,output,probability");
        if self.sigma.is_some() {
            s.push_str(",sigma,counts");
        }
        s.push('\n');
        for i in 0..4 {
            for o in 0..4 {
                let _ = write!(
                    s,
                    "{},{},{}",
                    BASIS_LABELS[i],
                    BASIS_LABELS[o],
                    fmt_csv(self.table[i][o])
                );
                if let (Some(sig), Some(c)) = (&self.sigma, &self.counts) {
                    let _ = write!(s, ",{},{}", fmt_csv(sig[i][o]), c[i][o]);
                }
                s.push('\n');
            }
        }
        s
    }
}

pub fn cmd_truth_table(config: &RunConfig) -> CommandResult<TruthTableReport> {
    let circuit = config.build_circuit()?;
    let xi = config.overlap()?;
    let exact = truth_table(&circuit, xi)?;
    let mut success = [0.0; 4];
    for (k, p) in success.iter_mut().enumerate() {
        let c = QubitAmplitudes::logical(k & 2 != 0);
        let t = QubitAmplitudes::logical(k & 1 != 0);
        *p = run_with_mismatch(&c, &t, &circuit, xi)?.success_probability;
    }
    let mut report = TruthTableReport {
        circuit: config.circuit.to_string(),
        xi: config.xi,
        mode: config.mode,
        table: exact,
        sigma: None,
        counts: None,
        success_probability: success,
    };
    if config.mode == Mode::Sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));
        let mut counts = [[0u64; 4]; 4];
        let mut table = [[0.0; 4]; 4];
        let mut sigma = [[0.0; 4]; 4];
        for i in 0..4 {
            for o in 0..4 {
                counts[i][o] = poisson_draw(config.counts as f64 * exact[i][o], &mut rng)?;
            }
            let total: u64 = counts[i].iter().sum();
            if total == 0 {
                return Err(Error::InvalidArgument(format!("no counts drawn for input {}", BASIS_LABELS[i])).into());
            }
            let n = total as f64;
            for o in 0..4 {
                let p = counts[i][o] as f64 / n;
                table[i][o] = p;
                sigma[i][o] = (p * (1.0 - p) / n).sqrt();
            }
        }
        report.table = table;
        report.sigma = Some(sigma);
        report.counts = Some(counts);
    }
    config.write_file("truth_table.json", &to_report_json(&report))?;
    config.write_file("truth_table.csv", &report.to_csv())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeCurve {
    /// Control analyzer tag.
    pub control: ProjectorTag,
    pub visibility: f64,
    pub phase_deg: f64,
    pub period_deg: f64,
    #[serde(skip)]
    pub data: FringeData,
}

impl FringeCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("angle_deg,probability\n");
        for (a, p) in self.data.angles_deg.iter().zip(&self.data.probabilities) {
            let _ = writeln!(s, "{},{}", fmt_csv(*a), fmt_csv(*p));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeReport {
    pub circuit: String,
    pub xi: f64,
    pub mode: Mode,
    pub curves: Vec<FringeCurve>,
}

/// Target-analyzer scans behind the singlet-producing input `(|0>-|1>)|1>`, with
/// the control analyzer at `D` and at `H`.
pub fn cmd_fringe(config: &RunConfig) -> CommandResult<FringeReport> {
    let circuit = config.build_circuit()?;
    let xi = config.overlap()?;
    let outcome = run_with_mismatch(&QubitAmplitudes::minus(), &QubitAmplitudes::one(), &circuit, xi)?;
    let rho = outcome
        .rho
        .ok_or_else(|| Error::InvalidState("no coincidences for the fringe input".into()))?;
    let angles = default_scan_angles(config.scan_points);
    let mut curves = Vec::new();
    for (k, tag) in [ProjectorTag::D, ProjectorTag::H].into_iter().enumerate() {
        let exact = fringe_from_rho(&rho, &MeasurementSetting::Tag(tag), &angles)?;
        let data = match config.mode {
            Mode::Analytic => exact,
            Mode::Sampled => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 10 + k as u64));
                let n = config.counts as f64;
                let sampled = exact
                    .probabilities
                    .iter()
                    .map(|&p| Ok(poisson_draw(n * p, &mut rng)? as f64 / n))
                    .collect::<crate::Result<Vec<_>>>()?;
                fit_fringe(&angles, &sampled)?
            }
        };
        curves.push(FringeCurve {
            control: tag,
            visibility: data.visibility,
            phase_deg: data.phase_deg,
            period_deg: data.period_deg,
            data,
        });
    }
    let report = FringeReport {
        circuit: config.circuit.to_string(),
        xi: config.xi,
        mode: config.mode,
        curves,
    };
    config.write_file("fringe.json", &to_report_json(&report))?;
    for c in &report.curves {
        config.write_file(&format!("fringe_{}.csv", c.control), &c.to_csv())?;
    }
    Ok(report)
}

/// Gate input that produces `state`: control `|0> -+ |1>`, target `|1>` for the
/// `Psi` states and `|0>` for the `Phi` states.
pub fn bell_input(state: BellState) -> (QubitAmplitudes, QubitAmplitudes) {
    match state {
        BellState::PsiMinus => (QubitAmplitudes::minus(), QubitAmplitudes::one()),
        BellState::PsiPlus => (QubitAmplitudes::plus(), QubitAmplitudes::one()),
        BellState::PhiMinus => (QubitAmplitudes::minus(), QubitAmplitudes::zero()),
        BellState::PhiPlus => (QubitAmplitudes::plus(), QubitAmplitudes::zero()),
    }
}

fn bell_input_label(state: BellState) -> &'static str {
    match state {
        BellState::PsiMinus => "(|0>-|1>)|1>",
        BellState::PsiPlus => "(|0>+|1>)|1>",
        BellState::PhiMinus => "(|0>-|1>)|0>",
        BellState::PhiPlus => "(|0>+|1>)|0>",
    }
}

/// Post-selected output state of the gate for the input that ideally makes
/// `state`.
pub fn bell_output(circuit: &Circuit, state: BellState, xi: OverlapParam) -> CommandResult<(DensityMatrix, f64)> {
    let (c, t) = bell_input(state);
    let out = run_with_mismatch(&c, &t, circuit, xi)?;
    let rho = out
        .rho
        .ok_or_else(|| Error::InvalidState(format!("no coincidences for the {} input", state.name())))?;
    Ok((rho, out.success_probability))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellRow {
    pub state: &'static str,
    pub input: &'static str,
    pub success_probability: f64,
    pub fidelity: ValueWithSigma,
    pub tangle: ValueWithSigma,
    pub linear_entropy: ValueWithSigma,
    pub chsh_max: ValueWithSigma,
    pub converged: bool,
    pub bootstrap_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellReport {
    pub circuit: String,
    pub xi: f64,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts_per_setting: Option<u64>,
    pub states: Vec<BellRow>,
}

fn exact(value: f64) -> ValueWithSigma {
    ValueWithSigma { value, sigma: 0.0 }
}

/// The four Bell-producing inputs, characterized either directly from the
/// output density matrix or through simulated tomography with bootstrap
/// uncertainties.
pub fn cmd_bell(config: &RunConfig) -> CommandResult<BellReport> {
    let circuit = config.build_circuit()?;
    let xi = config.overlap()?;
    let mut states = Vec::new();
    for (k, b) in BellState::ALL.into_iter().enumerate() {
        let (rho, p) = bell_output(&circuit, b, xi)?;
        let row = match config.mode {
            Mode::Analytic => BellRow {
                state: b.name(),
                input: bell_input_label(b),
                success_probability: p,
                fidelity: exact(fidelity(&rho, &b.ket())),
                tangle: exact(tangle(&rho)),
                linear_entropy: exact(linear_entropy(&rho)),
                chsh_max: exact(chsh_max(&rho)),
                converged: true,
                bootstrap_failures: 0,
            },
            Mode::Sampled => {
                let seed = derive_seed(config.seed, 20 + k as u64);
                let records = simulate_counts(&rho, config.counts, seed)?;
                let fit = analyze_with(
                    &records,
                    Some(&b.ket()),
                    config.resamples,
                    derive_seed(seed, 1),
                    &config.mle_options(),
                )?;
                BellRow {
                    state: b.name(),
                    input: bell_input_label(b),
                    success_probability: p,
                    fidelity: fit.fidelity_vs_target.expect("target was given"),
                    tangle: fit.tangle,
                    linear_entropy: fit.linear_entropy,
                    chsh_max: fit.chsh_max,
                    converged: fit.converged,
                    bootstrap_failures: fit.bootstrap_failures,
                }
            }
        };
        states.push(row);
    }
    let report = BellReport {
        circuit: config.circuit.to_string(),
        xi: config.xi,
        mode: config.mode,
        counts_per_setting: (config.mode == Mode::Sampled).then_some(config.counts),
        states,
    };
    config.write_file("bell.json", &to_report_json(&report))?;
    if let Some(row) = report.states.iter().find(|r| !r.converged) {
        return Err(CommandError::NotConverged(format!(
            "reconstruction of {} did not converge",
            row.state
        )));
    }
    Ok(report)
}

/// Everything the gate characterization produces, in one document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub truth_table: TruthTableReport,
    pub fringes: FringeReport,
    pub bell: BellReport,
}

pub fn cmd_report(config: &RunConfig) -> CommandResult<GateReport> {
    let sub = RunConfig {
        out_dir: None,
        ..config.clone()
    };
    let report = GateReport {
        truth_table: cmd_truth_table(&sub)?,
        fringes: cmd_fringe(&sub)?,
        bell: cmd_bell(&sub)?,
    };
    config.write_file("gate_report.json", &to_report_json(&report))?;
    Ok(report)
}

pub const COUNTS_HEADER: [&str; 3] = ["setting_c", "setting_t", "counts"];

pub fn counts_to_csv(records: &[CountRecord]) -> String {
    let mut s = COUNTS_HEADER.join(",");
    s.push('\n');
    for r in records {
        let _ = writeln!(s, "{},{},{}", r.setting.control, r.setting.target, r.counts);
    }
    s
}

fn csv_error(line: u64, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line: line as usize,
        column,
        message: message.into(),
    }
}

/// Parse a counts file. Errors name the offending line and column.
pub fn parse_counts_csv(text: &str) -> crate::Result<Vec<CountRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    let mut header_seen = false;
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_error(line, 1, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(str::is_empty) {
            continue;
        }
        if !header_seen {
            if row.iter().ne(COUNTS_HEADER) {
                return Err(csv_error(
                    line,
                    1,
                    format!("expected header `{}`", COUNTS_HEADER.join(",")),
                ));
            }
            header_seen = true;
            continue;
        }
        if row.len() != 3 {
            return Err(csv_error(line, 1, format!("expected 3 fields, got {}", row.len())));
        }
        let column = |field: usize| 1 + row.iter().take(field).map(|f| f.len() + 1).sum::<usize>();
        let tag = |field: usize| {
            row[field]
                .parse::<ProjectorTag>()
                .map_err(|e| csv_error(line, column(field), e.to_string()))
        };
        let (c, t) = (tag(0)?, tag(1)?);
        let counts: i64 = row[2]
            .parse()
            .map_err(|_| csv_error(line, column(2), format!("invalid count {:?}", &row[2])))?;
        if counts < 0 {
            return Err(csv_error(line, column(2), format!("negative counts {counts}")));
        }
        records.push(CountRecord {
            setting: SettingPair::new(c, t),
            counts: counts as u64,
        });
    }
    if !header_seen {
        return Err(csv_error(1, 1, "empty counts file"));
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomoReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<&'static str>,
    pub rho_real: [[f64; 4]; 4],
    pub rho_imag: [[f64; 4]; 4],
    #[serde(flatten)]
    pub result: TomographyResult,
}

pub fn cmd_tomo(config: &RunConfig, counts_csv: &Path, target: Option<BellState>) -> CommandResult<TomoReport> {
    let text = fs::read_to_string(counts_csv).map_err(|source| CommandError::Io {
        path: counts_csv.to_path_buf(),
        source,
    })?;
    let records = parse_counts_csv(&text)?;
    let ket = target.map(BellState::ket);
    let result = analyze_with(
        &records,
        ket.as_ref(),
        config.resamples,
        config.seed,
        &config.mle_options(),
    )?;
    let m = result.rho.matrix();
    let report = TomoReport {
        target: target.map(BellState::name),
        rho_real: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)].re)),
        rho_imag: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)].im)),
        result,
    };
    config.write_file("tomography.json", &to_report_json(&report))?;
    if !report.result.converged {
        return Err(CommandError::NotConverged(format!(
            "reconstruction did not converge within {} iterations",
            report.result.iterations
        )));
    }
    Ok(report)
}

/// Tomography counts for the gate output on one Bell-producing input:
/// expected values in analytic mode, Poisson draws in sampled mode.
pub fn cmd_counts(config: &RunConfig, state: BellState) -> CommandResult<String> {
    let circuit = config.build_circuit()?;
    let (rho, _) = bell_output(&circuit, state, config.overlap()?)?;
    let records = match config.mode {
        Mode::Analytic => expected_counts(&rho, config.counts),
        Mode::Sampled => simulate_counts(&rho, config.counts, config.seed)?,
    };
    let csv = counts_to_csv(&records);
    config.write_file("counts.csv", &csv)?;
    Ok(csv)
}
