//! Run configuration, result persistence and the four subcommands.
//!
//! The results document keeps the field names of the original attack script
//! (`experiment`, `backend`, `physical_qubits`, `shots`, `counts`) so
//! hardware result files load unchanged; everything this tool adds lives under
//! the optional `extensions` key.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{all_figures, write_figures, FigureDataset};
use crate::calibration::{parse_calibration_csv, rank_qubits, CalibrationError};
use crate::circuit::{build_shor_circuit, MAX_BITS};
use crate::ecgroup::{default_encoding, CurveFixture, EcError, EcdlpInstance, SubgroupEncoding};
use crate::postprocess::{
    extract_candidates, parse_counts, success_check, CandidateTable, PostError, SuccessReport, DEFAULT_TOP_N,
};
use crate::simulator::{
    analytic_distribution, apply_noise, run_exact, sample, ConventionConfig, Counts, OutcomeDistribution,
};

pub const EXPERIMENT: &str = "ECDLP_32pts_Shors";
pub const BACKEND: &str = "ecdlp-lab/statevector";
pub const DEFAULT_SHOTS: u64 = 16384;

pub const EXIT_HIT: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_MISS: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Curve(#[from] EcError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Post(#[from] PostError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Consistent,
    PaperCompat,
}

impl Preset {
    pub fn conventions(self) -> ConventionConfig {
        match self {
            Preset::Consistent => ConventionConfig::consistent(),
            Preset::PaperCompat => ConventionConfig::paper_compat(),
        }
    }
}

/// How the public point is specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeySpec {
    /// Secret scalar; `Q = k P` is computed on the curve.
    Secret(u64),
    /// Public point index taken verbatim.
    QIndex(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: u32,
    pub key: KeySpec,
    pub p_index: u64,
    pub shots: u64,
    pub seed: u64,
    pub noise_eps: f64,
    pub readout_flip: f64,
    pub top_n: usize,
    pub preset: Preset,
    pub out_dir: PathBuf,
    pub curve: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
}

impl RunConfig {
    /// The published instance: `n = 5`, `Q_IDX = 23`, 16384 shots.
    pub fn published(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            n: 5,
            key: KeySpec::QIndex(23),
            p_index: 1,
            shots: DEFAULT_SHOTS,
            seed: 0,
            noise_eps: 0.0,
            readout_flip: 0.0,
            top_n: DEFAULT_TOP_N,
            preset: Preset::PaperCompat,
            out_dir: out_dir.into(),
            curve: None,
            calibration: None,
        }
    }

    pub fn consistent(n: u32, k: u64, out_dir: impl Into<PathBuf>) -> Self {
        Self { n, key: KeySpec::Secret(k), preset: Preset::Consistent, ..Self::published(out_dir) }
    }

    pub fn modulus(&self) -> u64 {
        1 << self.n
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(1..=MAX_BITS).contains(&self.n) {
            return bad(format!("--bits must be in 1..={MAX_BITS}, got {}", self.n));
        }
        if self.shots == 0 {
            return bad("--shots must be at least 1".into());
        }
        if self.top_n == 0 {
            return bad("--top must be at least 1".into());
        }
        for (name, v) in [("--noise-eps", self.noise_eps), ("--readout-flip", self.readout_flip)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        let modulus = self.modulus();
        if self.p_index >= modulus {
            return bad(format!("--p-index {} out of range for N = {modulus}", self.p_index));
        }
        match self.key {
            KeySpec::Secret(k) if k >= modulus => bad(format!("--k {k} out of range for N = {modulus}")),
            KeySpec::QIndex(q) if q >= modulus => bad(format!("--q-index {q} out of range for N = {modulus}")),
            _ => Ok(()),
        }
    }

    fn encoding(&self) -> Result<SubgroupEncoding, CliError> {
        match &self.curve {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(io_err(path))?;
                let fixture: CurveFixture =
                    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("curve fixture: {e}")))?;
                if fixture.order != self.modulus() {
                    return Err(CliError::Config(format!(
                        "curve fixture has order {}, --bits needs {}",
                        fixture.order,
                        self.modulus()
                    )));
                }
                Ok(fixture.to_encoding()?)
            }
            None => Ok(default_encoding(self.n)?),
        }
    }

    /// Builds the instance. Verbatim `q_index` values are read with the
    /// inverse-index convention `q_index = p_index * k^{-1}`, which is how the
    /// published `Q_IDX = 23` pairs with `k = 7`.
    pub fn instance(&self) -> Result<EcdlpInstance, CliError> {
        self.validate()?;
        let encoding = self.encoding()?;
        let modulus = self.modulus();
        match self.key {
            KeySpec::Secret(k) => Ok(EcdlpInstance::consistent(encoding, self.p_index, k)?),
            KeySpec::QIndex(q) => {
                let secret = crate::postprocess::mod_inverse(q, modulus).ok().map(|inv| self.p_index * inv % modulus);
                if secret.is_none() {
                    return Err(CliError::Config(format!(
                        "--q-index {q} is not invertible mod {modulus}; no key pairs with it"
                    )));
                }
                Ok(EcdlpInstance::with_indices(encoding, self.p_index, q, secret)?)
            }
        }
    }

    fn physical_qubits(&self) -> Result<Vec<u64>, CliError> {
        let needed = 3 * self.n as usize;
        match &self.calibration {
            Some(path) => Ok(cmd_rank_qubits(path, needed)?.into_iter().map(u64::from).collect()),
            None => Ok((0..needed as u64).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunEcho {
    pub mode: Preset,
    pub bits: u32,
    pub p_index: u64,
    pub q_index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret_k: Option<u64>,
    pub seed: u64,
    /// Decimal strings so the document stays float-free.
    pub noise_eps: String,
    pub readout_flip: String,
    pub top_n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extensions {
    pub version: String,
    pub run: RunEcho,
    pub conventions: ConventionConfig,
    pub curve: CurveFixture,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub experiment: String,
    pub backend: String,
    pub physical_qubits: Vec<u64>,
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extensions: Option<Extensions>,
}

impl ResultsDocument {
    /// Four-space indented JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let formatter = serde_json::ser::PrettyFormatter::with_indent(b"    ");
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
        self.serialize(&mut ser).expect("document serializes");
        let mut out = String::from_utf8(buf).expect("serde_json emits UTF-8");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: ResultsDocument = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        doc.counts()?;
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_json()).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn counts(&self) -> Result<Counts, CliError> {
        if self.counts.is_empty() {
            return Err(CliError::Schema("counts is empty".into()));
        }
        Counts::new(self.shots, self.counts.clone()).map_err(|e| CliError::Schema(e.to_string()))
    }

    /// Register width implied by the counts keys.
    pub fn bits(&self) -> Result<u32, CliError> {
        let width = self.counts()?.width().expect("non-empty counts");
        Ok((width / 2) as u32)
    }
}

#[derive(Debug)]
pub struct AttackOutcome {
    pub document: ResultsDocument,
    pub table: CandidateTable,
    pub target_k: Option<u64>,
    pub success: Option<SuccessReport>,
    pub report: String,
    pub results_path: PathBuf,
    pub candidates_path: PathBuf,
}

impl AttackOutcome {
    pub fn exit_code(&self) -> u8 {
        match self.success {
            Some(s) if !s.hit => EXIT_MISS,
            _ => EXIT_HIT,
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

/// Instance -> circuit -> exact distribution -> noise -> shots -> candidates.
/// Writes `results.json`, `candidates.csv` and `curve.json` into the output directory.
pub fn cmd_attack(config: &RunConfig) -> Result<AttackOutcome, CliError> {
    let instance = config.instance()?;
    let conventions = config.preset.conventions();
    let n = config.n;
    let circuit = build_shor_circuit(n, instance.p_index(), instance.q_index(), &conventions);
    let exact = run_exact(&circuit);
    let noisy = apply_noise(&exact, config.noise_eps, config.readout_flip);
    let counts = sample(&noisy, config.shots, config.seed, &conventions);
    let pairs = parse_counts(&counts, n, &conventions)?;
    let table = extract_candidates(&pairs, config.modulus(), config.top_n);
    let target_k = instance.secret_k();
    let success = target_k.map(|k| success_check(&table, k));

    let curve = CurveFixture::from_encoding(instance.encoding());
    let document = ResultsDocument {
        experiment: EXPERIMENT.to_string(),
        backend: BACKEND.to_string(),
        physical_qubits: config.physical_qubits()?,
        shots: counts.shots(),
        counts: counts.into_map(),
        extensions: Some(Extensions {
            version: env!("CARGO_PKG_VERSION").to_string(),
            run: RunEcho {
                mode: config.preset,
                bits: n,
                p_index: instance.p_index(),
                q_index: instance.q_index(),
                secret_k: target_k,
                seed: config.seed,
                noise_eps: config.noise_eps.to_string(),
                readout_flip: config.readout_flip.to_string(),
                top_n: config.top_n,
            },
            conventions,
            curve: curve.clone(),
        }),
    };

    create_dir(&config.out_dir)?;
    let results_path = config.out_dir.join("results.json");
    let candidates_path = config.out_dir.join("candidates.csv");
    document.save(&results_path)?;
    write(&candidates_path, &table.to_csv(target_k))?;
    let mut curve_json = serde_json::to_string_pretty(&curve).expect("fixture serializes");
    curve_json.push('\n');
    write(&config.out_dir.join("curve.json"), &curve_json)?;

    let report = table.report(target_k);
    Ok(AttackOutcome { document, table, target_k, success, report, results_path, candidates_path })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeConfig {
    /// Overrides the conventions stored in the document; paper-compat when neither is present.
    pub preset: Option<Preset>,
    /// Overrides the stored secret.
    pub k: Option<u64>,
    pub top_n: usize,
    pub out_dir: PathBuf,
}

#[derive(Debug)]
pub struct AnalyzeOutcome {
    pub table: CandidateTable,
    pub figures: Vec<FigureDataset>,
    pub target_k: Option<u64>,
    pub success: Option<SuccessReport>,
    pub report: String,
}

impl AnalyzeOutcome {
    pub fn exit_code(&self) -> u8 {
        match self.success {
            Some(s) if !s.hit => EXIT_MISS,
            _ => EXIT_HIT,
        }
    }
}

/// Recomputes candidates and every figure from stored counts.
pub fn cmd_analyze(input: &Path, config: &AnalyzeConfig) -> Result<AnalyzeOutcome, CliError> {
    if config.top_n == 0 {
        return Err(CliError::Config("--top must be at least 1".into()));
    }
    let document = ResultsDocument::load(input)?;
    let counts = document.counts()?;
    let n = document.bits()?;
    if n > MAX_BITS {
        return Err(CliError::Schema(format!("{}-bit registers exceed the supported {MAX_BITS}", n)));
    }
    let modulus = 1u64 << n;
    let conventions = match (config.preset, &document.extensions) {
        (Some(preset), _) => preset.conventions(),
        (None, Some(ext)) => ext.conventions,
        (None, None) => ConventionConfig::paper_compat(),
    };
    let target_k = config.k.or(document.extensions.as_ref().and_then(|e| e.run.secret_k));
    if let Some(k) = target_k {
        if k >= modulus {
            return Err(CliError::Config(format!("--k {k} out of range for N = {modulus}")));
        }
    }
    let pairs = parse_counts(&counts, n, &conventions)?;
    let table = extract_candidates(&pairs, modulus, config.top_n);
    let success = target_k.map(|k| success_check(&table, k));
    // without a known key the figures follow the strongest recovered one
    let figure_k = target_k.unwrap_or_else(|| table.candidates().first().map_or(0, |c| c.k));
    let figures = all_figures(&pairs, modulus, figure_k);

    create_dir(&config.out_dir)?;
    write(&config.out_dir.join("candidates.csv"), &table.to_csv(target_k))?;
    let source = input.file_name().map_or_else(|| input.display().to_string(), |s| s.to_string_lossy().into_owned());
    let fig_dir = config.out_dir.join("figures");
    write_figures(&fig_dir, &figures, &source).map_err(io_err(&fig_dir))?;

    let report = table.report(target_k);
    Ok(AnalyzeOutcome { table, figures, target_k, success, report })
}

#[derive(Debug)]
pub struct ExactOutcome {
    pub exact: OutcomeDistribution,
    pub analytic: Option<OutcomeDistribution>,
    pub max_abs_diff: Option<f64>,
}

/// Writes `exact.csv` and, when the ridge has a closed form, `analytic.csv`.
pub fn cmd_exact(config: &RunConfig) -> Result<ExactOutcome, CliError> {
    let instance = config.instance()?;
    let conventions = config.preset.conventions();
    let circuit = build_shor_circuit(config.n, instance.p_index(), instance.q_index(), &conventions);
    let exact = run_exact(&circuit);
    let analytic = conventions
        .ridge_multiplier(instance.p_index(), instance.q_index(), config.n)
        .map(|k_eff| analytic_distribution(config.n, k_eff, &conventions));
    let max_abs_diff = analytic.as_ref().map(|a| exact.max_abs_diff(a));

    create_dir(&config.out_dir)?;
    write(&config.out_dir.join("exact.csv"), &exact.to_csv())?;
    if let Some(a) = &analytic {
        write(&config.out_dir.join("analytic.csv"), &a.to_csv())?;
    }
    Ok(ExactOutcome { exact, analytic, max_abs_diff })
}

pub fn cmd_rank_qubits(csv_path: &Path, n: usize) -> Result<Vec<u32>, CliError> {
    let text = fs::read_to_string(csv_path).map_err(io_err(csv_path))?;
    let rows = parse_calibration_csv(&text)?;
    Ok(rank_qubits(&rows, n)?)
}
