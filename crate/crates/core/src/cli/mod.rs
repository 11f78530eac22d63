//! Germ files in, report files out.

mod document;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::integrate::sample_directions;
use crate::poly::{PolyError, Polynomial};
use crate::strata::{ScaleSchedule, StrataError};
use crate::topo::Schedule;
use crate::verify::{self, Comparison, Rule, Sampling, Subject, VerificationReport, VerifyError};

pub use document::{load_germ, Assertion, GermDocument, SamplingDocument, ScaleOverrides, StratumDocument};

pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_DIRECTIONS: usize = 50;
pub const DEFAULT_DELTA_RATIO: f64 = 0.01;
pub const DEFAULT_ETA_RATIO: f64 = 0.01;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{file}: field `{field}`: {message}")]
    Schema { file: String, field: String, message: String },
    #[error("{file}: field `{field}`: {source}")]
    Poly {
        file: String,
        field: String,
        #[source]
        source: PolyError,
    },
    #[error("{file}: {source}")]
    Germ {
        file: String,
        #[source]
        source: StrataError,
    },
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    LeGreuel,
    Corollary,
    LemmaLink,
    GaussBonnet,
    Sigma,
    Kinematic,
    CurvLink,
    Density,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::LeGreuel,
        Command::Corollary,
        Command::LemmaLink,
        Command::GaussBonnet,
        Command::Sigma,
        Command::Kinematic,
        Command::CurvLink,
        Command::Density,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::LeGreuel => "le-greuel",
            Command::Corollary => "corollary",
            Command::LemmaLink => "lemma-link",
            Command::GaussBonnet => "gauss-bonnet",
            Command::Sigma => "sigma",
            Command::Kinematic => "kinematic",
            Command::CurvLink => "curv-link",
            Command::Density => "density",
        }
    }

    /// A single command, or every command for `all`.
    pub fn parse(s: &str) -> Option<Vec<Command>> {
        if s == "all" {
            return Some(Command::ALL.to_vec());
        }
        Command::ALL.iter().find(|c| c.name() == s).map(|c| vec![*c])
    }
}

/// Options of `singulab run`; `None` falls back to the germ file, then to
/// the defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub commands: Vec<Command>,
    pub paths: Vec<PathBuf>,
    pub epsilon: Option<f64>,
    pub delta_ratio: Option<f64>,
    pub eta_ratio: Option<f64>,
    pub samples: Option<usize>,
    pub directions: Option<usize>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub out: PathBuf,
    pub strict: bool,
    /// Record wall time; off makes reports byte-reproducible.
    pub timing: bool,
}

impl RunOptions {
    pub fn new(commands: Vec<Command>, paths: Vec<PathBuf>) -> RunOptions {
        RunOptions {
            commands,
            paths,
            epsilon: None,
            delta_ratio: None,
            eta_ratio: None,
            samples: None,
            directions: None,
            seed: None,
            k: None,
            out: PathBuf::from("reports"),
            strict: false,
            timing: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub germ_file: PathBuf,
    pub report: VerificationReport,
    pub report_file: PathBuf,
}

/// `.germ` files named directly or found (non-recursively) in directories,
/// sorted by path.
pub fn collect_germ_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| CliError::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|q| q.extension().is_some_and(|x| x == "germ"))
                .collect();
            found.sort();
            out.extend(found);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(CliError::Usage(format!("no such file or directory: {}", p.display())));
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no germ files given".into()));
    }
    Ok(out)
}

struct Job<'a> {
    file: &'a Path,
    doc: &'a GermDocument,
    command: Command,
}

/// Loads every germ, runs every command on it and writes
/// `<out>/<germ>.<command>.toml` plus a `.csv` table per report.
pub fn run(opts: &RunOptions) -> Result<Vec<RunOutcome>, CliError> {
    let files = collect_germ_files(&opts.paths)?;
    let docs: Vec<GermDocument> = files.iter().map(|f| load_germ(f)).collect::<Result<_, _>>()?;
    fs::create_dir_all(&opts.out).map_err(|e| CliError::Io {
        path: opts.out.display().to_string(),
        message: e.to_string(),
    })?;
    let jobs: Vec<Job> = files
        .iter()
        .zip(&docs)
        .flat_map(|(file, doc)| opts.commands.iter().map(move |&command| Job { file, doc, command }))
        .collect();
    let reports: Vec<VerificationReport> = jobs
        .par_iter()
        .map(|j| verify_document(j.doc, &j.file.display().to_string(), j.command, opts))
        .collect();
    let mut outcomes = Vec::new();
    for (job, report) in jobs.iter().zip(reports) {
        let stem = format!("{}.{}", job.doc.name, job.command.name());
        let report_file = opts.out.join(format!("{stem}.toml"));
        write_report(&report, &report_file, &opts.out.join(format!("{stem}.csv")))?;
        outcomes.push(RunOutcome {
            germ_file: job.file.to_path_buf(),
            report,
            report_file,
        });
    }
    Ok(outcomes)
}

/// Scales for a germ: command-line overrides, then the germ file's, then
/// the stabilization rule of [`ScaleSchedule::select`].
pub fn schedule_for(doc: &GermDocument, subject: &Subject, opts: &RunOptions) -> Result<ScaleSchedule, StrataError> {
    let over = doc.scales.clone().unwrap_or_default();
    let delta_ratio = opts.delta_ratio.or(over.delta_ratio).unwrap_or(DEFAULT_DELTA_RATIO);
    let eta_ratio = opts.eta_ratio.or(over.eta_ratio).unwrap_or(DEFAULT_ETA_RATIO);
    match opts.epsilon.or(over.epsilon) {
        Some(epsilon) => Ok(ScaleSchedule {
            epsilon,
            delta_ratio,
            eta_ratio,
        }),
        None => ScaleSchedule::select(&subject.germ, delta_ratio, eta_ratio, &Schedule::default()),
    }
}

/// Runs one command on a loaded germ document and returns its report,
/// with the document's assertions applied. `origin` names the document in
/// error messages. Nothing is written to disk.
pub fn verify_document(doc: &GermDocument, origin: &str, command: Command, opts: &RunOptions) -> VerificationReport {
    let sampling_doc = doc.sampling.clone().unwrap_or_default();
    let seed = opts.seed.or(sampling_doc.seed).unwrap_or(0);
    let placeholder = ScaleSchedule {
        epsilon: opts.epsilon.unwrap_or(f64::NAN),
        delta_ratio: DEFAULT_DELTA_RATIO,
        eta_ratio: DEFAULT_ETA_RATIO,
    };
    let name = command.name();
    let subject = match doc.subject(origin) {
        Ok(s) => s,
        Err(e) => return VerificationReport::failed(name, &doc.name, &placeholder, seed, &e),
    };
    let sched = match schedule_for(doc, &subject, opts) {
        Ok(s) => s,
        Err(e) => return VerificationReport::failed(name, &doc.name, &placeholder, seed, &e),
    };
    let sampling = Sampling {
        n: opts.samples.or(sampling_doc.n).unwrap_or(DEFAULT_SAMPLES),
        seed,
        strict: opts.strict,
    };
    let result = dispatch(command, doc, origin, &subject, &sched, &sampling, opts);
    let mut report = match result {
        Ok(r) => r,
        Err(e) => VerificationReport::failed(name, &doc.name, &sched, seed, &e),
    };
    apply_assertions(&mut report, doc, command);
    if !opts.timing {
        report.wall_ms = 0;
    }
    log::info!("{} {}: pass = {}", doc.name, name, report.pass);
    report
}

#[derive(Debug, Error)]
enum JobError {
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Cli(#[from] CliError),
}

fn dispatch(
    command: Command,
    doc: &GermDocument,
    origin: &str,
    subject: &Subject,
    sched: &ScaleSchedule,
    sampling: &Sampling,
    opts: &RunOptions,
) -> Result<VerificationReport, JobError> {
    let n = subject.germ.n;
    let g_or_sampled = || -> Result<Polynomial, CliError> {
        Ok(doc.g(origin)?.unwrap_or_else(|| {
            Polynomial::linear_form(&sample_directions(n, 1, sampling.seed)[0].v)
        }))
    };
    let k_default = opts.k.unwrap_or(subject.germ.dim());
    Ok(match command {
        Command::LeGreuel => match doc.g(origin)? {
            Some(g) => verify::check_le_greuel(subject, &g, sched)?,
            None => {
                let dirs = Sampling {
                    n: opts.directions.unwrap_or(DEFAULT_DIRECTIONS),
                    ..*sampling
                };
                verify::le_greuel_sweep(subject, sched, &dirs)?
            }
        },
        Command::Corollary => verify::check_corollary_isolated(subject, &g_or_sampled()?, sched)?,
        Command::LemmaLink => verify::check_lemma_link(subject, sched)?,
        Command::GaussBonnet => verify::estimate_gauss_bonnet(subject, sched, sampling)?,
        Command::Sigma => match opts.k {
            Some(k) => verify::check_sigma_k(subject, k, sched, sampling)?,
            None => verify::check_sigma_relation(subject, sched, sampling)?,
        },
        Command::Kinematic => verify::check_kinematic(subject, k_default, sched, sampling)?,
        Command::CurvLink => verify::check_curv_and_link(subject, sched, sampling)?,
        Command::Density => verify::check_density(subject, sched, sampling)?,
    })
}

/// Adds one exact comparison per assertion on this command; a missing
/// field fails the assertion.
fn apply_assertions(report: &mut VerificationReport, doc: &GermDocument, command: Command) {
    for a in doc.assertions.iter().filter(|a| a.command == command.name()) {
        let actual = match a.field.as_str() {
            "lhs" => Some(report.lhs),
            "rhs" => Some(report.rhs),
            f => f
                .strip_prefix("term.")
                .and_then(|t| report.terms.iter().find(|x| x.name == t))
                .map(|t| t.value),
        };
        let c = Comparison::new(
            &format!("assertion_{}", a.field),
            (actual.unwrap_or(f64::NAN), 0.0),
            (a.expected as f64, 0.0),
            Rule::Exact,
        );
        report.pass &= c.pass;
        report.comparisons.push(c);
    }
}

fn write_report(report: &VerificationReport, toml_path: &Path, csv_path: &Path) -> Result<(), CliError> {
    let io = |p: &Path, e: &dyn std::fmt::Display| CliError::Io {
        path: p.display().to_string(),
        message: e.to_string(),
    };
    fs::write(toml_path, report_to_toml(report)).map_err(|e| io(toml_path, &e))?;
    let mut w = csv::Writer::from_path(csv_path).map_err(|e| io(csv_path, &e))?;
    let rows = report_rows(report);
    for r in rows {
        w.write_record(&r).map_err(|e| io(csv_path, &e))?;
    }
    w.flush().map_err(|e| io(csv_path, &e))?;
    Ok(())
}

/// The report as a TOML document, as written to `<germ>.<command>.toml`.
pub fn report_to_toml(report: &VerificationReport) -> String {
    toml::to_string(report).expect("reports always serialize")
}

/// Flat table: one row per term and per comparison.
pub fn report_rows(report: &VerificationReport) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "germ".to_string(),
        "theorem".into(),
        "kind".into(),
        "name".into(),
        "value".into(),
        "stderr".into(),
        "rhs".into(),
        "stderr_rhs".into(),
        "pass".into(),
    ]];
    for t in &report.terms {
        rows.push(vec![
            report.germ.clone(),
            report.theorem.clone(),
            "term".into(),
            t.name.clone(),
            t.value.to_string(),
            t.stderr.to_string(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    for c in &report.comparisons {
        rows.push(vec![
            report.germ.clone(),
            report.theorem.clone(),
            "comparison".into(),
            c.name.clone(),
            c.lhs.to_string(),
            c.stderr_lhs.to_string(),
            c.rhs.to_string(),
            c.stderr_rhs.to_string(),
            c.pass.to_string(),
        ]);
    }
    rows
}
