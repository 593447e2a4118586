//! Command-line front end.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::adversary::{sample_ue_params, AttackScenario, ResendPolicy, UeParams, UeParamsFile};
use crate::costmodel::{emit_curve, total_cost, write_curve, CurveRow, ProtocolId, YSW_NOTE};
use crate::error::Error;
use crate::experiments::{
    alice_attack_report, estimate_detection_rate, obliviousness_report, sweep_curve, write_rows,
    AliceVariant, ExperimentSpec, SweepParam,
};
use crate::protocol::{Choice, ProtocolConfig};
use crate::rng::stream_rng;
use crate::session::{run_trial, verify_line, RunSpec};

pub const SEED_ENV: &str = "QOTSIM_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
    #[error("bad config file {path}: {reason}")]
    Config { path: PathBuf, reason: String },
    #[error("bad parameter file {path}: {reason}")]
    UeFile { path: PathBuf, reason: String },
    #[error("{SEED_ENV} is not an unsigned integer: {0:?}")]
    SeedEnv(String),
    #[error("invalid combination: {0}")]
    Combination(String),
    #[error("transcript line {line}: replay diverges at {field}")]
    Divergence { line: usize, field: String },
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Intercept,
    Entangling,
    BellCheat,
    Alice,
    AliceDummy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResendName {
    GuessBasis,
    Collapsed,
    UniformFour,
}

impl From<ResendName> for ResendPolicy {
    fn from(r: ResendName) -> Self {
        match r {
            ResendName::GuessBasis => ResendPolicy::GuessBasis,
            ResendName::Collapsed => ResendPolicy::Collapsed,
            ResendName::UniformFour => ResendPolicy::UniformFour,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum ParamName {
    #[value(name = "K")]
    K,
    #[value(name = "M")]
    M,
    #[value(name = "N")]
    N,
}

#[derive(Debug, Parser)]
#[command(name = "qotsim", version, about = "Simulator for a one-out-of-two quantum oblivious transfer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Honest runs; writes one transcript per run
    Honest(Opts),
    /// Runs under an attack and compares rates with closed forms
    Attack(Opts),
    /// Detection rate over a range of K, M or N
    Sweep(Opts),
    /// Trace distance hiding the unchosen bit, for all four cases
    Oblivious(Opts),
    /// Quantum cost curves of the compared protocols
    Cost(Opts),
    /// Re-executes stored transcripts and checks them byte for byte
    Replay(Opts),
}

/// Every flag is optional here; defaults and the config file fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long = "M2")]
    pub m2: Option<usize>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioName>,
    #[arg(long, value_enum)]
    pub resend: Option<ResendName>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long = "ue-file")]
    pub ue_file: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub rmax: Option<i64>,
    /// Cost at a single R instead of a curve
    #[arg(long = "R", allow_negative_numbers = true)]
    pub r: Option<i64>,
    /// Swept parameter
    #[arg(long, value_enum)]
    pub param: Option<ParamName>,
    #[arg(long)]
    pub from: Option<usize>,
    #[arg(long)]
    pub to: Option<usize>,
}

/// Contents of a `--config` file. Keys mirror the long flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "M")]
    m: Option<usize>,
    #[serde(rename = "M2")]
    m2: Option<usize>,
    #[serde(rename = "K")]
    k: Option<usize>,
    tau: Option<f64>,
    scenario: Option<ScenarioName>,
    resend: Option<ResendName>,
    trials: Option<u64>,
    seed: Option<u64>,
    format: Option<Format>,
    out: Option<PathBuf>,
    transcript: Option<PathBuf>,
    #[serde(rename = "ue-file")]
    ue_file: Option<PathBuf>,
    rmax: Option<i64>,
    #[serde(rename = "R")]
    r: Option<i64>,
    param: Option<ParamName>,
    from: Option<usize>,
    to: Option<usize>,
}

impl Opts {
    fn merge_file(mut self) -> CliResult<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = fs::read_to_string(&path).map_err(|source| CliError::Read { path: path.clone(), source })?;
        let f: FileConfig = toml::from_str(&text).map_err(|e| CliError::Config {
            path,
            reason: e.message().to_string(),
        })?;
        macro_rules! fill {
            ($($field:ident),*) => { $( if self.$field.is_none() { self.$field = f.$field; } )* };
        }
        fill!(n, m, m2, k, tau, scenario, resend, trials, seed, format, out, transcript, ue_file, rmax, r, param, from, to);
        Ok(self)
    }

    fn seed(&self) -> CliResult<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| CliError::SeedEnv(v)),
            Err(_) => Ok(0),
        }
    }

    fn protocol_config(&self) -> CliResult<ProtocolConfig> {
        let d = ProtocolConfig::default();
        let c = ProtocolConfig {
            n: self.n.unwrap_or(d.n),
            m: self.m.unwrap_or(d.m),
            k: self.k.unwrap_or(d.k),
            m2: self.m2.unwrap_or(d.m2),
            tau: self.tau.unwrap_or(d.tau),
        };
        c.validate()?;
        Ok(c)
    }

    fn forbid(&self, what: &str, set: bool, command: &str) -> CliResult<()> {
        if set {
            return Err(CliError::Combination(format!("{what} is not used by {command}")));
        }
        Ok(())
    }
}

fn read_ue_file(path: &Path) -> CliResult<UeParams> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    let file: UeParamsFile = toml::from_str(&text).map_err(|e| CliError::UeFile {
        path: path.to_path_buf(),
        reason: e.message().to_string(),
    })?;
    UeParams::try_from(file).map_err(|e| CliError::UeFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn scenario(opts: &Opts, seed: u64) -> CliResult<AttackScenario> {
    let name = opts
        .scenario
        .ok_or_else(|| CliError::Combination("--scenario is required".into()))?;
    if opts.ue_file.is_some() && name != ScenarioName::Entangling {
        return Err(CliError::Combination("--ue-file only applies to --scenario entangling".into()));
    }
    if opts.resend.is_some() && !matches!(name, ScenarioName::Alice | ScenarioName::AliceDummy) {
        return Err(CliError::Combination("--resend only applies to the alice scenarios".into()));
    }
    let resend = opts.resend.map(ResendPolicy::from).unwrap_or_default();
    Ok(match name {
        ScenarioName::Intercept => AttackScenario::InterceptResend,
        ScenarioName::BellCheat => AttackScenario::BobBellCheat,
        ScenarioName::Alice => AttackScenario::AliceMeasureResend { resend },
        ScenarioName::AliceDummy => AttackScenario::AliceMeasureResendDummy { resend },
        ScenarioName::Entangling => {
            let params = match &opts.ue_file {
                Some(p) => read_ue_file(p)?,
                // no file: a sampled unitary, fixed by the seed
                None => sample_ue_params(&mut stream_rng(seed, u64::MAX))?,
            };
            AttackScenario::Entangling { params }
        }
    })
}

/// Output sink named by `path`, or standard output.
fn sink(path: Option<&Path>) -> CliResult<(Box<dyn Write>, String)> {
    match path {
        Some(p) => {
            let f = fs::File::create(p).map_err(|source| CliError::Write {
                path: p.display().to_string(),
                source,
            })?;
            Ok((Box::new(io::BufWriter::new(f)), p.display().to_string()))
        }
        None => Ok((Box::new(io::BufWriter::new(io::stdout().lock())), "standard output".into())),
    }
}

fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    let (mut w, name) = sink(path)?;
    body(&mut *w)
        .and_then(|_| w.flush())
        .map_err(|source| CliError::Write { path: name, source })
}

fn transcripts(seed: u64, config: ProtocolConfig, scenario: Option<AttackScenario>, trials: u64) -> CliResult<Vec<String>> {
    let lines = (0..trials)
        .into_par_iter()
        .map(|stream| {
            run_trial(&RunSpec { seed, stream, config, scenario }).map(|t| t.to_line())
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(lines)
}

fn write_lines(path: Option<&Path>, lines: &[String]) -> CliResult<()> {
    emit(path, |w| {
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}

fn honest(opts: &Opts) -> CliResult<()> {
    opts.forbid("--scenario", opts.scenario.is_some(), "honest")?;
    opts.forbid("--ue-file", opts.ue_file.is_some(), "honest")?;
    let seed = opts.seed()?;
    let config = opts.protocol_config()?;
    let trials = opts.trials.unwrap_or(1);
    if trials == 0 {
        return Err(Error::NoTrials.into());
    }
    let lines = transcripts(seed, config, None, trials)?;
    match opts.format.unwrap_or(Format::Jsonl) {
        Format::Jsonl => {
            if let Some(t) = &opts.transcript {
                write_lines(Some(t), &lines)?;
                if opts.out.is_none() {
                    return Ok(());
                }
            }
            write_lines(opts.out.as_deref(), &lines)
        }
        Format::Csv => {
            if let Some(t) = &opts.transcript {
                write_lines(Some(t), &lines)?;
            }
            let spec = ExperimentSpec { scenario: None, config, trials, seed };
            let row = estimate_detection_rate(&spec)?;
            emit(opts.out.as_deref(), |w| write_rows(w, &[row]).map_err(io::Error::other))
        }
    }
}

fn attack(opts: &Opts) -> CliResult<()> {
    if opts.format == Some(Format::Jsonl) {
        return Err(CliError::Combination("attack writes CSV; use --transcript for JSONL".into()));
    }
    let seed = opts.seed()?;
    let config = opts.protocol_config()?;
    let scenario = scenario(opts, seed)?;
    let trials = opts.trials.unwrap_or(crate::experiments::DEFAULT_TRIALS);
    if trials == 0 {
        return Err(Error::NoTrials.into());
    }
    if let Some(t) = &opts.transcript {
        write_lines(Some(t), &transcripts(seed, config, Some(scenario), trials)?)?;
    }
    match scenario {
        AttackScenario::AliceMeasureResend { resend } | AttackScenario::AliceMeasureResendDummy { resend } => {
            let variant = if matches!(scenario, AttackScenario::AliceMeasureResend { .. }) {
                AliceVariant::Plain
            } else {
                AliceVariant::Dummy
            };
            let r = alice_attack_report(trials, variant, resend, &config, seed)?;
            let err_name = match variant {
                AliceVariant::Plain => "bit_error",
                AliceVariant::Dummy => "dummy_error",
            };
            emit(opts.out.as_deref(), |w| {
                writeln!(w, "metric,empirical,closed_form,stderr,trials")?;
                for (name, row) in [("conclusive", r.conclusive), (err_name, r.bit_error)] {
                    writeln!(w, "{name},{},{},{},{}", row.empirical, row.closed_form, row.stderr, row.trials)?;
                }
                writeln!(w, "false_conclusive,{},0,0,{}", r.false_conclusive, r.slots)
            })
        }
        _ => {
            let row = estimate_detection_rate(&ExperimentSpec { scenario: Some(scenario), config, trials, seed })?;
            emit(opts.out.as_deref(), |w| write_rows(w, &[row]).map_err(io::Error::other))
        }
    }
}

fn sweep(opts: &Opts) -> CliResult<()> {
    opts.forbid("--transcript", opts.transcript.is_some(), "sweep")?;
    let seed = opts.seed()?;
    let config = opts.protocol_config()?;
    let scenario = scenario(opts, seed)?;
    let param = opts
        .param
        .ok_or_else(|| CliError::Combination("--param is required".into()))?;
    let from = opts.from.unwrap_or(1);
    let to = opts
        .to
        .ok_or_else(|| CliError::Combination("--to is required".into()))?;
    let values: Vec<usize> = (from..=to).collect();
    let trials = opts.trials.unwrap_or(crate::experiments::DEFAULT_TRIALS);
    let spec = ExperimentSpec { scenario: Some(scenario), config, trials, seed };
    let param = match param {
        ParamName::K => SweepParam::K,
        ParamName::M => SweepParam::M,
        ParamName::N => SweepParam::N,
    };
    let rows = sweep_curve(&spec, param, &values)?;
    emit(opts.out.as_deref(), |w| write_rows(w, &rows).map_err(io::Error::other))
}

fn oblivious(opts: &Opts) -> CliResult<()> {
    let mut rows = Vec::new();
    for choice in [Choice::Z, Choice::X] {
        for bit in 0..2u8 {
            rows.push((choice.bit(), bit, obliviousness_report(choice, bit)?));
        }
    }
    emit(opts.out.as_deref(), |w| {
        writeln!(w, "choice,chosen_bit,trace_distance")?;
        for (c, b, d) in rows {
            writeln!(w, "{c},{b},{d}")?;
        }
        Ok(())
    })
}

fn cost(opts: &Opts) -> CliResult<()> {
    let rows = match opts.r {
        Some(r) => {
            if opts.rmax.is_some() {
                return Err(CliError::Combination("--R and --rmax are exclusive".into()));
            }
            vec![CurveRow {
                r,
                yang: total_cost(ProtocolId::Yang2013, r)?,
                ysw: total_cost(ProtocolId::YSW2015, r)?,
                yylsz: total_cost(ProtocolId::YYLSZ2015, r)?,
                proposed: total_cost(ProtocolId::Proposed, r)?,
            }]
        }
        None => emit_curve(opts.rmax.unwrap_or(100))?,
    };
    eprintln!("{YSW_NOTE}");
    emit(opts.out.as_deref(), |w| write_curve(w, &rows).map_err(io::Error::other))
}

fn replay_cmd(opts: &Opts) -> CliResult<()> {
    let path = opts
        .transcript
        .as_ref()
        .ok_or_else(|| CliError::Combination("--transcript is required".into()))?;
    let file = fs::File::open(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
    let mut count = 0usize;
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CliError::Read { path: path.clone(), source })?;
        if line.is_empty() {
            continue;
        }
        if let Some(field) = verify_line(&line, i + 1)? {
            return Err(CliError::Divergence { line: i + 1, field });
        }
        count += 1;
    }
    emit(opts.out.as_deref(), |w| writeln!(w, "verified {count} transcripts"))
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Honest(o) => honest(&o.merge_file()?),
        Command::Attack(o) => attack(&o.merge_file()?),
        Command::Sweep(o) => sweep(&o.merge_file()?),
        Command::Oblivious(o) => oblivious(&o.merge_file()?),
        Command::Cost(o) => cost(&o.merge_file()?),
        Command::Replay(o) => replay_cmd(&o.merge_file()?),
    }
}

/// Parses `args` (program name first) and runs. Returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qotsim: {e}");
            1
        }
    }
}
