//! Command-line front end.
//!
//! Exit status is 0 on success, 1 when a verification fails or a run or
//! record is unusable, and 2 for usage and configuration errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::ConfigFile;
use crate::dynamics::{self, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{self, Verdict};
use crate::lattice::{NaturalLabeling, PartialStem};
use crate::oracle::enumerate_distribution;
use crate::record;
use crate::render::{self, Diagram};
use crate::verify::{self, configured_instance, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "nullcollapse", version, about = "Collapse dynamics on a periodic 1+1 null lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Image,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured dynamics and write one record per seed.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the configured seed; run k uses seed + k.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the exact outcome distribution of the configured lattice.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated vertex ordinals; defaults to every vertex.
        #[arg(long)]
        stem: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_parser = ["gamma", "nosignal", "kraus", "samols", "heisenberg", "all"])]
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Base seed of the randomized instances.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw the spacetime diagram of a record.
    Render {
        record: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment and write its report and traces.
    Experiment {
        #[arg(value_parser = ["macro_collapse", "noise_profile", "kent"])]
        name: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Guardrail { .. }
        | Error::Precondition(_)
        | Error::InvalidGeometry(_)
        | Error::InvalidState(_)
        | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<(ConfigFile, RunConfig)> {
    let file = ConfigFile::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        other => other,
    })?;
    let mut config = file.to_run_config()?;
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok((file, config))
}

fn output_dir(explicit: Option<PathBuf>, file: &ConfigFile) -> PathBuf {
    explicit
        .or_else(|| file.output.as_ref().and_then(|o| o.dir.as_ref()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Simulate { config, count, out: dir, seed } => {
            let (file, config) = load(&config, seed)?;
            let dir = output_dir(dir, &file);
            simulate(&config, count, &dir)?;
            writeln!(out, "wrote {count} records to {}", dir.display())?;
            Ok(EXIT_OK)
        }
        Command::Oracle { config, stem, seed } => {
            let (_, config) = load(&config, seed)?;
            out.write_all(oracle_table(&config, stem.as_deref())?.as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Verify { suite, config, seed } => {
            let suite: Suite = suite.parse()?;
            let loaded = config.map(|p| load(&p, None)).transpose()?;
            let config = loaded.map(|(_, c)| c);
            let seed = seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
            let report = verify::run_suite(suite, config.as_ref(), seed)?;
            out.write_all(report.to_text().as_bytes())?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Render { record: path, format, out: target } => {
            let record = record::read(&path).map_err(|e| match e {
                Error::Io(io) => Error::Record(format!("{}: {io}", path.display())),
                other => other,
            })?;
            let diagram = Diagram::from_record(&record)?;
            match format {
                Format::Text => match target {
                    Some(t) => std::fs::write(t, diagram.to_text())?,
                    None => out.write_all(diagram.to_text().as_bytes())?,
                },
                Format::Image => {
                    let target = target.unwrap_or_else(|| path.with_extension("png"));
                    render::write_image(&target, &diagram)?;
                    writeln!(out, "wrote {}", target.display())?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Experiment { name, config, out: dir, seed } => {
            let (file, config) = load(&config, seed)?;
            let params = file.experiment.clone().unwrap_or_default();
            let runs = params.runs.unwrap_or(100);
            let report = match name.as_str() {
                "macro_collapse" => experiments::macro_collapse(&config, runs)?,
                "noise_profile" => experiments::noise_profile(&config, runs)?,
                "kent" => {
                    let alternate = params
                        .alternate_state
                        .as_ref()
                        .ok_or_else(|| Error::Config("kent needs [experiment.alternate_state]".into()))?
                        .to_initial_state()?;
                    alternate.build(config.geometry)?;
                    experiments::kent_state_dependence(
                        &config,
                        &alternate,
                        &params.early_outcomes()?,
                        params.late.unwrap_or(1),
                        params.samples.unwrap_or(10_000),
                    )?
                }
                other => return Err(Error::Config(format!("unknown experiment {other:?}"))),
            };
            let dir = output_dir(dir, &file);
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join(format!("{name}_report.txt")), report.to_text())?;
            std::fs::write(dir.join(format!("{name}_traces.csv")), report.traces_csv())?;
            out.write_all(report.to_text().as_bytes())?;
            Ok(if report.verdict == Verdict::Fail { EXIT_FAILURE } else { EXIT_OK })
        }
    }
}

/// Writes `record_NNNN.txt` for seeds `seed, seed+1, ...` and a
/// `summary.tsv` of outcome counts per event ordinal.
pub fn simulate(config: &RunConfig, count: usize, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut counts = vec![[0usize; 5]; config.steps];
    for k in 0..count {
        let mut c = config.clone();
        c.seed = config
            .seed
            .checked_add(k as u64)
            .ok_or_else(|| Error::Config("seed overflow".into()))?;
        let record = dynamics::run(&c)?;
        for e in &record.events {
            let column = e.outcome.map_or(4, |o| o.index());
            counts[e.ordinal][column] += 1;
        }
        record::write(&dir.join(format!("record_{k:04}.txt")), &record)?;
    }
    let mut summary = String::from("ordinal\t00\t01\t10\t11\tunrealized\n");
    for (ordinal, row) in counts.iter().enumerate() {
        let _ = writeln!(summary, "{ordinal}\t{}\t{}\t{}\t{}\t{}", row[0], row[1], row[2], row[3], row[4]);
    }
    std::fs::write(dir.join("summary.tsv"), summary)?;
    Ok(())
}

/// `x` with 12 significant digits in positional notation.
fn significant(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let decimals = (11 - x.abs().log10().floor() as i64).max(0) as usize;
    format!("{x:.decimals$}")
}

/// The exact distribution of a stem of the configured lattice as a table.
pub fn oracle_table(config: &RunConfig, stem: Option<&str>) -> Result<String> {
    let instance = configured_instance(config, usize::MAX)?;
    let stem = match stem {
        None => instance.stem(),
        Some(list) => {
            let vertices = list
                .split(',')
                .map(|v| v.trim().parse::<usize>().map_err(|_| Error::Config(format!("invalid vertex {v:?}"))))
                .collect::<Result<BTreeSet<usize>>>()?;
            PartialStem::new(&instance.dag, vertices).map_err(|e| Error::Precondition(e.to_string()))?
        }
    };
    let labeling = NaturalLabeling::creation_order(&stem);
    let dist = enumerate_distribution(&instance, &stem, &labeling)?;
    let mut out = format!(
        "# vertices {:?}\noutcome\tprobability\n",
        dist.vertices()
    );
    for (index, p) in dist.probabilities().iter().enumerate() {
        let _ = writeln!(out, "{}\t{}", dist.atom_label(index), significant(*p));
    }
    let _ = writeln!(out, "total\t{}", significant(dist.total()));
    Ok(out)
}
