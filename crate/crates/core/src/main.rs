use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use randers::equivalence::{average_form, flatness_check, global_verdict, support_set, Outcome, Tolerances};
use randers::gallery::{self, INSTANCE_IDS};
use randers::geodesic::{integrate, CurveMode, Orientation};
use randers::problem::{GridSpec, Problem, ProblemFile};
use randers::randers::{homothety_check, Diffeomorphism};
use randers::{Error, Result};

#[derive(Parser)]
#[command(name = "randers", version, about = "Randers metrics on charts: geodesics and projective equivalence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Grid nodes per axis, overriding the file.
    #[arg(long)]
    grid: Option<usize>,
    /// Seed for direction sampling, overriding the file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_alg: Option<f64>,
    #[arg(long)]
    tol_zero: Option<f64>,
    #[arg(long)]
    tol_const: Option<f64>,
    #[arg(long)]
    tol_curvematch: Option<f64>,
    #[arg(long)]
    tol_curvature: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Oriented,
    Unoriented,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientationArg {
    #[value(alias = "forward")]
    Fwd,
    #[value(alias = "backward")]
    Bwd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    /// `g` and `omega`
    First,
    /// `g_bar` and `omega_bar`
    Second,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the two metrics of a problem share their geodesics.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "oriented")]
        mode: ModeArg,
    },
    /// Trace a geodesic and write it as CSV.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Start point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        from: Vec<f64>,
        /// Initial direction, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        dir: Vec<f64>,
        #[arg(long, value_enum, default_value = "fwd")]
        orientation: OrientationArg,
        /// Parameter length.
        #[arg(long = "T", default_value_t = 1.0)]
        t_max: f64,
        /// Step size.
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "first")]
        metric: Which,
    },
    /// Test projective flatness: constant curvature and a closed form.
    Flat {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "first")]
        metric: Which,
    },
    /// List the connected components of the support of the differential.
    Support {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "first")]
        metric: Which,
    },
    /// Test whether a map is a homothety of the Riemannian part.
    Pullback {
        #[command(flatten)]
        common: Common,
        /// One component expression per coordinate, in order.
        #[arg(long = "map", required = true, allow_hyphen_values = true)]
        map: Vec<String>,
    },
    /// Average the 1-form over a finite group of maps.
    Average {
        #[command(flatten)]
        common: Common,
        /// JSON file holding a list of maps, each a list of component
        /// expressions. Repeatable; the lists are concatenated.
        #[arg(long = "group", required = true)]
        group: Vec<PathBuf>,
    },
    /// List or export built-in instances.
    Gallery {
        #[arg(long, conflicts_with = "export")]
        list: bool,
        /// Instance id to export as a problem file.
        #[arg(long)]
        export: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Common {
    fn load(&self) -> Result<Problem> {
        let mut file = ProblemFile::load(&self.problem)?;
        if let Some(k) = self.grid {
            file.grid = Some(GridSpec::Uniform(k));
        }
        if let Some(s) = self.seed {
            file.seed = Some(s);
        }
        let mut tol: Tolerances = file.tolerances.unwrap_or_default();
        for (slot, value) in [
            (&mut tol.alg, self.tol_alg),
            (&mut tol.zero, self.tol_zero),
            (&mut tol.constant, self.tol_const),
            (&mut tol.curvematch, self.tol_curvematch),
            (&mut tol.curvature, self.tol_curvature),
        ] {
            if let Some(v) = value {
                *slot = v;
            }
        }
        file.tolerances = Some(tol);
        file.build()
    }
}

fn pick(problem: &Problem, which: Which) -> Result<&randers::randers::RandersMetric> {
    match which {
        Which::First => Ok(&problem.metric),
        Which::Second => Ok(problem.pair()?.1),
    }
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Check { common, mode } => {
            let problem = common.load()?;
            let (f, f_bar) = problem.pair()?;
            let mode = match mode {
                ModeArg::Oriented => CurveMode::Oriented,
                ModeArg::Unoriented => CurveMode::Unoriented,
            };
            let verdict = global_verdict(f, f_bar, &problem.grid, mode, &problem.tolerances, problem.seed)?;
            emit(&verdict)?;
            if verdict.outcome == Outcome::Refuted {
                if let Some(reason) = &verdict.reason {
                    eprintln!("refuted: {reason}");
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Trace { common, from, dir, orientation, t_max, h, out, metric } => {
            let problem = common.load()?;
            let f = pick(&problem, metric)?;
            let orientation = match orientation {
                OrientationArg::Fwd => Orientation::Forward,
                OrientationArg::Bwd => Orientation::Backward,
            };
            let curve = integrate(f, &from, &dir, orientation, t_max, h)?;
            if curve.truncated {
                let t = curve.samples.last().map_or(0.0, |s| s.t);
                eprintln!("trace truncated at t = {t}: left the admissible set");
            }
            match out {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(&path)?);
                    curve.write_csv(f, &mut w)?;
                    w.flush()?;
                }
                None => {
                    let mut w = BufWriter::new(io::stdout().lock());
                    curve.write_csv(f, &mut w)?;
                    w.flush()?;
                }
            }
        }
        Command::Flat { common, metric } => {
            let problem = common.load()?;
            let report = flatness_check(pick(&problem, metric)?, &problem.grid, &problem.tolerances)?;
            emit(&report)?;
        }
        Command::Support { common, metric } => {
            let problem = common.load()?;
            let f = pick(&problem, metric)?;
            let points = problem.grid.admissible_points();
            let mut scale: f64 = 0.0;
            for p in &points {
                scale = scale.max(f.omega().values(p)?.amax());
            }
            let threshold = problem.tolerances.zero_threshold(scale);
            let support = support_set(f.omega(), &problem.grid, threshold)?;
            emit(&json!({
                "grid": problem.grid.counts(),
                "threshold": threshold,
                "sample_count": support.members.len(),
                "components": support.components,
            }))?;
        }
        Command::Pullback { common, map } => {
            let problem = common.load()?;
            let f = &problem.metric;
            let phi = Diffeomorphism::parse(&map)?;
            let mut samples = Vec::new();
            for p in problem.grid.admissible_points() {
                if f.domain().is_admissible(&phi.apply(&p)?) {
                    samples.push(p);
                }
            }
            if samples.is_empty() {
                return Err(Error::InvalidArgument("the map sends no grid point into the domain".into()));
            }
            let report = homothety_check(f, &phi, &samples)?;
            emit(&json!({
                "is_homothety": report.is_homothety,
                "const": report.constant,
                "spread": report.spread,
                "fit_residual": report.fit_residual,
                "samples": samples.len(),
            }))?;
        }
        Command::Average { common, group } => {
            let problem = common.load()?;
            let f = &problem.metric;
            let mut maps = Vec::new();
            for path in &group {
                let text = std::fs::read_to_string(path)?;
                let list: Vec<Vec<String>> = serde_json::from_str(&text)?;
                for m in list {
                    maps.push(Diffeomorphism::parse(&m)?);
                }
            }
            let points = problem.grid.admissible_points();
            let report = average_form(f.omega(), &maps, f.domain(), &points)?;
            emit(&json!({
                "group_order": maps.len(),
                "averaged": report.averaged.sources(),
                "closedness_residual": report.closedness_residual,
                "invariance_residual": report.invariance_residual,
                "samples": points.len(),
            }))?;
        }
        Command::Gallery { list, export, out } => {
            if let Some(id) = export {
                let text = gallery::build(&id)?.problem_file().to_json();
                write_text(out.as_deref(), &text)?;
            } else if list {
                let mut out = io::stdout().lock();
                for id in INSTANCE_IDS {
                    let inst = gallery::build(id)?;
                    writeln!(out, "{id}\t{}", inst.description)?;
                }
            } else {
                return Err(Error::InvalidArgument("gallery needs --list or --export <id>".into()));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n"))?,
        None => writeln!(io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
