//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::envelope::integral_reconstruct;
use crate::error::{Error, Result};
use crate::grid::{fmt_num, GridMeta, Topology};
use crate::problem_file::{export_problem, parse_problem};
use crate::report::{analyze, solve_entry, to_json, write_plot_csv, AnalysisOptions, SolveEntry, TOOL, VERSION};
use crate::scenarios::{build, list_scenarios, ProblemKind, Scenario, ScenarioInfo};
use crate::solver::SolveConfig;

#[derive(Debug, Parser)]
#[command(name = "poschoice", version, about = "Value functions of positioning choice problems with discontinuous payoffs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve at one or more anchors and check first-order conditions.
    Solve {
        #[command(flatten)]
        source: Source,
        /// Anchor as comma-separated coordinates; repeatable.
        #[arg(long = "x", value_name = "X1,X2,..")]
        anchors: Vec<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Build the value grid and run the envelope checks.
    Analyze {
        #[command(flatten)]
        source: Source,
        /// Cells per axis.
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Rebuild a one-dimensional V from V(0) and its integrated derivative.
    Reconstruct {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Inspect the scenario registry.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Debug, Subcommand)]
enum ScenarioAction {
    List {
        #[command(flatten)]
        output: Output,
    },
    /// Print a scenario as a problem file.
    Export {
        name: String,
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Source {
    #[arg(long, conflicts_with = "problem_file")]
    scenario: Option<String>,
    #[arg(long, value_name = "PATH")]
    problem_file: Option<PathBuf>,
    /// Scenario parameter; repeatable.
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct Output {
    /// Directory receiving the output files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
struct ConfigEcho {
    command: String,
    scenario: Option<String>,
    problem_file: Option<String>,
    params: BTreeMap<String, f64>,
    anchors: Vec<Vec<f64>>,
    grid: Option<usize>,
    format: Format,
}

struct Loaded {
    label: String,
    problem: ProblemKind,
    scenario: Option<Scenario>,
    echo: ConfigEcho,
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for p in raw {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::input(format!("--param expects key=value, got `{p}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::param(k.trim(), format!("`{v}` is not a number")))?;
        if out.insert(k.trim().to_string(), v).is_some() {
            return Err(Error::param(k.trim(), "given twice"));
        }
    }
    Ok(out)
}

fn parse_anchor(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| Error::input(format!("--x: `{c}` is not a number")))
        })
        .collect()
}

fn load(source: &Source, command: &str, format: Format) -> Result<Loaded> {
    let params = parse_params(&source.params)?;
    let echo = ConfigEcho {
        command: command.into(),
        scenario: source.scenario.clone(),
        problem_file: source.problem_file.as_ref().map(|p| p.display().to_string()),
        params: params.clone(),
        anchors: Vec::new(),
        grid: None,
        format,
    };
    match (&source.scenario, &source.problem_file) {
        (Some(name), None) => {
            let s = build(name, &params)?;
            Ok(Loaded {
                label: name.clone(),
                problem: s.problem.clone(),
                echo: ConfigEcho {
                    params: s.params.clone(),
                    ..echo
                },
                scenario: Some(s),
            })
        }
        (None, Some(path)) => {
            if !params.is_empty() {
                return Err(Error::input("--param applies to scenarios, not problem files"));
            }
            let src = fs::read_to_string(path)
                .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
            let problem = parse_problem(&src).map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
                other => other,
            })?;
            Ok(Loaded {
                label: path.display().to_string(),
                problem,
                scenario: None,
                echo,
            })
        }
        _ => Err(Error::input("give exactly one of --scenario or --problem-file")),
    }
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

#[derive(Serialize)]
struct SolveReport {
    tool: &'static str,
    version: &'static str,
    config: ConfigEcho,
    scenario: String,
    regularity_violated: bool,
    results: Vec<SolveEntry>,
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(" ")
}

fn cmd_solve(source: &Source, anchors: &[String], output: &Output, out: &mut dyn Write) -> Result<()> {
    let mut loaded = load(source, "solve", output.format)?;
    if anchors.is_empty() {
        return Err(Error::input("solve needs at least one --x"));
    }
    let xs = anchors.iter().map(|a| parse_anchor(a)).collect::<Result<Vec<_>>>()?;
    loaded.echo.anchors = xs.clone();
    let cfg = SolveConfig::for_dim(loaded.problem.dim());
    let results = xs
        .iter()
        .map(|x| solve_entry(&loaded.problem, x, &cfg))
        .collect::<Result<Vec<_>>>()?;
    let n = loaded.problem.dim();
    let report = SolveReport {
        tool: TOOL,
        version: VERSION,
        config: loaded.echo,
        scenario: loaded.label,
        regularity_violated: loaded.problem.regularity_violated(),
        results,
    };
    let json = to_json(&report)?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
    header.extend(["V".to_string(), "argmax".to_string(), "fonc_pass".to_string()]);
    csv.write_record(&header)?;
    for r in &report.results {
        let mut row: Vec<String> = r.anchor.iter().map(|v| fmt_num(*v)).collect();
        row.push(fmt_num(r.value));
        row.push(r.argmax_set.iter().map(|p| fmt_point(p)).collect::<Vec<_>>().join(";"));
        row.push(
            r.fonc_pass
                .iter()
                .map(|p| match p {
                    Some(true) => "pass",
                    Some(false) => "fail",
                    None => "boundary",
                })
                .collect::<Vec<_>>()
                .join(";"),
        );
        csv.write_record(&row)?;
    }
    let csv = csv.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    if let Some(dir) = &output.out {
        write_file(dir, "solve.json", json.as_bytes())?;
        write_file(dir, "solve.csv", &csv)?;
    }
    match output.format {
        Format::Json => out.write_all(json.as_bytes())?,
        Format::Csv => out.write_all(&csv)?,
    }
    Ok(())
}

fn cmd_analyze(source: &Source, cells: usize, output: &Output, out: &mut dyn Write) -> Result<()> {
    let mut loaded = load(source, "analyze", output.format)?;
    if cells < 2 {
        return Err(Error::param("grid", "need at least 2 cells per axis"));
    }
    loaded.echo.grid = Some(cells);
    let opts = AnalysisOptions::new(cells, loaded.problem.dim());
    let config = serde_json::to_value(&loaded.echo)?;
    let a = analyze(&loaded.label, &loaded.problem, loaded.scenario.as_ref(), config, &opts)?;
    let json = to_json(&a.report)?;
    let mut plot = Vec::new();
    write_plot_csv(&a.grid, a.kinks.as_ref(), &mut plot)?;
    if let Some(dir) = &output.out {
        write_file(dir, "report.json", json.as_bytes())?;
        write_file(dir, "plot.csv", &plot)?;
        let mut grid_csv = Vec::new();
        a.grid.write_csv(&mut grid_csv)?;
        write_file(dir, "grid.csv", &grid_csv)?;
        write_file(dir, "grid.json", to_json(&a.grid.meta())?.as_bytes())?;
    }
    match output.format {
        Format::Json => out.write_all(json.as_bytes())?,
        Format::Csv => out.write_all(&plot)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ReconstructReport {
    tool: &'static str,
    version: &'static str,
    config: ConfigEcho,
    scenario: String,
    grid: GridMeta,
    sup_error: f64,
    spacing: f64,
    sup_error_over_spacing: f64,
}

fn cmd_reconstruct(source: &Source, cells: usize, output: &Output, out: &mut dyn Write) -> Result<()> {
    let mut loaded = load(source, "reconstruct", output.format)?;
    if loaded.problem.dim() != 1 || loaded.problem.topology() != Topology::Box {
        return Err(Error::Unsupported("integral reconstruction is one-dimensional".into()));
    }
    loaded.echo.grid = Some(cells);
    let cfg = SolveConfig::for_dim(1);
    let grid = loaded.problem.value_grid(cells, &cfg)?;
    let r = integral_reconstruct(&grid)?;
    let h = grid.spacing(0);
    let report = ReconstructReport {
        tool: TOOL,
        version: VERSION,
        config: loaded.echo,
        scenario: loaded.label,
        grid: grid.meta(),
        sup_error: r.sup_error,
        spacing: h,
        sup_error_over_spacing: r.sup_error / h,
    };
    let json = to_json(&report)?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["x", "V", "reconstructed"])?;
    for i in 0..r.points.len() {
        csv.write_record([fmt_num(r.points[i]), fmt_num(r.values[i]), fmt_num(r.reconstructed[i])])?;
    }
    let csv = csv.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    if let Some(dir) = &output.out {
        write_file(dir, "reconstruct.json", json.as_bytes())?;
        write_file(dir, "reconstruction.csv", &csv)?;
    }
    match output.format {
        Format::Json => out.write_all(json.as_bytes())?,
        Format::Csv => out.write_all(&csv)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ScenarioList {
    tool: &'static str,
    version: &'static str,
    scenarios: Vec<ScenarioInfo>,
}

fn cmd_scenario(action: &ScenarioAction, out: &mut dyn Write) -> Result<()> {
    match action {
        ScenarioAction::List { output } => {
            let list = ScenarioList {
                tool: TOOL,
                version: VERSION,
                scenarios: list_scenarios(),
            };
            let body = match output.format {
                Format::Json => to_json(&list)?.into_bytes(),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["name", "params", "citation"])?;
                    for s in &list.scenarios {
                        let params = s
                            .params
                            .iter()
                            .map(|p| format!("{}={} ({})", p.name, fmt_num(p.default), p.constraint))
                            .collect::<Vec<_>>()
                            .join(";");
                        w.write_record([s.name.as_str(), &params, &s.citation])?;
                    }
                    w.into_inner().map_err(|e| Error::Io(e.to_string()))?
                }
            };
            if let Some(dir) = &output.out {
                let name = match output.format {
                    Format::Json => "scenarios.json",
                    Format::Csv => "scenarios.csv",
                };
                write_file(dir, name, &body)?;
            }
            out.write_all(&body)?;
        }
        ScenarioAction::Export { name, params, out: dir } => {
            let s = build(name, &parse_params(params)?)?;
            let text = export_problem(&s.problem)?;
            if let Some(dir) = dir {
                write_file(dir, &format!("{name}.toml"), text.as_bytes())?;
            }
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 when a
/// computation fails, 2 for usage and parameter errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    let result = match &cli.command {
        Command::Solve { source, anchors, output } => cmd_solve(source, anchors, output, out),
        Command::Analyze { source, grid, output } => cmd_analyze(source, *grid, output, out),
        Command::Reconstruct { source, grid, output } => cmd_reconstruct(source, *grid, output, out),
        Command::Scenario { action } => cmd_scenario(action, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}
