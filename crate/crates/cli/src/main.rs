use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use levelends_core::lab::{self, RunReport, Scenario, SvgStyle};
use levelends_core::levelset::write_arcs_csv;
use levelends_core::weierstrass::write_mesh;
use levelends_core::LabError;

/// Runs a level-set end scenario and writes a JSON report.
#[derive(Debug, Parser)]
#[command(name = "levelends", version)]
struct Args {
    /// Scenario JSON file.
    #[arg(long, conflicts_with_all = ["example", "list_examples"])]
    scenario: Option<PathBuf>,

    /// Run a builtin catalog scenario by name.
    #[arg(long)]
    example: Option<String>,

    /// Print the builtin catalog and exit.
    #[arg(long)]
    list_examples: bool,

    /// Print the resolved scenario JSON instead of running it.
    #[arg(long)]
    emit_scenario: bool,

    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// SVG plot of the traced level.
    #[arg(long)]
    svg: Option<PathBuf>,

    /// CSV dump of the traced arcs.
    #[arg(long)]
    csv: Option<PathBuf>,

    /// ASCII mesh of the immersion (Weierstrass scenarios).
    #[arg(long)]
    mesh: Option<PathBuf>,

    /// Grid override, e.g. 256x512.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,

    #[arg(long)]
    seed: Option<u64>,

    /// Level override.
    #[arg(long, allow_negative_numbers = true)]
    level: Option<f64>,

    /// No report on stdout and no summary on stderr.
    #[arg(long)]
    quiet: bool,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NRxNA, got {s}"))?;
    let nr = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let na = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((nr, na))
}

const EXIT_CONFIG: u8 = 2;

fn load(args: &Args) -> Result<Scenario, LabError> {
    let mut scenario = match (&args.scenario, &args.example) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| LabError::InvalidConfig(format!("{}: {e}", path.display())))?;
            Scenario::from_json(&text)?
        }
        (None, Some(name)) => lab::catalog_entry(name)
            .ok_or_else(|| LabError::InvalidConfig(format!("no builtin example named \"{name}\"")))?
            .scenario,
        (None, None) => return Err(LabError::InvalidConfig("pass --scenario PATH or --example NAME".into())),
    };
    if let Some((nr, na)) = args.grid {
        scenario.grid.n_radial = nr;
        scenario.grid.n_angular = na;
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(t) = args.level {
        scenario.level = t;
        if let Some(levels) = &mut scenario.options.levels {
            *levels = vec![t];
        }
    }
    scenario.validate()?;
    Ok(scenario)
}

fn side_files(args: &Args, scenario: &Scenario) -> Result<(), String> {
    let create = |p: &PathBuf| File::create(p).map(BufWriter::new).map_err(|e| format!("{}: {e}", p.display()));
    if args.svg.is_some() || args.csv.is_some() {
        let cx = lab::export_complex(scenario).map_err(|e| e.to_string())?;
        if let Some(p) = &args.svg {
            fs::write(p, lab::render_svg(&cx, &SvgStyle::default())).map_err(|e| format!("{}: {e}", p.display()))?;
        }
        if let Some(p) = &args.csv {
            write_arcs_csv(&cx, create(p)?).map_err(|e| e.to_string())?;
        }
    }
    if let Some(p) = &args.mesh {
        let imm = lab::export_immersion(scenario).map_err(|e| e.to_string())?;
        write_mesh(&imm, create(p)?).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn summary(report: &RunReport) -> String {
    let mut lines = vec![format!("scenario {}", report.scenario.name)];
    for (name, outcome) in &report.results {
        match outcome.error_kind() {
            None => lines.push(format!("  {name}: ok")),
            Some(kind) => lines.push(format!("  {name}: error ({kind})")),
        }
    }
    lines.push(format!(
        "  {} warning(s), {:.2} s",
        report.warnings.len(),
        report.timing.wall_clock_seconds
    ));
    lines.join("\n")
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_examples {
        print!("{}", lab::list_examples());
        return ExitCode::SUCCESS;
    }
    let scenario = match load(&args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("levelends: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if args.emit_scenario {
        println!("{}", scenario.to_json());
        return ExitCode::SUCCESS;
    }
    let report = match lab::run_scenario(&scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("levelends: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let json = report.to_json();
    match &args.out {
        Some(p) => {
            if let Err(e) = fs::write(p, &json) {
                eprintln!("levelends: {}: {e}", p.display());
                return ExitCode::FAILURE;
            }
        }
        None if !args.quiet => println!("{json}"),
        None => {}
    }
    if let Err(e) = side_files(&args, &scenario) {
        eprintln!("levelends: {e}");
    }
    if !args.quiet {
        eprintln!("{}", summary(&report));
    }
    ExitCode::from(report.exit_code() as u8)
}
