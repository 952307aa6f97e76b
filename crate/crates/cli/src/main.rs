//! Command-line front end for the `klworst` solver library.
//!
//! Subcommands: `solve` (single worst-case problem), `sweep` (radius sweep),
//! `cdf` (nominal vs worst-case CDF table), `knownclass` (closed-form
//! in-class tables), `check` (continuous solvers vs the discrete oracle),
//! and `figures` (CSV data series behind the reference figures).
//!
//! Exit codes: 0 success; 1 `check` completed but some row failed its band;
//! 2 invalid input; 3 non-convergence; 4 infinite divergence. Tables are
//! CSV (header row, comma separator, LF endings); `solve` defaults to a
//! single JSON object. Output is byte-identical for identical arguments.

mod fmt;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use klworst::knownclass::{
    exp_class_forward, exp_class_reverse, exp_class_symmetrized, uniform_class_reverse,
};
use klworst::{
    discretize, solve_discrete, DivergenceKind, Error, ForwardFormula, NominalModel, ReverseMode,
    UncertaintySet, WorstCaseSolution,
};
use rayon::prelude::*;

use fmt::{csv_field, g12, json_num, json_str, opt_g12};

#[derive(Parser)]
#[command(
    name = "klworst",
    version,
    about = "Worst-case expected harvested energy over KL-divergence uncertainty balls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one worst-case problem and print a JSON object or CSV row
    Solve(SolveArgs),
    /// Sweep the radius on a grid and print a CSV table
    Sweep(SweepArgs),
    /// Print nominal and worst-case CDF values on an x-grid (CSV)
    Cdf(CdfArgs),
    /// Closed-form known-class tables (exponential and uniform families)
    Knownclass(KnownClassArgs),
    /// Cross-check the continuous solvers against the discrete oracle
    Check(CheckArgs),
    /// Write the CSV data series behind the reference figures
    Figures(FiguresArgs),
}

/// Inclusive numeric grid `START:STOP:STEP`.
#[derive(Clone, Debug)]
struct GridSpec(Vec<f64>);

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected START:STOP:STEP, got {s:?}"));
        }
        let mut nums = [0.0f64; 3];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse()
                .map_err(|_| format!("{part:?} is not a number"))?;
        }
        let [start, stop, step] = nums;
        if !start.is_finite() || !stop.is_finite() || !(step > 0.0) || stop < start {
            return Err(format!(
                "need finite START <= STOP and STEP > 0, got {s:?}"
            ));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok(GridSpec((0..count).map(|i| start + step * i as f64).collect()))
    }
}

/// Comma-separated list of numbers.
#[derive(Clone, Debug)]
struct NumList(Vec<f64>);

impl FromStr for NumList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values: Result<Vec<f64>, _> = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse()
                    .map_err(|_| format!("{part:?} is not a number"))
            })
            .collect();
        let values = values?;
        if values.is_empty() {
            return Err("list must not be empty".to_string());
        }
        Ok(NumList(values))
    }
}

fn parse_nominal(s: &str) -> Result<NominalModel, String> {
    let (head, rest) = s
        .split_once(':')
        .ok_or_else(|| format!("expected exp:RATE, uniform:UPPER, or table:PATH, got {s:?}"))?;
    match head {
        "exp" => {
            let rate: f64 = rest.parse().map_err(|_| format!("{rest:?} is not a number"))?;
            NominalModel::exponential(rate).map_err(|e| e.to_string())
        }
        "uniform" => {
            let upper: f64 = rest.parse().map_err(|_| format!("{rest:?} is not a number"))?;
            NominalModel::uniform(upper).map_err(|e| e.to_string())
        }
        "table" => NominalModel::load_table(std::path::Path::new(rest)).map_err(|e| e.to_string()),
        other => Err(format!(
            "unknown nominal family {other:?}: expected exp:RATE, uniform:UPPER, or table:PATH"
        )),
    }
}

fn parse_kind(s: &str) -> Result<DivergenceKind, String> {
    DivergenceKind::parse(s).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<ReverseMode, String> {
    ReverseMode::parse(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct SolveArgs {
    /// Nominal model: exp:RATE, uniform:UPPER, or table:PATH
    #[arg(long, value_parser = parse_nominal)]
    nominal: NominalModel,
    /// Divergence ball: forward-kl, reverse-kl, or symmetrized
    #[arg(long, value_parser = parse_kind)]
    kind: DivergenceKind,
    /// Ball radius in nats
    #[arg(long)]
    d: f64,
    /// Reverse-KL solver: kkt or paper-exact
    #[arg(long, value_parser = parse_mode, default_value = "kkt")]
    mode: ReverseMode,
    /// Output format
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Nominal model: exp:RATE, uniform:UPPER, or table:PATH
    #[arg(long, value_parser = parse_nominal)]
    nominal: NominalModel,
    /// Divergence ball: forward-kl, reverse-kl, or symmetrized
    #[arg(long, value_parser = parse_kind)]
    kind: DivergenceKind,
    /// Reverse-KL solver: kkt or paper-exact
    #[arg(long, value_parser = parse_mode, default_value = "kkt")]
    mode: ReverseMode,
    /// Radius grid START:STOP:STEP
    #[arg(long, default_value = "0:3:0.05")]
    d_grid: GridSpec,
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CdfArgs {
    /// Nominal model: exp:RATE, uniform:UPPER, or table:PATH
    #[arg(long, value_parser = parse_nominal)]
    nominal: NominalModel,
    /// Divergence ball: forward-kl, reverse-kl, or symmetrized
    #[arg(long, value_parser = parse_kind)]
    kind: DivergenceKind,
    /// Ball radius in nats
    #[arg(long)]
    d: f64,
    /// Reverse-KL solver: kkt or paper-exact
    #[arg(long, value_parser = parse_mode, default_value = "kkt")]
    mode: ReverseMode,
    /// Evaluation grid START:STOP:STEP
    #[arg(long, default_value = "0:10:0.05")]
    x_grid: GridSpec,
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KnownClassArgs {
    /// Class nominal: exp:RATE or uniform:UPPER
    #[arg(long, value_parser = parse_nominal)]
    nominal: NominalModel,
    /// Divergence kind, uniform class only (the exponential table has all)
    #[arg(long, value_parser = parse_kind)]
    kind: Option<DivergenceKind>,
    /// Radius grid START:STOP:STEP
    #[arg(long, default_value = "0:3:0.05")]
    d_grid: GridSpec,
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Nominal model: exp:RATE, uniform:UPPER, or table:PATH
    #[arg(long, value_parser = parse_nominal, default_value = "exp:1.0")]
    nominal: NominalModel,
    /// Radii to check, comma-separated
    #[arg(long, default_value = "0,0.05,0.1,0.2,0.5,1")]
    d_list: NumList,
    /// Number of oracle grid cells
    #[arg(long, default_value_t = 2000)]
    cells: usize,
    /// Oracle grid upper bound (default: the 1 - 1e-9 nominal quantile)
    #[arg(long)]
    x_max: Option<f64>,
    /// Maximum tolerated relative gap between closed form and oracle
    #[arg(long, default_value_t = 0.01)]
    band: f64,
    /// Oracle duality-gap tolerance, relative to the nominal mean
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FiguresArgs {
    /// Figure number: 1 (CDF, both KL kinds), 2 (mean vs d), 3 (symmetrized
    /// CDF), 4 (exponential-class rate ratios)
    #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
    which: u8,
    /// Directory for the emitted figureN.csv file
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Radii for the CDF figures, comma-separated
    #[arg(long, default_value = "0.05,0.1,0.5")]
    cdf_d: NumList,
    /// Radius grid START:STOP:STEP for the sweep figures
    #[arg(long, default_value = "0:3:0.05")]
    d_grid: GridSpec,
    /// Evaluation grid START:STOP:STEP for the CDF figures
    #[arg(long, default_value = "0:10:0.05")]
    x_grid: GridSpec,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: Cli) -> klworst::Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args).map(|()| ExitCode::SUCCESS),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Cdf(args) => cmd_cdf(args).map(|()| ExitCode::SUCCESS),
        Command::Knownclass(args) => cmd_knownclass(args).map(|()| ExitCode::SUCCESS),
        Command::Check(args) => cmd_check(args),
        Command::Figures(args) => cmd_figures(args).map(|()| ExitCode::SUCCESS),
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NonConvergence { .. } | Error::NoSignChange { .. } => 3,
        Error::InfiniteDivergence(_) => 4,
        _ => 2,
    }
}

fn ensure_nonnegative(values: &[f64], what: &str) -> klworst::Result<()> {
    for &v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidInput(format!(
                "{what} grid entries must be finite and >= 0, got {v}"
            )));
        }
    }
    Ok(())
}

fn emit(out: Option<&PathBuf>, text: &str) -> klworst::Result<()> {
    use std::io::Write;
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> klworst::Result<()> {
    let set = UncertaintySet::new(args.nominal, args.kind, args.d)?;
    let sol = set.solve(args.mode)?;
    let diag = sol.diagnostics();
    let text = if args.format == "csv" {
        let mut text = String::from(
            "kind,d,mean,mu_star,s_star,normalization_residual,divergence_residual,iterations,mode\n",
        );
        writeln!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            sol.kind().as_str(),
            g12(sol.radius()),
            g12(sol.mean()),
            opt_g12(sol.mu_star()),
            opt_g12(sol.s_star()),
            g12(diag.normalization_residual),
            g12(diag.divergence_residual),
            diag.iterations,
            sol.mode().map(|m| m.as_str()).unwrap_or_default(),
        )
        .expect("write to string");
        text
    } else {
        format!(
            "{{\"kind\":\"{}\",\"d\":{},\"mean\":{},\"mu_star\":{},\"s_star\":{},\
             \"normalization_residual\":{},\"divergence_residual\":{},\
             \"iterations\":{},\"mode\":{}}}\n",
            sol.kind().as_str(),
            g12(sol.radius()),
            g12(sol.mean()),
            json_num(sol.mu_star()),
            json_num(sol.s_star()),
            g12(diag.normalization_residual),
            g12(diag.divergence_residual),
            diag.iterations,
            json_str(sol.mode().map(|m| m.as_str())),
        )
    };
    emit(args.out.as_ref(), &text)
}

fn cmd_sweep(args: SweepArgs) -> klworst::Result<ExitCode> {
    ensure_nonnegative(&args.d_grid.0, "d")?;
    let rows: Vec<(f64, klworst::Result<WorstCaseSolution>)> = args
        .d_grid
        .0
        .par_iter()
        .map(|&d| {
            let result = UncertaintySet::new(args.nominal.clone(), args.kind, d)
                .and_then(|set| set.solve(args.mode));
            (d, result)
        })
        .collect();

    let mut text = String::from("d,mean,mu_star,s_star,iterations,divergence_residual,error\n");
    let mut succeeded = 0usize;
    for (d, result) in &rows {
        match result {
            Ok(sol) => {
                succeeded += 1;
                writeln!(
                    text,
                    "{},{},{},{},{},{},",
                    g12(*d),
                    g12(sol.mean()),
                    opt_g12(sol.mu_star()),
                    opt_g12(sol.s_star()),
                    sol.diagnostics().iterations,
                    g12(sol.diagnostics().divergence_residual),
                )
                .expect("write to string");
            }
            Err(err) => {
                writeln!(text, "{},,,,,,{}", g12(*d), csv_field(&err.to_string()))
                    .expect("write to string");
            }
        }
    }
    emit(args.out.as_ref(), &text)?;
    Ok(if succeeded > 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn cmd_cdf(args: CdfArgs) -> klworst::Result<()> {
    ensure_nonnegative(&args.x_grid.0, "x")?;
    let set = UncertaintySet::new(args.nominal.clone(), args.kind, args.d)?;
    let sol = set.solve(args.mode)?;
    let mut text = String::from("x,F_nominal,F_worst\n");
    for &x in &args.x_grid.0 {
        writeln!(
            text,
            "{},{},{}",
            g12(x),
            g12(args.nominal.cdf(x)),
            g12(sol.cdf(x)?)
        )
        .expect("write to string");
    }
    emit(args.out.as_ref(), &text)
}

/// Exponential-class table shared by `knownclass` and figure 4.
fn exp_ratio_table(rate: f64, ds: &[f64]) -> klworst::Result<String> {
    let mut text = String::from(
        "d,lambda_ratio_forward_exact,lambda_ratio_forward_paper,\
         lambda_ratio_reverse,lambda_ratio_symmetrized\n",
    );
    for &d in ds {
        let forward_exact = exp_class_forward(rate, d, ForwardFormula::ExactRoot)?;
        let forward_paper = exp_class_forward(rate, d, ForwardFormula::PaperFormula)?;
        let reverse = exp_class_reverse(rate, d)?;
        let symmetrized = exp_class_symmetrized(rate, d)?;
        writeln!(
            text,
            "{},{},{},{},{}",
            g12(d),
            g12(forward_exact.boundary_parameter / rate),
            g12(forward_paper.boundary_parameter / rate),
            g12(reverse.boundary_parameter / rate),
            g12(symmetrized.boundary_parameter / rate),
        )
        .expect("write to string");
    }
    Ok(text)
}

fn cmd_knownclass(args: KnownClassArgs) -> klworst::Result<()> {
    ensure_nonnegative(&args.d_grid.0, "d")?;
    let text = match &args.nominal {
        NominalModel::Exponential { rate } => {
            if args.kind.is_some() {
                return Err(Error::InvalidInput(
                    "--kind applies to the uniform class only; the exponential-class \
                     table always contains every divergence kind"
                        .to_string(),
                ));
            }
            exp_ratio_table(*rate, &args.d_grid.0)?
        }
        NominalModel::Uniform { upper } => {
            let kind = args.kind.unwrap_or(DivergenceKind::ReverseKl);
            if kind != DivergenceKind::ReverseKl {
                return Err(Error::InfiniteDivergence(format!(
                    "uniform class under {}: any candidate Uniform(0, beta) with \
                     beta < {upper} leaves the nominal undominated, so every in-class \
                     distribution that lowers the mean has infinite divergence; only \
                     reverse-kl admits a uniform-class worst case",
                    kind.as_str(),
                )));
            }
            let mut text = String::from("d,beta,mean\n");
            for &d in &args.d_grid.0 {
                let sol = uniform_class_reverse(*upper, d)?;
                writeln!(
                    text,
                    "{},{},{}",
                    g12(d),
                    g12(sol.boundary_parameter),
                    g12(sol.mean)
                )
                .expect("write to string");
            }
            text
        }
        NominalModel::Tabulated(_) => {
            return Err(Error::InvalidInput(
                "known-class tables exist for exp:RATE and uniform:UPPER nominals only"
                    .to_string(),
            ));
        }
    };
    emit(args.out.as_ref(), &text)
}

fn cmd_check(args: CheckArgs) -> klworst::Result<ExitCode> {
    ensure_nonnegative(&args.d_list.0, "d")?;
    if !args.band.is_finite() || !(args.band > 0.0) {
        return Err(Error::InvalidInput(format!(
            "band must be positive and finite, got {}",
            args.band
        )));
    }
    let grid = discretize(&args.nominal, args.cells, args.x_max)?;
    let mut text = String::from("kind,d,closed_mean,oracle_mean,rel_gap,pass\n");
    let mut all_pass = true;
    for kind in DivergenceKind::ALL {
        for &d in &args.d_list.0 {
            let closed = UncertaintySet::new(args.nominal.clone(), kind, d)?
                .solve(ReverseMode::Kkt)?
                .mean();
            let oracle = solve_discrete(&grid, kind, d, args.tol)?;
            let rel_gap = (closed - oracle.worst_mean).abs() / oracle.worst_mean;
            let pass = rel_gap <= args.band;
            all_pass &= pass;
            writeln!(
                text,
                "{},{},{},{},{},{}",
                kind.as_str(),
                g12(d),
                g12(closed),
                g12(oracle.worst_mean),
                g12(rel_gap),
                pass
            )
            .expect("write to string");
        }
    }
    emit(args.out.as_ref(), &text)?;
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Long-format CDF series: one row per (series, d, x).
fn figure_cdf(
    nominal: &NominalModel,
    series: &[(DivergenceKind, ReverseMode)],
    ds: &[f64],
    xs: &[f64],
) -> klworst::Result<String> {
    let mut text = String::from("kind,mode,d,x,F_nominal,F_worst\n");
    for &(kind, mode) in series {
        for &d in ds {
            let sol = UncertaintySet::new(nominal.clone(), kind, d)?.solve(mode)?;
            let mode_label = sol.mode().map(|m| m.as_str()).unwrap_or_default();
            for &x in xs {
                writeln!(
                    text,
                    "{},{},{},{},{},{}",
                    kind.as_str(),
                    mode_label,
                    g12(d),
                    g12(x),
                    g12(nominal.cdf(x)),
                    g12(sol.cdf(x)?)
                )
                .expect("write to string");
            }
        }
    }
    Ok(text)
}

/// Worst-case mean versus radius for the named series.
fn figure_sweep(
    nominal: &NominalModel,
    series: &[(DivergenceKind, ReverseMode)],
    ds: &[f64],
) -> klworst::Result<String> {
    let mut text = String::from("kind,mode,d,mean\n");
    for &(kind, mode) in series {
        for &d in ds {
            let sol = UncertaintySet::new(nominal.clone(), kind, d)?.solve(mode)?;
            let mode_label = sol.mode().map(|m| m.as_str()).unwrap_or_default();
            writeln!(
                text,
                "{},{},{},{}",
                kind.as_str(),
                mode_label,
                g12(d),
                g12(sol.mean())
            )
            .expect("write to string");
        }
    }
    Ok(text)
}

fn cmd_figures(args: FiguresArgs) -> klworst::Result<()> {
    ensure_nonnegative(&args.cdf_d.0, "d")?;
    ensure_nonnegative(&args.d_grid.0, "d")?;
    ensure_nonnegative(&args.x_grid.0, "x")?;
    let nominal = NominalModel::exponential(1.0)?;
    let both_kl = [
        (DivergenceKind::ForwardKl, ReverseMode::Kkt),
        (DivergenceKind::ReverseKl, ReverseMode::Kkt),
        (DivergenceKind::ReverseKl, ReverseMode::PaperExact),
    ];
    let text = match args.which {
        1 => figure_cdf(&nominal, &both_kl, &args.cdf_d.0, &args.x_grid.0)?,
        2 => figure_sweep(&nominal, &both_kl, &args.d_grid.0)?,
        3 => figure_cdf(
            &nominal,
            &[(DivergenceKind::Symmetrized, ReverseMode::Kkt)],
            &args.cdf_d.0,
            &args.x_grid.0,
        )?,
        4 => exp_ratio_table(1.0, &args.d_grid.0)?,
        _ => unreachable!("clap restricts --which to 1..=4"),
    };
    let path = args.out_dir.join(format!("figure{}.csv", args.which));
    std::fs::write(&path, text)?;
    Ok(())
}
