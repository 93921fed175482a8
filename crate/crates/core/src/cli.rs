//! Command-line front end.
//!
//! Subcommands: `force-sweep`, `fit`, `steady-state`, `working-range`,
//! `optimize-offset`, `transient`, `classify`. Every subcommand reads a
//! scenario config via `--config`, writes CSV via `--out` and optionally an
//! SVG plot via `--svg`. Exit codes: 0 success, 1 model/validation error
//! (message verbatim on stderr), 2 usage error.

use crate::bias::{classify_bias, CLASSIFY_TOLERANCE};
use crate::config::load_scenario;
use crate::csvio;
use crate::dynamics::{self};
use crate::equilibrium;
use crate::error::{Error, Result};
use crate::fitting;
use crate::magnetics::{self, ForceModel};
use crate::model::Prepared;
use crate::svg::{render_svg, PlotSpec, Series};
use crate::units::{format_sig, parse_quantity, si_factor};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "deabias",
    version,
    about = "Conical dielectric-elastomer actuator bias analysis",
    disable_help_subcommand = true
)]
struct Cli {
    /// Worker threads for parallelizable sweeps (1 = sequential).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Magnet force versus gap on a measurement grid.
    ForceSweep(ForceSweepArgs),
    /// Fit a measured force-gap CSV to the exponential model.
    Fit(FitArgs),
    /// Stable-branch deflection for a voltage ramp.
    SteadyState(SteadyStateArgs),
    /// Working range between V = 0 and --von.
    WorkingRange(WorkingRangeArgs),
    /// Maximize the working range over the magnet offset.
    OptimizeOffset(OptimizeOffsetArgs),
    /// Time-domain response to a voltage schedule.
    Transient(TransientArgs),
    /// Classify the bias force slope.
    Classify(ClassifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepModel {
    PmMre,
    PmPm,
}

#[derive(Args, Debug)]
struct ForceSweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Force model; defaults to the configured bias kind.
    #[arg(long, value_enum)]
    model: Option<SweepModel>,
    /// Smallest gap (bare numbers are mm).
    #[arg(long, default_value = "5mm")]
    from: String,
    /// Largest gap (bare numbers are mm).
    #[arg(long, default_value = "50mm")]
    to: String,
    /// Grid size.
    #[arg(long, default_value_t = 22)]
    points: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FitFamily {
    Exp,
    Power,
    Auto,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Measured curve, CSV `gap_mm,force_N`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FitFamily::Exp)]
    family: FitFamily,
    /// Write the key-value report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SteadyStateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Sweep ceiling (bare numbers are volts).
    #[arg(long, default_value = "5kV")]
    vmax: String,
    #[arg(long, default_value_t = 26)]
    steps: usize,
    /// Replace the physical magnet bias by an exponential fit of this CSV.
    #[arg(long)]
    use_fit: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WorkingRangeArgs {
    #[arg(long)]
    config: PathBuf,
    /// On-state voltage (bare numbers are volts).
    #[arg(long)]
    von: String,
    #[arg(long)]
    use_fit: Option<PathBuf>,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OptimizeOffsetArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    von: String,
    /// Lower offset bound (bare numbers are mm).
    #[arg(long, default_value = "4mm")]
    min: String,
    /// Upper offset bound (bare numbers are mm).
    #[arg(long, default_value = "35mm")]
    max: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TransientArgs {
    #[arg(long)]
    config: PathBuf,
    /// Voltage schedule CSV `t_s,level_V`.
    #[arg(long, conflicts_with = "paper_schedule")]
    schedule: Option<PathBuf>,
    /// Use the built-in 300 s, 14-change staircase.
    #[arg(long)]
    paper_schedule: bool,
    /// Integrator step (bare numbers are seconds).
    #[arg(long, default_value = "0.25ms")]
    dt: String,
    /// Simulated time; defaults to the schedule duration.
    #[arg(long)]
    duration: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Interval start (bare numbers are mm).
    #[arg(long, default_value = "0mm")]
    from: String,
    /// Interval end (bare numbers are mm); defaults to the admissible maximum.
    #[arg(long)]
    to: Option<String>,
}

/// Parse a quantity where bare numbers take `default_unit`.
fn quantity(text: &str, default_unit: &str) -> Result<f64> {
    if let Ok(v) = text.trim().parse::<f64>() {
        return Ok(v * si_factor(default_unit).expect("known default unit"));
    }
    parse_quantity(text)
}

fn write_file(path: &PathBuf, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn sweep_model(prepared: &Prepared, choice: Option<SweepModel>) -> Result<ForceModel> {
    use crate::bias::BiasSpec;
    let bias = &prepared.scenario.bias;
    let chosen = match choice {
        Some(SweepModel::PmMre) | None => match bias {
            BiasSpec::PmMre { magnet, disc, scale, .. } => Some(ForceModel::PmMre {
                magnet: magnet.clone(),
                disc: disc.clone(),
                scale: *scale,
            }),
            BiasSpec::PmPm { magnet_a, magnet_b, .. } if choice.is_none() => Some(ForceModel::PmPm {
                magnet_a: magnet_a.clone(),
                magnet_b: magnet_b.clone(),
            }),
            _ => None,
        },
        Some(SweepModel::PmPm) => match bias {
            BiasSpec::PmPm { magnet_a, magnet_b, .. } => Some(ForceModel::PmPm {
                magnet_a: magnet_a.clone(),
                magnet_b: magnet_b.clone(),
            }),
            BiasSpec::PmMre { magnet, .. } => Some(ForceModel::PmPm {
                magnet_a: magnet.clone(),
                magnet_b: magnet.clone(),
            }),
            _ => None,
        },
    };
    chosen.ok_or_else(|| {
        Error::Domain("force-sweep needs a magnetic bias ([bias] kind pm_mre or pm_pm)".into())
    })
}

fn run_force_sweep(args: &ForceSweepArgs, jobs: usize, out: &mut impl Write) -> Result<()> {
    let scenario = load_scenario(&args.config)?;
    let prepared = scenario.prepare();
    let model = sweep_model(&prepared, args.model)?;
    let lo = quantity(&args.from, "mm")?;
    let hi = quantity(&args.to, "mm")?;
    if args.points < 2 || !(lo < hi) {
        return Err(Error::Domain("sweep needs from < to and at least 2 points".into()));
    }
    let gaps: Vec<f64> = (0..args.points)
        .map(|i| lo + (hi - lo) * i as f64 / (args.points - 1) as f64)
        .collect();
    let curve = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?;
        let eval = |g: f64| -> Result<(f64, f64)> {
            let f = match &model {
                ForceModel::PmMre { magnet, disc, scale } => {
                    magnetics::pm_mre_force(magnet, disc, g, *scale)?
                }
                ForceModel::PmPm { magnet_a, magnet_b } => {
                    magnetics::pm_pm_force(magnet_a, magnet_b, g)?
                }
            };
            Ok((g, f))
        };
        let points: Result<Vec<(f64, f64)>> = pool.install(|| {
            use rayon::prelude::*;
            gaps.par_iter().map(|&g| eval(g)).collect()
        });
        crate::magnetics::ForceCurve::new(points?, crate::magnetics::CurveSource::Model)?
    } else {
        magnetics::force_sweep(&model, &gaps)?
    };
    write_file(&args.out, &csvio::force_curve_to_csv(&curve))?;
    if let Some(svg_path) = &args.svg {
        let plot = PlotSpec {
            title: "Magnet force versus gap".into(),
            x_label: "gap (mm)".into(),
            y_label: "force (N)".into(),
            series: vec![Series {
                name: "model".into(),
                points: curve.points().iter().map(|&(g, f)| (g * 1e3, f)).collect(),
            }],
        };
        write_file(svg_path, &render_svg(&plot)?)?;
    }
    writeln!(out, "wrote {} points to {}", curve.points().len(), args.out.display()).ok();
    Ok(())
}

fn run_fit(args: &FitArgs, out: &mut impl Write) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?;
    let curve = csvio::force_curve_from_csv(&text)?;
    let exp_fit = fitting::fit_exponential(&curve)?;
    let mut report = String::new();
    match args.family {
        FitFamily::Exp => {
            report.push_str(&csvio::fit_report(&exp_fit));
        }
        FitFamily::Power => {
            let p = fitting::fit_power_law(&curve)?;
            report.push_str("model = a*gap^-p + c\n");
            report.push_str(&format!("amplitude = {}\n", format_sig(p.amplitude, 6)));
            report.push_str(&format!("exponent = {}\n", format_sig(p.exponent, 6)));
            report.push_str(&format!("floor_N = {}\n", format_sig(p.floor, 6)));
            report.push_str(&format!("rms_residual_N = {}\n", format_sig(p.rms_residual, 6)));
            report.push_str(&format!("converged = {}\n", p.converged));
        }
        FitFamily::Auto => {
            let p = fitting::fit_power_law(&curve)?;
            if p.rms_residual < exp_fit.rms_residual {
                report.push_str("selected_family = power\n");
                report.push_str(&format!("amplitude = {}\n", format_sig(p.amplitude, 6)));
                report.push_str(&format!("exponent = {}\n", format_sig(p.exponent, 6)));
                report.push_str(&format!("floor_N = {}\n", format_sig(p.floor, 6)));
                report.push_str(&format!("rms_residual_N = {}\n", format_sig(p.rms_residual, 6)));
            } else {
                report.push_str("selected_family = exp\n");
                report.push_str(&csvio::fit_report(&exp_fit));
            }
        }
    }
    match &args.out {
        Some(path) => write_file(path, &report)?,
        None => {
            out.write_all(report.as_bytes()).ok();
        }
    }
    if let Some(svg_path) = &args.svg {
        let fitted: Vec<(f64, f64)> = curve
            .gaps()
            .map(|g| (g * 1e3, exp_fit.evaluate(g)))
            .collect();
        let plot = PlotSpec {
            title: "Exponential fit".into(),
            x_label: "gap (mm)".into(),
            y_label: "force (N)".into(),
            series: vec![
                Series {
                    name: "data".into(),
                    points: curve.points().iter().map(|&(g, f)| (g * 1e3, f)).collect(),
                },
                Series {
                    name: "fit".into(),
                    points: fitted,
                },
            ],
        };
        write_file(svg_path, &render_svg(&plot)?)?;
    }
    Ok(())
}

fn prepared_with_optional_fit(config: &PathBuf, use_fit: &Option<PathBuf>) -> Result<Prepared> {
    let scenario = load_scenario(config)?;
    let prepared = scenario.prepare();
    match use_fit {
        None => Ok(prepared),
        Some(path) => {
            let offset = prepared.scenario.bias.offset().ok_or_else(|| {
                Error::Domain("--use-fit needs a magnetic bias with an offset".into())
            })?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let curve = csvio::force_curve_from_csv(&text)?;
            let fit = fitting::fit_exponential(&curve)?;
            let runtime = fitting::calibrated_pm_mre(&fit, offset)?;
            Ok(prepared.with_bias_runtime(runtime))
        }
    }
}

fn run_steady_state(args: &SteadyStateArgs, out: &mut impl Write) -> Result<()> {
    let prepared = prepared_with_optional_fit(&args.config, &args.use_fit)?;
    let vmax = quantity(&args.vmax, "V")?;
    if args.steps < 2 {
        return Err(Error::Domain("need at least 2 sweep steps".into()));
    }
    let voltages: Vec<f64> = (0..args.steps)
        .map(|i| vmax * i as f64 / (args.steps - 1) as f64)
        .collect();
    let points = equilibrium::steady_state_sweep(&prepared, &voltages)?;
    write_file(&args.out, &csvio::steady_state_to_csv(&points))?;
    if let Some(svg_path) = &args.svg {
        let plot = PlotSpec {
            title: "Steady-state deflection".into(),
            x_label: "voltage (V)".into(),
            y_label: "deflection (mm)".into(),
            series: vec![Series {
                name: prepared.scenario.bias.kind_name().into(),
                points: points.iter().map(|p| (p.voltage, p.deflection * 1e3)).collect(),
            }],
        };
        write_file(svg_path, &render_svg(&plot)?)?;
    }
    writeln!(out, "wrote {} sweep points to {}", points.len(), args.out.display()).ok();
    Ok(())
}

fn working_range_table(name: &str, report: &equilibrium::WorkingRangeReport) -> String {
    let mut t = String::new();
    t.push_str(&format!(
        "{:<18}{:<12}{:>10}{:>10}{:>12}\n",
        "bias", "class", "d_off_mm", "d_on_mm", "range_mm"
    ));
    t.push_str(&format!(
        "{:<18}{:<12}{:>10}{:>10}{:>12}\n",
        name,
        report.bias_class.to_string(),
        format_sig(report.d_off * 1e3, 4),
        format_sig(report.d_on * 1e3, 4),
        format_sig(report.w_m * 1e3, 4)
    ));
    if report.extrapolated {
        t.push_str("# warning: fitted force provider evaluated outside its data range\n");
    }
    t
}

fn run_working_range(args: &WorkingRangeArgs, out: &mut impl Write) -> Result<()> {
    let prepared = prepared_with_optional_fit(&args.config, &args.use_fit)?;
    let von = quantity(&args.von, "V")?;
    let report = equilibrium::working_range(&prepared, von)?;
    let table = working_range_table(prepared.scenario.bias.kind_name(), &report);
    out.write_all(table.as_bytes()).ok();
    if let Some(path) = &args.out {
        write_file(path, &table)?;
    }
    Ok(())
}

fn run_optimize_offset(args: &OptimizeOffsetArgs, out: &mut impl Write) -> Result<()> {
    let scenario = load_scenario(&args.config)?;
    let prepared = scenario.prepare();
    let von = quantity(&args.von, "V")?;
    let lo = quantity(&args.min, "mm")?;
    let hi = quantity(&args.max, "mm")?;
    let (offset, report) = equilibrium::optimize_offset(&prepared, von, (lo, hi))?;
    let mut text = format!("offset_mm = {}\n", format_sig(offset * 1e3, 6));
    text.push_str(&working_range_table(prepared.scenario.bias.kind_name(), &report));
    out.write_all(text.as_bytes()).ok();
    if let Some(path) = &args.out {
        write_file(path, &text)?;
    }
    Ok(())
}

fn run_transient(args: &TransientArgs, out: &mut impl Write) -> Result<()> {
    let scenario = load_scenario(&args.config)?;
    let prepared = scenario.prepare();
    let schedule = if args.paper_schedule {
        dynamics::paper_schedule()
    } else {
        match &args.schedule {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                csvio::schedule_from_csv(&text, None)?
            }
            None => {
                return Err(Error::Domain(
                    "transient needs --schedule <csv> or --paper-schedule".into(),
                ))
            }
        }
    };
    let dt = quantity(&args.dt, "s")?;
    let duration = match &args.duration {
        Some(d) => quantity(d, "s")?,
        None => schedule.duration(),
    };
    let result = dynamics::simulate(&prepared, &schedule, dt, duration)?;
    write_file(&args.out, &csvio::transient_to_csv(&result))?;
    if let Some(svg_path) = &args.svg {
        // decimate for plotting: every sample would bloat the polyline
        let stride = (result.samples.len() / 2000).max(1);
        let plot = PlotSpec {
            title: "Transient response".into(),
            x_label: "time (s)".into(),
            y_label: "deflection (mm)".into(),
            series: vec![Series {
                name: "deflection".into(),
                points: result
                    .samples
                    .iter()
                    .step_by(stride)
                    .map(|s| (s.time, s.deflection * 1e3))
                    .collect(),
            }],
        };
        write_file(svg_path, &render_svg(&plot)?)?;
    }
    if let Some(t) = result.pull_in_at {
        writeln!(out, "pull-in at t = {} s", format_sig(t, 6)).ok();
    }
    writeln!(
        out,
        "wrote {} samples to {}",
        result.samples.len(),
        args.out.display()
    )
    .ok();
    Ok(())
}

fn run_classify(args: &ClassifyArgs, out: &mut impl Write) -> Result<()> {
    let scenario = load_scenario(&args.config)?;
    let prepared = scenario.prepare();
    let lo = quantity(&args.from, "mm")?;
    let hi = match &args.to {
        Some(t) => quantity(t, "mm")?,
        None => prepared.bias().admissible_max(),
    };
    let class = classify_bias(prepared.bias(), (lo, hi), CLASSIFY_TOLERANCE)?;
    writeln!(out, "{class}").ok();
    Ok(())
}

/// Parse and dispatch; returns the process exit code.
pub fn run(args: &[String], out: &mut impl Write, err: &mut impl Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    out.write_all(e.render().to_string().as_bytes()).ok();
                    0
                }
                _ => {
                    err.write_all(e.render().to_string().as_bytes()).ok();
                    2
                }
            }
        }
    };
    let result = match &cli.command {
        Command::ForceSweep(a) => run_force_sweep(a, cli.jobs, out),
        Command::Fit(a) => run_fit(a, out),
        Command::SteadyState(a) => run_steady_state(a, out),
        Command::WorkingRange(a) => run_working_range(a, out),
        Command::OptimizeOffset(a) => run_optimize_offset(a, out),
        Command::Transient(a) => run_transient(a, out),
        Command::Classify(a) => run_classify(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            writeln!(err, "{e}").ok();
            1
        }
    }
}
