//! Command-line front end: analytic points and sweeps, crossover and
//! threshold searches, memory-budget reports, the GEO comparison, and the
//! event-level simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use satqkd::error::Error;
use satqkd::geolink::{
    annual_comparison, geo_asymptotic_key_rate, geo_channel_transmittance, GeoParams,
    SECONDS_PER_YEAR,
};
use satqkd::keyrate::KeyMode;
use satqkd::params::SystemParams;
use satqkd::pipeline::{
    evaluate_key, find_crossover, memory_report, run_sweep, PointRow, SweepSpec, SweepVariable,
};
use satqkd::plot::sweep_svg;
use satqkd::qber::Scheme;
use satqkd::record::{rows_to_csv, RunRecord};
use satqkd::simkernel::{simulate_protocol, validate_against_analytic, TrialConfig};

const EXIT_INVALID_INPUT: u8 = 1;
const EXIT_NO_RESULT: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    #[value(name = "1qm")]
    OneQm,
    #[value(name = "2qm")]
    TwoQm,
    Both,
}

impl SchemeArg {
    fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeArg::OneQm => vec![Scheme::OneMemory],
            SchemeArg::TwoQm => vec![Scheme::TwoMemory],
            SchemeArg::Both => vec![Scheme::OneMemory, Scheme::TwoMemory],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Finite,
    Asymptotic,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<KeyMode> {
        match self {
            ModeArg::Finite => vec![KeyMode::Finite],
            ModeArg::Asymptotic => vec![KeyMode::Asymptotic],
            ModeArg::Both => vec![KeyMode::Finite, KeyMode::Asymptotic],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ParamOpts {
    /// TOML parameter file; unset fields keep their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the per-memory dephasing probability e_m.
    #[arg(long, value_name = "FLOAT")]
    em: Option<f64>,
    /// Override the error-correction inefficiency f_e.
    #[arg(long, value_name = "FLOAT")]
    fe: Option<f64>,
}

impl ParamOpts {
    fn resolve(&self) -> satqkd::error::Result<SystemParams> {
        let mut p = match &self.config {
            Some(path) => SystemParams::from_toml_file(path)?,
            None => SystemParams::default(),
        };
        if let Some(em) = self.em {
            p.e_m = em;
        }
        if let Some(fe) = self.fe {
            p.f_e = fe;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
struct OutputOpts {
    /// Write the table here (stdout when unset); a replayable
    /// `<out>.run.json` sidecar is written next to it.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Also render an SVG line plot of the table.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "satqkd", version, about = "Satellite two-memory repeater QKD model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate counts, QBERs and key lengths at one channel loss.
    Point {
        #[command(flatten)]
        params: ParamOpts,
        /// Average single-channel loss (dB).
        #[arg(long, value_name = "DB")]
        loss: f64,
        #[arg(long, value_enum, default_value = "both")]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        #[command(flatten)]
        output: OutputOpts,
        /// Exit with status 2 unless at least one row has a positive key.
        #[arg(long)]
        require_key: bool,
    },
    /// Sweep the channel loss and tabulate key lengths.
    Sweep {
        #[command(flatten)]
        params: ParamOpts,
        #[arg(long, value_name = "DB")]
        start: f64,
        #[arg(long, value_name = "DB")]
        stop: f64,
        #[arg(long, value_name = "DB", default_value = "0.5")]
        step: f64,
        #[arg(long, value_enum, default_value = "both")]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Sweep the composed incoherent click probability at fixed loss.
    NoiseSweep {
        #[command(flatten)]
        params: ParamOpts,
        /// Fixed average single-channel loss (dB).
        #[arg(long, value_name = "DB")]
        loss: f64,
        #[arg(long, value_name = "PROB")]
        start: f64,
        #[arg(long, value_name = "PROB")]
        stop: f64,
        #[arg(long, value_name = "PROB")]
        step: f64,
        #[arg(long, value_enum, default_value = "both")]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value = "finite")]
        mode: ModeArg,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Locate the loss where the two-memory finite key rate per pair
    /// overtakes the single-memory scheme.
    Crossover {
        #[command(flatten)]
        params: ParamOpts,
        #[arg(long, value_name = "DB", default_value = "15")]
        lo: f64,
        #[arg(long, value_name = "DB", default_value = "30")]
        hi: f64,
    },
    /// On-board memory capacity requirements at one operating point.
    MemoryReport {
        #[command(flatten)]
        params: ParamOpts,
        #[arg(long, value_name = "DB", default_value = "30")]
        loss: f64,
        /// Inter-station slant range (m).
        #[arg(long, value_name = "M", default_value = "2e6")]
        slant_range: f64,
    },
    /// Annual throughput comparison against a memory-free GEO dual downlink.
    GeoCompare {
        #[command(flatten)]
        params: ParamOpts,
        /// Loss point (dB) at which the per-pass two-memory key is taken.
        #[arg(long, value_name = "DB", default_value = "30")]
        loss: f64,
        /// Ground-station flyover pairs per year.
        #[arg(long, value_name = "COUNT", default_value = "1257")]
        flyovers: f64,
        /// GEO receiver aperture (m).
        #[arg(long, value_name = "M", default_value = "2.5")]
        d_rx: f64,
        /// GEO range (m).
        #[arg(long, value_name = "M", default_value = "3.6e7")]
        altitude: f64,
        /// GEO beam divergence (rad).
        #[arg(long, value_name = "RAD", default_value = "5e-6")]
        divergence: f64,
        /// GEO atmospheric transmittance.
        #[arg(long, value_name = "PROB", default_value = "0.8")]
        atm: f64,
        /// GEO pair source rate (pairs/s).
        #[arg(long, value_name = "HZ", default_value = "1e9")]
        source_rate: f64,
        /// GEO incoherent click probability per window.
        #[arg(long, value_name = "PROB", default_value = "1e-6")]
        p_d: f64,
    },
    /// Run the event-level protocol simulation and compare it with the
    /// analytic model.
    Simulate {
        #[command(flatten)]
        params: ParamOpts,
        #[arg(long, value_name = "DB")]
        loss: f64,
        #[arg(long, value_enum, default_value = "2qm")]
        scheme: SchemeArg,
        #[arg(long, value_name = "U64", default_value = "1")]
        seed: u64,
        /// Pair emissions in the pass.
        #[arg(long, value_name = "COUNT", default_value = "1000000")]
        emissions: u64,
        /// Long-lived memory mode cap.
        #[arg(long, value_name = "COUNT")]
        qm1_cap: Option<u64>,
        /// Buffer memory mode cap.
        #[arg(long, value_name = "COUNT")]
        qm2_cap: Option<u64>,
        /// Ground-feedback round trip in emission slots.
        #[arg(long, value_name = "COUNT", default_value = "0")]
        feedback_delay: u64,
    },
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> satqkd::error::Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_table(
    rows: &[PointRow],
    output: &OutputOpts,
    params: &SystemParams,
    inputs: serde_json::Value,
    x_label: &str,
) -> satqkd::error::Result<()> {
    let text = match output.format {
        FormatArg::Csv => rows_to_csv(rows),
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("serializable");
            s.push('\n');
            s
        }
    };
    write_or_print(&output.out, &text)?;
    if let Some(svg_path) = &output.svg {
        if let Some(dir) = svg_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(svg_path, sweep_svg(rows, x_label))?;
        log::info!("wrote {}", svg_path.display());
    }
    if let Some(out) = &output.out {
        let record = RunRecord::new(params, inputs, serde_json::to_value(rows).unwrap());
        record.write_sidecar(out)?;
    }
    Ok(())
}

fn run(cli: Cli) -> satqkd::error::Result<u8> {
    match cli.command {
        Command::Point { params, loss, scheme, mode, output, require_key } => {
            let p = params.resolve()?;
            let spec = SweepSpec {
                variable: SweepVariable::LossDb,
                start: loss,
                stop: loss,
                step: 1.0,
                schemes: scheme.schemes(),
                modes: mode.modes(),
                fixed_loss_db: None,
            };
            let rows = run_sweep(&spec, &p)?;
            let any_key = rows.iter().any(|r| r.l_total > 0.0);
            emit_table(
                &rows,
                &output,
                &p,
                json!({"command": "point", "loss_db": loss, "spec": spec}),
                "average single channel loss (dB)",
            )?;
            if require_key && !any_key {
                eprintln!("no positive key at {loss} dB");
                return Ok(EXIT_NO_RESULT);
            }
            Ok(0)
        }
        Command::Sweep { params, start, stop, step, scheme, mode, output } => {
            let p = params.resolve()?;
            let spec = SweepSpec {
                variable: SweepVariable::LossDb,
                start,
                stop,
                step,
                schemes: scheme.schemes(),
                modes: mode.modes(),
                fixed_loss_db: None,
            };
            let rows = run_sweep(&spec, &p)?;
            emit_table(
                &rows,
                &output,
                &p,
                json!({"command": "sweep", "spec": spec}),
                "average single channel loss (dB)",
            )?;
            Ok(0)
        }
        Command::NoiseSweep { params, loss, start, stop, step, scheme, mode, output } => {
            let p = params.resolve()?;
            let spec = SweepSpec {
                variable: SweepVariable::PDTotal,
                start,
                stop,
                step,
                schemes: scheme.schemes(),
                modes: mode.modes(),
                fixed_loss_db: Some(loss),
            };
            let rows = run_sweep(&spec, &p)?;
            emit_table(
                &rows,
                &output,
                &p,
                json!({"command": "noise-sweep", "spec": spec}),
                "incoherent click probability per window",
            )?;
            Ok(0)
        }
        Command::Crossover { params, lo, hi } => {
            let p = params.resolve()?;
            match find_crossover(&p, lo, hi) {
                Ok(db) => {
                    println!("{db:.2}");
                    Ok(0)
                }
                Err(Error::NoCrossover { lo, hi }) => {
                    eprintln!("no crossover in [{lo}, {hi}] dB");
                    Ok(EXIT_NO_RESULT)
                }
                Err(e) => Err(e),
            }
        }
        Command::MemoryReport { params, loss, slant_range } => {
            let p = params.resolve()?;
            let report = memory_report(&p, loss, slant_range)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            Ok(0)
        }
        Command::GeoCompare {
            params,
            loss,
            flyovers,
            d_rx,
            altitude,
            divergence,
            atm,
            source_rate,
            p_d,
        } => {
            let p = params.resolve()?;
            let g = GeoParams {
                altitude,
                divergence,
                d_tx: GeoParams::default().d_tx,
                d_rx,
                source_rate,
                p_d,
                atm_transmittance: atm,
            };
            g.validate()?;
            let key_per_pass =
                evaluate_key(&p, loss, Scheme::TwoMemory, KeyMode::Finite, None)?.l_total;
            let geo_rate = geo_asymptotic_key_rate(&g, &p);
            let cmp = annual_comparison(key_per_pass, geo_rate, flyovers, SECONDS_PER_YEAR)?;
            let out = json!({
                "geo_params": g,
                "loss_db": loss,
                "geo_channel_transmittance": geo_channel_transmittance(&g),
                "geo_key_rate_bits_per_s": geo_rate,
                "comparison": cmp,
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            Ok(0)
        }
        Command::Simulate {
            params,
            loss,
            scheme,
            seed,
            emissions,
            qm1_cap,
            qm2_cap,
            feedback_delay,
        } => {
            let p = params.resolve()?;
            let schemes = scheme.schemes();
            if schemes.len() != 1 {
                return Err(Error::InvalidInput(
                    "simulate needs a single scheme (1qm or 2qm)".into(),
                ));
            }
            let cfg = TrialConfig {
                n_emissions_per_pass: emissions,
                loss_db: loss,
                params: p.clone(),
                seed,
                qm1_cap,
                qm2_cap,
                feedback_delay_emissions: feedback_delay,
                scheme: schemes[0],
                p_d_override: None,
            };
            let outcome = simulate_protocol(&cfg)?;
            let (est, q) = satqkd::pipeline::analytic_point(&p, loss, schemes[0], None)?;
            let validation = validate_against_analytic(&outcome, &est, &q, &p)?;
            let out = json!({
                "config": cfg,
                "outcome": outcome,
                "empirical": {
                    "e_z": outcome.empirical_e_z(),
                    "e_x": outcome.empirical_e_x(),
                },
                "validation": validation,
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes; everything else is
            // invalid input
            let code = if e.use_stderr() { EXIT_INVALID_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID_INPUT)
        }
    }
}
