use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mimo_ee::dimensioning::ReferenceDesign;
use mimo_ee::experiment::{
    dimension, emit, network_gains, run_daily_with_gains, sweep, write_sweep_table, RunConfig, Scenario, SweepDimension,
};
use mimo_ee::geometry::{build_layout, compute_coupling, GeometryExport};
use mimo_ee::power::IdleAccounting;
use mimo_ee::traffic::LoadProfile;
use mimo_ee::{PaKind, SimConfig};

#[derive(Parser)]
#[command(name = "mimo-ee", version, about = "Load-adaptive antenna activation for multi-cell massive MIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension the reference system and export the design and coupling gains.
    Dimension {
        #[command(flatten)]
        common: Common,
        /// Pin the per-antenna power (W) instead of optimising it.
        #[arg(long)]
        p_design: Option<f64>,
    },
    /// Run one day of a load profile.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        daily: Daily,
        /// Reuse a design written by `dimension`.
        #[arg(long)]
        design: Option<PathBuf>,
    },
    /// Repeat the daily run over cell radii or design powers.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        daily: Daily,
        #[arg(long, value_enum)]
        dimension: Dim,
        /// Comma-separated values (m for radius, W for p-design).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "tpa")]
    pa: Pa,
    /// Cell radius in m; overrides the config file.
    #[arg(long)]
    radius: Option<f64>,
    /// JSON config; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct Daily {
    /// Load profile CSV (`interval,load_fraction`); defaults to the bundled residential profile.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "idle-off")]
    accounting: Accounting,
    #[arg(long, value_enum, default_value = "both")]
    scenario: Scen,
    /// Iterate queue and game per interval until the user distributions settle.
    #[arg(long)]
    joint_fixed_point: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pa {
    Tpa,
    Etpa,
}

#[derive(Clone, Copy, ValueEnum)]
enum Accounting {
    IdleOff,
    ActiveIdle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scen {
    Both,
    Adaptive,
    Reference,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dim {
    Radius,
    PDesign,
}

impl From<Pa> for PaKind {
    fn from(p: Pa) -> Self {
        match p {
            Pa::Tpa => PaKind::Tpa,
            Pa::Etpa => PaKind::EtPa,
        }
    }
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn load_sim(common: &Common) -> AnyResult<SimConfig> {
    let mut sim = match &common.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(r) = common.radius {
        sim.cell_radius_m = r;
    }
    Ok(sim)
}

fn run_config(common: &Common, daily: &Daily) -> AnyResult<RunConfig> {
    let profile = match &daily.profile {
        Some(path) => LoadProfile::from_path(path)?,
        None => LoadProfile::residential_120(),
    };
    let mut cfg = RunConfig::new(load_sim(common)?, common.pa.into(), profile);
    cfg.accounting = match daily.accounting {
        Accounting::IdleOff => IdleAccounting::IdleOff,
        Accounting::ActiveIdle => IdleAccounting::ActiveIdle,
    };
    cfg.scenario = match daily.scenario {
        Scen::Both => Scenario::Both,
        Scen::Adaptive => Scenario::Adaptive,
        Scen::Reference => Scenario::Reference,
    };
    cfg.joint_fixed_point = daily.joint_fixed_point;
    Ok(cfg)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> AnyResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn print_aggregates(label: &str, report: &mimo_ee::experiment::DailyReport) {
    let d = &report.summary.design;
    let a = &report.summary.aggregates;
    let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}%"));
    println!(
        "{label}: K_max={} M_max={} p={:.4} W | EE gain {} | energy saving {} | rate change {}",
        d.k_max,
        d.m_max,
        d.p_opt,
        pct(a.ee_gain_pct),
        pct(a.energy_saving_pct),
        pct(a.rate_change_pct)
    );
}

fn run(cli: Cli) -> AnyResult<()> {
    match cli.command {
        Command::Dimension { common, p_design } => {
            let sim = load_sim(&common)?;
            let layout = build_layout(sim.num_cells, sim.cell_radius_m, sim.min_distance_m, sim.grid_size)?;
            let gains = compute_coupling(&layout, sim.pathloss_coeff, sim.pathloss_exponent)?;
            let mut cfg = RunConfig::new(sim, common.pa.into(), LoadProfile::constant_peak(1));
            cfg.fixed_p = p_design;
            let design = dimension(&cfg, &gains)?;
            fs::create_dir_all(&common.out)?;
            write_json(&common.out.join("design.json"), &design)?;
            write_json(&common.out.join("geometry.json"), &GeometryExport::new(&layout, &gains))?;
            println!(
                "{} {} m: K_max={} M_max={} p={:.4} W peak EE={:.4e} bit/J",
                design.pa_kind, design.cell_radius, design.k_max, design.m_max, design.p_opt, design.peak_ee
            );
        }
        Command::Run { common, daily, design } => {
            let mut cfg = run_config(&common, &daily)?;
            if let Some(path) = design {
                cfg.design = Some(ReferenceDesign::load(&path)?);
            }
            let gains = network_gains(&cfg.sim)?;
            let report = run_daily_with_gains(&cfg, &gains)?;
            emit(&report, &common.out)?;
            print_aggregates(&cfg.profile.label, &report);
        }
        Command::Sweep { common, daily, dimension, values } => {
            let cfg = run_config(&common, &daily)?;
            let dim = match dimension {
                Dim::Radius => SweepDimension::Radius,
                Dim::PDesign => SweepDimension::PDesign,
            };
            let reports = sweep(&cfg, dim, &values)?;
            fs::create_dir_all(&common.out)?;
            for (v, report) in values.iter().zip(&reports) {
                emit(report, &common.out.join(format!("value_{v}")))?;
                print_aggregates(&format!("{v}"), report);
            }
            write_sweep_table(dim, &values, &reports, &common.out.join("sweep.csv"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
