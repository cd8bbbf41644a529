//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::chart::render_summary_chart;
use crate::config::{parse_config, ConfigError};
use crate::engine::{run_experiment, AxisValue, ScenarioConfig, SimError, SweepAxis, SweepBlock};
use crate::metrics::{
    records_to_csv, summarize, summarize_si_average, tag_records, write_atomic, write_summary_csv,
    DeviationSummary, GroupBy, MetricsError, SI_AVERAGE,
};
use crate::model::EntityId;
use crate::policy::PolicyKind;
use crate::presets::{
    preset, run_policy_sweeps, self_test, Focus, UnknownPreset, FULL_RATE_WARNING,
};

#[derive(Debug, Parser)]
#[command(
    name = "nhsim",
    version,
    about = "Shared-spectrum coordination simulator for neutral-host small cells"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write records.csv and summary.csv.
    Run(RunArgs),
    /// Run a preset or a custom sweep and write per-point CSVs, summary.csv and chart.svg.
    Sweep(SweepArgs),
    /// Check the presets against the reference experiment parameters.
    SelfTest,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of windows.
    #[arg(long)]
    pub windows: Option<u64>,
    /// Output directory.
    #[arg(long, env = "SPECSIM_OUT")]
    pub out: PathBuf,
    /// Inter-slice policy (fr, pr or cs).
    #[arg(long)]
    pub policy: Option<PolicyKind>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, conflicts_with_all = ["config", "axis", "values"])]
    pub preset: Option<String>,
    #[arg(long, requires_all = ["axis", "values"])]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub axis: Option<String>,
    /// Comma-separated axis values.
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    /// Use the full service rate table with every user active.
    #[arg(long, conflicts_with = "config")]
    pub strict_paper: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Preset(#[from] UnknownPreset),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sim(SimError),
    #[error(transparent)]
    Output(#[from] MetricsError),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Model(_) | SimError::Policy(_) | SimError::InvalidConfig(_) => {
                CliError::Config(ConfigError::Validation(e))
            }
            SimError::UnknownAxis(_)
            | SimError::EmptySweep(_)
            | SimError::InvalidAxisValue { .. } => CliError::Usage(e.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Preset(_) | CliError::Usage(_) => 2,
            CliError::Sim(_) | CliError::Output(_) => 1,
        }
    }
}

fn apply_overrides(cfg: &mut ScenarioConfig, common: &Common) -> Result<(), CliError> {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(windows) = common.windows {
        cfg.windows = windows;
    }
    if let Some(kind) = common.policy {
        cfg.inter.kind = kind;
    }
    cfg.validate()?;
    Ok(())
}

fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| {
        CliError::Output(MetricsError::Io {
            path: dir.display().to_string(),
            source,
        })
    })
}

fn runtime(e: SimError) -> CliError {
    CliError::Sim(e)
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = parse_config(&args.config)?;
    apply_overrides(&mut cfg, &args.common)?;
    let records = run_experiment(&cfg).map_err(runtime)?;
    let rows = tag_records(&records, &cfg.name, cfg.seed, "", "");
    let mut summaries = summarize(&rows, GroupBy::default())?;
    summaries.extend(summarize_si_average(&rows, GroupBy::default())?);
    let records_csv = records_to_csv(&rows)?;

    let out = &args.common.out;
    create_out_dir(out)?;
    write_atomic(&out.join("records.csv"), &records_csv)?;
    write_summary_csv(&summaries, &out.join("summary.csv"))?;
    Ok(())
}

struct SweepPlan {
    base: ScenarioConfig,
    axis: SweepAxis,
    values: Vec<AxisValue>,
    policies: Vec<PolicyKind>,
    focus: Focus,
}

fn plan_sweep(args: &SweepArgs) -> Result<SweepPlan, CliError> {
    let mut plan = if let Some(name) = &args.preset {
        let p = preset(name, args.strict_paper)?;
        if args.strict_paper {
            eprintln!("{FULL_RATE_WARNING}");
        }
        SweepPlan {
            base: p.config,
            axis: p.axis,
            values: p.values,
            policies: p.policies,
            focus: p.focus,
        }
    } else {
        let (Some(config), Some(axis), Some(values)) = (&args.config, &args.axis, &args.values)
        else {
            return Err(CliError::Usage(
                "sweep needs either --preset or --config with --axis and --values".into(),
            ));
        };
        let base = parse_config(config)?;
        let axis: SweepAxis = axis.parse()?;
        let values = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| axis.parse_value(v))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(SimError::EmptySweep(axis.to_string()).into());
        }
        SweepPlan {
            policies: vec![base.inter.kind],
            base,
            axis,
            values,
            focus: Focus::Entities(vec![EntityId::SiI, EntityId::SiII]),
        }
    };
    if let Some(kind) = args.common.policy {
        plan.policies = vec![kind];
    }
    apply_overrides(&mut plan.base, &args.common)?;
    for v in &plan.values {
        plan.axis.apply(&plan.base, v)?;
    }
    Ok(plan)
}

fn block_file_name(block: &SweepBlock, multi_policy: bool) -> String {
    let value: String = block
        .value
        .to_string()
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if multi_policy {
        format!(
            "records_{}_{}_{}.csv",
            block.axis, value, block.config.inter.kind
        )
    } else {
        format!("records_{}_{}.csv", block.axis, value)
    }
}

fn chart_series(summaries: &[DeviationSummary], focus: &Focus) -> Vec<DeviationSummary> {
    summaries
        .iter()
        .filter(|s| s.level == "inter")
        .filter(|s| match focus {
            Focus::SiAverage => s.entity == SI_AVERAGE,
            Focus::Entities(entities) => entities.iter().any(|e| e.to_string() == s.entity),
        })
        .cloned()
        .collect()
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let plan = plan_sweep(args)?;
    let blocks =
        run_policy_sweeps(&plan.base, plan.axis, &plan.values, &plan.policies).map_err(runtime)?;
    let multi_policy = plan.axis != SweepAxis::PolicyKind && plan.policies.len() > 1;

    let mut files = Vec::with_capacity(blocks.len());
    let mut summaries = Vec::new();
    let mut averages = Vec::new();
    for block in &blocks {
        let rows = tag_records(
            &block.records,
            &plan.base.name,
            block.config.seed,
            block.axis.as_str(),
            &block.value.to_string(),
        );
        summaries.extend(summarize(&rows, GroupBy::default())?);
        averages.extend(summarize_si_average(&rows, GroupBy::default())?);
        files.push((block_file_name(block, multi_policy), records_to_csv(&rows)?));
    }
    summaries.extend(averages);
    let chart = chart_series(&summaries, &plan.focus);

    let out = &args.common.out;
    create_out_dir(out)?;
    for (name, bytes) in &files {
        write_atomic(&out.join(name), bytes)?;
    }
    write_summary_csv(&summaries, &out.join("summary.csv"))?;
    render_summary_chart(&chart, &out.join("chart.svg"))?;
    Ok(())
}

pub fn cmd_self_test() -> bool {
    let checks = self_test();
    for c in &checks {
        println!("{c}");
    }
    checks.iter().all(|c| c.passed())
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::SelfTest => {
            return if cmd_self_test() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
