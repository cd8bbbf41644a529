//! Per-window pipeline and experiment runner.
//!
//! A window runs, in order: SI-I load sampling, per-MNO load estimation,
//! aggregation of SI-II demand, inter-slice allocation of the pool, and
//! intra-slice allocation of SI-II's grant among the MNOs. Each window draws
//! from its own `(seed, window, entity)` streams, so windows are independent
//! and run in parallel.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::demand::{
    aggregate_si2_demand, map_load_to_spectrum, mno_load, sample_mno_load, sample_si1_load,
    LoadReport, SpectralEfficiency,
};
use crate::metrics::deviation;
use crate::model::{
    validate_classes, validate_profile, validate_slice_profile, AllocationResult, CaseLabel,
    DemandVector, EntityId, MnoProfile, ModelError, ServiceClass, ShareProfile, Si1TrafficModel,
    SpectrumPool, UserCount, ValidatedProfile,
};
use crate::policy::{
    allocate_cs, allocate_fr, allocate_pr_inter, allocate_pr_intra, FrSplit, PolicyError,
    PolicyKind,
};
use crate::rng::StreamFactory;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),
    #[error("sweep over `{0}` has no values")]
    EmptySweep(String),
    #[error("value `{value}` is not valid for axis `{axis}`")]
    InvalidAxisValue { axis: String, value: String },
}

/// How SI-II loads are produced each window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Si2LoadModel {
    /// Per-user class sampling.
    #[default]
    Sampled,
    /// Closed-form expected load.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterPolicy {
    pub kind: PolicyKind,
    pub shares: ShareProfile,
    /// FR split; defaults to the normalized principal shares.
    pub fr_split: Option<FrSplit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntraPolicy {
    pub kind: PolicyKind,
    /// Share weights over the MNOs.
    pub shares: ShareProfile,
    pub fr_split: Option<FrSplit>,
    /// Reserve inside SI-II, in MHz. Clamped to SI-II's grant each window.
    pub reserved_mhz: f64,
    /// Per-MNO spectrum caps in MHz, applied under PR.
    pub caps: Option<Vec<f64>>,
}

impl IntraPolicy {
    pub fn pr_uniform(n_mno: usize) -> Result<Self, ModelError> {
        Ok(Self {
            kind: PolicyKind::Pr,
            shares: ShareProfile::uniform(n_mno)?,
            fr_split: None,
            reserved_mhz: 0.0,
            caps: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub pool: SpectrumPool,
    pub si1_model: Si1TrafficModel,
    pub si1_eta: SpectralEfficiency,
    pub si2_eta: SpectralEfficiency,
    pub si2_load: Si2LoadModel,
    pub mnos: Vec<MnoProfile>,
    pub classes: Vec<ServiceClass>,
    pub inter: InterPolicy,
    pub intra: IntraPolicy,
    pub windows: u64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        Scenario::prepare(self).map(|_| ())
    }

    pub fn n_mno(&self) -> usize {
        self.mnos.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Inter,
    Intra,
}

impl Level {
    pub fn as_str(&self) -> &'static str {
        match self {
            Level::Inter => "inter",
            Level::Intra => "intra",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inter" => Ok(Level::Inter),
            "intra" => Ok(Level::Intra),
            _ => Err(ModelError::UnknownLabel {
                kind: "level",
                value: s.to_string(),
            }),
        }
    }
}

/// One entity's outcome in one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub window: u64,
    pub level: Level,
    pub entity: EntityId,
    pub policy: PolicyKind,
    pub demand_mhz: f64,
    pub grant_mhz: f64,
    pub deviation_mhz: f64,
    pub case_label: CaseLabel,
}

/// A validated config with its window-invariant pieces precomputed.
#[derive(Debug, Clone)]
pub struct Scenario<'a> {
    config: &'a ScenarioConfig,
    inter_profile: ValidatedProfile,
    inter_split: FrSplit,
    intra_split: FrSplit,
}

const SI1_STREAM: u64 = 0;

impl<'a> Scenario<'a> {
    pub fn prepare(config: &'a ScenarioConfig) -> Result<Self, SimError> {
        if config.windows == 0 {
            return Err(SimError::InvalidConfig("windows must be at least 1".into()));
        }
        if config.mnos.is_empty() {
            return Err(SimError::InvalidConfig(
                "at least one MNO is required".into(),
            ));
        }
        validate_classes(&config.classes)?;
        if let Some(q) = config
            .mnos
            .iter()
            .position(|m| m.usage_pattern().len() != config.classes.len())
        {
            return Err(SimError::InvalidConfig(format!(
                "MNO {} has {} usage entries for {} service classes",
                q + 1,
                config.mnos[q].usage_pattern().len(),
                config.classes.len()
            )));
        }
        let n = config.n_mno();
        let inter_profile = validate_profile(&config.inter.shares, &config.pool, 2)?;
        let inter_split = match &config.inter.fr_split {
            Some(s) => s.clone(),
            None => FrSplit::from_weights(config.inter.shares.principal_shares())?,
        };
        if inter_split.len() != 2 {
            return Err(PolicyError::EntityCountMismatch {
                expected: 2,
                got: inter_split.len(),
            }
            .into());
        }
        // The slice budget is only known per window; check the shape here.
        validate_profile(
            &config.intra.shares,
            &SpectrumPool::slice_budget(1.0, 0.0)?,
            n,
        )?;
        let intra_split = match &config.intra.fr_split {
            Some(s) => s.clone(),
            None => FrSplit::from_weights(config.intra.shares.principal_shares())?,
        };
        if intra_split.len() != n {
            return Err(PolicyError::EntityCountMismatch {
                expected: n,
                got: intra_split.len(),
            }
            .into());
        }
        let r = config.intra.reserved_mhz;
        if !(r.is_finite() && r >= 0.0) {
            return Err(ModelError::ReservedOutOfRange {
                reserved: r,
                total: config.pool.total_mhz(),
            }
            .into());
        }
        if let Some(caps) = &config.intra.caps {
            if caps.len() != n {
                return Err(PolicyError::EntityCountMismatch {
                    expected: n,
                    got: caps.len(),
                }
                .into());
            }
            if let Some((index, &value)) = caps
                .iter()
                .enumerate()
                .find(|(_, c)| !(c.is_finite() && **c >= 0.0))
            {
                return Err(PolicyError::InvalidCap { index, value }.into());
            }
        }
        Ok(Self {
            config,
            inter_profile,
            inter_split,
            intra_split,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        self.config
    }

    /// Demands of one window: SI-I's demand and each MNO's demand.
    pub fn window_demands(
        &self,
        window: u64,
        streams: &StreamFactory,
    ) -> Result<(f64, DemandVector), SimError> {
        let cfg = self.config;
        let si1 = sample_si1_load(&cfg.si1_model, &mut streams.stream(window, SI1_STREAM));
        let si1_demand = map_load_to_spectrum(si1.load_mbps, cfg.si1_eta);
        let reports: Vec<LoadReport> = cfg
            .mnos
            .iter()
            .enumerate()
            .map(|(q, profile)| {
                let entity = EntityId::Mno(q as u32 + 1);
                match cfg.si2_load {
                    Si2LoadModel::Sampled => {
                        let mut rng = streams.stream(window, q as u64 + 1);
                        sample_mno_load(entity, profile, &cfg.classes, &mut rng)
                    }
                    Si2LoadModel::ClosedForm => mno_load(entity, profile, &cfg.classes),
                }
            })
            .collect();
        let (per_mno, _) = aggregate_si2_demand(&reports, cfg.si2_eta)?;
        Ok((si1_demand, per_mno))
    }

    pub fn run_window(
        &self,
        window: u64,
        streams: &StreamFactory,
    ) -> Result<Vec<WindowRecord>, SimError> {
        let cfg = self.config;
        let (si1_demand, per_mno) = self.window_demands(window, streams)?;
        let si2_demand = per_mno.total();
        let inter_demands = DemandVector::new(vec![si1_demand, si2_demand])?;

        let inter = match cfg.inter.kind {
            PolicyKind::Fr => allocate_fr(&inter_demands, &self.inter_split, &cfg.pool)?,
            PolicyKind::Pr => allocate_pr_inter(&inter_demands, &self.inter_profile)?,
            PolicyKind::Cs => allocate_cs(&inter_demands, &cfg.pool),
        };
        let si2_grant = inter.grants_mhz()[1];
        let intra = self.allocate_intra(&per_mno, si2_grant)?;

        let mut records = Vec::with_capacity(2 + per_mno.len());
        push_records(
            &mut records,
            window,
            Level::Inter,
            cfg.inter.kind,
            [EntityId::SiI, EntityId::SiII].into_iter(),
            &inter_demands,
            &inter,
        );
        push_records(
            &mut records,
            window,
            Level::Intra,
            cfg.intra.kind,
            (1..=per_mno.len() as u32).map(EntityId::Mno),
            &per_mno,
            &intra,
        );
        Ok(records)
    }

    fn allocate_intra(
        &self,
        demands: &DemandVector,
        budget_mhz: f64,
    ) -> Result<AllocationResult, SimError> {
        let cfg = self.config;
        let reserved = cfg.intra.reserved_mhz.min(budget_mhz);
        let pool = SpectrumPool::slice_budget(budget_mhz, reserved)?;
        Ok(match cfg.intra.kind {
            PolicyKind::Pr => {
                let profile = validate_slice_profile(&cfg.intra.shares, &pool, demands.len())?;
                allocate_pr_intra(demands, &profile, cfg.intra.caps.as_deref())?
            }
            PolicyKind::Fr => allocate_fr(demands, &self.intra_split, &pool)?,
            PolicyKind::Cs => allocate_cs(demands, &pool),
        })
    }

    pub fn run_windows(&self, windows: Range<u64>) -> Result<Vec<WindowRecord>, SimError> {
        let streams = StreamFactory::new(self.config.seed);
        let per_window: Vec<Vec<WindowRecord>> = windows
            .into_par_iter()
            .map(|w| self.run_window(w, &streams))
            .collect::<Result<_, _>>()?;
        Ok(per_window.into_iter().flatten().collect())
    }
}

fn push_records(
    out: &mut Vec<WindowRecord>,
    window: u64,
    level: Level,
    policy: PolicyKind,
    entities: impl Iterator<Item = EntityId>,
    demands: &DemandVector,
    alloc: &AllocationResult,
) {
    for ((entity, &demand), &grant) in entities.zip(demands.as_slice()).zip(alloc.grants_mhz()) {
        out.push(WindowRecord {
            window,
            level,
            entity,
            policy,
            demand_mhz: demand,
            grant_mhz: grant,
            deviation_mhz: deviation(demand, grant),
            case_label: alloc.case_label(),
        });
    }
}

/// Records of a single window, streams derived from `streams`' seed.
pub fn run_window(
    config: &ScenarioConfig,
    window: u64,
    streams: &StreamFactory,
) -> Result<Vec<WindowRecord>, SimError> {
    Scenario::prepare(config)?.run_window(window, streams)
}

/// All windows of a config, in window order.
pub fn run_experiment(config: &ScenarioConfig) -> Result<Vec<WindowRecord>, SimError> {
    Scenario::prepare(config)?.run_windows(0..config.windows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    MnoUserCount,
    Si1UniformLow,
    Si1PrincipalShare,
    PolicyKind,
    Theta,
    NMno,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::MnoUserCount,
        SweepAxis::Si1UniformLow,
        SweepAxis::Si1PrincipalShare,
        SweepAxis::PolicyKind,
        SweepAxis::Theta,
        SweepAxis::NMno,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::MnoUserCount => "mno_user_count",
            SweepAxis::Si1UniformLow => "si1_uniform_low",
            SweepAxis::Si1PrincipalShare => "si1_principal_share",
            SweepAxis::PolicyKind => "policy_kind",
            SweepAxis::Theta => "theta",
            SweepAxis::NMno => "n_mno",
        }
    }

    pub fn parse_value(&self, raw: &str) -> Result<AxisValue, SimError> {
        let invalid = || SimError::InvalidAxisValue {
            axis: self.as_str().to_string(),
            value: raw.to_string(),
        };
        match self {
            SweepAxis::PolicyKind => raw.parse().map(AxisValue::Policy).map_err(|_| invalid()),
            _ => raw
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(AxisValue::Number)
                .ok_or_else(invalid),
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(
        &self,
        base: &ScenarioConfig,
        value: &AxisValue,
    ) -> Result<ScenarioConfig, SimError> {
        let invalid = || SimError::InvalidAxisValue {
            axis: self.as_str().to_string(),
            value: value.to_string(),
        };
        let mut cfg = base.clone();
        match (self, value) {
            (SweepAxis::PolicyKind, AxisValue::Policy(kind)) => cfg.inter.kind = *kind,
            (SweepAxis::PolicyKind, _) | (_, AxisValue::Policy(_)) => return Err(invalid()),
            (SweepAxis::MnoUserCount, AxisValue::Number(v)) => {
                let u = whole_number(*v).ok_or_else(invalid)?;
                cfg.mnos = cfg
                    .mnos
                    .iter()
                    .map(|m| {
                        let users = match m.users() {
                            UserCount::Fixed(_) => UserCount::Fixed(u),
                            UserCount::Range { .. } => UserCount::Range { max: u },
                        };
                        m.with_users(users)
                    })
                    .collect::<Result<_, _>>()?;
            }
            (SweepAxis::Si1UniformLow, AxisValue::Number(v)) => {
                let m = cfg.si1_model;
                cfg.si1_model = Si1TrafficModel::new(m.fixed_mbps(), *v, m.uniform_high_mbps())?;
            }
            (SweepAxis::Si1PrincipalShare, AxisValue::Number(v)) => {
                if !(0.0..=1.0).contains(v) {
                    return Err(invalid());
                }
                cfg.inter.shares =
                    ShareProfile::new(vec![*v, 1.0 - v], cfg.inter.shares.priorities().to_vec())?;
                cfg.inter.fr_split = None;
            }
            (SweepAxis::Theta, AxisValue::Number(v)) => {
                cfg.pool = SpectrumPool::new(cfg.pool.total_mhz(), *v)?;
            }
            (SweepAxis::NMno, AxisValue::Number(v)) => {
                let n = whole_number(*v).filter(|n| *n >= 1).ok_or_else(invalid)? as usize;
                let template = base.mnos[0].clone();
                cfg.mnos.resize(n, template);
                if cfg.intra.shares.len() != n {
                    // per-MNO settings no longer line up; fall back to equal treatment
                    cfg.intra.shares = ShareProfile::uniform(n)?;
                    cfg.intra.fr_split = None;
                    cfg.intra.caps = None;
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn whole_number(v: f64) -> Option<u32> {
    (v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX)).then_some(v as u32)
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim())
            .ok_or_else(|| SimError::UnknownAxis(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisValue {
    Number(f64),
    Policy(PolicyKind),
}

impl AxisValue {
    /// Position on a chart's x axis, if numeric.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            AxisValue::Number(v) => Some(*v),
            AxisValue::Policy(_) => None,
        }
    }
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Number(v) => write!(f, "{v}"),
            AxisValue::Policy(p) => write!(f, "{p}"),
        }
    }
}

/// One point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepBlock {
    pub axis: SweepAxis,
    pub value: AxisValue,
    pub config: ScenarioConfig,
    pub records: Vec<WindowRecord>,
}

pub fn run_sweep(
    base: &ScenarioConfig,
    axis: SweepAxis,
    values: &[AxisValue],
) -> Result<Vec<SweepBlock>, SimError> {
    if values.is_empty() {
        return Err(SimError::EmptySweep(axis.to_string()));
    }
    let configs: Vec<ScenarioConfig> = values
        .iter()
        .map(|v| axis.apply(base, v))
        .collect::<Result<_, _>>()?;
    configs
        .into_par_iter()
        .zip(values.par_iter())
        .map(|(config, value)| {
            let records = run_experiment(&config)?;
            Ok(SweepBlock {
                axis,
                value: *value,
                config,
                records,
            })
        })
        .collect()
}
