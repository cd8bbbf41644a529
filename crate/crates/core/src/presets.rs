//! Built-in sweeps for the reference experiment designs.
//!
//! Presets run at desk scale: every MNO serves a fixed number of users with
//! activity factor 0.1, uniform usage and unit class weights, and the rate
//! table is scaled by 0.01 so that demand and the 30 MHz pool are of the same
//! order. `full_rate` restores the unscaled rate table with α = 1.

use std::fmt;

use thiserror::Error;

use crate::demand::SpectralEfficiency;
use crate::engine::{
    run_sweep, AxisValue, InterPolicy, IntraPolicy, ScenarioConfig, Si2LoadModel, SimError,
    SweepAxis, SweepBlock,
};
use crate::model::{
    EntityId, MnoProfile, ServiceClass, ShareProfile, Si1TrafficModel, SpectrumPool, UserCount,
    SERVICE_RATES_KBPS,
};
use crate::policy::PolicyKind;

pub const PRESET_NAMES: [&str; 6] = ["fig4", "fig5", "fig6a", "fig6b", "fig7", "fig8"];
pub const POOL_MHZ: f64 = 30.0;
pub const N_MNO: usize = 3;
pub const DESK_ACTIVITY: f64 = 0.1;
pub const DESK_RATE_SCALE: f64 = 0.01;
pub const PRESET_WINDOWS: u64 = 10_000;
pub const PRESET_SEED: u64 = 20_190_415;

pub const FULL_RATE_WARNING: &str =
    "warning: --strict-paper uses the full service rate table with every user active; \
SI-II demand will saturate the 30 MHz pool in nearly every window";

#[derive(Debug, Error)]
#[error("unknown preset `{0}` (expected one of fig4, fig5, fig6a, fig6b, fig7, fig8)")]
pub struct UnknownPreset(pub String);

/// Which entities a preset reports on.
#[derive(Debug, Clone, PartialEq)]
pub enum Focus {
    Entities(Vec<EntityId>),
    /// Per-window mean over SI-I and SI-II.
    SiAverage,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub config: ScenarioConfig,
    pub axis: SweepAxis,
    pub values: Vec<AxisValue>,
    /// Inter-slice policies swept at every axis value.
    pub policies: Vec<PolicyKind>,
    pub focus: Focus,
}

fn numbers(values: impl IntoIterator<Item = f64>) -> Vec<AxisValue> {
    values.into_iter().map(AxisValue::Number).collect()
}

/// Users per MNO at each point of the user-count sweeps.
pub fn user_count_values() -> Vec<AxisValue> {
    numbers((1..=6).map(|k| f64::from(5 * k)))
}

/// Lower bound of SI-I's uniform load at each point of the SI-I sweeps.
pub fn si1_low_values() -> Vec<AxisValue> {
    numbers([1.0, 4.0, 8.0, 12.0, 16.0, 20.0])
}

/// SI-I principal share at each point of the share sweeps.
pub fn share_values() -> Vec<AxisValue> {
    numbers((1..=9).map(|k| f64::from(k) / 10.0))
}

fn base(name: &str, users: u32, full_rate: bool) -> ScenarioConfig {
    let (classes, activity) = if full_rate {
        (ServiceClass::full_rate_table(), 1.0)
    } else {
        (ServiceClass::scaled_table(DESK_RATE_SCALE), DESK_ACTIVITY)
    };
    let mno = MnoProfile::uniform(UserCount::Fixed(users), activity, classes.len())
        .expect("preset MNO profile is valid");
    ScenarioConfig {
        name: name.to_string(),
        pool: SpectrumPool::new(POOL_MHZ, 0.0).expect("preset pool is valid"),
        si1_model: Si1TrafficModel::venue_default(),
        si1_eta: SpectralEfficiency::bpsk(),
        si2_eta: SpectralEfficiency::bpsk(),
        si2_load: Si2LoadModel::Sampled,
        mnos: vec![mno; N_MNO],
        classes,
        inter: InterPolicy {
            kind: PolicyKind::Pr,
            shares: ShareProfile::with_equal_priorities(vec![0.5, 0.5])
                .expect("preset shares are valid"),
            fr_split: None,
        },
        intra: IntraPolicy::pr_uniform(N_MNO).expect("preset intra profile is valid"),
        windows: PRESET_WINDOWS,
        seed: PRESET_SEED,
    }
}

pub fn preset(name: &str, full_rate: bool) -> Result<Preset, UnknownPreset> {
    let all = PolicyKind::ALL.to_vec();
    let both = Focus::Entities(vec![EntityId::SiI, EntityId::SiII]);
    let (name, users, axis, values, policies, focus) = match name {
        "fig4" => (
            "fig4",
            10,
            SweepAxis::MnoUserCount,
            user_count_values(),
            all,
            Focus::Entities(vec![EntityId::SiI]),
        ),
        "fig5" => (
            "fig5",
            10,
            SweepAxis::Si1UniformLow,
            si1_low_values(),
            all,
            Focus::Entities(vec![EntityId::SiII]),
        ),
        "fig6a" => (
            "fig6a",
            10,
            SweepAxis::MnoUserCount,
            user_count_values(),
            all,
            Focus::SiAverage,
        ),
        "fig6b" => (
            "fig6b",
            10,
            SweepAxis::Si1UniformLow,
            si1_low_values(),
            all,
            Focus::SiAverage,
        ),
        "fig7" => (
            "fig7",
            30,
            SweepAxis::Si1PrincipalShare,
            share_values(),
            vec![PolicyKind::Pr],
            both,
        ),
        "fig8" => (
            "fig8",
            20,
            SweepAxis::Si1PrincipalShare,
            share_values(),
            vec![PolicyKind::Pr],
            both,
        ),
        other => return Err(UnknownPreset(other.to_string())),
    };
    Ok(Preset {
        name,
        config: base(name, users, full_rate),
        axis,
        values,
        policies,
        focus,
    })
}

/// Runs the sweep once per policy in `policies`, in that order.
pub fn run_policy_sweeps(
    base: &ScenarioConfig,
    axis: SweepAxis,
    values: &[AxisValue],
    policies: &[PolicyKind],
) -> Result<Vec<SweepBlock>, SimError> {
    if axis == SweepAxis::PolicyKind {
        return run_sweep(base, axis, values);
    }
    let mut blocks = Vec::new();
    for kind in policies {
        let mut cfg = base.clone();
        cfg.inter.kind = *kind;
        blocks.extend(run_sweep(&cfg, axis, values)?);
    }
    Ok(blocks)
}

impl Preset {
    pub fn run(&self) -> Result<Vec<SweepBlock>, SimError> {
        run_policy_sweeps(&self.config, self.axis, &self.values, &self.policies)
    }
}

/// One reference parameter compared with a preset's value.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub preset: &'static str,
    pub parameter: &'static str,
    pub expected: String,
    pub actual: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<6} {:<28} expected {:<32} got {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.preset,
            self.parameter,
            self.expected,
            self.actual
        )
    }
}

/// Checks every preset against the reference experiment parameters.
pub fn self_test() -> Vec<Check> {
    let mut checks = Vec::new();
    for name in PRESET_NAMES {
        let p = preset(name, false).expect("listed preset exists");
        let strict = preset(name, true).expect("listed preset exists");
        let cfg = &p.config;
        let mut check = |parameter: &'static str, expected: String, actual: String| {
            checks.push(Check {
                preset: p.name,
                parameter,
                expected,
                actual,
            })
        };
        check("pool MHz", "30".into(), cfg.pool.total_mhz().to_string());
        check("MNO count", "3".into(), cfg.n_mno().to_string());
        check(
            "SI-I fixed Mbps",
            "5".into(),
            cfg.si1_model.fixed_mbps().to_string(),
        );
        check(
            "SI-I uniform high Mbps",
            "20".into(),
            cfg.si1_model.uniform_high_mbps().to_string(),
        );
        check(
            "spectral efficiency",
            "1 1".into(),
            format!("{} {}", cfg.si1_eta.get(), cfg.si2_eta.get()),
        );
        let strict_rates: Vec<f64> = strict
            .config
            .classes
            .iter()
            .map(|c| c.rate_mbps() * 1000.0)
            .collect();
        check(
            "strict rate table kbps",
            format!("{SERVICE_RATES_KBPS:?}"),
            format!("{strict_rates:?}"),
        );
        match name {
            "fig4" | "fig5" | "fig6a" | "fig6b" => {
                check(
                    "principal shares",
                    "[0.5, 0.5]".into(),
                    format!("{:?}", cfg.inter.shares.principal_shares()),
                );
                check(
                    "reserved MHz",
                    "0".into(),
                    cfg.pool.reserved_mhz().to_string(),
                );
                check(
                    "policies",
                    "[Fr, Pr, Cs]".into(),
                    format!("{:?}", p.policies),
                );
            }
            _ => {
                check("policies", "[Pr]".into(), format!("{:?}", p.policies));
                check(
                    "sweep axis",
                    "si1_principal_share".into(),
                    p.axis.to_string(),
                );
            }
        }
        match name {
            "fig4" | "fig6a" => {
                check("sweep axis", "mno_user_count".into(), p.axis.to_string());
                check(
                    "SI-I uniform low Mbps",
                    "1".into(),
                    cfg.si1_model.uniform_low_mbps().to_string(),
                );
            }
            "fig5" | "fig6b" => check("sweep axis", "si1_uniform_low".into(), p.axis.to_string()),
            "fig7" => {
                let users: Vec<String> = cfg
                    .mnos
                    .iter()
                    .map(|m| format!("{:?}", m.users()))
                    .collect();
                check(
                    "users per MNO",
                    "Fixed(30) Fixed(30) Fixed(30)".into(),
                    users.join(" "),
                );
            }
            "fig8" => check(
                "SI-I uniform low Mbps",
                "1".into(),
                cfg.si1_model.uniform_low_mbps().to_string(),
            ),
            _ => {}
        }
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_expands_to_valid_configs() {
        for strict in [false, true] {
            for name in PRESET_NAMES {
                let p = preset(name, strict).unwrap();
                for v in &p.values {
                    p.axis.apply(&p.config, v).unwrap();
                }
            }
        }
        assert!(preset("fig9", false).is_err());
    }

    #[test]
    fn self_test_passes() {
        let checks = self_test();
        assert!(!checks.is_empty());
        for c in &checks {
            assert!(c.passed(), "{c}");
        }
    }
}
