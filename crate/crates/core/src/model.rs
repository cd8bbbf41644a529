//! Domain types shared by demand estimation, coordination policies and the
//! simulation engine.
//!
//! Every type here is validated on construction and immutable afterwards.
//! Bandwidths are plain `f64` MHz; two bandwidths closer than
//! [`TOLERANCE_MHZ`] are considered equal by the invariant checks.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Equality tolerance for bandwidth invariants, in MHz.
pub const TOLERANCE_MHZ: f64 = 1e-9;

/// Tolerance for probability vectors and split fractions that must sum to one.
pub const UNIT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("total bandwidth must be positive and finite, got {0}")]
    NonPositiveTotal(f64),
    #[error("slice budget must be non-negative and finite, got {0}")]
    NegativePool(f64),
    #[error("reserved bandwidth {reserved} outside [0, {total}]")]
    ReservedOutOfRange { reserved: f64, total: f64 },
    #[error("principal share list is empty or sums to zero")]
    EmptyShares,
    #[error("principal share {index} is negative or not finite: {value}")]
    NegativeShare { index: usize, value: f64 },
    #[error("priority {index} must be strictly positive and finite, got {value}")]
    NonPositivePriority { index: usize, value: f64 },
    #[error("expected {expected} entities, got {shares} shares and {priorities} priorities")]
    LengthMismatch {
        expected: usize,
        shares: usize,
        priorities: usize,
    },
    #[error(
        "principal shares ({shares_sum}) plus reserved {reserved} MHz exceed the {total} MHz pool"
    )]
    ReservedExceedsHeadroom {
        shares_sum: f64,
        reserved: f64,
        total: f64,
    },
    #[error("demand {index} must be non-negative and finite, got {value}")]
    InvalidDemand { index: usize, value: f64 },
    #[error("service class {label}: {reason}")]
    InvalidServiceClass { label: String, reason: String },
    #[error("MNO profile: {0}")]
    InvalidMnoProfile(String),
    #[error("SI-I traffic model: {0}")]
    InvalidTrafficModel(String),
    #[error("unknown {kind} label `{value}`")]
    UnknownLabel { kind: &'static str, value: String },
}

fn finite_non_negative(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Bandwidth available to a coordination decision.
///
/// At inter-slice level this is the neutral host's whole band; at intra-slice
/// level it is whatever the slice was granted in the same window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPool {
    total_mhz: f64,
    reserved_mhz: f64,
}

impl SpectrumPool {
    pub fn new(total_mhz: f64, reserved_mhz: f64) -> Result<Self, ModelError> {
        if !(total_mhz.is_finite() && total_mhz > 0.0) {
            return Err(ModelError::NonPositiveTotal(total_mhz));
        }
        Self::checked(total_mhz, reserved_mhz)
    }

    /// A per-window slice budget. Unlike [`SpectrumPool::new`] a zero total is
    /// accepted, since a slice may be granted nothing.
    pub fn slice_budget(total_mhz: f64, reserved_mhz: f64) -> Result<Self, ModelError> {
        if !finite_non_negative(total_mhz) {
            return Err(ModelError::NegativePool(total_mhz));
        }
        Self::checked(total_mhz, reserved_mhz)
    }

    fn checked(total_mhz: f64, reserved_mhz: f64) -> Result<Self, ModelError> {
        if !finite_non_negative(reserved_mhz) || reserved_mhz > total_mhz {
            return Err(ModelError::ReservedOutOfRange {
                reserved: reserved_mhz,
                total: total_mhz,
            });
        }
        Ok(Self {
            total_mhz,
            reserved_mhz,
        })
    }

    pub fn total_mhz(&self) -> f64 {
        self.total_mhz
    }

    pub fn reserved_mhz(&self) -> f64 {
        self.reserved_mhz
    }
}

/// Principal shares and priority parameters for a set of entities.
///
/// Shares may be written either in MHz or as unitless weights; both are
/// normalized by `sum(shares) + reserved` in [`validate_profile`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShareProfile {
    principal_shares: Vec<f64>,
    priorities: Vec<f64>,
}

impl ShareProfile {
    pub fn new(principal_shares: Vec<f64>, priorities: Vec<f64>) -> Result<Self, ModelError> {
        if principal_shares.len() != priorities.len() {
            return Err(ModelError::LengthMismatch {
                expected: principal_shares.len(),
                shares: principal_shares.len(),
                priorities: priorities.len(),
            });
        }
        if let Some((index, &value)) = principal_shares
            .iter()
            .enumerate()
            .find(|(_, v)| !finite_non_negative(**v))
        {
            return Err(ModelError::NegativeShare { index, value });
        }
        if principal_shares.iter().sum::<f64>() <= 0.0 {
            return Err(ModelError::EmptyShares);
        }
        if let Some((index, &value)) = priorities
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(ModelError::NonPositivePriority { index, value });
        }
        Ok(Self {
            principal_shares,
            priorities,
        })
    }

    /// Shares with all priorities set to one.
    pub fn with_equal_priorities(principal_shares: Vec<f64>) -> Result<Self, ModelError> {
        let n = principal_shares.len();
        Self::new(principal_shares, vec![1.0; n])
    }

    /// Equal shares and equal priorities for `n` entities.
    pub fn uniform(n: usize) -> Result<Self, ModelError> {
        Self::new(vec![1.0; n], vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.principal_shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.principal_shares.is_empty()
    }

    pub fn principal_shares(&self) -> &[f64] {
        &self.principal_shares
    }

    pub fn priorities(&self) -> &[f64] {
        &self.priorities
    }
}

/// A [`ShareProfile`] checked against a pool and entity count, with
/// normalized shares and priorities attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedProfile {
    pool: SpectrumPool,
    norm_shares: Vec<f64>,
    norm_priorities: Vec<f64>,
}

impl ValidatedProfile {
    pub fn pool(&self) -> &SpectrumPool {
        &self.pool
    }

    pub fn len(&self) -> usize {
        self.norm_shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norm_shares.is_empty()
    }

    /// `xi / (sum(xi) + reserved)` per entity.
    pub fn norm_shares(&self) -> &[f64] {
        &self.norm_shares
    }

    /// `rho / sum(rho)` per entity.
    pub fn norm_priorities(&self) -> &[f64] {
        &self.norm_priorities
    }

    /// Principal share in MHz, i.e. the normalized share times the pool.
    pub fn guaranteed_mhz(&self, entity: usize) -> f64 {
        self.norm_shares[entity] * self.pool.total_mhz
    }
}

/// Checks `profile` against `pool` and the expected entity count and
/// normalizes it.
///
/// With a non-zero reserve the shares must leave room for it
/// (`sum(shares) + reserved <= total`), otherwise the reserve branches of the
/// PR policy could grant more than the pool holds.
pub fn validate_profile(
    profile: &ShareProfile,
    pool: &SpectrumPool,
    n_entities: usize,
) -> Result<ValidatedProfile, ModelError> {
    if profile.len() != n_entities || n_entities == 0 {
        return Err(ModelError::LengthMismatch {
            expected: n_entities,
            shares: profile.principal_shares.len(),
            priorities: profile.priorities.len(),
        });
    }
    let shares_sum: f64 = profile.principal_shares.iter().sum();
    let reserved = pool.reserved_mhz();
    if reserved > 0.0 && shares_sum + reserved > pool.total_mhz() + TOLERANCE_MHZ {
        return Err(ModelError::ReservedExceedsHeadroom {
            shares_sum,
            reserved,
            total: pool.total_mhz(),
        });
    }
    let share_norm = shares_sum + reserved;
    let priority_sum: f64 = profile.priorities.iter().sum();
    Ok(ValidatedProfile {
        pool: *pool,
        norm_shares: profile
            .principal_shares
            .iter()
            .map(|xi| xi / share_norm)
            .collect(),
        norm_priorities: profile
            .priorities
            .iter()
            .map(|rho| rho / priority_sum)
            .collect(),
    })
}

/// Like [`validate_profile`], but reads the shares as weights over the
/// unreserved part of a slice budget: `xi_bar = xi / sum(xi) * (1 - reserved / total)`.
///
/// Slice budgets change every window, so MHz-denominated shares cannot be
/// used inside a slice. A zero budget yields `xi / sum(xi)`.
pub fn validate_slice_profile(
    profile: &ShareProfile,
    pool: &SpectrumPool,
    n_entities: usize,
) -> Result<ValidatedProfile, ModelError> {
    let unreserved = if pool.total_mhz() > 0.0 {
        1.0 - pool.reserved_mhz() / pool.total_mhz()
    } else {
        1.0
    };
    let plain = validate_profile(
        profile,
        &SpectrumPool::slice_budget(pool.total_mhz(), 0.0)?,
        n_entities,
    )?;
    Ok(ValidatedProfile {
        pool: *pool,
        norm_shares: plain.norm_shares.iter().map(|x| x * unreserved).collect(),
        norm_priorities: plain.norm_priorities,
    })
}

/// Service class labels, ordered from very-low to super-high data rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    VeryLow,
    Low,
    Medium,
    MediumHigh,
    High,
    Super,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 6] = [
        ClassLabel::VeryLow,
        ClassLabel::Low,
        ClassLabel::Medium,
        ClassLabel::MediumHigh,
        ClassLabel::High,
        ClassLabel::Super,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassLabel::VeryLow => "VL",
            ClassLabel::Low => "L",
            ClassLabel::Medium => "M",
            ClassLabel::MediumHigh => "MH",
            ClassLabel::High => "H",
            ClassLabel::Super => "S",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::UnknownLabel {
                kind: "service class",
                value: s.to_string(),
            })
    }
}

/// Per-user application data rates of the six service classes, in Kbps.
pub const SERVICE_RATES_KBPS: [f64; 6] = [5000.0, 20000.0, 30000.0, 300000.0, 600000.0, 940000.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceClass {
    label: ClassLabel,
    rate_mbps: f64,
    weight: f64,
}

impl ServiceClass {
    pub fn new(label: ClassLabel, rate_mbps: f64, weight: f64) -> Result<Self, ModelError> {
        if !(rate_mbps.is_finite() && rate_mbps > 0.0) {
            return Err(ModelError::InvalidServiceClass {
                label: label.to_string(),
                reason: format!("rate must be positive, got {rate_mbps}"),
            });
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(ModelError::InvalidServiceClass {
                label: label.to_string(),
                reason: format!("weight must be positive, got {weight}"),
            });
        }
        Ok(Self {
            label,
            rate_mbps,
            weight,
        })
    }

    /// The six classes with the full rate table, every weight 1.
    pub fn full_rate_table() -> Vec<ServiceClass> {
        Self::scaled_table(1.0)
    }

    /// Full rate table multiplied by `scale`, every weight 1.
    pub fn scaled_table(scale: f64) -> Vec<ServiceClass> {
        ClassLabel::ALL
            .into_iter()
            .zip(SERVICE_RATES_KBPS)
            .map(|(label, kbps)| ServiceClass {
                label,
                rate_mbps: kbps / 1000.0 * scale,
                weight: 1.0,
            })
            .collect()
    }

    pub fn label(&self) -> ClassLabel {
        self.label
    }

    pub fn rate_mbps(&self) -> f64 {
        self.rate_mbps
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// Rejects class lists with repeated labels.
pub fn validate_classes(classes: &[ServiceClass]) -> Result<(), ModelError> {
    for (i, a) in classes.iter().enumerate() {
        if classes[..i].iter().any(|b| b.label == a.label) {
            return Err(ModelError::InvalidServiceClass {
                label: a.label.to_string(),
                reason: "label appears more than once".into(),
            });
        }
    }
    Ok(())
}

/// Number of users served by an MNO in each window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserCount {
    Fixed(u32),
    /// Drawn uniformly from `1..=max` every window.
    Range {
        max: u32,
    },
}

impl UserCount {
    /// Mean user count, used by the closed-form load.
    pub fn expected(&self) -> f64 {
        match *self {
            UserCount::Fixed(u) => f64::from(u),
            UserCount::Range { max } => (1.0 + f64::from(max)) / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnoProfile {
    users: UserCount,
    activity_factor: f64,
    usage_pattern: Vec<f64>,
}

impl MnoProfile {
    pub fn new(
        users: UserCount,
        activity_factor: f64,
        usage_pattern: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if let UserCount::Range { max: 0 } = users {
            return Err(ModelError::InvalidMnoProfile(
                "user range upper bound must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&activity_factor) {
            return Err(ModelError::InvalidMnoProfile(format!(
                "activity factor {activity_factor} outside [0, 1]"
            )));
        }
        if usage_pattern.is_empty() || usage_pattern.iter().any(|p| !finite_non_negative(*p)) {
            return Err(ModelError::InvalidMnoProfile(
                "usage pattern entries must be non-negative".into(),
            ));
        }
        let total: f64 = usage_pattern.iter().sum();
        if (total - 1.0).abs() > UNIT_SUM_TOLERANCE {
            return Err(ModelError::InvalidMnoProfile(format!(
                "usage pattern sums to {total}, expected 1"
            )));
        }
        Ok(Self {
            users,
            activity_factor,
            usage_pattern,
        })
    }

    /// Every class equally likely.
    pub fn uniform(
        users: UserCount,
        activity_factor: f64,
        n_classes: usize,
    ) -> Result<Self, ModelError> {
        Self::new(
            users,
            activity_factor,
            vec![1.0 / n_classes as f64; n_classes],
        )
    }

    pub fn users(&self) -> UserCount {
        self.users
    }

    pub fn activity_factor(&self) -> f64 {
        self.activity_factor
    }

    pub fn usage_pattern(&self) -> &[f64] {
        &self.usage_pattern
    }

    pub fn with_users(&self, users: UserCount) -> Result<Self, ModelError> {
        Self::new(users, self.activity_factor, self.usage_pattern.clone())
    }
}

/// Normalizes non-negative weights into a probability vector.
pub fn normalize_pattern(weights: &[f64]) -> Result<Vec<f64>, ModelError> {
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !finite_non_negative(*w)) || total <= 0.0 {
        return Err(ModelError::InvalidMnoProfile(
            "usage weights must be non-negative with a positive sum".into(),
        ));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// SI-I load: a fixed business-operation part plus a uniform local-context part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Si1TrafficModel {
    fixed_mbps: f64,
    uniform_low_mbps: f64,
    uniform_high_mbps: f64,
}

impl Si1TrafficModel {
    pub fn new(
        fixed_mbps: f64,
        uniform_low_mbps: f64,
        uniform_high_mbps: f64,
    ) -> Result<Self, ModelError> {
        if !finite_non_negative(fixed_mbps) {
            return Err(ModelError::InvalidTrafficModel(format!(
                "fixed load must be non-negative, got {fixed_mbps}"
            )));
        }
        if !finite_non_negative(uniform_low_mbps)
            || !uniform_high_mbps.is_finite()
            || uniform_low_mbps > uniform_high_mbps
        {
            return Err(ModelError::InvalidTrafficModel(format!(
                "uniform bounds [{uniform_low_mbps}, {uniform_high_mbps}] are not an interval in [0, inf)"
            )));
        }
        Ok(Self {
            fixed_mbps,
            uniform_low_mbps,
            uniform_high_mbps,
        })
    }

    /// 5 Mbps fixed plus U[1, 20] Mbps.
    pub fn venue_default() -> Self {
        Self {
            fixed_mbps: 5.0,
            uniform_low_mbps: 1.0,
            uniform_high_mbps: 20.0,
        }
    }

    pub fn fixed_mbps(&self) -> f64 {
        self.fixed_mbps
    }

    pub fn uniform_low_mbps(&self) -> f64 {
        self.uniform_low_mbps
    }

    pub fn uniform_high_mbps(&self) -> f64 {
        self.uniform_high_mbps
    }
}

/// A slice instance or one of the MNOs inside SI-II. MNOs are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityId {
    SiI,
    SiII,
    Mno(u32),
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::SiI => f.write_str("SI-I"),
            EntityId::SiII => f.write_str("SI-II"),
            EntityId::Mno(q) => write!(f, "MNO-{q}"),
        }
    }
}

impl FromStr for EntityId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SI-I" => Ok(EntityId::SiI),
            "SI-II" => Ok(EntityId::SiII),
            _ => s
                .strip_prefix("MNO-")
                .and_then(|q| q.parse().ok())
                .map(EntityId::Mno)
                .ok_or_else(|| ModelError::UnknownLabel {
                    kind: "entity",
                    value: s.to_string(),
                }),
        }
    }
}

/// Per-entity spectrum demands in MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandVector(Vec<f64>);

impl DemandVector {
    pub fn new(demands_mhz: Vec<f64>) -> Result<Self, ModelError> {
        if let Some((index, &value)) = demands_mhz
            .iter()
            .enumerate()
            .find(|(_, d)| !finite_non_negative(**d))
        {
            return Err(ModelError::InvalidDemand { index, value });
        }
        Ok(Self(demands_mhz))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// PR-mode load regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoadCase {
    /// Every entity within its share, or collectively within the shares.
    CaseI,
    /// Every entity above its share.
    CaseII,
    /// Mixed, and collectively above the shares.
    CaseIII,
}

/// Label attached to an allocation: the PR load case or the policy that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseLabel {
    CaseI,
    CaseII,
    CaseIII,
    Fr,
    Cs,
    /// CS with all demands zero (equal split).
    CsDegenerate,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::CaseI => "C-I",
            CaseLabel::CaseII => "C-II",
            CaseLabel::CaseIII => "C-III",
            CaseLabel::Fr => "FR",
            CaseLabel::Cs => "CS",
            CaseLabel::CsDegenerate => "CS-degenerate",
        }
    }
}

impl From<LoadCase> for CaseLabel {
    fn from(case: LoadCase) -> Self {
        match case {
            LoadCase::CaseI => CaseLabel::CaseI,
            LoadCase::CaseII => CaseLabel::CaseII,
            LoadCase::CaseIII => CaseLabel::CaseIII,
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "C-I" => CaseLabel::CaseI,
            "C-II" => CaseLabel::CaseII,
            "C-III" => CaseLabel::CaseIII,
            "FR" => CaseLabel::Fr,
            "CS" => CaseLabel::Cs,
            "CS-degenerate" => CaseLabel::CsDegenerate,
            other => {
                return Err(ModelError::UnknownLabel {
                    kind: "case",
                    value: other.to_string(),
                })
            }
        })
    }
}

/// Granted bandwidth per entity.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    grants_mhz: Vec<f64>,
    fractions: Vec<f64>,
    case_label: CaseLabel,
}

impl AllocationResult {
    pub(crate) fn from_grants(
        grants_mhz: Vec<f64>,
        pool: &SpectrumPool,
        case_label: CaseLabel,
    ) -> Self {
        let total = pool.total_mhz();
        let fractions = grants_mhz
            .iter()
            .map(|g| if total > 0.0 { g / total } else { 0.0 })
            .collect();
        Self {
            grants_mhz,
            fractions,
            case_label,
        }
    }

    pub fn grants_mhz(&self) -> &[f64] {
        &self.grants_mhz
    }

    /// Grant as a fraction of the pool.
    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn case_label(&self) -> CaseLabel {
        self.case_label
    }

    pub fn total_granted(&self) -> f64 {
        self.grants_mhz.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} != {b}");
    }

    #[test]
    fn symmetric_profile_normalizes_to_halves() {
        let pool = SpectrumPool::new(30.0, 0.0).unwrap();
        let p = ShareProfile::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let v = validate_profile(&p, &pool, 2).unwrap();
        assert_eq!(v.norm_shares(), &[0.5, 0.5]);
        assert_eq!(v.norm_priorities(), &[0.5, 0.5]);
    }

    #[test]
    fn reserve_enters_share_normalizer() {
        let pool = SpectrumPool::new(30.0, 6.0).unwrap();
        let p = ShareProfile::with_equal_priorities(vec![12.0, 12.0]).unwrap();
        let v = validate_profile(&p, &pool, 2).unwrap();
        assert_close(v.norm_shares()[0], 0.4);
        assert_close(v.norm_shares()[1], 0.4);
        assert_close(v.guaranteed_mhz(0), 12.0);
    }

    #[test]
    fn negative_share_rejected() {
        let err = ShareProfile::new(vec![1.0, -1.0], vec![1.0, 1.0]).unwrap_err();
        assert_eq!(
            err,
            ModelError::NegativeShare {
                index: 1,
                value: -1.0
            }
        );
    }

    #[test]
    fn profile_errors() {
        assert_eq!(
            ShareProfile::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap_err(),
            ModelError::EmptyShares
        );
        assert!(matches!(
            ShareProfile::new(vec![1.0, 1.0], vec![1.0, 0.0]),
            Err(ModelError::NonPositivePriority { index: 1, .. })
        ));
        let pool = SpectrumPool::new(30.0, 0.0).unwrap();
        let p = ShareProfile::uniform(3).unwrap();
        assert!(matches!(
            validate_profile(&p, &pool, 2),
            Err(ModelError::LengthMismatch { expected: 2, .. })
        ));
    }

    #[test]
    fn reserve_must_fit_next_to_shares() {
        let pool = SpectrumPool::new(30.0, 10.0).unwrap();
        let p = ShareProfile::with_equal_priorities(vec![20.0, 20.0]).unwrap();
        assert!(matches!(
            validate_profile(&p, &pool, 2),
            Err(ModelError::ReservedExceedsHeadroom { .. })
        ));
    }

    #[test]
    fn pool_invariants() {
        assert!(SpectrumPool::new(0.0, 0.0).is_err());
        assert!(SpectrumPool::new(30.0, 40.0).is_err());
        assert!(SpectrumPool::new(30.0, -1.0).is_err());
        assert!(SpectrumPool::slice_budget(0.0, 0.0).is_ok());
        assert_eq!(
            SpectrumPool::slice_budget(-1.0, 0.0).unwrap_err(),
            ModelError::NegativePool(-1.0)
        );
    }

    #[test]
    fn rate_table_is_strictly_increasing() {
        let table = ServiceClass::full_rate_table();
        assert_eq!(table.len(), 6);
        assert!(table
            .windows(2)
            .all(|w| w[0].rate_mbps() < w[1].rate_mbps()));
        assert_eq!(table[0].rate_mbps(), 5.0);
        assert_eq!(table[5].rate_mbps(), 940.0);
        validate_classes(&table).unwrap();
    }

    #[test]
    fn duplicate_class_labels_rejected() {
        let c = ServiceClass::new(ClassLabel::Low, 1.0, 1.0).unwrap();
        assert!(validate_classes(&[c, c]).is_err());
    }

    #[test]
    fn usage_pattern_must_sum_to_one() {
        assert!(MnoProfile::new(UserCount::Fixed(3), 0.5, vec![0.5, 0.4]).is_err());
        assert!(MnoProfile::new(UserCount::Fixed(3), 1.5, vec![1.0]).is_err());
        assert!(MnoProfile::new(UserCount::Range { max: 0 }, 0.5, vec![1.0]).is_err());
        assert!(MnoProfile::uniform(UserCount::Range { max: 30 }, 0.1, 6).is_ok());
    }

    #[test]
    fn labels_round_trip() {
        for label in [
            CaseLabel::CaseI,
            CaseLabel::CaseII,
            CaseLabel::CaseIII,
            CaseLabel::Fr,
            CaseLabel::Cs,
            CaseLabel::CsDegenerate,
        ] {
            assert_eq!(label.as_str().parse::<CaseLabel>().unwrap(), label);
        }
        assert_eq!("mh".parse::<ClassLabel>().unwrap(), ClassLabel::MediumHigh);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn shares() -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(0.01f64..100.0, 2..6)
        }

        proptest! {
            #[test]
            fn normalization_is_idempotent_without_reserve(xi in shares()) {
                let pool = SpectrumPool::new(30.0, 0.0).unwrap();
                let n = xi.len();
                let first = validate_profile(&ShareProfile::with_equal_priorities(xi).unwrap(), &pool, n).unwrap();
                let again = validate_profile(
                    &ShareProfile::with_equal_priorities(first.norm_shares().to_vec()).unwrap(), &pool, n).unwrap();
                for (a, b) in first.norm_shares().iter().zip(again.norm_shares()) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }

            #[test]
            fn mhz_shares_are_their_own_guarantee(xi in shares(), reserve_frac in 0.0f64..0.9) {
                // Shares in MHz that fill the pool next to the reserve.
                let total = 30.0;
                let reserved = total * reserve_frac;
                let sum: f64 = xi.iter().sum();
                let mhz: Vec<f64> = xi.iter().map(|x| x / sum * (total - reserved)).collect();
                let pool = SpectrumPool::new(total, reserved).unwrap();
                let v = validate_profile(&ShareProfile::with_equal_priorities(mhz.clone()).unwrap(), &pool, mhz.len()).unwrap();
                for (i, m) in mhz.iter().enumerate() {
                    prop_assert!((v.guaranteed_mhz(i) - m).abs() < 1e-9);
                }
            }

            #[test]
            fn priorities_are_scale_invariant(rho in prop::collection::vec(0.01f64..10.0, 2..6), c in 0.001f64..1000.0) {
                let pool = SpectrumPool::new(30.0, 0.0).unwrap();
                let n = rho.len();
                let a = validate_profile(&ShareProfile::new(vec![1.0; n], rho.clone()).unwrap(), &pool, n).unwrap();
                let scaled: Vec<f64> = rho.iter().map(|r| r * c).collect();
                let b = validate_profile(&ShareProfile::new(vec![1.0; n], scaled).unwrap(), &pool, n).unwrap();
                for (x, y) in a.norm_priorities().iter().zip(b.norm_priorities()) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }

            #[test]
            fn shares_are_scale_invariant_without_reserve(xi in shares(), c in 0.001f64..1000.0) {
                let pool = SpectrumPool::new(30.0, 0.0).unwrap();
                let n = xi.len();
                let a = validate_profile(&ShareProfile::with_equal_priorities(xi.clone()).unwrap(), &pool, n).unwrap();
                let scaled: Vec<f64> = xi.iter().map(|x| x * c).collect();
                let b = validate_profile(&ShareProfile::with_equal_priorities(scaled).unwrap(), &pool, n).unwrap();
                for (x, y) in a.norm_shares().iter().zip(b.norm_shares()) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}
