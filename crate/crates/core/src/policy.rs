//! Spectrum coordination policies.
//!
//! * FR: a static split `psi` of the pool, blind to demand.
//! * CS: the pool split in proportion to demand.
//! * PR: every entity is guaranteed its principal share when it needs it;
//!   what light entities leave unused (and, under overload, the reserve) goes
//!   to heavy entities.
//!
//! [`allocate_pr_inter`] is the two-slice form. [`allocate_pr_intra`] is the
//! N-MNO form, which shares surplus among heavy MNOs by priority and clamps
//! each MNO to its demand.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{
    AllocationResult, CaseLabel, DemandVector, LoadCase, ModelError, SpectrumPool,
    ValidatedProfile, UNIT_SUM_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("expected {expected} entities, got {got}")]
    EntityCountMismatch { expected: usize, got: usize },
    #[error("FR split must be positive and sum to 1: {0:?}")]
    InvalidSplit(Vec<f64>),
    #[error("spectrum cap {index} must be non-negative, got {value}")]
    InvalidCap { index: usize, value: f64 },
    #[error("unknown policy `{0}` (expected fr, pr or cs)")]
    UnknownPolicy(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Fr,
    Pr,
    Cs,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Fr, PolicyKind::Pr, PolicyKind::Cs];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Fr => "FR",
            PolicyKind::Pr => "PR",
            PolicyKind::Cs => "CS",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fr" => Ok(PolicyKind::Fr),
            "pr" => Ok(PolicyKind::Pr),
            "cs" => Ok(PolicyKind::Cs),
            _ => Err(PolicyError::UnknownPolicy(s.to_string())),
        }
    }
}

/// Static FR split `psi`, one positive fraction per entity summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FrSplit(Vec<f64>);

impl FrSplit {
    pub fn new(psi: Vec<f64>) -> Result<Self, PolicyError> {
        let sum: f64 = psi.iter().sum();
        if psi.is_empty()
            || psi.iter().any(|p| !(p.is_finite() && *p > 0.0))
            || (sum - 1.0).abs() > UNIT_SUM_TOLERANCE
        {
            return Err(PolicyError::InvalidSplit(psi));
        }
        Ok(Self(psi))
    }

    /// Normalizes positive weights into a split.
    pub fn from_weights(weights: &[f64]) -> Result<Self, PolicyError> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(PolicyError::InvalidSplit(weights.to_vec()));
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
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
}

fn check_count(expected: usize, got: usize) -> Result<(), PolicyError> {
    if expected == got {
        Ok(())
    } else {
        Err(PolicyError::EntityCountMismatch { expected, got })
    }
}

/// PR load case. C-I is tested first, then C-II, then C-III.
pub fn classify_case(demands: &DemandVector, profile: &ValidatedProfile) -> LoadCase {
    let total = profile.pool().total_mhz();
    let mut all_light = true;
    let mut all_heavy = true;
    let mut excess = 0.0;
    for (d, xi) in demands.as_slice().iter().zip(profile.norm_shares()) {
        let e = d - xi * total;
        excess += e;
        all_light &= e <= 0.0;
        all_heavy &= e > 0.0;
    }
    if all_light || excess <= 0.0 {
        LoadCase::CaseI
    } else if all_heavy {
        LoadCase::CaseII
    } else {
        LoadCase::CaseIII
    }
}

pub fn allocate_fr(
    demands: &DemandVector,
    psi: &FrSplit,
    pool: &SpectrumPool,
) -> Result<AllocationResult, PolicyError> {
    check_count(psi.len(), demands.len())?;
    let grants = psi
        .as_slice()
        .iter()
        .map(|p| p * pool.total_mhz())
        .collect();
    Ok(AllocationResult::from_grants(grants, pool, CaseLabel::Fr))
}

/// Demand-proportional split. All-zero demand splits the pool equally and is
/// labelled [`CaseLabel::CsDegenerate`].
pub fn allocate_cs(demands: &DemandVector, pool: &SpectrumPool) -> AllocationResult {
    let total_demand = demands.total();
    let b = pool.total_mhz();
    if total_demand > 0.0 {
        let grants = demands
            .as_slice()
            .iter()
            .map(|d| d / total_demand * b)
            .collect();
        AllocationResult::from_grants(grants, pool, CaseLabel::Cs)
    } else {
        let n = demands.len().max(1) as f64;
        let grants = vec![b / n; demands.len()];
        AllocationResult::from_grants(grants, pool, CaseLabel::CsDegenerate)
    }
}

/// Two-slice PR allocation.
///
/// The heavy slice in C-III gains what the light slice leaves unused of its
/// principal share, `xi_l * B - demand_l`, plus the reserve when the
/// collective excess is larger than the reserve.
pub fn allocate_pr_inter(
    demands: &DemandVector,
    profile: &ValidatedProfile,
) -> Result<AllocationResult, PolicyError> {
    check_count(2, demands.len())?;
    check_count(2, profile.len())?;
    let pool = profile.pool();
    let theta = pool.reserved_mhz();
    let d = [demands.as_slice()[0], demands.as_slice()[1]];
    let g = [profile.guaranteed_mhz(0), profile.guaranteed_mhz(1)];
    let excess = (d[0] - g[0]) + (d[1] - g[1]);
    let case = classify_case(demands, profile);

    let grants = match case {
        LoadCase::CaseI => d.to_vec(),
        LoadCase::CaseII if theta == 0.0 => g.to_vec(),
        LoadCase::CaseII if excess <= theta => d.to_vec(),
        LoadCase::CaseII => {
            let rho = profile.norm_priorities();
            vec![g[0] + theta * rho[0], g[1] + theta * rho[1]]
        }
        LoadCase::CaseIII if theta > 0.0 && excess <= theta => d.to_vec(),
        LoadCase::CaseIII => {
            let (light, heavy) = if d[0] - g[0] <= 0.0 { (0, 1) } else { (1, 0) };
            let surplus = g[light] - d[light];
            let transfer = if theta > 0.0 {
                surplus + theta
            } else {
                surplus
            };
            let mut out = [0.0; 2];
            out[light] = d[light];
            out[heavy] = g[heavy] + transfer;
            out.to_vec()
        }
    };
    Ok(AllocationResult::from_grants(grants, pool, case.into()))
}

/// N-entity PR allocation inside a slice.
///
/// `profile.pool()` is the slice's grant from the inter-slice stage. C-I and
/// C-II follow the two-slice rules. In C-III the surplus of light entities
/// (plus the reserve under overload) is shared among heavy entities in
/// proportion to priority; any entity whose share would exceed its demand is
/// held at its demand and the remainder is re-shared among the others.
/// `caps`, when given, bound the final grants.
pub fn allocate_pr_intra(
    demands: &DemandVector,
    profile: &ValidatedProfile,
    caps: Option<&[f64]>,
) -> Result<AllocationResult, PolicyError> {
    let n = demands.len();
    check_count(profile.len(), n)?;
    if let Some(caps) = caps {
        check_count(n, caps.len())?;
        if let Some((index, &value)) = caps
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c >= 0.0))
        {
            return Err(PolicyError::InvalidCap { index, value });
        }
    }
    let pool = profile.pool();
    let b = pool.total_mhz();
    let theta = pool.reserved_mhz();
    let d = demands.as_slice();
    let case = classify_case(demands, profile);

    let mut grants = if n == 1 {
        vec![d[0].min(b)]
    } else {
        let g: Vec<f64> = (0..n).map(|q| profile.guaranteed_mhz(q)).collect();
        let excess: f64 = d.iter().zip(&g).map(|(d, g)| d - g).sum();
        match case {
            LoadCase::CaseI => d.to_vec(),
            LoadCase::CaseII if theta == 0.0 => g,
            LoadCase::CaseII if excess <= theta => d.to_vec(),
            LoadCase::CaseII => g
                .iter()
                .zip(profile.norm_priorities())
                .map(|(g, rho)| g + theta * rho)
                .collect(),
            LoadCase::CaseIII if theta > 0.0 && excess <= theta => d.to_vec(),
            LoadCase::CaseIII => share_surplus(d, &g, profile.norm_priorities(), theta),
        }
    };
    if let Some(caps) = caps {
        for (grant, cap) in grants.iter_mut().zip(caps) {
            *grant = grant.min(*cap);
        }
    }
    Ok(AllocationResult::from_grants(grants, pool, case.into()))
}

/// C-III surplus sharing with demand clamping, iterated until no receiver
/// would be over-served.
fn share_surplus(d: &[f64], g: &[f64], rho: &[f64], theta: f64) -> Vec<f64> {
    let mut grants = vec![0.0; d.len()];
    let mut surplus = 0.0;
    let mut receivers = Vec::new();
    for q in 0..d.len() {
        if d[q] - g[q] <= 0.0 {
            grants[q] = d[q];
            surplus += g[q] - d[q];
        } else {
            grants[q] = g[q];
            receivers.push(q);
        }
    }
    let mut remaining = if theta > 0.0 {
        surplus + theta
    } else {
        surplus
    };

    while !receivers.is_empty() && remaining > 0.0 {
        let rho_sum: f64 = receivers.iter().map(|&q| rho[q]).sum();
        let saturated: Vec<usize> = receivers
            .iter()
            .copied()
            .filter(|&q| grants[q] + remaining * (rho[q] / rho_sum) > d[q])
            .collect();
        if saturated.is_empty() {
            for &q in &receivers {
                grants[q] += remaining * (rho[q] / rho_sum);
            }
            break;
        }
        for &q in &saturated {
            remaining -= d[q] - grants[q];
            grants[q] = d[q];
        }
        receivers.retain(|q| !saturated.contains(q));
    }
    grants
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_profile, ShareProfile};

    fn dv(v: &[f64]) -> DemandVector {
        DemandVector::new(v.to_vec()).unwrap()
    }

    fn profile(xi: &[f64], rho: &[f64], total: f64, theta: f64) -> ValidatedProfile {
        let pool = SpectrumPool::new(total, theta).unwrap();
        validate_profile(
            &ShareProfile::new(xi.to_vec(), rho.to_vec()).unwrap(),
            &pool,
            xi.len(),
        )
        .unwrap()
    }

    fn assert_grants(r: &AllocationResult, expected: &[f64]) {
        assert_eq!(r.grants_mhz().len(), expected.len());
        for (g, e) in r.grants_mhz().iter().zip(expected) {
            assert!((g - e).abs() < 1e-9, "{:?} != {expected:?}", r.grants_mhz());
        }
    }

    #[test]
    fn case_classification() {
        let p = profile(&[1.0, 1.0], &[1.0, 1.0], 30.0, 0.0);
        assert_eq!(classify_case(&dv(&[8.0, 12.0]), &p), LoadCase::CaseI);
        assert_eq!(classify_case(&dv(&[20.0, 20.0]), &p), LoadCase::CaseII);
        assert_eq!(classify_case(&dv(&[5.0, 28.0]), &p), LoadCase::CaseIII);
        // mixed but collectively light
        assert_eq!(classify_case(&dv(&[5.0, 20.0]), &p), LoadCase::CaseI);
        // jointly balanced
        assert_eq!(classify_case(&dv(&[10.0, 20.0]), &p), LoadCase::CaseI);
    }

    #[test]
    fn fr_ignores_demand() {
        let pool = SpectrumPool::new(30.0, 0.0).unwrap();
        let half = FrSplit::new(vec![0.5, 0.5]).unwrap();
        assert_grants(
            &allocate_fr(&dv(&[10.0, 25.0]), &half, &pool).unwrap(),
            &[15.0, 15.0],
        );
        let skew = FrSplit::new(vec![0.3, 0.7]).unwrap();
        assert_grants(
            &allocate_fr(&dv(&[0.0, 99.0]), &skew, &pool).unwrap(),
            &[9.0, 21.0],
        );
        let one = FrSplit::new(vec![1.0]).unwrap();
        assert_grants(&allocate_fr(&dv(&[3.0]), &one, &pool).unwrap(), &[30.0]);
        assert!(matches!(
            allocate_fr(&dv(&[1.0]), &half, &pool),
            Err(PolicyError::EntityCountMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn fr_split_validation() {
        assert!(FrSplit::new(vec![0.5, 0.4]).is_err());
        assert!(FrSplit::new(vec![1.0, 0.0]).is_err());
        assert_eq!(
            FrSplit::from_weights(&[1.0, 3.0]).unwrap().as_slice(),
            &[0.25, 0.75]
        );
    }

    #[test]
    fn cs_is_proportional() {
        let pool = SpectrumPool::new(30.0, 0.0).unwrap();
        assert_grants(&allocate_cs(&dv(&[10.0, 20.0]), &pool), &[10.0, 20.0]);
        assert_grants(&allocate_cs(&dv(&[20.0, 40.0]), &pool), &[10.0, 20.0]);
        let zero = allocate_cs(&dv(&[0.0, 0.0]), &pool);
        assert_grants(&zero, &[15.0, 15.0]);
        assert_eq!(zero.case_label(), CaseLabel::CsDegenerate);
    }

    #[test]
    fn pr_inter_branches() {
        let p = profile(&[1.0, 1.0], &[1.0, 1.0], 30.0, 0.0);
        let r = allocate_pr_inter(&dv(&[8.0, 12.0]), &p).unwrap();
        assert_grants(&r, &[8.0, 12.0]);
        assert_eq!(r.case_label(), CaseLabel::CaseI);

        let r = allocate_pr_inter(&dv(&[5.0, 28.0]), &p).unwrap();
        assert_grants(&r, &[5.0, 25.0]);
        assert_eq!(r.case_label(), CaseLabel::CaseIII);

        let p = profile(&[12.0, 12.0], &[1.0, 1.0], 30.0, 6.0);
        let r = allocate_pr_inter(&dv(&[20.0, 20.0]), &p).unwrap();
        assert_grants(&r, &[15.0, 15.0]);
        assert_eq!(r.case_label(), CaseLabel::CaseII);

        let p = profile(&[12.0, 12.0], &[1.0, 1.0], 32.0, 8.0);
        assert_grants(
            &allocate_pr_inter(&dv(&[16.0, 16.0]), &p).unwrap(),
            &[16.0, 16.0],
        );

        let p = profile(&[13.0, 13.0], &[1.0, 1.0], 30.0, 4.0);
        let r = allocate_pr_inter(&dv(&[5.0, 30.0]), &p).unwrap();
        assert_grants(&r, &[5.0, 25.0]);
        assert_eq!(r.case_label(), CaseLabel::CaseIII);
    }

    #[test]
    fn pr_inter_needs_two_entities() {
        let p = profile(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], 30.0, 0.0);
        assert!(matches!(
            allocate_pr_inter(&dv(&[1.0, 1.0, 1.0]), &p),
            Err(PolicyError::EntityCountMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn pr_intra_priority_split() {
        let p = profile(&[6.0, 6.0, 6.0], &[1.0, 1.0, 1.0], 18.0, 0.0);
        assert_grants(
            &allocate_pr_intra(&dv(&[2.0, 10.0, 12.0]), &p, None).unwrap(),
            &[2.0, 8.0, 8.0],
        );

        let p = profile(&[6.0, 6.0, 6.0], &[1.0, 1.0, 3.0], 18.0, 0.0);
        assert_grants(
            &allocate_pr_intra(&dv(&[2.0, 10.0, 12.0]), &p, None).unwrap(),
            &[2.0, 7.0, 9.0],
        );
        // MNO-2 lands exactly on its demand, nothing to clamp
        assert_grants(
            &allocate_pr_intra(&dv(&[2.0, 7.0, 12.0]), &p, None).unwrap(),
            &[2.0, 7.0, 9.0],
        );
    }

    #[test]
    fn pr_intra_clamps_to_demand() {
        // naive split would give MNO-3 6 + 3 = 9 > 7
        let p = profile(&[6.0, 6.0, 6.0], &[1.0, 1.0, 3.0], 18.0, 0.0);
        let r = allocate_pr_intra(&dv(&[2.0, 12.0, 7.0]), &p, None).unwrap();
        assert_grants(&r, &[2.0, 9.0, 7.0]);
        assert!((r.total_granted() - 18.0).abs() < 1e-9);
    }

    #[test]
    fn pr_intra_single_entity() {
        let p = profile(&[1.0], &[1.0], 18.0, 0.0);
        assert_grants(&allocate_pr_intra(&dv(&[25.0]), &p, None).unwrap(), &[18.0]);
        assert_grants(&allocate_pr_intra(&dv(&[4.0]), &p, None).unwrap(), &[4.0]);
    }

    #[test]
    fn pr_intra_caps() {
        let p = profile(&[6.0, 6.0, 6.0], &[1.0, 1.0, 1.0], 18.0, 0.0);
        let r = allocate_pr_intra(&dv(&[2.0, 10.0, 12.0]), &p, Some(&[10.0, 10.0, 5.0])).unwrap();
        assert_grants(&r, &[2.0, 8.0, 5.0]);
        assert!(matches!(
            allocate_pr_intra(&dv(&[2.0, 10.0, 12.0]), &p, Some(&[1.0])),
            Err(PolicyError::EntityCountMismatch { .. })
        ));
        assert!(matches!(
            allocate_pr_intra(&dv(&[2.0, 10.0, 12.0]), &p, Some(&[1.0, -1.0, 1.0])),
            Err(PolicyError::InvalidCap { index: 1, .. })
        ));
    }

    #[test]
    fn pr_intra_zero_budget() {
        let pool = SpectrumPool::slice_budget(0.0, 0.0).unwrap();
        let p = validate_profile(&ShareProfile::uniform(3).unwrap(), &pool, 3).unwrap();
        for d in [[0.0, 0.0, 0.0], [0.0, 3.0, 1.0], [2.0, 3.0, 1.0]] {
            let r = allocate_pr_intra(&dv(&d), &p, None).unwrap();
            assert_eq!(r.grants_mhz(), &[0.0, 0.0, 0.0]);
            assert_eq!(r.fractions(), &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn policy_names_parse() {
        assert_eq!("PR".parse::<PolicyKind>().unwrap(), PolicyKind::Pr);
        assert_eq!("cs".parse::<PolicyKind>().unwrap(), PolicyKind::Cs);
        assert!("xx".parse::<PolicyKind>().is_err());
    }
}
