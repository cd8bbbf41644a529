//! Traffic load estimation and the load-to-spectrum mapping for both slices.
//!
//! SI-I load is a fixed part plus a uniform draw. SI-II load is estimated per
//! MNO, either in closed form (`users * activity * usage * rate`, weighted by
//! class priority) or by sampling a class for every active user.

use rand::Rng;

use crate::model::{
    DemandVector, EntityId, MnoProfile, ModelError, ServiceClass, Si1TrafficModel, UserCount,
};

/// Spectral efficiency in bps/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEfficiency(f64);

impl SpectralEfficiency {
    pub fn new(eta_bps_per_hz: f64) -> Result<Self, ModelError> {
        if eta_bps_per_hz.is_finite() && eta_bps_per_hz > 0.0 {
            Ok(Self(eta_bps_per_hz))
        } else {
            Err(ModelError::InvalidTrafficModel(format!(
                "spectral efficiency must be positive, got {eta_bps_per_hz}"
            )))
        }
    }

    /// BPSK with one-to-one mapping: 1 bps/Hz.
    pub fn bpsk() -> Self {
        Self(1.0)
    }

    pub fn get(&self) -> f64 {
        self.0
    }
}

impl Default for SpectralEfficiency {
    fn default() -> Self {
        Self::bpsk()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub entity: EntityId,
    pub load_mbps: f64,
    /// Weighted contribution of each service class, when the load was
    /// built per class. `load_mbps` is their sum.
    pub per_class_mbps: Option<Vec<f64>>,
}

/// SI-I load for one window: `fixed + U[low, high]`.
pub fn sample_si1_load<R: Rng + ?Sized>(model: &Si1TrafficModel, rng: &mut R) -> LoadReport {
    let low = model.uniform_low_mbps();
    let span = model.uniform_high_mbps() - low;
    let u: f64 = rng.random();
    LoadReport {
        entity: EntityId::SiI,
        load_mbps: model.fixed_mbps() + low + span * u,
        per_class_mbps: None,
    }
}

/// Closed-form load of one class: `(u * alpha) * beta_s * delta_s`.
///
/// A ranged user count contributes its mean.
pub fn mno_class_load(profile: &MnoProfile, class_index: usize, class: &ServiceClass) -> f64 {
    profile.users().expected()
        * profile.activity_factor()
        * profile.usage_pattern()[class_index]
        * class.rate_mbps()
}

/// Closed-form MNO load `sum_s omega_s * R_{q,s}`.
///
/// `classes` must be index-aligned with the profile's usage pattern.
pub fn mno_load(entity: EntityId, profile: &MnoProfile, classes: &[ServiceClass]) -> LoadReport {
    assert_eq!(
        classes.len(),
        profile.usage_pattern().len(),
        "class table and usage pattern differ in length"
    );
    let per_class: Vec<f64> = classes
        .iter()
        .enumerate()
        .map(|(s, class)| class.weight() * mno_class_load(profile, s, class))
        .collect();
    LoadReport {
        entity,
        load_mbps: per_class.iter().sum(),
        per_class_mbps: Some(per_class),
    }
}

/// Users present in a window. A range is sampled as `1 + floor(U * max)`,
/// which is monotone in `max` for a fixed draw.
pub fn draw_user_count<R: Rng + ?Sized>(users: UserCount, rng: &mut R) -> u32 {
    match users {
        UserCount::Fixed(u) => u,
        UserCount::Range { max } => {
            let u: f64 = rng.random();
            1 + ((u * f64::from(max)) as u32).min(max - 1)
        }
    }
}

/// Active users among `users`: `u * alpha` rounded down or up at random so
/// that the expectation is exactly `u * alpha`.
pub fn draw_active_users<R: Rng + ?Sized>(users: u32, activity_factor: f64, rng: &mut R) -> u32 {
    let expected = f64::from(users) * activity_factor;
    let whole = expected.floor();
    let round_up: f64 = rng.random();
    whole as u32 + u32::from(round_up < expected - whole)
}

fn pick_class(pattern: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in pattern.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    pattern.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Sampled MNO load: every active user draws a class from the usage pattern
/// and contributes `omega * delta` of that class.
pub fn sample_mno_load<R: Rng + ?Sized>(
    entity: EntityId,
    profile: &MnoProfile,
    classes: &[ServiceClass],
    rng: &mut R,
) -> LoadReport {
    assert_eq!(
        classes.len(),
        profile.usage_pattern().len(),
        "class table and usage pattern differ in length"
    );
    let users = draw_user_count(profile.users(), rng);
    let active = draw_active_users(users, profile.activity_factor(), rng);
    let mut per_class = vec![0.0; classes.len()];
    for _ in 0..active {
        let s = pick_class(profile.usage_pattern(), rng.random());
        per_class[s] += classes[s].weight() * classes[s].rate_mbps();
    }
    LoadReport {
        entity,
        load_mbps: per_class.iter().sum(),
        per_class_mbps: Some(per_class),
    }
}

/// Spectrum demand in MHz for a load in Mbps.
pub fn map_load_to_spectrum(load_mbps: f64, eta: SpectralEfficiency) -> f64 {
    load_mbps / eta.get()
}

/// Per-MNO demands and their SI-II total.
pub fn aggregate_si2_demand(
    reports: &[LoadReport],
    eta: SpectralEfficiency,
) -> Result<(DemandVector, f64), ModelError> {
    let demands = DemandVector::new(
        reports
            .iter()
            .map(|r| map_load_to_spectrum(r.load_mbps, eta))
            .collect(),
    )?;
    let total = demands.total();
    Ok((demands, total))
}
