//! Deviation statistics and CSV persistence.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::engine::{Level, WindowRecord};
use crate::model::EntityId;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no records to summarize")]
    EmptyTable,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

/// Absolute difference between demand and grant.
pub fn deviation(demand_mhz: f64, grant_mhz: f64) -> f64 {
    (demand_mhz - grant_mhz).abs()
}

pub const RECORD_HEADER: [&str; 12] = [
    "run_id",
    "seed",
    "policy",
    "level",
    "entity",
    "axis_name",
    "axis_value",
    "window",
    "demand_mhz",
    "grant_mhz",
    "deviation_mhz",
    "case_label",
];

pub const SUMMARY_HEADER: [&str; 8] = [
    "axis_name",
    "axis_value",
    "policy",
    "level",
    "entity",
    "window_count",
    "mean_deviation_mhz",
    "std_deviation_mhz",
];

/// Pseudo-entity holding the per-window mean over SI-I and SI-II.
pub const SI_AVERAGE: &str = "SI-avg";

/// A [`WindowRecord`] with the run it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub run_id: String,
    pub seed: u64,
    pub axis_name: String,
    pub axis_value: String,
    pub record: WindowRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSummary {
    pub axis_name: String,
    pub axis_value: String,
    pub policy: String,
    pub level: String,
    pub entity: String,
    pub window_count: u64,
    pub mean_deviation_mhz: f64,
    pub std_deviation_mhz: f64,
}

impl DeviationSummary {
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.std_deviation_mhz / (self.window_count as f64).sqrt()
    }
}

/// Which record fields form a summary group. Fields left out are blank in
/// the summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupBy {
    pub axis: bool,
    pub policy: bool,
    pub level: bool,
    pub entity: bool,
}

impl Default for GroupBy {
    fn default() -> Self {
        Self {
            axis: true,
            policy: true,
            level: true,
            entity: true,
        }
    }
}

/// Orders numbers numerically and everything else lexically.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    let semantic = match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => match (a.parse::<EntityId>(), b.parse::<EntityId>()) {
            (Ok(x), Ok(y)) => x.cmp(&y),
            _ => Ordering::Equal,
        },
    };
    semantic.then_with(|| a.cmp(b))
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct GroupKey([String; 5]);

impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| natural_cmp(a, b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn key_for(row: &RecordRow, by: GroupBy, entity: &str) -> GroupKey {
    let pick = |on: bool, v: String| if on { v } else { String::new() };
    GroupKey([
        pick(by.axis, row.axis_name.clone()),
        pick(by.axis, row.axis_value.clone()),
        pick(by.policy, row.record.policy.to_string()),
        pick(by.level, row.record.level.to_string()),
        pick(by.entity, entity.to_string()),
    ])
}

fn finish(groups: BTreeMap<GroupKey, Vec<f64>>) -> Vec<DeviationSummary> {
    groups
        .into_iter()
        .map(
            |(GroupKey([axis_name, axis_value, policy, level, entity]), mut values)| {
                // sorted summation keeps the result independent of row order
                values.sort_by(f64::total_cmp);
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
                sq.sort_by(f64::total_cmp);
                let std = if values.len() > 1 {
                    (sq.iter().sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                DeviationSummary {
                    axis_name,
                    axis_value,
                    policy,
                    level,
                    entity,
                    window_count: values.len() as u64,
                    mean_deviation_mhz: mean,
                    std_deviation_mhz: std,
                }
            },
        )
        .collect()
}

/// Attaches run identity and sweep coordinates to raw window records.
pub fn tag_records(
    records: &[WindowRecord],
    run_id: &str,
    seed: u64,
    axis_name: &str,
    axis_value: &str,
) -> Vec<RecordRow> {
    records
        .iter()
        .map(|r| RecordRow {
            run_id: run_id.to_string(),
            seed,
            axis_name: axis_name.to_string(),
            axis_value: axis_value.to_string(),
            record: r.clone(),
        })
        .collect()
}

/// Mean and sample standard deviation of the deviation per group, ordered
/// by group key.
pub fn summarize(rows: &[RecordRow], by: GroupBy) -> Result<Vec<DeviationSummary>, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyTable);
    }
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for row in rows {
        groups
            .entry(key_for(row, by, &row.record.entity.to_string()))
            .or_default()
            .push(row.record.deviation_mhz);
    }
    Ok(finish(groups))
}

/// Run, axis name, axis value, policy and window.
type WindowKey = (String, String, String, String, u64);

/// Summaries of the per-window mean deviation over the two slices, reported
/// under the entity [`SI_AVERAGE`].
pub fn summarize_si_average(
    rows: &[RecordRow],
    by: GroupBy,
) -> Result<Vec<DeviationSummary>, MetricsError> {
    let mut per_window: BTreeMap<WindowKey, (f64, u32, GroupKey)> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.record.level == Level::Inter) {
        let r = &row.record;
        let slot = per_window
            .entry((
                row.run_id.clone(),
                row.axis_name.clone(),
                row.axis_value.clone(),
                r.policy.to_string(),
                r.window,
            ))
            .or_insert_with(|| (0.0, 0, key_for(row, by, SI_AVERAGE)));
        slot.0 += r.deviation_mhz;
        slot.1 += 1;
    }
    if per_window.is_empty() {
        return Err(MetricsError::EmptyTable);
    }
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for (sum, count, key) in per_window.into_values() {
        groups.entry(key).or_default().push(sum / f64::from(count));
    }
    Ok(finish(groups))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MetricsError + '_ {
    move |source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), MetricsError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

fn fmt_mhz(v: f64) -> String {
    format!("{v:.9}")
}

pub fn records_to_csv(rows: &[RecordRow]) -> Result<Vec<u8>, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_HEADER)?;
    for row in rows {
        let r = &row.record;
        w.write_record([
            row.run_id.as_str(),
            &row.seed.to_string(),
            r.policy.as_str(),
            r.level.as_str(),
            &r.entity.to_string(),
            &row.axis_name,
            &row.axis_value,
            &r.window.to_string(),
            &fmt_mhz(r.demand_mhz),
            &fmt_mhz(r.grant_mhz),
            &fmt_mhz(r.deviation_mhz),
            r.case_label.as_str(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| MetricsError::Csv(e.into_error().into()))
}

pub fn summaries_to_csv(summaries: &[DeviationSummary]) -> Result<Vec<u8>, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        w.write_record([
            s.axis_name.as_str(),
            &s.axis_value,
            &s.policy,
            &s.level,
            &s.entity,
            &s.window_count.to_string(),
            &fmt_mhz(s.mean_deviation_mhz),
            &fmt_mhz(s.std_deviation_mhz),
        ])?;
    }
    w.into_inner()
        .map_err(|e| MetricsError::Csv(e.into_error().into()))
}

pub fn write_records_csv(rows: &[RecordRow], path: &Path) -> Result<(), MetricsError> {
    write_atomic(path, &records_to_csv(rows)?)
}

pub fn write_summary_csv(summaries: &[DeviationSummary], path: &Path) -> Result<(), MetricsError> {
    write_atomic(path, &summaries_to_csv(summaries)?)
}

fn check_header(
    rdr: &mut csv::Reader<impl std::io::Read>,
    expected: &[&str],
) -> Result<(), MetricsError> {
    let header = rdr.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(MetricsError::Parse {
            line: 1,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<T, MetricsError>
where
    T::Err: std::fmt::Display,
{
    let line = rec.position().map_or(0, |p| p.line());
    rec.get(idx)
        .ok_or_else(|| MetricsError::Parse {
            line,
            message: format!("missing column {name}"),
        })?
        .parse()
        .map_err(|e: T::Err| MetricsError::Parse {
            line,
            message: format!("column {name}: {e}"),
        })
}

pub fn read_records_csv(path: &Path) -> Result<Vec<RecordRow>, MetricsError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(file);
    check_header(&mut rdr, &RECORD_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(RecordRow {
            run_id: field(&rec, 0, "run_id")?,
            seed: field(&rec, 1, "seed")?,
            axis_name: field(&rec, 5, "axis_name")?,
            axis_value: field(&rec, 6, "axis_value")?,
            record: WindowRecord {
                policy: field(&rec, 2, "policy")?,
                level: field(&rec, 3, "level")?,
                entity: field(&rec, 4, "entity")?,
                window: field(&rec, 7, "window")?,
                demand_mhz: field(&rec, 8, "demand_mhz")?,
                grant_mhz: field(&rec, 9, "grant_mhz")?,
                deviation_mhz: field(&rec, 10, "deviation_mhz")?,
                case_label: field(&rec, 11, "case_label")?,
            },
        });
    }
    Ok(rows)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<DeviationSummary>, MetricsError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(file);
    check_header(&mut rdr, &SUMMARY_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(DeviationSummary {
                axis_name: field(&rec, 0, "axis_name")?,
                axis_value: field(&rec, 1, "axis_value")?,
                policy: field(&rec, 2, "policy")?,
                level: field(&rec, 3, "level")?,
                entity: field(&rec, 4, "entity")?,
                window_count: field(&rec, 5, "window_count")?,
                mean_deviation_mhz: field(&rec, 6, "mean_deviation_mhz")?,
                std_deviation_mhz: field(&rec, 7, "std_deviation_mhz")?,
            })
        })
        .collect()
}
