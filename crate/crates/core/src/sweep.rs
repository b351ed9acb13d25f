//! Parameter sweeps with resumable, byte-stable CSV output.
//!
//! A [`SweepPlan`] spans a row-major cartesian grid over momentum and
//! physical-parameter axes and runs a fixed set of analyses at every
//! point. Rows are computed in parallel but written strictly in grid
//! order and flushed one at a time, so an interrupted sweep leaves a
//! valid file prefix; rerunning the same plan resumes after the last
//! complete row. All floats go through the fixed formatter, which makes
//! repeated runs byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homographic::{self, HomographicClass, HomographicError};
use crate::manifold::{self, CollisionTopology, EquilibriumKind};
use crate::outfmt;
use crate::params::PhysicalParams;

const MAGIC: &str = "# manev sweep v1";
const MAX_GRID_POINTS: usize = 10_000_000;

/// One sweep axis: `count` evenly spaced values from `start` to `stop`
/// inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    fn value_at(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.start
        } else {
            self.start + (self.stop - self.start) * (i as f64) / ((self.count - 1) as f64)
        }
    }
}

/// What an axis varies: the angular momentum or one physical parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisName {
    #[serde(rename = "C")]
    C,
    #[serde(rename = "G")]
    G,
    #[serde(rename = "M")]
    MOuter,
    #[serde(rename = "m")]
    MMiddle,
    #[serde(rename = "gamma0")]
    Gamma0,
    #[serde(rename = "gamma")]
    Gamma,
}

impl AxisName {
    fn column(&self) -> &'static str {
        match self {
            AxisName::C => "C",
            AxisName::G => "G",
            AxisName::MOuter => "M",
            AxisName::MMiddle => "m",
            AxisName::Gamma0 => "gamma0",
            AxisName::Gamma => "gamma",
        }
    }
}

/// Analyses run at every grid point, each contributing a column block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Classify,
    Equilibria,
    Spectra,
    Homographic,
}

fn default_schema_version() -> u32 {
    1
}

fn default_energy() -> f64 {
    -1.0
}

/// A full sweep description; serialized into the output preamble so a
/// resumed run can prove it continues the same sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    /// Base parameters; axes override individual fields per point.
    pub params: PhysicalParams,
    pub axes: Vec<Axis>,
    pub analyses: Vec<Analysis>,
    /// Energy level used by the homographic block.
    #[serde(default = "default_energy")]
    pub h: f64,
    /// Default output path, overridable by the caller.
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("writing a sweep row failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("existing output {path} was produced by a different plan")]
    PlanMismatch { path: PathBuf },
    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),
    #[error("a sweep worker stopped before finishing")]
    WorkerStopped,
}

/// Counts reported after a sweep finishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SweepSummary {
    pub total_rows: usize,
    pub resumed_rows: usize,
    pub computed_rows: usize,
}

fn validate_plan(plan: &SweepPlan) -> Result<usize, SweepError> {
    if plan.schema_version != 1 {
        return Err(SweepError::InvalidPlan(format!(
            "unsupported schema_version {}",
            plan.schema_version
        )));
    }
    let mut total = 1usize;
    for axis in &plan.axes {
        if axis.count == 0 {
            return Err(SweepError::InvalidPlan(format!(
                "axis {} has count 0",
                axis.name.column()
            )));
        }
        if !axis.start.is_finite() || !axis.stop.is_finite() {
            return Err(SweepError::InvalidPlan(format!(
                "axis {} has a non-finite endpoint",
                axis.name.column()
            )));
        }
        total = total.saturating_mul(axis.count);
    }
    if total > MAX_GRID_POINTS {
        return Err(SweepError::InvalidPlan(format!(
            "grid has {total} points, more than the limit of {MAX_GRID_POINTS}"
        )));
    }
    Ok(total)
}

/// Splits a row index into per-axis values, last axis fastest, and
/// materializes the parameters and momentum at that point.
fn materialize(plan: &SweepPlan, index: usize) -> (Vec<f64>, Result<PhysicalParams, String>, f64) {
    let mut values = vec![0.0; plan.axes.len()];
    let mut rem = index;
    for (slot, axis) in plan.axes.iter().enumerate().rev() {
        values[slot] = axis.value_at(rem % axis.count);
        rem /= axis.count;
    }
    let mut p = plan.params;
    let mut c = 0.0;
    for (axis, &value) in plan.axes.iter().zip(values.iter()) {
        match axis.name {
            AxisName::C => c = value,
            AxisName::G => p.g = value,
            AxisName::MOuter => p.m_outer = value,
            AxisName::MMiddle => p.m_middle = value,
            AxisName::Gamma0 => p.gamma0 = value,
            AxisName::Gamma => p.gamma = value,
        }
    }
    let params = p.revalidate().map_err(|e| e.to_string());
    (values, params, c)
}

fn block_columns(analysis: Analysis) -> &'static [&'static str] {
    match analysis {
        Analysis::Classify => &["class", "threshold_low", "threshold_high"],
        Analysis::Equilibria => &["n_interior", "e_points_exist"],
        Analysis::Spectra => &[
            "p_lambda1",
            "p_pair_re",
            "p_pair_im",
            "e_lambda1",
            "e_pair_re",
            "e_pair_im",
        ],
        Analysis::Homographic => &["homo_class", "rest_radius", "period_sigma"],
    }
}

fn header_columns(plan: &SweepPlan) -> Vec<&'static str> {
    let mut cols = vec!["index"];
    cols.extend(plan.axes.iter().map(|a| a.name.column()));
    for analysis in &plan.analyses {
        cols.extend_from_slice(block_columns(*analysis));
    }
    cols.push("error");
    cols
}

fn topology_name(class: CollisionTopology) -> &'static str {
    match class {
        CollisionTopology::SphereMinusFourPoints => "SphereMinusFourPoints",
        CollisionTopology::SpherePlusTwoLines => "SpherePlusTwoLines",
        CollisionTopology::PointPlusTwoLines => "PointPlusTwoLines",
        CollisionTopology::TwoLinesOnly => "TwoLinesOnly",
    }
}

fn homographic_name(class: HomographicClass) -> &'static str {
    match class {
        HomographicClass::Periodic => "Periodic",
        HomographicClass::EjectionCollision => "EjectionCollision",
        HomographicClass::Unbounded => "Unbounded",
        HomographicClass::Equilibrium => "Equilibrium",
    }
}

fn push_empty(fields: &mut Vec<String>, n: usize) {
    fields.extend(std::iter::repeat_with(String::new).take(n));
}

fn append_block(
    fields: &mut Vec<String>,
    error: &mut String,
    params: &PhysicalParams,
    h: f64,
    c: f64,
    analysis: Analysis,
) {
    match analysis {
        Analysis::Classify => {
            let tc = manifold::classify(params, c);
            fields.push(topology_name(tc.class).to_string());
            fields.push(outfmt::fmt_f64(tc.thresholds.0));
            fields.push(outfmt::fmt_f64(tc.thresholds.1));
        }
        Analysis::Equilibria => {
            let census = manifold::equilibria(params, c);
            let n_interior = census.iter().filter(|e| e.kind.is_interior()).count();
            let e_exist = census.iter().any(|e| e.kind == EquilibriumKind::E1Plus);
            fields.push(n_interior.to_string());
            fields.push(if e_exist { "true" } else { "false" }.to_string());
        }
        Analysis::Spectra => {
            let census = manifold::equilibria_with_spectra(params, h, c);
            let spectrum_of = |kind: EquilibriumKind| {
                census
                    .iter()
                    .find(|e| e.kind == kind)
                    .and_then(|e| e.spectrum)
            };
            match spectrum_of(EquilibriumKind::PPlus) {
                Some(spec) => {
                    // The oscillatory pair cancels in the real-part sum,
                    // leaving the lead eigenvalue.
                    let lambda1: f64 = spec.closed.iter().map(|e| e.re).sum();
                    let pair = spec
                        .closed
                        .iter()
                        .max_by(|a, b| a.im.total_cmp(&b.im))
                        .copied()
                        .unwrap_or_default();
                    fields.push(outfmt::fmt_f64(lambda1));
                    fields.push(outfmt::fmt_f64(pair.re));
                    fields.push(outfmt::fmt_f64(pair.im));
                }
                None => push_empty(fields, 3),
            }
            match spectrum_of(EquilibriumKind::E1Plus) {
                Some(spec) => {
                    let lambda1: f64 = spec.closed.iter().map(|e| e.re).sum();
                    let pair = Complex64::new(manifold::e_point_a(params, c), 0.0).sqrt();
                    fields.push(outfmt::fmt_f64(lambda1));
                    fields.push(outfmt::fmt_f64(pair.re));
                    fields.push(outfmt::fmt_f64(pair.im));
                }
                None => push_empty(fields, 3),
            }
        }
        Analysis::Homographic => match homographic::analyze(params, h, c) {
            Ok(report) => {
                fields.push(homographic_name(report.classification).to_string());
                fields.push(report.rest_radius.map(outfmt::fmt_f64).unwrap_or_default());
                fields.push(report.period_sigma.map(outfmt::fmt_f64).unwrap_or_default());
            }
            Err(HomographicError::MotionImpossible { .. }) => {
                fields.push("MotionImpossible".to_string());
                push_empty(fields, 2);
            }
            Err(e) => {
                push_empty(fields, 3);
                *error = e.to_string();
            }
        },
    }
}

fn compute_row(plan: &SweepPlan, index: usize) -> Vec<String> {
    let (values, params, c) = materialize(plan, index);
    let mut fields = Vec::new();
    fields.push(index.to_string());
    fields.extend(values.iter().map(|&v| outfmt::fmt_f64(v)));
    let n_analysis_cols: usize = plan
        .analyses
        .iter()
        .map(|a| block_columns(*a).len())
        .sum();
    match params {
        Err(msg) => {
            push_empty(&mut fields, n_analysis_cols);
            fields.push(format!("invalid parameters: {msg}"));
        }
        Ok(p) => {
            let mut error = String::new();
            for analysis in &plan.analyses {
                append_block(&mut fields, &mut error, &p, plan.h, c, *analysis);
            }
            fields.push(error);
        }
    }
    fields
}

/// Opens or creates the output file, checks an existing preamble against
/// the plan, and returns the file positioned after the last complete row
/// together with the number of rows already present.
fn open_for_resume(
    out_path: &Path,
    plan_line: &str,
    header_line: &str,
    total: usize,
) -> Result<(fs::File, usize), SweepError> {
    let fresh = !out_path.exists() || fs::metadata(out_path)?.len() == 0;
    if fresh {
        let mut file = fs::File::create(out_path)?;
        file.write_all(MAGIC.as_bytes())?;
        file.write_all(b"\n")?;
        file.write_all(plan_line.as_bytes())?;
        file.write_all(b"\n")?;
        file.write_all(header_line.as_bytes())?;
        file.write_all(b"\n")?;
        file.flush()?;
        return Ok((file, 0));
    }
    let content = fs::read_to_string(out_path)?;
    let mismatch = || SweepError::PlanMismatch {
        path: out_path.to_path_buf(),
    };
    let mut rest = content.as_str();
    let mut offset = 0usize;
    for expected in [MAGIC, plan_line, header_line] {
        let Some(end) = rest.find('\n') else {
            return Err(mismatch());
        };
        if &rest[..end] != expected {
            return Err(mismatch());
        }
        offset += end + 1;
        rest = &rest[end + 1..];
    }
    let mut rows = 0usize;
    while let Some(end) = rest.find('\n') {
        rows += 1;
        offset += end + 1;
        rest = &rest[end + 1..];
    }
    if rows > total {
        return Err(mismatch());
    }
    let mut file = fs::OpenOptions::new().write(true).open(out_path)?;
    file.set_len(offset as u64)?;
    file.seek(SeekFrom::Start(offset as u64))?;
    Ok((file, rows))
}

/// Runs a sweep into `out_path` on `workers` threads, resuming any
/// existing partial output of the same plan.
pub fn run_sweep(
    plan: &SweepPlan,
    out_path: &Path,
    workers: usize,
) -> Result<SweepSummary, SweepError> {
    let total = validate_plan(plan)?;
    let plan_line = format!("# plan: {}", outfmt::to_json(plan));
    let header_line = header_columns(plan).join(",");
    let (file, resumed_rows) = open_for_resume(out_path, &plan_line, &header_line, total)?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);

    if resumed_rows < total {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| SweepError::InvalidPlan(e.to_string()))?;
        let (tx, rx) = mpsc::channel::<(usize, Vec<String>)>();
        pool.in_place_scope(|scope| -> Result<(), SweepError> {
            scope.spawn(move |_| {
                (resumed_rows..total)
                    .into_par_iter()
                    .for_each_with(tx, |tx, index| {
                        let _ = tx.send((index, compute_row(plan, index)));
                    });
            });
            let mut pending: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            let mut next = resumed_rows;
            while next < total {
                let (index, row) = rx.recv().map_err(|_| SweepError::WorkerStopped)?;
                pending.insert(index, row);
                while let Some(row) = pending.remove(&next) {
                    writer.write_record(&row)?;
                    writer.flush()?;
                    next += 1;
                }
            }
            Ok(())
        })?;
    }
    writer.flush()?;
    Ok(SweepSummary {
        total_rows: total,
        resumed_rows,
        computed_rows: total - resumed_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_plan() -> SweepPlan {
        SweepPlan {
            schema_version: 1,
            params: PhysicalParams::default(),
            axes: vec![Axis {
                name: AxisName::C,
                start: 0.0,
                stop: 60.0,
                count: 5,
            }],
            analyses: vec![Analysis::Classify, Analysis::Equilibria],
            h: -1.0,
            output: None,
        }
    }

    fn read_rows(path: &Path) -> Vec<String> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .skip(3)
            .map(str::to_string)
            .collect()
    }

    #[test]
    fn the_grid_is_row_major_with_the_last_axis_fastest() {
        let mut plan = base_plan();
        plan.axes = vec![
            Axis {
                name: AxisName::MOuter,
                start: 10.0,
                stop: 11.0,
                count: 2,
            },
            Axis {
                name: AxisName::C,
                start: 0.0,
                stop: 2.0,
                count: 3,
            },
        ];
        let expect = [
            (10.0, 0.0),
            (10.0, 1.0),
            (10.0, 2.0),
            (11.0, 0.0),
            (11.0, 1.0),
            (11.0, 2.0),
        ];
        for (index, (m, c)) in expect.iter().enumerate() {
            let (values, params, c_got) = materialize(&plan, index);
            assert_eq!(values, vec![*m, *c]);
            assert_eq!(params.unwrap().m_outer, *m);
            assert_eq!(c_got, *c);
        }
    }

    #[test]
    fn a_single_valued_axis_uses_its_start() {
        let axis = Axis {
            name: AxisName::C,
            start: 7.0,
            stop: 100.0,
            count: 1,
        };
        assert_eq!(axis.value_at(0), 7.0);
    }

    #[test]
    fn a_sweep_writes_preamble_header_and_all_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let plan = base_plan();
        let summary = run_sweep(&plan, &path, 2).unwrap();
        assert_eq!(summary.total_rows, 5);
        assert_eq!(summary.computed_rows, 5);
        let content = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = content.lines().collect();
        assert_eq!(lines[0], MAGIC);
        assert!(lines[1].starts_with("# plan: {"));
        assert_eq!(
            lines[2],
            "index,C,class,threshold_low,threshold_high,n_interior,e_points_exist,error"
        );
        assert_eq!(lines.len(), 3 + 5);
        assert!(lines[3].starts_with("0,0.00000000000e0,SphereMinusFourPoints"));
        assert!(lines[7].starts_with("4,6.00000000000e1,TwoLinesOnly"));
    }

    #[test]
    fn reruns_and_worker_counts_do_not_change_the_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let mut plan = base_plan();
        plan.analyses = vec![
            Analysis::Classify,
            Analysis::Equilibria,
            Analysis::Spectra,
            Analysis::Homographic,
        ];
        plan.axes[0].count = 9;
        plan.axes[0].stop = 240.0;
        run_sweep(&plan, &a, 1).unwrap();
        run_sweep(&plan, &b, 4).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        let summary = run_sweep(&plan, &a, 4).unwrap();
        assert_eq!(summary.computed_rows, 0);
        assert_eq!(summary.resumed_rows, 9);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn a_truncated_file_resumes_to_the_identical_result() {
        let dir = tempfile::tempdir().unwrap();
        let full = dir.path().join("full.csv");
        let cut = dir.path().join("cut.csv");
        let plan = base_plan();
        run_sweep(&plan, &full, 2).unwrap();
        let bytes = fs::read(&full).unwrap();
        // Cut in the middle of the fourth data row.
        let mut newlines = 0usize;
        let mut cut_at = bytes.len();
        for (i, &b) in bytes.iter().enumerate() {
            if b == b'\n' {
                newlines += 1;
                if newlines == 6 {
                    cut_at = i + 20.min(bytes.len() - i - 1);
                    break;
                }
            }
        }
        fs::write(&cut, &bytes[..cut_at]).unwrap();
        let summary = run_sweep(&plan, &cut, 2).unwrap();
        assert_eq!(summary.resumed_rows, 3);
        assert_eq!(summary.computed_rows, 2);
        assert_eq!(fs::read(&cut).unwrap(), bytes);
    }

    #[test]
    fn a_different_plan_is_rejected_on_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let plan = base_plan();
        run_sweep(&plan, &path, 1).unwrap();
        let mut other = plan.clone();
        other.axes[0].count = 7;
        let err = run_sweep(&other, &path, 1).unwrap_err();
        assert!(matches!(err, SweepError::PlanMismatch { .. }));
    }

    #[test]
    fn spectra_columns_are_empty_outside_the_windows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut plan = base_plan();
        plan.analyses = vec![Analysis::Spectra];
        plan.axes = vec![Axis {
            name: AxisName::C,
            start: 40.0,
            stop: 60.0,
            count: 2,
        }];
        run_sweep(&plan, &path, 1).unwrap();
        let rows = read_rows(&path);
        let at_40: Vec<&str> = rows[0].split(',').collect();
        assert!(!at_40[2].is_empty(), "P block filled at C = 40");
        assert!(at_40[5].is_empty(), "E block empty at C = 40");
        let at_60: Vec<&str> = rows[1].split(',').collect();
        assert!(at_60[2].is_empty(), "P block empty at C = 60");
        assert!(at_60[5].is_empty(), "E block empty at C = 60");
    }

    #[test]
    fn invalid_grid_points_carry_an_error_and_empty_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut plan = base_plan();
        // gamma = 1/32 violates the regime bound 16*gamma > gamma0.
        plan.axes = vec![Axis {
            name: AxisName::Gamma,
            start: 1.0 / 32.0,
            stop: 3.0,
            count: 2,
        }];
        run_sweep(&plan, &path, 1).unwrap();
        let rows = read_rows(&path);
        let bad: Vec<&str> = rows[0].split(',').collect();
        assert!(bad[2].is_empty());
        assert!(rows[0].contains("invalid parameters"));
        let good: Vec<&str> = rows[1].split(',').collect();
        assert_eq!(good[2], "SphereMinusFourPoints");
    }

    #[test]
    fn zero_count_axes_are_rejected() {
        let mut plan = base_plan();
        plan.axes[0].count = 0;
        let dir = tempfile::tempdir().unwrap();
        let err = run_sweep(&plan, &dir.path().join("out.csv"), 1).unwrap_err();
        assert!(matches!(err, SweepError::InvalidPlan(_)));
    }

    #[test]
    fn homographic_block_reports_the_impossible_band() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut plan = base_plan();
        plan.analyses = vec![Analysis::Homographic];
        plan.axes = vec![Axis {
            name: AxisName::C,
            start: 100.0,
            stop: 300.0,
            count: 2,
        }];
        run_sweep(&plan, &path, 1).unwrap();
        let rows = read_rows(&path);
        assert!(rows[0].split(',').nth(2).unwrap() == "Periodic");
        assert!(rows[1].split(',').nth(2).unwrap() == "MotionImpossible");
    }

    #[test]
    fn plan_json_round_trips_with_defaults() {
        let text = r#"{
            "params": {"G": 1.0, "M": 10.0, "m": 1.0, "gamma0": 1.0, "gamma": 3.0},
            "axes": [{"name": "C", "start": 0.0, "stop": 60.0, "count": 5}],
            "analyses": ["classify", "equilibria"]
        }"#;
        let plan: SweepPlan = serde_json::from_str(text).unwrap();
        assert_eq!(plan.schema_version, 1);
        assert_eq!(plan.h, -1.0);
        assert_eq!(plan.axes[0].name, AxisName::C);
        let round: SweepPlan = serde_json::from_str(&outfmt::to_json(&plan)).unwrap();
        assert_eq!(round, plan);
    }
}
