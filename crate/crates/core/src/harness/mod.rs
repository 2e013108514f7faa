//! Contingency sweeps, CCDFs, the case-study driver and batch theorem checks.

mod experiment;
pub mod generate;
mod verify;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acflow::{AcBase, AcCase, AcOptions};
use crate::caseio::{LodfRecord, Model, RecordStatus};
use crate::dcsens::DcSensitivity;
use crate::error::{Error, Result};
use crate::interfaces::{LinePartition, PairClass, TieLineEdit};
use crate::netmodel::{LineId, NetworkModel};

pub use experiment::{
    build_scenarios, run_experiment, ClassSummary, DominanceCheck, ExperimentReport, SUMMARY_THRESHOLDS,
};
pub use verify::{check_joint, verify_theorems, JointReproducer, PropertyReport, TheoremCounts, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Original,
    Series,
    Parallel,
    Bipartite,
    BipartiteRank1,
    Custom,
}

impl ScenarioKind {
    pub fn from_name(name: &str) -> Self {
        match name {
            "original" => ScenarioKind::Original,
            "series" => ScenarioKind::Series,
            "parallel" => ScenarioKind::Parallel,
            "bipartite" => ScenarioKind::Bipartite,
            "bipartite-rank1" => ScenarioKind::BipartiteRank1,
            _ => ScenarioKind::Custom,
        }
    }
}

/// A network variant to sweep.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub net: NetworkModel,
    pub partition: LinePartition,
    pub ac: Option<AcCase>,
    /// Edits applied to the base case.
    pub provenance: TieLineEdit,
}

impl Scenario {
    pub fn new(name: &str, net: NetworkModel, partition: LinePartition) -> Result<Self> {
        let components = net.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(Scenario {
            name: name.to_string(),
            kind: ScenarioKind::from_name(name),
            net,
            partition,
            ac: None,
            provenance: TieLineEdit::default(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairFilter {
    Cross,
    Within,
    All,
}

impl PairFilter {
    pub fn accepts(self, class: PairClass) -> bool {
        match self {
            PairFilter::All => true,
            PairFilter::Cross => class == PairClass::Cross,
            PairFilter::Within => class == PairClass::Within,
        }
    }
}

/// Sweep settings for the AC model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcSweepOptions {
    pub solver: AcOptions,
    /// Minimum |from-end real flow| on a tripped line.
    pub min_flow: f64,
}

impl Default for AcSweepOptions {
    fn default() -> Self {
        AcSweepOptions {
            solver: AcOptions::default(),
            min_flow: 1e-3,
        }
    }
}

fn pairs_for(scenario: &Scenario, filter: PairFilter, tripped: LineId) -> Vec<LineId> {
    scenario
        .net
        .line_ids()
        .filter(|&m| m != tripped && filter.accepts(scenario.partition.classify(tripped, m)))
        .collect()
}

fn sorted_lines(net: &NetworkModel) -> Vec<LineId> {
    let mut ids: Vec<LineId> = net.line_ids().collect();
    ids.sort_unstable();
    ids
}

fn record(scenario: &Scenario, model: Model, tripped: LineId, monitored: LineId, lodf: Option<f64>, status: RecordStatus) -> LodfRecord {
    LodfRecord {
        scenario: scenario.name.clone(),
        tripped: tripped.0,
        monitored: monitored.0,
        model,
        lodf,
        status,
    }
}

/// DC LODF for every ordered (tripped, monitored) pair passing `filter`.
/// Tripped bridges yield `bridge` rows without a value.
pub fn sweep_dc(scenario: &Scenario, filter: PairFilter) -> Result<Vec<LodfRecord>> {
    let sens = DcSensitivity::new(&scenario.net)?;
    let rows: Vec<Result<Vec<LodfRecord>>> = sorted_lines(&scenario.net)
        .into_par_iter()
        .map(|tripped| {
            let bridge = sens.bridges().contains(&tripped);
            pairs_for(scenario, filter, tripped)
                .into_iter()
                .map(|monitored| {
                    if bridge {
                        Ok(record(scenario, Model::Dc, tripped, monitored, None, RecordStatus::Bridge))
                    } else {
                        let k = sens.lodf(monitored, tripped)?;
                        Ok(record(scenario, Model::Dc, tripped, monitored, Some(k), RecordStatus::Ok))
                    }
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// AC LODF sweep. The base case must solve; per-outage failures become
/// `censored` rows and weakly loaded tripped lines `below-threshold` rows.
pub fn sweep_ac(scenario: &Scenario, filter: PairFilter, options: &AcSweepOptions) -> Result<Vec<LodfRecord>> {
    let case = scenario
        .ac
        .clone()
        .ok_or_else(|| Error::InvalidCase(format!("scenario `{}` has no AC data", scenario.name)))?;
    let base = AcBase::solve(case, &options.solver)?;
    let bridges = scenario.net.bridges();
    let rows: Vec<Result<Vec<LodfRecord>>> = sorted_lines(&scenario.net)
        .into_par_iter()
        .map(|tripped| {
            let monitored = pairs_for(scenario, filter, tripped);
            let blank = |status| {
                monitored
                    .iter()
                    .map(|&m| record(scenario, Model::Ac, tripped, m, None, status))
                    .collect::<Vec<_>>()
            };
            if monitored.is_empty() {
                return Ok(Vec::new());
            }
            if bridges.contains(&tripped) {
                return Ok(blank(RecordStatus::Bridge));
            }
            match base.lodf_row(tripped, options.min_flow, &options.solver) {
                Ok(row) => {
                    let values: std::collections::HashMap<LineId, f64> = row.into_iter().collect();
                    monitored
                        .iter()
                        .map(|&m| {
                            let k = *values.get(&m).ok_or(Error::UnknownLine(m))?;
                            Ok(record(scenario, Model::Ac, tripped, m, Some(k), RecordStatus::Ok))
                        })
                        .collect()
                }
                Err(Error::BelowThreshold { .. }) => Ok(blank(RecordStatus::BelowThreshold)),
                Err(Error::NonConvergence { .. } | Error::SingularJacobian) => Ok(blank(RecordStatus::Censored)),
                Err(Error::Islanding) => Ok(blank(RecordStatus::Bridge)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Dispatches to [`sweep_dc`] or [`sweep_ac`] (default AC options).
pub fn sweep_lodf(scenario: &Scenario, filter: PairFilter, model: Model) -> Result<Vec<LodfRecord>> {
    match model {
        Model::Dc => sweep_dc(scenario, filter),
        Model::Ac => sweep_ac(scenario, filter, &AcSweepOptions::default()),
    }
}

pub const DEFAULT_CLIP_FLOOR: f64 = 1e-8;

/// 81 thresholds, ten per decade from 1e-8 to 1.
pub fn log_grid() -> Vec<f64> {
    (0..=80).map(|k| 10f64.powf(-8.0 + k as f64 / 10.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfCurve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

impl CcdfCurve {
    pub fn at(&self, threshold: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .position(|&t| (t - threshold).abs() <= 1e-12 * threshold.abs().max(1e-300))
            .map(|k| self.values[k])
    }
}

fn clipped_magnitudes(values: &[f64], clip_floor: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    values
        .iter()
        .map(|&v| {
            if !v.is_finite() {
                return Err(Error::InvalidCase(format!("non-finite value {v}")));
            }
            let a = v.abs();
            Ok(if a <= clip_floor { 0.0 } else { a })
        })
        .collect()
}

/// Fraction of `|values|` strictly above `threshold` after clipping.
pub fn fraction_above(values: &[f64], clip_floor: f64, threshold: f64) -> Result<f64> {
    let mags = clipped_magnitudes(values, clip_floor)?;
    Ok(mags.iter().filter(|&&a| a > threshold).count() as f64 / mags.len() as f64)
}

/// Empirical CCDF of `|values|` over [`log_grid`]; magnitudes at or below
/// `clip_floor` count as zero.
pub fn ccdf(values: &[f64], clip_floor: f64) -> Result<CcdfCurve> {
    let mut mags = clipped_magnitudes(values, clip_floor)?;
    mags.sort_by(f64::total_cmp);
    let n = mags.len() as f64;
    let thresholds = log_grid();
    let values = thresholds
        .iter()
        .map(|&t| {
            let at_or_below = mags.partition_point(|&a| a <= t);
            (mags.len() - at_or_below) as f64 / n
        })
        .collect();
    Ok(CcdfCurve { thresholds, values })
}

/// Values of the `ok` records.
pub fn record_values(records: &[LodfRecord]) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.status == RecordStatus::Ok)
        .filter_map(|r| r.lodf)
        .collect()
}
