//! Case-study driver: builds the interface scenarios from a config, sweeps
//! them, and writes records, CCDFs and a summary.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use super::{ccdf, record_values, sweep_ac, sweep_dc, AcSweepOptions, CcdfCurve, PairFilter, Scenario, ScenarioKind};
use crate::acflow::AcCase;
use crate::caseio::{
    to_dc_network, validate_config, write_ccdf, write_results, AddedBranch, DcOptions, ExperimentConfig, LodfRecord,
    Model, RawCase, RecordStatus, ScenarioConfig,
};
use crate::error::{Error, Result};
use crate::interfaces::{apply_tie_edits, bipartite_bound, bipartite_bound_reverse, InterfaceSpec, LinePartition, PairClass, Side};
use crate::netmodel::{BusId, LineId, NetworkModel};

/// Thresholds reported in the summary table.
pub const SUMMARY_THRESHOLDS: [f64; 3] = [1e-2, 1e-3, 1e-8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub scenario: String,
    pub model: Model,
    /// `cross` or `within`.
    pub class: String,
    pub pairs: usize,
    pub valued: usize,
    pub bridge: usize,
    pub censored: usize,
    pub below_threshold: usize,
    /// Fractions of valued pairs with |K| above each of [`SUMMARY_THRESHOLDS`].
    pub fraction_above: Vec<f64>,
    pub max_abs: f64,
    /// Cross only: largest |K| with the tripped line on the first side.
    pub max_abs_first_to_second: Option<f64>,
    pub max_abs_second_to_first: Option<f64>,
    /// Bipartite scenarios only: the bound for each direction.
    pub bound_first_to_second: Option<f64>,
    pub bound_second_to_first: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub model: Model,
    /// Scenario names, each expected at or below the previous one.
    pub order: Vec<String>,
    /// Smallest grid threshold included in the comparison.
    pub from_threshold: f64,
    pub holds: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub kind: ScenarioKind,
    pub lines: usize,
    pub removed: Vec<usize>,
    pub added: Vec<usize>,
    pub interface: Option<InterfaceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub scenario: String,
    pub model: Model,
    pub class: String,
    pub curve: CcdfCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub scenarios: Vec<ScenarioInfo>,
    pub summaries: Vec<ClassSummary>,
    pub dominance: Vec<DominanceCheck>,
    pub files: Vec<String>,
    #[serde(skip)]
    pub records: Vec<LodfRecord>,
    #[serde(skip)]
    pub curves: Vec<CurveEntry>,
}

impl ExperimentReport {
    pub fn summary(&self, scenario: &str, model: Model, class: &str) -> Option<&ClassSummary> {
        self.summaries
            .iter()
            .find(|s| s.scenario == scenario && s.model == model && s.class == class)
    }

    pub fn curve(&self, scenario: &str, model: Model, class: &str) -> Option<&CcdfCurve> {
        self.curves
            .iter()
            .find(|c| c.scenario == scenario && c.model == model && c.class == class)
            .map(|c| &c.curve)
    }
}

fn bus_sets(net: &NetworkModel, config: &ExperimentConfig) -> Result<(BTreeSet<BusId>, BTreeSet<BusId>)> {
    let map = |ids: &[usize]| ids.iter().map(|&b| net.bus(b)).collect::<Result<BTreeSet<_>>>();
    Ok((map(&config.partition.first)?, map(&config.partition.second)?))
}

/// The kept tie-lines of a scenario oriented first side -> second side,
/// with their DC susceptances: `[(s, s', b_ss'), (t, t', b_tt')]`.
fn kept_ties(case: &RawCase, config: &ExperimentConfig, sc: &ScenarioConfig) -> Result<Vec<(usize, usize, f64)>> {
    let first: BTreeSet<usize> = config.partition.first.iter().copied().collect();
    config
        .tie_lines
        .iter()
        .filter(|id| !sc.remove.contains(id))
        .map(|&id| {
            let br = case.branch(LineId(id))?;
            let (a, b) = if first.contains(&br.from) { (br.from, br.to) } else { (br.to, br.from) };
            Ok((a, b, 1.0 / br.x))
        })
        .collect()
}

/// Interface susceptances when a scenario's kept ties plus added lines form
/// a 2x2 complete bipartite interface.
fn bipartite_spec(case: &RawCase, config: &ExperimentConfig, sc: &ScenarioConfig) -> Result<Option<(InterfaceSpec, [usize; 2])>> {
    let ties = kept_ties(case, config, sc)?;
    if ties.len() != 2 || sc.add.len() != 2 {
        return Ok(None);
    }
    let [(s, sp, ss), (t, tp, tt)] = [ties[0], ties[1]];
    let find = |a: usize, b: usize| {
        sc.add
            .iter()
            .position(|l| (l.from == a && l.to == b) || (l.from == b && l.to == a))
    };
    match (find(s, tp), find(t, sp)) {
        (Some(i), Some(j)) if i != j => Ok(Some((
            InterfaceSpec::CompleteBipartite {
                ss_prime: ss,
                st_prime: 1.0 / sc.add[i].x,
                ts_prime: 1.0 / sc.add[j].x,
                tt_prime: tt,
            },
            [i, j],
        ))),
        _ => Ok(None),
    }
}

/// Rescales the two added lines so that `b_st' = b_ts' = sqrt(b_ss' b_tt')`.
fn rank_one_adjusted(case: &RawCase, config: &ExperimentConfig, sc: &ScenarioConfig) -> Result<ScenarioConfig> {
    let Some((InterfaceSpec::CompleteBipartite { ss_prime, tt_prime, .. }, [i, j])) = bipartite_spec(case, config, sc)? else {
        return Err(Error::Config(format!(
            "scenario `{}`: rank_one needs two kept tie-lines and two crossing added lines",
            sc.name
        )));
    };
    let x = 1.0 / (ss_prime * tt_prime).sqrt();
    let mut out = sc.clone();
    out.add[i].x = x;
    out.add[j].x = x;
    Ok(out)
}

fn scenario_from(
    net: &NetworkModel,
    ac: Option<&AcCase>,
    config: &ExperimentConfig,
    sc: &ScenarioConfig,
) -> Result<Scenario> {
    let edit = sc.tie_edit();
    let (edited, added) = apply_tie_edits(net, &edit)?;
    let (first, second) = bus_sets(&edited, config)?;
    let mut partition = LinePartition::from_bus_sets(&edited, &first, &second);
    for id in &added {
        partition.set(*id, Side::Interface);
    }
    let ac = match ac {
        Some(base) => {
            let removed: Vec<LineId> = sc.remove.iter().map(|&k| LineId(k)).collect();
            let mut case = base.remove_branches(&removed)?;
            for (id, AddedBranch { from, to, x, r, charging }) in added.iter().zip(&sc.add) {
                case = case.add_branch(*id, *from, *to, *r, *x, *charging)?;
            }
            Some(case)
        }
        None => None,
    };
    let mut scenario = Scenario::new(&sc.name, edited, partition)?;
    scenario.ac = ac;
    scenario.provenance = edit;
    Ok(scenario)
}

/// Builds the original network plus every configured scenario.
pub fn build_scenarios(case: &RawCase, config: &ExperimentConfig, with_ac: bool) -> Result<Vec<Scenario>> {
    validate_config(config, case)?;
    let net = to_dc_network(case, DcOptions::default())?;
    let ac = if with_ac {
        Some(AcCase::from_raw(case)?.scale_injections(config.ac.injection_scale))
    } else {
        None
    };
    let original = ScenarioConfig {
        name: "original".into(),
        remove: Vec::new(),
        add: Vec::new(),
        rank_one: false,
    };
    let mut out = vec![scenario_from(&net, ac.as_ref(), config, &original)?];
    for sc in &config.scenarios {
        let sc = if sc.rank_one { rank_one_adjusted(case, config, sc)? } else { sc.clone() };
        out.push(scenario_from(&net, ac.as_ref(), config, &sc)?);
    }
    Ok(out)
}

fn class_name(class: PairClass) -> Option<&'static str> {
    match class {
        PairClass::Cross => Some("cross"),
        PairClass::Within => Some("within"),
        PairClass::Interface => None,
    }
}

fn summarize(
    scenario: &Scenario,
    model: Model,
    class: &str,
    records: &[&LodfRecord],
    bound: Option<(f64, f64)>,
) -> ClassSummary {
    let count = |s| records.iter().filter(|r| r.status == s).count();
    let values: Vec<(LineId, f64)> = records
        .iter()
        .filter(|r| r.status == RecordStatus::Ok)
        .filter_map(|r| r.lodf.map(|v| (LineId(r.tripped), v.abs())))
        .collect();
    let frac = |x: f64| {
        if values.is_empty() {
            0.0
        } else {
            values.iter().filter(|(_, v)| *v > x).count() as f64 / values.len() as f64
        }
    };
    let max_where = |side: Side| {
        values
            .iter()
            .filter(|(e, _)| scenario.partition.side(*e) == side)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    };
    let cross = class == "cross";
    ClassSummary {
        scenario: scenario.name.clone(),
        model,
        class: class.to_string(),
        pairs: records.len(),
        valued: values.len(),
        bridge: count(RecordStatus::Bridge),
        censored: count(RecordStatus::Censored),
        below_threshold: count(RecordStatus::BelowThreshold),
        fraction_above: SUMMARY_THRESHOLDS.iter().map(|&x| frac(x)).collect(),
        max_abs: values.iter().map(|(_, v)| *v).fold(0.0, f64::max),
        max_abs_first_to_second: cross.then(|| max_where(Side::First)),
        max_abs_second_to_first: cross.then(|| max_where(Side::Second)),
        bound_first_to_second: bound.filter(|_| cross).map(|b| b.0),
        bound_second_to_first: bound.filter(|_| cross).map(|b| b.1),
    }
}

fn dominance(curves: &[CurveEntry], model: Model, order: &[String], from_threshold: f64) -> DominanceCheck {
    let mut violations = Vec::new();
    for pair in order.windows(2) {
        let get = |name: &str| {
            curves
                .iter()
                .find(|c| c.scenario == name && c.model == model && c.class == "cross")
        };
        let (Some(hi), Some(lo)) = (get(&pair[0]), get(&pair[1])) else {
            violations.push(format!("missing curve for {} or {}", pair[0], pair[1]));
            continue;
        };
        for ((t, a), b) in hi.curve.thresholds.iter().zip(&hi.curve.values).zip(&lo.curve.values) {
            if *t >= from_threshold * (1.0 - 1e-12) && *b > *a + 1e-12 {
                violations.push(format!("{} above {} at {t:e}: {b} > {a}", pair[1], pair[0]));
            }
        }
    }
    DominanceCheck {
        model,
        order: order.to_vec(),
        from_threshold,
        holds: violations.is_empty(),
        violations,
    }
}

fn model_tag(model: Model) -> &'static str {
    match model {
        Model::Dc => "dc",
        Model::Ac => "ac",
    }
}

/// Runs every scenario under each model in `models` and, when `out` is
/// given, writes `lodf_<model>.csv`, `ccdf_<scenario>_<class>_<model>.csv`,
/// `summary.csv` and `report.json` there.
pub fn run_experiment(
    case: &RawCase,
    config: &ExperimentConfig,
    models: &[Model],
    out: Option<&Path>,
) -> Result<ExperimentReport> {
    let with_ac = models.contains(&Model::Ac);
    let scenarios = build_scenarios(case, config, with_ac)?;
    let mut infos = Vec::new();
    let mut bounds = Vec::new();
    for (k, sc) in scenarios.iter().enumerate() {
        let interface = if k == 0 {
            None
        } else {
            let cfg = config.scenarios[k - 1].clone();
            let cfg = if cfg.rank_one { rank_one_adjusted(case, config, &cfg)? } else { cfg };
            bipartite_spec(case, config, &cfg)?.map(|(spec, _)| spec)
        };
        bounds.push(match &interface {
            Some(spec) => Some((bipartite_bound(spec)?, bipartite_bound_reverse(spec)?)),
            None => None,
        });
        infos.push(ScenarioInfo {
            name: sc.name.clone(),
            kind: sc.kind,
            lines: sc.net.line_count(),
            removed: sc.provenance.remove.iter().map(|l| l.0).collect(),
            added: sc
                .net
                .line_ids()
                .filter(|l| sc.partition.side(*l) == Side::Interface && !config.tie_lines.contains(&l.0))
                .map(|l| l.0)
                .collect(),
            interface,
        });
    }

    let mut report = ExperimentReport {
        name: config.name.clone(),
        scenarios: infos,
        summaries: Vec::new(),
        dominance: Vec::new(),
        files: Vec::new(),
        records: Vec::new(),
        curves: Vec::new(),
    };
    let ac_options = AcSweepOptions {
        min_flow: config.thresholds.ac_min_flow,
        ..Default::default()
    };
    for &model in models {
        let mut model_records = Vec::new();
        for (sc, bound) in scenarios.iter().zip(&bounds) {
            info!("sweeping {} ({model})", sc.name);
            let recs = match model {
                Model::Dc => sweep_dc(sc, PairFilter::All)?,
                Model::Ac => sweep_ac(sc, PairFilter::All, &ac_options)?,
            };
            for class in [PairClass::Cross, PairClass::Within] {
                let name = class_name(class).expect("cross and within have names");
                let subset: Vec<&LodfRecord> = recs
                    .iter()
                    .filter(|r| sc.partition.classify(LineId(r.tripped), LineId(r.monitored)) == class)
                    .collect();
                report.summaries.push(summarize(sc, model, name, &subset, *bound));
                let owned: Vec<LodfRecord> = subset.into_iter().cloned().collect();
                let values = record_values(&owned);
                if !values.is_empty() {
                    report.curves.push(CurveEntry {
                        scenario: sc.name.clone(),
                        model,
                        class: name.to_string(),
                        curve: ccdf(&values, config.thresholds.clip_floor)?,
                    });
                }
            }
            model_records.extend(recs);
        }
        if !config.dominance.is_empty() {
            report.dominance.push(dominance(&report.curves, model, &config.dominance, 0.0));
            if model == Model::Ac {
                // each interface scenario against the original, at the coarser thresholds
                for name in config.dominance.iter().skip(1) {
                    let order = vec![config.dominance[0].clone(), name.clone()];
                    report.dominance.push(dominance(&report.curves, model, &order, 1e-2));
                }
            }
        }
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
            let file = format!("lodf_{}.csv", model_tag(model));
            write_results(&model_records, &dir.join(&file))?;
            report.files.push(file);
        }
        report.records.extend(model_records);
    }

    if let Some(dir) = out {
        for c in &report.curves {
            let file = format!("ccdf_{}_{}_{}.csv", c.scenario, c.class, model_tag(c.model));
            write_ccdf(&c.curve.thresholds, &c.curve.values, &dir.join(&file))?;
            report.files.push(file);
        }
        write_summary(&report.summaries, &dir.join("summary.csv"))?;
        report.files.push("summary.csv".into());
        report.files.push("report.json".into());
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_summary(rows: &[ClassSummary], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "scenario",
        "model",
        "class",
        "pairs",
        "valued",
        "bridge",
        "censored",
        "below_threshold",
        "frac_gt_1e-2",
        "frac_gt_1e-3",
        "frac_gt_1e-8",
        "max_abs",
        "max_abs_first_to_second",
        "max_abs_second_to_first",
        "bound_first_to_second",
        "bound_second_to_first",
    ])?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.model.to_string(),
            r.class.clone(),
            r.pairs.to_string(),
            r.valued.to_string(),
            r.bridge.to_string(),
            r.censored.to_string(),
            r.below_threshold.to_string(),
            r.fraction_above[0].to_string(),
            r.fraction_above[1].to_string(),
            r.fraction_above[2].to_string(),
            r.max_abs.to_string(),
            opt(r.max_abs_first_to_second),
            opt(r.max_abs_second_to_first),
            opt(r.bound_first_to_second),
            opt(r.bound_second_to_first),
        ])?;
    }
    w.flush()?;
    Ok(())
}
