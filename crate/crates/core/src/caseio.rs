//! MATPOWER case files, experiment configs and result CSVs.
//!
//! Only the `baseMVA`, `bus`, `gen` and `branch` tables are read; every other
//! `mpc.*` assignment (gencost, bus names, ...) is skipped.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interfaces::{apply_tie_edits, NewLine, TieLineEdit};
use crate::netmodel::{build_network, LineId, LineSpec, NetworkModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRow {
    pub id: usize,
    /// 1 = PQ, 2 = PV, 3 = reference, 4 = isolated.
    pub kind: u8,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
    pub area: f64,
    pub vm: f64,
    /// Degrees.
    pub va: f64,
    pub base_kv: f64,
    pub zone: f64,
    pub vmax: f64,
    pub vmin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRow {
    pub bus: usize,
    pub pg: f64,
    pub qg: f64,
    pub qmax: f64,
    pub qmin: f64,
    pub vg: f64,
    pub mbase: f64,
    pub status: bool,
    pub pmax: f64,
    pub pmin: f64,
    /// Columns past `Pmin`, kept verbatim.
    pub extra: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance.
    pub b: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    pub rate_c: f64,
    /// Off-nominal tap ratio; 0 means a line (ratio 1).
    pub tap: f64,
    /// Phase shift, degrees.
    pub shift: f64,
    pub status: bool,
    /// Columns past `BR_STATUS`, kept verbatim.
    pub extra: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCase {
    pub base_mva: f64,
    pub buses: Vec<BusRow>,
    pub gens: Vec<GenRow>,
    pub branches: Vec<BranchRow>,
}

impl RawCase {
    /// 1-based branch number, used as the line id.
    pub fn branch_id(index: usize) -> LineId {
        LineId(index + 1)
    }

    pub fn branch(&self, id: LineId) -> Result<&BranchRow> {
        id.0.checked_sub(1)
            .and_then(|k| self.branches.get(k))
            .ok_or(Error::UnknownLine(id))
    }

    pub fn in_service_gens(&self) -> usize {
        self.gens.iter().filter(|g| g.status).count()
    }

    /// DC-only case for a bare network: one reference bus, no injections,
    /// lossless branches with `x = 1/b`.
    pub fn from_network(net: &NetworkModel) -> RawCase {
        let buses = net
            .external_ids()
            .iter()
            .enumerate()
            .map(|(k, &id)| BusRow {
                id,
                kind: if k == 0 { 3 } else { 1 },
                pd: 0.0,
                qd: 0.0,
                gs: 0.0,
                bs: 0.0,
                area: 1.0,
                vm: 1.0,
                va: 0.0,
                base_kv: 0.0,
                zone: 1.0,
                vmax: 1.1,
                vmin: 0.9,
            })
            .collect();
        let branches = net
            .line_specs()
            .iter()
            .map(|l| BranchRow {
                from: l.from,
                to: l.to,
                r: 0.0,
                x: 1.0 / l.susceptance,
                b: 0.0,
                rate_a: 0.0,
                rate_b: 0.0,
                rate_c: 0.0,
                tap: 0.0,
                shift: 0.0,
                status: true,
                extra: vec![-360.0, 360.0],
            })
            .collect();
        RawCase {
            base_mva: 100.0,
            buses,
            gens: Vec::new(),
            branches,
        }
    }
}

fn strip_comment(line: &str) -> &str {
    // '%' never appears inside the numeric tables we read
    match line.find('%') {
        Some(k) => &line[..k],
        None => line,
    }
}

struct Row {
    line: usize,
    values: Vec<f64>,
}

/// Splits the body of a `[ ... ]` matrix into rows (separated by `;` or newlines).
fn matrix_rows(lines: &[(usize, &str)]) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &(lineno, text) in lines {
        for chunk in text.split(';') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            let values = chunk
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Parse {
                        line: lineno,
                        message: format!("malformed matrix entry `{t}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(Row {
                line: lineno,
                values,
            });
        }
    }
    Ok(rows)
}

fn need(row: &Row, cols: usize, table: &str) -> Result<()> {
    if row.values.len() < cols {
        return Err(Error::Parse {
            line: row.line,
            message: format!(
                "{table} row has {} columns, expected at least {cols}",
                row.values.len()
            ),
        });
    }
    Ok(())
}

fn as_id(v: f64, line: usize) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::Parse {
            line,
            message: format!("`{v}` is not a bus number"),
        })
    }
}

/// Parses the subset of a MATPOWER `.m` case needed here.
pub fn parse_matpower(text: &str) -> Result<RawCase> {
    let mut base_mva = None;
    let mut tables: HashMap<String, Vec<Row>> = HashMap::new();
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(k, l)| (k + 1, l)).collect();
    let mut k = 0;
    while k < lines.len() {
        let (lineno, raw) = lines[k];
        let code = strip_comment(raw).trim();
        k += 1;
        let Some(rest) = code.strip_prefix("mpc.") else {
            continue;
        };
        let Some((name, value)) = rest.split_once('=') else {
            continue;
        };
        let name = name.trim();
        let value = value.trim();
        if name == "baseMVA" {
            let v = value.trim_end_matches(';').trim();
            base_mva = Some(v.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("malformed baseMVA `{v}`"),
            })?);
            continue;
        }
        let (open, close) = match value.chars().next() {
            Some('[') => ('[', ']'),
            Some('{') => ('{', '}'),
            _ => continue,
        };
        // collect the body up to the closing bracket
        let mut body: Vec<(usize, &str)> = Vec::new();
        let first = &value[1..];
        let mut closed = false;
        if let Some(end) = first.find(close) {
            body.push((lineno, &first[..end]));
            closed = true;
        } else {
            body.push((lineno, first));
        }
        while !closed && k < lines.len() {
            let (n, l) = lines[k];
            k += 1;
            let l = strip_comment(l);
            if let Some(end) = l.find(close) {
                body.push((n, &l[..end]));
                closed = true;
            } else {
                body.push((n, l));
            }
        }
        if !closed {
            return Err(Error::Parse {
                line: lineno,
                message: format!("unterminated `mpc.{name}` block"),
            });
        }
        match (name, open) {
            ("bus" | "gen" | "branch", '[') => {
                tables.insert(name.to_string(), matrix_rows(&body)?);
            }
            _ => info!("skipping mpc.{name}"),
        }
    }

    let base_mva = base_mva.ok_or(Error::MissingSection("baseMVA"))?;
    let bus_rows = tables.remove("bus").ok_or(Error::MissingSection("bus"))?;
    let gen_rows = tables.remove("gen").ok_or(Error::MissingSection("gen"))?;
    let branch_rows = tables.remove("branch").ok_or(Error::MissingSection("branch"))?;

    let mut buses = Vec::with_capacity(bus_rows.len());
    let mut known = BTreeSet::new();
    for row in &bus_rows {
        need(row, 13, "bus")?;
        let v = &row.values;
        let id = as_id(v[0], row.line)?;
        if !known.insert(id) {
            return Err(Error::Parse {
                line: row.line,
                message: format!("duplicate bus {id}"),
            });
        }
        buses.push(BusRow {
            id,
            kind: v[1] as u8,
            pd: v[2],
            qd: v[3],
            gs: v[4],
            bs: v[5],
            area: v[6],
            vm: v[7],
            va: v[8],
            base_kv: v[9],
            zone: v[10],
            vmax: v[11],
            vmin: v[12],
        });
    }
    let check_bus = |id: usize, line: usize| -> Result<()> {
        if known.contains(&id) {
            Ok(())
        } else {
            Err(Error::Parse {
                line,
                message: format!("reference to unknown bus {id}"),
            })
        }
    };

    let mut gens = Vec::with_capacity(gen_rows.len());
    for row in &gen_rows {
        need(row, 10, "gen")?;
        let v = &row.values;
        let bus = as_id(v[0], row.line)?;
        check_bus(bus, row.line)?;
        gens.push(GenRow {
            bus,
            pg: v[1],
            qg: v[2],
            qmax: v[3],
            qmin: v[4],
            vg: v[5],
            mbase: v[6],
            status: v[7] > 0.0,
            pmax: v[8],
            pmin: v[9],
            extra: v[10..].to_vec(),
        });
    }

    let mut branches = Vec::with_capacity(branch_rows.len());
    for (k, row) in branch_rows.iter().enumerate() {
        need(row, 11, "branch")?;
        let v = &row.values;
        let (from, to) = (as_id(v[0], row.line)?, as_id(v[1], row.line)?);
        check_bus(from, row.line)?;
        check_bus(to, row.line)?;
        let status = v[10] > 0.0;
        if status && v[3] == 0.0 {
            return Err(Error::ZeroReactance(k + 1));
        }
        branches.push(BranchRow {
            from,
            to,
            r: v[2],
            x: v[3],
            b: v[4],
            rate_a: v[5],
            rate_b: v[6],
            rate_c: v[7],
            tap: v[8],
            shift: v[9],
            status,
            extra: v[11..].to_vec(),
        });
    }
    Ok(RawCase {
        base_mva,
        buses,
        gens,
        branches,
    })
}

pub fn read_matpower(path: &Path) -> Result<RawCase> {
    parse_matpower(&fs::read_to_string(path)?)
}

fn fmt_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    out.push('\t');
    let cells: Vec<String> = values.into_iter().map(|v| format!("{v}")).collect();
    out.push_str(&cells.join("\t"));
    out.push_str(";\n");
}

/// Emits a MATPOWER version-2 case with the parsed tables.
pub fn write_matpower(case: &RawCase, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "function mpc = {name}");
    out.push_str("mpc.version = '2';\n");
    let _ = writeln!(out, "mpc.baseMVA = {};", case.base_mva);
    out.push_str("\n%% bus data\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\nmpc.bus = [\n");
    for b in &case.buses {
        fmt_row(
            &mut out,
            [
                b.id as f64,
                b.kind as f64,
                b.pd,
                b.qd,
                b.gs,
                b.bs,
                b.area,
                b.vm,
                b.va,
                b.base_kv,
                b.zone,
                b.vmax,
                b.vmin,
            ],
        );
    }
    out.push_str("];\n\n%% generator data\nmpc.gen = [\n");
    for g in &case.gens {
        let head = [
            g.bus as f64,
            g.pg,
            g.qg,
            g.qmax,
            g.qmin,
            g.vg,
            g.mbase,
            if g.status { 1.0 } else { 0.0 },
            g.pmax,
            g.pmin,
        ];
        fmt_row(&mut out, head.into_iter().chain(g.extra.iter().copied()));
    }
    out.push_str("];\n\n%% branch data\nmpc.branch = [\n");
    for br in &case.branches {
        let head = [
            br.from as f64,
            br.to as f64,
            br.r,
            br.x,
            br.b,
            br.rate_a,
            br.rate_b,
            br.rate_c,
            br.tap,
            br.shift,
            if br.status { 1.0 } else { 0.0 },
        ];
        fmt_row(&mut out, head.into_iter().chain(br.extra.iter().copied()));
    }
    out.push_str("];\n");
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DcOptions {
    /// Accept negative reactances by taking `|b|` (logged).
    pub abs_negative_reactance: bool,
}

/// Purely reactive DC network: `b = 1/x` per in-service branch.
pub fn to_dc_network(case: &RawCase, options: DcOptions) -> Result<NetworkModel> {
    let bus_ids: Vec<usize> = case.buses.iter().map(|b| b.id).collect();
    let mut lines = Vec::with_capacity(case.branches.len());
    for (k, br) in case.branches.iter().enumerate() {
        if !br.status {
            continue;
        }
        let id = RawCase::branch_id(k).0;
        if br.x == 0.0 {
            return Err(Error::ZeroReactance(id));
        }
        let mut b = 1.0 / br.x;
        if b < 0.0 {
            if !options.abs_negative_reactance {
                return Err(Error::NegativeReactance(id));
            }
            warn!("branch {id}: negative reactance {} replaced by its magnitude", br.x);
            b = -b;
        }
        lines.push(LineSpec {
            id,
            from: br.from,
            to: br.to,
            susceptance: b,
        });
    }
    build_network(&bus_ids, &lines)
}

/// Added tie-line in experiment configs; `x` drives both models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AddedBranch {
    pub from: usize,
    pub to: usize,
    pub x: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub charging: f64,
}

impl AddedBranch {
    pub fn as_new_line(&self) -> NewLine {
        NewLine {
            from: self.from,
            to: self.to,
            susceptance: 1.0 / self.x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub remove: Vec<usize>,
    #[serde(default)]
    pub add: Vec<AddedBranch>,
    /// Rescale the added lines so the resulting 2x2 bipartite interface is rank-1.
    #[serde(default)]
    pub rank_one: bool,
}

impl ScenarioConfig {
    pub fn tie_edit(&self) -> TieLineEdit {
        TieLineEdit {
            remove: self.remove.iter().map(|&k| LineId(k)).collect(),
            add: self.add.iter().map(AddedBranch::as_new_line).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// |LODF| at or below this counts as zero.
    pub clip_floor: f64,
    /// Minimum |pre-contingency flow| (per-unit) on a tripped line for AC LODF.
    pub ac_min_flow: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            clip_floor: 1e-8,
            ac_min_flow: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcConfig {
    pub enabled: bool,
    pub injection_scale: f64,
}

impl Default for AcConfig {
    fn default() -> Self {
        AcConfig {
            enabled: false,
            injection_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub partition: Partition,
    pub tie_lines: Vec<usize>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
    /// Scenario names expected to have nested cross CCDFs, most-affected first.
    #[serde(default)]
    pub dominance: Vec<String>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub ac: AcConfig,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Parses a config and cross-validates it against the case: the partition
/// must cover every bus exactly once, the declared tie-lines must equal the
/// in-service branches crossing it, and every scenario edit must leave the
/// network connected.
pub fn load_config(text: &str, case: &RawCase) -> Result<ExperimentConfig> {
    let config = ExperimentConfig::parse(text)?;
    validate_config(&config, case)?;
    Ok(config)
}

pub fn validate_config(config: &ExperimentConfig, case: &RawCase) -> Result<()> {
    let first: BTreeSet<usize> = config.partition.first.iter().copied().collect();
    let second: BTreeSet<usize> = config.partition.second.iter().copied().collect();
    if first.is_empty() || second.is_empty() {
        return Err(Error::Config("both partition sides must be non-empty".into()));
    }
    if first.len() != config.partition.first.len() || second.len() != config.partition.second.len() {
        return Err(Error::Config("partition lists contain duplicates".into()));
    }
    if let Some(b) = first.intersection(&second).next() {
        return Err(Error::Config(format!("bus {b} is on both sides")));
    }
    let all: BTreeSet<usize> = case.buses.iter().map(|b| b.id).collect();
    let covered: BTreeSet<usize> = first.union(&second).copied().collect();
    if covered != all {
        let missing: Vec<usize> = all.difference(&covered).copied().collect();
        let unknown: Vec<usize> = covered.difference(&all).copied().collect();
        return Err(Error::Config(format!(
            "partition does not cover the bus set (missing {missing:?}, unknown {unknown:?})"
        )));
    }
    let mut computed: Vec<usize> = case
        .branches
        .iter()
        .enumerate()
        .filter(|(_, br)| br.status && first.contains(&br.from) != first.contains(&br.to))
        .map(|(k, _)| RawCase::branch_id(k).0)
        .collect();
    computed.sort_unstable();
    let mut declared = config.tie_lines.clone();
    declared.sort_unstable();
    if declared != computed {
        return Err(Error::TieLineMismatch { declared, computed });
    }
    let net = to_dc_network(case, DcOptions::default())?;
    for scenario in &config.scenarios {
        if scenario.add.iter().any(|a| !(a.x > 0.0)) {
            return Err(Error::Config(format!(
                "scenario `{}` adds a branch with non-positive reactance",
                scenario.name
            )));
        }
        apply_tie_edits(&net, &scenario.tie_edit())
            .map_err(|e| Error::Config(format!("scenario `{}`: {e}", scenario.name)))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[serde(rename = "DC")]
    Dc,
    #[serde(rename = "AC")]
    Ac,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Dc => "DC",
            Model::Ac => "AC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordStatus {
    Ok,
    Bridge,
    Censored,
    BelowThreshold,
}

/// One row of a sweep result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LodfRecord {
    pub scenario: String,
    pub tripped: usize,
    pub monitored: usize,
    pub model: Model,
    pub lodf: Option<f64>,
    pub status: RecordStatus,
}

/// Writes records as `scenario,tripped,monitored,model,lodf,status`, sorted
/// by scenario, tripped line, monitored line.
pub fn write_results(records: &[LodfRecord], path: &Path) -> Result<()> {
    let mut sorted: Vec<&LodfRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.scenario, a.tripped, a.monitored, a.model).cmp(&(&b.scenario, b.tripped, b.monitored, b.model))
    });
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scenario", "tripped", "monitored", "model", "lodf", "status"])?;
    for r in sorted {
        w.serialize((
            &r.scenario,
            r.tripped,
            r.monitored,
            r.model,
            r.lodf,
            r.status,
        ))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<LodfRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Writes a `threshold,ccdf` file.
pub fn write_ccdf(thresholds: &[f64], values: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["threshold", "ccdf"])?;
    for (t, v) in thresholds.iter().zip(values) {
        w.serialize((t, v))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "\
function mpc = two
mpc.version = '2';
mpc.baseMVA = 100;
%% bus data
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1\t0\t138\t1\t1.1\t0.9;
\t2\t1\t50\t10\t0\t0\t1\t1\t0\t138\t1\t1.1\t0.9; % load bus
];
mpc.gen = [
\t1\t50\t0\t100\t-100\t1\t100\t1\t200\t0;
];
mpc.branch = [
\t1\t2\t0.01\t0.25\t0\t0\t0\t0\t0\t0\t1\t-360\t360;
\t1\t2\t0.01\t0.5\t0\t0\t0\t0\t0\t0\t0\t-360\t360;
];
mpc.gencost = [
\t2\t0\t0\t3\t0.01\t40\t0;
];
mpc.bus_name = {
\t'One';
\t'Two';
};
";

    #[test]
    fn parses_minimal_case() {
        let case = parse_matpower(TWO_BUS).unwrap();
        assert_eq!(case.base_mva, 100.0);
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches.len(), 2);
        assert_eq!(case.gens.len(), 1);
        assert!(!case.branches[1].status);
        assert_eq!(case.buses[1].pd, 50.0);
    }

    #[test]
    fn dc_network_from_case() {
        let case = parse_matpower(TWO_BUS).unwrap();
        let net = to_dc_network(&case, DcOptions::default()).unwrap();
        assert_eq!(net.line_count(), 1);
        assert_eq!(net.line(LineId(1)).unwrap().susceptance, 4.0);
        assert!(net.line(LineId(2)).is_err());
    }

    #[test]
    fn negative_reactance_needs_override() {
        let mut case = parse_matpower(TWO_BUS).unwrap();
        case.branches[0].x = -0.5;
        assert!(matches!(
            to_dc_network(&case, DcOptions::default()),
            Err(Error::NegativeReactance(1))
        ));
        let net = to_dc_network(
            &case,
            DcOptions {
                abs_negative_reactance: true,
            },
        )
        .unwrap();
        assert_eq!(net.line(LineId(1)).unwrap().susceptance, 2.0);
    }

    #[test]
    fn truncated_case_names_missing_section() {
        let cut = &TWO_BUS[..TWO_BUS.find("mpc.gen").unwrap()];
        assert!(matches!(parse_matpower(cut), Err(Error::MissingSection("gen"))));
        let no_base = TWO_BUS.replace("mpc.baseMVA = 100;", "");
        assert!(matches!(
            parse_matpower(&no_base),
            Err(Error::MissingSection("baseMVA"))
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let bad = TWO_BUS.replace("\t2\t1\t50\t10", "\t2\t1\tfifty\t10");
        match parse_matpower(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
        let short = TWO_BUS.replace("\t1\t50\t0\t100\t-100\t1\t100\t1\t200\t0;", "\t1\t50\t0;");
        assert!(matches!(parse_matpower(&short), Err(Error::Parse { .. })));
    }

    #[test]
    fn zero_reactance_rejected() {
        let bad = TWO_BUS.replace("0.01\t0.25", "0.01\t0");
        assert!(matches!(parse_matpower(&bad), Err(Error::ZeroReactance(1))));
    }

    #[test]
    fn round_trip_through_writer() {
        let case = parse_matpower(TWO_BUS).unwrap();
        let again = parse_matpower(&write_matpower(&case, "two")).unwrap();
        assert_eq!(case, again);
    }

    fn triangle_case() -> RawCase {
        let net = NetworkModel::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0), (0, 2, 1.0)])
            .unwrap();
        RawCase::from_network(&net)
    }

    #[test]
    fn config_validation() {
        let case = triangle_case();
        // external ids 0..3; branch ids 1..5 (row order)
        let ok = r#"{"name":"t","partition":{"first":[0,1],"second":[2,3]},"tie_lines":[2,4,5],
            "scenarios":[{"name":"series","remove":[5]}]}"#;
        let cfg = load_config(ok, &case).unwrap();
        assert_eq!(cfg.thresholds.clip_floor, 1e-8);

        let wrong_ties = ok.replace("[2,4,5]", "[2,4]");
        match load_config(&wrong_ties, &case) {
            Err(Error::TieLineMismatch { declared, computed }) => {
                assert_eq!(declared, vec![2, 4]);
                assert_eq!(computed, vec![2, 4, 5]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let empty = ok.replace("\"first\":[0,1]", "\"first\":[]");
        assert!(matches!(load_config(&empty, &case), Err(Error::Config(_))));

        let islanding = ok.replace("\"remove\":[5]", "\"remove\":[2,4,5]");
        assert!(matches!(load_config(&islanding, &case), Err(Error::Config(_))));

        assert!(matches!(load_config("{", &case), Err(Error::Json(_))));
    }

    #[test]
    fn results_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_results(&[], &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "scenario,tripped,monitored,model,lodf,status\n"
        );

        let recs = vec![
            LodfRecord {
                scenario: "series".into(),
                tripped: 3,
                monitored: 1,
                model: Model::Dc,
                lodf: Some(-0.25),
                status: RecordStatus::Ok,
            },
            LodfRecord {
                scenario: "original".into(),
                tripped: 9,
                monitored: 2,
                model: Model::Ac,
                lodf: None,
                status: RecordStatus::BelowThreshold,
            },
        ];
        write_results(&recs[..1], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().nth(1).unwrap(), "series,3,1,DC,-0.25,ok");
        assert_eq!(read_results(&path).unwrap(), recs[..1]);

        write_results(&recs, &path).unwrap();
        let back = read_results(&path).unwrap();
        assert_eq!(back[0], recs[1]);
        assert_eq!(back[1], recs[0]);
    }
}
