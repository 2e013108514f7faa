//! Interface networks between two sub-grids joined at buses `s` and `t`.
//!
//! The series and complete-bipartite forms split both joint buses: the
//! second sub-grid's lines at `s`/`t` move to fresh buses `s'`/`t'`, and the
//! interface lines reconnect the halves. The parallel form adds a direct
//! `s`-`t` line, either on the original joint or on top of a series split.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dcsens::{DcSensitivity, TwoBusSplit};
use crate::error::{Error, Result};
use crate::netmodel::{BusId, LineId, NetworkModel};

/// Which part of a partitioned network a line belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    First,
    Second,
    /// Tie-lines and interface lines: neither sub-grid.
    Interface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    Cross,
    Within,
    /// At least one line is an interface line.
    Interface,
}

/// Assignment of every line of a network to a [`Side`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinePartition {
    sides: BTreeMap<LineId, Side>,
}

impl LinePartition {
    pub fn new(sides: BTreeMap<LineId, Side>) -> Self {
        LinePartition { sides }
    }

    /// Classifies lines by which bus set holds both endpoints.
    pub fn from_bus_sets(net: &NetworkModel, first: &BTreeSet<BusId>, second: &BTreeSet<BusId>) -> Self {
        let sides = net
            .lines()
            .iter()
            .map(|l| {
                let side = if first.contains(&l.from) && first.contains(&l.to) {
                    Side::First
                } else if second.contains(&l.from) && second.contains(&l.to) {
                    Side::Second
                } else {
                    Side::Interface
                };
                (l.id, side)
            })
            .collect();
        LinePartition { sides }
    }

    pub fn side(&self, line: LineId) -> Side {
        self.sides.get(&line).copied().unwrap_or(Side::Interface)
    }

    pub fn set(&mut self, line: LineId, side: Side) {
        self.sides.insert(line, side);
    }

    pub fn lines_on(&self, side: Side) -> BTreeSet<LineId> {
        self.sides
            .iter()
            .filter(|(_, s)| **s == side)
            .map(|(l, _)| *l)
            .collect()
    }

    pub fn classify(&self, tripped: LineId, monitored: LineId) -> PairClass {
        match (self.side(tripped), self.side(monitored)) {
            (Side::Interface, _) | (_, Side::Interface) => PairClass::Interface,
            (a, b) if a == b => PairClass::Within,
            _ => PairClass::Cross,
        }
    }
}

/// Two sub-grids sharing exactly the non-adjacent buses `s` and `t`.
#[derive(Debug, Clone)]
pub struct TwoBusJoint {
    net: NetworkModel,
    split: TwoBusSplit,
}

impl TwoBusJoint {
    pub fn new(net: NetworkModel, g1: BTreeSet<BusId>, g2: BTreeSet<BusId>) -> Result<Self> {
        let split = TwoBusSplit::new(&net, g1, g2).map_err(|e| Error::InvalidJoint(e.to_string()))?;
        if net.are_adjacent(split.s, split.t) {
            return Err(Error::InvalidJoint(format!(
                "joint buses {} and {} are directly connected",
                net.external_id(split.s),
                net.external_id(split.t)
            )));
        }
        Ok(TwoBusJoint { net, split })
    }

    pub fn net(&self) -> &NetworkModel {
        &self.net
    }

    pub fn split(&self) -> &TwoBusSplit {
        &self.split
    }

    pub fn s(&self) -> BusId {
        self.split.s
    }

    pub fn t(&self) -> BusId {
        self.split.t
    }

    pub fn g1_lines(&self) -> &BTreeSet<LineId> {
        &self.split.g1_lines
    }

    pub fn g2_lines(&self) -> &BTreeSet<LineId> {
        &self.split.g2_lines
    }

    pub fn first_subgrid(&self) -> Result<NetworkModel> {
        self.net.subnetwork(&self.split.g1, &self.split.g1_lines)
    }

    pub fn second_subgrid(&self) -> Result<NetworkModel> {
        self.net.subnetwork(&self.split.g2, &self.split.g2_lines)
    }

    pub fn partition(&self) -> LinePartition {
        let mut p = LinePartition::default();
        for l in &self.split.g1_lines {
            p.set(*l, Side::First);
        }
        for l in &self.split.g2_lines {
            p.set(*l, Side::Second);
        }
        p
    }

    /// Effective susceptances between `s` and `t` of the first and second sub-grid.
    pub fn subgrid_susceptances(&self) -> Result<(f64, f64)> {
        let g1 = self.first_subgrid()?;
        let g2 = self.second_subgrid()?;
        let b1 = DcSensitivity::new(&g1)?
            .effective_susceptance(self.net.translate(self.s(), &g1)?, self.net.translate(self.t(), &g1)?)?
            .value;
        let b2 = DcSensitivity::new(&g2)?
            .effective_susceptance(self.net.translate(self.s(), &g2)?, self.net.translate(self.t(), &g2)?)?
            .value;
        Ok((b1, b2))
    }
}

/// Interface network placed between the sub-grids. `*_prime` susceptances
/// name the line from the first-side joint bus to the primed bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterfaceSpec {
    Series {
        ss_prime: f64,
        tt_prime: f64,
    },
    Parallel {
        st: f64,
        /// When set, the `s`-`t` line is added on top of this series split
        /// instead of on the original joint.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        on_series: Option<SeriesSusceptances>,
    },
    CompleteBipartite {
        ss_prime: f64,
        st_prime: f64,
        ts_prime: f64,
        tt_prime: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSusceptances {
    pub ss_prime: f64,
    pub tt_prime: f64,
}

impl InterfaceSpec {
    pub fn susceptances(&self) -> Vec<f64> {
        match *self {
            InterfaceSpec::Series { ss_prime, tt_prime } => vec![ss_prime, tt_prime],
            InterfaceSpec::Parallel { st, on_series } => {
                let mut v = vec![st];
                if let Some(s) = on_series {
                    v.extend([s.ss_prime, s.tt_prime]);
                }
                v
            }
            InterfaceSpec::CompleteBipartite {
                ss_prime,
                st_prime,
                ts_prime,
                tt_prime,
            } => vec![ss_prime, st_prime, ts_prime, tt_prime],
        }
    }

    pub fn is_rank_one(&self, tol: f64) -> bool {
        match *self {
            InterfaceSpec::CompleteBipartite {
                ss_prime,
                st_prime,
                ts_prime,
                tt_prime,
            } => (ss_prime * tt_prime - st_prime * ts_prime).abs() <= tol * ss_prime * tt_prime,
            _ => false,
        }
    }
}

/// Network with an interface in place, plus line bookkeeping.
#[derive(Debug, Clone)]
pub struct InterfaceNetwork {
    pub net: NetworkModel,
    pub partition: LinePartition,
    pub interface_lines: Vec<LineId>,
    pub s: BusId,
    pub t: BusId,
    pub s_prime: Option<BusId>,
    pub t_prime: Option<BusId>,
}

fn split_joint(joint: &TwoBusJoint) -> Result<(NetworkModel, BusId, BusId)> {
    let net = joint.net();
    let next_external = net.external_ids().iter().max().map_or(0, |m| m + 1);
    let g2 = joint.g2_lines();
    let moved = |net: &NetworkModel, bus: BusId| -> Vec<LineId> {
        net.incident_lines(bus)
            .into_iter()
            .filter(|l| g2.contains(l))
            .collect()
    };
    let (net1, s_prime) = net.split_bus(joint.s(), &moved(net, joint.s()), next_external)?;
    let (net2, t_prime) = net1.split_bus(joint.t(), &moved(&net1, joint.t()), next_external + 1)?;
    Ok((net2, s_prime, t_prime))
}

pub fn apply_interface(joint: &TwoBusJoint, spec: &InterfaceSpec) -> Result<InterfaceNetwork> {
    for b in spec.susceptances() {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::DesignCondition(format!(
                "interface susceptance {b} must be positive"
            )));
        }
    }
    let (s, t) = (joint.s(), joint.t());
    let mut partition = joint.partition();
    let mut interface_lines = Vec::new();
    let mut add = |net: NetworkModel, from: BusId, to: BusId, b: f64| -> Result<NetworkModel> {
        let (next, id) = net.add_line(from, to, b)?;
        partition.set(id, Side::Interface);
        interface_lines.push(id);
        Ok(next)
    };
    let (net, s_prime, t_prime) = match *spec {
        InterfaceSpec::Series { ss_prime, tt_prime } => {
            let (net, sp, tp) = split_joint(joint)?;
            let net = add(net, s, sp, ss_prime)?;
            let net = add(net, t, tp, tt_prime)?;
            (net, Some(sp), Some(tp))
        }
        InterfaceSpec::Parallel { st, on_series: None } => {
            (add(joint.net().clone(), s, t, st)?, None, None)
        }
        InterfaceSpec::Parallel {
            st,
            on_series: Some(series),
        } => {
            let (net, sp, tp) = split_joint(joint)?;
            let net = add(net, s, sp, series.ss_prime)?;
            let net = add(net, t, tp, series.tt_prime)?;
            let net = add(net, s, t, st)?;
            (net, Some(sp), Some(tp))
        }
        InterfaceSpec::CompleteBipartite {
            ss_prime,
            st_prime,
            ts_prime,
            tt_prime,
        } => {
            let (net, sp, tp) = split_joint(joint)?;
            let net = add(net, s, sp, ss_prime)?;
            let net = add(net, s, tp, st_prime)?;
            let net = add(net, t, sp, ts_prime)?;
            let net = add(net, t, tp, tt_prime)?;
            (net, Some(sp), Some(tp))
        }
    };
    Ok(InterfaceNetwork {
        net,
        partition,
        interface_lines,
        s,
        t,
        s_prime,
        t_prime,
    })
}

/// Upper bound on cross-sub-grid |LODF| for a tripped line in the first
/// sub-grid and a monitored line in the second:
/// `|b_ss' b_tt' - b_st' b_ts'| / ((b_ss' + b_st') (b_tt' + b_ts'))`.
pub fn bipartite_bound(spec: &InterfaceSpec) -> Result<f64> {
    match *spec {
        InterfaceSpec::CompleteBipartite {
            ss_prime,
            st_prime,
            ts_prime,
            tt_prime,
        } => Ok((ss_prime * tt_prime - st_prime * ts_prime).abs()
            / ((ss_prime + st_prime) * (tt_prime + ts_prime))),
        _ => Err(Error::WrongInterfaceKind {
            expected: "complete bipartite",
        }),
    }
}

/// The bound for the opposite direction (tripped line in the second
/// sub-grid): the roles of the primed and unprimed buses swap, so the
/// denominator groups `b_ss'` with `b_ts'`.
pub fn bipartite_bound_reverse(spec: &InterfaceSpec) -> Result<f64> {
    match *spec {
        InterfaceSpec::CompleteBipartite {
            ss_prime,
            st_prime,
            ts_prime,
            tt_prime,
        } => bipartite_bound(&InterfaceSpec::CompleteBipartite {
            ss_prime,
            st_prime: ts_prime,
            ts_prime: st_prime,
            tt_prime,
        }),
        _ => Err(Error::WrongInterfaceKind {
            expected: "complete bipartite",
        }),
    }
}

/// Bipartite susceptances that keep within-sub-grid LODFs unchanged and
/// zero the cross-sub-grid ones, given the sub-grids' effective
/// susceptances `b1`, `b2` between the joint buses and a chosen `b_tt'`.
pub fn design_bipartite(b1: f64, b2: f64, tt_prime: f64) -> Result<InterfaceSpec> {
    for (name, v) in [("b1", b1), ("b2", b2), ("b_tt'", tt_prime)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::DesignCondition(format!("{name} = {v} must be positive")));
        }
    }
    if tt_prime >= b1.min(b2) && tt_prime <= b1.max(b2) {
        return Err(Error::DesignCondition(format!(
            "b_tt' = {tt_prime} lies within [{}, {}]",
            b1.min(b2),
            b1.max(b2)
        )));
    }
    let ss_prime = b1 * b2 / tt_prime;
    let st_prime = b2 * (b1 - tt_prime) / (b2 - tt_prime);
    let ts_prime = b1 * (b2 - tt_prime) / (b1 - tt_prime);
    for (name, v) in [("b_ss'", ss_prime), ("b_st'", st_prime), ("b_ts'", ts_prime)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::DesignCondition(format!("designed {name} = {v} is not positive")));
        }
    }
    Ok(InterfaceSpec::CompleteBipartite {
        ss_prime,
        st_prime,
        ts_prime,
        tt_prime,
    })
}

/// [`design_bipartite`] with `b1`, `b2` computed from the joint's sub-grids.
pub fn design_for_joint(joint: &TwoBusJoint, tt_prime: f64) -> Result<InterfaceSpec> {
    let (b1, b2) = joint.subgrid_susceptances()?;
    design_bipartite(b1, b2, tt_prime)
}

/// New line in external bus ids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewLine {
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
}

/// Tie-line switching recipe: lines to switch off, lines to add.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TieLineEdit {
    #[serde(default)]
    pub remove: Vec<LineId>,
    #[serde(default)]
    pub add: Vec<NewLine>,
}

/// Applies a tie-line edit, returning the edited network and the ids given
/// to the added lines. The result must stay connected.
pub fn apply_tie_edits(net: &NetworkModel, edit: &TieLineEdit) -> Result<(NetworkModel, Vec<LineId>)> {
    let mut out = net.remove_lines(&edit.remove)?;
    let mut added = Vec::with_capacity(edit.add.len());
    let mut next_id = net.max_line_id().map_or(0, |m| m.0 + 1);
    for line in &edit.add {
        let id = LineId(next_id);
        next_id += 1;
        out = out.add_line_with_id(id, out.bus(line.from)?, out.bus(line.to)?, line.susceptance)?;
        added.push(id);
    }
    let components = out.component_count();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    Ok((out, added))
}

/// True iff tripping `tripped` (in the first sub-grid) leaves no path
/// between `s` and `t` inside the first sub-grid; the series interface then
/// leaves the cross LODF magnitude unchanged.
pub fn check_series_equality_condition(joint: &TwoBusJoint, tripped: LineId) -> Result<bool> {
    if !joint.g1_lines().contains(&tripped) {
        joint.net().line(tripped)?;
        return Err(Error::NotInFirstSubgrid(tripped));
    }
    if joint.net().is_bridge(tripped)? {
        return Err(Error::BridgeOutage(tripped));
    }
    let g1 = joint.first_subgrid()?.remove_lines(&[tripped])?;
    let s = joint.net().translate(joint.s(), &g1)?;
    let t = joint.net().translate(joint.t(), &g1)?;
    Ok(!g1.connects(s, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Joint at s = 1, t = 3. G1 is the 4-cycle 1-0-3-2-1; G2 is two
    /// 2-line paths 1-4-3 and 1-5-3.
    fn two_cycles() -> TwoBusJoint {
        let net = NetworkModel::from_edges(
            6,
            &[
                (1, 0, 1.0),
                (0, 3, 2.0),
                (1, 2, 1.5),
                (2, 3, 1.0),
                (1, 4, 1.0),
                (4, 3, 3.0),
                (1, 5, 2.0),
                (5, 3, 1.0),
            ],
        )
        .unwrap();
        TwoBusJoint::new(
            net,
            BTreeSet::from([BusId(0), BusId(1), BusId(2), BusId(3)]),
            BTreeSet::from([BusId(1), BusId(3), BusId(4), BusId(5)]),
        )
        .unwrap()
    }

    fn max_cross(inet: &InterfaceNetwork) -> f64 {
        let sens = DcSensitivity::new(&inet.net).unwrap();
        let mut worst: f64 = 0.0;
        for t in inet.partition.lines_on(Side::First) {
            for m in inet.partition.lines_on(Side::Second) {
                worst = worst.max(sens.lodf(m, t).unwrap().abs());
            }
        }
        worst
    }

    #[test]
    fn joint_rejects_adjacent_joint_buses() {
        let net = NetworkModel::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let r = TwoBusJoint::new(
            net,
            BTreeSet::from([BusId(0), BusId(1), BusId(2)]),
            BTreeSet::from([BusId(0), BusId(2)]),
        );
        assert!(matches!(r, Err(Error::InvalidJoint(_))));
    }

    #[test]
    fn series_bookkeeping() {
        let joint = two_cycles();
        let inet = apply_interface(
            &joint,
            &InterfaceSpec::Series {
                ss_prime: 1.0,
                tt_prime: 1.0,
            },
        )
        .unwrap();
        assert_eq!(inet.net.bus_count(), joint.net().bus_count() + 2);
        assert_eq!(inet.net.line_count(), joint.net().line_count() + 2);
        assert!(inet.net.is_connected());
        assert!(inet.net.bridges().is_empty());
        // within G2 plus the interface lines, both interface lines are bridges
        let mut g2m_buses: BTreeSet<BusId> = [BusId(4), BusId(5), inet.s, inet.t].into();
        g2m_buses.extend([inet.s_prime.unwrap(), inet.t_prime.unwrap()]);
        let mut g2m_lines = inet.partition.lines_on(Side::Second);
        g2m_lines.extend(inet.interface_lines.iter().copied());
        let g2m = inet.net.subnetwork(&g2m_buses, &g2m_lines).unwrap();
        let expected: BTreeSet<LineId> = inet.interface_lines.iter().copied().collect();
        assert_eq!(g2m.bridges(), expected);
        // G2 lines now hang off s', t'
        let sp = inet.s_prime.unwrap();
        assert_eq!(inet.net.degree(sp), 3);
    }

    #[test]
    fn bipartite_rank_one_isolates() {
        let inet = apply_interface(
            &two_cycles(),
            &InterfaceSpec::CompleteBipartite {
                ss_prime: 1.0,
                st_prime: 1.0,
                ts_prime: 1.0,
                tt_prime: 1.0,
            },
        )
        .unwrap();
        assert!(max_cross(&inet) <= 1e-12);
    }

    #[test]
    fn parallel_adds_susceptance() {
        let joint = two_cycles();
        let before = DcSensitivity::new(joint.net())
            .unwrap()
            .effective_susceptance(joint.s(), joint.t())
            .unwrap()
            .value;
        let inet = apply_interface(&joint, &InterfaceSpec::Parallel { st: 0.7, on_series: None }).unwrap();
        let after = DcSensitivity::new(&inet.net)
            .unwrap()
            .effective_susceptance(joint.s(), joint.t())
            .unwrap()
            .value;
        assert_abs_diff_eq!(after - before, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn zero_susceptance_rejected() {
        let r = apply_interface(
            &two_cycles(),
            &InterfaceSpec::Series {
                ss_prime: 0.0,
                tt_prime: 1.0,
            },
        );
        assert!(matches!(r, Err(Error::DesignCondition(_))));
    }

    #[test]
    fn bound_values() {
        let spec = |a, b, c, d| InterfaceSpec::CompleteBipartite {
            ss_prime: a,
            st_prime: b,
            ts_prime: c,
            tt_prime: d,
        };
        assert_eq!(bipartite_bound(&spec(1.0, 1.0, 1.0, 1.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(bipartite_bound(&spec(2.0, 1.0, 1.0, 1.0)).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        assert!(matches!(
            bipartite_bound(&InterfaceSpec::Series {
                ss_prime: 1.0,
                tt_prime: 1.0
            }),
            Err(Error::WrongInterfaceKind { .. })
        ));
    }

    #[test]
    fn design_values() {
        let InterfaceSpec::CompleteBipartite {
            ss_prime,
            st_prime,
            ts_prime,
            tt_prime,
        } = design_bipartite(2.0, 1.0, 0.5).unwrap()
        else {
            panic!("wrong kind")
        };
        assert_abs_diff_eq!(ss_prime, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(st_prime, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ts_prime, 2.0 / 3.0, epsilon = 1e-14);
        assert_eq!(tt_prime, 0.5);

        let InterfaceSpec::CompleteBipartite {
            ss_prime, st_prime, ts_prime, ..
        } = design_bipartite(3.0, 3.0, 1.5).unwrap()
        else {
            panic!("wrong kind")
        };
        assert_abs_diff_eq!(ss_prime, 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(st_prime, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ts_prime, 3.0, epsilon = 1e-14);

        assert!(matches!(design_bipartite(2.0, 1.0, 1.5), Err(Error::DesignCondition(_))));
        assert!(matches!(design_bipartite(2.0, 1.0, 1.0), Err(Error::DesignCondition(_))));
        assert!(design_bipartite(2.0, 1.0, 5.0).is_ok());
    }

    #[test]
    fn designed_interface_isolates_and_preserves() {
        let joint = two_cycles();
        let spec = design_for_joint(&joint, 0.3).unwrap();
        let inet = apply_interface(&joint, &spec).unwrap();
        assert!(max_cross(&inet) <= 1e-10);

        let before = DcSensitivity::new(joint.net()).unwrap();
        let after = DcSensitivity::new(&inet.net).unwrap();
        for side in [Side::First, Side::Second] {
            let lines = joint.partition().lines_on(side);
            for &t in &lines {
                for &m in &lines {
                    if t == m {
                        continue;
                    }
                    assert_abs_diff_eq!(
                        after.lodf(m, t).unwrap(),
                        before.lodf(m, t).unwrap(),
                        epsilon = 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn tie_edits() {
        // two triangles joined by four ties
        let net = NetworkModel::from_edges(
            6,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 0, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (5, 3, 1.0),
                (0, 3, 1.0),
                (1, 4, 1.0),
                (2, 5, 1.0),
                (0, 5, 1.0),
            ],
        )
        .unwrap();
        let edit = TieLineEdit {
            remove: vec![LineId(8), LineId(9)],
            add: vec![],
        };
        let (out, _) = apply_tie_edits(&net, &edit).unwrap();
        assert!(out.is_connected());
        assert_eq!(out.line_count(), 8);

        let all = TieLineEdit {
            remove: vec![LineId(6), LineId(7), LineId(8), LineId(9)],
            add: vec![],
        };
        assert!(matches!(apply_tie_edits(&net, &all), Err(Error::Disconnected { .. })));

        let with_add = TieLineEdit {
            remove: vec![LineId(6), LineId(7), LineId(8), LineId(9)],
            add: vec![NewLine {
                from: 1,
                to: 3,
                susceptance: 2.0,
            }],
        };
        let (out, added) = apply_tie_edits(&net, &with_add).unwrap();
        assert_eq!(added, vec![LineId(10)]);
        assert!(out.is_connected());
        assert!(matches!(
            apply_tie_edits(&net, &TieLineEdit { remove: vec![LineId(99)], add: vec![] }),
            Err(Error::UnknownLine(_))
        ));
    }

    #[test]
    fn series_equality_predicate() {
        // G1 is the path 1-0-3; G2 the two paths 1-4-3 and 1-2-3
        let net = NetworkModel::from_edges(
            5,
            &[(1, 0, 1.0), (0, 3, 1.0), (1, 4, 1.0), (4, 3, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
        )
        .unwrap();
        let joint = TwoBusJoint::new(
            net,
            BTreeSet::from([BusId(0), BusId(1), BusId(3)]),
            BTreeSet::from([BusId(1), BusId(2), BusId(3), BusId(4)]),
        )
        .unwrap();
        assert!(check_series_equality_condition(&joint, LineId(0)).unwrap());
        assert!(check_series_equality_condition(&joint, LineId(1)).unwrap());
        assert!(matches!(
            check_series_equality_condition(&joint, LineId(2)),
            Err(Error::NotInFirstSubgrid(_))
        ));

        let cyc = two_cycles();
        assert!(!check_series_equality_condition(&cyc, LineId(0)).unwrap());
    }
}
