//! Immutable transmission-network graph.
//!
//! A [`NetworkModel`] is a directed multigraph of buses and
//! susceptance-weighted lines. Bus ids are re-indexed densely at
//! construction (the caller's ids survive as "external" ids), while line ids
//! are kept as given. Every structural edit returns a fresh network.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense bus index, `0..n` within one network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BusId(pub usize);

/// Stable line identifier (MATPOWER branch row number for parsed cases).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineId(pub usize);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: LineId,
    pub from: BusId,
    pub to: BusId,
    /// Per-unit, strictly positive.
    pub susceptance: f64,
}

impl Line {
    pub fn touches(&self, bus: BusId) -> bool {
        self.from == bus || self.to == bus
    }

    /// The endpoint opposite to `bus`.
    pub fn other(&self, bus: BusId) -> BusId {
        if self.from == bus {
            self.to
        } else {
            self.from
        }
    }
}

/// Line description in terms of external bus ids, used to build networks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
}

#[derive(Debug, Clone)]
pub struct NetworkModel {
    external: Vec<usize>,
    by_external: HashMap<usize, BusId>,
    lines: Vec<Line>,
    line_index: HashMap<LineId, usize>,
    incidence: DMatrix<f64>,
    laplacian: DMatrix<f64>,
}

/// Builds a network from external bus ids and line specs.
pub fn build_network(bus_ids: &[usize], lines: &[LineSpec]) -> Result<NetworkModel> {
    let mut by_external = HashMap::with_capacity(bus_ids.len());
    for (k, &ext) in bus_ids.iter().enumerate() {
        if by_external.insert(ext, BusId(k)).is_some() {
            return Err(Error::DuplicateBus(ext));
        }
    }
    let resolved = lines
        .iter()
        .map(|l| {
            let from = *by_external.get(&l.from).ok_or(Error::UnknownBus(l.from))?;
            let to = *by_external.get(&l.to).ok_or(Error::UnknownBus(l.to))?;
            Ok(Line {
                id: LineId(l.id),
                from,
                to,
                susceptance: l.susceptance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkModel::assemble(bus_ids.to_vec(), resolved)
}

impl NetworkModel {
    /// Convenience constructor: buses `0..n` (external id = index), lines
    /// numbered `0..m` in the given order.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let buses: Vec<usize> = (0..n).collect();
        let specs: Vec<LineSpec> = edges
            .iter()
            .enumerate()
            .map(|(k, &(from, to, susceptance))| LineSpec {
                id: k,
                from,
                to,
                susceptance,
            })
            .collect();
        build_network(&buses, &specs)
    }

    fn assemble(external: Vec<usize>, lines: Vec<Line>) -> Result<Self> {
        let n = external.len();
        let m = lines.len();
        let by_external = external
            .iter()
            .enumerate()
            .map(|(k, &ext)| (ext, BusId(k)))
            .collect::<HashMap<_, _>>();
        if by_external.len() != n {
            let mut seen = BTreeSet::new();
            let dup = external.iter().find(|e| !seen.insert(**e)).copied();
            return Err(Error::DuplicateBus(dup.unwrap_or_default()));
        }
        let mut line_index = HashMap::with_capacity(m);
        let mut incidence = DMatrix::zeros(n, m);
        let mut laplacian = DMatrix::zeros(n, n);
        for (e, line) in lines.iter().enumerate() {
            if line_index.insert(line.id, e).is_some() {
                return Err(Error::DuplicateLine(line.id));
            }
            if line.from == line.to {
                return Err(Error::SelfLoop(line.id));
            }
            if !(line.susceptance > 0.0) || !line.susceptance.is_finite() {
                return Err(Error::NonPositiveSusceptance {
                    line: line.id,
                    value: line.susceptance,
                });
            }
            let (i, j, b) = (line.from.0, line.to.0, line.susceptance);
            incidence[(i, e)] = 1.0;
            incidence[(j, e)] = -1.0;
            laplacian[(i, i)] += b;
            laplacian[(j, j)] += b;
            laplacian[(i, j)] -= b;
            laplacian[(j, i)] -= b;
        }
        Ok(NetworkModel {
            external,
            by_external,
            lines,
            line_index,
            incidence,
            laplacian,
        })
    }

    pub fn bus_count(&self) -> usize {
        self.external.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn buses(&self) -> impl Iterator<Item = BusId> + '_ {
        (0..self.external.len()).map(BusId)
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn line_ids(&self) -> impl Iterator<Item = LineId> + '_ {
        self.lines.iter().map(|l| l.id)
    }

    pub fn line(&self, id: LineId) -> Result<&Line> {
        self.line_index
            .get(&id)
            .map(|&k| &self.lines[k])
            .ok_or(Error::UnknownLine(id))
    }

    /// Column of `id` in the incidence matrix.
    pub fn line_position(&self, id: LineId) -> Result<usize> {
        self.line_index.get(&id).copied().ok_or(Error::UnknownLine(id))
    }

    pub fn contains_line(&self, id: LineId) -> bool {
        self.line_index.contains_key(&id)
    }

    pub fn external_id(&self, bus: BusId) -> usize {
        self.external[bus.0]
    }

    pub fn external_ids(&self) -> &[usize] {
        &self.external
    }

    /// Looks a bus up by its external id.
    pub fn bus(&self, external: usize) -> Result<BusId> {
        self.by_external
            .get(&external)
            .copied()
            .ok_or(Error::UnknownBus(external))
    }

    pub fn incidence(&self) -> &DMatrix<f64> {
        &self.incidence
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn susceptances(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.susceptance).collect()
    }

    pub fn max_line_id(&self) -> Option<LineId> {
        self.lines.iter().map(|l| l.id).max()
    }

    pub fn incident_lines(&self, bus: BusId) -> Vec<LineId> {
        self.lines
            .iter()
            .filter(|l| l.touches(bus))
            .map(|l| l.id)
            .collect()
    }

    pub fn degree(&self, bus: BusId) -> usize {
        self.lines.iter().filter(|l| l.touches(bus)).count()
    }

    pub fn are_adjacent(&self, a: BusId, b: BusId) -> bool {
        self.lines
            .iter()
            .any(|l| (l.from == a && l.to == b) || (l.from == b && l.to == a))
    }

    fn component_labels(&self) -> (Vec<usize>, usize) {
        let n = self.bus_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for line in &self.lines {
            let a = find(&mut parent, line.from.0);
            let b = find(&mut parent, line.to.0);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut out = vec![0; n];
        for (v, slot) in out.iter_mut().enumerate() {
            let root = find(&mut parent, v);
            if label[root] == usize::MAX {
                label[root] = next;
                next += 1;
            }
            *slot = label[root];
        }
        (out, next)
    }

    /// Partition of the buses into connected components, ordered by their
    /// smallest bus.
    pub fn connected_components(&self) -> Vec<Vec<BusId>> {
        let (labels, count) = self.component_labels();
        let mut comps = vec![Vec::new(); count];
        for (v, &c) in labels.iter().enumerate() {
            comps[c].push(BusId(v));
        }
        comps
    }

    pub fn component_count(&self) -> usize {
        self.component_labels().1
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    /// Whether `a` and `b` lie in the same connected component.
    pub fn connects(&self, a: BusId, b: BusId) -> bool {
        let (labels, _) = self.component_labels();
        labels[a.0] == labels[b.0]
    }

    /// All bridge lines, found with an iterative Tarjan low-link sweep.
    /// Parallel lines are never bridges.
    pub fn bridges(&self) -> BTreeSet<LineId> {
        let n = self.bus_count();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (e, l) in self.lines.iter().enumerate() {
            adj[l.from.0].push((l.to.0, e));
            adj[l.to.0].push((l.from.0, e));
        }
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0;
        let mut out = BTreeSet::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // (vertex, edge used to enter it, next adjacency slot)
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(&mut (v, via, ref mut slot)) = stack.last_mut() {
                if *slot < adj[v].len() {
                    let (w, e) = adj[v][*slot];
                    *slot += 1;
                    if e == via {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, e, 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(parent, _, _)) = stack.last() {
                        low[parent] = low[parent].min(low[v]);
                        if low[v] > disc[parent] {
                            out.insert(self.lines[via].id);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_bridge(&self, line: LineId) -> Result<bool> {
        self.line(line)?;
        Ok(self.bridges().contains(&line))
    }

    /// Removes the given lines; the bus set is unchanged.
    pub fn remove_lines(&self, ids: &[LineId]) -> Result<Self> {
        for id in ids {
            self.line(*id)?;
        }
        let lines = self
            .lines
            .iter()
            .filter(|l| !ids.contains(&l.id))
            .copied()
            .collect();
        Self::assemble(self.external.clone(), lines)
    }

    /// Adds a line with a fresh id (one past the current maximum).
    pub fn add_line(&self, from: BusId, to: BusId, susceptance: f64) -> Result<(Self, LineId)> {
        let id = self.max_line_id().map_or(LineId(0), |m| LineId(m.0 + 1));
        Ok((self.add_line_with_id(id, from, to, susceptance)?, id))
    }

    pub fn add_line_with_id(
        &self,
        id: LineId,
        from: BusId,
        to: BusId,
        susceptance: f64,
    ) -> Result<Self> {
        for bus in [from, to] {
            if bus.0 >= self.bus_count() {
                return Err(Error::UnknownBus(bus.0));
            }
        }
        let mut lines = self.lines.clone();
        lines.push(Line {
            id,
            from,
            to,
            susceptance,
        });
        Self::assemble(self.external.clone(), lines)
    }

    /// Appends a new bus (external id `new_external`) and moves the chosen
    /// incident lines of `bus` onto it. No line joins the two halves.
    pub fn split_bus(
        &self,
        bus: BusId,
        moved: &[LineId],
        new_external: usize,
    ) -> Result<(Self, BusId)> {
        if bus.0 >= self.bus_count() {
            return Err(Error::UnknownBus(bus.0));
        }
        if self.by_external.contains_key(&new_external) {
            return Err(Error::DuplicateBus(new_external));
        }
        for id in moved {
            if !self.line(*id)?.touches(bus) {
                return Err(Error::LineNotIncident { line: *id, bus });
            }
        }
        let new_bus = BusId(self.bus_count());
        let mut external = self.external.clone();
        external.push(new_external);
        let lines = self
            .lines
            .iter()
            .map(|l| {
                let mut l = *l;
                if moved.contains(&l.id) {
                    if l.from == bus {
                        l.from = new_bus;
                    } else {
                        l.to = new_bus;
                    }
                }
                l
            })
            .collect();
        Ok((Self::assemble(external, lines)?, new_bus))
    }

    /// Same topology with one line's susceptance replaced.
    pub fn with_susceptance(&self, id: LineId, susceptance: f64) -> Result<Self> {
        let k = self.line_position(id)?;
        let mut lines = self.lines.clone();
        lines[k].susceptance = susceptance;
        Self::assemble(self.external.clone(), lines)
    }

    /// Sub-network induced by `buses`: keeps the lines with both endpoints
    /// inside, preserving external bus ids and line ids.
    pub fn induced(&self, buses: &BTreeSet<BusId>) -> Result<Self> {
        self.restrict(buses, |_| true)
    }

    /// Sub-network on `buses` keeping only the listed lines (each must have
    /// both endpoints inside).
    pub fn subnetwork(&self, buses: &BTreeSet<BusId>, lines: &BTreeSet<LineId>) -> Result<Self> {
        for id in lines {
            let l = self.line(*id)?;
            if !buses.contains(&l.from) || !buses.contains(&l.to) {
                return Err(Error::LineNotIncident {
                    line: *id,
                    bus: if buses.contains(&l.from) { l.to } else { l.from },
                });
            }
        }
        self.restrict(buses, |id| lines.contains(&id))
    }

    fn restrict(&self, buses: &BTreeSet<BusId>, keep: impl Fn(LineId) -> bool) -> Result<Self> {
        let mut map = HashMap::new();
        let mut external = Vec::with_capacity(buses.len());
        for (k, b) in buses.iter().enumerate() {
            if b.0 >= self.bus_count() {
                return Err(Error::UnknownBus(b.0));
            }
            map.insert(*b, BusId(k));
            external.push(self.external[b.0]);
        }
        let lines = self
            .lines
            .iter()
            .filter(|l| keep(l.id))
            .filter_map(|l| {
                Some(Line {
                    id: l.id,
                    from: *map.get(&l.from)?,
                    to: *map.get(&l.to)?,
                    susceptance: l.susceptance,
                })
            })
            .collect();
        Self::assemble(external, lines)
    }

    /// Maps a bus of `self` to the bus with the same external id in `other`.
    pub fn translate(&self, bus: BusId, other: &NetworkModel) -> Result<BusId> {
        other.bus(self.external_id(bus))
    }

    /// Line specs in external-id terms, e.g. for re-emission.
    pub fn line_specs(&self) -> Vec<LineSpec> {
        self.lines
            .iter()
            .map(|l| LineSpec {
                id: l.id.0,
                from: self.external[l.from.0],
                to: self.external[l.to.0],
                susceptance: l.susceptance,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> NetworkModel {
        NetworkModel::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    fn path3() -> NetworkModel {
        NetworkModel::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn triangle_laplacian() {
        let net = triangle();
        let l = net.laplacian();
        for i in 0..3 {
            assert_eq!(l[(i, i)], 2.0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(l[(i, j)], -1.0);
                }
            }
        }
    }

    #[test]
    fn single_line_laplacian() {
        let net = NetworkModel::from_edges(2, &[(0, 1, 5.0)]).unwrap();
        assert_eq!(
            net.laplacian(),
            &DMatrix::from_row_slice(2, 2, &[5.0, -5.0, -5.0, 5.0])
        );
    }

    #[test]
    fn empty_lines_disconnected() {
        let net = NetworkModel::from_edges(2, &[]).unwrap();
        assert_eq!(net.connected_components().len(), 2);
        assert!(!net.is_connected());
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            build_network(&[1, 1], &[]),
            Err(Error::DuplicateBus(1))
        ));
        assert!(matches!(
            NetworkModel::from_edges(2, &[(0, 0, 1.0)]),
            Err(Error::SelfLoop(_))
        ));
        assert!(matches!(
            NetworkModel::from_edges(2, &[(0, 1, 0.0)]),
            Err(Error::NonPositiveSusceptance { .. })
        ));
        assert!(matches!(
            NetworkModel::from_edges(2, &[(0, 1, -2.0)]),
            Err(Error::NonPositiveSusceptance { .. })
        ));
        assert!(matches!(
            NetworkModel::from_edges(2, &[(0, 5, 1.0)]),
            Err(Error::UnknownBus(5))
        ));
    }

    #[test]
    fn external_ids_are_densified() {
        let specs = [LineSpec {
            id: 7,
            from: 40,
            to: 10,
            susceptance: 2.0,
        }];
        let net = build_network(&[10, 40], &specs).unwrap();
        assert_eq!(net.bus(40).unwrap(), BusId(1));
        assert_eq!(net.external_id(BusId(0)), 10);
        let line = net.line(LineId(7)).unwrap();
        assert_eq!((line.from, line.to), (BusId(1), BusId(0)));
        assert_eq!(net.incidence()[(1, 0)], 1.0);
        assert_eq!(net.incidence()[(0, 0)], -1.0);
    }

    #[test]
    fn components() {
        assert_eq!(triangle().connected_components().len(), 1);
        let two = NetworkModel::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(two.connected_components().len(), 2);
    }

    #[test]
    fn bridges_basic() {
        assert!(path3().is_bridge(LineId(0)).unwrap());
        let tri = triangle();
        for id in tri.line_ids() {
            assert!(!tri.is_bridge(id).unwrap());
        }
        assert!(matches!(tri.is_bridge(LineId(9)), Err(Error::UnknownLine(_))));
        // parallel lines are never bridges
        let par = NetworkModel::from_edges(3, &[(0, 1, 1.0), (0, 1, 2.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(par.bridges(), BTreeSet::from([LineId(2)]));
    }

    #[test]
    fn remove_lines_cases() {
        let tri = triangle();
        let path = tri.remove_lines(&[LineId(0)]).unwrap();
        assert_eq!(path.line_count(), 2);
        assert!(path.is_connected());
        assert_eq!(tri.line_count(), 3);

        let split = path3().remove_lines(&[LineId(0)]).unwrap();
        assert_eq!(split.component_count(), 2);

        let iso = tri.remove_lines(&[LineId(0), LineId(2)]).unwrap();
        assert_eq!(iso.bus_count(), 3);
        assert_eq!(iso.degree(BusId(0)), 0);

        assert!(matches!(
            tri.remove_lines(&[LineId(42)]),
            Err(Error::UnknownLine(_))
        ));
    }

    #[test]
    fn add_line_cases() {
        let (tri, id) = path3().add_line(BusId(0), BusId(2), 1.0).unwrap();
        assert_eq!(id, LineId(2));
        assert_eq!(tri.laplacian(), triangle().laplacian());

        let one = NetworkModel::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let (two, _) = one.add_line(BusId(0), BusId(1), 2.0).unwrap();
        assert_eq!(two.laplacian()[(0, 0)], 3.0);

        let disc = NetworkModel::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let (joined, _) = disc.add_line(BusId(1), BusId(2), 1.0).unwrap();
        assert_eq!(joined.component_count(), disc.component_count() - 1);

        assert!(matches!(
            one.add_line(BusId(0), BusId(0), 1.0),
            Err(Error::SelfLoop(_))
        ));
        assert!(matches!(
            one.add_line(BusId(0), BusId(1), 0.0),
            Err(Error::NonPositiveSusceptance { .. })
        ));
    }

    #[test]
    fn split_bus_cases() {
        let star = NetworkModel::from_edges(
            5,
            &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0)],
        )
        .unwrap();
        let (split, new) = star.split_bus(BusId(0), &[LineId(2), LineId(3)], 100).unwrap();
        assert_eq!((split.degree(BusId(0)), split.degree(new)), (2, 2));
        assert_eq!(split.external_id(new), 100);

        let (iso, new) = star.split_bus(BusId(0), &[], 100).unwrap();
        assert_eq!(iso.degree(new), 0);
        assert_eq!(iso.bus_count(), 6);

        let (tri_split, _) = triangle().split_bus(BusId(0), &[LineId(0)], 3).unwrap();
        assert_eq!((tri_split.bus_count(), tri_split.line_count()), (4, 3));
        // 3 - 1 - 2 - 0 is still a path: one component
        assert_eq!(tri_split.component_count(), 1);

        assert!(matches!(
            star.split_bus(BusId(1), &[LineId(2)], 100),
            Err(Error::LineNotIncident { .. })
        ));
    }

    #[test]
    fn induced_keeps_ids() {
        let net = NetworkModel::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let sub = net
            .induced(&BTreeSet::from([BusId(1), BusId(2), BusId(3)]))
            .unwrap();
        assert_eq!(sub.line_count(), 2);
        assert!(sub.contains_line(LineId(2)));
        assert_eq!(net.translate(BusId(3), &sub).unwrap(), BusId(2));
    }
}
