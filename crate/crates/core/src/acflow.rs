//! Polar Newton-Raphson AC power flow and AC line-outage factors.
//!
//! Quantities are per-unit on the case base. Generators are aggregated per
//! bus; reactive limits are not enforced.

use std::collections::{BTreeSet, HashMap};

use log::debug;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::caseio::RawCase;
use crate::error::{Error, Result};
use crate::netmodel::LineId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcBus {
    pub external: usize,
    pub kind: BusKind,
    pub pd: f64,
    pub qd: f64,
    pub pg: f64,
    pub qg: f64,
    pub gs: f64,
    pub bs: f64,
    /// Voltage magnitude setpoint (PV and slack buses).
    pub vm_set: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcBranch {
    pub id: LineId,
    /// Bus positions, not external ids.
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub charging: f64,
    /// Off-nominal ratio, 1 for lines.
    pub tap: f64,
    /// Radians.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcCase {
    pub buses: Vec<AcBus>,
    pub branches: Vec<AcBranch>,
    by_external: HashMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcState {
    pub vm: DVector<f64>,
    pub va: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcSolution {
    pub state: AcState,
    pub iterations: usize,
    /// Max-norm of the final power mismatch.
    pub mismatch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchFlow {
    pub id: LineId,
    pub from: Complex64,
    pub to: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for AcOptions {
    fn default() -> Self {
        AcOptions {
            tolerance: 1e-10,
            max_iterations: 30,
        }
    }
}

impl AcCase {
    /// Builds the solver case from parsed MATPOWER tables. Out-of-service
    /// branches and generators are dropped; a PV bus with no generator in
    /// service is treated as PQ.
    pub fn from_raw(raw: &RawCase) -> Result<Self> {
        let base = raw.base_mva;
        if !(base > 0.0) {
            return Err(Error::InvalidCase(format!("baseMVA {base}")));
        }
        let by_external: HashMap<usize, usize> =
            raw.buses.iter().enumerate().map(|(k, b)| (b.id, k)).collect();
        let mut buses: Vec<AcBus> = raw
            .buses
            .iter()
            .map(|b| {
                let kind = match b.kind {
                    3 => Ok(BusKind::Slack),
                    2 => Ok(BusKind::Pv),
                    1 => Ok(BusKind::Pq),
                    k => Err(Error::InvalidCase(format!("bus {} has unsupported type {k}", b.id))),
                }?;
                Ok(AcBus {
                    external: b.id,
                    kind,
                    pd: b.pd / base,
                    qd: b.qd / base,
                    pg: 0.0,
                    qg: 0.0,
                    gs: b.gs / base,
                    bs: b.bs / base,
                    vm_set: b.vm,
                })
            })
            .collect::<Result<_>>()?;
        let mut has_gen = vec![false; buses.len()];
        for g in raw.gens.iter().filter(|g| g.status) {
            let k = by_external[&g.bus];
            buses[k].pg += g.pg / base;
            buses[k].qg += g.qg / base;
            if !has_gen[k] {
                buses[k].vm_set = g.vg;
            }
            has_gen[k] = true;
        }
        for (bus, &gen) in buses.iter_mut().zip(&has_gen) {
            if bus.kind == BusKind::Pv && !gen {
                bus.kind = BusKind::Pq;
            }
        }
        let branches = raw
            .branches
            .iter()
            .enumerate()
            .filter(|(_, br)| br.status)
            .map(|(k, br)| AcBranch {
                id: RawCase::branch_id(k),
                from: by_external[&br.from],
                to: by_external[&br.to],
                r: br.r,
                x: br.x,
                charging: br.b,
                tap: if br.tap == 0.0 { 1.0 } else { br.tap },
                shift: br.shift.to_radians(),
            })
            .collect();
        let case = AcCase {
            buses,
            branches,
            by_external,
        };
        case.check_slacks()?;
        Ok(case)
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn bus_position(&self, external: usize) -> Result<usize> {
        self.by_external
            .get(&external)
            .copied()
            .ok_or(Error::UnknownBus(external))
    }

    pub fn branch_position(&self, id: LineId) -> Result<usize> {
        self.branches
            .iter()
            .position(|b| b.id == id)
            .ok_or(Error::UnknownLine(id))
    }

    fn components(&self) -> Vec<usize> {
        let n = self.buses.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for br in &self.branches {
            let (a, b) = (find(&mut parent, br.from), find(&mut parent, br.to));
            parent[a] = b;
        }
        (0..n).map(|k| find(&mut parent, k)).collect()
    }

    /// Exactly one slack bus per connected component.
    pub fn check_slacks(&self) -> Result<()> {
        let comp = self.components();
        let mut count: HashMap<usize, (usize, usize)> = HashMap::new();
        for (k, bus) in self.buses.iter().enumerate() {
            let e = count.entry(comp[k]).or_insert((bus.external, 0));
            if bus.kind == BusKind::Slack {
                e.1 += 1;
            }
        }
        let mut bad: Vec<(usize, usize)> = count.into_values().filter(|&(_, c)| c != 1).collect();
        bad.sort_unstable();
        match bad.first() {
            Some(&(bus, count)) => Err(Error::SlackCount { bus, count }),
            None => Ok(()),
        }
    }

    pub fn remove_branches(&self, ids: &[LineId]) -> Result<Self> {
        let drop: BTreeSet<LineId> = ids.iter().copied().collect();
        for id in &drop {
            self.branch_position(*id)?;
        }
        let mut out = self.clone();
        out.branches.retain(|b| !drop.contains(&b.id));
        Ok(out)
    }

    /// Adds a branch between external bus ids; the id must be unused.
    pub fn add_branch(&self, id: LineId, from: usize, to: usize, r: f64, x: f64, charging: f64) -> Result<Self> {
        if self.branches.iter().any(|b| b.id == id) {
            return Err(Error::DuplicateLine(id));
        }
        if x == 0.0 {
            return Err(Error::ZeroReactance(id.0));
        }
        let mut out = self.clone();
        out.branches.push(AcBranch {
            id,
            from: self.bus_position(from)?,
            to: self.bus_position(to)?,
            r,
            x,
            charging,
            tap: 1.0,
            shift: 0.0,
        });
        Ok(out)
    }

    /// Lossless, flat-voltage variant: no resistance, charging, shunts,
    /// taps or shifts, and every setpoint at 1 p.u.
    pub fn lossless_flat(&self) -> Self {
        let mut out = self.clone();
        for b in &mut out.branches {
            b.r = 0.0;
            b.charging = 0.0;
            b.tap = 1.0;
            b.shift = 0.0;
        }
        for bus in &mut out.buses {
            bus.gs = 0.0;
            bus.bs = 0.0;
            bus.vm_set = 1.0;
        }
        out
    }

    pub fn scale_injections(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for bus in &mut out.buses {
            bus.pd *= factor;
            bus.qd *= factor;
            bus.pg *= factor;
            bus.qg *= factor;
        }
        out
    }

    /// Net scheduled injection per bus.
    pub fn injections(&self) -> (DVector<f64>, DVector<f64>) {
        let p = DVector::from_iterator(self.buses.len(), self.buses.iter().map(|b| b.pg - b.pd));
        let q = DVector::from_iterator(self.buses.len(), self.buses.iter().map(|b| b.qg - b.qd));
        (p, q)
    }

    /// Bus admittance matrix.
    pub fn ybus(&self) -> DMatrix<Complex64> {
        let n = self.buses.len();
        let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for br in &self.branches {
            let [yff, yft, ytf, ytt] = branch_admittance(br);
            y[(br.from, br.from)] += yff;
            y[(br.from, br.to)] += yft;
            y[(br.to, br.from)] += ytf;
            y[(br.to, br.to)] += ytt;
        }
        for (k, bus) in self.buses.iter().enumerate() {
            y[(k, k)] += Complex64::new(bus.gs, bus.bs);
        }
        y
    }

    pub fn flat_start(&self) -> AcState {
        let n = self.buses.len();
        let vm = DVector::from_iterator(
            n,
            self.buses.iter().map(|b| match b.kind {
                BusKind::Pq => 1.0,
                _ => b.vm_set,
            }),
        );
        AcState {
            vm,
            va: DVector::zeros(n),
        }
    }
}

/// `[Yff, Yft, Ytf, Ytt]` of the standard pi model with a from-side transformer.
fn branch_admittance(br: &AcBranch) -> [Complex64; 4] {
    let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
    let ytt = ys + Complex64::new(0.0, br.charging / 2.0);
    let tau = Complex64::from_polar(br.tap, br.shift);
    [
        ytt / (br.tap * br.tap),
        -ys / tau.conj(),
        -ys / tau,
        ytt,
    ]
}

fn voltages(state: &AcState) -> DVector<Complex64> {
    DVector::from_iterator(
        state.vm.len(),
        state.vm.iter().zip(state.va.iter()).map(|(&m, &a)| Complex64::from_polar(m, a)),
    )
}

/// Complex power injected at each bus by the network and shunts.
pub fn bus_injections(ybus: &DMatrix<Complex64>, state: &AcState) -> DVector<Complex64> {
    let v = voltages(state);
    let i = ybus * &v;
    v.zip_map(&i, |v, i| v * i.conj())
}

fn mismatch(case: &AcCase, ybus: &DMatrix<Complex64>, state: &AcState, pvpq: &[usize], pq: &[usize]) -> DVector<f64> {
    let s = bus_injections(ybus, state);
    let (p, q) = case.injections();
    let mut f = DVector::zeros(pvpq.len() + pq.len());
    for (r, &k) in pvpq.iter().enumerate() {
        f[r] = s[k].re - p[k];
    }
    for (r, &k) in pq.iter().enumerate() {
        f[pvpq.len() + r] = s[k].im - q[k];
    }
    f
}

/// Newton-Raphson solve from `start`. The slack angle is held at its start value.
pub fn solve_ac(case: &AcCase, start: &AcState, options: &AcOptions) -> Result<AcSolution> {
    let n = case.bus_count();
    if start.vm.len() != n || start.va.len() != n {
        return Err(Error::InvalidCase("start state has the wrong dimension".into()));
    }
    case.check_slacks()?;
    let ybus = case.ybus();
    let pv: Vec<usize> = (0..n).filter(|&k| case.buses[k].kind == BusKind::Pv).collect();
    let pq: Vec<usize> = (0..n).filter(|&k| case.buses[k].kind == BusKind::Pq).collect();
    let pvpq: Vec<usize> = pv.iter().chain(&pq).copied().collect();
    let (npvpq, npq) = (pvpq.len(), pq.len());

    let mut state = start.clone();
    let mut f = mismatch(case, &ybus, &state, &pvpq, &pq);
    let mut norm = f.amax();
    let mut iterations = 0;
    while norm >= options.tolerance {
        if iterations == options.max_iterations || !norm.is_finite() {
            return Err(Error::NonConvergence {
                iterations,
                mismatch: norm,
            });
        }
        iterations += 1;
        let jac = jacobian(&ybus, &state, &pvpq, &pq);
        let dx = jac.lu().solve(&f).ok_or(Error::SingularJacobian)?;
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        for (r, &k) in pvpq.iter().enumerate() {
            state.va[k] -= dx[r];
        }
        for (r, &k) in pq.iter().enumerate() {
            state.vm[k] -= dx[npvpq + r];
        }
        f = mismatch(case, &ybus, &state, &pvpq, &pq);
        norm = f.amax();
        debug!("newton iteration {iterations}: mismatch {norm:e}");
    }
    debug_assert_eq!(f.len(), npvpq + npq);
    Ok(AcSolution {
        state,
        iterations,
        mismatch: norm,
    })
}

/// Power-flow Jacobian rows `[P(pvpq); Q(pq)]`, columns `[Va(pvpq), Vm(pq)]`.
fn jacobian(ybus: &DMatrix<Complex64>, state: &AcState, pvpq: &[usize], pq: &[usize]) -> DMatrix<f64> {
    let n = state.vm.len();
    let v = voltages(state);
    let ibus = ybus * &v;
    let vnorm = v.map(|x| x / x.norm());
    let j = Complex64::new(0.0, 1.0);
    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
    // dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    let mut dva = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let mut dvm = dva.clone();
    for r in 0..n {
        for c in 0..n {
            let y = ybus[(r, c)];
            if y == Complex64::new(0.0, 0.0) && r != c {
                continue;
            }
            let diag = if r == c { 1.0 } else { 0.0 };
            dva[(r, c)] = j * v[r] * (ibus[r] * diag - y * v[c]).conj();
            dvm[(r, c)] = v[r] * (y * vnorm[c]).conj() + ibus[r].conj() * vnorm[c] * diag;
        }
    }
    let (a, b) = (pvpq.len(), pq.len());
    let mut jac = DMatrix::zeros(a + b, a + b);
    for (ri, &r) in pvpq.iter().enumerate() {
        for (ci, &c) in pvpq.iter().enumerate() {
            jac[(ri, ci)] = dva[(r, c)].re;
        }
        for (ci, &c) in pq.iter().enumerate() {
            jac[(ri, a + ci)] = dvm[(r, c)].re;
        }
    }
    for (ri, &r) in pq.iter().enumerate() {
        for (ci, &c) in pvpq.iter().enumerate() {
            jac[(a + ri, ci)] = dva[(r, c)].im;
        }
        for (ci, &c) in pq.iter().enumerate() {
            jac[(a + ri, a + ci)] = dvm[(r, c)].im;
        }
    }
    jac
}

/// Complex power entering each branch at its two ends.
pub fn ac_branch_flow(case: &AcCase, state: &AcState) -> Vec<BranchFlow> {
    let v = voltages(state);
    case.branches
        .iter()
        .map(|br| {
            let [yff, yft, ytf, ytt] = branch_admittance(br);
            let (vf, vt) = (v[br.from], v[br.to]);
            BranchFlow {
                id: br.id,
                from: vf * (yff * vf + yft * vt).conj(),
                to: vt * (ytf * vf + ytt * vt).conj(),
            }
        })
        .collect()
}

/// Residual of real-power conservation: scheduled injections (solved output
/// at slack buses) minus branch losses and shunt consumption.
pub fn conservation_residual(case: &AcCase, state: &AcState) -> f64 {
    let solved = bus_injections(&case.ybus(), state);
    let (p, _) = case.injections();
    let injected: f64 = case
        .buses
        .iter()
        .enumerate()
        .map(|(k, b)| if b.kind == BusKind::Slack { solved[k].re } else { p[k] })
        .sum();
    let losses: f64 = ac_branch_flow(case, state).iter().map(|f| (f.from + f.to).re).sum();
    let shunt: f64 = case
        .buses
        .iter()
        .zip(state.vm.iter())
        .map(|(b, &vm)| b.gs * vm * vm)
        .sum();
    (injected - losses - shunt).abs()
}

/// Solved base case plus flows, reused across outages.
#[derive(Debug, Clone)]
pub struct AcBase {
    pub case: AcCase,
    pub solution: AcSolution,
    pub flows: Vec<BranchFlow>,
}

impl AcBase {
    pub fn solve(case: AcCase, options: &AcOptions) -> Result<Self> {
        let solution = solve_ac(&case, &case.flat_start(), options)?;
        let flows = ac_branch_flow(&case, &solution.state);
        Ok(AcBase {
            case,
            solution,
            flows,
        })
    }

    pub fn flow(&self, id: LineId) -> Result<BranchFlow> {
        self.flows
            .iter()
            .find(|f| f.id == id)
            .copied()
            .ok_or(Error::UnknownLine(id))
    }

    /// Post-outage solve: warm start from the base state, then a flat-start retry.
    pub fn outage(&self, tripped: LineId, options: &AcOptions) -> Result<Vec<BranchFlow>> {
        let post = self.case.remove_branches(&[tripped])?;
        post.check_slacks().map_err(|_| Error::Islanding)?;
        let solution = match solve_ac(&post, &self.solution.state, options) {
            Ok(s) => s,
            Err(first) => {
                debug!("warm start failed for outage of {tripped}: {first}");
                solve_ac(&post, &post.flat_start(), options)?
            }
        };
        Ok(ac_branch_flow(&post, &solution.state))
    }

    /// AC LODF of every remaining branch for the outage of `tripped`, using
    /// from-end real power. Fails with [`Error::BelowThreshold`] when the
    /// tripped line's base flow is too small to normalize by.
    pub fn lodf_row(&self, tripped: LineId, threshold: f64, options: &AcOptions) -> Result<Vec<(LineId, f64)>> {
        let denom = self.flow(tripped)?.from.re;
        if denom.abs() <= threshold {
            return Err(Error::BelowThreshold {
                flow: denom,
                threshold,
            });
        }
        let post = self.outage(tripped, options)?;
        post.iter()
            .map(|f| {
                let pre = self.flow(f.id)?.from.re;
                Ok((f.id, (f.from.re - pre) / denom))
            })
            .collect()
    }
}

/// AC LODF of a single pair.
pub fn ac_lodf(base: &AcBase, monitored: LineId, tripped: LineId, threshold: f64, options: &AcOptions) -> Result<f64> {
    if monitored == tripped {
        return Err(Error::SameLine(monitored));
    }
    base.flow(monitored)?;
    base.lodf_row(tripped, threshold, options)?
        .into_iter()
        .find(|(id, _)| *id == monitored)
        .map(|(_, v)| v)
        .ok_or(Error::UnknownLine(monitored))
}
