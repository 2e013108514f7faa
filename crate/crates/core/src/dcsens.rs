//! DC sensitivity factors: PTDF, LODF, generalized LODF, effective
//! susceptance, two-bus PTDF decomposition and the rational dependence of a
//! PTDF on its own line's susceptance.
//!
//! All queries go through [`DcSensitivity`], which grounds one reference bus,
//! factors the reduced Laplacian once and keeps the re-embedded inverse `G`.
//! For any difference vector `x = e_i - e_j` we have `L^+ x = G x - mean`,
//! and the mean drops out of every difference quadratic form, so
//! `(e_a - e_b)^T L^+ (e_c - e_d) = G_ac - G_ad - G_bc + G_bd`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{BusId, LineId, NetworkModel};

/// `|1 - D_self|` below this marks a tripped line as numerically a bridge.
pub const BRIDGE_TOL: f64 = 1e-8;
/// Absolute balance tolerance on injections (scaled by their 1-norm when larger than one).
pub const BALANCE_TOL: f64 = 1e-9;

/// Shared, read-only factorization of one network.
#[derive(Debug, Clone)]
pub struct DcSensitivity<'a> {
    net: &'a NetworkModel,
    reference: BusId,
    grounded_inverse: DMatrix<f64>,
    bridges: BTreeSet<LineId>,
}

impl<'a> DcSensitivity<'a> {
    pub fn new(net: &'a NetworkModel) -> Result<Self> {
        let components = net.component_count();
        if components > 1 {
            return Err(Error::Disconnected { components });
        }
        let n = net.bus_count();
        let reference = BusId(0);
        let mut grounded_inverse = DMatrix::zeros(n, n);
        if n > 1 {
            let reduced = net.laplacian().view((1, 1), (n - 1, n - 1)).into_owned();
            let chol = reduced
                .cholesky()
                .ok_or(Error::Disconnected { components })?;
            let inv = chol.inverse();
            grounded_inverse.view_mut((1, 1), (n - 1, n - 1)).copy_from(&inv);
        }
        Ok(DcSensitivity {
            net,
            reference,
            grounded_inverse,
            bridges: net.bridges(),
        })
    }

    pub fn network(&self) -> &'a NetworkModel {
        self.net
    }

    pub fn reference_bus(&self) -> BusId {
        self.reference
    }

    pub fn bridges(&self) -> &BTreeSet<LineId> {
        &self.bridges
    }

    /// `(e_a - e_b)^T L^+ (e_c - e_d)`.
    pub fn transfer_resistance(&self, a: BusId, b: BusId, c: BusId, d: BusId) -> f64 {
        let g = &self.grounded_inverse;
        g[(a.0, c.0)] - g[(a.0, d.0)] - g[(b.0, c.0)] + g[(b.0, d.0)]
    }

    /// `L^+ v`, with `v` projected onto the complement of the all-ones vector.
    pub fn pinv_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = v.len();
        if n == 0 {
            return DVector::zeros(0);
        }
        let centered = v.add_scalar(-v.mean());
        let theta = &self.grounded_inverse * centered;
        let mean = theta.mean();
        theta.add_scalar(-mean)
    }

    /// Line flows `B C^T L^+ p` in line order.
    pub fn flows(&self, injections: &DVector<f64>) -> Result<DVector<f64>> {
        if injections.len() != self.net.bus_count() {
            return Err(Error::InvalidCase(format!(
                "expected {} injections, got {}",
                self.net.bus_count(),
                injections.len()
            )));
        }
        let sum = injections.sum();
        let scale = injections.lp_norm(1).max(1.0);
        if sum.abs() > BALANCE_TOL * scale {
            return Err(Error::UnbalancedInjection { sum });
        }
        let theta = self.pinv_apply(injections);
        Ok(DVector::from_iterator(
            self.net.line_count(),
            self.net
                .lines()
                .iter()
                .map(|l| l.susceptance * (theta[l.from.0] - theta[l.to.0])),
        ))
    }

    /// PTDF of `line` for a unit transfer from `source` to `sink`.
    pub fn ptdf(&self, line: LineId, source: BusId, sink: BusId) -> Result<f64> {
        let l = self.net.line(line)?;
        self.check_bus(source)?;
        self.check_bus(sink)?;
        if source == sink {
            return Ok(0.0);
        }
        Ok(l.susceptance * self.transfer_resistance(l.from, l.to, source, sink))
    }

    /// PTDF of a line for the transfer between its own endpoints.
    pub fn self_ptdf(&self, line: LineId) -> Result<f64> {
        let l = self.net.line(line)?;
        Ok(l.susceptance * self.transfer_resistance(l.from, l.to, l.from, l.to))
    }

    /// Classifies `line` as a bridge, requiring the numeric and graph tests to agree.
    pub fn check_bridge(&self, line: LineId) -> Result<bool> {
        let numeric = (1.0 - self.self_ptdf(line)?).abs() < BRIDGE_TOL;
        let structural = self.bridges.contains(&line);
        if numeric != structural {
            return Err(Error::BridgeDiagnostic {
                line,
                numeric,
                structural,
            });
        }
        Ok(structural)
    }

    /// LODF `K = D_e / (1 - D_tripped)`, both lines in stored orientation.
    pub fn lodf(&self, monitored: LineId, tripped: LineId) -> Result<f64> {
        if monitored == tripped {
            return Err(Error::SameLine(monitored));
        }
        let t = *self.net.line(tripped)?;
        self.net.line(monitored)?;
        if self.check_bridge(tripped)? {
            return Err(Error::BridgeOutage(tripped));
        }
        let d_self = self.self_ptdf(tripped)?;
        let d_mon = self.ptdf(monitored, t.from, t.to)?;
        Ok(d_mon / (1.0 - d_self))
    }

    pub fn resistance(&self, i: BusId, j: BusId) -> f64 {
        self.transfer_resistance(i, j, i, j)
    }

    pub fn effective_susceptance(&self, i: BusId, j: BusId) -> Result<EffectiveSusceptance> {
        self.check_bus(i)?;
        self.check_bus(j)?;
        if i == j {
            return Err(Error::SameBus(i));
        }
        Ok(EffectiveSusceptance {
            pair: (i, j),
            value: 1.0 / self.resistance(i, j),
        })
    }

    fn check_bus(&self, bus: BusId) -> Result<()> {
        if bus.0 < self.net.bus_count() {
            Ok(())
        } else {
            Err(Error::UnknownBus(bus.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtdfQuery {
    pub monitored: LineId,
    pub source: BusId,
    pub sink: BusId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LodfValue {
    pub monitored: LineId,
    pub tripped: LineId,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSusceptance {
    pub pair: (BusId, BusId),
    pub value: f64,
}

pub fn laplacian_pinv_apply(net: &NetworkModel, v: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(DcSensitivity::new(net)?.pinv_apply(v))
}

pub fn dc_flow(net: &NetworkModel, injections: &DVector<f64>) -> Result<DVector<f64>> {
    DcSensitivity::new(net)?.flows(injections)
}

pub fn ptdf(net: &NetworkModel, query: &PtdfQuery) -> Result<f64> {
    DcSensitivity::new(net)?.ptdf(query.monitored, query.source, query.sink)
}

pub fn lodf(net: &NetworkModel, monitored: LineId, tripped: LineId) -> Result<LodfValue> {
    let value = DcSensitivity::new(net)?.lodf(monitored, tripped)?;
    Ok(LodfValue {
        monitored,
        tripped,
        value,
    })
}

/// LODF evaluated as the PTDF of the post-contingency network for the
/// tripped line's endpoint pair. Independent of the closed-form path.
pub fn lodf_post_contingency(net: &NetworkModel, monitored: LineId, tripped: LineId) -> Result<f64> {
    if monitored == tripped {
        return Err(Error::SameLine(monitored));
    }
    net.line(monitored)?;
    let t = *net.line(tripped)?;
    let post = net.remove_lines(&[tripped])?;
    if !post.is_connected() {
        return Err(Error::BridgeOutage(tripped));
    }
    DcSensitivity::new(&post)?.ptdf(monitored, t.from, t.to)
}

/// Generalized LODF of `monitored` with respect to `reference`, one line of
/// the simultaneously tripped set.
pub fn gen_lodf(
    net: &NetworkModel,
    monitored: LineId,
    tripped: &[LineId],
    reference: LineId,
) -> Result<f64> {
    if tripped.contains(&monitored) {
        return Err(Error::MonitoredTripped(monitored));
    }
    if !tripped.contains(&reference) {
        return Err(Error::ReferenceNotTripped(reference));
    }
    if tripped.len() == 1 {
        return lodf(net, monitored, reference).map(|v| v.value);
    }
    net.line(monitored)?;
    let r = *net.line(reference)?;
    let post = net.remove_lines(tripped)?;
    if !post.is_connected() {
        return Err(Error::Islanding);
    }
    DcSensitivity::new(&post)?.ptdf(monitored, r.from, r.to)
}

pub fn effective_susceptance(net: &NetworkModel, i: BusId, j: BusId) -> Result<EffectiveSusceptance> {
    DcSensitivity::new(net)?.effective_susceptance(i, j)
}

/// Factors of a PTDF across a two-bus cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtdfDecomposition {
    pub s: BusId,
    pub t: BusId,
    /// Effective susceptance between `s` and `t` inside the second sub-grid.
    pub equivalent_susceptance: f64,
    /// PTDF of the equivalent `(s, t)` line inside the first sub-grid.
    pub factor1: f64,
    /// PTDF of the monitored line for the `(s, t)` transfer inside the second sub-grid.
    pub factor2: f64,
    pub product: f64,
}

/// Two sub-grids sharing exactly two buses and no lines.
#[derive(Debug, Clone)]
pub struct TwoBusSplit {
    pub g1: BTreeSet<BusId>,
    pub g2: BTreeSet<BusId>,
    pub s: BusId,
    pub t: BusId,
    pub g1_lines: BTreeSet<LineId>,
    pub g2_lines: BTreeSet<LineId>,
}

impl TwoBusSplit {
    pub fn new(net: &NetworkModel, g1: BTreeSet<BusId>, g2: BTreeSet<BusId>) -> Result<Self> {
        let overlap: Vec<BusId> = g1.intersection(&g2).copied().collect();
        if overlap.len() != 2 {
            return Err(Error::InvalidDecomposition(format!(
                "sub-grids share {} buses, expected 2",
                overlap.len()
            )));
        }
        if g1.union(&g2).count() != net.bus_count() || g1.iter().chain(&g2).any(|b| b.0 >= net.bus_count()) {
            return Err(Error::InvalidDecomposition(
                "sub-grids do not cover the bus set".into(),
            ));
        }
        let (s, t) = (overlap[0], overlap[1]);
        let mut g1_lines = BTreeSet::new();
        let mut g2_lines = BTreeSet::new();
        for l in net.lines() {
            let in1 = g1.contains(&l.from) && g1.contains(&l.to);
            let in2 = g2.contains(&l.from) && g2.contains(&l.to);
            // a line joining s and t directly counts as part of G2
            match (in1, in2) {
                (true, false) => g1_lines.insert(l.id),
                (_, true) => g2_lines.insert(l.id),
                (false, false) => {
                    return Err(Error::InvalidDecomposition(format!(
                        "line {} crosses between the sub-grids",
                        l.id
                    )))
                }
            };
        }
        Ok(TwoBusSplit {
            g1,
            g2,
            s,
            t,
            g1_lines,
            g2_lines,
        })
    }
}

/// Computes `D_{e, source->sink}` for `monitored` in the second sub-grid and
/// a transfer inside the first, as the product of the equivalent-line PTDF
/// in the first sub-grid and the `(s, t)` PTDF in the second.
pub fn decompose_ptdf(
    net: &NetworkModel,
    split: &TwoBusSplit,
    monitored: LineId,
    source: BusId,
    sink: BusId,
) -> Result<PtdfDecomposition> {
    if !split.g2_lines.contains(&monitored) {
        return Err(Error::InvalidDecomposition(format!(
            "monitored line {monitored} is not in the second sub-grid"
        )));
    }
    if !split.g1.contains(&source) || !split.g1.contains(&sink) {
        return Err(Error::InvalidDecomposition(
            "transfer buses must lie in the first sub-grid".into(),
        ));
    }
    let g1 = net.subnetwork(&split.g1, &split.g1_lines)?;
    let g2 = net.subnetwork(&split.g2, &split.g2_lines)?;
    let (s2, t2) = (net.translate(split.s, &g2)?, net.translate(split.t, &g2)?);
    let g2_sens = DcSensitivity::new(&g2)?;
    let equivalent = g2_sens.effective_susceptance(s2, t2)?.value;
    let factor2 = g2_sens.ptdf(monitored, s2, t2)?;

    let fict = LineId(net.max_line_id().map_or(0, |m| m.0 + 1));
    let (s1, t1) = (net.translate(split.s, &g1)?, net.translate(split.t, &g1)?);
    let g1_hat = g1.add_line_with_id(fict, s1, t1, equivalent)?;
    let factor1 = DcSensitivity::new(&g1_hat)?.ptdf(
        fict,
        net.translate(source, &g1_hat)?,
        net.translate(sink, &g1_hat)?,
    )?;
    Ok(PtdfDecomposition {
        s: split.s,
        t: split.t,
        equivalent_susceptance: equivalent,
        factor1,
        factor2,
        product: factor1 * factor2,
    })
}

/// Coefficients of `|D|(b) = t1 b / (t2 b + t3)`, normalized so `t2 + t3 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalCoefficients {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl RationalCoefficients {
    pub fn eval(&self, b: f64) -> f64 {
        self.t1 * b / (self.t2 * b + self.t3)
    }
}

/// Residual tolerance on held-out samples.
pub const FIT_TOL: f64 = 1e-7;
const ZERO_PTDF: f64 = 1e-12;

fn abs_ptdf_at(net: &NetworkModel, line: LineId, b: f64, source: BusId, sink: BusId) -> Result<f64> {
    let varied = net.with_susceptance(line, b)?;
    Ok(DcSensitivity::new(&varied)?.ptdf(line, source, sink)?.abs())
}

/// Least-squares fit of `(t2/t1, t3/t1)` from `b * t1 = |D| (t2 b + t3)`.
fn fit_ratios(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    let a = DMatrix::from_fn(samples.len(), 2, |r, c| {
        let (b, d) = samples[r];
        if c == 0 {
            d * b
        } else {
            d
        }
    });
    let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|(b, _)| *b));
    let sol = a
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|_| Error::FitResidual { residual: f64::NAN })?;
    Ok((sol[0], sol[1]))
}

/// Recovers the rational dependence of `|D_{line, source->sink}|` on the
/// line's own susceptance by sampling at `b0 * {1/2, 1, 2, 4}` and checking
/// the fit at `b0/4` and `8 b0`.
pub fn ptdf_rational_fit(
    net: &NetworkModel,
    line: LineId,
    source: BusId,
    sink: BusId,
) -> Result<RationalCoefficients> {
    let l = *net.line(line)?;
    let b0 = l.susceptance;
    let fit_points = [0.5 * b0, b0, 2.0 * b0, 4.0 * b0];
    let held_out = [0.25 * b0, 8.0 * b0];

    let samples = fit_points
        .iter()
        .map(|&b| Ok((b, abs_ptdf_at(net, line, b, source, sink)?)))
        .collect::<Result<Vec<_>>>()?;
    let vanishing = samples.iter().all(|(_, d)| *d < ZERO_PTDF);

    // An identically zero PTDF pins t1 = 0 but leaves t2:t3 open; those
    // come from the line's own endpoint transfer, which shares the denominator.
    let (t1, ratio_samples, check_source, check_sink) = if vanishing {
        let own = fit_points
            .iter()
            .map(|&b| Ok((b, abs_ptdf_at(net, line, b, l.from, l.to)?)))
            .collect::<Result<Vec<_>>>()?;
        (0.0, own, l.from, l.to)
    } else {
        (1.0, samples, source, sink)
    };
    let (mut x, mut y) = fit_ratios(&ratio_samples)?;

    let mut residual: f64 = 0.0;
    for &b in &held_out {
        let actual = abs_ptdf_at(net, line, b, check_source, check_sink)?;
        residual = residual.max((b / (x * b + y) - actual).abs());
        if vanishing {
            residual = residual.max(abs_ptdf_at(net, line, b, source, sink)?);
        }
    }
    if !(residual <= FIT_TOL) {
        return Err(Error::FitResidual { residual });
    }

    let numeric_bridge = y.abs() < BRIDGE_TOL * x.abs() * b0;
    let structural = net.is_bridge(line)?;
    if numeric_bridge != structural {
        return Err(Error::BridgeDiagnostic {
            line,
            numeric: numeric_bridge,
            structural,
        });
    }
    if structural {
        y = 0.0;
    }
    x = x.max(0.0);
    let scale = x + y;
    Ok(RationalCoefficients {
        t1: t1 / scale,
        t2: x / scale,
        t3: y / scale,
    })
}
