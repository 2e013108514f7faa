//! Batch checks of the interface theorems on random two-bus joints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::random_joint;
use crate::dcsens::DcSensitivity;
use crate::error::Result;
use crate::interfaces::{
    apply_interface, bipartite_bound, bipartite_bound_reverse, check_series_equality_condition, design_for_joint,
    InterfaceSpec, TwoBusJoint,
};
use crate::netmodel::{LineId, LineSpec, NetworkModel};

const BOUND_TOL: f64 = 1e-12;
const EQUAL_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-8;
/// Pairs with |K| at or below this carry no information about strict decrease.
const NONZERO_LODF: f64 = 1e-9;

/// Everything needed to rebuild a failing case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointReproducer {
    pub buses: Vec<usize>,
    pub lines: Vec<LineSpec>,
    pub g1: Vec<usize>,
    pub g2: Vec<usize>,
    pub interface: Option<InterfaceSpec>,
}

impl JointReproducer {
    fn new(joint: &TwoBusJoint, interface: Option<InterfaceSpec>) -> Self {
        let net = joint.net();
        let ext = |set: &std::collections::BTreeSet<_>| set.iter().map(|&b| net.external_id(b)).collect();
        JointReproducer {
            buses: net.external_ids().to_vec(),
            lines: net.line_specs(),
            g1: ext(&joint.split().g1),
            g2: ext(&joint.split().g2),
            interface,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub theorem: u8,
    pub joint: usize,
    pub tripped: Option<usize>,
    pub monitored: Option<usize>,
    pub detail: String,
    pub reproducer: JointReproducer,
}

/// Number of checks performed, per theorem.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremCounts {
    pub series_pairs: usize,
    pub series_equalities: usize,
    pub parallel_pairs: usize,
    pub bipartite_specs: usize,
    pub rank_one_specs: usize,
    pub designed_joints: usize,
    /// Reverse-direction cross pairs that exceed the forward-direction bound
    /// (informational; the reverse bound is the one enforced).
    pub reverse_exceeds_forward_bound: usize,
}

impl TheoremCounts {
    fn add(&mut self, o: &TheoremCounts) {
        self.series_pairs += o.series_pairs;
        self.series_equalities += o.series_equalities;
        self.parallel_pairs += o.parallel_pairs;
        self.bipartite_specs += o.bipartite_specs;
        self.rank_one_specs += o.rank_one_specs;
        self.designed_joints += o.designed_joints;
        self.reverse_exceeds_forward_bound += o.reverse_exceeds_forward_bound;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub joints: usize,
    pub counts: TheoremCounts,
    pub violations: Vec<Violation>,
}

impl PropertyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    /// Tripped in the first sub-grid, monitored in the second.
    Forward,
    Reverse,
}

fn cross_pairs(joint: &TwoBusJoint, dir: Direction) -> Vec<(LineId, LineId)> {
    let bridges = joint.net().bridges();
    let (from, to) = match dir {
        Direction::Forward => (joint.g1_lines(), joint.g2_lines()),
        Direction::Reverse => (joint.g2_lines(), joint.g1_lines()),
    };
    from.iter()
        .filter(|e| !bridges.contains(e))
        .flat_map(|&e| to.iter().map(move |&m| (e, m)))
        .collect()
}

fn within_pairs(joint: &TwoBusJoint) -> Vec<(LineId, LineId)> {
    let bridges = joint.net().bridges();
    let mut out = Vec::new();
    for side in [joint.g1_lines(), joint.g2_lines()] {
        for &e in side.iter().filter(|e| !bridges.contains(e)) {
            out.extend(side.iter().filter(|&&m| m != e).map(|&m| (e, m)));
        }
    }
    out
}

fn swapped(joint: &TwoBusJoint) -> Result<TwoBusJoint> {
    TwoBusJoint::new(joint.net().clone(), joint.split().g2.clone(), joint.split().g1.clone())
}

struct Checker<'a> {
    joint: &'a TwoBusJoint,
    index: usize,
    base: DcSensitivity<'a>,
    counts: TheoremCounts,
    violations: Vec<Violation>,
}

impl<'a> Checker<'a> {
    fn violation(&mut self, theorem: u8, pair: Option<(LineId, LineId)>, spec: Option<InterfaceSpec>, detail: String) {
        self.violations.push(Violation {
            theorem,
            joint: self.index,
            tripped: pair.map(|p| p.0 .0),
            monitored: pair.map(|p| p.1 .0),
            detail,
            reproducer: JointReproducer::new(self.joint, spec),
        });
    }

    fn modified(&self, spec: &InterfaceSpec) -> Result<NetworkModel> {
        Ok(apply_interface(self.joint, spec)?.net)
    }

    fn series(&mut self, spec: InterfaceSpec) -> Result<()> {
        let net = self.modified(&spec)?;
        let sens = DcSensitivity::new(&net)?;
        let reversed = swapped(self.joint)?;
        for dir in [Direction::Forward, Direction::Reverse] {
            for (e, m) in cross_pairs(self.joint, dir) {
                let k = self.base.lodf(m, e)?.abs();
                let km = sens.lodf(m, e)?.abs();
                self.counts.series_pairs += 1;
                if km > k + BOUND_TOL {
                    self.violation(1, Some((e, m)), Some(spec), format!("|K(m)| = {km:e} > |K| = {k:e}"));
                }
                let predicted = match dir {
                    Direction::Forward => check_series_equality_condition(self.joint, e)?,
                    Direction::Reverse => check_series_equality_condition(&reversed, e)?,
                };
                let equal = (k - km).abs() < EQUAL_TOL;
                if equal && k > NONZERO_LODF {
                    self.counts.series_equalities += 1;
                }
                if k > NONZERO_LODF && equal != predicted {
                    self.violation(
                        1,
                        Some((e, m)),
                        Some(spec),
                        format!("equality {equal} but s-t disconnection predicate {predicted} (|K| = {k:e}, |K(m)| = {km:e})"),
                    );
                }
            }
        }
        Ok(())
    }

    fn parallel(&mut self, b0: f64) -> Result<()> {
        let levels = [0.5 * b0, b0, 2.0 * b0];
        let mut sens_nets = Vec::new();
        for st in levels {
            sens_nets.push(self.modified(&InterfaceSpec::Parallel { st, on_series: None })?);
        }
        let sens: Vec<DcSensitivity> = sens_nets.iter().map(DcSensitivity::new).collect::<Result<_>>()?;
        for dir in [Direction::Forward, Direction::Reverse] {
            for (e, m) in cross_pairs(self.joint, dir) {
                let k = self.base.lodf(m, e)?.abs();
                let km: Vec<f64> = sens.iter().map(|s| s.lodf(m, e).map(f64::abs)).collect::<Result<_>>()?;
                self.counts.parallel_pairs += 1;
                let spec = InterfaceSpec::Parallel { st: b0, on_series: None };
                if k > NONZERO_LODF && km[1] >= k {
                    self.violation(2, Some((e, m)), Some(spec), format!("|K(m)| = {:e} not below |K| = {k:e}", km[1]));
                }
                if km[1] > km[0] + BOUND_TOL || km[2] > km[1] + BOUND_TOL {
                    self.violation(2, Some((e, m)), Some(spec), format!("|K(m)| at 0.5/1/2 b0 not monotone: {km:?}"));
                }
            }
        }
        Ok(())
    }

    fn max_cross(&self, sens: &DcSensitivity, dir: Direction) -> Result<(f64, Option<(LineId, LineId)>)> {
        let mut best = (0.0, None);
        for (e, m) in cross_pairs(self.joint, dir) {
            let v = sens.lodf(m, e)?.abs();
            if v > best.0 {
                best = (v, Some((e, m)));
            }
        }
        Ok(best)
    }

    fn bipartite(&mut self, spec: InterfaceSpec) -> Result<()> {
        let net = self.modified(&spec)?;
        let sens = DcSensitivity::new(&net)?;
        self.counts.bipartite_specs += 1;
        let forward = bipartite_bound(&spec)?;
        let reverse = bipartite_bound_reverse(&spec)?;
        let (fmax, fpair) = self.max_cross(&sens, Direction::Forward)?;
        if fmax > forward + BOUND_TOL {
            self.violation(3, fpair, Some(spec), format!("max cross |K(m)| = {fmax:e} > bound {forward:e}"));
        }
        let (rmax, rpair) = self.max_cross(&sens, Direction::Reverse)?;
        if rmax > reverse + BOUND_TOL {
            self.violation(3, rpair, Some(spec), format!("reverse max cross |K(m)| = {rmax:e} > bound {reverse:e}"));
        }
        if rmax > forward + BOUND_TOL {
            self.counts.reverse_exceeds_forward_bound += 1;
        }
        Ok(())
    }

    fn rank_one(&mut self, spec: InterfaceSpec) -> Result<()> {
        let net = self.modified(&spec)?;
        let sens = DcSensitivity::new(&net)?;
        self.counts.rank_one_specs += 1;
        for dir in [Direction::Forward, Direction::Reverse] {
            let (max, pair) = self.max_cross(&sens, dir)?;
            if max > ZERO_TOL {
                self.violation(3, pair, Some(spec), format!("rank-1 interface leaves cross |K(m)| = {max:e}"));
            }
        }
        Ok(())
    }

    fn designed(&mut self, spec: InterfaceSpec) -> Result<()> {
        let net = self.modified(&spec)?;
        let sens = DcSensitivity::new(&net)?;
        self.counts.designed_joints += 1;
        for dir in [Direction::Forward, Direction::Reverse] {
            let (max, pair) = self.max_cross(&sens, dir)?;
            if max > ZERO_TOL {
                self.violation(4, pair, Some(spec), format!("designed interface leaves cross |K(m)| = {max:e}"));
            }
        }
        for (e, m) in within_pairs(self.joint) {
            let diff = (sens.lodf(m, e)? - self.base.lodf(m, e)?).abs();
            if diff > ZERO_TOL {
                self.violation(4, Some((e, m)), Some(spec), format!("within-sub-grid LODF moved by {diff:e}"));
            }
        }
        Ok(())
    }
}

fn positive<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0.1..10.0)
}

/// Runs every theorem check on one joint, drawing interface parameters from `rng`.
pub fn check_joint<R: Rng>(joint: &TwoBusJoint, index: usize, rng: &mut R) -> Result<(TheoremCounts, Vec<Violation>)> {
    let mut c = Checker {
        joint,
        index,
        base: DcSensitivity::new(joint.net())?,
        counts: TheoremCounts::default(),
        violations: Vec::new(),
    };
    c.series(InterfaceSpec::Series {
        ss_prime: positive(rng),
        tt_prime: positive(rng),
    })?;
    c.parallel(positive(rng))?;
    c.bipartite(InterfaceSpec::CompleteBipartite {
        ss_prime: positive(rng),
        st_prime: positive(rng),
        ts_prime: positive(rng),
        tt_prime: positive(rng),
    })?;
    let (a, b, d) = (positive(rng), positive(rng), positive(rng));
    c.rank_one(InterfaceSpec::CompleteBipartite {
        ss_prime: a,
        st_prime: b,
        ts_prime: a * d / b,
        tt_prime: d,
    })?;
    let (b1, b2) = joint.subgrid_susceptances()?;
    let tt_prime = if rng.gen_bool(0.5) {
        b1.min(b2) * rng.gen_range(0.05..0.95)
    } else {
        b1.max(b2) * rng.gen_range(1.05..3.0)
    };
    c.designed(design_for_joint(joint, tt_prime)?)?;
    Ok((c.counts, c.violations))
}

/// Checks the interface theorems on `count` random joints. Joints and
/// interface parameters derive from `seed` only, so reruns are identical.
pub fn verify_theorems(seed: u64, count: usize) -> Result<PropertyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let work: Vec<(usize, TwoBusJoint, u64)> = (0..count)
        .map(|k| {
            let joint = random_joint(&mut rng);
            (k, joint, rng.gen())
        })
        .collect();
    let results: Vec<Result<(TheoremCounts, Vec<Violation>)>> = work
        .par_iter()
        .map(|(k, joint, s)| check_joint(joint, *k, &mut ChaCha8Rng::seed_from_u64(*s)))
        .collect();
    let mut report = PropertyReport {
        seed,
        joints: count,
        ..Default::default()
    };
    for r in results {
        let (counts, violations) = r?;
        report.counts.add(&counts);
        report.violations.extend(violations);
    }
    Ok(report)
}
