//! Random test networks.

use std::collections::BTreeSet;

use rand::Rng;

use crate::interfaces::TwoBusJoint;
use crate::netmodel::{BusId, NetworkModel};

pub const SUSCEPTANCE_RANGE: (f64, f64) = (0.1, 10.0);

fn susceptance<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(SUSCEPTANCE_RANGE.0..SUSCEPTANCE_RANGE.1)
}

/// Connected multigraph on `min..=max` buses: a random spanning tree plus up
/// to `n` extra lines, parallel lines allowed.
pub fn random_multigraph<R: Rng>(rng: &mut R, min: usize, max: usize) -> NetworkModel {
    let n = rng.gen_range(min..=max);
    let mut edges = Vec::new();
    for k in 1..n {
        edges.push((rng.gen_range(0..k), k, susceptance(rng)));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        edges.push((a, b, susceptance(rng)));
    }
    NetworkModel::from_edges(n, &edges).expect("generated edges are valid")
}

fn connected(n: usize, edges: &[(usize, usize, f64)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b, _) in edges {
            let w = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

/// Erdos-Renyi sub-graph on `n` local buses (0 = s, 1 = t), edge probability
/// `p`, rejected until connected with s and t non-adjacent.
fn subgraph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<(usize, usize, f64)> {
    loop {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if (a, b) != (0, 1) && rng.gen_bool(p) {
                    edges.push((a, b, susceptance(rng)));
                }
            }
        }
        // an s-t edge would be drawn with probability p; rejecting it is
        // the same as never drawing it
        if connected(n, &edges) {
            return edges;
        }
    }
}

/// Two connected sub-grids of 4..=12 buses each, glued at the joint buses
/// s (bus 0) and t (bus 1), which are not adjacent.
pub fn random_joint<R: Rng>(rng: &mut R) -> TwoBusJoint {
    let n1 = rng.gen_range(4..=12);
    let n2 = rng.gen_range(4..=12);
    let g1_edges = subgraph(rng, n1, 0.4);
    let g2_edges = subgraph(rng, n2, 0.4);
    // G2 local bus k >= 2 maps to global n1 + k - 2
    let map2 = |k: usize| if k < 2 { k } else { n1 + k - 2 };
    let mut edges = g1_edges;
    edges.extend(g2_edges.into_iter().map(|(a, b, w)| (map2(a), map2(b), w)));
    let n = n1 + n2 - 2;
    let net = NetworkModel::from_edges(n, &edges).expect("generated edges are valid");
    let g1: BTreeSet<BusId> = (0..n1).map(BusId).collect();
    let g2: BTreeSet<BusId> = (0..n2).map(|k| BusId(map2(k))).collect();
    TwoBusJoint::new(net, g1, g2).expect("generated joint is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_networks_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let net = random_multigraph(&mut rng, 4, 20);
            assert!(net.is_connected());
            assert!((4..=20).contains(&net.bus_count()));
            let joint = random_joint(&mut rng);
            assert!(joint.net().is_connected());
            assert!(!joint.net().are_adjacent(joint.s(), joint.t()));
            assert!(joint.first_subgrid().unwrap().is_connected());
            assert!(joint.second_subgrid().unwrap().is_connected());
        }
    }
}
