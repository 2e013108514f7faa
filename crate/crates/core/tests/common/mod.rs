//! Independent oracles shared by the integration tests. None of them go
//! through the library's grounded factorization.
#![allow(dead_code)]

use std::path::PathBuf;

use gridloc::{BusId, LineId, NetworkModel};
use nalgebra::DMatrix;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

/// `(from, to, b, id)` per line, bus indices dense.
pub fn edges(net: &NetworkModel) -> Vec<(usize, usize, f64, LineId)> {
    net.lines()
        .iter()
        .map(|l| (l.from.0, l.to.0, l.susceptance, l.id))
        .collect()
}

pub fn laplacian_from_edges(n: usize, edges: &[(usize, usize, f64, LineId)]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for &(a, b, w, _) in edges {
        l[(a, a)] += w;
        l[(b, b)] += w;
        l[(a, b)] -= w;
        l[(b, a)] -= w;
    }
    l
}

/// Moore-Penrose pseudoinverse through a symmetric eigendecomposition.
pub fn pinv_eig(l: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = l.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = l.nrows();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let lam = eig.eigenvalues[k];
        if lam.abs() > 1e-10 * max {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lam;
        }
    }
    out
}

/// PTDF from the eigen pseudoinverse.
pub fn ptdf_eig(net: &NetworkModel, line: LineId, source: BusId, sink: BusId) -> f64 {
    let p = pinv_eig(&laplacian_from_edges(net.bus_count(), &edges(net)));
    let l = net.line(line).unwrap();
    let (i, j, s, t) = (l.from.0, l.to.0, source.0, sink.0);
    l.susceptance * (p[(i, s)] - p[(i, t)] - p[(j, s)] + p[(j, t)])
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// DC line flows by grounding the last bus and eliminating, with lines
/// given explicitly. Returns flows in `edges` order.
pub fn dc_flows_elim(n: usize, edges: &[(usize, usize, f64, LineId)], p: &[f64]) -> Vec<f64> {
    let l = laplacian_from_edges(n, edges);
    let m = n - 1;
    let a: Vec<Vec<f64>> = (0..m).map(|r| (0..m).map(|c| l[(r, c)]).collect()).collect();
    let mut theta = gauss_solve(a, p[..m].to_vec());
    theta.push(0.0);
    edges.iter().map(|&(i, j, w, _)| w * (theta[i] - theta[j])).collect()
}

/// LODF from pre- and post-outage flows under a unit transfer across the
/// tripped line.
pub fn lodf_elim(net: &NetworkModel, monitored: LineId, tripped: LineId) -> f64 {
    let n = net.bus_count();
    let all = edges(net);
    let e = net.line(tripped).unwrap();
    let mut p = vec![0.0; n];
    p[e.from.0] += 1.0;
    p[e.to.0] -= 1.0;
    let pre = dc_flows_elim(n, &all, &p);
    let post_edges: Vec<_> = all.iter().copied().filter(|x| x.3 != tripped).collect();
    let post = dc_flows_elim(n, &post_edges, &p);
    let k_pre = all.iter().position(|x| x.3 == monitored).unwrap();
    let k_post = post_edges.iter().position(|x| x.3 == monitored).unwrap();
    let k_e = all.iter().position(|x| x.3 == tripped).unwrap();
    (post[k_post] - pre[k_pre]) / pre[k_e]
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        x = parent[x];
    }
    x
}

/// Connected components of a subset of lines, as a root label per bus; None
/// if the subset contains a cycle.
fn forest_labels(n: usize, chosen: &[(usize, usize, f64, LineId)]) -> Option<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b, _, _) in chosen {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return None;
        }
        parent[ra] = rb;
    }
    Some((0..n).map(|k| find(&mut parent, k)).collect())
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Rational coefficients of `|D_{line, s->t}|(b)` by spanning-tree and
/// 2-forest enumeration, normalized so `t2 + t3 = 1`.
pub fn rational_matrix_tree(net: &NetworkModel, line: LineId, s: BusId, t: BusId) -> (f64, f64, f64) {
    let n = net.bus_count();
    let all = edges(net);
    let e = net.line(line).unwrap();
    let (i, j) = (e.from.0, e.to.0);
    let (mut t2, mut t3) = (0.0, 0.0);
    for sub in subsets(all.len(), n - 1) {
        let chosen: Vec<_> = sub.iter().map(|&k| all[k]).collect();
        if forest_labels(n, &chosen).is_some() {
            let w: f64 = chosen.iter().map(|x| x.2).product();
            if chosen.iter().any(|x| x.3 == line) {
                t2 += w / e.susceptance;
            } else {
                t3 += w;
            }
        }
    }
    // 2-forests with {i, s} | {j, t} and {i, t} | {j, s}
    let (mut f_same, mut f_cross) = (0.0, 0.0);
    for sub in subsets(all.len(), n - 2) {
        let chosen: Vec<_> = sub.iter().map(|&k| all[k]).collect();
        if let Some(lab) = forest_labels(n, &chosen) {
            let w: f64 = chosen.iter().map(|x| x.2).product();
            if lab[i] == lab[j] {
                continue;
            }
            if lab[i] == lab[s.0] && lab[j] == lab[t.0] {
                f_same += w;
            }
            if lab[i] == lab[t.0] && lab[j] == lab[s.0] {
                f_cross += w;
            }
        }
    }
    let t1 = (f_same - f_cross).abs();
    let scale = t2 + t3;
    (t1 / scale, t2 / scale, t3 / scale)
}

/// Effective susceptance between `a` and `b` by series/parallel reduction;
/// None when the network does not reduce to a single line.
pub fn series_parallel_effective(net: &NetworkModel, a: BusId, b: BusId) -> Option<f64> {
    let mut e: Vec<(usize, usize, f64)> = net.lines().iter().map(|l| (l.from.0, l.to.0, l.susceptance)).collect();
    loop {
        let before = e.len();
        // parallel merge
        let mut merged: Vec<(usize, usize, f64)> = Vec::new();
        for (u, v, w) in e.drain(..) {
            let key = (u.min(v), u.max(v));
            match merged.iter_mut().find(|x| (x.0, x.1) == key) {
                Some(x) => x.2 += w,
                None => merged.push((key.0, key.1, w)),
            }
        }
        e = merged;
        if e.len() == 1 && (e[0].0, e[0].1) == (a.0.min(b.0), a.0.max(b.0)) {
            return Some(e[0].2);
        }
        let degree = |x: usize, e: &[(usize, usize, f64)]| e.iter().filter(|y| y.0 == x || y.1 == x).count();
        let interior = (0..net.bus_count()).find(|&x| x != a.0 && x != b.0 && matches!(degree(x, &e), 1 | 2));
        if let Some(x) = interior {
            let touching: Vec<usize> = (0..e.len()).filter(|&k| e[k].0 == x || e[k].1 == x).collect();
            if touching.len() == 2 {
                let (p, q) = (e[touching[0]], e[touching[1]]);
                let other = |y: (usize, usize, f64)| if y.0 == x { y.1 } else { y.0 };
                let (u, v) = (other(p), other(q));
                let w = p.2 * q.2 / (p.2 + q.2);
                e.remove(touching[1]);
                e.remove(touching[0]);
                if u != v {
                    e.push((u, v, w));
                }
            } else {
                e.remove(touching[0]);
            }
        } else if e.len() == before {
            return None;
        }
    }
}

/// Brute-force component count of the network without `skip`.
pub fn components_without(net: &NetworkModel, skip: Option<LineId>) -> usize {
    let n = net.bus_count();
    let mut parent: Vec<usize> = (0..n).collect();
    for l in net.lines().iter().filter(|l| Some(l.id) != skip) {
        let (ra, rb) = (find(&mut parent, l.from.0), find(&mut parent, l.to.0));
        parent[ra] = rb;
    }
    (0..n).filter(|&k| find(&mut parent, k) == k).count()
}
