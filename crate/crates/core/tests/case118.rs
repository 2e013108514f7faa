mod common;

use gridloc::acflow::{ac_branch_flow, conservation_residual, solve_ac, AcBase, AcCase, AcOptions};
use gridloc::caseio::{load_config, read_matpower, to_dc_network, DcOptions, RawCase};
use gridloc::interfaces::apply_tie_edits;
use gridloc::LineId;

use common::data_path;

fn case() -> RawCase {
    read_matpower(&data_path("case118.m")).unwrap()
}

#[test]
fn case_counts() {
    let c = case();
    assert_eq!(c.buses.len(), 118);
    assert_eq!(c.branches.len(), 186);
    assert_eq!(c.gens.len(), 54);
    assert_eq!(c.base_mva, 100.0);
    let net = to_dc_network(&c, DcOptions::default()).unwrap();
    assert!(net.is_connected());
    assert_eq!(net.line_count(), 186);
}

#[test]
fn config_edits_keep_network_connected() {
    let c = case();
    let text = std::fs::read_to_string(data_path("case118_partition.json")).unwrap();
    let cfg = load_config(&text, &c).unwrap();
    assert_eq!(cfg.tie_lines, vec![30, 45, 48, 54]);
    let net = to_dc_network(&c, DcOptions::default()).unwrap();
    let series = cfg.scenarios.iter().find(|s| s.name == "series").unwrap();
    let (edited, added) = apply_tie_edits(&net, &series.tie_edit()).unwrap();
    assert!(added.is_empty());
    assert_eq!(edited.line_count(), net.line_count() - 2);
    assert_eq!(edited.component_count(), 1);
}

struct Reference {
    vm: Vec<f64>,
    va: Vec<f64>,
    branches: Vec<[f64; 4]>,
}

fn reference() -> Reference {
    let mut rdr = csv::Reader::from_path(data_path("case118_ref_bus.csv")).unwrap();
    let (mut vm, mut va) = (Vec::new(), Vec::new());
    for row in rdr.deserialize::<(usize, f64, f64)>() {
        let (_, m, a) = row.unwrap();
        vm.push(m);
        va.push(a);
    }
    let mut rdr = csv::Reader::from_path(data_path("case118_ref_branch.csv")).unwrap();
    let branches = rdr
        .deserialize::<(usize, f64, f64, f64, f64)>()
        .map(|r| {
            let (_, pf, qf, pt, qt) = r.unwrap();
            [pf, qf, pt, qt]
        })
        .collect();
    Reference { vm, va, branches }
}

#[test]
fn nominal_solution_matches_reference() {
    let c = case();
    let ac = AcCase::from_raw(&c).unwrap();
    let sol = solve_ac(&ac, &ac.flat_start(), &AcOptions::default()).unwrap();
    assert!(sol.mismatch < 1e-8);
    assert!(conservation_residual(&ac, &sol.state) < 1e-6);

    let r = reference();
    let slack = ac.bus_position(69).unwrap();
    for k in 0..118 {
        assert!((sol.state.vm[k] - r.vm[k]).abs() < 1e-4, "vm at bus {}", k + 1);
        let rel = sol.state.va[k] - sol.state.va[slack];
        let rel_ref = r.va[k] - r.va[slack];
        assert!((rel - rel_ref).abs() < 1e-4, "va at bus {}", k + 1);
    }
    for f in ac_branch_flow(&ac, &sol.state) {
        let want = r.branches[f.id.0 - 1];
        let got = [f.from.re, f.from.im, f.to.re, f.to.im];
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-4, "branch {}", f.id);
        }
    }
}

#[test]
fn outage_solves_warm() {
    let ac = AcCase::from_raw(&case()).unwrap();
    let base = AcBase::solve(ac, &AcOptions::default()).unwrap();
    let flows = base.outage(LineId(45), &AcOptions::default()).unwrap();
    assert_eq!(flows.len(), 185);
    assert!(flows.iter().all(|f| f.id != LineId(45)));
}
