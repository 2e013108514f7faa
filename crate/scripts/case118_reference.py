#!/usr/bin/env python3
"""Regenerate the AC reference solution fixtures for data/case118.m.

Solves the nominal case with PYPOWER's Newton-Raphson power flow (reactive
limits not enforced) and writes per-unit bus voltages and branch flows:

    data/case118_ref_bus.csv     bus,vm,va_rad
    data/case118_ref_branch.csv  branch,pf,qf,pt,qt

Usage: pip install pypower && python3 scripts/case118_reference.py
"""

import math
import re
from pathlib import Path

import numpy as np
from pypower.api import ppoption, runpf

ROOT = Path(__file__).resolve().parent.parent
CASE = ROOT / "data" / "case118.m"


def matrix(text, name):
    body = re.search(r"mpc\." + name + r"\s*=\s*\[(.*?)\];", text, re.S).group(1)
    rows = []
    for line in body.split("\n"):
        line = line.split("%")[0].strip().rstrip(";").strip()
        if line:
            rows.append([float(x) for x in line.split()])
    return np.array(rows)


def main():
    text = CASE.read_text()
    base_mva = float(re.search(r"mpc\.baseMVA\s*=\s*([0-9.eE+-]+)", text).group(1))
    ppc = {
        "version": "2",
        "baseMVA": base_mva,
        "bus": matrix(text, "bus"),
        "gen": matrix(text, "gen"),
        "branch": matrix(text, "branch"),
    }
    opts = ppoption(VERBOSE=0, OUT_ALL=0, PF_TOL=1e-12, PF_MAX_IT=30, ENFORCE_Q_LIMS=0)
    result, ok = runpf(ppc, opts)
    if not ok:
        raise SystemExit("reference power flow did not converge")

    with open(ROOT / "data" / "case118_ref_bus.csv", "w") as f:
        f.write("bus,vm,va_rad\n")
        for row in result["bus"]:
            f.write(f"{int(row[0])},{row[7]:.12f},{math.radians(row[8]):.12f}\n")

    with open(ROOT / "data" / "case118_ref_branch.csv", "w") as f:
        f.write("branch,pf,qf,pt,qt\n")
        for k, row in enumerate(result["branch"], start=1):
            pf, qf, pt, qt = (row[13:17] / base_mva).tolist()
            f.write(f"{k},{pf:.12f},{qf:.12f},{pt:.12f},{qt:.12f}\n")


if __name__ == "__main__":
    main()
