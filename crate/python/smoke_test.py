"""Smoke test for the Python bindings.

Build and install first:
    pip install maturin
    maturin develop -m crates/python/Cargo.toml --release
then run `python python/smoke_test.py`.
"""

import math
import os
import tempfile

import subscm_py as sc


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok: {what}")


circle = sc.Family.circle()
check((circle.q, circle.p, circle.n) == (2, 1, 2), "circle family shape")
lam = circle.lambda_min([[0.3], [2.0]])
check(all(abs(v + 1.0) < 1e-12 for v in lam), "circle lambda_min is -1")

fam = sc.Family.random(3, 60, delta=0.5, seed=4)
run = sc.subspace_greedy(fam, xi_size=200, seed=1, j_max=30, oracle=True)
check(run.converged, f"subspace greedy converged ({run.iterations} sweeps)")
check(run.max_ratios[-1] <= 1e-4, "final ratio below tolerance")

mu = [0.37, -0.21]
b = run.bounds(mu)
exact = fam.lambda_min([mu])[0]
tol = 1e-8 * (1 + abs(exact))
check(b["lb"] <= b["slb"] + tol and b["slb"] <= exact + tol, "lower bounds below lambda_min")
check(exact <= b["sub"] + tol and b["sub"] <= b["ub"] + tol, "upper bounds above lambda_min")

scm = sc.scm_greedy(fam, xi_size=200, seed=1, j_max=len(run.samples))
check(scm.max_ratios[-1] >= run.max_ratios[-1], "subspace gap no larger than classical")

reports = run.reports()
check(len(reports) == 200 and "slb" in reports[0], "reports are dictionaries")

check(sc.f_bound(1.0, 3.0, 0.0) == 1.0, "f with zero residual")
check(math.isclose(sc.f_bound(0.0, 0.0, 1.0), -1.0), "f with equal arguments")

with tempfile.TemporaryDirectory() as tmp:
    manifest = fam.save(os.path.join(tmp, "fam"))
    again = sc.Family.load(manifest)
    check(abs(again.lambda_min([mu])[0] - exact) < 1e-12, "manifest round trip")
    status = sc.cli(["run", "--manifest", str(manifest), "--j-max", "3", "--xi-size", "50",
                     "--out", os.path.join(tmp, "out")])
    check(status == 0, "cli run from python")
    try:
        sc.Family([[[1.0, 0.0], [0.0, 1.0]]], ["co(mu1)"], [(0.0, 1.0)])
    except ValueError as e:
        check("co" in str(e), "bad expression raises ValueError")
    else:
        raise SystemExit("FAIL: bad expression accepted")

print("smoke test passed")
