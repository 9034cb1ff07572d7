"""Smoke test for the fkratchet extension module.

Build and install first, e.g.

    cd crates/py && maturin build --release -o dist && pip install dist/*.whl

then run ``python python/smoke_test.py``.
"""

import math

import fkratchet as fk


def main():
    model = fk.Model(tau=10.0)
    assert model.tau == 10.0 and model.kappa == 3.0
    assert len(model.hash()) == 16

    # equal spacing is at rest while the pulse is off
    s = fk.ChainState.straight_line("8/13", phase=0.25)
    assert (s.p, s.q) == (8, 13)
    out = fk.evolve(s, 5.0, model)
    assert max(abs(a - b) for a, b in zip(out.positions, s.positions)) < 1e-12
    assert out.time == 5.0

    # q = 2 right-hand side with the winding accessor
    two = fk.ChainState([0.0, 0.4], 1, 2)
    f = fk.rhs(two, 0.0, model)
    assert abs(f[0] + 0.4) < 1e-12 and abs(f[1] - 0.4) < 1e-12

    # one cycle keeps rotational order
    t = fk.poincare(s, model)
    assert t.time == 20.0 and t.rotationally_ordered()

    est = fk.measure_speed("8/13", model)
    assert est["converged"] and est["v"] > 0.0, est
    still = fk.measure_speed("1", model)
    assert abs(still["v"]) < 1e-12

    report = fk.verify_lemmas("8/13", model)
    names = {c["name"]: c for c in report["checks"]}
    assert names["poincare_inequality"]["passed"]
    assert names["off_phase_lyapunov"]["passed"]

    cf = fk.continued_fraction("golden", max_terms=12)
    assert [q for _, q in cf["convergents"]] == [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144]
    assert abs(fk.levy_constant() - math.exp(math.pi**2 / (12 * math.log(2)))) < 1e-12

    assert abs(fk.w1_circle([(0.0, 1.0)], [(0.5, 1.0)]) - 0.5) < 1e-15
    assert abs(fk.w1_to_lebesgue([(k / 7, 1 / 7) for k in range(7)]) - 1 / 28) < 1e-15

    rep = fk.bound_report("34/55", 1e8, model)
    assert rep["status"] == "informative" and rep["value"] > 0.0

    csv = fk.sweep(["2/3", "3/5"], [1.0, 10.0], model)
    lines = csv.strip().splitlines()
    assert lines[0].startswith("rho,tau,v_measured") and len(lines) == 5

    print("fkratchet smoke test passed")


if __name__ == "__main__":
    main()
