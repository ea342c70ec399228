"""Smoke test for the esgt_py extension module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/esgt_py-*.whl
"""
import math
import os
import tempfile

import esgt_py


def main():
    g = esgt_py.Graph.erdos_renyi(6, 0.4, seed=3)
    w = g.weights()
    for row in w:
        assert abs(sum(row) - 1.0) < 1e-12
    assert esgt_py.Graph.from_text(g.to_text()).edges == g.edges

    d = esgt_py.Dither(3, [4, 6], delta=0.1)
    assert d.period == 12
    try:
        esgt_py.Dither(3, [3, 4], delta=0.1)
    except ValueError as e:
        print("rejected period 3:", e)
    else:
        raise AssertionError("period 3 should be rejected")

    p = esgt_py.Problem.personalized(5, 3, seed=1)
    x = [0.3, -0.2, 0.5]
    est = esgt_py.es_gradient(p, 0, x, d)
    exact = p.local_gradient(0, x)
    err = math.sqrt(sum((a - b) ** 2 for a, b in zip(est, exact)))
    print("es_gradient error at delta=0.1:", err)
    assert err < 1e-2

    w_star, f_star = p.solve()
    print("w* =", w_star, "f* =", f_star)

    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "run.csv")
        res = esgt_py.run_scenario(n_agents=5, dim=2, rounds=3000, output=out)
        with open(out) as f:
            assert f.readline().strip() == esgt_py.CSV_HEADER
        assert os.path.exists(res["manifest"])
        first, last = res["cost_rel_err"][0], res["cost_rel_err"][-1]
        print(f"cost_rel_err {first:.3e} -> {last:.3e}")
        assert last < first
        assert max(res["zbar_norm"]) < 1e-8

        mc = esgt_py.run_montecarlo(n_instances=3, rounds=600, output=os.path.join(tmp, "mc.csv"))
        assert len(mc["round"]) == len(mc["cost_rel_err"]) and not mc["failed_seeds"]

        ss = esgt_py.run_scenario(
            scenario="source_seeking", n_agents=4, target=[1.0, -1.0], rounds=60,
            output=os.path.join(tmp, "ss.csv"),
        )
        assert ss["round"][-1] == 60

    print(esgt_py.scenario_config(gamma=0.02).splitlines()[4])
    print("ok")


if __name__ == "__main__":
    main()
