"""Smoke test for the minimax_qp extension module.

Build and run from the repository root:

    cargo build --release -p minimax-qp-py --features extension-module
    cp target/release/libminimax_qp_py.so python/minimax_qp.so
    python3 python/smoke_test.py
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import minimax_qp as mq


def close(a, b, tol):
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def main():
    p = mq.Problem.fixture("example1")
    assert (p.nx, p.ny, p.m) == (2, 4, 5), p
    out = mq.solve(p)
    assert out["status"] == "optimal"
    assert out["alpha"] == [2]
    assert abs(out["f"] - 6.5) < 1e-12
    assert close(out["z"], [2, -1, 0, 3, 0, -2], 1e-12)
    report = mq.verify_spair(p, out["z"], out["alpha"], out["u"])
    assert report["accepted"], report

    replay = mq.solve(p, force_sequence=[3, 4, 1, 2], trace=True)
    assert [row["kind"] for row in replay["trace"]].count("dual-only") == 1

    round_trip = mq.Problem.from_json(p.to_json())
    assert round_trip.g == p.g and round_trip.h == p.h

    bad = mq.solve(mq.Problem.fixture("infeasible"))
    assert bad["status"] == "infeasible"
    assert bad["certificate"]["delta"] >= 0

    pairs = mq.enumerate_spairs(mq.Problem.fixture("example2"))
    assert len(pairs) >= 1

    problem, z_star, u_star, active = mq.generate(2, 5, 10, 15, 5, seed=3)
    assert problem.assumption2()["holds"]
    sol = mq.solve(problem)
    assert sol["status"] == "optimal" and close(sol["z"], z_star, 1e-8)
    assert sol["alpha"] == active

    try:
        mq.Problem([[1.0]], [[0.0]], [[1.0]], [0.0], [0.0], [], [], [])
    except ValueError:
        pass
    else:
        raise AssertionError("positive G22 accepted")

    market = mq.Market.synthetic(12, 60, seed=1)
    results = market.attack([0.0, 6.0], trials=50)
    assert len(results) == 6
    by_b = {}
    for r in results:
        assert r["rho"] >= 0
        by_b.setdefault(r["b"], {})[r["method"]] = r["rho"]
    for b, rhos in by_b.items():
        assert rhos["minimax"] >= max(rhos["random"], rhos["no-long"]) - 1e-9, (b, rhos)

    print("smoke test ok: example1 f = %.1f, %d attack rows" % (out["f"], len(results)))


if __name__ == "__main__":
    main()
