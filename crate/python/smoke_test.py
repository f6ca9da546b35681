"""Smoke test for the coverlab extension module.

Build and install first:
    pip install maturin
    cd crates/py && maturin build --release -o dist && pip install dist/coverlab-*.whl
"""

import json
import math

import coverlab

TRIANGLE = json.dumps({"n": 3, "edges": [{"v": [0, 1], "k": 1}, {"v": [0, 2], "k": 1}, {"v": [1, 2], "k": 1}]})


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok   {what}")


def main():
    strong = coverlab.r_beta(2.0715, "strong")
    check(abs(strong["ratio"] - 4.642) < 5e-4, f"strong ratio {strong['ratio']:.5f}")
    weak = coverlab.r_beta(2.191, "weak")
    check(abs(weak["ratio"] - 4.9102) < 5e-4, f"weak ratio {weak['ratio']:.5f}")

    check(coverlab.poisson_left_tail(10, 10.0) <= 0.5, "poisson median")
    probs = [0.3, 0.5, 0.9, 0.2]
    tail = coverlab.exact_left_tail(probs, 2)
    check(0.0 <= tail <= 1.0, f"exact left tail {tail:.4f}")
    check(coverlab.p_bound("weak", 1.0) == 0.5, "p_bound at gamma 1")

    sol = coverlab.solve_relaxation(TRIANGLE, "msvc")
    opt = coverlab.brute_force_opt(TRIANGLE)
    check(sol["objective"] <= opt["cost"] + 1e-6, f"lp {sol['objective']:.4f} <= opt {opt['cost']}")

    rep = coverlab.rounding_experiment(TRIANGLE, "msvc", trials=20000, seed=3)
    check(rep["ratio"] <= 16 / 9 + 3 * rep["ratio_ci99"], f"msvc ratio {rep['ratio']:.4f}")
    again = coverlab.rounding_experiment(TRIANGLE, "msvc", trials=20000, seed=3)
    check(again["mean_cost"] == rep["mean_cost"], "rounding is seed-deterministic")

    g = coverlab.greedy(TRIANGLE, p=2.0)
    check(g["certificate_error"] is None, f"greedy certificate, g = {g['g']:.4f}")

    inst = coverlab.generate_random(6, 5, 3, seed=11)
    check(len(coverlab.instance_digest(inst)) > 0, "random instance digest")

    gap = coverlab.gap_report(1000, 0.05, 3)
    check(1.0 <= gap["ratio"] < 16 / 9, f"gap ratio {gap['ratio']:.4f}")

    code, out, _ = coverlab.run_cli(["gap", "--big-n", "1000", "--k", "2,3"])
    check(code == 0 and json.loads(out)["subcommand"] == "gap", "cli gap")
    code, _, err = coverlab.run_cli(["round", "--mode", "nonsense"])
    check(code == 2 and err, "cli usage error")
    check(math.isfinite(coverlab.r_beta(3.0)["value"]), "default variant")
    print("smoke test passed")


if __name__ == "__main__":
    main()
