#!/usr/bin/env python3
"""Smoke test for the polyrnn_py extension module.

Builds the extension if needed, imports it from the cargo target
directory, and checks a handful of exact values and error decays.

Usage: python3 python/smoke_test.py [--release]
"""

import argparse
import pathlib
import shutil
import subprocess
import sys
import sysconfig
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module(profile: str):
    lib = ROOT / "target" / profile / "libpolyrnn_py.so"
    cmd = ["cargo", "build", "-p", "polyrnn-py"]
    if profile == "release":
        cmd.append("--release")
    subprocess.run(cmd, cwd=ROOT, check=True)
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="polyrnn_py_"))
    shutil.copy2(lib, tmp / f"polyrnn_py{suffix}")
    sys.path.insert(0, str(tmp))
    import polyrnn_py

    return polyrnn_py


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--release", action="store_true", help="use the release build")
    args = parser.parse_args()
    m = load_module("release" if args.release else "debug")

    checks = 0

    def check(name, cond):
        nonlocal checks
        if not cond:
            print(f"FAIL: {name}")
            return False
        checks += 1
        print(f"ok: {name}")
        return True

    ok = True

    sq = m.square_rnn(1.0)
    ok &= check("square net has 7 hidden neurons", sq.hidden_dim == 7)
    ok &= check("square(0.25) at t=2 is 0.0625", sq.output_at([0.25], 2) == [0.0625])
    ok &= check("square(1.0) is exact from t=1", sq.output_at([1.0], 5) == [1.0])

    mul = m.mult_rnn(1.0)
    ok &= check("mult(0.5, 0.5) at t=2 is 0.25", mul.output_at([0.5, 0.5], 2) == [0.25])
    ok &= check("mult zero slice is exact", mul.output_at([0.7, 0.0], 6) == [0.0])

    ident = m.identity_rnn()
    ok &= check("identity holds its input", ident.output_at([-3.5], 9) == [-3.5])

    clock = m.clock_rnn()
    pulses = [t for t, out in enumerate(clock.run([], 100)) if out == [1.0]]
    ok &= check("clock pulses at 2^k - 2", pulses == [2, 6, 14, 30, 62])

    pw, min_k = m.powers_rnn(1.0, 2)
    t = 2**5 - 2
    out = pw.output_at([0.5], t)
    ok &= check("powers pass-through is exact", out[0] == 0.5)
    ok &= check(
        "powers coordinates within epsilon",
        all(
            abs(out[i] - 0.5 ** (i + 1)) <= m.epsilon(1.0, max(1, (i + 1).bit_length() - 1), 5)
            for i in range(1, 4)
        ),
    )

    net, info = m.build_poly_rnn([1.0, -2.0, 0.0, 1.0], 1.0)
    ok &= check("cubic network within size bound", net.hidden_dim <= 80 * 3 + 11)
    ok &= check("cubic t_min is 26", info["t_min"] == 26)
    decayed = True
    for t in (26, 60, 100, 150):
        err = m.sup_error(net, [1.0, -2.0, 0.0, 1.0], 1.0, t, 200)
        bound = m.error_bound([1.0, -2.0, 0.0, 1.0], 1.0, t)
        decayed &= err <= bound
    ok &= check("cubic error within the runtime bound", decayed)

    ok &= check(
        "unfolded evaluation matches the recurrence bit-exactly",
        all(net.unfolded_eval([x], 20) == net.output_at([x], 20) for x in (-1.0, -0.3, 0.6, 1.0)),
    )

    linear, info = m.build_poly_rnn([1.0, 2.0], 5.0)
    ok &= check("linear polynomial is exact", info["exact"] and linear.output_at([3.0], 7) == [7.0])

    round_trip = m.Rnn.from_json(net.to_json())
    ok &= check("weights JSON round-trips", round_trip.to_json() == net.to_json())

    if ok:
        print(f"PASS: {checks} checks")
        return 0
    print("smoke test failed")
    return 1


if __name__ == "__main__":
    sys.exit(main())
