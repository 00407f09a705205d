"""Smoke test for the Python bindings.

Builds the extension with cargo unless PDSPECTRA_LIB points at a built
library, loads it as `pdspectra` and exercises the main entry points.
"""

import math
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    lib = os.environ.get("PDSPECTRA_LIB")
    if lib is None:
        subprocess.run(
            ["cargo", "build", "--release", "-p", "pdspectra-py", "--features", "extension-module"],
            cwd=ROOT,
            check=True,
        )
        lib = ROOT / "target" / "release" / "libpdspectra_py.so"
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, Path(tmp) / "pdspectra.so")
    sys.path.insert(0, tmp)
    import pdspectra

    return pdspectra


def main():
    pd = load()

    assert pd.rho(1.0) == 1.0
    assert abs(pd.rho(2.0) - (1 - math.log(2))) < 1e-12
    assert pd.rho_csv(2.0, 0.5).splitlines()[0] == "u,rho(u)"

    assert pd.factorize(360) == [(2, 3), (3, 2), (5, 1)]
    s = pd.spectrum(2 * 3 * 7)
    assert abs(sum(s) - 1) < 1e-12 and s == sorted(s, reverse=True)

    seq = pd.Sequence({"kind": "poly", "coeffs": [1, 0, 1]})
    assert 10 in seq and 11 not in seq
    assert seq.count(10) == 3
    assert pd.Sequence.shifted_primes().members(20) == [1, 2, 4, 6, 10, 12, 16, 18]
    try:
        pd.Sequence.poly([-1, 0, 1])
    except ValueError:
        pass
    else:
        raise AssertionError("reducible polynomial accepted")

    draw = pd.sample_pd(42, 0)
    assert abs(sum(draw.entries) + draw.tail_mass - 1) < 1e-12

    box = [{"lower": [0.25], "upper": [0.5]}]
    assert abs(pd.box_correlation_exact([(0.25, 0.5)]) - math.log(2)) < 1e-15
    value, se = pd.corr_mc(box, 200_000, 1)
    assert abs(value - math.log(2)) < 4 * se

    sample = pd.SampleSet(pd.Sequence.uniform(), 100_000)
    assert len(sample) == 100_000 and sample.exhaustive
    value, _ = sample.tail(0.1)
    assert 0.1 < value < 0.2

    lod = pd.lod_error_sum(pd.Sequence.shifted_primes(), 100_000, 0.4)
    assert lod["normalized_sum"] > 0

    report = pd.run_experiment({"experiment": "rho-table", "u_max": 3})
    assert report["table"]["columns"] == ["u", "rho(u)"]
    reports = pd.sweep(
        {"experiment": "tail", "spec": {"kind": "uniform"}, "x": 10_000}, "eps", [0.1, 0.2]
    )
    assert [r["parameters"]["eps"] for r in reports] == [0.1, 0.2]

    try:
        pd.run_experiment({"experiment": "tail", "spec": {"kind": "uniform"}, "eps": 0.1})
    except ValueError as e:
        assert "`x`" in str(e)
    else:
        raise AssertionError("missing x accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
