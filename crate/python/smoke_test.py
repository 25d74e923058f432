"""Smoke test for the maxtype Python module.

Run after `maturin develop -m crates/py/Cargo.toml`, or point it at a built
library: python python/smoke_test.py target/debug/libmaxtype.so
"""

import importlib.util
import json
import math
import os
import shutil
import sys
import tempfile


def load():
    if len(sys.argv) > 1:
        tmp = tempfile.mkdtemp()
        shutil.copy(sys.argv[1], os.path.join(tmp, "maxtype.so"))
        sys.path.insert(0, tmp)
    spec = importlib.util.find_spec("maxtype")
    if spec is None:
        sys.exit("maxtype is not importable; build it or pass the library path")
    import maxtype

    return maxtype


def close(a, b):
    return math.isclose(a, b, rel_tol=1e-12)


def main():
    mt = load()
    assert mt.precision() == 128

    x = mt.Space.generated(2.0, 1, gen="first")
    assert len(x) == 17 and x.total_mass() == 129.0
    branch = x.find("x[1,1,1]")
    assert close(x.rwt([branch], 2.0), 129 / 81)

    const = [3.0] * len(x)
    assert x.maximal(const, op="centered") == const
    assert x.maximal_exact(const, op="noncentered")[0] == "0x3p0"

    q = mt.Space.generated(2.0, 2, gen="first", mode="quotient")
    assert q.mode == "quotient" and sum(q.multiplicities()) == 1300
    f2 = q.extremal(2)
    assert sorted(v for v in f2 if v) == [1.0, 1.0, 2.0]

    report = json.loads(mt.growth_table(2.0, 4, gen="first", op="centered"))
    assert report["verdict"] == "pass"
    assert [r["L"]["dec"] for r in report["rows"]] == ["0.125", "0.25", "0.375", "0.5"]

    # a Dirac at one y' leaf, seen from another, alone and inside the union
    y = mt.Space.generated(2.0, 1, gen="second")
    z = mt.Space.glued(x, y)
    dy = [0.0] * len(y)
    dy[y.find("y'[1,1,1]")] = 1.0
    assert close(y.maximal(dy, op="noncentered")[y.find("y'[1,1,2]")], 8 / 130)
    dz = [0.0] * len(x) + dy
    assert close(z.maximal(dz, op="noncentered")[len(x) + y.find("y'[1,1,2]")], 8 / 259)

    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "balls.json")
        code = mt.run_cli(["verify-balls", "--p0", "1.5", "--nmax", "2", "--gen", "second", "--out", out])
        assert code == 0
        with open(out) as fh:
            assert json.load(fh)["notes"] == ["balls checked: all match"]

    try:
        mt.Space.generated(1.0, 2)
    except ValueError:
        pass
    else:
        raise AssertionError("p0 = 1 must be rejected")

    print("smoke test passed")


if __name__ == "__main__":
    main()
