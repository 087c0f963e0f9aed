#!/usr/bin/env python3
"""Smoke test for the cosep_py extension module.

Builds nothing itself; expects `cargo build -p cosep-py` to have produced
target/debug/libcosep_py.so. Run from anywhere:

    cargo build -p cosep-py && python3 python/smoke_test.py
"""

import pathlib
import shutil
import sys
import tempfile

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    libname = {
        "linux": "libcosep_py.so",
        "darwin": "libcosep_py.dylib",
        "win32": "cosep_py.dll",
    }[sys.platform if sys.platform in ("darwin", "win32") else "linux"]
    candidates = [
        ROOT / "target" / "debug" / libname,
        ROOT / "target" / "release" / libname,
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        sys.exit("build the extension first: cargo build -p cosep-py")
    stage = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(lib, stage / "cosep_py.so")
    sys.path.insert(0, str(stage))
    import cosep_py

    return cosep_py


def main():
    cp = load_module()

    inst = cp.generate_instance(60, 50, 6, 3, 1e-6, seed=1)
    m = inst["m"]
    assert m.shape == (60, 50)
    assert np.all(m >= 0)

    sel = cp.cos_select(m, 6, 3)
    k1, k2 = sel["k1"], sel["k2"]
    assert len(k1) == 6 and len(k2) == 3

    acc = cp.index_accuracy(k1, k2, inst["k1_star"], inst["k2_star"], 60, 50)
    assert 0.0 <= acc <= 1.0
    print(f"index accuracy: {acc:.3f}")

    rel = cp.relative_approx(m, k1, k2)
    assert rel > 0.99, rel
    print(f"relative approximation: {rel:.5f}")

    fac = cp.fit_factors(m, k1, k2)
    recon = fac["p1"] @ fac["s"] @ fac["p2"]
    rres = np.linalg.norm(m - recon) / np.linalg.norm(m)
    assert rres < 0.05, rres
    print(f"factor residual: {rres:.2e}")

    cur = cp.cur_residual(m, inst["k1_star"], inst["k2_star"])
    assert cur < 1e-3, cur
    print(f"cur residual at planted indices: {cur:.2e}")

    y = cp.fgm_self_expression(m[:10, :10])
    assert y.shape == (10, 10) and np.all(y >= -1e-12)

    spa = cp.spa_select(m, 3)
    assert len(spa) == 3

    w, h = cp.nmf_ahals(m, 3, max_iter=200, seed=0)
    assert w.shape == (60, 3) and h.shape == (3, 50)
    nmf_rel = 1 - np.linalg.norm(m - w @ h) / np.linalg.norm(m)
    print(f"nmf relative approximation: {nmf_rel:.5f}")

    ca = cp.clustering_accuracy([0, 0, 1, 1], [1, 1, 0, 0], 2)
    assert ca == 1.0

    print("smoke test: OK")


if __name__ == "__main__":
    main()
