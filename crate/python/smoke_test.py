#!/usr/bin/env python3
"""End-to-end smoke test of the Python bindings.

Builds the extension with cargo (release profile), loads it, and runs a
tiny simulate -> infer -> score round trip plus an ingest check. Exits
non-zero on any failure.

Usage: python3 python/smoke_test.py
"""

import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_and_load():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "hawkes-mml-py"],
        cwd=ROOT,
        check=True,
    )
    release = ROOT / "target" / "release"
    candidates = [
        release / "libhawkes_mml_py.so",
        release / "libhawkes_mml_py.dylib",
        release / "hawkes_mml_py.dll",
    ]
    lib = next((c for c in candidates if c.exists()), None)
    if lib is None:
        sys.exit(f"extension library not found under {release}")
    stage = Path(tempfile.mkdtemp(prefix="hawkes_mml_py_"))
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    shutil.copy2(lib, stage / f"hawkes_mml_py{suffix}")
    sys.path.insert(0, str(stage))


build_and_load()
import hawkes_mml_py as hm  # noqa: E402

# Two-node chain with self-excitation on the driver node.
mu = [0.5, 0.5]
alpha = [[0.55, 0.0], [0.55, 0.0]]
beta = [[1.0, 1.0], [1.0, 1.0]]
truth = [[1, 0], [1, 0]]

events = hm.simulate(mu, alpha, beta, horizon=400.0, seed=3)
assert len(events) == 2, events
assert all(len(times) > 100 for times in events), [len(t) for t in events]
assert events == hm.simulate(mu, alpha, beta, horizon=400.0, seed=3), "not deterministic"

lam = hm.intensity(mu, alpha, beta, events, 400.0, 1, 200.0)
assert lam >= 0.5, lam

adj = hm.infer_graph(events, horizon=400.0, criterion="mml-u")
report = hm.score(adj, truth)
print(f"inferred adjacency: {adj}")
print(f"score: {report}")
assert report["f1"] == 1.0, report

adj_bic = hm.infer_graph(events, horizon=400.0, criterion="bic", workers=2)
assert hm.score(adj_bic, truth)["f1"] == 1.0

# Rolling-window shock extraction: a strictly increasing series fires at
# every usable index.
columns = [[float(i % 7) for i in range(40)], [float(i) for i in range(40)]]
extracted, counts = hm.extract_events(columns, window=10, quantile=0.2, horizon=100.0)
assert counts[1] == 31, counts
assert len(extracted[1]) == 31

print("smoke test passed")
