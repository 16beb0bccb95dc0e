#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python/numpy fallback.

Times the four hot kernels on representative workloads, checks that both
backends agree, and (with --end-to-end) times classifier training and a full
closed-loop trial in subprocesses pinned to each backend via
GESTLOCO_BACKEND.

Usage: python benchmarks/backend_bench.py [--repeat N] [--end-to-end]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from gestloco._backend import get_kernels
from gestloco.dsp import design_butterworth_lowpass


def timeit(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(repeat: int) -> None:
    try:
        backends = [("python", get_kernels("python")), ("c", get_kernels("c"))]
    except ImportError:
        print("compiled kernels not built; benchmarking the fallback only")
        backends = [("python", get_kernels("python"))]

    rng = np.random.default_rng(0)
    x = rng.normal(0, 0.05, size=(400, 30))
    queries = rng.normal(0, 0.05, size=(600, 30))
    y = np.where(rng.random(400) < 0.5, 1.0, -1.0)
    gamma = 20.0
    coeffs = design_butterworth_lowpass(5.0, 100.0)
    signal = rng.normal(size=1_000_000)

    gram_ref = backends[0][1].rbf_gram(x, gamma)
    workloads = [
        ("rbf_gram 400x30", lambda k: k.rbf_gram(x, gamma)),
        ("rbf_cross 600x400", lambda k: k.rbf_cross(queries, x, gamma)),
        ("smo_solve n=400", lambda k: k.smo_solve(gram_ref, y, 10.0, 1e-3, 100000)),
        ("biquad_run 1e6", lambda k: k.biquad_run(
            coeffs.b0, coeffs.b1, coeffs.b2, coeffs.a1, coeffs.a2, signal, 0.0, 0.0)),
    ]

    print(f"{'kernel':<20} " + " ".join(f"{name:>12}" for name, _ in backends)
          + ("      speedup" if len(backends) == 2 else ""))
    outputs = {}
    for label, call in workloads:
        times = []
        for name, kernels in backends:
            times.append(timeit(lambda: call(kernels), repeat))
            outputs[(label, name)] = call(kernels)
        line = f"{label:<20} " + " ".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            line += f"  {times[0] / times[1]:>9.1f}x"
        print(line)

    if len(backends) == 2:
        gram_diff = np.abs(outputs[("rbf_gram 400x30", "python")]
                           - outputs[("rbf_gram 400x30", "c")]).max()
        a_py = outputs[("smo_solve n=400", "python")][0]
        a_c = outputs[("smo_solve n=400", "c")][0]
        y_py = outputs[("biquad_run 1e6", "python")][0]
        y_c = outputs[("biquad_run 1e6", "c")][0]
        print(f"\nagreement: max|gram diff|={gram_diff:.2e}, "
              f"smo alphas identical={np.array_equal(a_py, a_c)}, "
              f"biquad bit-identical={np.array_equal(y_py, y_c)}")


_END_TO_END_SNIPPET = r"""
import time
import numpy as np
from gestloco import classifier, BACKEND_NAME
from gestloco.config import PilotConfig, sim_config_from_dict
from gestloco.features import stack_features
from gestloco.pilot import generate_dataset
from gestloco.trial import run_trial

rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(0)))
frames, labels = generate_dataset(200, 0.005, rng)
samples = [classifier.LabeledSample(stack_features(f.left, f.right), l)
           for f, l in zip(frames, labels)]
t0 = time.perf_counter()
model = classifier.train(samples)
t_train = time.perf_counter() - t0
x = np.stack([s.features for s in samples])
t0 = time.perf_counter()
pred = classifier.predict_batch(model, x)
t_pred = time.perf_counter() - t0
cfg = sim_config_from_dict({"kind": "pursuit", "pursuit": {"duration_s": 60.0}})
t0 = time.perf_counter()
run_trial(cfg, "finger-tapping", PilotConfig(), seed=0)
t_trial = time.perf_counter() - t0
print(f"backend={BACKEND_NAME} train={t_train:.3f}s "
      f"predict_1200={t_pred:.3f}s trial_60s={t_trial:.3f}s "
      f"train_acc={float(np.mean(pred == [s.label for s in samples])):.4f}")
"""


def bench_end_to_end() -> None:
    print("\nend-to-end (subprocess per backend):")
    for backend in ("python", "c"):
        env = dict(os.environ, GESTLOCO_BACKEND=backend)
        proc = subprocess.run([sys.executable, "-c", _END_TO_END_SNIPPET],
                              env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"backend={backend}: FAILED\n{proc.stderr}")
        else:
            print(proc.stdout.strip())


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--end-to-end", action="store_true")
    args = parser.parse_args()
    bench_kernels(args.repeat)
    if args.end_to_end:
        bench_end_to_end()
