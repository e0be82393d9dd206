"""Time the compiled kernels against their numpy twins.

Usage::

    python benchmarks/bench_kernels.py [--sites 8] [--repeat 5] [--end-to-end]

Kernel timings call both implementations directly in one process, so numba
must be importable and ``QICAS_DISABLE_NUMBA`` unset. ``--end-to-end`` also
runs a small solve + optimize in two subprocesses, one with the env flag set.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from qicas import _kernels, build_hubbard, compute_rdms, ground_state
from qicas._accel import USE_NUMBA
from qicas.fci import _effective_one_body, enumerate_determinants


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(sites):
    h = build_hubbard(sites, 1.0, 4.0)
    d, na, nb = h.d, h.n_alpha, h.n_beta
    space = enumerate_determinants(d, na, nb)
    c = np.random.default_rng(0).standard_normal(space.shape)
    a, b = space.alpha, space.beta
    tables = (a.ex_pq, a.ex_j, a.ex_s, b.ex_pq, b.ex_j, b.ex_s)
    sig = (c, h.e_core, _effective_one_body(h), h.eri.reshape(d * d, d * d), d, *tables)
    r = compute_rdms(ground_state(h)[1])
    idx = np.array([0, d // 2])
    ga = np.ascontiguousarray(r.gamma_a[np.ix_(idx, idx)])
    gb = np.ascontiguousarray(r.gamma_b[np.ix_(idx, idx)])
    g16 = np.ascontiguousarray(r.gamma_os[np.ix_(idx, idx, idx, idx)])
    thetas = np.linspace(0.0, np.pi, 3142)
    return {
        f"sigma ({space.size} dets)": (_kernels.sigma_loop, _kernels.sigma_numpy, sig),
        "rdm1": (_kernels.rdm1_loop, _kernels.rdm1_numpy, (c, a.ex_pq, a.ex_j, a.ex_s, d)),
        "rdm_os": (_kernels.rdm_os_loop, _kernels.rdm_os_numpy, (c, *tables, d)),
        "pair_scan (3142 angles)": (_kernels.pair_scan_loop, _kernels.pair_scan_numpy,
                                    (thetas, ga, gb, g16, True, True)),
    }


E2E = """
import time
from qicas import *
t0 = time.perf_counter()
h = build_hubbard({sites}, 1.0, 4.0)
e, psi = ground_state(h)
r = compute_rdms(psi)
optimize(r, CasPartition.from_sizes({sites}, {sites}, 4, 4), QicasConfig(seed=0), hamiltonian=h)
print(time.perf_counter() - t0)
"""


def end_to_end(sites):
    out = {}
    for label, flag in (("numba", None), ("numpy", "1")):
        env = dict(os.environ)
        env.pop("QICAS_DISABLE_NUMBA", None)
        if flag:
            env["QICAS_DISABLE_NUMBA"] = flag
        script = E2E.format(sites=sites)
        # first run fills the numba cache so the timing excludes compilation
        subprocess.run([sys.executable, "-c", script], env=env, check=True, capture_output=True)
        res = subprocess.run([sys.executable, "-c", script], env=env, check=True,
                             capture_output=True, text=True)
        out[label] = float(res.stdout.split()[-1])
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sites", type=int, default=8)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--end-to-end", action="store_true")
    args = p.parse_args(argv)
    if not USE_NUMBA:
        sys.exit("numba disabled or missing; kernel comparison needs both paths")

    print(f"{'kernel':28s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speed-up':>9s}")
    for name, (fast, slow, call) in kernel_cases(args.sites).items():
        assert np.allclose(fast(*call), slow(*call), atol=1e-10), name
        tf = best_of(lambda: fast(*call), args.repeat)
        ts = best_of(lambda: slow(*call), args.repeat)
        print(f"{name:28s} {tf * 1e3:11.3f} {ts * 1e3:11.3f} {ts / tf:9.1f}")
    if args.end_to_end:
        t = end_to_end(min(args.sites, 6))
        print(f"solve+optimize Hubbard({min(args.sites, 6)}): numba {t['numba']:.2f}s, "
              f"numpy {t['numpy']:.2f}s")


if __name__ == "__main__":
    main()
