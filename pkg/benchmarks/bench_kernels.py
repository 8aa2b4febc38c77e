"""Time the compiled and pure-Python kernels side by side.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from qcool import kernels
from qcool.gridlab import GridSpec, hamiltonian_bands
from qcool.states import PhysParams


def hermite_case(module, points=4096, nmax=200):
    xi = np.linspace(-25, 25, points)
    window = np.sqrt(2 * nmax + 1) + 40
    return lambda: module.hermite_table(xi, nmax, window)


def cn_case(module, points=1024, steps=512):
    params = PhysParams.natural(damping=0.1)
    spec = GridSpec.for_params(params, points=points, steps_per_period=4096)
    stepper = module.CNStepper(*hamiltonian_bands(spec, params), spec.dt / 2, np.exp(-0.3 * spec.dt))
    psi0 = np.exp(-0.5 * spec.x**2).astype(np.complex128)

    def run():
        psi = psi0
        for _ in range(steps):
            psi = stepper(psi)
        return psi

    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    cases = {
        "hermite_table 4096 pts x n<=200": hermite_case,
        "Crank-Nicolson 512 steps, M=1024": cn_case,
    }
    print(f"default backend: {kernels.BACKEND}")
    if "cython" not in backends:
        print("compiled extension not built; timing the fallback only")
    for label, make in cases.items():
        times = {}
        for name, module in sorted(backends.items()):
            fn = make(module)
            fn()
            times[name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        row = "  ".join(f"{name} {t * 1e3:9.2f} ms" for name, t in times.items())
        speedup = f"  speedup {times['python'] / times['cython']:.1f}x" if "cython" in times else ""
        print(f"{label:36s} {row}{speedup}")


if __name__ == "__main__":
    main()
