"""Time the hot kernels on each available backend.

Usage::

    python benchmarks/bench_backends.py [--repeat N]

Prints one line per (kernel, backend) with the best-of-N wall time and the
speed-up of the compiled kernels over pure Python.
"""

import argparse
import timeit

from chaplygin import ChaplyginEos, IntegrationConfig, _backend, exponents_for, integrate
from chaplygin.integrator import FixedEuler, _params
from chaplygin.reduction import MomentumForm

EXP = exponents_for("III", 1.0)
EOS = ChaplyginEos(50.0, 1.0)
PARAMS = _params(EXP, EOS, MomentumForm.AS_PRINTED)
ADAPTIVE = IntegrationConfig()
EULER = IntegrationConfig(mode=FixedEuler(1e-5))


def cases(name):
    kern = _backend.get(name)
    return {
        "rhs x 100000": lambda: [kern.rhs(1.5, 0.1, 1.2, 0.3, PARAMS) for _ in range(100_000)],
        "adaptive integrate": lambda: integrate(ADAPTIVE, EXP, EOS, backend=name),
        "euler 5e5 steps": lambda: integrate(EULER, EXP, EOS, backend=name),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    names = sorted(_backend.AVAILABLE)
    times = {}
    for name in names:
        for label, fn in cases(name).items():
            best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            times[label, name] = best
            print(f"{label:<22} {name:<9} {best * 1e3:10.2f} ms")
    if "compiled" in names:
        for label in cases("python"):
            speedup = times[label, "python"] / times[label, "compiled"]
            print(f"{label:<22} speed-up  {speedup:10.1f}x")


if __name__ == "__main__":
    main()
