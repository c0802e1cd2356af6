"""Compare the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/kernel_bench.py [--repeats N]

Times the two hot kernels (last-axis softmax and the fused Adam update) on
attention-shaped and parameter-shaped arrays, and reports the speedup of the
compiled path. Exits with a note instead of numbers when the extension is
not built.
"""

import argparse
import time

import numpy as np

from cyclecast import backend


SOFTMAX_SHAPES = [(32, 4, 21, 21), (64, 8, 64, 64), (256, 4, 32, 32)]
ADAM_SIZES = [4_096, 65_536, 1_048_576]


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_softmax(repeats):
    rng = np.random.default_rng(0)
    print("softmax_lastaxis")
    for shape in SOFTMAX_SHAPES:
        x = rng.standard_normal(shape)
        t_py = time_fn(lambda: backend.softmax_lastaxis_py(x), repeats)
        t_c = time_fn(lambda: backend.softmax_lastaxis(x), repeats)
        np.testing.assert_allclose(
            backend.softmax_lastaxis(x), backend.softmax_lastaxis_py(x),
            rtol=1e-12,
        )
        print(f"  {str(shape):>18}  python {t_py * 1e3:8.3f} ms  "
              f"compiled {t_c * 1e3:8.3f} ms  speedup {t_py / t_c:5.2f}x")


def bench_adam(repeats):
    rng = np.random.default_rng(1)
    print("adam_update")
    for size in ADAM_SIZES:
        grad = rng.standard_normal(size)

        def make_state():
            return (rng.standard_normal(size), np.zeros(size), np.zeros(size))

        p, m, v = make_state()
        t_py = time_fn(
            lambda: backend.adam_update_py(p, grad, m, v, 1, 1e-3, 0.9,
                                           0.999, 1e-8),
            repeats,
        )
        p, m, v = make_state()
        t_c = time_fn(
            lambda: backend.adam_update(p, grad, m, v, 1, 1e-3, 0.9,
                                        0.999, 1e-8),
            repeats,
        )
        print(f"  {size:>18,}  python {t_py * 1e3:8.3f} ms  "
              f"compiled {t_c * 1e3:8.3f} ms  speedup {t_py / t_c:5.2f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7,
                        help="timing repeats; best of N is reported")
    args = parser.parse_args()

    print(f"active backend: {backend.backend_name()}")
    if not backend.HAVE_COMPILED:
        print("compiled extension not available; 'compiled' numbers below "
              "are the numpy fallback (speedup ~1.0x expected)")
    bench_softmax(args.repeats)
    bench_adam(args.repeats)


if __name__ == "__main__":
    main()
