"""Compare the compiled and pure-Python kernels on the hot paths.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

from drcbf import _backend, _purepy

XHAT = (20.0, 23.0, -0.1, 1.5)
MEAS = ((-0.5, -0.5, 0.0, 0.0), (0.5, 0.5, 0.0, 0.0))
UBOX = ((-1.0, -2.0), (1.0, 2.0))
DBOX = ((-0.3, -0.3), (0.3, 0.3))


def cases(mod):
    def tube():
        return mod.unicycle_tube(XHAT, MEAS[0], MEAS[1], UBOX[0], UBOX[1], DBOX[0], DBOX[1], 0.1, 10)

    end, _, tlo, thi = tube()

    def margin():
        return mod.unicycle_margin(tlo, thi, XHAT, UBOX[0], UBOX[1], DBOX[0], DBOX[1], 32.5, 25.0, 5.0, 1.0, 1.0)

    def rk4():
        return mod.unicycle_rk4(XHAT, (0.5, 1.0), (0.1, -0.2), 0.01, 1)

    return {"tube (10 sub-steps)": tube, "reach margin": margin, "rk4 step": rk4}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=20000)
    args = parser.parse_args()
    if _backend.compiled is None:
        print("compiled extension not available; only the pure-Python timings are shown")
    py = cases(_purepy)
    cy = cases(_backend.compiled) if _backend.compiled is not None else {}
    print(f"{'kernel':<22}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for name, fn in py.items():
        t_py = timeit.timeit(fn, number=args.repeat) / args.repeat * 1e6
        if name in cy:
            t_cy = timeit.timeit(cy[name], number=args.repeat) / args.repeat * 1e6
            print(f"{name:<22}{t_py:>14.2f}{t_cy:>14.2f}{t_py / t_cy:>9.1f}x")
        else:
            print(f"{name:<22}{t_py:>14.2f}{'-':>14}{'-':>10}")


if __name__ == "__main__":
    main()
