"""Compare the compiled kernels against the numpy fallback.

Times each kernel on a default-size sweep, then a full Monte Carlo sweep with
each backend swapped in, and reports the speed-up.

    python3 benchmarks/bench_kernels.py [--repeat 200] [--trials 40] [--json out.json]
"""

import argparse
import json
import sys
import time
import timeit

import numpy as np

from raltsim import _kernels
from raltsim.altimeter import ChirpConfig, EchoChannel, ReceiverConfig, synthesize_dechirped
from raltsim.compliance import Scenario, run_sweep


def kernel_inputs(chirp):
    rng = np.random.default_rng(0)
    n = chirp.sweep_samples
    render_args = (
        n,
        chirp.fft_length,
        chirp.sample_rate,
        np.array([1e-5, 3e-7]),
        np.array([152_000.0, 410_000.0]),
        np.array([0.3, 1.1]),
        rng.standard_normal((2, n)),
        1e-7,
    )
    x = synthesize_dechirped(chirp, EchoChannel(150.0), ReceiverConfig(), seed=1)
    spectrum = np.ascontiguousarray(np.fft.fft(x * np.r_[np.hanning(n), np.zeros(chirp.fft_length - n)]))
    return render_args, (spectrum, chirp.fft_length // 2)


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200, help="calls per timing run (best of 5 runs)")
    ap.add_argument("--trials", type=int, default=40, help="trials per altitude for the sweep timing")
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)

    backends = _kernels.available_backends()
    if "compiled" not in backends:
        print("compiled kernels not built; only the python backend is available", file=sys.stderr)
    chirp = ChirpConfig()
    render_args, analyze_args = kernel_inputs(chirp)
    scenario = Scenario(trials_per_point=args.trials, seed=1)

    results = {}
    for name in backends:
        mod = _kernels.get_backend(name)
        row = {
            "render_sweep_us": 1e6 * best_of(lambda: mod.render_sweep(*render_args), 5, args.repeat),
            "analyze_spectrum_us": 1e6 * best_of(lambda: mod.analyze_spectrum(*analyze_args), 5, args.repeat),
        }
        with _kernels.use_backend(name):
            t0 = time.perf_counter()
            run_sweep(scenario)
            row["sweep_s"] = time.perf_counter() - t0
        row["trials"] = len(scenario.altitudes_ft) * scenario.trials_per_point
        results[name] = row

    print(f"{'backend':<10}{'render_sweep':>16}{'analyze_spectrum':>20}{'full sweep':>14}")
    for name, row in results.items():
        print(
            f"{name:<10}{row['render_sweep_us']:>13.1f} us{row['analyze_spectrum_us']:>17.1f} us"
            f"{row['sweep_s']:>12.2f} s"
        )
    if len(results) == 2:
        py, cc = results["python"], results["compiled"]
        print(
            f"speed-up   render x{py['render_sweep_us'] / cc['render_sweep_us']:.2f}, "
            f"analyze x{py['analyze_spectrum_us'] / cc['analyze_spectrum_us']:.2f}, "
            f"sweep x{py['sweep_s'] / cc['sweep_s']:.2f} ({cc['trials']} trials)"
        )
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
