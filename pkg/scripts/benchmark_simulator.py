import os
import sys
import time

import numpy as np

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

try:
    from src.estimation.estimator import estimate_f
    from src.geometry.domain import DomainSpec
    from src.geometry.regions import build_nested_regions
    from src.models.fields import BumpField
    from src.simulation.config import SdeConfig
    from src.simulation.simulator import sample_path
    from src.wavelets.basis import build_basis, minimal_feasible_level
    from src.wavelets.family import build_family
    print("Successfully imported simulator and estimator")
except ImportError as e:
    print(f"Failed to import simulator: {e}")
    sys.exit(1)


def timed(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1000)
    return np.array(times)


def main():
    regions = build_nested_regions(DomainSpec.hyperrectangle((0.0,), (7.0,)), 0.875)
    f0 = BumpField(center=(3.5,), widths=(0.8,), amplitude=0.5)
    family = build_family(4)
    J0 = minimal_feasible_level(family, regions)
    basis = build_basis(family, regions, J0=J0, J=J0 + 1)

    for N in (1024, 4096, 16384):
        config = SdeConfig(f=f0, regions=regions, D=float(N) ** -0.6, N=N, seed=1)
        print(f"N={N}: D={config.D:.3e}, {config.substep_count} substeps per interval")

        sample_path(config)  # warm-up
        sim_times = timed(lambda: sample_path(config), 5)
        obs = sample_path(config)
        est_times = timed(lambda: estimate_f(obs, basis), 5)

        print(f"  Simulation: {np.mean(sim_times):.1f} ms (P95 {np.percentile(sim_times, 95):.1f} ms)")
        print(f"  Estimation: {np.mean(est_times):.1f} ms (P95 {np.percentile(est_times, 95):.1f} ms)")
        print(f"  Transitions/s: {N / (np.mean(sim_times) / 1000):.0f}")

    print("Benchmark completed.")

if __name__ == "__main__":
    main()
