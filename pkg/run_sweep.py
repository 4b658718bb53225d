import csv
import time
import cProfile
import pstats
import logging
from cascade_lab.scenarios.sweep import classification_sweep
from cascade_lab.systems.manifold import cascade_S_bounds_y

# Classification logs every stationary candidate at DEBUG; keep the sweep quiet
logging.getLogger("MANIFOLD").setLevel(logging.WARNING)
logging.getLogger("SWEEP").setLevel(logging.WARNING)

def run_sweeps(s_values=(1.5, 2.0, 3.0), N=2.0, grid=50, export_path="classification_results.csv"):
    results = []
    start_time = time.time()

    print(f"Starting {len(s_values)} classification sweeps on a {grid}x{grid} (E, S) grid...")

    for i, s in enumerate(s_values):
        sweep = classification_sweep(s=s, N=N, n_E=grid, n_S=grid)
        components = sweep.cascade_components()
        mismatches = sweep.sign_mismatches()

        for row in sweep.rows():
            row["s"] = f"{s:g}"
            results.append(row)

        widths = [hi - lo for lo, hi in (cascade_S_bounds_y(N, E, s) for E in sweep.E)]
        print(f"s={s:g}: {sweep.counts()}")
        print(f"  cascade components = {components}, sign mismatches = {mismatches}, "
              f"widest (S-, S+) window = {max(widths):.4f}")
        print(f"Completed {i + 1}/{len(s_values)} sweeps...")

    end_time = time.time()
    print(f"Finished sweeps in {end_time - start_time:.2f} seconds.")

    # Export to CSV
    if results:
        keys = ["s"] + [k for k in results[0].keys() if k != "s"]
        with open(export_path, 'w', newline='') as f:
            dict_writer = csv.DictWriter(f, fieldnames=keys)
            dict_writer.writeheader()
            dict_writer.writerows(results)
        print(f"Results exported to {export_path}")

    # Summary Stats
    labels = [r["classification"] for r in results]
    print("\n--- Summary ---")
    for label in sorted(set(labels)):
        print(f"{label}: {labels.count(label) / len(labels):.2%}")

if __name__ == "__main__":
    # Run with profiling
    profiler = cProfile.Profile()
    profiler.enable()

    run_sweeps()

    profiler.disable()
    stats = pstats.Stats(profiler).sort_stats('cumtime')
    stats.print_stats(20) # Show top 20 functions
