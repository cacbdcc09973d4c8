"""Compare position-change detectors on locations they never saw.

Trains the pair network and fits the distance and k-means baselines on D
grid locations, then scores same/different decisions on pairs drawn from
the remaining 52 - D locations.
"""

import time

from rssspoof import harness

cfg = harness.config_for("pcd-accuracy", seed=1, locations_list=(10, 40), trials=1,
                         dtype="float32", max_epochs=30, patience=6, batch_size=128)
data = harness.prepare_dataset(cfg)
print(f"{data.n_locations} locations x {data.n_estimates} estimates x {data.feature_count} features")

t = time.time()
res = harness.run_pcd_accuracy(cfg, data)
print(f"trained in {time.time() - t:.0f} s\n")
print(f"{'D':>3}  " + "  ".join(f"{k:>7}" for k in cfg.detectors))
for D in cfg.locations_list:
    accs = [res.values(f"D={D};detector={k}").mean() for k in cfg.detectors]
    print(f"{D:>3}  " + "  ".join(f"{a:7.3f}" for a in accs))
