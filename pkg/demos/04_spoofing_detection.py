"""End to end: train a PCD, calibrate the threshold, decide on sequences.

A legitimate user walks along a line at 0.5 m/s (10 frames/s, 20 frames).
Under attack a second transmitter on its own trajectory injects frames,
each frame coming from either user with probability 1/2.
"""

import numpy as np

from rssspoof import harness, spoof_detector as sd

cfg = harness.config_for("speed", seed=4, dtype="float32", max_epochs=30, patience=6,
                         batch_size=128)
data = harness.prepare_dataset(cfg)
train_pool, frames_pool = harness.split_estimate_pools(data)
pcd_model = harness.train_sd_detectors(cfg, train_pool, ["dnnc"])["dnnc"]

speed, rate, T = 0.5, 10.0, 20


def sequences(hyp, n, first):
    for trial in range(first, first + n):
        rng = harness.stream(cfg.seed, 99, hyp, trial)
        yield harness.simulate_sequence(frames_pool, speed, rate, T, hyp, rng)


h0 = [sd.detect(f, sd.SdModel(0.0, pcd_model)).statistic.value for f, _ in sequences(0, 200, 0)]
gamma = sd.calibrate_threshold_h0(h0, 0.02)
model = sd.SdModel(gamma, pcd_model)
print(f"threshold for pfa 0.02 from 200 H0 runs: {gamma}")

frames, locs = next(sequences(1, 1, 10_000))
out = sd.detect(frames, model)
print("attack example: true locations", locs.tolist())
print("               regions        ", out.region_sequence.c.tolist())
print("decision record:", out.to_json()[:120], "...")

fresh0 = [sd.detect(f, model).value for f, _ in sequences(0, 200, 200)]
fresh1 = [sd.detect(f, model).value for f, _ in sequences(1, 200, 0)]
print(f"fresh runs: pfa {np.mean(np.array(fresh0) == sd.ATTACK):.3f}, "
      f"pd {np.mean(np.array(fresh1) == sd.ATTACK):.3f}")
