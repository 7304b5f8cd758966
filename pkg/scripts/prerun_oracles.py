"""Pre-registration runs for the Monte Carlo acceptance checks.

Runs the iterated-logarithm experiments at 10x the acceptance path count and
freezes the resulting intervals in tests/golden/oracles.json. The acceptance
tests read that file; re-running this script regenerates it byte-identically
(fixed seeds, fixed chunking).

Usage: python3 scripts/prerun_oracles.py
"""
import json
import os

import numpy as np

from selfnorm import Counterexample56, Counterexample65, Rademacher
from selfnorm.experiments import (ExperimentConfig, cluster_set_diagnostic,
                                  lil_track)

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "golden",
                   "oracles.json")

PRERUN_SEED = 715517
ACCEPT_PATHS = 100
PRERUN_PATHS = 10 * ACCEPT_PATHS
HORIZON = 10**6
CHECKPOINTS = (10**4, 10**5, 10**6)


def main():
    out = {"prerun_seed": PRERUN_SEED, "prerun_paths": PRERUN_PATHS}

    cfg = ExperimentConfig(spec=Rademacher(), seed=PRERUN_SEED,
                           paths=PRERUN_PATHS, horizon=HORIZON,
                           checkpoints=CHECKPOINTS)
    track = lil_track(cfg, workers=4)
    end_max = track["running_max"][:, -1]
    # interval for the median of an independent 100-path run: the pre-run
    # median +/- 5 standard errors of a 100-path sample median
    med = float(np.median(end_max))
    se_med = 1.2533 * float(np.std(end_max)) / np.sqrt(ACCEPT_PATHS)
    out["rademacher_lil"] = {
        "median_running_max": med,
        "median_interval": [med - 5.0 * se_med, med + 5.0 * se_med],
        "frac_exceeding_sqrt2_115": track["frac_exceeding"],
        "checkpoint_medians": track["median_running_max"],
    }

    cfg56 = ExperimentConfig(spec=Counterexample56(), seed=PRERUN_SEED + 1,
                             paths=PRERUN_PATHS, horizon=HORIZON,
                             checkpoints=CHECKPOINTS)
    out["counterexample56"] = {
        "median_value": lil_track(cfg56, workers=4)["median_value"]}

    cfg65 = ExperimentConfig(spec=Counterexample65(), seed=PRERUN_SEED + 2,
                             paths=PRERUN_PATHS, horizon=HORIZON,
                             checkpoints=CHECKPOINTS)
    out["counterexample65"] = {
        "median_value": lil_track(cfg65, workers=4)["median_value"]}

    cdiag = cluster_set_diagnostic(
        ExperimentConfig(spec=Rademacher(), seed=PRERUN_SEED + 3, paths=100,
                         horizon=HORIZON), bins=41, workers=4)
    out["cluster_set"] = cdiag

    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    with open(OUT, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {os.path.normpath(OUT)}")


if __name__ == "__main__":
    main()
