"""Find the crosstalk gain committed for the neighbouring-ring aggressor.

Bisects the coupling between adjacent sites for the smallest value whose
full-swing square-wave disturbance snaps off a frozen-DAC lock at the
reference operating point (-2.0 dBm, 95 % setpoint).  The committed
default (plant.crosstalk_coupling = 0.06) is chosen ~1.5x above that
threshold so the uncontrolled run fails decisively while the closed loop
retains regulation.

Usage: python scripts/fit_crosstalk.py
"""

import numpy as np

from ringlock import config as cfgmod
from ringlock.scenarios import LockSimulation


def frozen_run_snaps(coupling: float, seed: int = 7) -> bool:
    cfg = cfgmod.load_config(overrides={"plant": {"crosstalk_coupling": coupling}})
    power = cfgmod.dbm_to_watts(cfg["lock_aggressor"]["pump_power_dbm"])
    period = cfg["lock_aggressor"]["aggressor_period_updates"]
    sim = LockSimulation(cfg, power, n_rings=2, controlled=0, seed=seed)
    sim.run(cfg["lock_aggressor"]["lock_updates"], aggressor_codes=lambda k: {1: 1023})
    sim.require_locked()
    start = sim.updates_run
    square = lambda k: {1: 0 if ((k - start) % period) < period // 2 else 1023}
    rec = sim.run(period * 2, aggressor_codes=square, feedback=False)
    readings = np.array(rec.reading)
    threshold = sim.state.dark_code + 0.10 * sim.state.span
    return bool((readings < threshold).any())


def main() -> None:
    lo, hi = 0.0, 0.10
    if not frozen_run_snaps(hi):
        raise SystemExit("upper bracket does not snap; widen the search")
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        if frozen_run_snaps(mid):
            hi = mid
        else:
            lo = mid
    print(f"snap threshold coupling ~ {hi:.4f}")
    committed = cfgmod.DEFAULT_CONFIG["plant"]["crosstalk_coupling"]
    print(f"committed coupling {committed} (margin {committed / hi:.2f}x)")


if __name__ == "__main__":
    main()
