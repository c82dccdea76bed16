"""Grid-tune the regulation gains committed in the controller defaults.

For each (kp, ki) candidate the closed loop is run at the reference
operating point and scored by (a) updates from regulation entry until the
error first stays inside the deadband and (b) surviving a full-amplitude
aggressor square wave.  The committed defaults (kp=0.15, ki=0.3 with an
8-code step clamp) settle in ~20 updates and track the disturbance with
~3 codes of error.

Usage: python scripts/tune_pi.py
"""

import numpy as np

from ringlock import config as cfgmod
from ringlock.scenarios import LockSimulation


def score(kp: float, ki: float, seed: int = 7):
    cfg = cfgmod.load_config(overrides={"controller": {"kp": kp, "ki": ki}})
    power = cfgmod.dbm_to_watts(-2.0)
    sim = LockSimulation(cfg, power, n_rings=2, controlled=0, seed=seed)
    rec = sim.run(400, aggressor_codes=lambda k: {1: 1023})
    if sim.state.stage.value != "regulate":
        return None
    readings = np.array(rec.reading)
    entry = rec.stage.index("regulate")
    err = np.abs(readings[entry:] - sim.state.setpoint)
    inside = np.flatnonzero(err <= cfg["controller"]["deadband"])
    settle = int(inside[0]) if inside.size else None

    period = cfg["lock_aggressor"]["aggressor_period_updates"]
    start = sim.updates_run
    square = lambda k: {1: 0 if ((k - start) % period) < period // 2 else 1023}
    rec2 = sim.run(period * 2, aggressor_codes=square)
    track = np.abs(np.array(rec2.reading) - sim.state.setpoint)
    survived = sim.state.stage.value == "regulate"
    return settle, float(np.percentile(track, 95)), survived


def main() -> None:
    print(f"{'kp':>6} {'ki':>6} {'settle':>7} {'p95 err':>8} {'survives':>9}")
    for kp in (0.05, 0.1, 0.15, 0.3):
        for ki in (0.1, 0.2, 0.3, 0.5):
            result = score(kp, ki)
            if result is None:
                print(f"{kp:>6} {ki:>6} {'lost':>7}")
                continue
            settle, p95, survived = result
            print(f"{kp:>6} {ki:>6} {str(settle):>7} {p95:>8.2f} {str(survived):>9}")


if __name__ == "__main__":
    main()
