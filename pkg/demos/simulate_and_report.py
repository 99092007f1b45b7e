"""Simulate the reference book for an hour of market time and print the headline metrics."""
import sys

from mqhlob import analytics as an
from mqhlob.dynamics import run_simulation
from mqhlob.io import reference_config


def main(horizon=3600.0, seed=7):
    cfg = reference_config()
    res = run_simulation(cfg.spec, cfg.handlers, cfg.init, horizon, seed=seed)
    log = res.log
    rep = an.metric_report(log)
    print(f"{log.n_events} events over {log.duration:.0f} s, status {res.status}")
    for k in sorted(rep.scalars):
        print(f"  {k:>24s}  {rep.scalars[k]}")
    sh = an.average_shape(log)
    print("shape peak at", sh.argmax, "ticks, quartiles", sh.quartiles)


if __name__ == "__main__":
    main(*(float(a) for a in sys.argv[1:2]))
