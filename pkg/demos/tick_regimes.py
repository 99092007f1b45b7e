"""Sweep the in-spread scale alpha at fixed beta and watch the book move between tick regimes."""
import warnings

from mqhlob import analytics as an
from mqhlob.dynamics import run_simulation
from mqhlob.experiments import regime
from mqhlob.io import reference_config

# a small alpha is supercritical at the wide starting spread until the spread closes
warnings.filterwarnings("ignore", "kernel norm matrix")
base = reference_config()
for alpha in (0.01, 0.05, 0.25, 1.0, 4.0):
    cfg = base.with_critical(alpha, 0.6, None)
    log = run_simulation(cfg.spec, cfg.handlers, cfg.init, 2000.0, seed=1).log
    s = an.time_weighted_mean(an.spread_series(log))
    print(f"alpha={alpha:<5} mean spread {s:6.2f} ticks  {regime(s)}")
