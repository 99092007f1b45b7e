"""Simulate with known in-spread parameters, then estimate them back from the log."""
from mqhlob.calibration import calibrate
from mqhlob.dynamics import run_simulation
from mqhlob.io import reference_config

truth = (0.95, 0.6, 0.2)
cfg = reference_config().with_critical(*truth)
log = run_simulation(cfg.spec, cfg.handlers, cfg.init, 1e4, seed=3).log
res = calibrate(log, spec=cfg.spec)
print("true      alpha=%.3f beta=%.3f eta=%.3f" % truth)
print("estimated alpha=%.3f beta=%.3f eta=%.3f" % (res.alpha, res.beta, res.eta_common))
print("per-family offsets:", res.eta_hats)
