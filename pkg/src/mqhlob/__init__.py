"""Meta-queue Hawkes limit order book simulator with a stylized-fact toolkit."""
from .core import (DomainError, EventRecord, EventType, LobState, MQHError, Side, SideState, StateCorruptionError,
                   TickPrice, check_constraints, mid_price, relative_tick_size)
from .sampling import (DeepVolumeDist, GeomWithSpikes, fit_geometric_mle, fit_truncated_geometric_mle,
                       sample_bounded, sample_deep_volume)
from .hawkes import (HawkesSpec, PowerLawKernel, check_stability, compensator, intensity, is_multiplier,
                     kernel_norm_matrix, rescaled_interarrivals, simulate)
from .eventlog import EventLog
from .dynamics import (HandlerConfig, InitConfig, SimulationResult, apply_event, initial_state, run_simulation,
                       snapshots_from_log)
from .io import (ConfigError, RunConfig, load_lobster, read_event_log, read_run_config, reference_config,
                 write_event_log, write_run_config)
from .analytics import average_shape, index_of_dispersion, metric_report, scaling_metrics, time_weighted_mean
from .calibration import calibrate

__all__ = [
    "DomainError",
    "EventRecord",
    "EventType",
    "LobState",
    "MQHError",
    "Side",
    "SideState",
    "StateCorruptionError",
    "TickPrice",
    "check_constraints",
    "mid_price",
    "relative_tick_size",
    "DeepVolumeDist",
    "GeomWithSpikes",
    "fit_geometric_mle",
    "fit_truncated_geometric_mle",
    "sample_bounded",
    "sample_deep_volume",
    "HawkesSpec",
    "PowerLawKernel",
    "check_stability",
    "compensator",
    "intensity",
    "is_multiplier",
    "kernel_norm_matrix",
    "rescaled_interarrivals",
    "simulate",
    "EventLog",
    "HandlerConfig",
    "InitConfig",
    "SimulationResult",
    "apply_event",
    "initial_state",
    "run_simulation",
    "snapshots_from_log",
    "ConfigError",
    "RunConfig",
    "load_lobster",
    "read_event_log",
    "read_run_config",
    "reference_config",
    "write_event_log",
    "write_run_config",
    "average_shape",
    "index_of_dispersion",
    "metric_report",
    "scaling_metrics",
    "time_weighted_mean",
    "calibrate",
]

__version__ = "0.1.0"
