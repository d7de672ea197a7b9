"""Sample-path bounds for fractional Brownian motion traffic.

Envelopes, backlog and delay bounds for a single queue, end-to-end delay
bounds for tandems of rate servers with fBm or on-off cross traffic, and a
Monte-Carlo simulator to check them. ``fbmnc`` on the command line drives the
scenario files in ``configs/``.
"""

from importlib.metadata import PackageNotFoundError, version

from .bounds import asymptotic_epsilon, fbm_backlog_quantile, fbm_backlog_violation, fbm_delay_violation
from .errors import (
    ComposabilityError,
    ConfigError,
    DomainError,
    FbmncError,
    InfeasibleError,
    InstabilityError,
    OptimizationError,
    ResourceGuardError,
)
from .netcalc import TandemScenario, e2e_delay_bound, e2e_delay_violation
from .traffic import CbrTraffic, EbbOnOffAggregate, FbmTraffic, ebb_from_mean_and_burstiness

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.0.0"

__all__ = [
    "CbrTraffic",
    "ComposabilityError",
    "ConfigError",
    "DomainError",
    "EbbOnOffAggregate",
    "FbmTraffic",
    "FbmncError",
    "InfeasibleError",
    "InstabilityError",
    "OptimizationError",
    "ResourceGuardError",
    "TandemScenario",
    "asymptotic_epsilon",
    "e2e_delay_bound",
    "e2e_delay_violation",
    "ebb_from_mean_and_burstiness",
    "fbm_backlog_quantile",
    "fbm_backlog_violation",
    "fbm_delay_violation",
]
