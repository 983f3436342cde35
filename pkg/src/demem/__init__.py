"""Decision-centric budgeted memory for contextual bandits."""

__version__ = "0.1.0"

from .core import Partition, RewardTable, cluster_radius, decision_distance, gap  # noqa: E402
from .errors import (CapacityError, ConfigError, DomainError, GenerationError,  # noqa: E402
                     PropertyViolation, SlotStateError)

__all__ = ["__version__", "Partition", "RewardTable", "cluster_radius", "decision_distance", "gap",
           "CapacityError", "ConfigError", "DomainError", "GenerationError", "PropertyViolation",
           "SlotStateError"]
