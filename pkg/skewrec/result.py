"""Skewrec Result Module

This module defines various objects for recording the results of training,
evaluation and command runs.
"""
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional


class Command(Enum):
    """Command Enumeration.

    Describes which subcommand produced an output directory.
    """
    FETCH     = "fetch"
    PREP      = "prep"
    TRAIN     = "train"
    EVAL      = "eval"
    SWEEP     = "sweep"
    ANALYZE   = "analyze"
    LEMMA     = "lemma"
    SMOOTHING = "smoothing"

    def __str__(self):
        """Convert Object To String.

        Keyword Arguments:
        self                   -- This object.

        Return Value:
        Nicely formatted string to get information about this object.
        """
        return self.value


@dataclass(frozen=True)
class EpochResult:
    """Summary of one training epoch.

    `loglik` is the mean log-likelihood of the epoch's sampled triples,
    measured before each triple's update; `penalty` is lambda times the
    squared parameter norm at the end of the epoch.
    """
    epoch: int
    epochs: int
    loglik: float
    penalty: float
    elapsed: float

    @property
    def objective(self) -> float:
        return self.loglik - self.penalty

    def __str__(self):
        return (f"epoch {self.epoch}/{self.epochs}: log-likelihood {self.loglik:.6f}, "
                f"penalty {self.penalty:.4f} ({self.elapsed:.2f}s)")


@dataclass
class EvalReport:
    n: int
    recall: float
    map: float
    auc_macro: float
    auc_micro: float
    users_evaluated: int
    auc_pairs: int = 0
    auc_exact: bool = True
    config: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None

    def metrics(self) -> Dict[str, float]:
        return {
            f"recall@{self.n}": self.recall,
            f"map@{self.n}": self.map,
            "auc_macro": self.auc_macro,
            "auc_micro": self.auc_micro,
        }

    def to_text(self) -> str:
        """Line-based `metric<TAB>value` rendering with config echo."""
        lines = [f"{name}\t{value:.6f}" for name, value in self.metrics().items()]
        lines.append(f"users_evaluated\t{self.users_evaluated}")
        lines.append(f"auc_pairs\t{self.auc_pairs}")
        lines.append(f"auc_mode\t{'exact' if self.auc_exact else 'sampled'}")
        lines.append(f"seed\t{self.seed}")
        for key, value in self.config.items():
            lines.append(f"config.{key}\t{value}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def __str__(self):
        return "  ".join(f"{name} {value:.4f}" for name, value in self.metrics().items())


@dataclass
class RunManifest:
    """Everything needed to re-run a command.

    `config_file` holds the raw values read from `--config`, `overrides` the
    values given as flags and `config` the effective settings.
    """
    command: Command
    seed: Optional[int]
    inputs: Dict[str, Any]
    outputs: List[str]
    config: Dict[str, Any] = field(default_factory=dict)
    config_file: Dict[str, Any] = field(default_factory=dict)
    overrides: Dict[str, Any] = field(default_factory=dict)
    argv: List[str] = field(default_factory=list)
    version: str = ""
    duration_s: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["command"] = str(self.command)
        return payload
