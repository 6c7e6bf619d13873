"""Experiment configuration."""
from dataclasses import asdict, dataclass, field, replace

from .kernels import KernelSpec
from .subspace import METHODS
from .types import parse_anchor_policy


def parse_split_policy(text):
    """Parse ``fraction:F``, ``per-class:K`` or ``all`` into (name, value)."""
    name, _, arg = text.strip().partition(":")
    if name == "all" and not arg:
        return name, None
    if name == "fraction":
        f = float(arg)
        if not 0 < f <= 1:
            raise ValueError("split fraction must lie in (0, 1]")
        return name, f
    if name == "per-class":
        k = int(arg)
        if k < 1:
            raise ValueError("per-class count must be >= 1")
        return name, k
    raise ValueError(f"unknown split policy {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    base: KernelSpec = field(default_factory=lambda: KernelSpec.poly(0.01, 0.0, 1))
    beta: KernelSpec = field(default_factory=lambda: KernelSpec.rbf(3.0))
    eta: float = 1.0
    mu_kernel: float = 5e4
    mu_sub: float = 10.0
    lambda_sub: float = 1.0
    gamma: float = 0.5
    dim: int = 10
    tol: float = 1e-2
    trials: int = 10
    seed: int = 0
    knn_k: int = 1
    method: str = "tca"
    anchors: str = "union"
    split: str = "fraction:0.5"
    kernel_learning: bool = True
    graph_neighbors: int = 5
    max_outer: int = 200

    def __post_init__(self):
        for name in ("base", "beta"):
            val = getattr(self, name)
            if isinstance(val, str):
                object.__setattr__(self, name, KernelSpec.parse(val))
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.mu_kernel > 0:
            raise ValueError("mu_kernel must be positive")
        if not self.mu_sub > 0:
            raise ValueError("mu_sub must be positive")
        if self.lambda_sub < 0:
            raise ValueError("lambda_sub must be non-negative")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.dim < 1 or self.trials < 1 or self.knn_k < 1 or self.max_outer < 1:
            raise ValueError("dim, trials, knn_k and max_outer must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        parse_anchor_policy(self.anchors)
        parse_split_policy(self.split)

    def to_dict(self):
        doc = asdict(self)
        doc["base"] = str(self.base)
        doc["beta"] = str(self.beta)
        return doc

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)

    def replace(self, **changes):
        return replace(self, **changes)
