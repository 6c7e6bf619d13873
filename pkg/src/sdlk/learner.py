"""Learning the quadratic part of the composite kernel by MMD minimization.

With ``v = Phi gamma`` (the anchor-feature mean gap between domains), the
learnable part of the squared MMD is ``eta * v^T M v``. The matrix ``M`` is
found by minimizing ``v^T M v + mu ||M||_F^2`` over SPD matrices.
"""
from dataclasses import dataclass

import numpy as np

from .errors import AnchorDimensionMismatch, ShapeMismatch
from .kernels import PDQK, KernelSpec, beta_features, pdqk_eval
from .mmd import gamma_vector
from .spd import egrad_to_rgrad, random_spd
from .trust_region import TrProblem, TrSettings, TrTrace, tr_minimize
from .types import AnchorSet, validate_domain_pair


def _check(M, v):
    M = np.asarray(M, dtype=float)
    v = np.asarray(v, dtype=float).ravel()
    if M.ndim != 2 or M.shape != (v.size, v.size):
        raise ShapeMismatch(f"M has shape {M.shape}, v has length {v.size}")
    return M, v


def objective(M, v, mu):
    """``v^T M v + mu * tr(M^T M)``."""
    M, v = _check(M, v)
    return float(v @ M @ v + mu * np.sum(M * M))


def euclidean_gradient(M, v, mu):
    """``v v^T + 2 mu M``."""
    M, v = _check(M, v)
    return np.outer(v, v) + 2.0 * mu * M


def riemannian_gradient(M, v, mu):
    return egrad_to_rgrad(M, euclidean_gradient(M, v, mu))


@dataclass(frozen=True)
class LearnerInputs:
    pair: object
    anchors: AnchorSet
    base: KernelSpec
    beta: KernelSpec
    eta: float = 1.0
    mu: float = 5e4
    tr_settings: TrSettings = TrSettings()
    seed: int = 0


@dataclass(frozen=True)
class LearnedKernel:
    pdqk: PDQK
    diagnostics: TrTrace
    mmd_before: float
    mmd_after: float
    M0: np.ndarray = None

    def kernel(self):
        return final_kernel_closure(self)

    def to_dict(self):
        doc = self.pdqk.to_dict()
        doc["diagnostics"] = self.diagnostics.summary()
        doc["mmd_before"] = self.mmd_before
        doc["mmd_after"] = self.mmd_after
        return doc

    @classmethod
    def from_dict(cls, doc):
        diag = TrTrace(exit_reason=doc.get("diagnostics", {}).get("exit_reason", ""))
        return cls(PDQK.from_dict(doc), diag, doc["mmd_before"], doc["mmd_after"])


def learn(inputs):
    """Fit ``M`` for the composite kernel on a domain pair.

    The start point is ``A A^T + 1e-3 I`` with ``A`` drawn from
    ``default_rng(inputs.seed)``. ``mmd_before`` and ``mmd_after`` are the
    learnable MMD parts ``eta * v^T M v`` at the start and end points.
    """
    pair = inputs.pair
    validate_domain_pair(pair)
    anchors = inputs.anchors
    if anchors.d != pair.d:
        raise AnchorDimensionMismatch(f"anchors have d={anchors.d}, data has d={pair.d}")
    if not inputs.eta > 0 or not inputs.mu > 0:
        raise ValueError("eta and mu must be positive")

    X = pair.stacked()
    v = beta_features(inputs.beta, anchors, X) @ gamma_vector(pair.n_source, pair.n_target)
    mu = float(inputs.mu)

    problem = TrProblem(
        objective=lambda M: objective(M, v, mu),
        euclidean_gradient=lambda M: euclidean_gradient(M, v, mu),
        H=anchors.H,
    )
    M0 = random_spd(anchors.H, np.random.default_rng(inputs.seed))
    M_star, trace = tr_minimize(problem, M0, inputs.tr_settings)

    pdqk = PDQK(inputs.base, inputs.beta, anchors, M_star, inputs.eta)
    return LearnedKernel(
        pdqk=pdqk,
        diagnostics=trace,
        mmd_before=float(inputs.eta * (v @ M0 @ v)),
        mmd_after=float(inputs.eta * (v @ M_star @ v)),
        M0=M0,
    )


def final_kernel_closure(learned):
    """Return ``k(x, y)`` for the learned composite kernel."""
    pdqk = learned.pdqk if isinstance(learned, LearnedKernel) else learned

    def k(x, y):
        return pdqk_eval(pdqk, x, y)

    return k
