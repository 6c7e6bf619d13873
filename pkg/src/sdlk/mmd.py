"""Joint Gram assembly and maximum mean discrepancy.

The signed weight vector ``gamma = [1/N_s, ..., 1/N_s, -1/N_t, ..., -1/N_t]``
turns the squared distance between empirical kernel means into the quadratic
form ``gamma^T K gamma`` over the joint Gram of ``[X^s X^t]``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroCount
from .kernels import PDQK, beta_features, gram, kernel_gram


@dataclass(frozen=True)
class JointGram:
    K: np.ndarray
    n_source: int

    @property
    def n(self):
        return self.K.shape[0]

    @property
    def n_target(self):
        return self.n - self.n_source

    @property
    def K_s(self):
        return self.K[: self.n_source, : self.n_source]

    @property
    def K_t(self):
        return self.K[self.n_source :, self.n_source :]

    @property
    def K_st(self):
        return self.K[: self.n_source, self.n_source :]


def gamma_vector(n_source, n_target):
    if n_source < 1 or n_target < 1:
        raise ZeroCount(f"need N_s, N_t >= 1, got {n_source}, {n_target}")
    return np.concatenate(
        [np.full(n_source, 1.0 / n_source), np.full(n_target, -1.0 / n_target)]
    )


def joint_gram(kernel, pair):
    """Block Gram ``[[K_s, K_st], [K_st^T, K_t]]`` over source then target columns."""
    if pair.source.data.d != pair.target.data.d:
        raise DimensionMismatch(
            f"source has d={pair.source.data.d}, target has d={pair.target.data.d}"
        )
    X = pair.stacked()
    K = kernel_gram(kernel, X)
    K.setflags(write=False)
    return JointGram(K, pair.n_source)


def mmd_value(K, gamma):
    """Biased squared MMD ``gamma^T K gamma``."""
    K = K.K if isinstance(K, JointGram) else np.asarray(K, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if K.shape != (gamma.size, gamma.size):
        raise DimensionMismatch(f"Gram {K.shape} vs gamma of length {gamma.size}")
    return float(gamma @ K @ gamma)


def mmd_decomposed(pdqk, pair):
    """Split the MMD under ``pdqk`` into its base-kernel and learnable parts.

    Returns ``(gamma^T K_b gamma, eta * (Phi gamma)^T M (Phi gamma))``.
    """
    if not isinstance(pdqk, PDQK):
        raise TypeError("mmd_decomposed needs a PDQK")
    if pair.source.data.d != pair.target.data.d:
        raise DimensionMismatch("source and target dimensions differ")
    X = pair.stacked()
    g = gamma_vector(pair.n_source, pair.n_target)
    base_part = float(g @ gram(pdqk.base, X) @ g)
    v = pdqk.features(X) @ g
    return base_part, float(pdqk.eta * (v @ pdqk.M @ v))


def mean_feature_gap(beta, anchors, pair):
    """The length-H vector ``Phi gamma``; independent of ``M``."""
    X = pair.stacked()
    return beta_features(beta, anchors, X) @ gamma_vector(pair.n_source, pair.n_target)
