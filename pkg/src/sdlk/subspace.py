"""Kernel subspace learners for domain adaptation: TCA, SSTCA and IGLDA.

All three minimize ``tr(W^T (K L K + mu I) W)`` subject to
``W^T K H_c A H_c K W = I_m``, where ``L`` collects the method's penalty
matrices and ``A`` is the constraint core (identity, or the label kernel for
SSTCA). The solution is the top-``m`` eigenvectors of
``(K L K + mu I)^-1 K H_c A H_c K``.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial.distance import pdist, squareform

from .errors import (
    DegenerateData,
    ShapeMismatch,
    RankDeficiency,
    UnlabeledSource,
    ZeroCount,
)
from .mmd import JointGram
from .types import UNLABELED

METHODS = ("tca", "sstca", "iglda")


def centering_matrix(n):
    if n < 1:
        raise ZeroCount("centering matrix needs N >= 1")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def mmd_matrix(gamma):
    gamma = np.asarray(gamma, dtype=float)
    return np.outer(gamma, gamma)


def graph_laplacian(X, k_neighbors=5, bandwidth=None):
    """Unnormalized Laplacian ``D - W`` of a symmetric k-nearest-neighbour graph.

    Edges join ``i`` and ``j`` when either is among the other's ``k`` nearest
    neighbours and carry weight ``exp(-||x_i - x_j||^2 / (2 bandwidth^2))``.
    ``bandwidth`` defaults to the median pairwise distance.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    if not 1 <= k_neighbors < n:
        raise ValueError(f"k_neighbors must satisfy 1 <= k < N={n}")
    dist = pdist(X.T)
    if not np.any(dist > 0):
        raise DegenerateData("all points are identical")
    if bandwidth is None:
        bandwidth = float(np.median(dist))
        if bandwidth == 0:
            bandwidth = float(np.median(dist[dist > 0]))
    D = squareform(dist)
    order = np.argsort(D + np.diag(np.full(n, np.inf)), axis=1, kind="stable")
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), k_neighbors), order[:, :k_neighbors].ravel()] = True
    adj = adj | adj.T
    W = np.where(adj, np.exp(-(D**2) / (2.0 * bandwidth**2)), 0.0)
    return np.diag(W.sum(axis=1)) - W


def label_kernel(labels, gamma_mix=0.5):
    """``gamma_mix * K_l + (1 - gamma_mix) * I`` with ``K_l`` the same-label indicator."""
    labels = np.asarray(labels)
    known = labels != UNLABELED
    K_l = (labels[:, None] == labels[None, :]) & known[:, None] & known[None, :]
    return gamma_mix * K_l.astype(float) + (1.0 - gamma_mix) * np.eye(labels.size)


def intra_class_matrix(labels, n_source):
    """Intra-class scatter matrix over the first ``n_source`` (labeled) samples.

    Entry ``(i, j)`` for source samples of the same class ``c`` is
    ``(delta_ij - 1/n_c) / n_source``; all target rows and columns are zero.
    """
    labels = np.asarray(labels)
    n = labels.size
    src = labels[:n_source]
    if np.any(src == UNLABELED):
        raise UnlabeledSource("every source sample needs a label")
    L = np.zeros((n, n))
    for c in np.unique(src):
        idx = np.flatnonzero(src == c)
        block = np.eye(idx.size) - 1.0 / idx.size
        L[np.ix_(idx, idx)] = block / n_source
    return L


@dataclass(frozen=True)
class SubspaceModel:
    W: np.ndarray
    K: np.ndarray
    m: int
    method: str
    eigenvalues: np.ndarray
    constraint: np.ndarray = field(repr=False, default=None)

    @property
    def constraint_residual(self):
        B = self.constraint
        return float(np.linalg.norm(self.W.T @ B @ self.W - np.eye(self.m)))

    def transform(self):
        """Representation of the training samples, ``W^T K`` (m x N)."""
        return project(self, self.K)

    def to_dict(self):
        return {
            "method": self.method,
            "m": self.m,
            "W": self.W.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "constraint_residual": self.constraint_residual,
        }


def _gram(K):
    K = K.K if isinstance(K, JointGram) else np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ShapeMismatch(f"Gram must be square, got {K.shape}")
    return K


def solve_generalized(A_reg, B, m, rel_floor=1e-10):
    """Top-``m`` eigenpairs of ``A_reg^-1 B`` with ``W^T B W = I``.

    ``A_reg`` must be symmetric positive definite and ``B`` symmetric PSD.
    With ``A_reg = R^T R`` the problem is reduced to the symmetric matrix
    ``R^-T B R^-1``. Eigenvalues below ``rel_floor * lambda_max`` are unusable.
    """
    n = A_reg.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"subspace dimension must satisfy 1 <= m <= {n}")
    R = scipy.linalg.cholesky((A_reg + A_reg.T) / 2, lower=False)
    Ri_B = scipy.linalg.solve_triangular(R, (B + B.T) / 2, trans="T")
    C = scipy.linalg.solve_triangular(R, Ri_B.T, trans="T")
    C = (C + C.T) / 2
    lam, U = np.linalg.eigh(C)
    lam, U = lam[::-1], U[:, ::-1]
    usable = int(np.sum(lam > rel_floor * max(lam[0], 0.0))) if lam[0] > 0 else 0
    if usable < m:
        raise RankDeficiency(f"only {usable} usable eigenpairs, {m} requested")
    lam, U = lam[:m], U[:, :m]
    W = scipy.linalg.solve_triangular(R, U) / np.sqrt(lam)
    # polish W^T B W = I against rounding
    S = W.T @ B @ W
    s, V = np.linalg.eigh((S + S.T) / 2)
    W = W @ (V / np.sqrt(s)) @ V.T
    return W, lam


def _fit(K, penalty, core, mu, m, method):
    n = K.shape[0]
    if not mu > 0:
        raise ValueError("mu must be positive")
    Hc = centering_matrix(n)
    KHc = K @ Hc
    B = KHc @ core @ KHc.T
    A_reg = K @ penalty @ K + mu * np.eye(n)
    W, lam = solve_generalized(A_reg, B, m)
    W.setflags(write=False)
    return SubspaceModel(W, K, m, method, lam, B)


def tca_fit(K, gamma, mu=10.0, m=2):
    K = _gram(K)
    gamma = np.asarray(gamma, dtype=float)
    if gamma.size != K.shape[0]:
        raise ShapeMismatch("gamma length does not match the Gram matrix")
    return _fit(K, mmd_matrix(gamma), np.eye(K.shape[0]), mu, m, "tca")


def sstca_fit(K, gamma, laplacian, K_yy, mu=10.0, lam=1.0, m=2):
    K = _gram(K)
    n = K.shape[0]
    if laplacian.shape != (n, n) or K_yy.shape != (n, n):
        raise ShapeMismatch("Laplacian and label kernel must be N x N")
    penalty = mmd_matrix(gamma) + (lam / n**2) * laplacian
    return _fit(K, penalty, K_yy, mu, m, "sstca")


def iglda_fit(K, gamma, L_ic, mu=10.0, lam=1.0, m=2):
    K = _gram(K)
    n = K.shape[0]
    if L_ic.shape != (n, n):
        raise ShapeMismatch("intra-class matrix must be N x N")
    return _fit(K, mmd_matrix(gamma) + lam * L_ic, np.eye(n), mu, m, "iglda")


def project(model, K_cols):
    """``W^T K_cols``: column ``i`` is the m-dimensional image of sample ``i``."""
    K_cols = np.asarray(K_cols, dtype=float)
    if K_cols.ndim == 1:
        K_cols = K_cols.reshape(-1, 1)
    if K_cols.shape[0] != model.W.shape[0]:
        raise ShapeMismatch(
            f"Gram columns have {K_cols.shape[0]} rows, model was fit on {model.W.shape[0]}"
        )
    return model.W.T @ K_cols
