"""Closed-form kernels, the anchor feature map and the learnable quadratic kernel.

Four base kernels are supported, each with a canonical text form::

    poly:a=0.01,b=0,d=1     (a <x, y> + b) ** d
    rbf:sigma=3             exp(-||x - y||^2 / sigma)
    cauchy:sigma=1000       1 / (1 + ||x - y||^2 / sigma)
    exp:sigma=1             exp(-||x - y|| / sigma)

The composite kernel is ``k(x, y) = k_b(x, y) + eta * b(x)^T M b(y)`` where
``b(x) = [beta(x, x_1), ..., beta(x, x_H)]`` over a fixed anchor set and ``M``
is symmetric positive semi-definite.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, ShapeMismatch
from .types import AnchorSet

KINDS = ("poly", "rbf", "cauchy", "exp")
_ALIASES = {"polynomial": "poly", "exponential": "exp", "gaussian": "rbf"}


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    a: float = 1.0
    b: float = 0.0
    degree: int = 1
    sigma: float = 1.0

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "poly":
            if not self.a > 0:
                raise ValueError("polynomial kernel needs a > 0")
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError("polynomial degree must be an integer >= 1")
            object.__setattr__(self, "degree", int(self.degree))
        elif not self.sigma > 0:
            raise ValueError(f"{kind} kernel needs sigma > 0")

    @classmethod
    def poly(cls, a=1.0, b=0.0, d=1):
        return cls("poly", a=float(a), b=float(b), degree=int(d))

    @classmethod
    def rbf(cls, sigma):
        return cls("rbf", sigma=float(sigma))

    @classmethod
    def cauchy(cls, sigma):
        return cls("cauchy", sigma=float(sigma))

    @classmethod
    def exponential(cls, sigma):
        return cls("exp", sigma=float(sigma))

    @classmethod
    def parse(cls, text):
        """Build a kernel from its canonical text form, e.g. ``rbf:sigma=3``."""
        kind, _, rest = text.strip().partition(":")
        kind = _ALIASES.get(kind.strip(), kind.strip())
        params = {}
        for item in filter(None, (p.strip() for p in rest.split(","))):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"malformed kernel parameter {item!r} in {text!r}")
            params[key.strip()] = val.strip()
        allowed = {"poly": {"a", "b", "d"}}.get(kind, {"sigma"})
        unknown = set(params) - allowed
        if unknown:
            raise ValueError(f"unknown parameters {sorted(unknown)} for kernel {kind!r}")
        if kind == "poly":
            return cls.poly(
                float(params.get("a", 1.0)),
                float(params.get("b", 0.0)),
                int(float(params.get("d", 1))),
            )
        if "sigma" not in params:
            raise ValueError(f"kernel {kind!r} requires sigma")
        return cls(kind, sigma=float(params["sigma"]))

    def __str__(self):
        if self.kind == "poly":
            return f"poly:a={_num(self.a)},b={_num(self.b)},d={self.degree}"
        return f"{self.kind}:sigma={_num(self.sigma)}"


def _num(x):
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def _as_vector(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        x = x.ravel()
    return x


def eval_kernel(spec, x, y):
    """Evaluate a base kernel on two vectors."""
    x, y = _as_vector(x), _as_vector(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"vectors of length {x.size} and {y.size}")
    if spec.kind == "poly":
        return float((spec.a * np.dot(x, y) + spec.b) ** spec.degree)
    diff = x - y
    sq = float(np.dot(diff, diff))
    if spec.kind == "rbf":
        return float(np.exp(-sq / spec.sigma))
    if spec.kind == "cauchy":
        return 1.0 / (1.0 + sq / spec.sigma)
    return float(np.exp(-np.sqrt(sq) / spec.sigma))


def _as_columns(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ShapeMismatch(f"expected a d x n matrix, got ndim={X.ndim}")
    return X


def _apply(spec, X, Y):
    if spec.kind == "poly":
        return (spec.a * (X.T @ Y) + spec.b) ** spec.degree
    sq = cdist(X.T, Y.T, "sqeuclidean")
    if spec.kind == "rbf":
        return np.exp(-sq / spec.sigma)
    if spec.kind == "cauchy":
        return 1.0 / (1.0 + sq / spec.sigma)
    return np.exp(-np.sqrt(sq) / spec.sigma)


def _mirror_upper(K):
    upper = np.triu(K)
    return upper + np.triu(K, 1).T


def gram(spec, X, Y=None):
    """Kernel matrix between the columns of ``X`` (d x n) and ``Y`` (d x m).

    When ``Y`` is omitted or is the same array as ``X`` the result is made
    exactly symmetric by mirroring the upper triangle.
    """
    X = _as_columns(X)
    same = Y is None or Y is X
    Y = X if same else _as_columns(Y)
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"feature dimensions {X.shape[0]} and {Y.shape[0]}")
    K = _apply(spec, X, Y)
    if same or (X.shape == Y.shape and np.array_equal(X, Y)):
        K = _mirror_upper(K)
    return K


def beta_features(beta, anchors, Z):
    """Anchor feature matrix with entry ``(h, j) = beta(Z[:, j], x_h)``, shape H x n."""
    A = anchors.anchors if isinstance(anchors, AnchorSet) else _as_columns(anchors)
    Z = _as_columns(Z)
    if A.shape[0] != Z.shape[0]:
        raise DimensionMismatch(f"anchors have d={A.shape[0]}, samples have d={Z.shape[0]}")
    return _apply(beta, A, Z)


def psd_check(K, rel_tol=1e-8):
    """True iff ``K`` is symmetric and its smallest eigenvalue is >= -rel_tol * trace."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        return False
    if not np.all(np.isfinite(K)):
        return False
    scale = np.linalg.norm(K)
    if np.max(np.abs(K - K.T), initial=0.0) > rel_tol * scale:
        return False
    if K.size == 0:
        return True
    lam_min = np.linalg.eigvalsh((K + K.T) / 2)[0]
    return bool(lam_min >= -rel_tol * abs(np.trace(K)))


def add_jitter(K, eps=None):
    """Return ``K + eps I``; ``eps`` defaults to ``1e-10 * trace(K) / n``."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if eps is None:
        eps = 1e-10 * np.trace(K) / n
    return K + eps * np.eye(n)


@dataclass(frozen=True)
class PDQK:
    """Composite kernel ``k_b(x, y) + eta * b(x)^T M b(y)``."""

    base: KernelSpec
    beta: KernelSpec
    anchors: AnchorSet
    M: np.ndarray
    eta: float = 1.0

    def __post_init__(self):
        if not isinstance(self.anchors, AnchorSet):
            object.__setattr__(self, "anchors", AnchorSet(self.anchors))
        M = np.array(self.M, dtype=float, copy=True)
        H = self.anchors.H
        if M.shape != (H, H):
            raise ShapeMismatch(f"M has shape {M.shape}, anchor set has H={H}")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if np.max(np.abs(M - M.T), initial=0.0) > 1e-10 * (1.0 + np.linalg.norm(M)):
            raise ValueError("M is not symmetric")
        if np.linalg.eigvalsh((M + M.T) / 2)[0] < -1e-8 * abs(np.trace(M)):
            raise ValueError("M is not positive semi-definite")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    @property
    def H(self):
        return self.anchors.H

    def features(self, Z):
        return beta_features(self.beta, self.anchors, Z)

    def with_M(self, M):
        return PDQK(self.base, self.beta, self.anchors, M, self.eta)

    def to_dict(self):
        return {
            "base": str(self.base),
            "beta": str(self.beta),
            "eta": self.eta,
            "anchors": self.anchors.anchors.tolist(),
            "M": self.M.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            KernelSpec.parse(doc["base"]),
            KernelSpec.parse(doc["beta"]),
            AnchorSet(np.array(doc["anchors"], dtype=float)),
            np.array(doc["M"], dtype=float),
            float(doc["eta"]),
        )


def pdqk_eval(k, x, y):
    x, y = _as_vector(x), _as_vector(y)
    if x.shape != y.shape or x.size != k.anchors.d:
        raise DimensionMismatch(
            f"vectors of length {x.size}, {y.size}; anchors have d={k.anchors.d}"
        )
    bx = k.features(x)[:, 0]
    by = k.features(y)[:, 0]
    # averaging both orders makes k(x, y) == k(y, x) bit for bit
    quad = 0.5 * (float(bx @ k.M @ by) + float(by @ k.M @ bx))
    return eval_kernel(k.base, x, y) + k.eta * quad


def pdqk_gram(k, X, Y=None):
    """Composite Gram matrix ``K_b + eta * Phi_X^T M Phi_Y``."""
    X = _as_columns(X)
    same = Y is None or Y is X
    Y = X if same else _as_columns(Y)
    if X.shape[0] != Y.shape[0] or X.shape[0] != k.anchors.d:
        raise DimensionMismatch(
            f"feature dimensions {X.shape[0]}, {Y.shape[0]}; anchors have d={k.anchors.d}"
        )
    Kb = gram(k.base, X, X if same else Y)
    Px = k.features(X)
    Py = Px if same else k.features(Y)
    K = Kb + k.eta * (Px.T @ k.M @ Py)
    if same:
        K = _mirror_upper(K)
    return K


def kernel_gram(kernel, X, Y=None):
    """Gram matrix for either a :class:`KernelSpec` or a :class:`PDQK`."""
    if isinstance(kernel, PDQK):
        return pdqk_gram(kernel, X, Y)
    return gram(kernel, X, Y)
