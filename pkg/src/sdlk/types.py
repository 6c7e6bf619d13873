"""Datasets, domain pairs and anchor sets.

Feature matrices are stored one sample per column (``d x N``). Labels are
dense integer vectors where ``-1`` marks an unlabeled sample.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyDomain, NonFiniteEntry, ShapeMismatch

UNLABELED = -1


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DataMatrix:
    """Column-per-sample feature matrix with optional sample identifiers."""

    features: np.ndarray
    ids: tuple = None

    def __post_init__(self):
        X = _frozen(self.features)
        if X.ndim == 1:
            X = _frozen(X.reshape(-1, 1))
        if X.ndim != 2:
            raise ShapeMismatch(f"features must be 2-D (d x N), got ndim={X.ndim}")
        object.__setattr__(self, "features", X)
        ids = tuple(range(X.shape[1])) if self.ids is None else tuple(self.ids)
        if len(ids) != X.shape[1]:
            raise ShapeMismatch(f"{len(ids)} ids for {X.shape[1]} samples")
        object.__setattr__(self, "ids", ids)

    @property
    def d(self):
        return self.features.shape[0]

    @property
    def n(self):
        return self.features.shape[1]

    def validate(self, name="data"):
        if self.d < 1 or self.n < 1:
            raise EmptyDomain(f"{name} has shape {self.features.shape}")
        bad = ~np.isfinite(self.features)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise NonFiniteEntry(f"{name} has non-finite entry at feature {r}, sample {c}")

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        return DataMatrix(self.features[:, idx], tuple(self.ids[i] for i in idx))


@dataclass(frozen=True)
class LabeledDataset:
    data: DataMatrix
    labels: np.ndarray = None

    def __post_init__(self):
        if not isinstance(self.data, DataMatrix):
            object.__setattr__(self, "data", DataMatrix(self.data))
        if self.labels is None:
            labels = np.full(self.data.n, UNLABELED, dtype=int)
        else:
            labels = np.asarray(self.labels)
            if labels.size and not np.all(labels == np.round(labels)):
                raise ValueError("labels must be integers")
            labels = labels.astype(int).ravel()
        if labels.shape[0] != self.data.n:
            raise ShapeMismatch(f"{labels.shape[0]} labels for {self.data.n} samples")
        object.__setattr__(self, "labels", _frozen(labels, dtype=int))

    @property
    def X(self):
        return self.data.features

    @property
    def n(self):
        return self.data.n

    @property
    def labeled_mask(self):
        return self.labels != UNLABELED

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        return LabeledDataset(self.data.subset(idx), self.labels[idx])

    def without_labels(self):
        return LabeledDataset(self.data, None)


@dataclass(frozen=True)
class DomainPair:
    """A labeled source domain and a target domain whose labels are held out."""

    source: LabeledDataset
    target: LabeledDataset

    @property
    def n_source(self):
        return self.source.n

    @property
    def n_target(self):
        return self.target.n

    @property
    def d(self):
        return self.source.data.d

    def stacked(self):
        """Return ``[X^s X^t]`` as a single ``d x (N_s + N_t)`` array."""
        return np.hstack([self.source.X, self.target.X])

    def to_dict(self):
        def part(ds):
            return {
                "features": ds.X.tolist(),
                "ids": list(ds.data.ids),
                "labels": ds.labels.tolist(),
            }

        return {"source": part(self.source), "target": part(self.target)}

    @classmethod
    def from_dict(cls, doc):
        def part(p):
            feats = np.array(p["features"], dtype=float)
            return LabeledDataset(DataMatrix(feats, p.get("ids")), p.get("labels"))

        return cls(part(doc["source"]), part(doc["target"]))


def validate_domain_pair(pair):
    """Raise if ``pair`` violates any DomainPair invariant, else return None.

    Raises
    ------
    EmptyDomain
        Either domain has no features or no samples.
    DimensionMismatch
        Source and target feature dimensions differ.
    NonFiniteEntry
        A NaN or infinite value appears in either domain.
    """
    for name, ds in (("source", pair.source), ("target", pair.target)):
        if ds.data.d < 1 or ds.data.n < 1:
            raise EmptyDomain(f"{name} domain has shape {ds.X.shape}")
    if pair.source.data.d != pair.target.data.d:
        raise DimensionMismatch(
            f"source has d={pair.source.data.d}, target has d={pair.target.data.d}"
        )
    pair.source.data.validate("source")
    pair.target.data.validate("target")


@dataclass(frozen=True)
class AnchorSet:
    """Unlabeled samples ``x_1 .. x_H`` that parameterize the beta feature map."""

    anchors: np.ndarray
    origin: tuple = field(default=None, compare=False)

    def __post_init__(self):
        A = _frozen(self.anchors)
        if A.ndim == 1:
            A = _frozen(A.reshape(-1, 1))
        if A.ndim != 2 or A.shape[1] < 1:
            raise EmptyDomain(f"anchor set must be d x H with H >= 1, got {A.shape}")
        object.__setattr__(self, "anchors", A)

    @property
    def H(self):
        return self.anchors.shape[1]

    @property
    def d(self):
        return self.anchors.shape[0]


ANCHOR_POLICIES = ("source", "target", "union", "union-subsample")


def parse_anchor_policy(text):
    """Parse ``source | target | union | union-subsample:K`` into (name, K)."""
    name, _, arg = text.partition(":")
    name = name.strip()
    if name not in ANCHOR_POLICIES:
        raise ValueError(f"unknown anchor policy {text!r}")
    if name == "union-subsample":
        if not arg:
            raise ValueError("union-subsample needs a size, e.g. union-subsample:40")
        k = int(arg)
        if k < 1:
            raise ValueError("anchor subsample size must be >= 1")
        return name, k
    if arg:
        raise ValueError(f"anchor policy {name!r} takes no argument")
    return name, None


def build_anchors(pair, policy="union", rng=None):
    """Select the anchor set from a domain pair.

    ``policy`` is one of ``source``, ``target``, ``union`` or
    ``union-subsample:K``; the last draws ``K`` columns of ``[X^s X^t]``
    without replacement using ``rng``.
    """
    name, k = parse_anchor_policy(policy) if isinstance(policy, str) else policy
    if name == "source":
        return AnchorSet(pair.source.X, ("source",))
    if name == "target":
        return AnchorSet(pair.target.X, ("target",))
    X = pair.stacked()
    if name == "union":
        return AnchorSet(X, ("union",))
    if rng is None:
        rng = np.random.default_rng(0)
    if k > X.shape[1]:
        raise ValueError(f"cannot draw {k} anchors from {X.shape[1]} samples")
    idx = np.sort(rng.choice(X.shape[1], size=k, replace=False))
    return AnchorSet(X[:, idx], ("union-subsample", tuple(int(i) for i in idx)))
