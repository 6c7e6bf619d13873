"""End-to-end experiment runner.

Each trial splits the source domain, picks anchors, optionally learns the
composite kernel, fits a subspace learner on the joint Gram of the training
source samples and all target samples, and classifies the target samples
with k-nearest neighbours in the learned subspace. Target labels are only
used to score predictions.
"""
import csv
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .config import ExperimentConfig, parse_split_policy
from .errors import (
    EmptyTrainingSet,
    InconsistentWidth,
    ParseError,
    SdlkError,
    StageError,
)
from .kernels import gram, pdqk_gram
from .learner import LearnerInputs, learn
from .mmd import gamma_vector
from .subspace import (
    graph_laplacian,
    iglda_fit,
    intra_class_matrix,
    label_kernel,
    project,
    sstca_fit,
    tca_fit,
)
from .trust_region import TrSettings
from .types import (
    UNLABELED,
    DataMatrix,
    DomainPair,
    LabeledDataset,
    build_anchors,
    validate_domain_pair,
)

STAGES = ("split", "anchors", "kernel_learning", "gram", "subspace", "classify")


# -- classification ---------------------------------------------------------


def knn_predict(train, train_labels, test, k=1):
    """Label each test column by majority vote of its ``k`` nearest training columns.

    Ties between labels with equal votes go to the label whose voting
    neighbours are closer on average, then to the smaller label.
    """
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    train_labels = np.asarray(train_labels)
    if train.ndim != 2 or train.shape[1] == 0:
        raise EmptyTrainingSet("kNN needs at least one training sample")
    if train_labels.size != train.shape[1]:
        raise ValueError("one label per training column is required")
    if test.ndim == 1:
        test = test.reshape(-1, 1)
    if not 1 <= k <= train.shape[1]:
        raise ValueError(f"k must satisfy 1 <= k <= {train.shape[1]}")
    D = cdist(test.T, train.T)
    order = np.argsort(D, axis=1, kind="stable")[:, :k]
    pred = np.empty(test.shape[1], dtype=train_labels.dtype)
    for j in range(test.shape[1]):
        nbrs = order[j]
        labs = train_labels[nbrs]
        dists = D[j, nbrs]
        best = None
        for lab in np.unique(labs):
            mask = labs == lab
            key = (-int(mask.sum()), float(dists[mask].mean()), lab)
            if best is None or key < best:
                best = key
        pred[j] = best[2]
    return pred


# -- data ingestion ---------------------------------------------------------


def load_csv(path, has_labels=True):
    """Read a dataset with one sample per row.

    The header names the feature columns, optionally followed by a final
    ``label`` column of integers. When ``has_labels`` is false any label
    column is ignored and every sample is marked unlabeled.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file, a header row is required", row=1)
    header = [h.strip() for h in rows[0]]
    labeled = bool(header) and header[-1].lower() == "label"
    if has_labels and not labeled:
        raise ParseError(f"{path}: expected a final 'label' column", row=1)
    n_feat = len(header) - (1 if labeled else 0)
    if n_feat < 1:
        raise ParseError(f"{path}: no feature columns", row=1)
    feats, labels = [], []
    for r, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InconsistentWidth(
                f"{path}: expected {len(header)} fields, found {len(row)}", row=r
            )
        vals = []
        for c in range(n_feat):
            try:
                vals.append(float(row[c]))
            except ValueError:
                raise ParseError(f"{path}: bad number {row[c]!r}", row=r, column=c + 1)
        feats.append(vals)
        if labeled:
            try:
                labels.append(int(row[-1]))
            except ValueError:
                raise ParseError(
                    f"{path}: bad label {row[-1]!r}", row=r, column=len(header)
                )
    if not feats:
        raise ParseError(f"{path}: no data rows", row=2)
    X = np.array(feats, dtype=float).T
    y = np.array(labels, dtype=int) if labeled and has_labels else None
    return LabeledDataset(DataMatrix(X), y)


def save_csv(path, dataset, with_labels=True):
    X = dataset.X
    header = [f"f{i}" for i in range(X.shape[0])]
    if with_labels:
        header.append("label")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for j in range(X.shape[1]):
            row = [repr(float(v)) for v in X[:, j]]
            if with_labels:
                row.append(str(int(dataset.labels[j])))
            w.writerow(row)


# -- synthetic data ---------------------------------------------------------


def generate_synthetic(kind="shifted-gaussians", n_per_class=100, shift=2.0, seed=0,
                       d=5, separation=5.0):
    """Two-class source domain plus a transformed target domain.

    ``shifted-gaussians``: unit-covariance classes at ``+-separation/2`` along
    the first axis; the target is a fresh draw moved by ``shift`` along the
    second axis. ``rotated-moons``: two interleaved half circles in the first
    two coordinates with small Gaussian noise elsewhere; the target is rotated
    by ``shift`` radians.
    """
    if n_per_class < 2:
        raise ValueError("n_per_class must be >= 2")
    if d < 2:
        raise ValueError("synthetic data needs d >= 2")
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], n_per_class)

    if kind == "shifted-gaussians":
        def draw():
            X = rng.standard_normal((d, 2 * n_per_class))
            X[0] += np.where(labels == 0, -separation / 2, separation / 2)
            return X

        Xs = draw()
        Xt = draw()
        Xt[1] += shift
    elif kind == "rotated-moons":
        def draw():
            t = rng.uniform(0, np.pi, 2 * n_per_class)
            X = 0.1 * rng.standard_normal((d, 2 * n_per_class))
            X[0] += np.where(labels == 0, np.cos(t), 1 - np.cos(t))
            X[1] += np.where(labels == 0, np.sin(t), 0.5 - np.sin(t))
            return X

        Xs = draw()
        Xt = draw()
        c, s = np.cos(shift), np.sin(shift)
        Xt[:2] = np.array([[c, -s], [s, c]]) @ Xt[:2]
    else:
        raise ValueError(f"unknown synthetic kind {kind!r}")
    return DomainPair(
        LabeledDataset(DataMatrix(Xs), labels),
        LabeledDataset(DataMatrix(Xt), labels.copy()),
    )


# -- experiment -------------------------------------------------------------


@dataclass(frozen=True)
class TrialResult:
    accuracy: float
    mmd_base: float
    mmd_learned_part: float
    solver_iterations: int
    seed: int

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "mmd_base": self.mmd_base,
            "mmd_learned_part": self.mmd_learned_part,
            "solver_iterations": self.solver_iterations,
            "seed": self.seed,
        }


@dataclass
class TrialOutcome:
    """Everything one trial produced; ``result`` is what gets reported."""

    result: TrialResult
    train_index: np.ndarray
    K: np.ndarray
    model: object
    Y: np.ndarray
    predictions: np.ndarray
    learned: object = None
    timings: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    trials: list
    timings: dict

    @property
    def accuracies(self):
        return np.array([t.accuracy for t in self.trials], dtype=float)

    @property
    def mean_accuracy(self):
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self):
        return float(np.std(self.accuracies))

    def to_dict(self):
        doc = {
            "config": self.config.to_dict(),
            "trials": [t.to_dict() for t in self.trials],
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "timings": dict(self.timings),
        }
        check_report(doc)
        return doc

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def check_report(doc):
    """Verify that mean/std in a report document match its trial list."""
    acc = [t["accuracy"] for t in doc["trials"]]
    mean = math.fsum(acc) / len(acc)
    std = math.sqrt(math.fsum((a - mean) ** 2 for a in acc) / len(acc))
    if abs(doc["mean_accuracy"] - mean) > 1e-12 or abs(doc["std_accuracy"] - std) > 1e-12:
        raise SdlkError("report mean/std do not match the trial accuracies")
    if any(not 0.0 <= a <= 1.0 for a in acc):
        raise SdlkError("trial accuracy outside [0, 1]")


def split_source(labels, policy, rng):
    """Indices of the source samples used for training in one trial."""
    name, value = parse_split_policy(policy) if isinstance(policy, str) else policy
    n = labels.size
    if name == "all":
        return np.arange(n)
    if name == "fraction":
        k = max(1, int(round(value * n)))
        return np.sort(rng.choice(n, size=k, replace=False))
    picked = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        take = min(value, idx.size)
        picked.append(rng.choice(idx, size=take, replace=False))
    return np.sort(np.concatenate(picked))


def _fit_subspace(config, K, train_pair):
    n_s = train_pair.n_source
    g = gamma_vector(n_s, train_pair.n_target)
    labels = np.concatenate([train_pair.source.labels, train_pair.target.labels])
    if config.method == "tca":
        return tca_fit(K, g, config.mu_sub, config.dim)
    if config.method == "sstca":
        X = train_pair.stacked()
        Lap = graph_laplacian(X, min(config.graph_neighbors, X.shape[1] - 1))
        K_yy = label_kernel(labels, config.gamma)
        return sstca_fit(K, g, Lap, K_yy, config.mu_sub, config.lambda_sub, config.dim)
    L_ic = intra_class_matrix(labels, n_s)
    return iglda_fit(K, g, L_ic, config.mu_sub, config.lambda_sub, config.dim)


class _Stage:
    def __init__(self, name, trial, timings):
        self.name, self.trial, self.timings = name, trial, timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = self.timings.get(self.name, 0.0) + (
            time.perf_counter() - self.t0
        )
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, self.trial, exc) from exc
        return False


def run_trial(config, pair, trial_index=0):
    """Run one seeded trial of the protocol; see :func:`run_experiment`."""
    seed = int(config.seed) + int(trial_index)
    rng = np.random.default_rng(seed)
    timings = {}

    with _Stage("split", trial_index, timings):
        train_idx = split_source(pair.source.labels, config.split, rng)
        train_source = pair.source.subset(train_idx)
        # target labels never reach a training stage
        train_pair = DomainPair(train_source, pair.target.without_labels())
        validate_domain_pair(train_pair)

    with _Stage("anchors", trial_index, timings):
        anchors = build_anchors(train_pair, config.anchors, rng)

    learned = None
    with _Stage("kernel_learning", trial_index, timings):
        if config.kernel_learning:
            settings = TrSettings(tol=config.tol, max_outer=config.max_outer)
            learned = learn(
                LearnerInputs(
                    train_pair, anchors, config.base, config.beta,
                    config.eta, config.mu_kernel, settings, seed,
                )
            )

    with _Stage("gram", trial_index, timings):
        X = train_pair.stacked()
        K_base = gram(config.base, X)
        K = K_base if learned is None else pdqk_gram(learned.pdqk, X)
        g = gamma_vector(train_pair.n_source, train_pair.n_target)
        mmd_base = float(g @ K_base @ g)

    with _Stage("subspace", trial_index, timings):
        model = _fit_subspace(config, K, train_pair)
        Y = project(model, K)

    with _Stage("classify", trial_index, timings):
        n_s = train_pair.n_source
        k = min(config.knn_k, n_s)
        pred = knn_predict(Y[:, :n_s], train_source.labels, Y[:, n_s:], k)
        truth = pair.target.labels
        scored = truth != UNLABELED
        if not scored.any():
            raise SdlkError("target labels are required for scoring")
        accuracy = float(np.mean(pred[scored] == truth[scored]))

    result = TrialResult(
        accuracy=accuracy,
        mmd_base=mmd_base,
        mmd_learned_part=0.0 if learned is None else float(learned.mmd_after),
        solver_iterations=0 if learned is None else learned.diagnostics.iterations,
        seed=seed,
    )
    return TrialOutcome(result, train_idx, K, model, Y, pred, learned, timings)


def run_experiment(config, pair, keep_outcomes=False, on_trial=None):
    """Run ``config.trials`` independent trials and aggregate them.

    Trial ``i`` is seeded with ``config.seed + i``. Errors are re-raised as
    :class:`StageError` naming the stage and trial that failed.
    """
    validate_domain_pair(pair)
    t0 = time.perf_counter()
    timings = {s: 0.0 for s in STAGES}
    results, outcomes = [], []
    for i in range(config.trials):
        out = run_trial(config, pair, i)
        for s, dt in out.timings.items():
            timings[s] += dt
        results.append(out.result)
        if keep_outcomes:
            outcomes.append(out)
        if on_trial is not None:
            on_trial(i, out)
    timings["total"] = time.perf_counter() - t0
    report = ExperimentReport(config, results, timings)
    report.to_dict()
    if keep_outcomes:
        return report, outcomes
    return report
