import numpy as np
import pytest

from sdlk.config import ExperimentConfig, parse_split_policy
from sdlk.errors import EmptyTrainingSet, InconsistentWidth, ParseError, StageError
from sdlk.kernels import KernelSpec, gram
from sdlk.mmd import gamma_vector, joint_gram, mmd_value
from sdlk.pipeline import (
    check_report,
    generate_synthetic,
    knn_predict,
    load_csv,
    run_experiment,
    run_trial,
    save_csv,
    split_source,
)
from sdlk.subspace import centering_matrix, project, tca_fit
from sdlk.types import DataMatrix, DomainPair, LabeledDataset


def test_knn_exact_match():
    train = np.array([[0.0, 5.0, 9.0]])
    assert knn_predict(train, np.array([3, 4, 5]), np.array([[5.0]]), k=1)[0] == 4


def test_knn_two_vs_one_vote():
    train = np.array([[0.0, 0.5, 1.2, 10.0]])
    labels = np.array([1, 0, 0, 1])
    # nearest three to 0.1 are 0.0 (label 1), 0.5 and 1.2 (label 0)
    assert knn_predict(train, labels, np.array([[0.1]]), k=3)[0] == 0


def test_knn_tie_breaks():
    train = np.array([[-1.0, 2.0]])
    assert knn_predict(train, np.array([7, 3]), np.array([[0.0]]), k=2)[0] == 7
    assert knn_predict(train, np.array([7, 3]), np.array([[0.5]]), k=2)[0] == 3


def test_knn_separated_clusters(rng):
    train = np.hstack([rng.standard_normal((2, 20)), rng.standard_normal((2, 20)) + 20])
    labels = np.repeat([0, 1], 20)
    test = np.hstack([rng.standard_normal((2, 10)), rng.standard_normal((2, 10)) + 20])
    np.testing.assert_array_equal(knn_predict(train, labels, test), np.repeat([0, 1], 10))


def test_knn_empty_training():
    with pytest.raises(EmptyTrainingSet):
        knn_predict(np.zeros((2, 0)), np.array([]), np.zeros((2, 1)))


def test_load_csv_labeled(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("x,y,label\n1,2,0\n3,4,1\n5,6,0\n")
    ds = load_csv(p)
    np.testing.assert_array_equal(ds.X, [[1, 3, 5], [2, 4, 6]])
    np.testing.assert_array_equal(ds.labels, [0, 1, 0])


def test_load_csv_unlabeled(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("x,y\n1,2\n3,4\n")
    assert np.all(load_csv(p, has_labels=False).labels == -1)
    with pytest.raises(ParseError):
        load_csv(p, has_labels=True)


def test_load_csv_errors(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("x,y,label\n1,2,0\n3,1\n")
    with pytest.raises(InconsistentWidth, match="row 3"):
        load_csv(p)
    p.write_text("x,y,label\n1,abc,0\n")
    with pytest.raises(ParseError, match="row 2.*column 2"):
        load_csv(p)


def test_csv_round_trip(tmp_path, rng):
    ds = LabeledDataset(DataMatrix(rng.standard_normal((3, 5)) * 1e-7), [0, 1, 1, 0, 2])
    save_csv(tmp_path / "r.csv", ds)
    back = load_csv(tmp_path / "r.csv")
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_synthetic_generator():
    a = generate_synthetic("shifted-gaussians", 20, 2.0, seed=1)
    b = generate_synthetic("shifted-gaussians", 20, 2.0, seed=1)
    np.testing.assert_array_equal(a.stacked(), b.stacked())
    assert a.n_source == a.n_target == 40 and a.d == 5
    spec = KernelSpec.rbf(10.0)

    def mmd(pair):
        return mmd_value(joint_gram(spec, pair), gamma_vector(pair.n_source, pair.n_target))

    near = mmd(generate_synthetic("shifted-gaussians", 100, 0.0, seed=1))
    far = mmd(generate_synthetic("shifted-gaussians", 100, 4.0, seed=1))
    assert near < 0.05 and far > near
    moons = generate_synthetic("rotated-moons", 30, 0.5, seed=0, d=2)
    assert moons.d == 2 and set(moons.target.labels) == {0, 1}


def test_split_policies():
    labels = np.repeat([0, 1], 10)
    rng = np.random.default_rng(0)
    assert split_source(labels, "all", rng).size == 20
    assert split_source(labels, "fraction:0.25", rng).size == 5
    idx = split_source(labels, "per-class:3", rng)
    assert np.bincount(labels[idx]).tolist() == [3, 3]
    for bad in ("fraction:0", "per-class:0", "nope"):
        with pytest.raises(ValueError):
            parse_split_policy(bad)


def test_config_validation_and_dict():
    cfg = ExperimentConfig(base="rbf:sigma=2", dim=3)
    assert cfg.base == KernelSpec.rbf(2)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    for bad in ({"method": "pca"}, {"eta": 0}, {"anchors": "x"}, {"split": "fraction:2"}):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)


def _small_pair():
    return generate_synthetic("shifted-gaussians", 15, 2.0, seed=4, d=3)


def test_baseline_trial_equals_direct_fit():
    pair = _small_pair()
    cfg = ExperimentConfig(kernel_learning=False, dim=2, trials=1, seed=9)
    out = run_trial(cfg, pair, 0)
    X = np.hstack([pair.source.X[:, out.train_index], pair.target.X])
    K = gram(cfg.base, X)
    n_s = out.train_index.size
    model = tca_fit(K, gamma_vector(n_s, pair.n_target), cfg.mu_sub, cfg.dim)
    assert np.array_equal(out.K, K)
    assert np.array_equal(out.Y, project(model, K))


def test_identical_domains_match_kernel_pca():
    src = generate_synthetic("shifted-gaussians", 20, 0.0, seed=2, d=3).source
    pair = DomainPair(src, src)
    cfg = ExperimentConfig(kernel_learning=False, dim=2, trials=1, split="all")
    out = run_trial(cfg, pair, 0)
    K = gram(cfg.base, pair.stacked())
    lam, U = np.linalg.eigh(K @ centering_matrix(K.shape[0]) @ K)
    import scipy.linalg
    assert np.max(scipy.linalg.subspace_angles(out.model.W, U[:, -2:])) <= 1e-6
    assert out.result.accuracy >= 0.5


@pytest.mark.parametrize("method", ["tca", "sstca", "iglda"])
def test_experiment_runs_each_method(method):
    cfg = ExperimentConfig(method=method, dim=2, trials=2, anchors="union-subsample:10")
    report = run_experiment(cfg, _small_pair())
    doc = report.to_dict()
    assert len(doc["trials"]) == 2
    assert [t["seed"] for t in doc["trials"]] == [0, 1]
    assert set(doc["timings"]) >= {"split", "anchors", "kernel_learning", "gram", "subspace",
                                   "classify", "total"}
    assert 0.0 <= report.mean_accuracy <= 1.0


def test_stage_errors_name_the_stage():
    cfg = ExperimentConfig(dim=500, trials=1, kernel_learning=False)
    with pytest.raises(StageError) as err:
        run_experiment(cfg, _small_pair())
    assert err.value.stage == "subspace" and err.value.trial == 0


def test_report_check_detects_tampering():
    report = run_experiment(ExperimentConfig(dim=2, trials=2, kernel_learning=False), _small_pair())
    doc = report.to_dict()
    doc["mean_accuracy"] += 0.1
    with pytest.raises(ValueError):
        check_report(doc)


def test_default_hyperparameters():
    cfg = ExperimentConfig()
    assert str(cfg.base) == "poly:a=0.01,b=0,d=1"
    assert str(cfg.beta) == "rbf:sigma=3"
    assert cfg.tol == 1e-2
    assert (cfg.mu_sub, cfg.lambda_sub, cfg.gamma) == (10.0, 1.0, 0.5)
    assert 1e4 <= cfg.mu_kernel <= 2e5 and 0.1 <= cfg.eta <= 2
    assert cfg.knn_k == 1 and cfg.split == "fraction:0.5"
