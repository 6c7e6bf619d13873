import json

import numpy as np
import pytest

from sdlk.spd import is_spd, metric_inner, metric_norm, random_spd, symmetrize
from sdlk.trust_region import TrProblem, TrSettings, tcg_subproblem, tr_minimize


def _distance_problem(A):
    return TrProblem(
        objective=lambda M: float(np.sum((M - A) ** 2)),
        euclidean_gradient=lambda M: 2.0 * (M - A),
        H=A.shape[0],
    )


def _well_conditioned(rng, H):
    B = rng.standard_normal((H, H))
    return B @ B.T / H + 0.5 * np.eye(H)


def test_tcg_newton_step_inside_region(rng):
    g = symmetrize(rng.standard_normal((3, 3)))
    res = tcg_subproblem(g, lambda xi: xi, 10 * np.linalg.norm(g), np.eye(3), cg_max=6)
    np.testing.assert_allclose(res.step, -g, atol=1e-12)
    assert res.stop == "converged"


def test_tcg_zero_gradient():
    res = tcg_subproblem(np.zeros((2, 2)), lambda xi: xi, 1.0, np.eye(2))
    np.testing.assert_array_equal(res.step, np.zeros((2, 2)))
    assert res.iterations == 0


def test_tcg_negative_curvature_hits_boundary():
    C = np.array([[1.0, -1.0], [-1.0, 2.0]])
    g = np.array([[0.1, 1.0], [1.0, 0.1]])
    M = np.diag([2.0, 0.5])
    Mh = np.sqrt(M)
    # C acts on the whitened entries, so hvp is self-adjoint in the metric at M
    hvp = lambda xi: Mh @ (C * (np.linalg.inv(Mh) @ xi @ np.linalg.inv(Mh))) @ Mh
    res = tcg_subproblem(g, hvp, 0.3, M, cg_max=10)
    assert res.stop.startswith("negative-curvature")
    assert metric_norm(M, res.step) == pytest.approx(0.3, abs=1e-10)
    assert res.model_decrease > 0


def test_tcg_respects_radius_and_decreases_model(rng):
    for _ in range(20):
        M = random_spd(3, rng) + np.eye(3)
        g = symmetrize(rng.standard_normal((3, 3)))
        S = symmetrize(rng.standard_normal((3, 3)))
        hvp = lambda xi: S @ xi @ S
        delta = float(rng.uniform(0.01, 2.0))
        res = tcg_subproblem(g, hvp, delta, M, cg_max=6)
        assert metric_norm(M, res.step) <= delta * (1 + 1e-12)
        m = metric_inner(M, g, res.step) + 0.5 * metric_inner(M, hvp(res.step), res.step)
        assert m <= 1e-14


@pytest.mark.parametrize("H", [1, 2, 3, 4, 5])
def test_recovers_spd_target(H, rng):
    A = _well_conditioned(rng, H)
    M, trace = tr_minimize(_distance_problem(A), np.eye(H), TrSettings(tol=1e-12))
    assert np.linalg.norm(M - A) <= 1e-4
    assert trace.iterations <= 50


def test_constant_objective_stops_at_once():
    problem = TrProblem(lambda M: 3.0, lambda M: np.zeros_like(M), 2)
    M, trace = tr_minimize(problem, np.eye(2))
    np.testing.assert_array_equal(M, np.eye(2))
    assert trace.iterations <= 1


def test_stationary_start_returns_start(rng):
    A = _well_conditioned(rng, 3)
    M, trace = tr_minimize(_distance_problem(A), A.copy())
    np.testing.assert_array_equal(M, A)
    assert trace.exit_reason == "gradient"
    assert trace.iterations == 0


def test_trace_invariants(rng):
    A = _well_conditioned(rng, 4)
    M, trace = tr_minimize(_distance_problem(A), random_spd(4, rng), TrSettings(tol=1e-10))
    objs = trace.accepted_objectives()
    assert all(b <= a for a, b in zip(objs, objs[1:]))
    assert is_spd(M)
    lines = trace.to_jsonl().splitlines()
    assert len(lines) == len(trace.records) + 1
    assert json.loads(lines[-1])["exit_reason"] == trace.exit_reason
    assert trace.summary()["final_objective"] == objs[-1]


def test_exp_retraction_also_converges(rng):
    A = _well_conditioned(rng, 3)
    M, _ = tr_minimize(_distance_problem(A), np.eye(3), TrSettings(tol=1e-12, retraction="exp"))
    assert np.linalg.norm(M - A) <= 1e-4


def test_max_outer_exit(rng):
    A = _well_conditioned(rng, 3)
    _, trace = tr_minimize(_distance_problem(A), np.eye(3), TrSettings(tol=1e-14, max_outer=2))
    assert trace.exit_reason == "max_outer"
    assert trace.iterations == 2


def test_settings_validation():
    with pytest.raises(ValueError):
        TrSettings(tol=0)
    with pytest.raises(ValueError):
        TrSettings(max_outer=0)
    with pytest.raises(ValueError):
        TrSettings(delta0=-1.0)
