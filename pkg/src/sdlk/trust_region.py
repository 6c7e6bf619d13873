"""Riemannian trust-region minimization on the SPD manifold.

The inner subproblem is solved with Steihaug-Toint truncated conjugate
gradients in the affine-invariant metric. Hessian-vector products are finite
differences of the Riemannian gradient along retractions.
"""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NonFiniteObjective, SingularPoint, StepTooLarge
from .spd import (
    default_fd_step,
    directional_rgrad_diff,
    egrad_to_rgrad,
    metric_inner,
    metric_norm,
    retract,
    spd_inverse,
)


@dataclass(frozen=True)
class TrProblem:
    objective: object
    euclidean_gradient: object
    H: int

    def rgrad(self, M):
        return egrad_to_rgrad(M, self.euclidean_gradient(M))


@dataclass(frozen=True)
class TrSettings:
    """Solver settings. ``None`` entries are resolved from the start point.

    ``delta0`` defaults to ``0.1 * ||M0||_F``, ``delta_max`` to
    ``1000 * delta0`` and ``cg_max`` to ``H (H + 1) / 2``. Radii are measured
    in the affine-invariant norm.

    The inner solve stops once the residual falls below
    ``||r0|| * max(cg_tol, min(cg_kappa, ||r0|| ** cg_theta))``.
    """

    tol: float = 1e-2
    max_outer: int = 200
    delta0: float = None
    delta_max: float = None
    rho_accept: float = 0.1
    cg_max: int = None
    cg_tol: float = 1e-8
    cg_kappa: float = 0.1
    cg_theta: float = 1.0
    grad_tol: float = 1e-9
    fd_step: float = None
    retraction: str = "second-order"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if not 0 < self.rho_accept < 1:
            raise ValueError("rho_accept must lie in (0, 1)")
        for name in ("delta0", "delta_max", "cg_max", "fd_step"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive")
        if not self.cg_tol > 0 or not self.grad_tol > 0:
            raise ValueError("cg_tol and grad_tol must be positive")
        if not 0 < self.cg_kappa <= 1 or self.cg_theta < 0:
            raise ValueError("cg_kappa must lie in (0, 1] and cg_theta must be >= 0")


@dataclass
class TrRecord:
    iteration: int
    objective: float
    grad_norm: float
    radius: float
    accepted: bool
    inner_iterations: int
    rho: float = float("nan")
    model_decrease: float = 0.0
    cauchy_decrease: float = 0.0
    inner_stop: str = ""


@dataclass
class TrTrace:
    records: list = field(default_factory=list)
    exit_reason: str = ""

    @property
    def iterations(self):
        return sum(1 for r in self.records if r.iteration > 0)

    def accepted_objectives(self):
        return [r.objective for r in self.records if r.accepted]

    def to_jsonl(self):
        lines = []
        for r in self.records:
            doc = asdict(r)
            for k, v in doc.items():
                if isinstance(v, float) and not math.isfinite(v):
                    doc[k] = None
            lines.append(json.dumps(doc, sort_keys=True))
        lines.append(json.dumps({"exit_reason": self.exit_reason}))
        return "\n".join(lines) + "\n"

    def summary(self):
        accepted = self.accepted_objectives()
        return {
            "iterations": self.iterations,
            "accepted_steps": max(len(accepted) - 1, 0),
            "exit_reason": self.exit_reason,
            "initial_objective": accepted[0] if accepted else None,
            "final_objective": accepted[-1] if accepted else None,
        }


@dataclass
class TcgResult:
    step: np.ndarray
    iterations: int
    stop: str
    model_decrease: float
    cauchy_decrease: float


def tcg_subproblem(
    grad, hvp, delta, M, cg_max=None, cg_tol=1e-8, M_inv=None, kappa=None, theta=1.0
):
    """Approximately minimize ``<g, xi> + 1/2 <hvp(xi), xi>`` over ``||xi||_M <= delta``.

    Stops at an interior CG solution, on the trust-region boundary, or on the
    boundary along a direction of non-positive curvature. If the CG iterate
    decreases the model less than the Cauchy point (possible when ``hvp`` is
    not exactly self-adjoint), the Cauchy point is returned instead.

    The residual target is ``||r0|| * max(cg_tol, min(kappa, ||r0|| ** theta))``;
    with ``kappa=None`` it is simply ``cg_tol * ||r0||``.
    """
    M = np.asarray(M, dtype=float)
    if M_inv is None:
        M_inv = spd_inverse(M)
    H = M.shape[0]
    if cg_max is None:
        cg_max = H * (H + 1) // 2

    def inner(a, b):
        return metric_inner(M, a, b, M_inv)

    zero = np.zeros_like(M)
    r = np.array(grad, dtype=float)
    rr = inner(r, r)
    if not rr > 0 or not delta > 0:
        return TcgResult(zero, 0, "zero-gradient", 0.0, 0.0)
    norm_r0 = math.sqrt(rr)
    rel = cg_tol if kappa is None else max(cg_tol, min(kappa, norm_r0**theta))

    eta = zero.copy()
    Heta = zero.copy()
    d = -r
    e_Pe, e_Pd, d_Pd = 0.0, 0.0, rr
    cauchy = None
    stop = "max-iterations"
    j = 0
    while j < cg_max:
        j += 1
        Hd = hvp(d)
        dHd = inner(d, Hd)
        if cauchy is None:
            # first direction is -grad, so this is the Cauchy point
            t_edge = delta / norm_r0
            t = t_edge if dHd <= 0 else min(rr / dHd, t_edge)
            cauchy = (t * d, t * rr - 0.5 * t * t * dHd)
        alpha = rr / dHd if dHd > 0 else math.inf
        e_Pe_new = e_Pe + 2 * alpha * e_Pd + alpha * alpha * d_Pd
        if dHd <= 0 or e_Pe_new >= delta * delta:
            tau = (-e_Pd + math.sqrt(e_Pd * e_Pd + d_Pd * (delta * delta - e_Pe))) / d_Pd
            eta = eta + tau * d
            Heta = Heta + tau * Hd
            stop = "negative-curvature" if dHd <= 0 else "boundary"
            break
        eta = eta + alpha * d
        Heta = Heta + alpha * Hd
        r = r + alpha * Hd
        rr_new = inner(r, r)
        e_Pe = e_Pe_new
        if math.sqrt(rr_new) <= rel * norm_r0:
            stop = "converged"
            break
        beta = rr_new / rr
        d = -r + beta * d
        e_Pd = beta * (e_Pd + alpha * d_Pd)
        d_Pd = rr_new + beta * beta * d_Pd
        rr = rr_new

    decrease = -(inner(grad, eta) + 0.5 * inner(Heta, eta))
    if cauchy is not None and decrease < cauchy[1]:
        return TcgResult(cauchy[0], j, stop + "+cauchy", float(cauchy[1]), float(cauchy[1]))
    return TcgResult(eta, j, stop, float(decrease), float(cauchy[1]) if cauchy else 0.0)


def _checked_value(problem, M):
    f = float(problem.objective(M))
    if not math.isfinite(f):
        raise NonFiniteObjective(f"objective evaluated to {f}")
    return f


def tr_minimize(problem, M0, settings=None):
    """Minimize ``problem.objective`` over SPD matrices starting from ``M0``.

    Iterates until an accepted step changes the objective by less than
    ``settings.tol``, the Riemannian gradient norm drops below
    ``grad_tol * (1 + |f|)``, or ``max_outer`` iterations have run.

    Returns
    -------
    M : ndarray
        Last accepted iterate.
    trace : TrTrace
        Per-iteration diagnostics; record 0 is the start point.
    """
    settings = settings or TrSettings()
    M = np.array(M0, dtype=float)
    M_inv = spd_inverse(M)
    H = M.shape[0]
    f = _checked_value(problem, M)
    G = problem.rgrad(M)

    delta = float(settings.delta0 or 0.1 * np.linalg.norm(M))
    delta_max = float(settings.delta_max or 1000.0 * delta)
    cg_max = settings.cg_max if settings.cg_max is not None else H * (H + 1) // 2

    trace = TrTrace()
    negligible = 0
    gnorm = metric_norm(M, G, M_inv)
    trace.records.append(TrRecord(0, f, gnorm, delta, True, 0))

    for k in range(1, settings.max_outer + 1):
        if gnorm < settings.grad_tol * (1.0 + abs(f)):
            trace.exit_reason = "gradient"
            break
        h = settings.fd_step if settings.fd_step is not None else default_fd_step(M)

        def hvp(xi, M=M, G=G, h=h):
            return directional_rgrad_diff(
                problem.rgrad, M, xi, h=h, method=settings.retraction, g0=G
            )

        sub = tcg_subproblem(
            G, hvp, delta, M, cg_max, settings.cg_tol, M_inv,
            kappa=settings.cg_kappa, theta=settings.cg_theta,
        )
        on_boundary = sub.stop.startswith(("boundary", "negative-curvature"))

        try:
            M_new = retract(M, sub.step, method=settings.retraction, M_inv=M_inv)
            f_new = _checked_value(problem, M_new)
        except (StepTooLarge, SingularPoint):
            M_new, f_new = None, math.inf

        tiny_model = sub.model_decrease < 1e-15 * (1.0 + abs(f))
        negligible = negligible + 1 if tiny_model else 0
        if M_new is None or tiny_model:
            rho = -math.inf
        else:
            rho = (f - f_new) / sub.model_decrease

        if rho < 0.25:
            delta = delta / 4
        elif rho > 0.75 and on_boundary:
            delta = min(2 * delta, delta_max)
        delta = float(delta)

        accepted = rho > settings.rho_accept and f_new < f
        record = TrRecord(
            k,
            f_new if accepted else f,
            gnorm,
            delta,
            accepted,
            sub.iterations,
            rho,
            float(sub.model_decrease),
            float(sub.cauchy_decrease),
            sub.stop,
        )
        if accepted:
            change = abs(f - f_new)
            M, f = M_new, f_new
            M_inv = spd_inverse(M)
            G = problem.rgrad(M)
            gnorm = metric_norm(M, G, M_inv)
            record.grad_norm = gnorm
            trace.records.append(record)
            if change < settings.tol:
                trace.exit_reason = "tol"
                break
        else:
            trace.records.append(record)
            if negligible >= 3:
                # the model cannot resolve any further decrease in f
                trace.exit_reason = "stagnation"
                break
    else:
        trace.exit_reason = "max_outer"

    return M, trace
