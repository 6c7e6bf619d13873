"""Geometry of the manifold of symmetric positive definite matrices.

The manifold carries the affine-invariant metric
``<xi, zeta>_M = tr(M^-1 xi M^-1 zeta)``, under which the Riemannian gradient
of a function with Euclidean gradient ``G`` is ``M sym(G) M``.
"""
import numpy as np

from .errors import ShapeMismatch, SingularPoint, StepTooLarge

EIG_FLOOR = 1e-12


def symmetrize(A):
    return (A + A.T) / 2


def _square(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got shape {A.shape}")
    return A


def _eigh_checked(M):
    w, V = np.linalg.eigh(symmetrize(M))
    lam_max = w[-1] if w.size else 0.0
    if not np.all(np.isfinite(w)) or lam_max <= 0 or w[0] <= EIG_FLOOR * lam_max:
        raise SingularPoint(
            f"matrix is not positive definite to the eigenvalue floor "
            f"(min {w[0] if w.size else float('nan'):.3e}, max {lam_max:.3e})"
        )
    return w, V


def spd_inverse(M):
    """Inverse of an SPD matrix through its eigen-decomposition."""
    w, V = _eigh_checked(_square(M, "M"))
    return symmetrize((V / w) @ V.T)


def is_spd(M, rel_tol=1e-12):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or not np.all(np.isfinite(M)):
        return False
    if np.max(np.abs(M - M.T), initial=0.0) > rel_tol * max(np.linalg.norm(M), 1e-300):
        return False
    return bool(np.linalg.eigvalsh(symmetrize(M))[0] > 0)


def random_spd(H, rng):
    """``A A^T + 1e-3 I`` with standard normal ``A``."""
    A = rng.standard_normal((H, H))
    return A @ A.T + 1e-3 * np.eye(H)


def egrad_to_rgrad(M, G):
    """Riemannian gradient ``1/2 M (G + G^T) M`` from a Euclidean gradient."""
    M = _square(M, "M")
    G = np.asarray(G, dtype=float)
    if G.shape != M.shape:
        raise ShapeMismatch(f"gradient shape {G.shape} does not match point {M.shape}")
    return symmetrize(M @ (G + G.T) @ M / 2)


def metric_inner(M, xi, zeta, M_inv=None):
    """Affine-invariant inner product ``tr(M^-1 xi M^-1 zeta)``.

    ``M_inv`` may be passed to avoid recomputing the inverse inside loops.
    """
    if M_inv is None:
        M_inv = spd_inverse(M)
    xi = np.asarray(xi, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if xi.shape != M_inv.shape or zeta.shape != M_inv.shape:
        raise ShapeMismatch("tangent vectors must match the point's shape")
    # tr(A B) for A = M^-1 xi, B = M^-1 zeta
    return float(np.sum((M_inv @ xi) * (M_inv @ zeta).T))


def metric_norm(M, xi, M_inv=None):
    return float(np.sqrt(max(metric_inner(M, xi, xi, M_inv), 0.0)))


def retract(M, xi, method="second-order", M_inv=None):
    """Map a tangent vector at ``M`` back onto the manifold.

    The default is the second-order retraction ``M + xi + 1/2 xi M^-1 xi``;
    ``method="exp"`` uses the exact exponential map
    ``M^1/2 expm(M^-1/2 xi M^-1/2) M^1/2`` instead.

    Raises
    ------
    StepTooLarge
        The result fails the eigenvalue floor, i.e. rounding pushed it off
        the SPD cone.
    """
    M = _square(M, "M")
    xi = symmetrize(np.asarray(xi, dtype=float))
    if xi.shape != M.shape:
        raise ShapeMismatch(f"tangent shape {xi.shape} does not match point {M.shape}")
    if method == "second-order":
        if M_inv is None:
            M_inv = spd_inverse(M)
        R = symmetrize(M + xi + xi @ M_inv @ xi / 2)
    elif method == "exp":
        w, V = _eigh_checked(M)
        s = np.sqrt(w)
        half = (V * s) @ V.T
        ihalf = (V / s) @ V.T
        mu, U = np.linalg.eigh(symmetrize(ihalf @ xi @ ihalf))
        R = symmetrize(half @ ((U * np.exp(mu)) @ U.T) @ half)
    else:
        raise ValueError(f"unknown retraction {method!r}")
    lam = np.linalg.eigvalsh(R)
    if not np.all(np.isfinite(lam)) or lam[0] <= EIG_FLOOR * lam[-1]:
        raise StepTooLarge(f"retraction left the SPD cone (min eigenvalue {lam[0]:.3e})")
    return R


def default_fd_step(M):
    return 1e-6 * (1.0 + np.linalg.norm(M))


def directional_rgrad_diff(rgrad, M, xi, h=None, method="second-order", g0=None):
    """Finite-difference Hessian-vector product along ``xi``.

    Moves a Frobenius distance ``h`` from ``M`` along ``xi`` and differences
    the Riemannian gradient field, rescaled to the length of ``xi``. No vector
    transport is applied between the two tangent spaces.

    Parameters
    ----------
    rgrad : callable
        Maps an SPD matrix to its Riemannian gradient.
    M : ndarray, shape (H, H)
        Base point.
    xi : ndarray, shape (H, H)
        Symmetric direction.
    h : float, optional
        Step length; defaults to ``1e-6 * (1 + ||M||_F)``.
    g0 : ndarray, optional
        ``rgrad(M)`` if already known.
    """
    M = _square(M, "M")
    xi = np.asarray(xi, dtype=float)
    norm_xi = np.linalg.norm(xi)
    if norm_xi == 0:
        return np.zeros_like(M)
    if h is None:
        h = default_fd_step(M)
    t = h / norm_xi
    if g0 is None:
        g0 = rgrad(M)
    g1 = rgrad(retract(M, t * xi, method=method))
    return symmetrize((g1 - g0) / t)
