"""Global Lipschitz-constant estimation.

Two estimators are provided:

* ``jacobian_sup_bound`` bounds sup ||Df(z)||_{p,q} over a lattice of the
  box via central-difference Jacobians and exact induced operator norms,
  then applies a safety factor.  This yields a genuine upper bound up to
  inter-grid variation (covered by the safety factor).
* ``slope_sampling_estimate`` takes the maximum difference quotient over
  random point pairs and inflates it.  It estimates from below and is
  therefore heuristic; drivers should refuse it unless explicitly allowed.

Induced norms ||A||_{p,q} = sup{||Ax||_q : ||x||_p <= 1} are computed
exactly for all nine {1,2,inf}^2 pairs: column/row reductions where closed
forms exist, the spectral norm via eigen-iteration on A^T A (tolerance
1e-10), and sign-vertex enumeration for the (inf,1), (inf,2) and (2,1)
pairs.  Enumeration is exact because the maximum of a convex function over
the unit cube is attained at a vertex; beyond ``_ENUM_LIMIT`` dimensions it
is replaced by a sigma_max bound scaled by norm-equivalence constants and
the estimate is flagged as inexact.

Grid and pair evaluations are order-independent reductions (max), so
results do not depend on evaluation scheduling; sampled pairs are generated
sequentially from the seed before any evaluation.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .core import BoxDomain, NormKind, norm_eval_rows
from .expr import contains_abs, finite_diff_jacobian_batch

_ENUM_LIMIT = 14  # sign-enumeration cap: 2^(k-1) vertices
_POWER_TOL = 1e-10
_POWER_MAX_ITER = 10_000


class EstimateMethod(enum.Enum):
    JacobianGrid = "jacobian-grid"
    SlopeSampling = "slope-sampling"
    UserSupplied = "user-supplied"


@dataclass(frozen=True)
class LipschitzEstimate:
    """An estimated Lipschitz constant.  ``value`` already includes the
    safety/inflation factor; ``exact_norms`` is False when an induced-norm
    fallback bound was used."""

    value: float
    method: EstimateMethod
    safety_factor: float
    samples_used: int
    exact_norms: bool = True

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("Lipschitz estimate must be positive")
        if self.safety_factor < 1 and self.method is not EstimateMethod.SlopeSampling:
            raise ValueError("safety factor must be >= 1")


def spectral_norms(jacobians: np.ndarray) -> np.ndarray:
    """Largest singular value per matrix of an (N, m, n) stack, via power
    iteration on A^T A with tolerance 1e-10."""
    jacobians = np.asarray(jacobians, dtype=float)
    ata = np.einsum("kji,kjl->kil", jacobians, jacobians)
    n = ata.shape[-1]
    v = np.broadcast_to(1.0 + 1e-3 * np.arange(n), ata.shape[:1] + (n,)).copy()
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    lam = np.zeros(ata.shape[0])
    for _ in range(_POWER_MAX_ITER):
        w = np.einsum("kij,kj->ki", ata, v)
        new_lam = np.einsum("ki,ki->k", v, w)
        norms = np.linalg.norm(w, axis=-1)
        nonzero = norms > 0
        v[nonzero] = w[nonzero] / norms[nonzero, None]
        done = np.abs(new_lam - lam) <= _POWER_TOL * np.maximum(1.0, np.abs(new_lam))
        lam = new_lam
        if done.all():
            break
    return np.sqrt(np.maximum(lam, 0.0))


def _sign_vertices(k: int) -> np.ndarray:
    # one representative per antipodal pair: first entry fixed at +1
    if k == 1:
        return np.ones((1, 1))
    tails = np.array(list(itertools.product((1.0, -1.0), repeat=k - 1)))
    return np.hstack([np.ones((tails.shape[0], 1)), tails])


def induced_norms(jacobians: np.ndarray, domain_norm: NormKind, image_norm: NormKind):
    """Induced (p, q) operator norms of an (N, m, n) stack.

    Returns (values, exact).  ``exact`` is False only when a sign
    enumeration would exceed the dimension cap and the sigma_max fallback
    bound was used instead.
    """
    jacobians = np.asarray(jacobians, dtype=float)
    _, m, n = jacobians.shape
    p, q = domain_norm, image_norm

    if p is NormKind.One:
        # max over columns of the q-norm of the column
        col = norm_eval_rows(q, np.swapaxes(jacobians, 1, 2))  # (N, n)
        return col.max(axis=1), True
    if q is NormKind.Inf:
        dual = {NormKind.One: NormKind.Inf, NormKind.Two: NormKind.Two, NormKind.Inf: NormKind.One}[p]
        row = norm_eval_rows(dual, jacobians)  # (N, m)
        return row.max(axis=1), True
    if p is NormKind.Two and q is NormKind.Two:
        return spectral_norms(jacobians), True

    if p is NormKind.Inf:
        # sup over the cube is attained at a sign vertex
        if n <= _ENUM_LIMIT:
            signs = _sign_vertices(n)  # (K, n)
            imgs = np.einsum("kmn,sn->ksm", jacobians, signs)
            vals = norm_eval_rows(q, imgs)  # (N, K)
            return vals.max(axis=1), True
        factor = np.sqrt(m * n) if q is NormKind.One else np.sqrt(n)
        return spectral_norms(jacobians) * factor, False

    # remaining pair: (2, 1); by duality ||A||_{2,1} = ||A^T||_{inf,2}
    if m <= _ENUM_LIMIT:
        signs = _sign_vertices(m)  # (K, m)
        imgs = np.einsum("kmn,sm->ksn", jacobians, signs)
        vals = norm_eval_rows(NormKind.Two, imgs)
        return vals.max(axis=1), True
    return spectral_norms(jacobians) * np.sqrt(m), False


def induced_norm(matrix, domain_norm: NormKind, image_norm: NormKind) -> float:
    """Induced (p, q) norm of a single matrix (exact for supported sizes)."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    values, _ = induced_norms(matrix[None, :, :], domain_norm, image_norm)
    return float(values[0])


def box_grid(box: BoxDomain, grid_per_dim: int) -> np.ndarray:
    """The grid_per_dim**n lattice of the box, corners included."""
    axes = [np.linspace(lo, hi, grid_per_dim) for lo, hi in zip(box.lower, box.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def jacobian_sup_bound(
    exprs,
    box: BoxDomain,
    domain_norm: NormKind,
    image_norm: NormKind,
    grid_per_dim: int = 64,
    safety: float = 1.05,
    h: float = 1e-6,
) -> LipschitzEstimate:
    """Grid supremum of the induced Jacobian norm, times the safety factor.

    The safety factor is doubled when any expression contains abs(), whose
    kinks make the finite-difference Jacobian locally unreliable.
    """
    exprs = list(exprs)
    if grid_per_dim < 2:
        raise ValueError("grid_per_dim must be at least 2")
    if safety < 1:
        raise ValueError("safety factor must be >= 1")
    points = box_grid(box, grid_per_dim)
    jac = finite_diff_jacobian_batch(exprs, points, h=h)
    values, exact = induced_norms(jac, domain_norm, image_norm)
    effective_safety = 2.0 * safety if any(contains_abs(e) for e in exprs) else safety
    value = float(values.max()) * effective_safety
    if value <= 0:
        warnings.warn("Jacobian vanished on the whole grid; reporting floor 1e-12")
        value = 1e-12
    return LipschitzEstimate(
        value=value,
        method=EstimateMethod.JacobianGrid,
        safety_factor=effective_safety,
        samples_used=points.shape[0],
        exact_norms=exact,
    )


def _sample_points(rng: np.random.Generator, box: BoxDomain, count: int) -> np.ndarray:
    u = rng.random((count, box.dimension))
    pts = box.lower + u * box.widths
    if box.integral.any():
        for j in np.flatnonzero(box.integral):
            lo, hi = int(np.ceil(box.lower[j])), int(np.floor(box.upper[j]))
            pts[:, j] = lo + np.floor(u[:, j] * (hi - lo + 1)).clip(0, hi - lo)
    return pts


def slope_sampling_estimate(
    evaluator,
    box: BoxDomain,
    domain_norm: NormKind,
    image_norm: NormKind,
    pairs: int,
    inflation: float = 0.1,
    seed: int = 0,
    floor: float = 1e-12,
    batch_evaluator=None,
) -> LipschitzEstimate:
    """Maximum difference quotient over ``pairs`` random point pairs,
    multiplied by (1 + inflation).

    This is a lower estimate of the true constant (before inflation it
    equals the largest observed slope), so it is heuristic.  A constant
    function yields the configured floor with a warning.  Degenerate pairs
    (identical points, possible on integral domains) are re-drawn up to 100
    times each.
    """
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    if inflation < 0:
        raise ValueError("inflation must be nonnegative")
    rng = np.random.default_rng(seed)
    xs = _sample_points(rng, box, pairs)
    ys = _sample_points(rng, box, pairs)
    for i in range(pairs):
        tries = 0
        while np.array_equal(xs[i], ys[i]):
            tries += 1
            if tries > 100:
                raise ValueError("could not draw a non-degenerate point pair in 100 tries")
            ys[i] = _sample_points(rng, box, 1)[0]

    if batch_evaluator is not None:
        rx = np.atleast_2d(np.asarray(batch_evaluator(xs), dtype=float).T).T
        ry = np.atleast_2d(np.asarray(batch_evaluator(ys), dtype=float).T).T
        if rx.ndim == 1:
            rx, ry = rx[:, None], ry[:, None]
    else:
        rx = np.array([np.atleast_1d(evaluator(x)) for x in xs], dtype=float)
        ry = np.array([np.atleast_1d(evaluator(y)) for y in ys], dtype=float)

    num = norm_eval_rows(image_norm, rx - ry)
    den = norm_eval_rows(domain_norm, xs - ys)
    best = float((num / den).max())
    if best <= 0.0:
        warnings.warn("all sampled slopes are zero (constant function?); reporting floor")
        return LipschitzEstimate(floor, EstimateMethod.SlopeSampling, 1.0 + inflation, pairs)
    return LipschitzEstimate(best * (1.0 + inflation), EstimateMethod.SlopeSampling, 1.0 + inflation, pairs)
