"""Direct sparse solve and load-stepping Newton continuation."""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import ContinuationError, SingularMatrixError, SolverError
from .assembly import Loads, assemble, reduce_system

log = logging.getLogger(__name__)


def sparse_solve(matrix, rhs, check=1e-10):
    """LU solve of a square (possibly unsymmetric) sparse system.

    Raises SingularMatrixError on a zero pivot or when the relative residual
    of the computed solution exceeds ``check``.
    """
    a = sp.csc_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    if a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible system shapes {a.shape} and {b.shape}")
    if a.shape[0] == 0:
        return np.zeros(0)
    # symmetric diagonal equilibration; mixed-physics blocks differ by many decades
    d = np.abs(a.diagonal())
    if np.any(d == 0):
        d = np.where(d == 0, np.sqrt(abs(a).multiply(abs(a)).sum(axis=0).A1), d)
    if np.any(d == 0):
        raise SingularMatrixError(f"structurally deficient matrix: empty column {int(np.flatnonzero(d == 0)[0])}")
    s = 1.0 / np.sqrt(d)
    scaled = sp.csc_matrix(sp.diags(s) @ a @ sp.diags(s))
    try:
        lu = spla.splu(scaled, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularMatrixError(f"LU factorization failed: {exc}") from None

    def solve(rhs_):
        return s * lu.solve(s * rhs_)

    x = solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("LU produced non-finite values (zero pivot)")
    bn = np.linalg.norm(b)
    if bn > 0 and check is not None:
        rel = np.linalg.norm(a @ x - b) / bn
        for _ in range(2):
            if rel <= check:
                break
            x = x + solve(b - a @ x)
            rel = np.linalg.norm(a @ x - b) / bn
        if rel > check:
            raise SingularMatrixError(f"solve residual {rel:.2e} exceeds {check:.0e}; matrix near singular")
    return x


@dataclass(frozen=True)
class SolveSettings:
    residual_tolerance: float = 1e-8
    max_newton_iterations: int = 25
    initial_load_steps: int = 10
    min_step_fraction: float = 1.0 / 64.0
    finite_strain: bool = True

    def __post_init__(self):
        if not self.residual_tolerance > 0:
            raise ValueError("residual_tolerance must be > 0")
        if self.initial_load_steps < 1 or self.max_newton_iterations < 1:
            raise ValueError("load steps and Newton iterations must be >= 1")
        if not 0 < self.min_step_fraction <= 1:
            raise ValueError("min_step_fraction must lie in (0, 1]")


@dataclass
class SolveState:
    """Converged dof vector plus continuation bookkeeping.

    ``history`` has one list of relative residual norms per accepted step;
    ``residual_scale`` carries the per-field residual scale into later runs.
    """

    x: np.ndarray
    load_factor: float
    loads: Loads
    history: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    residual_scale: np.ndarray | None = None

    def fields(self, model):
        return model.nodal_fields(self.x)


# residuals below this multiple of |K||x| are indistinguishable from round-off
ROUNDOFF_FLOOR = 1e3 * np.finfo(float).eps


def field_norms(v, diag, field):
    """Per-field norms of ``v`` after scaling by 1/sqrt(|K_ii|); ``field`` holds
    the component (0..4) of every entry. Displacement components share one norm."""
    w = (v / np.sqrt(np.where(diag > 0, diag, 1.0))) ** 2
    return np.sqrt(np.bincount(_field_group(field), weights=w, minlength=3))


def _field_group(field):
    # ux, uy, uz -> 0 (displacement), T -> 1, phi -> 2
    return np.maximum(field - 2, 0)


def _block_magnitude(matrix, group, x):
    """|K_cc| |x_c| using only the same-field diagonal blocks of ``matrix``."""
    a = matrix.tocoo()
    keep = group[a.row] == group[a.col]
    return np.bincount(a.row[keep], weights=np.abs(a.data[keep]) * np.abs(x[a.col[keep]]), minlength=len(x))


def _free_fields(model):
    field = np.empty(model.dofmap.n_dofs, dtype=np.int64)
    for c in range(5):
        d = model.dofmap.index[:, c]
        field[d[d >= 0]] = c
    return field[model.dofmap.free]


def _newton(model, x, loads, settings, scale, min_iterations=0):
    """Newton iterations at fixed loads.

    Each field (displacement, temperature, potential) is measured separately,
    relative to the largest of: its absolute element contributions, ``scale``
    (the largest unbalanced residual met at the start of any step so far) and
    a round-off floor. At least ``min_iterations`` corrections are taken.
    Returns (x, history, iterations, scale).
    """
    tol = settings.residual_tolerance
    field = _free_fields(model)
    group = _field_group(field)
    scale = np.zeros(3) if scale is None else np.asarray(scale, dtype=float)
    hist = []
    for it in range(settings.max_newton_iterations + 1):
        r, ref, K = assemble(model, x, loads)
        Kff, rf, free = reduce_system(model, r, K)
        diag = np.abs(Kff.diagonal())
        num = field_norms(rf, diag, field)
        if it == 0:
            scale = np.maximum(scale, num)
        floor = field_norms(_block_magnitude(Kff, group, x[free]), diag, field) * (ROUNDOFF_FLOOR / tol)
        den = np.maximum(np.maximum(field_norms(ref[free], diag, field), scale), floor)
        rel = float(np.max(np.divide(num, den, out=np.zeros(3), where=den > 0)))
        hist.append(rel)
        if not np.isfinite(rel):
            raise SolverError("residual is not finite")
        if rel <= tol and it >= min_iterations:
            return x, hist, it, scale
        if it == settings.max_newton_iterations:
            break
        if len(hist) > 3 and rel > 1e3 * hist[0]:
            break
        # Newton tolerates inexact steps; only gross failure aborts
        dx = sparse_solve(Kff, -rf, check=1e-6)
        x = x.copy()
        x[free] += dx
    raise SolverError(f"Newton did not converge (last relative residual {hist[-1]:.3e})")


def newton_solve(model, settings, start=Loads(), end=Loads(1.0, 1.0, 1.0), state=None, on_step=None):
    """Continuation from ``start`` loads to ``end`` loads.

    Begins from ``state`` (or the rest state). Each step interpolates the
    loads, applies prescribed values, and iterates Newton to the relative
    residual tolerance. A failed step is retried at half the size; the run
    fails once the step drops below ``min_step_fraction``. ``on_step(lam, x)``
    is called after every accepted step.
    """
    x = model.initial_vector(start) if state is None else state.x.copy()
    scale = None if state is None else state.residual_scale
    step = 1.0 / settings.initial_load_steps
    lam = 0.0
    histories, iterations = [], []
    # secant predictor: previous accepted increment per unit load factor
    rate = None
    presc = model.dofmap.prescribed
    while lam < 1.0:
        trial = lam + step
        # snap so that accumulated steps end exactly on the target loads
        if trial > 1.0 - 1e-12:
            trial = 1.0
        loads = start.interpolate(end, trial)
        xt = x.copy()
        if rate is not None:
            xt += (trial - lam) * rate
        xt[presc] = model.dofmap.prescribed_values(loads.drive_scale)[presc]
        try:
            # a changed load always gets a correction, however small its residual
            xt, hist, its, new_scale = _newton(model, xt, loads, settings, scale, int(loads != start))
        except SolverError as exc:
            rate = None
            step /= 2
            log.debug("step to lambda=%.4f failed (%s); halving to %.4g", trial, exc, step)
            if step < settings.min_step_fraction * (1 - 1e-12):
                raise ContinuationError(
                    f"continuation failed at lambda={lam:.4f}: {exc}", load_factor=lam, history=histories
                ) from None
            continue
        rate = (xt - x) / (trial - lam)
        x, lam, scale = xt, trial, new_scale
        histories.append(hist)
        iterations.append(its)
        if on_step is not None:
            on_step(lam, x)
    return SolveState(x=x, load_factor=lam, loads=start.interpolate(end, lam), history=histories, iterations=iterations,
                      residual_scale=scale)


def reactions(model, state):
    """Residual at prescribed dofs (reaction forces/fluxes), full-length vector."""
    r, _, _ = assemble(model, state.x, state.loads, tangent=False)
    out = np.zeros_like(r)
    out[model.dofmap.prescribed] = r[model.dofmap.prescribed]
    return out
