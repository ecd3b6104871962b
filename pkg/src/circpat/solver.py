"""Thurston's curvature-adjustment iteration for prescribed face totals.

Each step replaces the curvature of a face, with all other curvatures frozen,
by the unique value making that face's total equal its target. In ``jacobi``
mode every face is adjusted from the same input vector; ``gauss-seidel``
sweeps faces in ascending id order, each seeing the earlier updates.
Everything works in log coordinates ``u = ln k``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

from . import feasibility
from .curvature import CurvatureVector, FaceValues, face_array, totals
from .graph import PatternGraph
from .spherical import K_MAX, K_MIN, arc_partials, arc_total_curvature

log = logging.getLogger(__name__)

U_MIN = math.log(K_MIN)
U_MAX = math.log(K_MAX)
NEWTON_SWITCH = 1e-4
MONOTONE_SLACK = 1e-12

Mode = Literal["jacobi", "gauss-seidel"]
Init = Union[str, float, FaceValues]


class InfeasibleTargetError(ValueError):
    def __init__(self, result: feasibility.FeasibilityResult):
        self.result = result
        super().__init__(
            f"targets not admissible: slack {result.min_slack!r} on faces {list(result.witness)}"
        )


class SolverError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    mode: Mode = "jacobi"
    tol_T: float = 1e-10
    tol_inner: float = 1e-13
    max_outer: int = 100_000
    init: Init = "subpattern"  # "subpattern", a uniform k0 (float), or per-face values
    monotone: Literal["up", "down"] | None = None  # assert the start is a sub/superpattern
    keep_snapshots: bool = False

    def __post_init__(self):
        if self.mode not in ("jacobi", "gauss-seidel"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (self.tol_T > 0 and self.tol_inner > 0):
            raise ValueError("tolerances must be > 0")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")


@dataclass
class IterationRecord:
    residual: float
    monotone_up: bool
    monotone_down: bool
    contraction: float
    k: np.ndarray | None = None


@dataclass
class SolveTrace:
    initial_residual: float
    records: list[IterationRecord] = field(default_factory=list)
    status: str = "error"  # converged | max-iterations | error
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records])

    def summary(self) -> dict:
        last = self.records[-1] if self.records else None
        return {
            "status": self.status,
            "message": self.message,
            "iterations": self.iterations,
            "initial_residual": self.initial_residual,
            "final_residual": last.residual if last else self.initial_residual,
            "final_contraction": last.contraction if last and math.isfinite(last.contraction) else None,
            "monotone_up": all(r.monotone_up for r in self.records),
            "monotone_down": all(r.monotone_down for r in self.records),
        }


# -- one-dimensional adjustment ----------------------------------------------


def _own_totals(g: PatternGraph, k: np.ndarray, faces: np.ndarray, u_new: np.ndarray):
    """Totals and own log-derivatives of ``faces`` if their curvature were ``exp(u_new)``."""
    inc = g.incidence
    trial = k.copy()
    trial[faces] = np.exp(u_new)
    sel = np.isin(inc.face, faces)
    f, nb, th, self_adj = inc.face[sel], inc.neighbor[sel], inc.theta[sel], inc.self_adjacent[sel]
    k_own = trial[f]
    k_nbr = np.where(self_adj, k_own, k[nb])
    arcs = arc_total_curvature(k_own, k_nbr, th)
    d_own, d_cross = arc_partials(k_own, k_nbr, th)
    slope = d_own + np.where(self_adj, d_cross, 0.0)
    n = g.n_faces
    T = np.bincount(f, weights=arcs, minlength=n)[faces]
    dT = np.bincount(f, weights=slope, minlength=n)[faces]
    return T, dT


def _adjust(g: PatternGraph, k: np.ndarray, faces: np.ndarray, target: np.ndarray, tol: float) -> np.ndarray:
    """Vectorized root solve of ``T_f(u_f) = target_f`` for every face in ``faces``."""
    cap = g.face_capacity[faces]
    bad = ~((target > 0) & (target < cap))
    if bad.any():
        i = int(faces[np.flatnonzero(bad)[0]])
        raise ValueError(
            f"face {g.face_ids[i]}: target {float(target[bad][0])!r} outside solvable range (0, {float(cap[bad][0])!r})"
        )
    u0 = np.log(k[faces])
    r0 = _own_totals(g, k, faces, u0)[0] - target
    lo, hi = u0.copy(), u0.copy()
    up = r0 < 0
    # geometric bracket expansion away from the current value
    step = 1.0
    open_ = r0 != 0
    while open_.any():
        trial = np.where(up, lo + step, hi - step)
        if (trial[open_] > U_MAX).any() or (trial[open_] < U_MIN).any():
            raise SolverError("bracket expansion left the representable curvature range")
        r = _own_totals(g, k, faces, trial)[0] - target
        grow = open_ & up
        shrink = open_ & ~up
        crossed = (grow & (r >= 0)) | (shrink & (r <= 0))
        hi = np.where(grow, trial, hi)
        lo = np.where(grow & ~crossed, trial, lo)
        lo = np.where(shrink, trial, lo)
        hi = np.where(shrink & ~crossed, trial, hi)
        open_ &= ~crossed
        step *= 2.0
    # now T(lo) <= target <= T(hi)

    while (hi - lo > NEWTON_SWITCH).any():
        mid = 0.5 * (lo + hi)
        r = _own_totals(g, k, faces, mid)[0] - target
        active = hi - lo > NEWTON_SWITCH
        lo = np.where(active & (r < 0), mid, lo)
        hi = np.where(active & (r >= 0), mid, hi)

    # safeguarded Newton inside the bracket
    u = 0.5 * (lo + hi)
    done = np.zeros(u.shape, dtype=bool)
    for _ in range(60):
        T, dT = _own_totals(g, k, faces, u)
        r = T - target
        lo = np.where(r < 0, u, lo)
        hi = np.where(r > 0, u, hi)
        nxt = u - r / dT
        outside = (nxt <= lo) | (nxt >= hi) | ~np.isfinite(nxt)
        nxt = np.where(outside, 0.5 * (lo + hi), nxt)
        converged = (np.abs(nxt - u) <= tol) | (r == 0) | (hi - lo <= tol)
        u = np.where(done, u, nxt)
        done |= converged
        if done.all():
            return u
    raise SolverError("inner root solve did not converge")


def adjust_face(g: PatternGraph, k: FaceValues, f: str, target: float, tol: float = 1e-13) -> float:
    """New curvature of face ``f`` making its total equal ``target``, others fixed."""
    karr = face_array(g, k)
    if f not in g.face_index:
        raise KeyError(f"unknown face {f!r}")
    faces = np.array([g.face_index[f]], dtype=np.intp)
    u = _adjust(g, karr, faces, np.array([float(target)]), tol)
    return float(np.exp(u[0]))


# -- outer iteration -----------------------------------------------------------


def _sweep(g: PatternGraph, k: np.ndarray, t: np.ndarray, mode: Mode, tol: float) -> np.ndarray:
    if mode == "jacobi":
        faces = np.arange(g.n_faces, dtype=np.intp)
        return np.exp(_adjust(g, k, faces, t, tol))
    k = k.copy()
    for i in g.sweep_order:
        faces = np.array([i], dtype=np.intp)
        k[i] = math.exp(_adjust(g, k, faces, t[faces], tol)[0])
    return k


def iterate_once(g: PatternGraph, k: FaceValues, t: FaceValues, mode: Mode = "jacobi", tol_inner: float = 1e-13) -> CurvatureVector:
    karr = face_array(g, k)
    tarr = face_array(g, t, "targets")
    return CurvatureVector(g.face_ids, _sweep(g, karr, tarr, mode, tol_inner))


def _row_contraction(g: PatternGraph, k: np.ndarray, k_adj: np.ndarray) -> np.ndarray:
    """Per-face ratio of off-diagonal to diagonal partials at ``Psi_i(u)``."""
    inc = g.incidence
    k_own = k_adj[inc.face]
    k_nbr = np.where(inc.self_adjacent, k_own, k[inc.neighbor])
    d_own, d_cross = arc_partials(k_own, k_nbr, inc.theta)
    diag = np.bincount(inc.face, weights=d_own + np.where(inc.self_adjacent, d_cross, 0.0), minlength=g.n_faces)
    off = np.bincount(inc.face, weights=np.where(inc.self_adjacent, 0.0, np.abs(d_cross)), minlength=g.n_faces)
    return off / diag


def estimate_contraction(g: PatternGraph, k: FaceValues, t: FaceValues, tol_inner: float = 1e-13) -> float:
    """Pointwise contraction estimate of the Jacobi map at ``k``.

    For each face the row ``sum_{j != i} |dT_i/du_j| / (dT_i/du_i)`` is
    evaluated after face ``i`` alone has been adjusted to its target; the
    maximum over faces bounds the sup-norm Lipschitz constant locally.
    """
    karr = face_array(g, k)
    tarr = face_array(g, t, "targets")
    k_adj = np.exp(_adjust(g, karr, np.arange(g.n_faces, dtype=np.intp), tarr, tol_inner))
    lam = float(_row_contraction(g, karr, k_adj).max())
    if lam >= 1.0:
        log.warning("contraction estimate %.6g >= 1 at this point", lam)
    return lam


def merge_max(k1: CurvatureVector, k2: CurvatureVector) -> CurvatureVector:
    if k1.face_ids != k2.face_ids:
        raise ValueError("curvature vectors have different face sets")
    return CurvatureVector(k1.face_ids, np.maximum(k1.values, k2.values))


def is_subpattern(g: PatternGraph, k: FaceValues, t: FaceValues, slack: float = 0.0) -> bool:
    return bool((totals(g, face_array(g, k)) <= face_array(g, t, "targets") + slack).all())


def initial_subpattern(g: PatternGraph, t: FaceValues, check: bool = True) -> CurvatureVector:
    """Uniform curvature small enough that every face total stays below target.

    The uniform value is halved from 1 until every arc carries at most
    ``min(t) / d``, where ``d`` bounds the number of arcs on any face (and the
    vertex degree, when vertices are known).
    """
    tarr = face_array(g, t, "targets")
    if check:
        result = feasibility.check(g, tarr)
        if not result.feasible:
            raise InfeasibleTargetError(result)
    d = int(g.face_degree.max())
    if g.has_vertices:
        d = max(d, max(g.vertex_degree.values()))
    bound = tarr.min() / d
    inc = g.incidence
    k0 = 1.0
    while True:
        arcs = arc_total_curvature(np.full(inc.face.shape, k0), np.full(inc.face.shape, k0), inc.theta)
        if (arcs <= bound).all():
            break
        k0 *= 0.5
        if k0 < K_MIN:
            raise SolverError("could not shrink curvatures into a subpattern")
    k = np.full(g.n_faces, k0)
    if not (totals(g, k) <= tarr).all():
        raise SolverError("uniform start failed the subpattern check")
    return CurvatureVector(g.face_ids, k)


def _initial(g: PatternGraph, t: np.ndarray, init: Init) -> np.ndarray:
    if isinstance(init, str):
        if init != "subpattern":
            raise ValueError(f"unknown init {init!r}")
        return initial_subpattern(g, t, check=False).values
    if isinstance(init, (int, float)):
        return face_array(g, np.full(g.n_faces, float(init)))
    return face_array(g, init)


def solve(g: PatternGraph, t: FaceValues, config: SolverConfig | None = None) -> tuple[CurvatureVector, SolveTrace]:
    """Iterate the adjustment map from the configured start until the totals match.

    Raises :class:`InfeasibleTargetError` before iterating when the targets
    are not admissible. Non-convergence is reported through ``trace.status``.
    """
    config = config or SolverConfig()
    tarr = face_array(g, t, "targets")
    result = feasibility.check(g, tarr)
    if not result.feasible:
        raise InfeasibleTargetError(result)

    k = _initial(g, tarr, config.init)
    T = totals(g, k)
    if config.monotone == "up" and not (T <= tarr).all():
        raise ValueError("start is not a subpattern of the targets")
    if config.monotone == "down" and not (T >= tarr).all():
        raise ValueError("start is not a superpattern of the targets")

    trace = SolveTrace(initial_residual=float(np.abs(T - tarr).max()))
    if trace.initial_residual < config.tol_T:
        trace.status = "converged"
        return CurvatureVector(g.face_ids, k), trace

    for _ in range(config.max_outer):
        try:
            k_new = _sweep(g, k, tarr, config.mode, config.tol_inner)
        except (ValueError, SolverError) as exc:
            trace.status, trace.message = "error", str(exc)
            return CurvatureVector(g.face_ids, k), trace
        if config.mode == "jacobi":
            lam = float(_row_contraction(g, k, k_new).max())
        else:
            lam = math.nan
        T = totals(g, k_new)
        u_old, u_new = np.log(k), np.log(k_new)
        trace.records.append(
            IterationRecord(
                residual=float(np.abs(T - tarr).max()),
                monotone_up=bool((u_new >= u_old - MONOTONE_SLACK).all()),
                monotone_down=bool((u_new <= u_old + MONOTONE_SLACK).all()),
                contraction=lam,
                k=k_new.copy() if config.keep_snapshots else None,
            )
        )
        stagnant = np.array_equal(k_new, k)
        k = k_new
        if trace.records[-1].residual < config.tol_T:
            trace.status = "converged"
            return CurvatureVector(g.face_ids, k), trace
        if stagnant:
            log.warning("curvatures stagnated with residual %.3g", trace.records[-1].residual)
            trace.status, trace.message = "error", "curvatures stagnated above tolerance"
            return CurvatureVector(g.face_ids, k), trace

    trace.status = "max-iterations"
    trace.message = f"no convergence within {config.max_outer} iterations"
    return CurvatureVector(g.face_ids, k), trace
