"""Per-face total curvatures, their Jacobian, and Gauss-Bonnet bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np
from scipy import sparse

from .graph import PatternGraph, vertex_cone_angles
from .spherical import (
    K_MAX,
    K_MIN,
    DomainError,
    arc_angle,
    arc_partials,
    arc_total_curvature,
    radius_of,
)

DENSE_MAX_FACES = 64


@dataclass(frozen=True)
class CurvatureVector:
    """Positive per-face values aligned with ``face_ids``; ``u`` is the log view."""

    face_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.face_ids),):
            raise ValueError(f"expected {len(self.face_ids)} values, got shape {v.shape}")
        bad = ~np.isfinite(v) | (v < K_MIN) | (v > K_MAX)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DomainError(f"face {self.face_ids[i]}: value {v[i]!r} outside [{K_MIN:g}, {K_MAX:g}]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_log(cls, face_ids, u) -> "CurvatureVector":
        return cls(tuple(face_ids), np.exp(np.asarray(u, dtype=float)))

    @property
    def u(self) -> np.ndarray:
        return np.log(self.values)

    def as_dict(self) -> dict[str, float]:
        return {fid: float(x) for fid, x in zip(self.face_ids, self.values)}

    def __getitem__(self, face_id: str) -> float:
        return float(self.values[self.face_ids.index(face_id)])


FaceValues = Union[CurvatureVector, Mapping[str, float], np.ndarray, list]


def face_array(g: PatternGraph, values: FaceValues, name: str = "k") -> np.ndarray:
    """Coerce per-face data to an array in ``g``'s face order, checking the domain."""
    if isinstance(values, CurvatureVector):
        if values.face_ids != g.face_ids:
            raise ValueError(f"{name}: face set does not match the graph")
        return values.values
    if isinstance(values, Mapping):
        if set(values) != set(g.face_ids):
            missing = sorted(set(g.face_ids) - set(values))
            extra = sorted(set(values) - set(g.face_ids))
            raise ValueError(f"{name}: face set mismatch (missing {missing}, unknown {extra})")
        values = [values[fid] for fid in g.face_ids]
    return CurvatureVector(g.face_ids, np.asarray(values, dtype=float)).values


def _arc_curvatures(g: PatternGraph, k: np.ndarray) -> np.ndarray:
    inc = g.incidence
    return arc_total_curvature(k[inc.face], k[inc.neighbor], inc.theta)


def totals(g: PatternGraph, k: np.ndarray) -> np.ndarray:
    """Unchecked array version of :func:`total_curvatures`."""
    return np.bincount(g.incidence.face, weights=_arc_curvatures(g, k), minlength=g.n_faces)


def total_curvatures(g: PatternGraph, k: FaceValues) -> np.ndarray:
    """Total geodesic curvature of every face boundary, in face order."""
    return totals(g, face_array(g, k))


def jacobian(g: PatternGraph, k: FaceValues, dense: bool | None = None):
    """Matrix of ``dT_i/du_j``; dense for small patterns unless ``dense`` says otherwise."""
    k = face_array(g, k)
    inc = g.incidence
    d_own, d_cross = arc_partials(k[inc.face], k[inc.neighbor], inc.theta)
    rows = np.concatenate([inc.face, inc.face])
    cols = np.concatenate([inc.face, inc.neighbor])
    J = sparse.coo_matrix((np.concatenate([d_own, d_cross]), (rows, cols)), shape=(g.n_faces,) * 2).tocsr()
    if dense is None:
        dense = g.n_faces <= DENSE_MAX_FACES
    return J.toarray() if dense else J


def cone_angles(g: PatternGraph, k: np.ndarray) -> np.ndarray:
    inc = g.incidence
    angles = arc_angle(k[inc.face], k[inc.neighbor], inc.theta)
    return np.bincount(inc.face, weights=angles, minlength=g.n_faces)


def face_cone_angle(g: PatternGraph, k: FaceValues, f: str) -> float:
    """Cone angle at the centre of face ``f``'s disk (sum of arc central angles)."""
    if f not in g.face_index:
        raise KeyError(f"unknown face {f!r}")
    return float(cone_angles(g, face_array(g, k))[g.face_index[f]])


def bigon_areas(g: PatternGraph, k: np.ndarray) -> np.ndarray:
    a, b = g.edge_sides[:, 0], g.edge_sides[:, 1]
    th = g.thetas
    return 2.0 * th - arc_total_curvature(k[a], k[b], th) - arc_total_curvature(k[b], k[a], th)


@dataclass
class GeometryReport:
    face_ids: tuple[str, ...]
    edge_ids: tuple[str, ...]
    radius: np.ndarray
    curvature: np.ndarray
    cone_angle: np.ndarray
    disk_area: np.ndarray
    total_curvature: np.ndarray
    central_angles: np.ndarray  # (|E|, 2), one per side
    arc_curvatures: np.ndarray  # (|E|, 2)
    bigon_area: np.ndarray
    surface_area: float
    area_residual: float
    bigon_balance_residual: float
    gauss_bonnet_residual: float | None
    euler_characteristic: int | None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        faces = {
            fid: {
                "k": float(self.curvature[i]),
                "r": float(self.radius[i]),
                "cone_angle": float(self.cone_angle[i]),
                "disk_area": float(self.disk_area[i]),
                "total_curvature": float(self.total_curvature[i]),
            }
            for i, fid in enumerate(self.face_ids)
        }
        edges = {
            eid: {
                "central_angles": [float(x) for x in self.central_angles[n]],
                "arc_curvatures": [float(x) for x in self.arc_curvatures[n]],
                "bigon_area": float(self.bigon_area[n]),
            }
            for n, eid in enumerate(self.edge_ids)
        }
        out = {
            "faces": faces,
            "edges": edges,
            "surface_area": self.surface_area,
            "area_residual": self.area_residual,
            "bigon_balance_residual": self.bigon_balance_residual,
            "euler_characteristic": self.euler_characteristic,
            "warnings": list(self.warnings),
        }
        if self.gauss_bonnet_residual is not None:
            out["gauss_bonnet_residual"] = self.gauss_bonnet_residual
        return out


def gauss_bonnet_report(g: PatternGraph, k: FaceValues) -> GeometryReport:
    """Intrinsic geometry of the pattern realizing ``k`` plus conservation residuals.

    Surface area is computed twice: as disk areas minus doubly-covered bigons,
    and as ``sum(alpha_f) - 2*sum(theta_e)``. With vertex data the global
    Gauss-Bonnet residual ``Area + sum_v K_v + sum_f K_f - 2*pi*chi`` is added.
    """
    k = face_array(g, k)
    r = radius_of(k)
    alpha = cone_angles(g, k)
    T = totals(g, k)
    disk_area = 2.0 * alpha * np.sin(0.5 * r) ** 2

    a, b = g.edge_sides[:, 0], g.edge_sides[:, 1]
    th = g.thetas
    central = np.stack([arc_angle(k[a], k[b], th), arc_angle(k[b], k[a], th)], axis=1)
    arcs = np.stack([arc_total_curvature(k[a], k[b], th), arc_total_curvature(k[b], k[a], th)], axis=1)
    lens = 2.0 * th - arcs[:, 0] - arcs[:, 1]

    area_cover = math.fsum(disk_area) - math.fsum(lens)
    area_angles = math.fsum(alpha) - 2.0 * math.fsum(th)
    balance = math.fsum(lens) - (2.0 * math.fsum(th) - math.fsum(T))

    warnings = []
    if (lens <= 0).any():
        warnings.append(f"{int((lens <= 0).sum())} bigon(s) with non-positive area")
    if not ((r > 0) & (r < 0.5 * math.pi)).all():
        warnings.append("radius outside (0, pi/2)")

    gb = None
    chi = g.euler_characteristic
    if chi is not None:
        defect_v = math.fsum(2.0 * math.pi - x for x in vertex_cone_angles(g).values())
        defect_f = math.fsum(2.0 * math.pi - alpha)
        gb = abs(area_angles + defect_v + defect_f - 2.0 * math.pi * chi)
    else:
        warnings.append("no vertex data; global Gauss-Bonnet residual omitted")

    return GeometryReport(
        face_ids=g.face_ids,
        edge_ids=g.edge_ids,
        radius=r,
        curvature=k,
        cone_angle=alpha,
        disk_area=disk_area,
        total_curvature=T,
        central_angles=central,
        arc_curvatures=arcs,
        bigon_area=lens,
        surface_area=area_angles,
        area_residual=abs(area_cover - area_angles),
        bigon_balance_residual=abs(balance),
        gauss_bonnet_residual=gb,
        euler_characteristic=chi,
        warnings=warnings,
    )
