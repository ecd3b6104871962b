"""Admissibility of prescribed face totals.

A target vector ``t`` is admissible when every nonempty face subset ``S``
satisfies ``sum_{f in S} t_f < sum_{e in E(S)} 2*theta_e``, where ``E(S)`` is
the set of edges touching ``S`` (an edge with both sides in ``S`` counts
once). The minimum of the right side minus the left side is the slack.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .curvature import FaceValues, face_array
from .graph import PatternGraph

BOUNDARY_TOL = 1e-12
BRUTEFORCE_MAX_FACES = 25
_CHUNK = 1 << 16
_SCALE = float(1 << 40)


@dataclass(frozen=True)
class FeasibilityResult:
    min_slack: float
    witness: tuple[str, ...]
    method: str

    @property
    def feasible(self) -> bool:
        return self.min_slack > BOUNDARY_TOL

    @property
    def status(self) -> str:
        if abs(self.min_slack) <= BOUNDARY_TOL:
            return "boundary"
        return "feasible" if self.feasible else "infeasible"

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "status": self.status,
            "min_slack": self.min_slack,
            "witness": list(self.witness),
            "method": self.method,
        }


def subset_slack(g: PatternGraph, t: FaceValues, subset) -> float:
    """Slack of one face subset (ids or indices)."""
    t = face_array(g, t, "targets")
    idx = {g.face_index[s] if isinstance(s, str) else int(s) for s in subset}
    if not idx:
        raise ValueError("subset must be nonempty")
    sides = g.edge_sides
    touched = np.isin(sides[:, 0], list(idx)) | np.isin(sides[:, 1], list(idx))
    return math.fsum(2.0 * g.thetas[touched]) - math.fsum(t[sorted(idx)])


def check_bruteforce(g: PatternGraph, t: FaceValues) -> FeasibilityResult:
    """Exact minimum slack by enumerating all ``2^|F| - 1`` nonempty subsets."""
    t = face_array(g, t, "targets")
    n = g.n_faces
    if n > BRUTEFORCE_MAX_FACES:
        raise ValueError(f"brute force limited to {BRUTEFORCE_MAX_FACES} faces, got {n}")
    sides = g.edge_sides
    weights = 2.0 * g.thetas
    shifts = np.arange(n, dtype=np.int64)

    best = math.inf
    best_masks: list[np.ndarray] = []
    total = 1 << n
    for start in range(1, total, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(bool)
        touched = bits[:, sides[:, 0]] | bits[:, sides[:, 1]]
        slack = touched.astype(float) @ weights - bits.astype(float) @ t
        low = slack.min()
        if low < best:
            best, best_masks = low, [masks[slack == low]]
        elif low == best:
            best_masks.append(masks[slack == low])

    ties = np.concatenate(best_masks)
    witness = min(tuple(i for i in range(n) if (m >> i) & 1) for m in ties.tolist())
    # report the slack recomputed in exactly-rounded form so both methods compare cleanly
    slack = subset_slack(g, t, witness)
    return FeasibilityResult(slack, tuple(g.face_ids[i] for i in witness), "bruteforce")


def _scaled(x: float) -> int:
    return int(round(x * _SCALE))


def _closure_network(g: PatternGraph, t: np.ndarray) -> nx.DiGraph:
    # source -> face (gain t_f), face -> edge (infinite), edge -> sink (cost 2*theta_e).
    # Capacities are scaled integers: networkx decides saturation by exact
    # equality, which float flows do not reliably reach.
    n_f, n_e = g.n_faces, len(g.edges)
    src, sink = n_f + n_e, n_f + n_e + 1
    net = nx.DiGraph(source=src, sink=sink)
    net.add_nodes_from(range(n_f + n_e + 2))
    for i in range(n_f):
        net.add_edge(src, i, capacity=_scaled(t[i]))
    for n, (a, b) in enumerate(g.edge_sides.tolist()):
        net.add_edge(n_f + n, sink, capacity=_scaled(2.0 * g.thetas[n]))
        net.add_edge(a, n_f + n)
        net.add_edge(b, n_f + n)
    return net


def _forced_cut(net: nx.DiGraph, i: int, n_faces: int) -> tuple[int, ...]:
    src, sink = net.graph["source"], net.graph["sink"]
    forced = net.copy()
    del forced[src][i]["capacity"]  # missing capacity means infinite
    _, (source_side, _) = nx.minimum_cut(forced, src, sink)
    return tuple(sorted(v for v in source_side if v < n_faces))


def check_mincut(g: PatternGraph, t: FaceValues, threads: int | None = None) -> FeasibilityResult:
    """Minimum slack via maximum-closure min cuts, one per forced face.

    Selecting faces earns their targets and pays ``2*theta`` for every touched
    edge; forcing face ``i`` into the selection and taking the min cut yields
    the best subset containing ``i``. The minimum over all ``i`` is the slack.
    Cuts run on weights rounded to multiples of ``2**-40``; each candidate's
    slack is then recomputed exactly, so the reported value can exceed the true
    minimum by at most ``(|F| + |E|) * 2**-41``.
    """
    t = face_array(g, t, "targets")
    net = _closure_network(g, t)
    if threads is None:
        threads = int(os.environ.get("CPS_THREADS", "0") or 0)
    faces = range(g.n_faces)
    if threads > 0:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            subsets = list(pool.map(lambda i: _forced_cut(net, i, g.n_faces), faces))
    else:
        subsets = [_forced_cut(net, i, g.n_faces) for i in faces]

    best, witness = math.inf, ()
    for subset in subsets:
        slack = subset_slack(g, t, subset)
        if slack < best or (slack == best and subset < witness):
            best, witness = slack, subset
    return FeasibilityResult(best, tuple(g.face_ids[i] for i in witness), "mincut")


def check(g: PatternGraph, t: FaceValues, method: str = "auto") -> FeasibilityResult:
    if method == "auto":
        method = "bruteforce" if g.n_faces <= 20 else "mincut"
    if method == "bruteforce":
        return check_bruteforce(g, t)
    if method == "mincut":
        return check_mincut(g, t)
    raise ValueError(f"unknown method {method!r}")
