"""Weighted pattern graphs on closed oriented surfaces.

A pattern graph records, for every edge, the two faces whose disks overlap in
that edge's bigon (possibly the same face twice) and, for every face, the
multiset of its boundary edges. Vertex data is optional: the solver only needs
the face/edge incidence, while vertex cone angles and boundary-cycle checks
need edge endpoints.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, NamedTuple

import numpy as np

from .spherical import HALF_PI


class PatternError(ValueError):
    """Base class for pattern ingestion failures."""


class PatternSyntaxError(PatternError):
    """Malformed document: bad JSON, wrong field types, unknown fields."""

    def __init__(self, message: str, locus: str | None = None):
        self.locus = locus
        super().__init__(f"{locus}: {message}" if locus else message)


class PatternValidationError(PatternError):
    """Well-formed document describing an invalid graph."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        errors = [d for d in report.diagnostics if d.severity == "error"]
        super().__init__("; ".join(f"{d.location}: {d.message}" for d in errors))


@dataclass(frozen=True)
class Edge:
    id: str
    theta: float
    faces: tuple[str, str]
    ends: tuple[str, str] | None = None


@dataclass(frozen=True)
class Face:
    id: str
    edges: tuple[str, ...]


class Incidence(NamedTuple):
    """Flattened (face, boundary-edge occurrence) pairs in face/edge-list order."""

    face: np.ndarray
    neighbor: np.ndarray
    edge: np.ndarray
    theta: np.ndarray
    self_adjacent: np.ndarray


@dataclass(frozen=True)
class PatternGraph:
    edges: tuple[Edge, ...]
    faces: tuple[Face, ...]
    vertices: tuple[str, ...] | None = None

    @cached_property
    def face_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.faces)

    @cached_property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.edges)

    @cached_property
    def face_index(self) -> dict[str, int]:
        return {fid: i for i, fid in enumerate(self.face_ids)}

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {eid: i for i, eid in enumerate(self.edge_ids)}

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def thetas(self) -> np.ndarray:
        return np.array([e.theta for e in self.edges], dtype=float)

    @cached_property
    def edge_sides(self) -> np.ndarray:
        """``(|E|, 2)`` array of face indices on either side of each edge."""
        fi = self.face_index
        return np.array([[fi[e.faces[0]], fi[e.faces[1]]] for e in self.edges], dtype=np.intp)

    @cached_property
    def incidence(self) -> Incidence:
        fi, ei = self.face_index, self.edge_index
        face, nbr, edge = [], [], []
        for f in self.faces:
            for eid in f.edges:
                a, b = self.edges[ei[eid]].faces
                face.append(fi[f.id])
                nbr.append(fi[b] if a == f.id else fi[a])
                edge.append(ei[eid])
        face = np.array(face, dtype=np.intp)
        nbr = np.array(nbr, dtype=np.intp)
        edge = np.array(edge, dtype=np.intp)
        return Incidence(face, nbr, edge, self.thetas[edge], face == nbr)

    @cached_property
    def face_degree(self) -> np.ndarray:
        return np.bincount(self.incidence.face, minlength=self.n_faces)

    @cached_property
    def face_capacity(self) -> np.ndarray:
        """Sum of ``2*theta`` over the distinct boundary edges of each face."""
        cap = np.zeros(self.n_faces)
        for a, b, th in zip(self.edge_sides[:, 0], self.edge_sides[:, 1], self.thetas):
            cap[a] += 2.0 * th
            if b != a:
                cap[b] += 2.0 * th
        return cap

    @cached_property
    def sweep_order(self) -> np.ndarray:
        """Face indices in ascending face-id order."""
        return np.array(sorted(range(self.n_faces), key=lambda i: self.face_ids[i]), dtype=np.intp)

    @property
    def has_vertices(self) -> bool:
        return self.vertices is not None

    @cached_property
    def euler_characteristic(self) -> int | None:
        if self.vertices is None:
            return None
        return len(self.vertices) - len(self.edges) + len(self.faces)

    @cached_property
    def vertex_degree(self) -> dict[str, int]:
        if self.vertices is None:
            raise PatternError("graph carries no vertex data")
        deg = {v: 0 for v in self.vertices}
        for e in self.edges:
            for v in e.ends:
                deg[v] += 1
        return deg

    def face_map(self, values) -> dict[str, float]:
        return {fid: float(x) for fid, x in zip(self.face_ids, values)}


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning" | "info"
    location: str
    message: str


@dataclass
class ValidationReport:
    diagnostics: list[Diagnostic] = field(default_factory=list)
    euler_characteristic: int | None = None

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)

    def add(self, severity: str, location: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(severity, location, message))

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "euler_characteristic": self.euler_characteristic,
            "diagnostics": [
                {"severity": d.severity, "location": d.location, "message": d.message}
                for d in self.diagnostics
            ],
        }


def validate(g: PatternGraph) -> ValidationReport:
    """Check every structural invariant of ``g``; never raises."""
    rep = ValidationReport()
    if not g.faces:
        rep.add("error", "faces", "at least one face required")
    if not g.edges:
        rep.add("error", "edges", "at least one edge required")

    for kind, ids in (("vertex", g.vertices or ()), ("edge", g.edge_ids), ("face", g.face_ids)):
        for ident, n in Counter(ids).items():
            if n > 1:
                rep.add("error", f"{kind} {ident}", f"duplicate id ({n} times)")

    face_ids = set(g.face_ids)
    edge_ids = set(g.edge_ids)
    for e in g.edges:
        if not (math.isfinite(e.theta) and 0.0 < e.theta <= HALF_PI):
            rep.add("error", f"edge {e.id}", f"theta {e.theta!r} outside (0, pi/2]")
        for fid in e.faces:
            if fid not in face_ids:
                rep.add("error", f"edge {e.id}", f"side face {fid!r} does not exist")

    side_count = Counter()
    for e in g.edges:
        for fid in e.faces:
            side_count[(e.id, fid)] += 1
    listed = Counter()
    for f in g.faces:
        if not f.edges:
            rep.add("error", f"face {f.id}", "empty boundary edge list")
        for eid in f.edges:
            if eid not in edge_ids:
                rep.add("error", f"face {f.id}", f"boundary edge {eid!r} does not exist")
            listed[(eid, f.id)] += 1
    for key in sorted(set(side_count) | set(listed)):
        eid, fid = key
        if eid in edge_ids and fid in face_ids and side_count[key] != listed[key]:
            rep.add(
                "error",
                f"edge {eid}",
                f"listed {listed[key]} time(s) by face {fid} but has it as side {side_count[key]} time(s)",
            )

    if g.vertices is None:
        if any(e.ends is not None for e in g.edges):
            rep.add("error", "vertices", "edge endpoints given but no vertex list")
        else:
            rep.add("info", "vertices", "no vertex data; Euler characteristic and boundary cycles unchecked")
        return rep

    vset = set(g.vertices)
    ends_ok = True
    for e in g.edges:
        if e.ends is None:
            rep.add("error", f"edge {e.id}", "missing endpoints while vertex list is present")
            ends_ok = False
            continue
        for v in e.ends:
            if v not in vset:
                rep.add("error", f"edge {e.id}", f"endpoint {v!r} does not exist")
                ends_ok = False

    chi = g.euler_characteristic
    rep.euler_characteristic = chi
    if chi % 2 != 0 or chi > 2:
        rep.add("error", "graph", f"Euler characteristic {chi} is not an even integer <= 2")

    if not ends_ok:
        return rep
    for v, d in g.vertex_degree.items():
        if d == 0:
            rep.add("warning", f"vertex {v}", "isolated vertex (cone angle 0)")
    if rep.ok:
        for f in g.faces:
            if not _closed_walk(g, f):
                rep.add("error", f"face {f.id}", "boundary edges do not form one closed cycle")
    return rep


def _closed_walk(g: PatternGraph, f: Face) -> bool:
    # one closed walk through every boundary occurrence: connected + even degrees
    adj = defaultdict(list)
    deg = Counter()
    ei = g.edge_index
    for eid in f.edges:
        a, b = g.edges[ei[eid]].ends
        deg[a] += 1
        deg[b] += 1
        adj[a].append(b)
        adj[b].append(a)
    if any(d % 2 for d in deg.values()):
        return False
    start = next(iter(adj))
    seen, stack = {start}, [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(adj)


def vertex_cone_coefficient(g: PatternGraph, v: str) -> float:
    """Cone angle at ``v``: sum of ``pi - theta`` over edge ends at ``v``."""
    if g.vertices is None:
        raise PatternError("graph carries no vertex data")
    if v not in g.vertex_degree:
        raise KeyError(f"unknown vertex {v!r}")
    total = 0.0
    for e in g.edges:
        for end in e.ends:
            if end == v:
                total += math.pi - e.theta
    return total


def vertex_cone_angles(g: PatternGraph) -> dict[str, float]:
    out = {v: 0.0 for v in g.vertex_degree}
    for e in g.edges:
        for end in e.ends:
            out[end] += math.pi - e.theta
    return out


def generate_torus_grid(n: int, theta: float = HALF_PI) -> PatternGraph:
    """``n`` x ``n`` quadrilateral grid on the torus with uniform edge weight."""
    if int(n) != n or n < 3:
        raise ValueError(f"n must be an integer >= 3, got {n!r}")
    if not (0.0 < theta <= HALF_PI):
        raise ValueError(f"theta {theta!r} outside (0, pi/2]")
    n = int(n)

    def vid(i, j):
        return f"v{i % n}_{j % n}"

    def fid(i, j):
        return f"f{i % n}_{j % n}"

    vertices = tuple(vid(i, j) for j in range(n) for i in range(n))
    edges = []
    for j in range(n):
        for i in range(n):
            # horizontal edge from (i, j) to (i+1, j): faces (i, j) above and (i, j-1) below
            edges.append(Edge(f"h{i}_{j}", theta, (fid(i, j), fid(i, j - 1)), (vid(i, j), vid(i + 1, j))))
            # vertical edge from (i, j) to (i, j+1): faces (i, j) right and (i-1, j) left
            edges.append(Edge(f"w{i}_{j}", theta, (fid(i, j), fid(i - 1, j)), (vid(i, j), vid(i, j + 1))))
    faces = tuple(
        Face(fid(i, j), (f"h{i}_{j}", f"w{(i + 1) % n}_{j}", f"h{i}_{(j + 1) % n}", f"w{i}_{j}"))
        for j in range(n)
        for i in range(n)
    )
    return PatternGraph(tuple(edges), faces, vertices)


# -- file format --------------------------------------------------------------

_TOP_FIELDS = {"vertices", "edges", "faces", "targets"}
_EDGE_FIELDS = {"id", "v", "theta", "faces"}
_FACE_FIELDS = {"id", "edges"}


def _expect(cond: bool, message: str, locus: str) -> None:
    if not cond:
        raise PatternSyntaxError(message, locus)


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _id_pair(x: Any, locus: str) -> tuple[str, str]:
    _expect(isinstance(x, list) and len(x) == 2 and all(isinstance(s, str) for s in x),
            "expected a pair of string ids", locus)
    return (x[0], x[1])


def build_pattern(doc: Any) -> tuple[PatternGraph, dict[str, float] | None]:
    """Turn a decoded document into a graph without checking graph invariants."""
    _expect(isinstance(doc, dict), "top level must be an object", "$")
    unknown = set(doc) - _TOP_FIELDS
    _expect(not unknown, f"unknown field(s) {sorted(unknown)}", "$")
    _expect("edges" in doc and "faces" in doc, "fields 'edges' and 'faces' are required", "$")

    vertices = None
    if "vertices" in doc:
        vs = doc["vertices"]
        _expect(isinstance(vs, list) and all(isinstance(v, str) for v in vs),
                "expected an array of string ids", "vertices")
        vertices = tuple(vs)

    _expect(isinstance(doc["edges"], list), "expected an array", "edges")
    edges = []
    for n, rec in enumerate(doc["edges"]):
        loc = f"edges[{n}]"
        _expect(isinstance(rec, dict), "expected an object", loc)
        unknown = set(rec) - _EDGE_FIELDS
        _expect(not unknown, f"unknown field(s) {sorted(unknown)}", loc)
        for key in ("id", "theta", "faces"):
            _expect(key in rec, f"missing field {key!r}", loc)
        _expect(isinstance(rec["id"], str), "expected a string", f"{loc}.id")
        _expect(_is_number(rec["theta"]), "expected a number", f"{loc}.theta")
        ends = _id_pair(rec["v"], f"{loc}.v") if "v" in rec else None
        edges.append(Edge(rec["id"], float(rec["theta"]), _id_pair(rec["faces"], f"{loc}.faces"), ends))

    _expect(isinstance(doc["faces"], list), "expected an array", "faces")
    faces = []
    for n, rec in enumerate(doc["faces"]):
        loc = f"faces[{n}]"
        _expect(isinstance(rec, dict), "expected an object", loc)
        unknown = set(rec) - _FACE_FIELDS
        _expect(not unknown, f"unknown field(s) {sorted(unknown)}", loc)
        for key in ("id", "edges"):
            _expect(key in rec, f"missing field {key!r}", loc)
        _expect(isinstance(rec["id"], str), "expected a string", f"{loc}.id")
        _expect(isinstance(rec["edges"], list) and all(isinstance(s, str) for s in rec["edges"]),
                "expected an array of string ids", f"{loc}.edges")
        faces.append(Face(rec["id"], tuple(rec["edges"])))

    targets = None
    if "targets" in doc:
        t = doc["targets"]
        _expect(isinstance(t, dict), "expected an object", "targets")
        for key, val in t.items():
            _expect(_is_number(val), "expected a number", f"targets.{key}")
        targets = {key: float(val) for key, val in t.items()}
    return PatternGraph(tuple(edges), tuple(faces), vertices), targets


def decode(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise PatternSyntaxError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None


def read_pattern(text: str) -> tuple[PatternGraph, dict[str, float] | None]:
    """Parse and fully validate a pattern document; returns ``(graph, targets)``."""
    g, targets = build_pattern(decode(text))
    report = validate(g)
    if not report.ok:
        raise PatternValidationError(report)
    if targets is not None and set(targets) != set(g.face_ids):
        missing = sorted(set(g.face_ids) - set(targets))
        extra = sorted(set(targets) - set(g.face_ids))
        raise PatternSyntaxError(f"targets do not match faces (missing {missing}, unknown {extra})", "targets")
    return g, targets


def parse_pattern(text: str) -> PatternGraph:
    return read_pattern(text)[0]


def pattern_to_dict(g: PatternGraph, targets: Mapping[str, float] | None = None) -> dict:
    doc: dict[str, Any] = {}
    if g.vertices is not None:
        doc["vertices"] = list(g.vertices)
    edges = []
    for e in g.edges:
        rec: dict[str, Any] = {"id": e.id}
        if e.ends is not None:
            rec["v"] = list(e.ends)
        rec["theta"] = e.theta
        rec["faces"] = list(e.faces)
        edges.append(rec)
    doc["edges"] = edges
    doc["faces"] = [{"id": f.id, "edges": list(f.edges)} for f in g.faces]
    if targets is not None:
        doc["targets"] = {fid: float(targets[fid]) for fid in g.face_ids}
    return doc


def serialize_pattern(g: PatternGraph, targets: Mapping[str, float] | None = None) -> str:
    return json.dumps(pattern_to_dict(g, targets), indent=1) + "\n"
