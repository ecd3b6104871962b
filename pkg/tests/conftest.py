import math

import numpy as np
import pytest

from circpat.graph import Edge, Face, PatternGraph

_ACCEPTANCE: list[str] = []


def random_pattern(rng, n_faces, n_edges=None, self_prob=0.1):
    """Random face/edge incidence structure without vertex data.

    Every face gets at least one edge; extra edges join random face pairs,
    occasionally a face to itself.
    """
    if n_edges is None:
        n_edges = int(rng.integers(n_faces, 3 * n_faces + 1))
    n_edges = max(n_edges, n_faces)
    faces = [f"f{i:02d}" for i in range(n_faces)]
    sides = []
    for i in range(n_faces):
        if n_faces == 1 or rng.random() < self_prob:
            sides.append((i, i))
        else:
            j = int(rng.integers(n_faces - 1))
            sides.append((i, j + (j >= i)))
    while len(sides) < n_edges:
        a = int(rng.integers(n_faces))
        b = a if rng.random() < self_prob else int(rng.integers(n_faces))
        sides.append((a, b))
    thetas = rng.uniform(0.05, math.pi / 2, len(sides))
    edges = tuple(
        Edge(f"e{n:03d}", float(th), (faces[a], faces[b])) for n, ((a, b), th) in enumerate(zip(sides, thetas))
    )
    lists = {f: [] for f in faces}
    for e in edges:
        lists[e.faces[0]].append(e.id)
        lists[e.faces[1]].append(e.id)
    return PatternGraph(edges, tuple(Face(f, tuple(lists[f])) for f in faces))


def log_uniform(rng, lo, hi, size=None):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.call_report = rep


@pytest.fixture
def criterion(request):
    """Records one PASS/FAIL line per acceptance criterion for the summary."""
    info = {"detail": ""}
    yield info
    rep = getattr(request.node, "call_report", None)
    verdict = "PASS" if rep is not None and rep.passed else "FAIL"
    name = request.node.name
    _ACCEPTANCE.append(f"[{verdict}] {name}: {info['detail']}")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
