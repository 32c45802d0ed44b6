from __future__ import annotations

import numpy as np
import pytest

from ctqw_hitting.graph_model import FIXTURES, hamiltonian, random_connected_graph

I = 1j
S2 = 1 / np.sqrt(2)


# Reference hitting-probability / hitting-time matrices, transcribed verbatim
# as functions of the rate l. Final vertex index is 0-based.
def reference_P(key: tuple[str, int], l: float) -> np.ndarray:
    g, f = key
    if (g, f) in (("K2", 0), ("L3", 0), ("KL31", 2)):
        return np.eye(FIXTURES[g].n)
    if (g, f) in (("L3", 1),):
        return np.array([[0.5, 0, 0.5], [0, 1, 0], [0.5, 0, 0.5]])
    if (g, f) in (("KL31", 0), ("S4", 0)):
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0.5, 0.5], [0, 0, 0.5, 0.5]])
    if (g, f) in (("KL31", 1), ("S4", 1)):
        t = 1 / 3
        return np.array([[t, 0, t, t], [0, 1, 0, 0], [t, 0, t, t], [t, 0, t, t]])
    raise KeyError(key)


def reference_H(key: tuple[str, int], l: float) -> np.ndarray:
    g, f = key
    if (g, f) == ("K2", 0):
        return np.array([[2 / l, I / l], [-I / l, 2 / l + l / 2]])
    if (g, f) == ("L3", 0):
        return np.array([
            [3 / l, -1 / (2 * l) + I, 1 / (2 * l) - I / 2],
            [-1 / (2 * l) - I, l + 4 / l, l / 2 - 1 / (2 * l) + I / 2],
            [1 / (2 * l) + I / 2, l / 2 - 1 / (2 * l) - I / 2, 3 * l / 2 + 3 / l],
        ])
    if (g, f) == ("L3", 1):
        a, b, c = l / 8 + 9 / (8 * l), 1 / (4 * l) - I / 4, 1 / (4 * l) + I / 4
        return np.array([[a, b, a], [c, 2 / l, c], [a, b, a]])
    if (g, f) in (("KL31", 0), ("S4", 0)):
        a = 3 / (4 * l)
        d = l + 15 / (8 * l)
        return np.array([
            [3 / l, -1 / l + I, a + I / 2, a + I / 2],
            [-1 / l - I, l + 13 / (2 * l), l / 2 - 1 / l + I / 4, l / 2 - 1 / l + I / 4],
            [a - I / 2, l / 2 - 1 / l - I / 4, d, d],
            [a - I / 2, l / 2 - 1 / l - I / 4, d, d],
        ])
    if (g, f) in (("KL31", 1), ("S4", 1)):
        a, b, c = l / 18 + 8 / (9 * l), 1 / (3 * l) - I / 6, 1 / (3 * l) + I / 6
        return np.array([[a, b, a, a], [c, 2 / l, c, c], [a, b, a, a], [a, b, a, a]])
    if (g, f) == ("KL31", 2):
        return np.array([
            [l + 5 / l, -l / 2 - 1 / l - I / 2, 0, -l / 2 - I],
            [-l / 2 - 1 / l + I / 2, 5 / (2 * l) + 7 / l, -1 / l - 3 * I / 2, -l - 1 / l + I / 2],
            [0, -1 / l + 3 * I / 2, 4 / l, 1 / l],
            [l / 18 + 8 / (9 * l), -l - 1 / l - I / 2, 1 / l, l + 4 / l],
        ])
    raise KeyError(key)


REFERENCE_KEYS = [("K2", 0), ("L3", 0), ("L3", 1), ("KL31", 0), ("KL31", 1), ("KL31", 2), ("S4", 0), ("S4", 1)]

# Entry excluded from comparison: its reference value is not the conjugate of
# its mirror entry, so no Hermitian matrix can match it.
REFERENCE_EXCLUDED = {("KL31", 2): [(3, 0)]}


@pytest.fixture(scope="session")
def fixture_hamiltonians() -> dict[str, np.ndarray]:
    return {name: hamiltonian(g) for name, g in FIXTURES.items()}


def random_graphs(count: int, n_max: int, seed: int, n_min: int = 2):
    rng = np.random.default_rng(seed)
    return [
        random_connected_graph(int(rng.integers(n_min, n_max + 1)), rng, p=float(rng.uniform(0.1, 0.9)))
        for _ in range(count)
    ]


def basis_state(n: int, k: int) -> np.ndarray:
    psi = np.zeros(n, dtype=complex)
    psi[k] = 1.0
    return psi


# --- acceptance summary: one PASS/FAIL line per criterion -------------------

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "ran": False})
    if report.when == "call":
        entry["ran"] = True
    if report.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}")
