import itertools
import sys

import numpy as np
import pytest
from scipy.optimize import minimize


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_psd(rng, n, floor=0.0):
    g = rng.standard_normal((n, n))
    return g @ g.T + floor * np.eye(n)


def slsqp_crp(r, mix):
    """Independent solver: SLSQP over the simplex weights before mixing."""
    n = r.shape[1]

    def to_x(p):
        return mix / n + (1 - mix) * p

    def obj(p):
        return -np.sum(np.log(r @ to_x(p)))

    def grad(p):
        return -(1 - mix) * (r / (r @ to_x(p))[:, None]).sum(axis=0)

    res = minimize(obj, np.full(n, 1 / n), jac=grad, method="SLSQP",
                   bounds=[(0, 1)] * n, constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1}],
                   options={"ftol": 1e-15, "maxiter": 1000})
    return to_x(np.clip(res.x, 0, 1) / np.clip(res.x, 0, 1).sum()), -res.fun


def active_set_simplex_qp(y, a=None):
    """Enumerate supports; solve the equality-constrained QP on each; keep the best feasible."""
    n = y.size
    a = np.eye(n) if a is None else a
    best, best_val = None, np.inf
    for k in range(1, n + 1):
        for supp in itertools.combinations(range(n), k):
            s = list(supp)
            h = a[np.ix_(s, s)]
            rhs = a[s, :] @ y
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = h
            kkt[:k, k] = kkt[k, :k] = 1.0
            sol = np.linalg.solve(kkt, np.append(rhs, 1.0))
            x = np.zeros(n)
            x[s] = sol[:k]
            if np.any(x < -1e-12):
                continue
            d = x - y
            val = d @ a @ d
            if val < best_val:
                best, best_val = x, val
    return best
