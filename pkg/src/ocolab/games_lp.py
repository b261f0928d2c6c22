"""Zero-sum games: normalized payoff matrices, multiplicative-weights self-play
against best responses, and duality-gap certificates.

The row player minimizes x^T A y and the column player maximizes it.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, DimensionMismatch


class GameMatrix:
    """Payoff matrix with an affine map of its entries onto [0, 1].

    ``a`` is the normalized matrix; ``raw`` keeps the original. A constant
    matrix normalizes to zeros with unit scale.
    """

    def __init__(self, a):
        raw = np.atleast_2d(np.asarray(a, dtype=float))
        if raw.ndim != 2 or raw.size == 0:
            raise DimensionMismatch("payoff matrix must be a nonempty 2-d array")
        if not np.all(np.isfinite(raw)):
            raise ValueError("payoff entries must be finite")
        self.raw = raw
        self.offset = float(raw.min())
        span = float(raw.max()) - self.offset
        self.scale = span if span > 0 else 1.0
        self.a = (raw - self.offset) / self.scale

    @property
    def shape(self):
        return self.a.shape

    def to_original(self, value):
        return self.offset + self.scale * value

    def gap_to_original(self, gap):
        return self.scale * gap

    @classmethod
    def from_text(cls, text):
        """First line "n m", then n rows of m reals."""
        lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or len(lines[0]) != 2:
            raise ConfigInvalid("first line must be 'n m'", field="header")
        n, m = int(lines[0][0]), int(lines[0][1])
        rows = lines[1:]
        if len(rows) != n or any(len(r) != m for r in rows):
            raise ConfigInvalid(f"expected {n} rows of {m} values", field="matrix")
        return cls(np.array(rows, dtype=float))

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())


def rock_paper_scissors():
    """Row loss matrix; rows rock/paper/scissors, columns scissors/paper/rock."""
    return np.array([[-1.0, 1.0, 0.0],
                     [1.0, 0.0, -1.0],
                     [0.0, -1.0, 1.0]])


def _check_strategy(p, size):
    p = np.asarray(p, dtype=float)
    if p.shape != (size,):
        raise DimensionMismatch(f"strategy of length {p.size} for dimension {size}")
    return p


def best_response_col(a, x):
    """Pure column maximizing x^T A e_j; ties to the lowest index."""
    a = np.asarray(a, dtype=float)
    x = _check_strategy(x, a.shape[0])
    payoff = x @ a
    j = int(np.argmax(payoff))
    return j, float(payoff[j])


def best_response_row(a, y):
    """Pure row minimizing e_i^T A y; ties to the lowest index."""
    a = np.asarray(a, dtype=float)
    y = _check_strategy(y, a.shape[1])
    payoff = a @ y
    i = int(np.argmin(payoff))
    return i, float(payoff[i])


@dataclass
class EquilibriumCertificate:
    x_bar: np.ndarray
    y_bar: np.ndarray
    primal: float
    dual: float
    gap: float
    T: int
    eta: float
    mode: str
    played_average: float = float("nan")
    bound: float = float("nan")
    original: dict = field(default_factory=dict)

    @property
    def value(self):
        return self.primal

    @property
    def realized_constant(self):
        """gap * sqrt(T / ln n); the certified constant is sqrt 2."""
        n = self.x_bar.size
        return self.gap * math.sqrt(self.T / math.log(n)) if n > 1 else 0.0

    def chain_holds(self, tol=1e-12):
        """primal <= played average <= dual + bound (the certificate chain)."""
        return (self.primal <= self.played_average + tol
                and self.played_average <= self.dual + self.bound + tol)

    def to_csv(self, seed=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["field", "value"])
        w.writerow(["mode", self.mode])
        w.writerow(["T", self.T])
        w.writerow(["eta", repr(self.eta)])
        w.writerow(["seed", "" if seed is None else seed])
        w.writerow(["primal", repr(self.primal)])
        w.writerow(["dual", repr(self.dual)])
        w.writerow(["gap", repr(self.gap)])
        w.writerow(["bound", repr(self.bound)])
        w.writerow(["played_average", repr(self.played_average)])
        for k, v in sorted(self.original.items()):
            w.writerow([f"original_{k}", repr(v)])
        for i, v in enumerate(self.x_bar):
            w.writerow([f"x_bar_{i}", repr(float(v))])
        for j, v in enumerate(self.y_bar):
            w.writerow([f"y_bar_{j}", repr(float(v))])
        return buf.getvalue()


def _certify(a, x_bar, y_bar):
    primal = float(np.max(x_bar @ a))
    dual = float(np.min(a @ y_bar))
    return primal, dual


def simple_lp_eta(n, T):
    """sqrt(log n / (2 T)) for gradients bounded by 1 in sup norm."""
    return math.sqrt(math.log(n) / (2.0 * T)) if n > 1 else 1.0


def simple_lp_bound(n, T):
    return math.sqrt(2.0 * math.log(n) / T)


def simple_lp(game, T, eta=None, mode="best_response"):
    """Multiplicative weights for the row player against a best-responding column.

    ``mode="hedge"`` lets the column player run multiplicative weights too.
    Returns an EquilibriumCertificate on the normalized matrix; values mapped
    back to the original payoff scale are in ``certificate.original``.
    """
    if not isinstance(game, GameMatrix):
        game = GameMatrix(game)
    if T < 1:
        raise ValueError("T must be at least 1")
    a = game.a
    n, m = a.shape
    eta = simple_lp_eta(n, T) if eta is None else float(eta)
    eta_col = simple_lp_eta(m, T)
    log_x = np.zeros(n)
    log_y = np.zeros(m)
    x_sum = np.zeros(n)
    y_sum = np.zeros(m)
    played = 0.0
    for _ in range(T):
        x = np.exp(log_x - log_x.max())
        x /= x.sum()
        if mode == "best_response":
            j, _ = best_response_col(a, x)
            y = np.zeros(m)
            y[j] = 1.0
        elif mode == "hedge":
            y = np.exp(log_y - log_y.max())
            y /= y.sum()
        else:
            raise ValueError(f"unknown mode {mode}")
        x_sum += x
        y_sum += y
        played += float(x @ a @ y)
        log_x -= eta * (a @ y)
        if mode == "hedge":
            log_y += eta_col * (x @ a)
    x_bar, y_bar = x_sum / T, y_sum / T
    primal, dual = _certify(a, x_bar, y_bar)
    cert = EquilibriumCertificate(x_bar, y_bar, primal, dual, primal - dual, T, eta, mode,
                                  played / T, simple_lp_bound(n, T) if n > 1 else 0.0)
    cert.original = {"primal": game.to_original(primal), "dual": game.to_original(dual),
                     "gap": game.gap_to_original(primal - dual)}
    return cert


def minimax_check(game, T):
    """Estimate the row value from both sides and compare.

    The row-side run bounds lambda_R from above (its primal), the column-side
    run (row player best-responding to column weights on -A^T) bounds lambda_C
    from below. Returns a dict with both estimates and the agreement test.
    """
    if not isinstance(game, GameMatrix):
        game = GameMatrix(game)
    a = game.a
    n, m = a.shape
    row = simple_lp(game, T)
    # column player minimizes (1 - A)^T in normalized units
    col = simple_lp(GameMatrix(1.0 - a.T), T)
    lam_r = row.primal
    lam_c = 1.0 - col.original["primal"]
    bound = max(simple_lp_bound(n, T) if n > 1 else 0.0, simple_lp_bound(m, T) if m > 1 else 0.0)
    return {
        "lambda_R": lam_r,
        "lambda_C": lam_c,
        "difference": abs(lam_r - lam_c),
        "tolerance": 2.0 * bound,
        "agree": abs(lam_r - lam_c) <= 2.0 * bound + 1e-9,
        "weak_duality": lam_r >= lam_c - 1e-9,
        "row_certificate": row,
        "col_certificate": col,
    }


def grid_value(a, steps=200):
    """Brute-force min over a grid of row mixed strategies (2 rows) of max_j x^T A e_j."""
    a = np.asarray(a, dtype=float)
    if a.shape[0] != 2:
        raise DimensionMismatch("grid search supports two rows")
    p = np.linspace(0.0, 1.0, steps + 1)
    xs = np.stack([p, 1.0 - p], axis=1)
    vals = (xs @ a).max(axis=1)
    k = int(np.argmin(vals))
    return float(vals[k]), xs[k]
