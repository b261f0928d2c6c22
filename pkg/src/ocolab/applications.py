"""End-to-end applications: portfolio selection, matrix completion and
online-to-batch conversion for linear classification."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, NonpositiveReturn
from .geometry import EuclideanBall, NuclearBall, Simplex, nuclear_norm, top_singular_pair
from .linalg_core import power_method
from .losses import Hinge, LogReturn
from .offline_opt import StepRule
from .online_learners import OCG, OGD, ONS, ocg_regret_bound, ons_regret_bound


# portfolio selection

def check_returns(returns):
    r = np.atleast_2d(np.asarray(returns, dtype=float))
    if r.shape[0] == 0:
        raise ConfigInvalid("price stream is empty", field="returns")
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise NonpositiveReturn("price ratios must be strictly positive")
    return r


def shannon_stream(T):
    """Two assets alternating (2, 1/2) and (1/2, 2)."""
    r = np.empty((T, 2))
    r[0::2] = (2.0, 0.5)
    r[1::2] = (0.5, 2.0)
    return r


def lognormal_stream(T, n, seed=0, drift=None, vol=0.05):
    """i.i.d. price ratios exp(drift + vol * z)."""
    rng = np.random.default_rng(seed)
    drift = np.zeros(n) if drift is None else np.asarray(drift, dtype=float)
    return np.exp(drift + vol * rng.standard_normal((T, n)))


def read_price_csv(path):
    """Header "date,asset1,...,assetN", then rows of positive price ratios."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0].strip().lower() != "date" or len(rows[0]) < 2:
        raise ConfigInvalid("price CSV header must be date,asset1,...", field="header")
    names = [h.strip() for h in rows[0][1:]]
    dates, data = [], []
    for k, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(names) + 1:
            raise ConfigInvalid(f"line {k} has {len(row)} fields", field="row")
        dates.append(row[0])
        try:
            data.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise ConfigInvalid(f"line {k}: {exc}", field="row") from None
    return dates, names, check_returns(np.array(data))


def log_wealth_objective(returns, x):
    return float(np.sum(np.log(returns @ x)))


@dataclass
class CRPSolution:
    x: np.ndarray
    log_wealth: float
    gap: float
    iterations: int
    method: str


def best_crp(returns, domain=None, tol=1e-10, max_iter=1_000_000):
    """Best constant rebalanced portfolio: maximize sum log(r_t^T x) over the domain.

    Projected Newton steps (Newton point projected in the Hessian metric)
    with backtracking. Stops when the conditional-gradient gap of the
    per-round average objective is below ``tol``; that gap upper-bounds the
    suboptimality and is reported.
    """
    r = check_returns(returns)
    T, n = r.shape
    domain = Simplex(n) if domain is None else domain
    x = domain.center.copy()

    def obj(z):
        w = r @ z
        return -float(np.sum(np.log(w))) / T if np.all(w > 0) else np.inf

    f = obj(x)
    gap = np.inf
    for it in range(1, max_iter + 1):
        w = r @ x
        q = r / w[:, None]
        g = -q.sum(axis=0) / T
        gap = float(g @ (x - domain.linear_opt(g)))
        if gap <= tol:
            return CRPSolution(x, -f * T, max(gap, 0.0), it, "projected_newton")
        h = q.T @ q / T
        h += 1e-12 * max(np.trace(h), 1.0) * np.eye(n)
        z = domain.project_matrix_norm(x - np.linalg.solve(h, g), h)
        d = z - x
        slope = float(g @ d)
        if slope >= 0:
            # numerical stall; fall back to a conditional-gradient direction
            d = domain.linear_opt(g) - x
            slope = float(g @ d)
        step = 1.0
        while step > 1e-16:
            fn = obj(x + step * d)
            if fn <= f + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            return CRPSolution(x, -f * T, max(gap, 0.0), it, "projected_newton")
        x = x + step * d
        f = fn
    return CRPSolution(x, -f * T, max(gap, 0.0), max_iter, "projected_newton")


@dataclass
class PortfolioReport:
    learner: str
    decisions: np.ndarray
    wealth: np.ndarray
    log_wealth: np.ndarray
    round_log_return: np.ndarray
    turnover: np.ndarray
    regret: float
    regret_trace: np.ndarray
    crp: CRPSolution
    bound: float
    G: float
    D: float
    params: dict = field(default_factory=dict)

    def rows(self):
        for t in range(len(self.wealth)):
            yield {
                "round": t + 1,
                "log_return": self.round_log_return[t],
                "wealth": self.wealth[t],
                "log_wealth": self.log_wealth[t],
                "turnover": self.turnover[t],
                "regret": self.regret_trace[t],
            }


def portfolio_backtest(returns, learner="ons", delta_floor=1e-3):
    """Run OGD or ONS on log-losses over the simplex mixed with uniform weight delta_floor.

    G is the largest gradient norm any round's loss can have on the domain.
    Regret is measured against the best CRP in the same domain.
    """
    r = check_returns(returns)
    T, n = r.shape
    domain = Simplex(n, mix=delta_floor)
    losses = [LogReturn(rt, domain) for rt in r]
    G = max(f.G for f in losses)
    D = domain.diameter if n > 1 else 1.0
    if learner == "ogd":
        alg = OGD(domain, schedule=StepRule.diminishing(D, G))
        bound = 1.5 * G * D * math.sqrt(T)
    elif learner == "ons":
        alg = ONS(domain, alpha_exp=1.0, G=G, D=D)
        bound = ons_regret_bound(1.0, G, D, n, T)
    else:
        raise ConfigInvalid(f"unknown portfolio learner {learner}", field="learner")
    xs = np.empty((T, n))
    for t, f in enumerate(losses):
        x = alg.predict()
        xs[t] = x
        alg.update(f.gradient(x))
    gains = np.einsum("ti,ti->t", r, xs)
    round_log = np.log(gains)
    with np.errstate(over="ignore"):
        # long winning streams overflow to inf; log_wealth stays exact
        wealth = np.cumprod(gains)
    log_wealth = np.cumsum(round_log)
    drifted = xs * r / gains[:, None]
    nxt = np.vstack([xs[1:], xs[-1:]])
    turnover = 0.5 * np.abs(nxt - drifted).sum(axis=1)
    crp = best_crp(r, domain)
    crp_log = np.cumsum(np.log(r @ crp.x))
    regret_trace = crp_log - log_wealth
    return PortfolioReport(learner, xs, wealth, log_wealth, round_log, turnover,
                           float(regret_trace[-1]), regret_trace, crp, bound, G, D,
                           {"delta_floor": delta_floor, "T": T, "n": n})


# matrix completion

@dataclass
class CompletionTask:
    n: int
    m: int
    k: float
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=int)
        self.cols = np.asarray(self.cols, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if self.k <= 0:
            raise ConfigInvalid("nuclear bound k must be positive", field="k")
        if np.any(self.rows < 0) or np.any(self.rows >= self.n) or np.any(self.cols < 0) \
                or np.any(self.cols >= self.m):
            raise ConfigInvalid("observed index out of range", field="entries")

    def matrices(self):
        """Observed values M (averaged over repeats) and the observation mask."""
        total = np.zeros((self.n, self.m))
        count = np.zeros((self.n, self.m))
        np.add.at(total, (self.rows, self.cols), self.values)
        np.add.at(count, (self.rows, self.cols), 1.0)
        mask = count > 0
        m = np.where(mask, total / np.maximum(count, 1.0), 0.0)
        return m, mask, count

    @classmethod
    def from_matrix(cls, m, mask, k):
        m = np.asarray(m, dtype=float)
        i, j = np.nonzero(mask)
        return cls(m.shape[0], m.shape[1], k, i, j, m[i, j])


def read_completion_file(path):
    """First line "n m k", then lines "i j value" (0-based indices)."""
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines or len(lines[0]) != 3:
        raise ConfigInvalid("first line must be 'n m k'", field="header")
    n, m, k = int(lines[0][0]), int(lines[0][1]), float(lines[0][2])
    ent = lines[1:]
    if any(len(e) != 3 for e in ent):
        raise ConfigInvalid("entry lines must be 'i j value'", field="entries")
    rows = [int(e[0]) for e in ent]
    cols = [int(e[1]) for e in ent]
    vals = [float(e[2]) for e in ent]
    return CompletionTask(n, m, k, rows, cols, vals)


def completion_gradient(x, m, weight):
    """Gradient of 0.5 sum weight_ij (X_ij - M_ij)^2: weight * (X - M)."""
    return weight * (x - m)


def completion_objective(x, m, weight):
    d = x - m
    return 0.5 * float(np.sum(weight * d * d))


@dataclass
class CompletionResult:
    x: np.ndarray
    objective_trace: np.ndarray
    gap_trace: np.ndarray
    nuclear_trace: np.ndarray
    method: str

    @property
    def lower_bound(self):
        """Certified lower bound on the optimum: max_t (f(X_t) - gap_t)."""
        return float(np.max(self.objective_trace - self.gap_trace))


def complete_matrix_offline(task, T, weight=None, power_tol=1e-10):
    """Conditional gradient for min 0.5 ||X - M||^2_OB subject to ||X||_* <= k.

    Square tasks with symmetric data use rank-one steps sqrt(k) v_max(-grad);
    otherwise the step target is -k u v^T for the top singular pair of grad.
    Step sizes eta_t = min(1, 2/t).
    """
    m, mask, count = task.matrices()
    w = mask.astype(float) if weight is None else weight
    symmetric = task.n == task.m and np.allclose(m, m.T) and np.array_equal(mask, mask.T) \
        and np.allclose(w, w.T)
    k = task.k
    if symmetric:
        x = (k / task.n) * np.eye(task.n)
    else:
        x = np.zeros((task.n, task.m))
    obj = np.empty(T)
    gaps = np.empty(T)
    nuc = np.empty(T)
    for t in range(1, T + 1):
        g = completion_gradient(x, m, w)
        obj[t - 1] = completion_objective(x, m, w)
        nuc[t - 1] = nuclear_norm(x)
        if not np.any(g):
            gaps[t - 1] = 0.0
            obj[t:] = obj[t - 1]
            gaps[t:] = 0.0
            nuc[t:] = nuc[t - 1]
            break
        if symmetric:
            _, v = power_method(-g, tol=power_tol)
            target = k * np.outer(v, v)
        else:
            u, v, _ = top_singular_pair(g, tol=power_tol)
            target = -k * np.outer(u, v)
        gaps[t - 1] = float(np.sum(g * (x - target)))
        eta = min(1.0, 2.0 / t)
        x = x + eta * (target - x)
    return CompletionResult(x, obj, gaps, nuc, "symmetric" if symmetric else "dilation")


class EntryLoss:
    """f(X) = (X_ij - y)^2 for one observed entry."""

    def __init__(self, shape, i, j, y):
        self.shape, self.i, self.j, self.y = shape, int(i), int(j), float(y)

    def value(self, x):
        return (x[self.i, self.j] - self.y) ** 2

    def gradient(self, x):
        g = np.zeros(self.shape)
        g[self.i, self.j] = 2.0 * (x[self.i, self.j] - self.y)
        return g


@dataclass
class OnlineCompletionReport:
    losses: np.ndarray
    regret: float
    regret_upper: float
    comparator: float
    comparator_gap: float
    bound: float
    G: float
    D: float
    predictions: np.ndarray


def complete_matrix_online(stream, shape, k, T=None, comparator_steps=2000, power_tol=1e-10):
    """Online conditional gradient on entry losses over the nuclear-norm ball.

    ``stream`` is a sequence of (i, j, y). The comparator minimizes the summed
    losses by conditional gradient; ``regret_upper`` uses its certified lower
    bound, ``regret`` its best feasible value.
    """
    stream = list(stream)
    T = len(stream) if T is None else int(T)
    stream = stream[:T]
    n, m = shape
    fset = NuclearBall(n, m, k, power_tol=power_tol)
    ymax = max(abs(s[2]) for s in stream) if stream else 0.0
    G = 2.0 * (k + ymax)
    D = fset.diameter
    alg = OCG(fset, T, G=G if G > 0 else 1.0)
    losses = np.empty(T)
    preds = np.empty(T)
    for t, (i, j, y) in enumerate(stream):
        f = EntryLoss(shape, i, j, y)
        x = alg.predict()
        preds[t] = x[i, j]
        losses[t] = f.value(x)
        alg.update(f.gradient(x))
    rows = np.array([s[0] for s in stream], dtype=int)
    cols = np.array([s[1] for s in stream], dtype=int)
    vals = np.array([s[2] for s in stream], dtype=float)
    # sum_t (X_ij - y_t)^2 = sum_ij c_ij (X_ij - mean_ij)^2 + const
    task = CompletionTask(n, m, k, rows, cols, vals)
    mbar, _, count = task.matrices()
    const = float(np.sum(vals ** 2) - np.sum(count * mbar ** 2))
    res = complete_matrix_offline(task, comparator_steps, weight=2.0 * count, power_tol=power_tol)
    best_feasible = float(res.objective_trace.min()) + const
    lower = res.lower_bound + const
    total = float(losses.sum())
    return OnlineCompletionReport(losses, total - best_feasible, total - lower, best_feasible,
                                  best_feasible - lower, ocg_regret_bound(D, G, T), G, D, preds)


# online-to-batch

def margin_classification(count, dim=5, margin=0.2, seed=0, separator=None):
    """Points uniform in the unit ball with |w*^T a| >= margin, labels sign(w*^T a)."""
    rng = np.random.default_rng(seed)
    if separator is None:
        separator = rng.standard_normal(dim)
        separator /= np.linalg.norm(separator)
    out = []
    have = 0
    while have < count:
        z = rng.standard_normal((2 * count, dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        z *= (rng.random(2 * count) ** (1.0 / dim))[:, None]
        keep = z[np.abs(z @ separator) >= margin]
        out.append(keep)
        have += len(keep)
    a = np.vstack(out)[:count]
    b = np.where(a @ separator >= 0, 1.0, -1.0)
    return a, b, separator


def hinge_risk(w, a, b):
    return float(np.mean(np.maximum(0.0, 1.0 - b * (a @ w))))


@dataclass
class BatchResult:
    hypothesis: np.ndarray
    regret: float
    bound: float
    loss_range: float
    params: dict


def online_to_batch_bound(best_risk, regret, T, delta_conf, loss_range=1.0):
    """error(h_bar) <= error(h*) + regret / T + B sqrt(8 ln(2/delta) / T) for losses in [0, B]."""
    return best_risk + regret / T + loss_range * math.sqrt(8.0 * math.log(2.0 / delta_conf) / T)


def online_to_batch(learner, samples, loss_factory, T, delta_conf=0.05, comparator=None,
                    best_risk=0.0, regret_bound=None, loss_range=1.0):
    """Feed T i.i.d. samples to an online learner and return the averaged hypothesis.

    ``samples`` yields examples, ``loss_factory(example)`` builds the round's
    convex loss. ``regret_bound`` (the learner's worst-case regret) enters the
    risk bound; when omitted the realized regret against ``comparator`` is used.
    """
    total = None
    losses = 0.0
    comp = 0.0
    for t in range(T):
        example = samples[t]
        f = loss_factory(example)
        h = learner.predict()
        total = h.copy() if total is None else total + h
        losses += float(f.value(h))
        if comparator is not None:
            comp += float(f.value(comparator))
        learner.update(f.gradient(h))
    h_bar = total / T
    regret = losses - comp if regret_bound is None else regret_bound
    bound = online_to_batch_bound(best_risk, regret, T, delta_conf, loss_range)
    return BatchResult(h_bar, losses - comp, bound, loss_range,
                       {"T": T, "delta_conf": delta_conf, "regret_used": regret})


def svm_online_to_batch(T, dim=5, margin=0.2, seed=0, delta_conf=0.05, holdout=20000):
    """OGD on hinge losses over Ball(0, 1/margin) for the realizable margin problem.

    Returns (BatchResult, held-out hinge risk of h_bar, separator).
    """
    rng_seed = np.random.SeedSequence(seed).spawn(2)
    a, b, sep = margin_classification(T, dim, margin, seed=rng_seed[0])
    ta, tb, _ = margin_classification(holdout, dim, margin, seed=rng_seed[1], separator=sep)
    radius = 1.0 / margin
    fset = EuclideanBall(dim, radius)
    G = 1.0
    D = fset.diameter
    alg = OGD(fset, schedule=StepRule.diminishing(D, G))
    h_star = sep / margin
    res = online_to_batch(alg, list(zip(a, b)), lambda ex: Hinge(ex[0], int(ex[1])), T,
                          delta_conf, comparator=h_star, best_risk=0.0,
                          regret_bound=1.5 * G * D * math.sqrt(T), loss_range=1.0 + radius)
    return res, hinge_risk(res.hypothesis, ta, tb), sep

