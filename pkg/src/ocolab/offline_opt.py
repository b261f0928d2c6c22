"""Offline first-order solvers: projected GD and its reductions, Frank-Wolfe, SVM training."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTrainingSet, MetadataMissing, StepRuleRequiresMetadata
from .losses import smooth


@dataclass
class StepRule:
    """A step-size schedule eta_t (t starts at 1) with a provenance string."""

    name: str
    fn: object
    params: dict = field(default_factory=dict)

    def __call__(self, t):
        return float(self.fn(t))

    def describe(self):
        parts = ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in sorted(self.params.items()))
        return f"{self.name}({parts})"

    @classmethod
    def constant(cls, eta):
        return cls("constant", lambda t: eta, {"eta": float(eta)})

    @classmethod
    def inverse_beta(cls, beta):
        if beta is None or not np.isfinite(beta) or beta <= 0:
            raise StepRuleRequiresMetadata("step 1/beta needs a finite positive smoothness")
        return cls("inverse_beta", lambda t: 1.0 / beta, {"beta": float(beta)})

    @classmethod
    def diminishing(cls, D, G):
        """eta_t = D / (G sqrt t), the general convex schedule."""
        if not (D > 0 and G > 0 and np.isfinite(G)):
            raise MetadataMissing("diminishing schedule needs D > 0 and finite G > 0")
        return cls("diminishing", lambda t: D / (G * math.sqrt(t)), {"D": float(D), "G": float(G)})

    @classmethod
    def strongly_convex(cls, alpha):
        """eta_t = 1 / (alpha t)."""
        if not alpha or alpha <= 0:
            raise MetadataMissing("strongly convex schedule needs alpha > 0")
        return cls("strongly_convex", lambda t: 1.0 / (alpha * t), {"alpha": float(alpha)})

    @classmethod
    def strongly_convex_avg(cls, alpha):
        """eta_t = 2 / (alpha (t + 1)), used with weighted averaging."""
        if not alpha or alpha <= 0:
            raise MetadataMissing("averaging schedule needs alpha > 0")
        return cls("strongly_convex_avg", lambda t: 2.0 / (alpha * (t + 1)), {"alpha": float(alpha)})

    @classmethod
    def custom(cls, fn, name="custom"):
        return cls(name, fn, {})


@dataclass
class OfflineResult:
    iterates: list
    final: np.ndarray
    objective_trace: np.ndarray
    config: dict
    extra: dict = field(default_factory=dict)


def gd_basic(f, fset, x1, step, T, check_feasible=False):
    """Projected gradient descent: y = x - eta_t grad f(x), x = Pi_K(y).

    ``step`` is a StepRule or the string "inverse_beta" (uses f.beta).
    objective_trace[t-1] = f(x_t) for t = 1..T; final = x_{T+1}.
    """
    if isinstance(step, str):
        if step != "inverse_beta":
            raise ValueError(f"unknown step rule {step}")
        step = StepRule.inverse_beta(f.beta)
    x = np.array(x1, dtype=float)
    if not fset.contains(x):
        raise ValueError("x1 must be feasible")
    iterates = [x.copy()]
    trace = np.empty(T)
    for t in range(1, T + 1):
        trace[t - 1] = f.value(x)
        x = fset.project(x - step(t) * f.gradient(x))
        if check_feasible and not fset.contains(x):
            raise AssertionError(f"iterate {t + 1} infeasible")
        iterates.append(x.copy())
    return OfflineResult(iterates, x, trace, {"solver": "gd_basic", "step": step.describe(), "T": T})


def gd_smooth_reduction(f, fset, x1, T):
    """GD on g = f + (a/2)||x - x1||^2 with a = beta log T / (D^2 T) and eta = 1/beta."""
    beta = f.beta
    if beta is None or not np.isfinite(beta) or beta <= 0:
        raise StepRuleRequiresMetadata("smooth reduction needs a finite positive beta")
    D = fset.diameter
    a_tilde = beta * math.log(T) / (D * D * T) if T > 1 else 0.0
    x1 = np.array(x1, dtype=float)

    class _Surrogate:
        def value(self, x):
            d = x - x1
            return f.value(x) + 0.5 * a_tilde * float(d @ d)

        def gradient(self, x):
            return f.gradient(x) + a_tilde * (x - x1)

    g = _Surrogate()
    res = gd_basic(g, fset, x1, StepRule.inverse_beta(beta), T)
    surrogate_trace = res.objective_trace
    res.objective_trace = np.array([f.value(x) for x in res.iterates[:-1]])
    res.config.update({"solver": "gd_smooth_reduction", "alpha_tilde": a_tilde})
    res.extra["surrogate_trace"] = surrogate_trace
    res.extra["alpha_tilde"] = a_tilde
    return res


def gd_nonsmooth_reduction(f, fset, x1, T, samples=64, seed=0):
    """GD with eta = delta on the ball-smoothed f, delta = d G / alpha * log T / T."""
    if not f.alpha or f.alpha <= 0 or not np.isfinite(f.G) or f.G <= 0:
        raise MetadataMissing("nonsmooth reduction needs alpha > 0 and finite G")
    if samples < 1:
        raise ValueError("smoothing needs at least one sample")
    d = fset.dim
    delta = d * f.G / f.alpha * math.log(max(T, 2)) / max(T, 2)
    fhat = smooth(f, delta, samples=samples, seed=seed, dim=d)
    res = gd_basic(fhat, fset, x1, StepRule.constant(delta), T)
    res.objective_trace = np.array([f.value(x) for x in res.iterates[:-1]])
    res.config.update({"solver": "gd_nonsmooth_reduction", "delta": delta, "samples": samples,
                       "seed": seed})
    res.extra["smoothed"] = fhat
    return res


def gd_strongly_convex_avg(f, fset, x1, T):
    """GD with eta_t = 2/(alpha(t+1)); returns sum_s (2s / (T(T+1))) x_s."""
    if not f.alpha or f.alpha <= 0:
        raise MetadataMissing("needs alpha > 0")
    res = gd_basic(f, fset, x1, StepRule.strongly_convex_avg(f.alpha), T)
    xs = np.array(res.iterates[:T])
    w = 2.0 * np.arange(1, T + 1) / (T * (T + 1.0))
    return np.tensordot(w, xs, axes=1)


def frank_wolfe(f, fset, x1, T, H=None, check_feasible=False):
    """Conditional gradient with eta_t = min(1, 2H/t); H defaults to max(1, G D).

    When x_t itself minimizes the linear model (zero gap) the step is skipped.
    """
    if H is None:
        H = max(1.0, f.G * fset.diameter) if np.isfinite(f.G) else 1.0
    if H < 1:
        raise ValueError("H must be at least 1")
    x = np.array(x1, dtype=float)
    iterates = [x.copy()]
    trace = np.empty(T)
    gaps = np.empty(T)
    for t in range(1, T + 1):
        g = f.gradient(x)
        trace[t - 1] = f.value(x)
        v = fset.linear_opt(g)
        gaps[t - 1] = float(np.sum(g * (x - v)))
        if gaps[t - 1] <= 0.0:
            # x already minimizes the linear model; keep it rather than an arbitrary tie
            v = x
        eta = min(1.0, 2.0 * H / t)
        x = x + eta * (v - x)
        if check_feasible and not fset.contains(x, tol=1e-6):
            raise AssertionError(f"iterate {t + 1} infeasible")
        iterates.append(x.copy())
    return OfflineResult(iterates, x, trace, {"solver": "frank_wolfe", "H": H, "T": T},
                         extra={"fw_gap": gaps})


def soft_margin_objective(x, a, b, lam):
    """lam * mean hinge + 0.5 ||x||^2."""
    margins = b * (a @ x)
    return lam * float(np.mean(np.maximum(0.0, 1.0 - margins))) + 0.5 * float(x @ x)


def _hinge_subgrad(x, a, b):
    active = (b * (a @ x) <= 1.0)
    return -(active * b) @ a if a.ndim == 2 else -(b * a) * active


def _check_train(a, b):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if a.shape[0] == 0:
        raise EmptyTrainingSet("no training examples")
    if a.shape[0] != b.shape[0]:
        raise ValueError("examples and labels differ in count")
    if not np.all(np.isin(b, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    return a, b


def svm_subgradient(a, b, lam, T):
    """Full subgradient SVM training; returns sum_t (2t / (T(T+1))) x_t."""
    a, b = _check_train(a, b)
    n = a.shape[0]
    x = np.zeros(a.shape[1])
    avg = np.zeros_like(x)
    for t in range(1, T + 1):
        avg += (2.0 * t / (T * (T + 1.0))) * x
        grad = lam * _hinge_subgrad(x, a, b) / n + x
        x = x - (2.0 / (t + 1)) * grad
    return avg


def svm_sgd(a, b, lam, T, seed=0):
    """SGD SVM training with one uniformly drawn example per step and eta_t = 1/t.

    Returns the plain average of x_1..x_T.
    """
    a, b = _check_train(a, b)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, a.shape[0], size=T)
    x = np.zeros(a.shape[1])
    total = np.zeros_like(x)
    for t in range(1, T + 1):
        total += x
        ai, bi = a[idx[t - 1]], b[idx[t - 1]]
        g = x.copy()
        if bi * (ai @ x) <= 1.0:
            g -= lam * bi * ai
        x = x - g / t
    return total / T
