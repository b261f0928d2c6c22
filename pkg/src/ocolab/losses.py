"""Convex loss oracles with convexity metadata, and the ball-smoothing operator.

Metadata fields: ``G`` (gradient norm bound on the declared domain), ``alpha``
(strong convexity), ``beta`` (smoothness, ``inf`` when nonsmooth) and
``alpha_exp`` (exp-concavity). Zero means "not available".

Vector losses evaluate along the last axis, so ``value`` and ``gradient``
also accept a stack of points.
"""

import numpy as np

from .errors import DomainViolation
from .linalg_core import sym_eig, symmetrize


def domain_radius(fset):
    """max ||x|| over a feasible set (used for gradient bounds)."""
    if fset is None:
        return None
    kind = fset.kind
    if kind == "ball":
        return float(np.linalg.norm(fset.center) + fset.radius)
    if kind == "box":
        return float(np.linalg.norm(np.maximum(np.abs(fset.lo), np.abs(fset.hi))))
    if kind == "simplex":
        return float(np.sqrt((fset.floor + fset.scale) ** 2 + (fset.dim - 1) * fset.floor ** 2))
    if kind in ("spectahedron", "nuclear_ball"):
        return float(fset.k)
    raise ValueError(f"unknown set kind {kind}")


class LossOracle:
    kind = "abstract"
    G = 0.0
    alpha = 0.0
    beta = np.inf
    alpha_exp = 0.0

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    subgradient = gradient

    def __call__(self, x):
        return self.value(x)

    def metadata(self):
        return {"kind": self.kind, "G": self.G, "alpha": self.alpha, "beta": self.beta,
                "alpha_exp": self.alpha_exp}


class Linear(LossOracle):
    """f(x) = c^T x."""

    kind = "linear"

    def __init__(self, c):
        self.c = np.asarray(c, dtype=float)
        self.G = float(np.linalg.norm(self.c))
        self.beta = 0.0

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.c.ndim == 2:
            return float(np.sum(self.c * x))
        return x @ self.c

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.c, x.shape).copy()


class Quadratic(LossOracle):
    """f(x) = 0.5 x^T A x + b^T x + const, A symmetric PSD."""

    kind = "quadratic"

    def __init__(self, a, b=None, const=0.0, domain=None):
        self.a = symmetrize(np.atleast_2d(a))
        n = self.a.shape[0]
        self.b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
        self.const = float(const)
        values, _ = sym_eig(self.a)
        self.alpha = max(float(values.min()), 0.0)
        self.beta = float(values.max())
        rad = domain_radius(domain)
        self.G = np.inf if rad is None else float(self.beta * rad + np.linalg.norm(self.b))

    @classmethod
    def centered(cls, a, target, domain=None):
        """0.5 (x - target)^T A (x - target)."""
        a = symmetrize(np.atleast_2d(a))
        target = np.asarray(target, dtype=float)
        return cls(a, -a @ target, 0.5 * float(target @ a @ target), domain)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.a, x) + x @ self.b + self.const

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.a + self.b

    def minimizer(self):
        return np.linalg.solve(self.a, -self.b)


class Hinge(LossOracle):
    """f(x) = max(0, 1 - b x^T a); the kink takes the -b a branch."""

    kind = "hinge"

    def __init__(self, a, b):
        if b not in (-1, 1):
            raise ValueError("label must be -1 or +1")
        self.a = np.asarray(a, dtype=float)
        self.b = float(b)
        self.G = float(np.linalg.norm(self.a))

    def value(self, x):
        return np.maximum(0.0, 1.0 - self.b * (np.asarray(x, dtype=float) @ self.a))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        margin = self.b * (x @ self.a)
        active = (margin <= 1.0)
        return np.asarray(active, dtype=float)[..., None] * (-self.b * self.a)


class AbsSum(LossOracle):
    """f(x) = w * sum |x_i|; sign(0) = 0 is used as the subgradient."""

    kind = "abs_sum"

    def __init__(self, dim, weight=1.0):
        self.weight = float(weight)
        self.dim = int(dim)
        self.G = self.weight * np.sqrt(dim)

    def value(self, x):
        return self.weight * np.sum(np.abs(np.asarray(x, dtype=float)), axis=-1)

    def gradient(self, x):
        return self.weight * np.sign(np.asarray(x, dtype=float))


class Sum(LossOracle):
    """Sum of losses; metadata adds up (G, alpha, beta), exp-concavity is dropped."""

    kind = "sum"

    def __init__(self, *parts):
        self.parts = parts
        self.G = float(sum(p.G for p in parts))
        self.alpha = float(sum(p.alpha for p in parts))
        self.beta = float(sum(p.beta for p in parts))
        self.alpha_exp = 0.0

    def value(self, x):
        return sum(p.value(x) for p in self.parts)

    def gradient(self, x):
        return sum(p.gradient(x) for p in self.parts)


class LogReturn(LossOracle):
    """Portfolio loss f(x) = -log(r^T x); 1-exp-concave since its Hessian is grad grad^T."""

    kind = "log_return"

    def __init__(self, r, domain=None):
        self.r = np.asarray(r, dtype=float)
        if np.any(self.r <= 0):
            raise DomainViolation("returns must be strictly positive")
        self.alpha_exp = 1.0
        if domain is None:
            low = float(self.r.min())
        else:
            low = float(domain.floor * self.r.sum() + domain.scale * self.r.min())
        self.G = float(np.linalg.norm(self.r) / low)
        self.beta = float(self.r @ self.r / low ** 2)

    def _wealth(self, x):
        w = np.asarray(x, dtype=float) @ self.r
        if np.any(w <= 0):
            raise DomainViolation("r^T x must be positive")
        return w

    def value(self, x):
        return -np.log(self._wealth(x))

    def gradient(self, x):
        w = self._wealth(x)
        return -self.r / np.asarray(w)[..., None]

    def hessian(self, x):
        g = self.gradient(x)
        return np.outer(g, g)


class SquaredObserved(LossOracle):
    """f(X) = 0.5 ||X - M||^2 over the observed (mask) entries."""

    kind = "squared_observed"

    def __init__(self, m, mask, domain=None):
        self.m = np.asarray(m, dtype=float)
        self.mask = np.asarray(mask, dtype=bool)
        if self.m.shape != self.mask.shape:
            raise ValueError("M and mask shapes differ")
        self.beta = 1.0
        if domain is not None:
            self.G = float(domain.k + np.linalg.norm(self.m * self.mask))
        else:
            self.G = np.inf

    @classmethod
    def single(cls, shape, i, j, y, domain=None):
        m = np.zeros(shape)
        mask = np.zeros(shape, dtype=bool)
        m[i, j] = y
        mask[i, j] = True
        return cls(m, mask, domain)

    def value(self, x):
        d = (np.asarray(x, dtype=float) - self.m) * self.mask
        return 0.5 * float(np.sum(d * d))

    def gradient(self, x):
        return (np.asarray(x, dtype=float) - self.m) * self.mask


def uniform_ball(rng, count, dim):
    """Uniform draws from the unit ball (Gaussian direction, U^(1/d) radius)."""
    u = rng.standard_normal((count, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u * (rng.random(count) ** (1.0 / dim))[:, None]


class Smoothed(LossOracle):
    """Monte-Carlo ball average of f with fixed (common) random offsets.

    value(x) = mean_k f(x + delta v_k); gradient is the exact gradient of that
    average, so the oracle is a deterministic smooth-ish function of x.
    """

    kind = "smoothed"

    def __init__(self, base, delta, samples, seed, dim):
        if delta <= 0:
            raise ValueError("delta must be positive")
        if samples < 1:
            raise ValueError("need at least one smoothing sample")
        self.base = base
        self.delta = float(delta)
        self.samples = int(samples)
        self.offsets = delta * uniform_ball(np.random.default_rng(seed), self.samples, dim)
        self.G = base.G
        self.alpha = base.alpha
        self.beta = dim * base.G / delta
        self.alpha_exp = 0.0

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(np.mean(self.base.value(x + self.offsets)))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.mean(self.base.gradient(x + self.offsets), axis=0)


def smooth(f, delta, samples=64, seed=0, dim=None):
    """Ball-smoothed version of f. Linear losses come back unchanged."""
    if isinstance(f, Linear):
        return f
    if dim is None and hasattr(f, "dim"):
        dim = f.dim
    if dim is None:
        for attr in ("a", "r", "c"):
            if hasattr(f, attr):
                dim = np.asarray(getattr(f, attr)).shape[-1]
                break
        else:
            raise ValueError("cannot infer dimension; pass dim")
    return Smoothed(f, delta, samples, seed, dim)


def value(f, x):
    return f.value(x)


def subgradient(f, x):
    return f.gradient(x)
