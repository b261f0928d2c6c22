"""Feasible sets, projections, linear-optimization oracles, regularizers and barriers.

Vector sets (ball, box, simplex) take 1-d arrays. Spectral sets
(spectahedron, nuclear-norm ball) take 2-d arrays.
"""

import numpy as np

from .errors import (BoundaryViolation, CenterNotInterior, DimensionMismatch, DomainViolation,
                     NoConvergence, NotPSD, UnsupportedCombination, UnsupportedSet)
from .linalg_core import power_method, sqrt_psd, sym_eig, symmetrize

MEMBERSHIP_TOL = 1e-9
SHRINK_PROBES = 1000


def project_simplex_sorted(y, total=1.0):
    """Euclidean projection onto {x >= 0, sum x = total} by sort-then-threshold."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def _unit_directions(dim, count, seed=12345):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((count, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    return np.vstack([axes, u])[:max(count, 2 * dim)]


class FeasibleSet:
    """Common interface for convex decision sets."""

    kind = "abstract"
    shape = None

    @property
    def dim(self):
        return int(np.prod(self.shape))

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != self.shape:
            raise DimensionMismatch(f"{self.kind} expects shape {self.shape}, got {x.shape}")
        return x

    def contains(self, x, tol=MEMBERSHIP_TOL):
        raise NotImplementedError

    def project(self, y):
        raise UnsupportedSet(f"no Euclidean projection for {self.kind}")

    def project_matrix_norm(self, y, a, tol=1e-10):
        """argmin over the set of (x - y)^T A (x - y)."""
        y = self._check(y)
        a = symmetrize(a)
        if a.shape != (self.dim, self.dim):
            raise DimensionMismatch("metric matrix does not match set dimension")
        if self.contains(y, tol=0.0):
            return y.copy()
        return self._project_metric(y, a, tol)

    def _project_metric(self, y, a, tol):
        return _projected_gradient_metric(self, y, a, tol)

    def linear_opt(self, c):
        raise NotImplementedError

    def sample(self, rng, size):
        """Random feasible points, shape (size, *self.shape)."""
        raise NotImplementedError

    def describe(self):
        return {"kind": self.kind, "dim": self.dim}


class EuclideanBall(FeasibleSet):
    kind = "ball"

    def __init__(self, dim, radius=1.0, center=None):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.shape = (int(dim),)
        self.radius = float(radius)
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float).copy()
        if self.center.shape != self.shape:
            raise DimensionMismatch("center dimension mismatch")

    @property
    def diameter(self):
        return 2.0 * self.radius

    def contains(self, x, tol=MEMBERSHIP_TOL):
        x = self._check(x)
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def project(self, y):
        y = self._check(y)
        d = y - self.center
        nrm = np.linalg.norm(d)
        if nrm <= self.radius:
            return y.copy()
        return self.center + d * (self.radius / nrm)

    def _project_metric(self, y, a, tol):
        values, vectors = sym_eig(a)
        values = np.clip(values, 0.0, None)
        if values.max() <= 0:
            return self.project(y)
        w = vectors.T @ (y - self.center)
        pos = values > 1e-12 * values.max()
        r = self.radius

        def z_of(mu):
            z = np.zeros_like(w)
            z[pos] = values[pos] * w[pos] / (values[pos] + mu)
            return z

        z0 = np.where(pos, w, 0.0)
        if np.linalg.norm(z0) <= r:
            # metric ignores the null directions: keep them as close to y as fits
            z = z0
            rest = np.linalg.norm(w[~pos])
            if rest > 0:
                room = np.sqrt(max(r * r - z0 @ z0, 0.0))
                z[~pos] = w[~pos] * min(1.0, room / rest)
        else:
            lo, hi = 0.0, values.max() * np.linalg.norm(w) / r
            for _ in range(300):
                mid = 0.5 * (lo + hi)
                if np.linalg.norm(z_of(mid)) > r:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-16 * max(hi, 1e-300):
                    break
            z = z_of(hi)
            nz = np.linalg.norm(z)
            if nz > r:
                z *= r / nz
        return self.center + vectors @ z

    def linear_opt(self, c):
        c = self._check(c)
        nrm = np.linalg.norm(c)
        if nrm == 0:
            return self.center.copy()
        return self.center - self.radius * c / nrm

    def sample(self, rng, size):
        u = rng.standard_normal((size, self.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        rad = rng.random(size) ** (1.0 / self.dim)
        return self.center + self.radius * u * rad[:, None]

    def describe(self):
        return {"kind": self.kind, "dim": self.dim, "radius": self.radius,
                "center": self.center.tolist()}


class Box(FeasibleSet):
    kind = "box"

    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float)).copy()
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float)).copy()
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ValueError("box needs matching lo < hi")
        self.shape = self.lo.shape
        self.center = 0.5 * (self.lo + self.hi)

    @classmethod
    def cube(cls, dim, half_width=1.0):
        return cls(-half_width * np.ones(dim), half_width * np.ones(dim))

    @property
    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, x, tol=MEMBERSHIP_TOL):
        x = self._check(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def project(self, y):
        return np.clip(self._check(y), self.lo, self.hi)

    def _project_metric(self, y, a, tol):
        return bounded_qp(a, y, self.lo, self.hi, total=None, x0=self.project(y))

    def linear_opt(self, c):
        c = self._check(c)
        # zero cost coordinates go to the lower bound
        return np.where(c < 0, self.hi, self.lo)

    def sample(self, rng, size):
        return self.lo + (self.hi - self.lo) * rng.random((size, self.dim))

    def describe(self):
        return {"kind": self.kind, "dim": self.dim, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Simplex(FeasibleSet):
    """Probability simplex, optionally mixed with the uniform distribution.

    With ``mix`` = m the set is (1 - m) * simplex + m * uniform, i.e. the
    simplex with every coordinate floored at m / dim.
    """

    kind = "simplex"

    def __init__(self, dim, mix=0.0):
        if dim < 1:
            raise ValueError("dim must be positive")
        if not 0.0 <= mix < 1.0:
            raise ValueError("mix must lie in [0, 1)")
        self.shape = (int(dim),)
        self.mix = float(mix)
        self.floor = self.mix / dim
        self.scale = 1.0 - self.mix
        self.center = np.full(dim, 1.0 / dim)

    @property
    def diameter(self):
        return float(np.sqrt(2.0) * self.scale) if self.dim > 1 else 0.0

    def contains(self, x, tol=MEMBERSHIP_TOL):
        x = self._check(x)
        return bool(np.all(x >= self.floor - tol) and abs(x.sum() - 1.0) <= max(tol, 1e-12))

    def project(self, y):
        y = self._check(y)
        return self.floor + self.scale * project_simplex_sorted((y - self.floor) / self.scale)

    def _project_metric(self, y, a, tol):
        lo = np.full(self.dim, self.floor)
        hi = np.full(self.dim, np.inf)
        return bounded_qp(a, y, lo, hi, total=1.0, x0=self.project(y))

    def linear_opt(self, c):
        c = self._check(c)
        x = np.full(self.dim, self.floor)
        x[int(np.argmin(c))] += self.scale
        return x

    def sample(self, rng, size):
        return self.floor + self.scale * rng.dirichlet(np.ones(self.dim), size)

    def describe(self):
        return {"kind": self.kind, "dim": self.dim, "mix": self.mix}


class Spectahedron(FeasibleSet):
    """Symmetric PSD d x d matrices with trace at most k."""

    kind = "spectahedron"

    def __init__(self, d, k=1.0, power_tol=1e-10, power_seed=0):
        self.shape = (int(d), int(d))
        self.side = int(d)
        self.k = float(k)
        self.power_tol = power_tol
        self.power_seed = power_seed
        self.center = np.eye(d) * (self.k / (2.0 * d))

    @property
    def diameter(self):
        return float(np.sqrt(2.0) * self.k)

    def contains(self, x, tol=MEMBERSHIP_TOL):
        x = self._check(x)
        if np.max(np.abs(x - x.T)) > max(tol, 1e-12):
            return False
        values, _ = sym_eig(x)
        return bool(values.min() >= -tol and values.sum() <= self.k + tol)

    def project(self, y):
        s = symmetrize(self._check(y))
        values, vectors = sym_eig(s)
        mu = np.clip(values, 0.0, None)
        if mu.sum() > self.k:
            mu = project_simplex_sorted(values, self.k)
        return symmetrize((vectors * mu) @ vectors.T)

    def linear_opt(self, c):
        c = symmetrize(self._check(c))
        lam, v = power_method(-c, tol=self.power_tol, seed=self.power_seed)
        if lam <= 0:
            return np.zeros(self.shape)
        return self.k * np.outer(v, v)

    def sample(self, rng, size):
        out = np.empty((size,) + self.shape)
        for i in range(size):
            g = rng.standard_normal(self.shape)
            p = g @ g.T
            out[i] = p * (self.k * rng.random() / np.trace(p))
        return out

    def describe(self):
        return {"kind": self.kind, "side": self.side, "k": self.k}


class NuclearBall(FeasibleSet):
    """n x m real matrices with nuclear norm at most k."""

    kind = "nuclear_ball"

    def __init__(self, n, m, k=1.0, power_tol=1e-10, power_seed=0):
        self.shape = (int(n), int(m))
        self.k = float(k)
        self.power_tol = power_tol
        self.power_seed = power_seed
        self.center = np.zeros(self.shape)

    @property
    def diameter(self):
        return 2.0 * self.k

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return bool(nuclear_norm(self._check(x)) <= self.k + tol)

    def project(self, y):
        raise UnsupportedSet("nuclear-ball projection is deliberately not provided; use linear_opt")

    def project_matrix_norm(self, y, a, tol=1e-10):
        raise UnsupportedSet("nuclear-ball projection is deliberately not provided; use linear_opt")

    def linear_opt(self, c):
        c = self._check(c)
        u, v, sigma = top_singular_pair(c, tol=self.power_tol, seed=self.power_seed)
        if sigma <= 0:
            return np.zeros(self.shape)
        return -self.k * np.outer(u, v)

    def sample(self, rng, size):
        out = np.empty((size,) + self.shape)
        for i in range(size):
            g = rng.standard_normal(self.shape)
            out[i] = g * (self.k * rng.random() / nuclear_norm(g))
        return out

    def describe(self):
        return {"kind": self.kind, "rows": self.shape[0], "cols": self.shape[1], "k": self.k}


def nuclear_norm(x):
    """Sum of singular values, as Tr sqrt(X^T X)."""
    x = np.asarray(x, dtype=float)
    return float(np.trace(sqrt_psd(x.T @ x)))


def top_singular_pair(c, tol=1e-10, seed=0):
    """Top singular triple of a rectangular matrix via the symmetric dilation."""
    c = np.asarray(c, dtype=float)
    n, m = c.shape
    dil = np.zeros((n + m, n + m))
    dil[:n, n:] = c
    dil[n:, :n] = c.T
    sigma, w = power_method(dil, tol=tol, seed=seed)
    u, v = w[:n], w[n:]
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if sigma <= 0 or nu == 0 or nv == 0:
        return np.zeros(n), np.zeros(m), 0.0
    return u / nu, v / nv, float(sigma)


class CountingSet:
    """Wraps a set and counts projection calls; everything else is delegated."""

    def __init__(self, inner):
        self.inner = inner
        self.projection_calls = 0
        self.linear_opt_calls = 0

    def __getattr__(self, name):
        return getattr(self.inner, name)

    def project(self, y):
        self.projection_calls += 1
        return self.inner.project(y)

    def project_matrix_norm(self, y, a, tol=1e-10):
        self.projection_calls += 1
        return self.inner.project_matrix_norm(y, a, tol)

    def linear_opt(self, c):
        self.linear_opt_calls += 1
        return self.inner.linear_opt(c)


def bounded_qp(a, y, lo, hi, total=None, x0=None, max_iter=None):
    """Primal active-set solve of min (x-y)^T A (x-y), lo <= x <= hi, optional sum x = total.

    ``x0`` must be feasible. A tiny ridge keeps the face systems solvable when
    A is only semidefinite.
    """
    a = symmetrize(a)
    n = y.size
    ridge = 1e-13 * max(np.trace(a) / n, 1e-300)
    h = a + ridge * np.eye(n)
    x = np.array(x0, dtype=float)
    eq = total is not None
    bound_tol = 1e-15
    at_lo = x <= lo + bound_tol
    at_hi = x >= hi - bound_tol
    x[at_lo] = lo[at_lo]
    x[at_hi] = hi[at_hi]
    active = at_lo | at_hi
    if max_iter is None:
        max_iter = 50 * n + 100
    scale = max(np.abs(np.diag(h)).max(), 1e-300)
    face_min = False
    for _ in range(max_iter):
        g = h @ (x - y)
        free = np.nonzero(~active)[0]
        k = free.size
        p = np.zeros(n)
        nu = 0.0
        # after an unblocked full step x already minimizes over the current face
        if k > 0 and not face_min:
            if eq:
                kkt = np.zeros((k + 1, k + 1))
                kkt[:k, :k] = h[np.ix_(free, free)]
                kkt[:k, k] = 1.0
                kkt[k, :k] = 1.0
                rhs = np.concatenate([-g[free], [0.0]])
                sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
                p[free] = sol[:k]
                nu = sol[k]
            else:
                p[free] = np.linalg.lstsq(h[np.ix_(free, free)], -g[free], rcond=None)[0]
        if face_min or np.linalg.norm(p) <= 1e-13 * (1.0 + np.linalg.norm(x)):
            face_min = False
            if eq and k > 0:
                nu = -float(np.mean(g[free]))
            elif eq:
                nu = -float(np.mean(g))
            mult = g + nu
            viol_lo = np.where(active & at_lo, -mult, -np.inf)
            viol_hi = np.where(active & at_hi, mult, -np.inf)
            viol = np.maximum(viol_lo, viol_hi)
            i = int(np.argmax(viol))
            if viol[i] <= 1e-12 * scale * (1.0 + np.abs(x - y).max()):
                return x
            active[i] = False
            at_lo[i] = at_hi[i] = False
            continue
        step = 1.0
        block = -1
        for i in free:
            if p[i] < 0 and np.isfinite(lo[i]):
                s = (lo[i] - x[i]) / p[i]
            elif p[i] > 0 and np.isfinite(hi[i]):
                s = (hi[i] - x[i]) / p[i]
            else:
                continue
            if s < step:
                step, block = s, i
        x = x + max(step, 0.0) * p
        face_min = block < 0
        if block >= 0:
            active[block] = True
            if p[block] < 0:
                at_lo[block] = True
                x[block] = lo[block]
            else:
                at_hi[block] = True
                x[block] = hi[block]
    raise NoConvergence("active-set QP did not terminate", best=x)


def _projected_gradient_metric(fset, y, a, tol, max_steps=100000):
    """Projected gradient on (x-y)^T A (x-y) with Euclidean projections onto fset."""
    shape = fset.shape
    yv = y.ravel()
    lam = np.linalg.eigvalsh(a).max() if a.shape[0] > 0 else 0.0
    if lam <= 0:
        return fset.project(y)
    step = 1.0 / (2.0 * lam)
    x = fset.project(y).ravel()
    obj = float((x - yv) @ a @ (x - yv))
    for it in range(max_steps):
        x_new = fset.project((x - step * 2.0 * a @ (x - yv)).reshape(shape)).ravel()
        obj_new = float((x_new - yv) @ a @ (x_new - yv))
        x = x_new
        if obj - obj_new < tol:
            return x.reshape(shape)
        obj = obj_new
    raise NoConvergence("projected gradient metric projection hit the step cap", best=x.reshape(shape))


def project_euclidean(fset, y):
    return fset.project(y)


def project_matrix_norm(fset, y, a, tol=1e-10):
    a = np.asarray(a, dtype=float)
    values = np.linalg.eigvalsh(symmetrize(a))
    if values.size and values.min() < -1e-8 * max(abs(values).max(), 1e-300):
        raise NotPSD("metric matrix is not PSD")
    return fset.project_matrix_norm(y, a, tol)


def linear_opt(fset, c):
    return fset.linear_opt(c)


def shrink(fset, delta):
    """Scale a full-dimensional set by (1 - delta) about its interior center.

    The set must contain the unit ball around its center; this is checked with
    boundary probes and CenterNotInterior is raised otherwise.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if fset.kind not in ("ball", "box"):
        raise CenterNotInterior(f"{fset.kind} is not full-dimensional around its center")
    c = fset.center
    for u in _unit_directions(fset.dim, SHRINK_PROBES):
        if not fset.contains(c + u, tol=1e-9):
            raise CenterNotInterior("set does not contain the unit ball about its center")
    s = 1.0 - delta
    if fset.kind == "ball":
        return EuclideanBall(fset.dim, s * fset.radius, c)
    return Box(c + s * (fset.lo - c), c + s * (fset.hi - c))


# regularizers

class EuclideanHalfSq:
    """R(x) = 0.5 ||x - anchor||^2."""

    kind = "euclidean"
    sigma = 1.0

    def __init__(self, anchor, domain=None):
        self.anchor = np.asarray(anchor, dtype=float).copy()
        self.domain = domain

    def value(self, x):
        d = np.asarray(x, dtype=float) - self.anchor
        return 0.5 * float(np.sum(d * d))

    def grad(self, x):
        return np.asarray(x, dtype=float) - self.anchor

    def grad_inv(self, theta):
        return self.anchor + np.asarray(theta, dtype=float)

    def minimizer(self):
        if self.domain is None:
            return self.anchor.copy()
        return self.domain.project(self.anchor)


class NegEntropy:
    """R(x) = sum x log x on the positive orthant; 1-strongly convex in l1 on the simplex."""

    kind = "entropy"
    sigma = 1.0

    def __init__(self, domain=None):
        self.domain = domain

    @staticmethod
    def _check(x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainViolation("entropy needs nonnegative coordinates")
        return x

    def value(self, x):
        x = self._check(x)
        pos = x > 0
        return float(np.sum(x[pos] * np.log(x[pos])))

    def grad(self, x):
        x = self._check(x)
        if np.any(x <= 0):
            raise DomainViolation("entropy gradient needs positive coordinates")
        return 1.0 + np.log(x)

    def grad_inv(self, theta):
        return np.exp(np.asarray(theta, dtype=float) - 1.0)

    def minimizer(self):
        if self.domain is None or self.domain.kind != "simplex":
            raise UnsupportedCombination("entropy minimizer only on the simplex")
        return self.domain.center.copy()


def bregman(reg, x, y):
    """B_R(x || y) = R(x) - R(y) - grad R(y)^T (x - y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if reg.kind == "euclidean":
        d = x - y
        return 0.5 * float(np.sum(d * d))
    if reg.kind == "entropy":
        if np.any(y <= 0):
            raise DomainViolation("entropy divergence needs positive y")
        if np.any(x < 0):
            raise DomainViolation("entropy divergence needs nonnegative x")
        pos = x > 0
        return float(np.sum(x[pos] * np.log(x[pos] / y[pos])) - x.sum() + y.sum())
    raise UnsupportedCombination(f"no divergence for {reg.kind}")


def bregman_project(reg, fset, y):
    """argmin over fset of B_R(x || y) for the implemented pairs."""
    if reg.kind == "euclidean":
        return fset.project(y)
    if reg.kind == "entropy" and fset.kind == "simplex" and fset.mix == 0.0:
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise DomainViolation("entropy projection needs positive y")
        return y / y.sum()
    raise UnsupportedCombination(f"no Bregman projection for {reg.kind} over {fset.kind}")


# self-concordant barriers

class BallLogBarrier:
    """-log(1 - ||x - c||^2 / r^2), a 1-self-concordant barrier for the ball."""

    kind = "ball_log"
    nu = 1.0

    def __init__(self, dim, radius=1.0, center=None):
        self.set = EuclideanBall(dim, radius, center)
        self.dim = int(dim)
        self.center = self.set.center

    def analytic_center(self):
        return self.center.copy()

    def interior(self, x):
        d = np.asarray(x, dtype=float) - self.center
        return np.sum(d * d, axis=-1) < self.set.radius ** 2

    def evaluate(self, x):
        """(value, gradient, hessian); accepts a leading batch axis."""
        x = np.asarray(x, dtype=float)
        if not np.all(self.interior(x)):
            raise BoundaryViolation("point not strictly inside the ball")
        r2 = self.set.radius ** 2
        d = x - self.center
        slack = 1.0 - np.sum(d * d, axis=-1) / r2
        value = -np.log(slack)
        grad = 2.0 * d / (r2 * slack[..., None])
        eye = np.eye(self.dim)
        hess = (2.0 / (r2 * slack))[..., None, None] * eye \
            + (4.0 / (r2 * r2 * slack * slack))[..., None, None] * d[..., :, None] * d[..., None, :]
        return value, grad, hess


class BoxLogBarrier:
    """-sum[log(hi - x) + log(x - lo)], a (2 dim)-self-concordant barrier for the box."""

    kind = "box_log"

    def __init__(self, lo, hi):
        self.set = Box(lo, hi)
        self.dim = self.set.dim
        self.nu = 2.0 * self.dim
        self.lo, self.hi = self.set.lo, self.set.hi

    def analytic_center(self):
        return self.set.center.copy()

    def interior(self, x):
        x = np.asarray(x, dtype=float)
        return np.all((x > self.lo) & (x < self.hi), axis=-1)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(self.interior(x)):
            raise BoundaryViolation("point not strictly inside the box")
        up = self.hi - x
        dn = x - self.lo
        value = -np.sum(np.log(up) + np.log(dn), axis=-1)
        grad = 1.0 / up - 1.0 / dn
        diag = 1.0 / up ** 2 + 1.0 / dn ** 2
        hess = diag[..., :, None] * np.eye(self.dim)
        return value, grad, hess

    def hess_diag(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 / (self.hi - x) ** 2 + 1.0 / (x - self.lo) ** 2


def barrier_eval(barrier, x):
    return barrier.evaluate(x)


def local_norm(hess, h):
    """||h||_x = sqrt(h^T H h)."""
    h = np.asarray(h, dtype=float)
    return float(np.sqrt(h @ hess @ h))
