"""Expert-advice algorithms and bandit learners.

Weights live in log space. Randomized learners draw all of their per-round
randomness up front from their seed, so a single learner and the batched
simulators (one row per seed) consume identical random numbers and produce
identical traces.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (EpsilonOutOfRange, EtaTooLarge, InfeasiblePlay, NegativeLoss,
                     NewtonNoConvergence, SingularA)
from .geometry import project_simplex_sorted, shrink
from .linalg_core import sym_eig


def _logsumexp(z, axis=None):
    m = np.max(z, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(z - m), axis=axis, keepdims=True))
    return out if axis is not None else float(out.ravel()[0])


def _normalized(log_w):
    z = log_w - np.max(log_w, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _inverse_cdf(p, u):
    """Index i with cumsum(p)[i-1] <= u < cumsum(p)[i]; rows of p for batches."""
    c = np.cumsum(p, axis=-1)
    idx = np.sum(c <= (u * c[..., -1])[..., None], axis=-1)
    return np.minimum(idx, p.shape[-1] - 1)


def sample_sphere(rng, count, dim):
    """Uniform unit vectors via normalized Gaussians, shape (count, dim)."""
    u = rng.standard_normal((count, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


# experts

class ExpertState:
    """Log-weights over n experts plus a learning rate and a random stream."""

    def __init__(self, n, eps, seed=0):
        self.n = int(n)
        self.eps = float(eps)
        self.log_weights = np.zeros(self.n)
        self.rng = np.random.default_rng(seed)

    def distribution(self):
        return _normalized(self.log_weights)

    def weights(self):
        return np.exp(self.log_weights)


class WeightedMajority:
    """Deterministic weighted majority for binary predictions (A = 0, B = 1).

    Predicts A when W(A) >= W(B); wrong experts are multiplied by (1 - eps).
    """

    def __init__(self, n, eps):
        if not 0.0 < eps < 0.5:
            raise EpsilonOutOfRange("eps must lie in (0, 1/2)")
        self.state = ExpertState(n, eps)
        self.mistakes = 0
        self.expert_mistakes = np.zeros(n, dtype=int)

    def predict(self, votes):
        votes = np.asarray(votes, dtype=int)
        lw = self.state.log_weights
        wa = _logsumexp(lw[votes == 0]) if np.any(votes == 0) else -np.inf
        wb = _logsumexp(lw[votes == 1]) if np.any(votes == 1) else -np.inf
        return 0 if wa >= wb else 1

    def update(self, votes, outcome):
        votes = np.asarray(votes, dtype=int)
        action = self.predict(votes)
        wrong = votes != outcome
        self.state.log_weights = self.state.log_weights + wrong * math.log(1.0 - self.state.eps)
        self.expert_mistakes += wrong
        self.mistakes += int(action != outcome)
        return action


def weighted_majority_predict(wm, votes):
    return wm.predict(votes)


def weighted_majority_update(wm, votes, outcome):
    return wm.update(votes, outcome)


def wm_mistake_bound(best_mistakes, n, eps):
    return 2.0 * (1.0 + eps) * best_mistakes + 2.0 * math.log(n) / eps


class RandomizedWeightedMajority:
    """Samples an expert in proportion to its weight; wrong experts lose (1 - eps)."""

    def __init__(self, n, eps, seed=0):
        if not 0.0 < eps < 0.5:
            raise EpsilonOutOfRange("eps must lie in (0, 1/2)")
        self.state = ExpertState(n, eps, seed)
        self.mistakes = 0

    def update(self, votes, outcome):
        votes = np.asarray(votes, dtype=int)
        i = rwm_sample(self.state)
        self.mistakes += int(votes[i] != outcome)
        wrong = votes != outcome
        self.state.log_weights = self.state.log_weights + wrong * math.log(1.0 - self.state.eps)
        return int(votes[i])


def rwm_sample(state, rng=None):
    rng = state.rng if rng is None else rng
    return int(_inverse_cdf(state.distribution(), rng.random()))


def hedge_update(state, loss):
    """W_{t+1}(i) = W_t(i) exp(-eps loss(i)), in log space."""
    loss = np.asarray(loss, dtype=float)
    if np.any(loss < 0):
        raise NegativeLoss("Hedge needs nonnegative losses")
    state.log_weights = state.log_weights - state.eps * loss
    return state


class Hedge:
    """Hedge over n experts; distribution x_t, full loss vectors as feedback."""

    def __init__(self, n, eps, seed=0):
        self.state = ExpertState(n, eps, seed)
        self.t = 1

    def distribution(self):
        return self.state.distribution()

    def predict(self):
        return self.distribution()

    def update(self, loss):
        hedge_update(self.state, loss)
        self.t += 1


def hedge_inequality_slack(dists, losses, eps):
    """RHS - LHS of sum x^T l - sum l(i*) <= eps sum x^T l^2 + ln N / eps."""
    dists = np.asarray(dists)
    losses = np.asarray(losses)
    n = losses.shape[1]
    played = float(np.sum(dists * losses))
    best = float(losses.sum(axis=0).min())
    second = float(np.sum(dists * losses ** 2))
    return eps * second + math.log(n) / eps - (played - best)


class FPLExperts:
    """Follow the perturbed leader with one-sided exponential noise.

    n(i) = -ln(U_i) / eta with U_i in (0, 1], drawn once. The leader is
    argmin(sum g - n) with ties to the lowest index.
    """

    def __init__(self, n, eta, seed=0):
        if eta <= 0:
            raise ValueError("eta must be positive")
        self.n = int(n)
        self.eta = float(eta)
        rng = np.random.default_rng(seed)
        self.noise = exponential_noise(rng, self.n, self.eta)
        self.loss_sum = np.zeros(self.n)
        self.t = 1

    def leader(self):
        return int(np.argmin(self.loss_sum - self.noise))

    def predict(self):
        x = np.zeros(self.n)
        x[self.leader()] = 1.0
        return x

    def update(self, loss):
        loss = np.asarray(loss, dtype=float)
        if np.any(loss < 0) or np.any(loss > 1):
            raise ValueError("FPL experts losses must lie in [0, 1]")
        self.loss_sum = self.loss_sum + loss
        self.t += 1


def exponential_noise(rng, size, eta):
    """Inverse-CDF draw of Exp(eta): -ln(U)/eta, U uniform on (0, 1]."""
    u = 1.0 - rng.random(size)
    return -np.log(u) / eta


def fpl_experts(n, eta, seed=0):
    return FPLExperts(n, eta, seed)


# bandit estimators

@dataclass
class GradEstimate:
    g: np.ndarray
    provenance: str
    params: dict


def sphere_estimate(f_value, u, delta, n):
    """g = (n / delta) f(x + delta u) u."""
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise ValueError("u must be a unit vector")
    return GradEstimate((n / delta) * f_value * u, "sphere", {"delta": delta})


def ellipsoid_estimate(f_value, u, a, n):
    """g = n f(x + A u) A^{-1} u."""
    u = np.asarray(u, dtype=float)
    a = np.asarray(a, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise ValueError("u must be a unit vector")
    if np.linalg.cond(a) > 1e14:
        raise SingularA("ellipsoid matrix is numerically singular")
    return GradEstimate(n * f_value * np.linalg.solve(a, u), "ellipsoid", {})


def importance_estimate(n, arm, loss_value, prob, scale=1.0):
    """Vector with scale * loss / prob on the sampled arm and zero elsewhere."""
    g = np.zeros(n)
    g[arm] = scale * loss_value / prob
    return GradEstimate(g, "importance", {"arm": arm, "p": prob})


# multi-armed bandits

class SimpleMAB:
    """Explore with probability delta, otherwise exploit the base learner's distribution.

    Exploration rounds play a uniform arm and feed (n / delta) l(i_t) e_{i_t} to
    the base learner. Exploitation rounds play i_t ~ x_t and feed nothing, so
    x_{t+1} = x_t; with ``feed_zero=True`` the base receives a zero gradient
    instead (its clock then advances on every round).
    """

    def __init__(self, n, delta, base, T, seed=0, feed_zero=False):
        if not 0.0 < delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        self.n, self.delta, self.base, self.T = int(n), float(delta), base, int(T)
        self.feed_zero = feed_zero
        rng = np.random.default_rng(seed)
        self._explore = rng.random(T) < delta
        self._uniform_arm = rng.integers(0, n, size=T)
        self._u = rng.random(T)
        self.t = 1
        self._arm = None

    def select(self):
        k = self.t - 1
        if self._explore[k]:
            self._arm = int(self._uniform_arm[k])
        else:
            x = np.clip(self.base.predict(), 0.0, None)
            self._arm = int(_inverse_cdf(x, self._u[k]))
        return self._arm

    def feed(self, loss_value):
        k = self.t - 1
        if self._explore[k]:
            est = importance_estimate(self.n, self._arm, loss_value, 1.0 / self.n, 1.0 / self.delta)
            self.base.update(est.g)
        elif self.feed_zero:
            self.base.update(np.zeros(self.n))
        self.t += 1


def simple_mab(n, delta, base, T, seed=0, feed_zero=False):
    return SimpleMAB(n, delta, base, T, seed, feed_zero)


def simple_mab_delta(n, T):
    return n ** (2.0 / 3.0) * T ** (-1.0 / 3.0)


def simple_mab_bound(n, T, delta):
    return 3.0 * n * math.sqrt(T) / math.sqrt(delta) + delta * T


def simple_mab_ogd_batch(losses, delta, seeds):
    """Simple MAB with an OGD base over the simplex, one row per seed.

    The base step is D / (G sqrt(k)) with D = sqrt 2, G = n / delta and k the
    number of exploration rounds so far. Returns realized cumulative losses.
    """
    losses = np.asarray(losses, dtype=float)
    T, n = losses.shape
    R = len(seeds)
    explore = np.empty((R, T), dtype=bool)
    uarm = np.empty((R, T), dtype=int)
    u = np.empty((R, T))
    for r, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        explore[r] = rng.random(T) < delta
        uarm[r] = rng.integers(0, n, size=T)
        u[r] = rng.random(T)
    x = np.full((R, n), 1.0 / n)
    k = np.zeros(R)
    total = np.zeros(R)
    D, G = math.sqrt(2.0), n / delta
    for t in range(T):
        arms = np.where(explore[:, t], uarm[:, t], _inverse_cdf(x, u[:, t]))
        lv = losses[t, arms]
        total += lv
        ex = np.nonzero(explore[:, t])[0]
        if ex.size:
            k[ex] += 1
            g = np.zeros((ex.size, n))
            g[np.arange(ex.size), arms[ex]] = (n / delta) * lv[ex]
            eta = D / (G * np.sqrt(k[ex]))
            y = x[ex] - eta[:, None] * g
            x[ex] = np.array([project_simplex_sorted(row) for row in y])
    return total


class Exp3:
    """EXP3: Hedge on importance-weighted loss estimates of the sampled arm.

    eps defaults to sqrt(log n / (T n)). Uniforms for arm sampling are drawn
    from the seed at construction.
    """

    def __init__(self, n, T, eps=None, seed=0, importance=True):
        self.n, self.T = int(n), int(T)
        self.eps = math.sqrt(math.log(n) / (T * n)) if eps is None else float(eps)
        self.log_w = np.zeros(self.n)
        self._u = np.random.default_rng(seed).random(T)
        self.importance = importance
        self.t = 1
        self._arm = None
        self._x = None

    def distribution(self):
        return _normalized(self.log_w)

    def select(self):
        self._x = self.distribution()
        self._arm = int(_inverse_cdf(self._x, self._u[self.t - 1]))
        return self._arm

    def estimate(self, loss_value):
        return importance_estimate(self.n, self._arm, loss_value, self._x[self._arm]).g

    def feed(self, loss_value):
        if loss_value < 0:
            raise NegativeLoss("EXP3 needs nonnegative losses")
        self.log_w = self.log_w - self.eps * self.estimate(loss_value)
        self.log_w -= self.log_w.max()
        self.t += 1

    def feed_full(self, loss_vector):
        """Test hook: plain Hedge step on a full loss vector (no importance weights)."""
        loss_vector = np.asarray(loss_vector, dtype=float)
        if np.any(loss_vector < 0):
            raise NegativeLoss("EXP3 needs nonnegative losses")
        self.log_w = self.log_w - self.eps * loss_vector
        self.log_w -= self.log_w.max()
        self.t += 1


def exp3(n, T, eps=None, seed=0):
    return Exp3(n, T, eps, seed)


def exp3_bound(n, T):
    return 2.0 * math.sqrt(T * n * math.log(n))


def exp3_batch(losses, seeds, eps=None):
    """Run EXP3 once per seed on a shared loss matrix (T x n). Returns cumulative losses."""
    losses = np.asarray(losses, dtype=float)
    T, n = losses.shape
    eps = math.sqrt(math.log(n) / (T * n)) if eps is None else eps
    R = len(seeds)
    u = np.stack([np.random.default_rng(s).random(T) for s in seeds])
    log_w = np.zeros((R, n))
    total = np.zeros(R)
    rows = np.arange(R)
    for t in range(T):
        x = _normalized(log_w)
        arms = _inverse_cdf(x, u[:, t])
        lv = losses[t, arms]
        total += lv
        log_w[rows, arms] -= eps * lv / x[rows, arms]
        log_w -= log_w.max(axis=1, keepdims=True)
    return total


def exp3_estimator_expectation(x, loss):
    """Exact E[l_hat] at fixed (x, l) by enumerating the sampled arm."""
    x = np.asarray(x, dtype=float)
    loss = np.asarray(loss, dtype=float)
    n = x.size
    expect = np.zeros(n)
    for i in range(n):
        if x[i] > 0:
            expect += x[i] * importance_estimate(n, i, loss[i], x[i]).g
    return expect


def simple_mab_estimator_expectation(loss, delta):
    """Exact E[l_hat] for the simple MAB estimator over (b_t, i_t)."""
    loss = np.asarray(loss, dtype=float)
    n = loss.size
    expect = np.zeros(n)
    for i in range(n):
        est = importance_estimate(n, i, loss[i], 1.0 / n, 1.0 / delta).g
        expect += delta * (1.0 / n) * est
    # b_t = 0 contributes the zero vector with probability 1 - delta
    return expect


# bandit convex optimization

class FKM:
    """Bandit gradient descent with one-point sphere estimates.

    Plays y_t = x_t + delta u_t, estimates g = (n / delta) f(y_t) u_t and steps
    x_{t+1} = Pi_{K_delta}(x_t - eta g). Defaults eta = D / (n T^(3/4)),
    delta = T^(-1/4).
    """

    def __init__(self, fset, T, eta=None, delta=None, seed=0):
        self.set = fset
        self.T = int(T)
        n = fset.dim
        self.n = n
        self.delta = T ** -0.25 if delta is None else float(delta)
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        self.eta = fset.diameter / (n * T ** 0.75) if eta is None else float(eta)
        self.inner = shrink(fset, self.delta)
        self.x = fset.center.copy()
        self._u = sample_sphere(np.random.default_rng(seed), self.T, n)
        self.t = 1
        self._y = None

    def select(self):
        self._y = self.x + self.delta * self._u[self.t - 1]
        if not self.set.contains(self._y):
            raise InfeasiblePlay("played point left the set")
        return self._y.copy()

    def feed(self, f_value):
        g = sphere_estimate(f_value, self._u[self.t - 1], self.delta, self.n).g
        self.x = self.inner.project(self.x - self.eta * g)
        self.t += 1


def fkm(fset, T, eta=None, delta=None, seed=0):
    return FKM(fset, T, eta, delta, seed)


def fkm_bound(n, D, G, T):
    return 9.0 * n * D * G * T ** 0.75


def fkm_linear_ball_batch(c, T, seeds, radius=1.0, eta=None, delta=None):
    """FKM on f(x) = c^T x over Ball(0, radius), one row per seed.

    Returns (cumulative losses, max norm of any played point).
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    delta = T ** -0.25 if delta is None else delta
    eta = 2.0 * radius / (n * T ** 0.75) if eta is None else eta
    inner_r = (1.0 - delta) * radius
    R = len(seeds)
    u = np.stack([sample_sphere(np.random.default_rng(s), T, n) for s in seeds])
    x = np.zeros((R, n))
    total = np.zeros(R)
    max_norm = 0.0
    for t in range(T):
        y = x + delta * u[:, t]
        max_norm = max(max_norm, float(np.linalg.norm(y, axis=1).max()))
        fv = y @ c
        total += fv
        x = x - eta * (n / delta) * fv[:, None] * u[:, t]
        nrm = np.linalg.norm(x, axis=1)
        over = nrm > inner_r
        x[over] *= (inner_r / nrm[over])[:, None]
    return total, max_norm


def _newton_ftrl(barrier, s, eta, x0, tol=1e-8, max_iter=100):
    """argmin eta s^T x + R(x) by damped Newton from an interior x0."""
    x = x0.copy()
    for _ in range(max_iter):
        _, grad, hess = barrier.evaluate(x)
        gr = eta * s + grad
        step = np.linalg.solve(hess, gr)
        lam = math.sqrt(max(float(gr @ step), 0.0))
        if lam < tol:
            return x
        x = x - step / (1.0 + lam)
    raise NewtonNoConvergence("damped Newton did not reach the decrement tolerance", best=x)


class Scrible:
    """Bandit linear optimization with a self-concordant barrier regularizer.

    A_t = Hess R(x_t)^(-1/2), y_t = x_t + A_t u_t, g_t = n f(y_t) A_t^{-1} u_t,
    x_{t+1} = argmin eta sum g^T x + R(x) (damped Newton). Requires
    eta * ||g_t||*_{x_t} <= 1/4 each round.
    """

    def __init__(self, barrier, T, eta, seed=0, newton_tol=1e-8):
        self.barrier = barrier
        self.T = int(T)
        self.eta = float(eta)
        self.n = barrier.dim
        self.x = barrier.analytic_center()
        self.grad_sum = np.zeros(self.n)
        self._u = sample_sphere(np.random.default_rng(seed), self.T, self.n)
        self.newton_tol = newton_tol
        self.t = 1
        self.max_dual_norm = 0.0
        self._y = None
        self._root = None

    def select(self):
        _, _, hess = self.barrier.evaluate(self.x)
        values, vectors = sym_eig(hess)
        self._root = (values, vectors)
        a = (vectors / np.sqrt(values)) @ vectors.T
        self._y = self.x + a @ self._u[self.t - 1]
        if not np.all(self.barrier.interior(self._y)):
            raise InfeasiblePlay("Dikin sample left the set")
        return self._y.copy()

    def feed(self, f_value):
        values, vectors = self._root
        u = self._u[self.t - 1]
        g = self.n * f_value * ((vectors * np.sqrt(values)) @ vectors.T) @ u
        # ||g||*_x = sqrt(g^T H^{-1} g) = n |f| ||u||
        dual = self.n * abs(f_value) * float(np.linalg.norm(u))
        self.max_dual_norm = max(self.max_dual_norm, dual)
        if self.eta * dual > 0.25 + 1e-12:
            raise EtaTooLarge(f"eta * ||g||* = {self.eta * dual:.3f} exceeds 1/4")
        self.grad_sum = self.grad_sum + g
        self.x = _newton_ftrl(self.barrier, self.grad_sum, self.eta, self.x, self.newton_tol)
        self.t += 1


def scrible(barrier, T, eta, seed=0):
    return Scrible(barrier, T, eta, seed)


def scrible_eta(nu, n, T, f_max=1.0):
    """sqrt(nu log T / (2 n^2 T)), capped so that eta n f_max <= 1/4."""
    eta = math.sqrt(nu * math.log(T) / (2.0 * n * n * T))
    return min(eta, 0.25 / (n * f_max))


def scrible_box_batch(barrier, c, T, eta, seeds, newton_tol=1e-8, max_newton=100):
    """SCRIBLE with a box log-barrier on f(x) = c^T x, one row per seed.

    Uses the diagonal Hessian of the box barrier. Returns cumulative losses.
    """
    c = np.asarray(c, dtype=float)
    n = barrier.dim
    lo, hi = barrier.lo, barrier.hi
    R = len(seeds)
    u = np.stack([sample_sphere(np.random.default_rng(s), T, n) for s in seeds])
    x = np.tile(barrier.analytic_center(), (R, 1))
    s = np.zeros((R, n))
    total = np.zeros(R)
    for t in range(T):
        h = barrier.hess_diag(x)
        y = x + u[:, t] / np.sqrt(h)
        if not np.all((y > lo) & (y < hi)):
            raise InfeasiblePlay("Dikin sample left the box")
        fv = y @ c
        total += fv
        if np.any(eta * n * np.abs(fv) > 0.25 + 1e-12):
            raise EtaTooLarge("eta * ||g||* exceeds 1/4")
        s += (n * fv)[:, None] * np.sqrt(h) * u[:, t]
        for _ in range(max_newton):
            grad = eta * s + 1.0 / (hi - x) - 1.0 / (x - lo)
            hd = barrier.hess_diag(x)
            step = grad / hd
            lam = np.sqrt(np.sum(grad * step, axis=1))
            if np.all(lam < newton_tol):
                break
            x = x - step / (1.0 + lam)[:, None]
        else:
            raise NewtonNoConvergence("batched damped Newton did not converge")
    return total
