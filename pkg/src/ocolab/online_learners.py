"""Full-information online learners sharing a predict / update contract.

Every learner exposes ``predict()`` for the current decision x_t and
``update(grad)`` (or ``observe(loss)``) to consume round t's feedback. Only
the gradient of the round's loss at x_t is used; learners document which
loss metadata they need (G, alpha, alpha_exp) through their constructors.
"""

import math

import numpy as np

from .errors import MetadataMissing, UnsupportedCombination
from .geometry import bregman_project
from .linalg_core import InverseTracker, pinv_psd, sherman_morrison_update, sqrt_psd, sym_eig
from .offline_opt import StepRule


def _logsumexp(z):
    m = np.max(z)
    return m + math.log(np.sum(np.exp(z - m)))


def softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - np.max(z))
    return e / e.sum()


class OnlineLearner:
    name = "learner"

    def __init__(self, fset, x1=None):
        self.set = fset
        self.x = np.array(fset.center if x1 is None else x1, dtype=float)
        self.t = 1
        self.config = {}

    def predict(self):
        return self.x.copy()

    def observe(self, loss):
        """Feed the round's loss; its gradient at x_t drives the update."""
        g = loss.gradient(self.x)
        self.update(g)
        return g

    def update(self, grad):
        self._step(np.asarray(grad, dtype=float))
        self.t += 1

    def _step(self, g):
        raise NotImplementedError

    def describe(self):
        return {"learner": self.name, **self.config}


class OGD(OnlineLearner):
    """Online gradient descent: y = x - eta_t g, x = Pi_K(y)."""

    name = "ogd"

    def __init__(self, fset, x1=None, schedule=None):
        super().__init__(fset, x1)
        if schedule is None:
            raise MetadataMissing("OGD needs a step schedule")
        self.schedule = schedule
        self.config = {"schedule": schedule.describe()}

    def _step(self, g):
        self.x = self.set.project(self.x - self.schedule(self.t) * g)


def ogd(fset, x1=None, schedule=None):
    return OGD(fset, x1, schedule)


def sgd(grad_source, fset, x1, T, schedule, seed=0):
    """Stochastic gradient descent; returns the average of x_1..x_T.

    ``grad_source(x, rng)`` must return an unbiased gradient estimate.
    """
    rng = np.random.default_rng(seed)
    learner = OGD(fset, x1, schedule)
    total = np.zeros_like(learner.x)
    for _ in range(T):
        x = learner.predict()
        total += x
        learner.update(grad_source(x, rng))
    return total / T


class RFTL(OnlineLearner):
    """Regularized follow the leader on linearized losses.

    x_{t+1} = argmin_K  eta * sum_s g_s^T x + R(x). Closed forms: Euclidean
    regularizer over any projectable set (projection of anchor - eta * sum g),
    entropy over the simplex (softmax of -eta * sum g).

    With ``reg=None`` the learner is pure follow-the-leader for linear losses:
    x_{t+1} = linear_opt(sum g), starting from the set's center.
    """

    name = "rftl"

    def __init__(self, fset, reg=None, eta=1.0):
        self.reg = reg
        self.eta = float(eta)
        if reg is None:
            super().__init__(fset)
            self.name = "ftl"
        elif reg.kind == "euclidean":
            super().__init__(fset, fset.project(reg.anchor))
        elif reg.kind == "entropy" and fset.kind == "simplex" and fset.mix == 0.0:
            super().__init__(fset, fset.center)
        else:
            raise UnsupportedCombination(f"RFTL inner solve for {reg.kind} over {fset.kind}")
        self.grad_sum = np.zeros_like(self.x)
        self.max_dual_norm = 0.0
        self.config = {"reg": None if reg is None else reg.kind, "eta": self.eta}

    def _dual_norm(self, g):
        if self.reg is not None and self.reg.kind == "entropy":
            return float(np.sqrt(np.sum(self.x * g * g)))
        return float(np.linalg.norm(g))

    def _step(self, g):
        self.max_dual_norm = max(self.max_dual_norm, self._dual_norm(g))
        self.grad_sum = self.grad_sum + g
        if self.reg is None:
            self.x = self.set.linear_opt(self.grad_sum)
        elif self.reg.kind == "euclidean":
            self.x = self.set.project(self.reg.anchor - self.eta * self.grad_sum)
        else:
            self.x = softmax(-self.eta * self.grad_sum)


def rftl(fset, reg=None, eta=1.0):
    return RFTL(fset, reg, eta)


class OMD(OnlineLearner):
    """Online mirror descent, lazy or agile.

    lazy:  grad R(y_{t+1}) = grad R(y_t) - eta g_t
    agile: grad R(y_{t+1}) = grad R(x_t) - eta g_t
    then x_{t+1} = Bregman projection of y_{t+1}. y_1 solves grad R(y_1) = 0.
    Entropy iterates are kept in log space with coordinates floored at 1e-300.
    """

    name = "omd"

    def __init__(self, fset, reg, eta, mode="lazy"):
        if mode not in ("lazy", "agile"):
            raise ValueError("mode must be lazy or agile")
        if reg.kind == "entropy" and not (fset.kind == "simplex" and fset.mix == 0.0):
            raise UnsupportedCombination("entropy OMD only over the simplex")
        self.reg = reg
        self.set = fset
        self.eta = float(eta)
        self.mode = mode
        # theta = grad R(y)
        self.theta = np.zeros(fset.shape)
        super().__init__(fset, self._project(self.theta))
        self.config = {"reg": reg.kind, "eta": self.eta, "mode": mode}

    def _project(self, theta):
        if self.reg.kind == "entropy":
            # log y = theta - 1; normalization is the KL projection
            z = theta - 1.0
            return np.exp(z - _logsumexp(z))
        return bregman_project(self.reg, self.set, self.reg.grad_inv(theta))

    def _mirror(self, x):
        if self.reg.kind == "entropy":
            return 1.0 + np.log(np.maximum(x, 1e-300))
        return self.reg.grad(x)

    def _step(self, g):
        base = self.theta if self.mode == "lazy" else self._mirror(self.x)
        self.theta = base - self.eta * g
        self.x = self._project(self.theta)


def omd(fset, reg, eta, mode="lazy"):
    return OMD(fset, reg, eta, mode)


class EG(OnlineLearner):
    """Exponentiated gradient over the simplex, weights kept in log space.

    eta defaults to sqrt(log n / (2 T G_inf^2)), which needs T and G_inf.
    """

    name = "eg"

    def __init__(self, fset, eta=None, T=None, G_inf=None):
        if fset.kind != "simplex":
            raise UnsupportedCombination("EG runs on the simplex")
        super().__init__(fset, fset.center)
        n = fset.dim
        if eta is None:
            if T is None or G_inf is None:
                raise MetadataMissing("auto eta needs T and G_inf")
            eta = math.sqrt(math.log(n) / (2.0 * T * G_inf ** 2))
        self.eta = float(eta)
        self.log_w = np.zeros(n)
        self.config = {"eta": self.eta}

    def _step(self, g):
        self.log_w = self.log_w - self.eta * g
        self.log_w -= self.log_w.max()
        self.x = softmax(self.log_w)


def eg(fset, eta=None, T=None, G_inf=None):
    return EG(fset, eta, T, G_inf)


def eg_regret_bound(T, n, G_inf):
    return 2.0 * G_inf * math.sqrt(2.0 * T * math.log(n))


class AdaGrad(OnlineLearner):
    """Full-matrix AdaGrad.

    S_t = S_{t-1} + g g^T, G_t = S_t^(1/2), y = x - eta G_t^+ g, and x is the
    projection of y in the G_t norm. eta defaults to the set diameter.
    """

    name = "adagrad"

    def __init__(self, fset, x1=None, eta=None):
        super().__init__(fset, x1)
        self.eta = float(fset.diameter if eta is None else eta)
        n = self.x.size
        self.S = np.zeros((n, n))
        self.G = np.zeros((n, n))
        self._basis = None
        self.config = {"eta": self.eta}

    def _step(self, g):
        if not np.any(g):
            return
        self.S = self.S + np.outer(g, g)
        eig = sym_eig(self.S, basis=self._basis)
        self._basis = eig[1]
        self.G = sqrt_psd(self.S, eig=eig)
        root = (np.sqrt(np.clip(eig[0], 0, None)), eig[1])
        g_pinv = pinv_psd(self.G, eig=root)
        y = self.x - self.eta * g_pinv @ g
        self.x = self.set.project_matrix_norm(y, self.G)

    def trace_bound(self):
        """2 D Tr(G_T) with D = eta (the diameter by default)."""
        return 2.0 * self.eta * float(np.trace(self.G))


def adagrad(fset, x1=None, eta=None):
    return AdaGrad(fset, x1, eta)


class ONS(OnlineLearner):
    """Online Newton step for exp-concave losses.

    gamma = 0.5 min(1/(4 G D), alpha_exp), eps = 1/(gamma^2 D^2), A_0 = eps I,
    A_t = A_{t-1} + g g^T, y = x - (1/gamma) A_t^{-1} g, x = Pi^{A_t}(y).
    """

    name = "ons"

    def __init__(self, fset, x1=None, alpha_exp=None, G=None, D=None, gamma=None, eps=None):
        super().__init__(fset, x1)
        D = fset.diameter if D is None else D
        if gamma is None:
            if not alpha_exp or not G:
                raise MetadataMissing("ONS needs alpha_exp and G (or explicit gamma)")
            gamma = 0.5 * min(1.0 / (4.0 * G * D), alpha_exp)
        if eps is None:
            eps = 1.0 / (gamma * gamma * D * D)
        self.gamma = float(gamma)
        self.eps = float(eps)
        self.tracker = InverseTracker(self.eps * np.eye(self.x.size))
        self.config = {"gamma": self.gamma, "eps": self.eps, "D": float(D),
                       "alpha_exp": alpha_exp, "G": G}
        self.last_y = None

    def _step(self, g):
        if not np.any(g):
            return
        sherman_morrison_update(self.tracker, g)
        y = self.x - (self.tracker.inverse @ g) / self.gamma
        self.last_y = y
        self.x = self.set.project_matrix_norm(y, self.tracker.base)


def ons(fset, x1=None, alpha_exp=None, G=None, D=None):
    return ONS(fset, x1, alpha_exp, G, D)


def ons_regret_bound(alpha_exp, G, D, n, T):
    return 5.0 * (1.0 / alpha_exp + G * D) * n * math.log(T)


class OCG(OnlineLearner):
    """Online conditional gradient (projection-free).

    F_t(x) = eta * sum_{s<t} g_s^T x + ||x - x_1||^2, v_t = linear_opt(grad F_t(x_t)),
    x_{t+1} = (1 - sigma_t) x_t + sigma_t v_t with sigma_t = min(1, 2/sqrt(t)).
    eta defaults to D / (2 G T^(3/4)). Ties where x_t already minimizes the
    linear model keep v_t = x_t.
    """

    name = "ocg"

    def __init__(self, fset, T, x1=None, eta=None, G=None, sigma=None):
        super().__init__(fset, x1)
        if eta is None:
            if not G:
                raise MetadataMissing("OCG auto eta needs G")
            eta = fset.diameter / (2.0 * G * T ** 0.75)
        self.eta = float(eta)
        self.T = int(T)
        self.sigma = sigma if sigma is not None else (lambda t: min(1.0, 2.0 / math.sqrt(t)))
        self.x1 = self.x.copy()
        self.grad_sum = np.zeros_like(self.x)
        self.config = {"eta": self.eta, "T": self.T}

    def _step(self, g):
        # grad F_t uses gradients strictly before round t
        grad_f = self.eta * self.grad_sum + 2.0 * (self.x - self.x1)
        v = self.set.linear_opt(grad_f)
        if float(np.sum(grad_f * (self.x - v))) <= 0.0:
            v = self.x
        s = self.sigma(self.t)
        self.x = (1.0 - s) * self.x + s * v
        self.grad_sum = self.grad_sum + g


def ocg(fset, T, x1=None, eta=None, G=None, sigma=None):
    return OCG(fset, T, x1, eta, G, sigma)


def ocg_regret_bound(D, G, T):
    return 8.0 * D * G * T ** 0.75


def _noise_offset(noise):
    if noise == "uniform_cube":
        return 0.0
    if noise == "centered_cube":
        return 0.5
    raise ValueError(f"unknown noise {noise}")


class FPLConvex(OnlineLearner):
    """Follow the perturbed leader, expectation estimated by Monte Carlo.

    x_{t+1} = mean_k argmin_K (eta * sum g + n_k)^T x, n_k ~ Uniform[0,1]^n
    (or the centered cube [-1/2, 1/2]^n with ``noise="centered_cube"``),
    with ``mc_samples`` fresh draws each round.
    """

    name = "fpl_convex"

    def __init__(self, fset, eta, mc_samples=100, seed=0, noise="uniform_cube"):
        if mc_samples < 1:
            raise ValueError("mc_samples must be positive")
        self.offset = _noise_offset(noise)
        self.set = fset
        self.eta = float(eta)
        self.mc_samples = int(mc_samples)
        self.rng = np.random.default_rng(seed)
        self.grad_sum = np.zeros(fset.shape)
        self.t = 1
        self.x = self._average_leader()
        self.config = {"eta": self.eta, "mc_samples": self.mc_samples, "seed": seed,
                       "noise": noise}

    def _average_leader(self):
        noise = self.rng.random((self.mc_samples,) + self.set.shape) - self.offset
        base = self.eta * self.grad_sum
        return np.mean([self.set.linear_opt(base + nz) for nz in noise], axis=0)

    def _step(self, g):
        self.grad_sum = self.grad_sum + g
        self.x = self._average_leader()


class FPLLinear(OnlineLearner):
    """Single-draw follow the perturbed leader for linear losses.

    n_0 ~ Uniform[0,1]^n is drawn once; x_t = argmin_K (eta * sum_{s<t} g_s - n_0)^T x.
    """

    name = "fpl_linear"

    def __init__(self, fset, eta, seed=0, noise="uniform_cube"):
        offset = _noise_offset(noise)
        self.set = fset
        self.eta = float(eta)
        self.noise = np.random.default_rng(seed).random(fset.shape) - offset
        self.grad_sum = np.zeros(fset.shape)
        self.t = 1
        self.x = fset.linear_opt(-self.noise)
        self.config = {"eta": self.eta, "seed": seed, "noise": noise}

    def _step(self, g):
        self.grad_sum = self.grad_sum + g
        self.x = self.set.linear_opt(self.eta * self.grad_sum - self.noise)


def fpl_convex(fset, eta, mc_samples=100, seed=0, noise="uniform_cube"):
    return FPLConvex(fset, eta, mc_samples, seed, noise)


def fpl_linear(fset, eta, seed=0, noise="uniform_cube"):
    return FPLLinear(fset, eta, seed, noise)


def fpl_tuned_eta(dim, G_star, T, L=1.0):
    """eta minimizing eta D G*^2 L T + sigma D / eta with sigma = sqrt(dim)."""
    sigma = math.sqrt(dim)
    return math.sqrt(sigma / (L * G_star ** 2 * T))


def fpl_regret_bound(dim, D, G_star, T, L=1.0):
    return 2.0 * L * D * G_star * math.sqrt(math.sqrt(dim) * T)
