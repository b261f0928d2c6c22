import math

import numpy as np
import pytest

from ocolab.errors import MetadataMissing, UnsupportedCombination
from ocolab.experts_bandits import Hedge
from ocolab.geometry import Box, EuclideanBall, EuclideanHalfSq, NegEntropy, Simplex
from ocolab.losses import Linear, LogReturn
from ocolab.offline_opt import StepRule
from ocolab.online_learners import (EG, OCG, OGD, OMD, ONS, RFTL, AdaGrad, FPLConvex, FPLLinear,
                                    eg_regret_bound, fpl_regret_bound, fpl_tuned_eta,
                                    ocg_regret_bound, ons_regret_bound, sgd)


def linear_regret(learner, grads, fset):
    """Play the linear losses; return regret against the exact set minimizer."""
    played = 0.0
    for g in grads:
        x = learner.predict()
        assert fset.contains(x, tol=1e-8)
        played += float(g @ x)
        learner.update(g)
    total = grads.sum(axis=0)
    return played - float(total @ fset.linear_opt(total))


def biased_grads(rng, T, dim, bias=0.3):
    g = rng.standard_normal((T, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    g[:, 0] += bias
    return g


def test_ogd_zero_gradient_and_clamp():
    box = Box([-1.0], [1.0])
    lr = OGD(box, np.array([0.9]), StepRule.constant(0.5))
    lr.update(np.zeros(1))
    assert lr.predict()[0] == 0.9
    lr.update(np.array([-1.0]))
    assert lr.predict()[0] == 1.0


def test_ogd_needs_schedule():
    with pytest.raises(MetadataMissing):
        OGD(EuclideanBall(2))


def test_ogd_regret_bound_ball():
    rng = np.random.default_rng(0)
    ball = EuclideanBall(3)
    T = 10 ** 4
    grads = biased_grads(rng, T, 3)
    G = float(np.max(np.linalg.norm(grads, axis=1)))
    D = ball.diameter
    regret = linear_regret(OGD(ball, schedule=StepRule.diminishing(D, G)), grads, ball)
    assert regret <= 1.5 * G * D * math.sqrt(T)


def test_ogd_strongly_convex_regret():
    rng = np.random.default_rng(1)
    ball = EuclideanBall(2)
    T = 2000
    targets = 0.3 + 0.2 * rng.standard_normal((T, 2))
    lr = OGD(ball, schedule=StepRule.strongly_convex(1.0))
    played = 0.0
    for y in targets:
        x = lr.predict()
        played += 0.5 * float(np.sum((x - y) ** 2))
        lr.update(x - y)
    best = ball.project(targets.mean(axis=0))
    regret = played - 0.5 * float(np.sum((best - targets) ** 2))
    G = 1.0 + float(np.max(np.linalg.norm(targets, axis=1)))
    assert regret <= G * G / 2 * (1 + math.log(T))


def _noisy_quadratic(sigma):
    def source(x, rng):
        u = rng.standard_normal(x.size)
        return x + sigma * u / np.linalg.norm(u)
    return source


def test_sgd_zero_noise_is_ogd_average():
    ball = EuclideanBall(2)
    sched = StepRule.diminishing(2.0, 1.0)
    x1 = np.array([0.8, 0.0])
    avg = sgd(lambda x, rng: x, ball, x1, 50, sched)
    lr = OGD(ball, x1, sched)
    xs = []
    for _ in range(50):
        xs.append(lr.predict())
        lr.update(lr.predict())
    assert np.allclose(avg, np.mean(xs, axis=0), atol=1e-15)


@pytest.mark.parametrize("schedule,rate", [
    ("diminishing", lambda G, D, T: 1.5 * G * D / math.sqrt(T)),
    ("strongly_convex", lambda G, D, T: G * G * (1 + math.log(T)) / (2 * T)),
])
def test_sgd_excess_risk(schedule, rate):
    ball = EuclideanBall(2)
    sigma, T = 0.1, 2000
    G, D = 1.0 + sigma, ball.diameter
    sched = StepRule.diminishing(D, G) if schedule == "diminishing" else StepRule.strongly_convex(1.0)
    vals = []
    for seed in range(30):
        xbar = sgd(_noisy_quadratic(sigma), ball, np.array([0.8, 0.0]), T, sched, seed=seed)
        vals.append(0.5 * float(xbar @ xbar))
    vals = np.array(vals)
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert vals.mean() <= rate(G, D, T) + 3 * se


def test_rftl_initial_point_and_entropy_closed_form():
    s = Simplex(2)
    lr = RFTL(s, NegEntropy(s), eta=1.0)
    assert np.allclose(lr.predict(), [0.5, 0.5])
    lr.update(np.array([math.log(2.0), 0.0]))
    assert np.allclose(lr.predict(), [1 / 3, 2 / 3])


def test_rftl_matches_inner_argmin():
    rng = np.random.default_rng(2)
    s = Simplex(4)
    lr = RFTL(s, NegEntropy(s), eta=0.3)
    for _ in range(30):
        lr.update(rng.standard_normal(4))
        x = lr.predict()
        # optimality: eta * sum g + grad R(x) constant over coordinates
        kkt = lr.eta * lr.grad_sum + 1.0 + np.log(x)
        assert np.ptp(kkt) <= 1e-9
    ball = EuclideanBall(3)
    anchor = np.zeros(3)
    lr = RFTL(ball, EuclideanHalfSq(anchor), eta=0.2)
    probes = ball.sample(rng, 200)
    for _ in range(30):
        lr.update(rng.standard_normal(3))
        x = lr.predict()
        grad = lr.eta * lr.grad_sum + (x - anchor)
        # variational inequality: grad^T (z - x) >= 0 for all feasible z
        assert np.min((probes - x) @ grad) >= -1e-9


def test_rftl_unsupported():
    with pytest.raises(UnsupportedCombination):
        RFTL(EuclideanBall(2), NegEntropy(), 1.0)


def test_ftl_instability_and_regularized_fix():
    box = Box([-1.0], [1.0])
    T = 1000
    grads = np.array([[0.5]] + [[-1.0] if t % 2 == 0 else [1.0] for t in range(T - 1)])
    regret_ftl = linear_regret(RFTL(box, None), grads, box)
    assert regret_ftl >= T - 2
    eta = box.diameter / math.sqrt(T)
    regret_reg = linear_regret(RFTL(box, EuclideanHalfSq(np.zeros(1)), eta), grads, box)
    assert regret_reg <= 3 * math.sqrt(T)


def test_omd_zero_gradient_and_entropy_agile_step():
    ball = EuclideanBall(2)
    lr = OMD(ball, EuclideanHalfSq(np.zeros(2)), 0.1, "agile")
    x0 = lr.predict()
    lr.update(np.zeros(2))
    assert np.array_equal(lr.predict(), x0)
    s = Simplex(2)
    lr = OMD(s, NegEntropy(s), math.log(2.0), "agile")
    lr.update(np.array([1.0, 0.0]))
    assert np.allclose(lr.predict(), [1 / 3, 2 / 3], atol=1e-15)


@pytest.mark.parametrize("reg", ["euclidean", "entropy"])
def test_lazy_omd_equals_rftl(reg):
    rng = np.random.default_rng(3)
    if reg == "euclidean":
        fset, r = EuclideanBall(3), EuclideanHalfSq(np.zeros(3))
    else:
        fset = Simplex(3)
        r = NegEntropy(fset)
    a, b = OMD(fset, r, 0.2, "lazy"), RFTL(fset, r, 0.2)
    for _ in range(500):
        assert np.max(np.abs(a.predict() - b.predict())) <= 1e-10
        g = rng.standard_normal(3)
        a.update(g)
        b.update(g)


def test_lazy_and_agile_agree_while_interior():
    rng = np.random.default_rng(4)
    ball = EuclideanBall(2)
    r = EuclideanHalfSq(np.zeros(2))
    lazy, agile = OMD(ball, r, 0.01, "lazy"), OMD(ball, r, 0.01, "agile")
    for _ in range(300):
        g = rng.standard_normal(2)
        lazy.update(g)
        agile.update(g)
        assert np.max(np.abs(lazy.predict() - agile.predict())) <= 1e-12


def test_lazy_and_agile_differ_once_projection_binds():
    # over the unit ball the two variants are not equivalent in general
    ball = EuclideanBall(2)
    r = EuclideanHalfSq(np.zeros(2))
    lazy, agile = OMD(ball, r, 1.0, "lazy"), OMD(ball, r, 1.0, "agile")
    for g in ([-2.0, 0.0], [1.0, 0.0]):
        lazy.update(np.array(g))
        agile.update(np.array(g))
    assert np.allclose(lazy.predict(), [1.0, 0.0])
    assert np.allclose(agile.predict(), [0.0, 0.0])


def test_eg_examples():
    s = Simplex(2)
    lr = EG(s, eta=math.log(2.0))
    lr.update(np.zeros(2))
    assert np.allclose(lr.predict(), [0.5, 0.5])
    lr.update(np.array([1.0, 0.0]))
    assert np.allclose(lr.predict(), [1 / 3, 2 / 3])
    with pytest.raises(MetadataMissing):
        EG(s)


def test_eg_regret_bound():
    rng = np.random.default_rng(5)
    n, T = 10, 10 ** 4
    grads = rng.choice([-1.0, 1.0], size=(T, n))
    grads[:, 3] -= 0.2
    G_inf = float(np.abs(grads).max())
    s = Simplex(n)
    regret = linear_regret(EG(s, T=T, G_inf=G_inf), grads, s)
    assert regret <= eg_regret_bound(T, n, G_inf)


def test_eg_matches_hedge():
    rng = np.random.default_rng(6)
    n, eta = 5, 0.3
    eg, hedge = EG(Simplex(n), eta=eta), Hedge(n, eta)
    for _ in range(300):
        assert np.max(np.abs(eg.predict() - hedge.distribution())) <= 1e-12
        loss = rng.random(n)
        eg.update(loss)
        hedge.update(loss)


def test_adagrad_first_step():
    lr = AdaGrad(Box.cube(3, 10.0), np.zeros(3), eta=1.0)
    lr.update(np.array([1.0, 0.0, 0.0]))
    assert np.allclose(lr.G, np.diag([1.0, 0.0, 0.0]), atol=1e-12)
    assert np.allclose(lr.predict(), [-1.0, 0.0, 0.0], atol=1e-12)


def test_adagrad_one_dimensional_subspace():
    rng = np.random.default_rng(7)
    u = np.array([0.6, 0.8, 0.0])
    lr = AdaGrad(EuclideanBall(3), eta=1.0)
    mags = 0.5 * rng.choice([-1.0, 1.0], 400)
    for c in mags:
        lr.update(c * u)
    assert np.trace(lr.G) == pytest.approx(0.5 * math.sqrt(400), rel=1e-10)


def test_adagrad_trace_bound():
    ball = EuclideanBall(3)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        grads = biased_grads(rng, 300, 3, bias=0.5)
        lr = AdaGrad(ball)
        regret = linear_regret(lr, grads, ball)
        assert regret <= lr.trace_bound()


def test_ons_hand_arithmetic():
    lr = ONS(Box([-5.0], [5.0]), np.zeros(1), gamma=1.0, eps=1.0)
    lr.update(np.array([1.0]))
    assert lr.tracker.base[0, 0] == 2.0
    assert lr.last_y[0] == -0.5
    x = lr.predict()
    lr.update(np.zeros(1))
    assert lr.tracker.base[0, 0] == 2.0 and np.array_equal(lr.predict(), x)


def test_ons_portfolio_bound_and_pythagorean():
    rng = np.random.default_rng(8)
    dom = Simplex(3, mix=1e-3)
    T = 1000
    returns = np.exp(0.05 * rng.standard_normal((T, 3)))
    losses = [LogReturn(r, domain=dom) for r in returns]
    G = max(f.G for f in losses)
    lr = ONS(dom, alpha_exp=1.0, G=G)
    probes = dom.sample(rng, 30)
    played = 0.0
    for f in losses:
        x = lr.predict()
        played += f.value(x)
        lr.observe(f)
        a, y, xn = lr.tracker.base, lr.last_y, lr.predict()
        for u in probes:
            assert (xn - u) @ a @ (xn - u) <= (y - u) @ a @ (y - u) + 1e-9
    best = min(sum(f.value(p) for f in losses) for p in dom.sample(rng, 300))
    assert played - best <= ons_regret_bound(1.0, G, dom.diameter, 3, T)


def test_ocg_unchanged_cases():
    ball = EuclideanBall(2)
    lr = OCG(ball, 100, np.array([0.3, 0.1]), eta=0.5, sigma=lambda t: 0.0)
    lr.update(np.array([1.0, -1.0]))
    lr.update(np.array([1.0, 2.0]))
    assert np.array_equal(lr.predict(), [0.3, 0.1])
    s = Simplex(3)
    lr = OCG(s, 100, np.array([1.0, 0.0, 0.0]), eta=0.5)
    lr.update(np.array([-1.0, 0.0, 0.0]))
    lr.update(np.array([-1.0, 0.0, 0.0]))
    assert np.array_equal(lr.predict(), [1.0, 0.0, 0.0])


def test_ocg_regret_bound():
    rng = np.random.default_rng(9)
    ball = EuclideanBall(2)
    T = 10 ** 4
    grads = biased_grads(rng, T, 2)
    G = float(np.max(np.linalg.norm(grads, axis=1)))
    regret = linear_regret(OCG(ball, T, G=G), grads, ball)
    assert regret <= ocg_regret_bound(ball.diameter, G, T)


def test_fpl_convex_symmetric_noise_centers():
    lr = FPLConvex(EuclideanBall(2), eta=1.0, mc_samples=20000, seed=1, noise="centered_cube")
    assert np.linalg.norm(lr.predict()) <= 4.0 / math.sqrt(20000)
    lr = FPLConvex(EuclideanBall(2), eta=1.0, mc_samples=200, seed=1)
    assert np.all(lr.predict() < 0)  # one-sided noise pushes towards -1


def test_fpl_linear_simplex_oracle():
    s = Simplex(4)
    lr = FPLLinear(s, eta=0.5, seed=3)
    rng = np.random.default_rng(10)
    total = np.zeros(4)
    for _ in range(50):
        g = rng.random(4)
        lr.update(g)
        total += g
        expect = np.zeros(4)
        expect[np.argmin(0.5 * total - lr.noise)] = 1.0
        assert np.array_equal(lr.predict(), expect)


def test_fpl_linear_expected_regret():
    ball = EuclideanBall(2)
    T = 2000
    grads = biased_grads(np.random.default_rng(11), T, 2, bias=0.2)
    G = float(np.max(np.linalg.norm(grads, axis=1)))
    eta = fpl_tuned_eta(2, G, T)
    regrets = [linear_regret(FPLLinear(ball, eta, seed=s), grads, ball) for s in range(50)]
    assert np.mean(regrets) <= fpl_regret_bound(2, ball.diameter, G, T)
