import numpy as np
import pytest

from ocolab.errors import DomainViolation
from ocolab.geometry import EuclideanBall, Simplex
from ocolab.linalg_core import sym_eig
from ocolab.losses import (AbsSum, Hinge, Linear, LogReturn, Quadratic, SquaredObserved, Sum,
                           smooth, subgradient, value)


def _losses(rng):
    g = rng.standard_normal((3, 3))
    return [
        Linear(rng.standard_normal(3)),
        Quadratic(g @ g.T, rng.standard_normal(3), 0.3, EuclideanBall(3)),
        Hinge(rng.standard_normal(3), 1),
        Hinge(rng.standard_normal(3), -1),
        LogReturn(rng.uniform(0.5, 2.0, 3)),
        AbsSum(3, 0.5),
    ]


def _points(rng, f, count):
    if isinstance(f, LogReturn):
        return Simplex(3).sample(rng, count)
    return rng.uniform(-1, 1, (count, 3))


def test_examples():
    h = Hinge(np.array([1.0, 0.0]), 1)
    assert value(h, np.array([2.0, 0.0])) == 0.0
    assert np.array_equal(subgradient(h, np.array([2.0, 0.0])), [0.0, 0.0])
    lr = LogReturn(np.array([2.0, 0.5]))
    assert value(lr, np.array([0.5, 0.5])) == pytest.approx(-np.log(1.25))
    sq = SquaredObserved.single((2, 2), 0, 0, 1.0)
    g = sq.gradient(np.zeros((2, 2)))
    assert g[0, 0] == -1.0 and np.count_nonzero(g) == 1


def test_hinge_kink_takes_active_branch():
    h = Hinge(np.array([1.0, 2.0]), -1)
    x = np.array([-1.0, 0.0])  # margin exactly 1
    assert np.array_equal(h.gradient(x), [1.0, 2.0])


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    step = 1e-6
    for f in _losses(rng):
        for x in _points(rng, f, 100):
            if isinstance(f, Hinge) and abs(1.0 - f.b * (x @ f.a)) < 1e-6:
                continue
            if isinstance(f, AbsSum) and np.min(np.abs(x)) < 1e-6:
                continue
            g = f.gradient(x)
            fd = np.array([(f.value(x + step * e) - f.value(x - step * e)) / (2 * step)
                           for e in np.eye(3)])
            assert np.linalg.norm(fd - g) <= 1e-5 * max(1.0, np.linalg.norm(g)), f.kind


def test_subgradient_convexity_certificate():
    rng = np.random.default_rng(1)
    for f in _losses(rng):
        xs, ys = _points(rng, f, 200), _points(rng, f, 200)
        for x, y in zip(xs, ys):
            assert f.value(y) >= f.value(x) + f.gradient(x) @ (y - x) - 1e-9, f.kind


def test_quadratic_metadata_brackets_spectrum():
    rng = np.random.default_rng(2)
    for _ in range(20):
        g = rng.standard_normal((4, 4))
        q = Quadratic(g @ g.T + 0.1 * np.eye(4))
        vals, _ = sym_eig(q.a)
        assert q.alpha <= vals.min() + 1e-12 and q.beta >= vals.max() - 1e-12


def test_quadratic_gradient_bound_on_domain():
    rng = np.random.default_rng(3)
    ball = EuclideanBall(3, 2.0)
    q = Quadratic(np.diag([1.0, 2.0, 3.0]), np.array([0.5, 0.0, -1.0]), domain=ball)
    for x in ball.sample(rng, 500):
        assert np.linalg.norm(q.gradient(x)) <= q.G + 1e-12


def test_log_return_exp_concavity():
    rng = np.random.default_rng(4)
    f = LogReturn(rng.uniform(0.5, 2.0, 4))
    for x in Simplex(4).sample(rng, 100):
        g = f.gradient(x)
        m = f.hessian(x) - f.alpha_exp * np.outer(g, g)
        assert np.linalg.eigvalsh(m).min() >= -1e-12


def test_log_return_domain_errors():
    with pytest.raises(DomainViolation):
        LogReturn(np.array([1.0, 0.0]))
    f = LogReturn(np.array([1.0, 2.0]))
    with pytest.raises(DomainViolation):
        f.value(np.array([-1.0, 0.0]))


def test_log_return_gradient_bound_on_mixed_simplex():
    rng = np.random.default_rng(5)
    dom = Simplex(3, mix=1e-3)
    f = LogReturn(np.array([2.0, 0.5, 1.0]), domain=dom)
    pts = np.vstack([dom.sample(rng, 500), [dom.linear_opt(-f.r), dom.linear_opt(f.r)]])
    assert np.max(np.linalg.norm(f.gradient(pts), axis=1)) <= f.G + 1e-12


def test_shannon_construction():
    k = 50
    r = np.array([[2.0, 0.5], [0.5, 2.0]] * k)
    single = np.log(r).sum(axis=0)
    assert np.allclose(single, 0.0)
    crp = -sum(LogReturn(rt).value(np.array([0.5, 0.5])) for rt in r)
    assert crp == pytest.approx(2 * k * np.log(1.25))


def test_smooth_linear_is_identity():
    f = Linear(np.array([1.0, 2.0]))
    for delta in (0.01, 0.5, 3.0):
        assert smooth(f, delta) is f


def test_smooth_quadratic_closed_form():
    f = Quadratic(2.0 * np.eye(2))  # ||x||^2
    samples = 10 ** 6
    fh = smooth(f, 0.1, samples=samples, seed=3)
    est = fh.value(np.zeros(2))
    per = f.value(fh.offsets)
    mc_sigma = per.std() / np.sqrt(samples)
    assert abs(est - 0.005) <= 3 * mc_sigma


def test_smooth_close_to_original_on_lipschitz_losses():
    rng = np.random.default_rng(6)
    for f in (Hinge(np.array([0.6, -0.8]), 1), AbsSum(2)):
        delta = 0.2
        fh = smooth(f, delta, samples=256, seed=1, dim=2)
        for x in rng.uniform(-1, 1, (50, 2)):
            assert abs(fh.value(x) - f.value(x)) <= delta * f.G + 1e-12


def test_smooth_is_deterministic():
    f = Hinge(np.array([1.0, 1.0]), 1)
    a = smooth(f, 0.1, samples=32, seed=9)
    b = smooth(f, 0.1, samples=32, seed=9)
    x = np.array([0.3, 0.2])
    assert a.value(x) == b.value(x)
    assert np.array_equal(a.gradient(x), b.gradient(x))


def test_sum_metadata():
    s = Sum(AbsSum(2), Quadratic(np.eye(2), domain=EuclideanBall(2)))
    assert s.alpha == pytest.approx(1.0)
    assert s.value(np.array([1.0, -1.0])) == pytest.approx(3.0)
