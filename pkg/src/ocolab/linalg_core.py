"""Dense symmetric matrix kernels.

Rank-1 inverse maintenance, a cyclic Jacobi eigensolver, PSD square root and
pseudo-inverse, and a shifted power method for top eigenpairs.
"""

import numpy as np

from .errors import DegenerateDenominator, DimensionMismatch, NoConvergence, NotPSD

DEFAULTS = {
    "refresh_every": 256,
    "drift_tol": 1e-8,
    "jacobi_tol": 1e-13,
    "jacobi_max_sweeps": 100,
    "power_tol": 1e-10,
    "power_max_iter": 100000,
    "pinv_rel_cutoff": 1e-12,
    "psd_neg_tol": 1e-6,
}


def symmetrize(m):
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def _check_square(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


class InverseTracker:
    """Keeps a symmetric matrix and its inverse in sync under rank-1 updates.

    The inverse is rebuilt from scratch every ``refresh_every`` updates, or
    sooner when a cheap residual probe shows drift above ``drift_tol``.
    """

    def __init__(self, base, refresh_every=DEFAULTS["refresh_every"],
                 drift_tol=DEFAULTS["drift_tol"]):
        base = symmetrize(_check_square(base, "base"))
        self.base = base
        self.inverse = symmetrize(np.linalg.inv(base))
        self.refresh_every = int(refresh_every)
        self.drift_tol = float(drift_tol)
        self.n_updates = 0
        self.n_refresh = 0

    @property
    def dim(self):
        return self.base.shape[0]

    def drift(self):
        """Frobenius norm of base @ inverse - I."""
        return float(np.linalg.norm(self.base @ self.inverse - np.eye(self.dim)))

    def refresh(self):
        self.inverse = symmetrize(np.linalg.inv(self.base))
        self.n_refresh += 1

    def update(self, x):
        return sherman_morrison_update(self, x)

    def copy(self):
        other = InverseTracker.__new__(InverseTracker)
        other.__dict__.update(self.__dict__)
        other.base = self.base.copy()
        other.inverse = self.inverse.copy()
        return other


def sherman_morrison_update(tracker: InverseTracker, x) -> InverseTracker:
    """Apply base += x x^T and update the inverse with the rank-1 formula.

    Mutates and returns ``tracker``. A zero vector leaves it untouched.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != tracker.dim:
        raise DimensionMismatch(f"vector of length {x.shape[0]} for dim {tracker.dim}")
    if not np.any(x):
        return tracker
    ax = tracker.inverse @ x
    denom = 1.0 + float(x @ ax)
    if denom <= 1e-14:
        raise DegenerateDenominator(f"1 + x^T A^-1 x = {denom:.3e}")
    tracker.base = symmetrize(tracker.base + np.outer(x, x))
    tracker.inverse = symmetrize(tracker.inverse - np.outer(ax, ax) / denom)
    tracker.n_updates += 1
    # residual probe on the update direction: (A + xx^T) (A^-1 x / denom) = x
    probe = tracker.base @ (ax / denom) - x
    rel = np.linalg.norm(probe) / max(np.linalg.norm(x), 1e-300)
    if tracker.n_updates % tracker.refresh_every == 0 or rel > tracker.drift_tol:
        tracker.refresh()
    return tracker


def _normalize_sign(v):
    i = int(np.argmax(np.abs(v)))
    return v if v[i] >= 0 else -v


def power_method(m, tol=DEFAULTS["power_tol"], max_iter=DEFAULTS["power_max_iter"], seed=0):
    """Algebraically largest eigenpair of a symmetric matrix.

    Iterates on m + sI with s slightly above the largest absolute row sum (a
    Gershgorin bound), so the shifted matrix is positive definite and shares
    eigenvectors with m.
    Stops when ||m v - lam v|| <= tol ||m||_F, so the test is scale free.
    """
    m = symmetrize(_check_square(m))
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = m.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    scale = float(np.linalg.norm(m))
    if scale == 0.0:
        return 0.0, _normalize_sign(v)
    shift = 1.01 * float(np.abs(m).sum(axis=1).max())
    shifted = m + shift * np.eye(n)
    best_v, best_res, lam = v, np.inf, float(v @ m @ v)
    for it in range(1, max_iter + 1):
        w = shifted @ v
        v = w / np.linalg.norm(w)
        mv = m @ v
        lam = float(v @ mv)
        res = float(np.linalg.norm(mv - lam * v))
        if res < best_res:
            best_v, best_res = v, res
        if res <= tol * scale:
            return lam, _normalize_sign(v)
    raise NoConvergence(f"power method residual {best_res:.3e} after {max_iter} iterations",
                        best=(float(best_v @ m @ best_v), best_v), iterations=max_iter)


def _off_norm(a):
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def sym_eig(m, tol=DEFAULTS["jacobi_tol"], max_sweeps=DEFAULTS["jacobi_max_sweeps"], basis=None):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ascending eigenvalues and an orthonormal matrix of eigenvectors
    (as columns). ``basis`` is an optional orthonormal warm start, e.g. the
    eigenvectors of a nearby matrix; it cuts the sweep count to one or two.
    """
    m = symmetrize(_check_square(m))
    n = m.shape[0]
    if basis is None:
        a = m.copy()
        v = np.eye(n)
    else:
        v = np.array(basis, dtype=float)
        if v.shape != (n, n):
            raise DimensionMismatch("basis shape does not match matrix")
        a = symmetrize(v.T @ m @ v)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = _off_norm(a)
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300 or abs(apq) <= 1e-18 * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        off = _off_norm(a)
        if off > tol * scale:
            raise NoConvergence(f"Jacobi off-diagonal norm {off:.3e} after {max_sweeps} sweeps",
                                best=(np.diag(a).copy(), v))
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def _psd_eig(m, eig=None):
    values, vectors = sym_eig(m) if eig is None else eig
    top = max(float(np.max(np.abs(values))), 0.0) if values.size else 0.0
    if values.size and values.min() < -DEFAULTS["psd_neg_tol"] * max(top, 1e-300):
        raise NotPSD(f"eigenvalue {values.min():.3e} below tolerance")
    # eigenvalues at roundoff level are zero (their square roots would not be small)
    noise = DEFAULTS["pinv_rel_cutoff"] * max(top, 0.0)
    return np.where(values > noise, values, 0.0), vectors


def sqrt_psd(m, eig=None):
    """Symmetric square root of a PSD matrix.

    Negative eigenvalues and those below 1e-12 * largest are set to zero.
    """
    values, vectors = _psd_eig(m, eig)
    return symmetrize((vectors * np.sqrt(values)) @ vectors.T)


def pinv_psd(m, cutoff=None, eig=None):
    """Moore-Penrose pseudo-inverse of a PSD matrix.

    Eigenvalues below ``cutoff`` (default 1e-12 * largest) are treated as zero.
    """
    values, vectors = _psd_eig(m, eig)
    top = float(values.max()) if values.size else 0.0
    if cutoff is None:
        cutoff = DEFAULTS["pinv_rel_cutoff"] * top
    inv = np.zeros_like(values)
    keep = values > cutoff
    if top > 0:
        inv[keep] = 1.0 / values[keep]
    return symmetrize((vectors * inv) @ vectors.T)
