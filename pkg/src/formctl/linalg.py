"""Dense-matrix numerical kernel for small systems (n <= 8).

Everything here is plain numpy on double precision: eigenvalue queries,
Lyapunov and algebraic Riccati solvers, and exact MIMO pole placement.
The Riccati solver is a Newton-Kleinman iteration over Kronecker-vectorized
Lyapunov solves, which is robust and dependency-free at this scale.
"""

import numpy as np

from .errors import LinalgError, PlacementError

SYM_TOL = 1e-10
RESIDUAL_TOL = 1e-8


def _as_square(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinalgError("matrix has non-finite entries")
    return m


def eigvals(m):
    """Eigenvalues of a square matrix, sorted by (real, imag)."""
    return np.sort_complex(np.linalg.eigvals(_as_square(m)))


def spectral_abscissa(m):
    """Largest real part over the spectrum."""
    return float(np.max(np.linalg.eigvals(_as_square(m)).real))


def is_hurwitz(m, tol=0.0):
    """True iff every eigenvalue has real part < -tol."""
    return spectral_abscissa(m) < -tol


def pd_check(m):
    """(is positive definite, smallest eigenvalue) for a symmetric matrix."""
    m = _as_square(m)
    scale = max(1.0, np.abs(m).max())
    if np.abs(m - m.T).max() > SYM_TOL * scale:
        raise LinalgError("pd_check requires a symmetric matrix")
    lam_min = float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])
    return lam_min > 0.0, lam_min


def solve_lyapunov(a, rhs):
    """Solve a' X + X a = -rhs for symmetric X via Kronecker vectorization.

    Unique when no two eigenvalues of `a` sum to zero; X > 0 whenever `a`
    is Hurwitz and rhs > 0.
    """
    a = _as_square(a)
    rhs = _as_square(rhs)
    n = a.shape[0]
    if rhs.shape[0] != n:
        raise LinalgError("dimension mismatch between a and rhs")
    eye = np.eye(n)
    mat = np.kron(eye, a.T) + np.kron(a.T, eye)
    try:
        vec = np.linalg.solve(mat, -rhs.flatten(order="F"))
    except np.linalg.LinAlgError as exc:
        raise LinalgError("singular Lyapunov operator "
                          "(two eigenvalues of a sum to zero)") from exc
    x = vec.reshape((n, n), order="F")
    x = 0.5 * (x + x.T)
    resid = np.linalg.norm(a.T @ x + x @ a + rhs)
    if resid > RESIDUAL_TOL * max(1.0, np.linalg.norm(rhs)):
        raise LinalgError(f"Lyapunov residual too large: {resid:.3e}")
    return x


def ctrb(a, b):
    """Controllability matrix [b, ab, ..., a^(n-1) b]."""
    a = _as_square(a)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n = a.shape[0]
    blocks = [b]
    for _ in range(n - 1):
        blocks.append(a @ blocks[-1])
    return np.hstack(blocks)


def pbh_stabilizable(a, b, tol=1e-9):
    """PBH test: rank [lam I - A, B] = n at every eigenvalue with Re >= 0."""
    a = _as_square(a)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n = a.shape[0]
    for lam in np.linalg.eigvals(a):
        if lam.real >= -tol:
            m = np.hstack([lam * np.eye(n) - a, b.astype(complex)])
            if np.linalg.matrix_rank(m) < n:
                return False
    return True


def pbh_detectable(a, c, tol=1e-9):
    """PBH detectability of (a, c), dual of stabilizability."""
    return pbh_stabilizable(np.asarray(a, dtype=float).T,
                            np.asarray(c, dtype=float).T, tol=tol)


def _real_block_from_targets(targets):
    """Real block-diagonal matrix whose spectrum is the target list."""
    remaining = list(targets)
    blocks = []
    while remaining:
        lam = remaining.pop(0)
        if abs(lam.imag) < 1e-12:
            blocks.append(np.array([[lam.real]]))
            continue
        conj = np.conj(lam)
        dists = [abs(other - conj) for other in remaining]
        if not dists or min(dists) > 1e-9 * max(1.0, abs(lam)):
            raise PlacementError("targets are not closed under conjugation")
        remaining.pop(int(np.argmin(dists)))
        s, w = lam.real, abs(lam.imag)
        blocks.append(np.array([[s, w], [-w, s]]))
    out = np.zeros((len(targets), len(targets)))
    k = 0
    for blk in blocks:
        d = blk.shape[0]
        out[k:k + d, k:k + d] = blk
        k += d
    return out


def _spectrum_matches(actual, wanted, rtol):
    actual = np.sort_complex(np.asarray(actual, dtype=complex))
    wanted = np.sort_complex(np.asarray(wanted, dtype=complex))
    if actual.shape != wanted.shape:
        return False
    scale = np.maximum(1.0, np.abs(wanted))
    return bool(np.all(np.abs(actual - wanted) <= rtol * scale))


def pole_place(a, b, targets, rtol=1e-6, max_attempts=25, seed=0):
    """Gain K (p x n) with eig(a + b K) equal to `targets`.

    Sylvester parameterization: draw a right factor G, solve
    a X - X F = b G for X with F carrying the target spectrum, and set
    K = -G X^(-1).  Resamples G on ill-conditioned X.
    """
    a = _as_square(a)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n = a.shape[0]
    p = b.shape[1]
    targets = np.asarray(targets, dtype=complex).ravel()
    if targets.size != n:
        raise PlacementError(f"need {n} targets, got {targets.size}")
    f = _real_block_from_targets(list(targets))
    eye = np.eye(n)
    op = np.kron(eye, a) - np.kron(f.T, eye)
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        g = rng.standard_normal((p, n))
        try:
            vec = np.linalg.solve(op, (b @ g).flatten(order="F"))
        except np.linalg.LinAlgError:
            continue
        x = vec.reshape((n, n), order="F")
        if np.linalg.cond(x) > 1e9:
            continue
        k = -np.linalg.solve(x.T, g.T).T
        if _spectrum_matches(np.linalg.eigvals(a + b @ k), targets, rtol):
            return k
    raise PlacementError("pole placement failed: targets may hit "
                         "uncontrollable modes or be ill-conditioned")


def _controllable_staircase(a, b, tol=None):
    """Orthogonal T = [V1 V2] with V1 spanning the controllable subspace."""
    co = ctrb(a, b)
    u, s, _ = np.linalg.svd(co)
    if tol is None:
        tol = max(co.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    r = int(np.sum(s > tol))
    return u, r


def stabilizing_gain(a, b):
    """Some K with a + b K Hurwitz, for any stabilizable pair (a, b).

    Exact placement on the controllable block of the staircase form; the
    uncontrollable block must already be Hurwitz.
    """
    a = _as_square(a)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n = a.shape[0]
    p = b.shape[1]
    if is_hurwitz(a):
        return np.zeros((p, n))
    t, r = _controllable_staircase(a, b)
    a_t = t.T @ a @ t
    b_t = t.T @ b
    if r < n and not is_hurwitz(a_t[r:, r:]):
        raise LinalgError("pair (a, b) is not stabilizable")
    if r == 0:
        return np.zeros((p, n))
    targets = [-(1.0 + i) for i in range(r)]
    k1 = pole_place(a_t[:r, :r], b_t[:r, :], targets)
    k = np.zeros((p, n))
    k[:, :r] = k1
    return k @ t.T


def newton_kleinman_care(a, b, q, r, max_iter=60):
    """Stabilizing solution of a' X + X a - X b r^(-1) b' X + q = 0.

    Newton-Kleinman iteration: each step solves one Lyapunov equation for
    the closed loop of the previous gain; convergence is quadratic from any
    stabilizing start.  Keeps the iterate with the smallest equation
    residual, so late-stage rounding noise cannot undo convergence.
    """
    a = _as_square(a)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    q = _as_square(q)
    r = _as_square(r)
    rinv = np.linalg.inv(r)
    s = b @ rinv @ b.T
    k = stabilizing_gain(a, b)
    best_x, best_resid = None, np.inf
    for _ in range(max_iter):
        x = solve_lyapunov(a + b @ k, q + k.T @ r @ k)
        resid = np.linalg.norm(a.T @ x + x @ a - x @ s @ x + q)
        if resid < best_resid:
            best_x, best_resid = x, resid
        if resid <= 1e-13 * max(1.0, np.linalg.norm(x @ s @ x)):
            break
        k_next = -rinv @ b.T @ x
        if np.abs(k_next - k).max() <= 1e-14 * max(1.0, np.abs(k).max()):
            break
        k = k_next
    x = best_x
    scale = max(1.0, np.linalg.norm(q), np.linalg.norm(x @ s @ x))
    if best_resid > RESIDUAL_TOL * scale:
        raise LinalgError(f"Riccati iteration did not converge "
                          f"(residual {best_resid:.3e})")
    return 0.5 * (x + x.T)


def solve_observer_are(a, c):
    """X > 0 solving a X + X a' - X c' c X + I = 0 for a detectable (a, c).

    Dual of the state-feedback Riccati equation; Q = X^(-1) then satisfies
    Q a + a' Q - 2 c' c = -(Q^2 + c' c) < 0.
    """
    a = _as_square(a)
    c = np.atleast_2d(np.asarray(c, dtype=float))
    if not pbh_detectable(a, c):
        raise LinalgError("pair (a, c) is not detectable")
    n = a.shape[0]
    try:
        x = newton_kleinman_care(a.T, c.T, np.eye(n), np.eye(c.shape[0]))
    except LinalgError as exc:
        raise LinalgError(f"observer Riccati solve failed: {exc}") from exc
    ok, lam_min = pd_check(x)
    if not ok:
        raise LinalgError(f"Riccati solution not positive definite "
                          f"(lambda_min = {lam_min:.3e})")
    return x
