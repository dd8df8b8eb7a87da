"""Communication topologies and the graph-theoretic quantities they induce.

Conventions: N followers indexed 1..N (arrays 0-based), one leader.  An
adjacency weight a_ij > 0 means follower i receives information from
follower j; the pinning gain d_i > 0 means follower i receives the leader's
output.  The Laplacian is L = diag(row sums) - A, so rows sum to zero.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import TopologyError
from .linalg import pd_check

ZERO_EIG_REL_TOL = 1e-8
LEFT_NULL_TOL = 1e-10


@dataclass(frozen=True)
class Topology:
    """Weighted follower digraph plus leader-pinning gains."""

    adjacency: np.ndarray
    pinning: np.ndarray
    directed: bool = True

    @property
    def n_followers(self):
        return self.adjacency.shape[0]

    @property
    def has_leader(self):
        return bool(np.any(self.pinning > 0))


@dataclass(frozen=True)
class SpectralFacts:
    """Derived spectral quantities the adaptive protocols rely on."""

    laplacian: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    g_diag: np.ndarray | None = None
    r_left: np.ndarray | None = None
    lambda2_hat: float | None = None
    lambda0: float | None = None
    extras: dict = field(default_factory=dict)


def build_topology(adjacency, pinning, directed=True):
    """Validate raw arrays into a Topology.

    Requires a square nonnegative matrix with zero diagonal; symmetry is
    enforced when directed=False.
    """
    a = np.array(adjacency, dtype=float)
    d = np.array(pinning, dtype=float).ravel()
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise TopologyError(f"adjacency must be square, got shape {a.shape}")
    n = a.shape[0]
    if d.shape[0] != n:
        raise TopologyError(
            f"pinning length {d.shape[0]} does not match {n} followers")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(d))):
        raise TopologyError("weights must be finite")
    if np.any(a < 0) or np.any(d < 0):
        raise TopologyError("weights must be nonnegative")
    if np.any(np.diag(a) != 0):
        raise TopologyError("self-loops (a_ii != 0) are not allowed")
    if not directed and not np.array_equal(a, a.T):
        raise TopologyError("undirected topology requires a symmetric "
                            "adjacency matrix")
    a.setflags(write=False)
    d.setflags(write=False)
    return Topology(adjacency=a, pinning=d, directed=directed)


def laplacian(topo):
    """Follower Laplacian with assembled zero row sums.

    The diagonal is set to the negated off-diagonal row sum, so rows sum to
    exactly zero whenever the weight sums are exactly representable (any
    integer or dyadic-rational weights); otherwise to rounding error.
    """
    a = topo.adjacency
    n = a.shape[0]
    lap = -a.copy()
    np.fill_diagonal(lap, 0.0)
    np.fill_diagonal(lap, -lap.sum(axis=1))
    row = lap.sum(axis=1)
    if row.any():
        lap[np.arange(n), np.arange(n)] -= row
    lap += 0.0   # clear negative zeros from the off-diagonal negation
    return lap


def augmented_laplacian(topo):
    """Laplacian of the (N+1)-node graph with the leader as node 0."""
    n = topo.n_followers
    full = np.zeros((n + 1, n + 1))
    lap = laplacian(topo)
    full[1:, 1:] = lap
    full[1:, 0] = -topo.pinning
    full[np.arange(1, n + 1), np.arange(1, n + 1)] += topo.pinning
    return full


def _reachable(start, out_edges):
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for nxt in out_edges[node]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _follower_out_edges(topo, transpose=False):
    a = topo.adjacency
    n = a.shape[0]
    edges = {i: [] for i in range(n)}
    for i in range(n):
        for j in range(n):
            if a[i, j] > 0:
                # i receives from j: information edge j -> i
                if transpose:
                    edges[i].append(j)
                else:
                    edges[j].append(i)
    return edges


def has_spanning_tree_from_leader(topo):
    """True iff every follower is reachable from the leader node."""
    n = topo.n_followers
    edges = _follower_out_edges(topo)
    edges[-1] = [i for i in range(n) if topo.pinning[i] > 0]
    return len(_reachable(-1, edges)) == n + 1


def is_strongly_connected(topo):
    """True iff every ordered follower pair is joined by a directed path."""
    n = topo.n_followers
    if n == 1:
        return True
    fwd = _follower_out_edges(topo)
    bwd = _follower_out_edges(topo, transpose=True)
    return (len(_reachable(0, fwd)) == n) and (len(_reachable(0, bwd)) == n)


def partition_followers(topo):
    """(L1, L2) blocks of the leader-rooted Laplacian.

    L1 = follower Laplacian + diag(pinning); L2 = -pinning column, so that
    L1 @ 1 = -L2.
    """
    l1 = laplacian(topo).copy()
    n = topo.n_followers
    l1[np.arange(n), np.arange(n)] += topo.pinning
    l2 = -topo.pinning.reshape(n, 1)
    return l1, l2


def is_nonsingular_m_matrix(m, tol=1e-9):
    m = np.asarray(m, dtype=float)
    off = m - np.diag(np.diag(m))
    if np.any(off > tol):
        return False
    return bool(np.min(np.linalg.eigvals(m).real) > tol)


def diag_G_for_M_matrix(l1, max_ascent=500):
    """Positive diagonal G with G L1 + L1' G > 0, plus its lambda_min.

    Starts from the solution of L1' g = 1 (entrywise positive because the
    inverse of a nonsingular M-matrix is nonnegative) and, if that fails the
    definiteness check, runs projected gradient ascent on lambda_min.
    """
    l1 = np.asarray(l1, dtype=float)
    if not is_nonsingular_m_matrix(l1):
        raise TopologyError("L1 is not a nonsingular M-matrix")
    n = l1.shape[0]
    g = np.linalg.solve(l1.T, np.ones(n))
    if np.any(g <= 0):
        raise TopologyError("candidate diagonal is not positive")

    def lam_min(vec):
        m = np.diag(vec) @ l1 + l1.T @ np.diag(vec)
        return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])

    lam = lam_min(g)
    if lam <= 0:
        step = 0.1
        for _ in range(max_ascent):
            m = np.diag(g) @ l1 + l1.T @ np.diag(g)
            w, v = np.linalg.eigh(0.5 * (m + m.T))
            vmin = v[:, 0]
            grad = np.array([2.0 * vmin[k] * (l1[k, :] @ vmin)
                             for k in range(n)])
            g = np.clip(g + step * grad, 1e-8, None)
            g = g / g.max()
            lam = lam_min(g)
            if lam > 0:
                break
        if lam <= 0:
            raise TopologyError("no positive diagonal certificate found")
    big_g = np.diag(g)
    ok, lam0 = pd_check(big_g @ l1 + l1.T @ big_g)
    if not ok:
        raise TopologyError("definiteness certificate failed")
    return big_g, lam0


def left_null_vector(topo):
    """Positive left null vector r of the follower Laplacian, sum(r) = 1."""
    if not is_strongly_connected(topo):
        raise TopologyError("left null vector requires a strongly "
                            "connected graph")
    lap = laplacian(topo)
    u, s, _ = np.linalg.svd(lap)
    r = u[:, -1]
    if r.sum() < 0:
        r = -r
    r = r / r.sum()
    if np.min(r) <= 0:
        raise TopologyError("null vector is not entrywise positive")
    if np.abs(r @ lap).max() > LEFT_NULL_TOL:
        raise TopologyError("left null vector residual too large")
    return r


def lambda2_symmetrized(topo, r):
    """Second-smallest eigenvalue of R L + L' R for R = diag(r)."""
    if topo.n_followers < 2:
        raise TopologyError("algebraic connectivity needs at least 2 nodes")
    lap = laplacian(topo)
    big_r = np.diag(np.asarray(r, dtype=float))
    sym = big_r @ lap + lap.T @ big_r
    vals = np.linalg.eigvalsh(0.5 * (sym + sym.T))
    return float(vals[1])


def simple_zero_eigenvalue(topo):
    """True iff zero is a simple eigenvalue of the graph Laplacian.

    Uses the augmented (leader + followers) Laplacian when any pinning gain
    is positive, otherwise the follower Laplacian.
    """
    lap = augmented_laplacian(topo) if topo.has_leader else laplacian(topo)
    vals = np.linalg.eigvals(lap)
    tol = ZERO_EIG_REL_TOL * max(1.0, np.linalg.norm(lap))
    return int(np.sum(np.abs(vals) < tol)) == 1


def spectral_facts(topo):
    """Bundle of every derived quantity that applies to this topology."""
    lap = laplacian(topo)
    l1, l2 = partition_followers(topo)
    g_diag = r_left = None
    lambda2 = lambda0 = None
    if is_nonsingular_m_matrix(l1):
        g_diag, lambda0 = diag_G_for_M_matrix(l1)
    if is_strongly_connected(topo):
        r_left = left_null_vector(topo)
        if topo.n_followers >= 2:
            lambda2 = lambda2_symmetrized(topo, r_left)
    return SpectralFacts(laplacian=lap, l1=l1, l2=l2, g_diag=g_diag,
                         r_left=r_left, lambda2_hat=lambda2, lambda0=lambda0)
