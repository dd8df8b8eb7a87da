"""Time-varying formation offsets h_i(t) and their piecewise switching.

Offsets are closed-form harmonic trajectories, so derivatives are analytic
and switching is exact: each follower's offset is a linear combination of m
base trajectories

    pos_j(t)  = r (a_j cos(w t + phi) + b_j sin(w t + phi))
    vel_j(t)  = d/dt pos_j(t)

stacked as [pos; vel].  Every base trajectory satisfies pos'' = -w^2 pos,
hence any fixed linear combination solves the same generator ODE
h' = (A + B K1) h whenever A + B K1 acts as [[0, I], [-w^2 I, 0]].
"""

from dataclasses import dataclass

import numpy as np

from .errors import FormationError


@dataclass(frozen=True)
class HarmonicFamily:
    """Base trajectory family shared by every follower of a spec.

    Trajectory k is outer(cos(w t + phi_k), ca) + outer(sin(...), cb) with
    fixed coefficient rows, so evaluation is two rank-one products.
    """

    n: int
    n_followers: int
    r: float
    w: float
    component_map: tuple
    phases: np.ndarray

    def __post_init__(self):
        r, w = self.r, self.w
        pos_a = np.array([a for a, _ in self.component_map])
        pos_b = np.array([b for _, b in self.component_map])
        object.__setattr__(self, "_cos_row", np.concatenate(
            [r * pos_a, r * w * pos_b]))
        object.__setattr__(self, "_sin_row", np.concatenate(
            [r * pos_b, -r * w * pos_a]))
        object.__setattr__(self, "_cos_row_dot", np.concatenate(
            [r * w * pos_b, -r * w ** 2 * pos_a]))
        object.__setattr__(self, "_sin_row_dot", np.concatenate(
            [-r * w * pos_a, -r * w ** 2 * pos_b]))

    def base(self, t):
        """(n_followers, n) matrix of base offsets at time t."""
        theta = self.w * t + self.phases
        return (np.outer(np.cos(theta), self._cos_row)
                + np.outer(np.sin(theta), self._sin_row))

    def base_dot(self, t):
        theta = self.w * t + self.phases
        return (np.outer(np.cos(theta), self._cos_row_dot)
                + np.outer(np.sin(theta), self._sin_row_dot))


@dataclass(frozen=True)
class FormationSpec:
    """Piecewise assembly of a harmonic family; right-continuous at switches."""

    family: HarmonicFamily
    starts: np.ndarray        # piece start times, starts[0] = 0
    ends: np.ndarray
    weights: tuple            # one (n_followers, n_followers) matrix per piece
    k1: np.ndarray | None = None

    @property
    def n(self):
        return self.family.n

    @property
    def n_followers(self):
        return self.family.n_followers

    @property
    def switch_times(self):
        return [float(t) for t in self.starts[1:]]

    @property
    def t_end(self):
        return float(self.ends[-1])

    def piece_index(self, t):
        idx = int(np.searchsorted(self.starts, t, side="right")) - 1
        return min(max(idx, 0), len(self.weights) - 1)

    def offsets(self, t, piece=None):
        """(n_followers, n) offsets h_i(t); h is right-continuous at switches."""
        k = self.piece_index(t) if piece is None else piece
        return self.weights[k] @ self.family.base(t)

    def offsets_dot(self, t, piece=None):
        k = self.piece_index(t) if piece is None else piece
        return self.weights[k] @ self.family.base_dot(t)


@dataclass(frozen=True)
class ZeroFormation:
    """h = 0 for every follower: pure consensus tracking, any state dim."""

    n: int
    n_followers: int
    k1: np.ndarray | None = None

    @property
    def switch_times(self):
        return []

    @property
    def t_end(self):
        return np.inf

    def piece_index(self, t):
        return 0

    def offsets(self, t, piece=None):
        return np.zeros((self.n_followers, self.n))

    def offsets_dot(self, t, piece=None):
        return np.zeros((self.n_followers, self.n))


def make_harmonic_spec(n, m, r, w, component_map, t_final=np.inf, k1=None,
                       phases=None):
    """Single-piece spec: follower i runs base trajectory i.

    Phases default to i * 2 pi / m for follower i = 0..m-1.
    """
    component_map = tuple((float(a), float(b)) for a, b in component_map)
    if n != 2 * len(component_map):
        raise FormationError(
            f"state dimension {n} must be twice the {len(component_map)} "
            "mapped position components")
    if r < 0 or w <= 0:
        raise FormationError("need amplitude r >= 0 and rate w > 0")
    if phases is None:
        phases = np.arange(m) * (2.0 * np.pi / m)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (m,):
        raise FormationError("phases must have one entry per follower")
    fam = HarmonicFamily(n=n, n_followers=m, r=float(r), w=float(w),
                         component_map=component_map, phases=phases)
    k1 = None if k1 is None else np.atleast_2d(np.asarray(k1, dtype=float))
    return FormationSpec(family=fam, starts=np.array([0.0]),
                         ends=np.array([float(t_final)]),
                         weights=(np.eye(m),), k1=k1)


def make_piecewise_spec(base_spec, pieces):
    """Spec switching between linear assemblies of base trajectories.

    `pieces` is a list of ((t0, t1), weight matrix) where the intervals
    partition [0, T] in order and each weight matrix maps base trajectories
    to follower offsets.  Linear combinations of generator solutions are
    solutions, so every piece satisfies the same ODE.
    """
    fam = base_spec.family
    m = fam.n_followers
    starts, ends, weights = [], [], []
    for (t0, t1), w_mat in pieces:
        t0, t1 = float(t0), float(t1)
        w_mat = np.asarray(w_mat, dtype=float)
        if w_mat.shape != (m, m):
            raise FormationError(f"assembly must be {m}x{m}, "
                                 f"got {w_mat.shape}")
        if t1 <= t0:
            raise FormationError(f"empty interval [{t0}, {t1})")
        if starts and not np.isclose(t0, ends[-1]):
            raise FormationError(
                f"intervals must be contiguous: [{t0}, {t1}) does not "
                f"start at {ends[-1]}")
        starts.append(t0)
        ends.append(t1)
        weights.append(w_mat)
    if not starts:
        raise FormationError("need at least one piece")
    if starts[0] != 0.0:
        raise FormationError("first interval must start at t = 0")
    return FormationSpec(family=fam, starts=np.asarray(starts),
                         ends=np.asarray(ends), weights=tuple(weights),
                         k1=base_spec.k1)


def validate_spec(spec, a, b, k1, grid, fd_step=1e-5, fd_tol=1e-6):
    """Max generator residual ||h' - (A + B K1) h|| over followers and grid.

    The analytic derivative is cross-checked against central finite
    differences at every usable grid point; disagreement means the offsets
    object itself is inconsistent and raises.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    k1 = np.atleast_2d(np.asarray(k1, dtype=float))
    gen = a + b @ k1
    switch = np.asarray(spec.switch_times)
    worst = 0.0
    for t in np.asarray(grid, dtype=float):
        if switch.size and np.min(np.abs(switch - t)) < 2 * fd_step:
            continue
        h = spec.offsets(t)
        hd = spec.offsets_dot(t)
        resid = hd - h @ gen.T
        scale = 1.0 + np.linalg.norm(h, axis=1)
        worst = max(worst, float(
            (np.linalg.norm(resid, axis=1) / scale).max()))
        piece = spec.piece_index(t)
        fd = (spec.offsets(t + fd_step, piece) -
              spec.offsets(t - fd_step, piece)) / (2 * fd_step)
        fd_err = np.abs(fd - hd).max()
        if fd_err > fd_tol * max(1.0, np.abs(hd).max()):
            raise FormationError(
                f"analytic derivative disagrees with finite differences "
                f"at t = {t} (error {fd_err:.3e})")
    return worst


def centering_diagnostic(spec, grid):
    """Max over the grid of || sum_i h_i(t) ||."""
    worst = 0.0
    for t in np.asarray(grid, dtype=float):
        worst = max(worst, float(np.linalg.norm(spec.offsets(t).sum(axis=0))))
    return worst
