"""Controller gain synthesis and numerical feasibility certificates.

Output-feedback regimes need a positive definite Q with
Q A + A' Q - 2 C' C < 0; we obtain one constructively as the inverse of the
Riccati solution X of A X + X A' - X C' C X + I = 0, which makes the
inequality strictly feasible with margin Q^2 + C' C.  The relative-state
regimes use the dual inequality A Qt + Qt A' - 2 B B' < 0.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import SynthesisError

# printed reference matrices are rounded; certificates on them get slack
DEFAULT_CERT_TOL = 1e-9


@dataclass(frozen=True)
class LtiModel:
    """Shared plant (A, B, C); stabilizable and detectable by assumption."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        c = np.atleast_2d(np.asarray(self.c, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise SynthesisError("A must be square")
        if b.shape[0] != a.shape[0]:
            raise SynthesisError("B row count must match A")
        if c.shape[1] != a.shape[0]:
            raise SynthesisError("C column count must match A")
        if not linalg.pbh_stabilizable(a, b):
            raise SynthesisError("(A, B) is not stabilizable")
        if not linalg.pbh_detectable(a, c):
            raise SynthesisError("(A, C) is not detectable")
        for name, m in (("a", a), ("b", b), ("c", c)):
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def p(self):
        return self.b.shape[1]

    @property
    def q(self):
        return self.c.shape[0]


@dataclass
class GainSet:
    """Every controller matrix a regime may need, plus residual certificates."""

    k1: np.ndarray | None = None
    k2: np.ndarray | None = None
    f: np.ndarray | None = None
    gamma: np.ndarray | None = None
    q_mat: np.ndarray | None = None
    s_mat: np.ndarray | None = None
    q_tilde: np.ndarray | None = None
    f_tilde: np.ndarray | None = None
    gamma_tilde: np.ndarray | None = None
    beta: float | None = None
    certificates: dict = field(default_factory=dict)

    _MATS = ("k1", "k2", "f", "gamma", "q_mat", "s_mat",
             "q_tilde", "f_tilde", "gamma_tilde")

    def to_json(self):
        out = {}
        for name in self._MATS:
            m = getattr(self, name)
            if m is not None:
                out[name] = np.asarray(m).tolist()
        if self.beta is not None:
            out["beta"] = self.beta
        out["certificates"] = {k: float(v) for k, v in self.certificates.items()}
        return json.dumps(out, indent=2)

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        kwargs = {}
        for name in cls._MATS:
            if name in raw:
                kwargs[name] = np.array(raw[name], dtype=float)
        if "beta" in raw:
            kwargs["beta"] = float(raw["beta"])
        kwargs["certificates"] = dict(raw.get("certificates", {}))
        return cls(**kwargs)


def synth_output_gains(model):
    """(Q, F, Gamma) for the output-feedback regimes.

    Q = X^(-1) with X the observer Riccati solution, F = -Q^(-1) C' = -X C',
    Gamma = I.  Also asserts A + F C Hurwitz, which the construction implies.
    """
    try:
        x = linalg.solve_observer_are(model.a, model.c)
    except linalg.LinalgError as exc:
        raise SynthesisError(f"output gain synthesis failed: {exc}") from exc
    q_mat = np.linalg.inv(x)
    q_mat = 0.5 * (q_mat + q_mat.T)
    f = -x @ model.c.T
    gamma = np.eye(model.q)
    lmi = q_mat @ model.a + model.a.T @ q_mat - 2.0 * model.c.T @ model.c
    lam = float(np.linalg.eigvalsh(0.5 * (lmi + lmi.T))[-1])
    if lam >= 0:
        raise SynthesisError(f"output LMI certificate failed ({lam:.3e})")
    if not linalg.is_hurwitz(model.a + f @ model.c):
        raise SynthesisError("A + F C is not Hurwitz")
    return q_mat, f, gamma


def synth_state_gains(model):
    """(Qt, Ft, Gammat) for the relative-state regimes."""
    try:
        x = linalg.solve_observer_are(model.a.T, model.b.T)
    except linalg.LinalgError as exc:
        raise SynthesisError(f"state gain synthesis failed: {exc}") from exc
    q_tilde = np.linalg.inv(x)
    q_tilde = 0.5 * (q_tilde + q_tilde.T)
    f_tilde = -model.b.T @ x
    gamma_tilde = f_tilde.T @ f_tilde
    lmi = model.a @ q_tilde + q_tilde @ model.a.T - 2.0 * model.b @ model.b.T
    lam = float(np.linalg.eigvalsh(0.5 * (lmi + lmi.T))[-1])
    if lam >= 0:
        raise SynthesisError(f"state LMI certificate failed ({lam:.3e})")
    return q_tilde, f_tilde, gamma_tilde


def synth_k2(model, poles=None, weights=None):
    """Stabilizing feedback K2, by exact placement or an LQR fallback.

    Pass `poles` (self-conjugate, negative real parts) for placement, or
    `weights` = (Q, R) positive definite cost matrices.
    """
    if (poles is None) == (weights is None):
        raise SynthesisError("specify exactly one of poles or weights")
    if poles is not None:
        poles = np.asarray(poles, dtype=complex)
        if np.any(poles.real >= 0):
            raise SynthesisError("target poles must have negative real parts")
        try:
            k2 = linalg.pole_place(model.a, model.b, poles)
        except linalg.PlacementError as exc:
            raise SynthesisError(f"placement failed: {exc}") from exc
    else:
        q_w, r_w = (np.atleast_2d(np.asarray(w, dtype=float)) for w in weights)
        if not (linalg.pd_check(q_w)[0] and linalg.pd_check(r_w)[0]):
            raise SynthesisError("LQR weights must be positive definite")
        x = linalg.newton_kleinman_care(model.a, model.b, q_w, r_w)
        k2 = -np.linalg.solve(r_w, model.b.T @ x)
    if not linalg.is_hurwitz(model.a + model.b @ k2):
        raise SynthesisError("A + B K2 is not Hurwitz")
    return k2


def synth_s(model, k2):
    """S > 0 with S (A + B K2) + (A + B K2)' S = -I."""
    acl = model.a + model.b @ np.asarray(k2, dtype=float)
    if not linalg.is_hurwitz(acl):
        raise SynthesisError("A + B K2 must be Hurwitz to synthesize S")
    s = linalg.solve_lyapunov(acl, np.eye(model.n))
    ok, lam_min = linalg.pd_check(s)
    if not ok:
        raise SynthesisError(f"S not positive definite ({lam_min:.3e})")
    return s


def synth_beta(leader_bound, override=None):
    """Input-rejection gain beta >= leader bound epsilon."""
    eps = float(leader_bound)
    if eps < 0:
        raise SynthesisError("leader input bound must be nonnegative")
    if override is None:
        return eps
    beta = float(override)
    if beta < eps:
        raise SynthesisError(
            f"beta = {beta} violates beta >= epsilon = {eps}")
    return beta


@dataclass
class CertificateReport:
    """Named residuals with pass/fail verdicts for one regime."""

    entries: list = field(default_factory=list)

    def add(self, name, value, ok):
        self.entries.append((name, float(value), bool(ok)))

    @property
    def passed(self):
        return all(ok for _, _, ok in self.entries)

    def failures(self):
        return [name for name, _, ok in self.entries if not ok]

    def as_dict(self):
        return {name: {"value": val, "pass": ok}
                for name, val, ok in self.entries}

    def __str__(self):
        width = max((len(n) for n, _, _ in self.entries), default=4)
        lines = [f"{name:<{width}}  {val: .6e}  {'pass' if ok else 'FAIL'}"
                 for name, val, ok in self.entries]
        return "\n".join(lines)


def _lam_max(m):
    m = np.asarray(m, dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[-1])


def verify_gainset(model, gains, regime, leader_bound=None,
                   tol=DEFAULT_CERT_TOL):
    """Check every hypothesis the given regime places on the gain set.

    `regime` may be a Regime enum or its string value.  Rounded gain sets
    (e.g. published to a few decimals) can be verified with a loose `tol`.
    """
    name = getattr(regime, "value", regime)
    state_regime = name.endswith("_state")
    rep = CertificateReport()
    a, b, c = model.a, model.b, model.c

    if gains.k1 is None:
        rep.add("k1_present", -1.0, False)
    if gains.k2 is None:
        rep.add("k2_present", -1.0, False)
    else:
        margin = linalg.spectral_abscissa(a + b @ gains.k2)
        rep.add("hurwitz_a_bk2", margin, margin < 0)

    if not state_regime:
        if gains.q_mat is None or gains.f is None or gains.gamma is None:
            rep.add("output_gains_present", -1.0, False)
        else:
            ok, lam_min = linalg.pd_check(gains.q_mat)
            rep.add("q_pd", lam_min, ok)
            lam = _lam_max(gains.q_mat @ a + a.T @ gains.q_mat
                           - 2.0 * c.T @ c)
            rep.add("lmi_output", lam, lam < tol)
            f_resid = np.abs(gains.f + np.linalg.solve(gains.q_mat, c.T)).max()
            rep.add("f_consistency", f_resid, f_resid <= max(tol, 1e-8))
            margin = linalg.spectral_abscissa(a + gains.f @ c)
            rep.add("hurwitz_a_fc", margin, margin < 0)
            gsym = np.abs(gains.gamma - gains.gamma.T).max()
            lam_g = float(np.linalg.eigvalsh(
                0.5 * (gains.gamma + gains.gamma.T))[0])
            rep.add("gamma_psd", lam_g, gsym <= 1e-10 and lam_g >= -1e-12)
    else:
        if gains.q_tilde is None or gains.f_tilde is None \
                or gains.gamma_tilde is None:
            rep.add("state_gains_present", -1.0, False)
        else:
            ok, lam_min = linalg.pd_check(gains.q_tilde)
            rep.add("q_tilde_pd", lam_min, ok)
            lam = _lam_max(a @ gains.q_tilde + gains.q_tilde @ a.T
                           - 2.0 * b @ b.T)
            rep.add("lmi_state", lam, lam < tol)
            ft_resid = np.abs(gains.f_tilde
                              + b.T @ np.linalg.inv(gains.q_tilde)).max()
            rep.add("f_tilde_consistency", ft_resid,
                    ft_resid <= max(tol, 1e-8))
            gt = gains.gamma_tilde
            gt_resid = np.abs(gt - gains.f_tilde.T @ gains.f_tilde).max()
            rep.add("gamma_tilde_form", gt_resid, gt_resid <= max(tol, 1e-8))

    if name == "directed_tracking_bounded_input":
        if gains.s_mat is None:
            rep.add("s_present", -1.0, False)
        elif gains.k2 is not None:
            ok, lam_min = linalg.pd_check(gains.s_mat)
            rep.add("s_pd", lam_min, ok)
            acl = a + b @ gains.k2
            lam = _lam_max(gains.s_mat @ acl + acl.T @ gains.s_mat)
            rep.add("lmi_s", lam, lam < max(tol, 0.0))
        if gains.beta is None:
            rep.add("beta_present", -1.0, False)
        elif leader_bound is not None:
            rep.add("beta_margin", gains.beta - leader_bound,
                    gains.beta >= leader_bound - 1e-12)
    return rep


def synth_for_regime(model, regime, k1, k2_poles=None, k2_weights=None,
                     leader_bound=None, beta=None):
    """Full GainSet for one regime, with certificates recorded."""
    name = getattr(regime, "value", regime)
    gains = GainSet(k1=np.atleast_2d(np.asarray(k1, dtype=float)))
    gains.k2 = synth_k2(model, poles=k2_poles, weights=k2_weights)
    if name.endswith("_state"):
        gains.q_tilde, gains.f_tilde, gains.gamma_tilde = \
            synth_state_gains(model)
    else:
        gains.q_mat, gains.f, gains.gamma = synth_output_gains(model)
    if name == "directed_tracking_bounded_input":
        gains.s_mat = synth_s(model, gains.k2)
        gains.beta = synth_beta(0.0 if leader_bound is None else leader_bound,
                                override=beta)
    report = verify_gainset(model, gains, name, leader_bound=leader_bound)
    gains.certificates = {k: v["value"] for k, v in report.as_dict().items()}
    if not report.passed:
        raise SynthesisError(f"certificates failed: {report.failures()}")
    return gains
