import numpy as np
import pytest
import scipy.linalg

from formctl import linalg
from formctl.errors import LinalgError, PlacementError


def random_hurwitz(rng, n):
    # shift a random matrix left of its spectral abscissa
    a = rng.standard_normal((n, n))
    return a - (np.max(np.linalg.eigvals(a).real) + 0.5 + rng.uniform(0, 1)) * np.eye(n)


class TestEigvals:
    def test_symmetric_pair(self):
        vals = linalg.eigvals([[1, -1], [-1, 1]])
        assert np.allclose(np.sort(vals.real), [0.0, 2.0], atol=1e-12)

    def test_diagonal(self):
        vals = linalg.eigvals(np.diag([-1.0, -5.0]))
        assert np.allclose(np.sort(vals.real), [-5.0, -1.0])

    def test_companion_of_s2_plus_1(self):
        # characteristic polynomial s^2 + 1 has roots +/- i
        comp = np.array([[0.0, 1.0], [-1.0, 0.0]])
        vals = linalg.eigvals(comp)
        assert np.allclose(sorted(vals.imag), [-1.0, 1.0], atol=1e-12)
        assert np.allclose(vals.real, 0.0, atol=1e-12)

    def test_rejects_nonsquare(self):
        with pytest.raises(LinalgError):
            linalg.eigvals(np.zeros((2, 3)))

    def test_residual_against_numpy_pairs(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = rng.standard_normal((5, 5))
            w, v = np.linalg.eig(m)
            resid = np.abs(m @ v - v * w).max()
            assert resid <= 1e-8 * max(1.0, np.abs(m).max())


class TestHurwitz:
    def test_stable_diagonal(self):
        assert linalg.is_hurwitz(np.diag([-1.0, -2.0]))

    def test_marginal_oscillator(self):
        assert not linalg.is_hurwitz([[0.0, 1.0], [-1.0, 0.0]])

    def test_tolerance_margin(self):
        assert not linalg.is_hurwitz(np.diag([-0.5, -2.0]), tol=1.0)


class TestPdCheck:
    def test_identity(self):
        ok, lam = linalg.pd_check(np.eye(3))
        assert ok and lam == pytest.approx(1.0)

    def test_indefinite(self):
        ok, lam = linalg.pd_check(np.diag([1.0, -1.0]))
        assert not ok and lam == pytest.approx(-1.0)

    def test_asymmetric_rejected(self):
        with pytest.raises(LinalgError):
            linalg.pd_check([[1.0, 0.5], [0.0, 1.0]])


class TestLyapunov:
    def test_scalar(self):
        x = linalg.solve_lyapunov(np.array([[-2.0]]), np.array([[1.0]]))
        assert x[0, 0] == pytest.approx(0.25)

    def test_diagonal(self):
        x = linalg.solve_lyapunov(np.diag([-1.0, -2.0]), np.eye(2))
        assert np.allclose(x, np.diag([0.5, 0.25]))

    def test_residuals_on_random_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = rng.integers(1, 9)
            a = random_hurwitz(rng, n)
            w = rng.standard_normal((n, n))
            rhs = w @ w.T + np.eye(n)
            x = linalg.solve_lyapunov(a, rhs)
            resid = np.linalg.norm(a.T @ x + x @ a + rhs)
            assert resid < 1e-8 * np.linalg.norm(rhs)
            assert linalg.pd_check(x)[0]

    def test_against_scipy(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            n = rng.integers(2, 7)
            a = random_hurwitz(rng, n)
            rhs = np.eye(n)
            ours = linalg.solve_lyapunov(a, rhs)
            ref = scipy.linalg.solve_lyapunov(a.T, -rhs)
            assert np.allclose(ours, ref, atol=1e-9)

    def test_singular_pair_raises(self):
        # eigenvalues +1 and -1 sum to zero
        with pytest.raises(LinalgError):
            linalg.solve_lyapunov(np.diag([1.0, -1.0]), np.eye(2))


class TestObserverRiccati:
    def test_scalar_integrator(self):
        x = linalg.solve_observer_are(np.array([[0.0]]), np.array([[1.0]]))
        assert x[0, 0] == pytest.approx(1.0, abs=1e-10)

    def test_scalar_stable(self):
        # -2x - x^2 + 1 = 0 has positive root sqrt(2) - 1
        x = linalg.solve_observer_are(np.array([[-1.0]]), np.array([[1.0]]))
        assert x[0, 0] == pytest.approx(np.sqrt(2.0) - 1.0, abs=1e-10)

    def test_residuals_on_random_instances(self):
        # 100 well-conditioned instances, judged by the independent scipy
        # solution staying moderate in norm
        rng = np.random.default_rng(13)
        count = 0
        while count < 100:
            n = int(rng.integers(1, 9))
            q = int(rng.integers(1, n + 1))
            a = rng.standard_normal((n, n))
            c = rng.standard_normal((q, n))
            if not linalg.pbh_detectable(a, c):
                continue
            ref = scipy.linalg.solve_continuous_are(a.T, c.T, np.eye(n), np.eye(q))
            if np.linalg.norm(ref) > 100.0:
                continue
            count += 1
            x = linalg.solve_observer_are(a, c)
            resid = np.linalg.norm(a @ x + x @ a.T - x @ c.T @ c @ x + np.eye(n))
            assert resid < 1e-8
            assert linalg.pd_check(x)[0]

    def test_against_scipy(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            a = rng.standard_normal((n, n))
            c = rng.standard_normal((2, n))
            if not linalg.pbh_detectable(a, c):
                continue
            ours = linalg.solve_observer_are(a, c)
            ref = scipy.linalg.solve_continuous_are(a.T, c.T, np.eye(n), np.eye(2))
            assert np.allclose(ours, ref, atol=1e-8)

    def test_undetectable_raises(self):
        # unstable mode invisible from the output
        a = np.diag([1.0, -1.0])
        c = np.array([[0.0, 1.0]])
        with pytest.raises(LinalgError):
            linalg.solve_observer_are(a, c)

    def test_duality_covers_state_feedback_inequality(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            a = rng.standard_normal((n, n))
            b = rng.standard_normal((n, 2))
            if not linalg.pbh_stabilizable(a, b):
                continue
            ref = scipy.linalg.solve_continuous_are(a, b, np.eye(n), np.eye(2))
            if np.linalg.norm(ref) > 100.0:
                continue
            x = linalg.solve_observer_are(a.T, b.T)
            q = np.linalg.inv(x)
            # the inverse satisfies the state-feedback inequality
            lmi = a @ q + q @ a.T - 2.0 * b @ b.T
            assert linalg.pd_check(-0.5 * (lmi + lmi.T))[0]


class TestPolePlace:
    def test_scalar(self):
        k = linalg.pole_place(np.array([[0.0]]), np.array([[1.0]]), [-2.0])
        assert k[0, 0] == pytest.approx(-2.0)

    def test_double_integrator_char_poly(self):
        # s^2 + 3 s + 2 = (s + 1)(s + 2) forces K = [-2, -3]
        a = np.array([[0.0, 1.0], [0.0, 0.0]])
        b = np.array([[0.0], [1.0]])
        k = linalg.pole_place(a, b, [-1.0, -2.0])
        assert np.allclose(k, [[-2.0, -3.0]], atol=1e-8)

    def test_complex_targets(self):
        a = np.array([[0.0, 1.0], [0.0, 0.0]])
        b = np.array([[0.0], [1.0]])
        targets = [-1 + 2j, -1 - 2j]
        k = linalg.pole_place(a, b, targets)
        got = np.sort_complex(np.linalg.eigvals(a + b @ k))
        assert np.allclose(got, np.sort_complex(np.array(targets)), atol=1e-8)

    def test_unpaired_complex_target_rejected(self):
        a = np.zeros((2, 2))
        b = np.eye(2)
        with pytest.raises(PlacementError):
            linalg.pole_place(a, b, [-1 + 1j, -2.0])

    def test_roundtrip_on_random_controllable_pairs(self):
        rng = np.random.default_rng(23)
        done = 0
        while done < 50:
            n = int(rng.integers(2, 7))
            p = int(rng.integers(1, 4))
            a = rng.standard_normal((n, n))
            b = rng.standard_normal((n, p))
            if np.linalg.matrix_rank(linalg.ctrb(a, b)) < n:
                continue
            done += 1
            targets = -rng.uniform(0.5, 6.0, size=n)
            k = linalg.pole_place(a, b, targets)
            got = np.sort(np.linalg.eigvals(a + b @ k).real)
            assert np.allclose(got, np.sort(targets), rtol=1e-6, atol=1e-6)

    def test_uncontrollable_mismatch_raises(self):
        # mode at +1 is untouchable by b
        a = np.diag([1.0, -1.0])
        b = np.array([[0.0], [1.0]])
        with pytest.raises(PlacementError):
            linalg.pole_place(a, b, [-2.0, -3.0])


class TestStabilizingGain:
    def test_stabilizable_but_uncontrollable(self):
        a = np.diag([1.0, -1.0])
        b = np.array([[1.0], [0.0]])
        k = linalg.stabilizing_gain(a, b)
        assert linalg.is_hurwitz(a + b @ k)

    def test_not_stabilizable_raises(self):
        a = np.diag([1.0, 2.0])
        b = np.array([[0.0], [1.0]])
        with pytest.raises(LinalgError):
            linalg.stabilizing_gain(a, b)


class TestNewtonKleinman:
    def test_matches_scipy_lqr(self):
        rng = np.random.default_rng(29)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            p = int(rng.integers(1, 3))
            a = rng.standard_normal((n, n))
            b = rng.standard_normal((n, p))
            if np.linalg.matrix_rank(linalg.ctrb(a, b)) < n:
                continue
            q = np.eye(n)
            r = np.eye(p)
            ref = scipy.linalg.solve_continuous_are(a, b, q, r)
            if np.linalg.norm(ref) > 100.0:
                continue
            ours = linalg.newton_kleinman_care(a, b, q, r)
            assert np.allclose(ours, ref, atol=1e-8)
