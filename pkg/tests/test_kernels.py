import numpy as np
import pytest

import oracles
from pfc3d import kernels
from pfc3d.kernels import SingularLocalSystemError, pure
from pfc3d.scheme import cn_chemical_potential_arrays, cn_source_arrays

if kernels.HAVE_COMPILED:
    from pfc3d.kernels import _core
else:
    _core = None

needs_compiled = pytest.mark.skipif(
    not kernels.HAVE_COMPILED, reason="compiled kernels not built"
)


def setup_problem(m=4, L=2.0, seed=0, eps=0.025, tau=0.01):
    rng = np.random.default_rng(seed)
    shape = (m, m, m)
    h = L / m
    phik = 0.2 + 0.05 * rng.standard_normal(shape)
    phikm1 = 0.2 + 0.05 * rng.standard_normal(shape)
    s1, s2, s3 = cn_source_arrays(phik, phikm1, eps, h)
    ones = np.ones(shape)
    from pfc3d.grid import laplacian_values

    phi = phik.copy()
    om = laplacian_values(phik, h)
    mu = cn_chemical_potential_arrays(phik, phik, phikm1, eps, h)
    lin = 0.5 * (1.0 - eps)
    return {
        "u": (phi, mu, om),
        "S": (s1, s2, s3),
        "phik": phik,
        "phikm1": phikm1,
        "faces": (ones, ones.copy(), ones.copy()),
        "tau": tau,
        "h": h,
        "lin": lin,
        "eps": eps,
    }


def run_sweeps(p, sweeps, order, backend=None):
    phi, mu, om = (a.copy() for a in p["u"])
    mx, my, mz = p["faces"]
    if backend is None:
        kernels.smoother_sweeps(
            phi, mu, om, *p["S"], p["phik"], mx, my, mz,
            p["tau"], p["h"], p["lin"], 0.5, 0, sweeps, order,
        )
    else:
        h2 = p["h"] * p["h"]
        colors = [-1] if order == "lexicographic" else [0, 1]
        for _ in range(sweeps):
            for color in colors:
                backend.sweep(
                    phi, mu, om, *p["S"], p["phik"], mx, my, mz,
                    p["tau"], h2, p["lin"], 0.5, 0, color, 1,
                )
    return phi, mu, om


class TestFixedPoint:
    @pytest.mark.parametrize("order", ["lexicographic", "red-black"])
    def test_constant_fixed_point_unchanged(self, order):
        m, L, c, eps, tau = 4, 3.2, 0.2, 0.025, 0.01
        shape = (m, m, m)
        h = L / m
        phik = np.full(shape, c)
        s1, s2, s3 = cn_source_arrays(phik, phik, eps, h)
        mu_c = c**3 + (1 - eps) * c
        phi = np.full(shape, c)
        mu = np.full(shape, mu_c)
        om = np.zeros(shape)
        ones = np.ones(shape)
        kernels.smoother_sweeps(
            phi, mu, om, s1, s2, s3, phik, ones, ones, ones,
            tau, h, 0.5 * (1 - eps), 0.5, 0, 1, order,
        )
        assert np.allclose(phi, c, atol=1e-13)
        assert np.allclose(mu, mu_c, atol=1e-13)
        assert np.allclose(om, 0.0, atol=1e-13)

    def test_zero_sweeps_is_identity(self):
        p = setup_problem()
        phi, mu, om = run_sweeps(p, 0, "lexicographic")
        assert np.array_equal(phi, p["u"][0])
        assert np.array_equal(mu, p["u"][1])
        assert np.array_equal(om, p["u"][2])


class TestBackendEquivalence:
    @needs_compiled
    @pytest.mark.parametrize("order", ["lexicographic", "red-black"])
    def test_pure_matches_compiled(self, order):
        p = setup_problem(m=4, seed=3)
        a = run_sweeps(p, 3, order, backend=pure)
        b = run_sweeps(p, 3, order, backend=_core)
        for x, y in zip(a, b):
            np.testing.assert_allclose(x, y, rtol=1e-14, atol=0)

    @needs_compiled
    def test_pure_matches_compiled_first_order(self):
        from pfc3d.grid import laplacian_values
        from pfc3d.scheme import fo_source_arrays

        m, L, eps, tau = 4, 2.0, 0.025, 0.01
        rng = np.random.default_rng(4)
        phi0 = 0.2 + 0.05 * rng.standard_normal((m, m, m))
        h = L / m
        S = fo_source_arrays(phi0, eps, h)
        ones = np.ones_like(phi0)
        results = []
        for backend in (pure, _core):
            phi = phi0.copy()
            om = laplacian_values(phi0, h)
            mu = phi**3 + (1 - eps) * phi + 2 * om + laplacian_values(om, h)
            for _ in range(3):
                backend.sweep(
                    phi, mu, om, *S, phi0, ones, ones, ones,
                    tau, h * h, 1.0 - eps, 1.0, 1, -1, 1,
                )
            results.append((phi, mu, om))
        for x, y in zip(*results):
            np.testing.assert_allclose(x, y, rtol=1e-14, atol=0)

    @needs_compiled
    def test_threaded_red_black_matches_serial(self):
        p = setup_problem(m=8, seed=5)
        h2 = p["h"] * p["h"]
        out = []
        for threads in (1, 4):
            phi, mu, om = (a.copy() for a in p["u"])
            for color in (0, 1):
                _core.sweep(
                    phi, mu, om, *p["S"], p["phik"], *p["faces"],
                    p["tau"], h2, p["lin"], 0.5, 0, color, threads,
                )
            out.append((phi, mu, om))
        for x, y in zip(*out):
            assert np.array_equal(x, y)


class TestSmootherConvergence:
    # standalone Gauss-Seidel only contracts for small tau/h^2 (inside the
    # V-cycle the coarse correction handles the rest); pick such a regime
    def test_smoothing_alone_reaches_oracle_solution(self):
        p = setup_problem(m=4, L=3.2, seed=6, tau=1e-3)
        want_phi, want_mu, want_om = oracles.solve_cn_step_fft(
            p["phik"], p["phikm1"], p["tau"], p["eps"], p["h"], tol=1e-13
        )
        phi, mu, om = run_sweeps(p, 2000, "lexicographic")
        assert np.max(np.abs(phi - want_phi)) <= 1e-10
        assert np.max(np.abs(mu - want_mu)) <= 1e-10
        assert np.max(np.abs(om - want_om)) <= 1e-10

    def test_red_black_reaches_same_solution(self):
        p = setup_problem(m=4, L=3.2, seed=7, tau=1e-3)
        a = run_sweeps(p, 2000, "lexicographic")
        b = run_sweeps(p, 2000, "red-black")
        for x, y in zip(a, b):
            assert np.max(np.abs(x - y)) <= 1e-10


class TestErrors:
    def test_singular_local_solve_raises(self):
        # det = 1 + a c + a d e = 1 - 19 + 18 = 0 exactly
        with pytest.raises(SingularLocalSystemError):
            pure.solve_local(1.0, -19.0, 6.0, 3.0, 0.0, 0.0, 0.0)

    def test_red_black_rejects_odd_m(self):
        p = setup_problem(m=5, L=2.5, seed=8)
        with pytest.raises(ValueError, match="even"):
            run_sweeps(p, 1, "red-black")

    def test_unknown_order_rejected(self):
        p = setup_problem()
        phi, mu, om = (a.copy() for a in p["u"])
        with pytest.raises(ValueError, match="order"):
            kernels.smoother_sweeps(
                phi, mu, om, *p["S"], p["phik"], *p["faces"],
                p["tau"], p["h"], p["lin"], 0.5, 0, 1, "diagonal",
            )

    def test_thread_setting(self):
        old = kernels.get_threads()
        try:
            kernels.set_threads(2)
            assert kernels.get_threads() == 2
            with pytest.raises(ValueError):
                kernels.set_threads(0)
        finally:
            kernels.set_threads(old)
