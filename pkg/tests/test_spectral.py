import numpy as np
import pytest

from pfc3d.grid import (
    CellField,
    GridSpec,
    face_difference,
    face_inner_product,
    cell_difference,
    inner_product,
    norm_p,
)
from pfc3d.spectral import (
    H2EmbeddingReport,
    dft3,
    evaluate_interpolant,
    h2_embedding_check,
    parseval_l2_sq,
    reconstruct,
    refined_max_abs,
    stencil_symbol_mag,
    symbol_bounds,
)


def random_field(spec, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return CellField(spec, scale * rng.uniform(-1.0, 1.0, size=spec.shape))


def fft_reference_coeffs(f):
    """Independent coefficient computation via numpy's FFT plus phase shift."""
    m = f.spec.m
    R = (m - 1) // 2
    raw = np.fft.fftn(f.values) / m**3
    # cell centers sit half a spacing off the FFT's integer grid
    r = np.fft.fftfreq(m, d=1.0 / m)
    phase = np.exp(-1j * np.pi * r / m)
    raw = raw * phase[:, None, None] * phase[None, :, None] * phase[None, None, :]
    shift = np.fft.fftshift(raw)
    return shift  # index [r+R, s+R, t+R]


class TestDFT:
    def test_rejects_even_m(self):
        with pytest.raises(ValueError, match="odd"):
            dft3(CellField.zeros(GridSpec(8, 3.2)))

    def test_constant_field(self):
        spec = GridSpec(9, 3.2)
        sf = dft3(CellField.full(spec, 0.7))
        R = sf.R
        assert abs(sf.coeffs[R, R, R] - 0.7) <= 1e-13
        rest = sf.coeffs.copy()
        rest[R, R, R] = 0.0
        assert np.max(np.abs(rest)) <= 1e-13

    def test_single_cosine_mode(self):
        m, L = 9, 3.2
        spec = GridSpec(m, L)
        f = CellField.from_function(
            spec, lambda x, y, z: np.cos(2 * np.pi * x / L) + 0 * y + 0 * z
        )
        sf = dft3(f)
        R = sf.R
        assert abs(sf.coeffs[R + 1, R, R] - 0.5) <= 1e-13
        assert abs(sf.coeffs[R - 1, R, R] - 0.5) <= 1e-13
        rest = sf.coeffs.copy()
        rest[R + 1, R, R] = 0.0
        rest[R - 1, R, R] = 0.0
        assert np.max(np.abs(rest)) <= 1e-13

    def test_matches_fft_reference(self):
        spec = GridSpec(9, 2.0)
        f = random_field(spec, 1)
        got = dft3(f).coeffs
        want = fft_reference_coeffs(f)
        assert np.max(np.abs(got - want)) <= 1e-13

    def test_conjugate_symmetry(self):
        spec = GridSpec(7, 1.5)
        sf = dft3(random_field(spec, 2))
        flipped = np.conj(sf.coeffs[::-1, ::-1, ::-1])
        assert np.max(np.abs(sf.coeffs - flipped)) <= 1e-14

    @pytest.mark.parametrize("m", [5, 9])
    def test_parseval(self, m):
        spec = GridSpec(m, 3.2)
        f = random_field(spec, 3 + m)
        lhs = norm_p(f, 2) ** 2
        rhs = parseval_l2_sq(dft3(f))
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestInterpolant:
    def test_reproduces_grid_values(self):
        spec = GridSpec(9, 3.2)
        f = random_field(spec, 4)
        back = reconstruct(dft3(f), spec)
        scale = max(1.0, np.max(np.abs(f.values)))
        assert np.max(np.abs(back.values - f.values)) <= 1e-12 * scale

    def test_refined_grid_dominates_max(self):
        spec = GridSpec(9, 3.2)
        f = random_field(spec, 5)
        sf = dft3(f)
        assert refined_max_abs(sf, 4) >= np.max(np.abs(f.values)) - 1e-12

    def test_evaluate_single_mode(self):
        m, L = 9, 2.0
        spec = GridSpec(m, L)
        f = CellField.from_function(
            spec, lambda x, y, z: np.sin(2 * np.pi * x / L) + 0 * y + 0 * z
        )
        sf = dft3(f)
        pts = np.linspace(0.0, L, 13, endpoint=False)
        vals = evaluate_interpolant(sf, pts)
        want = np.sin(2 * np.pi * pts / L)[:, None, None] * np.ones((13, 13, 13))
        assert np.max(np.abs(vals - want)) <= 1e-12


class TestSymbols:
    def test_zero_mode(self):
        rows = symbol_bounds(4, 3.2, 3.2 / 9)
        r0 = [row for row in rows if row[0] == 0][0]
        assert r0[1] == 0.0 and r0[2] == 0.0

    @pytest.mark.parametrize("R", [4, 8, 16])
    def test_sandwich(self, R):
        L = 3.2
        m = 2 * R + 1
        rows = symbol_bounds(R, L, L / m)
        for r, u, v in rows:
            assert u <= v * (1.0 + 1e-13)
            assert u >= (2.0 / np.pi) * v * (1.0 - 1e-13)

    def test_highest_mode_ratio(self):
        for R in (4, 8, 16):
            L = 1.0
            m = 2 * R + 1
            rows = symbol_bounds(R, L, L / m)
            _, u, v = rows[-1]
            assert u / v >= 2.0 / np.pi

    def test_h_mismatch_rejected(self):
        with pytest.raises(ValueError, match="match"):
            symbol_bounds(4, 3.2, 0.5)


class TestDerivativeParseval:
    @pytest.mark.parametrize("m", [5, 9])
    def test_face_difference_identity(self, m):
        # h^3 sum |D_x f|^2 == L^3 sum |u_r|^2 |coef|^2
        spec = GridSpec(m, 3.2)
        f = random_field(spec, 6 + m)
        sf = dft3(f)
        d = face_difference(f, "x")
        lhs = face_inner_product(d, d)
        umag = stencil_symbol_mag(sf.modes, spec.L, spec.h)
        rhs = spec.L**3 * float(
            np.sum((umag**2)[:, None, None] * np.abs(sf.coeffs) ** 2)
        )
        assert lhs == pytest.approx(rhs, rel=1e-11)

    def test_second_difference_identity(self, m=9):
        spec = GridSpec(m, 3.2)
        f = random_field(spec, 7)
        sf = dft3(f)
        dd = cell_difference(face_difference(f, "x"))
        lhs = inner_product(dd, dd)
        umag = stencil_symbol_mag(sf.modes, spec.L, spec.h)
        rhs = spec.L**3 * float(
            np.sum((umag**4)[:, None, None] * np.abs(sf.coeffs) ** 2)
        )
        assert lhs == pytest.approx(rhs, rel=1e-11)


class TestH2Embedding:
    def test_constant_field(self):
        spec = GridSpec(9, 3.2)
        c = 0.4
        rep = h2_embedding_check(CellField.full(spec, c))
        want = c**2 * spec.volume
        assert rep.interpolant_h2_sq == pytest.approx(want, rel=1e-12)
        assert rep.bound_sq == pytest.approx(2 * (np.pi / 2) ** 4 * want, rel=1e-12)
        assert rep.max_abs == pytest.approx(c)
        assert rep.interpolant_h2_sq <= rep.bound_sq

    def test_single_mode_dual_path(self):
        # spectral H2 norm vs hand-built symbol sums for one cosine mode
        m, L = 9, 3.2
        spec = GridSpec(m, L)
        f = CellField.from_function(
            spec, lambda x, y, z: np.cos(2 * np.pi * x / L) + 0 * y + 0 * z
        )
        rep = h2_embedding_check(f)
        v1 = 2 * np.pi / L
        # coefficients 1/2 at modes +-1: |f|^2 = L^3/2, |f'|^2 = v1^2 L^3/2, ...
        want = L**3 * (0.5 + 0.5 * v1**2 + 0.5 * v1**4)
        assert rep.interpolant_h2_sq == pytest.approx(want, rel=1e-11)
        assert rep.interpolant_h2_sq <= rep.bound_sq * (1 + 1e-12)

    @pytest.mark.parametrize("m", [5, 9, 17])
    def test_never_violated(self, m):
        spec = GridSpec(m, 3.2)
        for seed in range(30):
            f = random_field(spec, 1000 * m + seed)
            rep = h2_embedding_check(f)
            assert isinstance(rep, H2EmbeddingReport)
            assert rep.interpolant_h2_sq <= rep.bound_sq * (1 + 1e-11)

    def test_even_m_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            h2_embedding_check(CellField.zeros(GridSpec(8, 3.2)))
