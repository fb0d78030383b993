import json

import numpy as np
import pytest

from curlmat.builders import (build_cartesian_curls, build_curl_cg,
                              build_div, build_grad, cartesian_grad)
from curlmat.diffop import OpMatrix, spherical_tag
from curlmat.identities import core_identity_pairs
from curlmat.spectral import (GridSpec, TensorField, apply_operator,
                              complex_curl_field, curl_rank2_field,
                              example_rotation_fields, gradient_scale,
                              helmholtz, pack_rank2, plane_wave,
                              random_bandlimited, rank2_cartesian_basis,
                              read_ctf, relative_complex_curl,
                              relative_divergence, spectral_deriv,
                              spherical_rank2_to_cartesian, unpack_rank2,
                              wavevector, write_ctf)

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def grid():
    return GridSpec((16, 16, 16), (TWO_PI, TWO_PI, TWO_PI))


class TestGridSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec((15, 16, 16), (1.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            GridSpec((16, 16, 16), (0.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            GridSpec((16, 16), (1.0, 1.0))

    def test_wavenumbers(self, grid):
        k = grid.k_axis(0)
        assert k[0] == 0.0
        assert k[1] == pytest.approx(1.0)  # box 2*pi: k = j
        assert k[8] == pytest.approx(-8.0)
        kd = grid.deriv_k_axis(0)
        assert kd[8] == 0.0  # Nyquist zeroed

    def test_cell_volume(self, grid):
        assert grid.cell_volume == pytest.approx((TWO_PI / 16) ** 3)


class TestTensorField:
    def test_component_count_validation(self, grid):
        with pytest.raises(ValueError):
            TensorField(1, "spherical", grid, np.zeros((4, 16, 16, 16)))
        with pytest.raises(ValueError):
            TensorField(3, "cartesian", grid, np.zeros((7, 16, 16, 16)))

    def test_finite_validation(self, grid):
        data = np.zeros((3, 16, 16, 16), dtype=complex)
        data[0, 0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            TensorField(1, "cartesian", grid, data)

    def test_arithmetic(self, grid):
        f = random_bandlimited(grid, 1, "cartesian", seed=1)
        g = random_bandlimited(grid, 1, "cartesian", seed=2)
        assert np.allclose((f + g - f).data, g.data)
        assert np.allclose((f * 2.0).data, 2 * f.data)


class TestApplyOperator:
    def test_identity_roundtrip(self, grid):
        f = random_bandlimited(grid, 1, "spherical", seed=3)
        eye = OpMatrix.identity(3, spherical_tag(1, 1))
        out = apply_operator(eye, f)
        assert (out - f).norm() <= 1e-12 * f.norm()

    @pytest.mark.parametrize("l,m", [(1, 1), (1, -1), (2, 2), (2, 0)])
    def test_plane_wave_eigenmode(self, grid, l, m):
        jvec = (1, 2, 0)
        f = plane_wave(grid, l, m, jvec)
        out = apply_operator(build_curl_cg(l), f)
        k = wavevector(grid, jvec)
        expected = f * (m * np.linalg.norm(k) / l)
        assert (out - expected).norm() <= 1e-9 * max(f.norm(), 1.0)

    def test_cartesian_plane_wave_transverse(self, grid):
        # helicity +/-1 polarizations are orthogonal to k, hence div-free
        f = plane_wave(grid, 1, 1, (2, 1, 0), basis="cartesian")
        assert relative_divergence(f) <= 1e-12
        out = apply_operator(build_cartesian_curls().curl, f)
        k = np.linalg.norm(wavevector(grid, (2, 1, 0)))
        # the unitary basis change preserves the eigenrelation curl f = m|k| f
        assert (out - f * k).norm() <= 1e-9 * f.norm()

    def test_curl_of_gradient_vanishes(self, grid):
        scalar = random_bandlimited(grid, 0, "cartesian", seed=4)
        gradient = apply_operator(cartesian_grad(), scalar)
        curled = apply_operator(build_cartesian_curls().curl, gradient)
        assert curled.norm() <= 1e-10 * gradient_scale(gradient)

    def test_zero_field(self, grid):
        zero = TensorField.zeros(grid, 1, "spherical")
        assert apply_operator(build_curl_cg(1), zero).norm() == 0.0

    def test_linearity(self, grid):
        div = build_div(1)
        u = random_bandlimited(grid, 1, "spherical", seed=5)
        v = random_bandlimited(grid, 1, "spherical", seed=6)
        a, b = 1.7 - 0.3j, -0.4 + 2.2j
        lhs = apply_operator(div, u * a + v * b)
        rhs = apply_operator(div, u) * a + apply_operator(div, v) * b
        assert (lhs - rhs).norm() <= 1e-12 * (lhs.norm() + 1.0)

    def test_rank_changes(self, grid):
        f = random_bandlimited(grid, 1, "spherical", seed=7)
        assert apply_operator(build_div(1), f).l == 0
        assert apply_operator(build_grad(1), f).l == 2

    def test_basis_mismatch(self, grid):
        f = random_bandlimited(grid, 1, "cartesian", seed=8)
        with pytest.raises(ValueError):
            apply_operator(build_curl_cg(1), f)

    def test_real_input_stays_real_under_first_derivative(self, grid):
        # conjugate symmetry survives the Nyquist convention
        rng = np.random.default_rng(9)
        data = rng.standard_normal((1, 16, 16, 16))
        scalar = TensorField(0, "cartesian", grid, data.astype(complex))
        out = apply_operator(cartesian_grad(), scalar)
        assert np.abs(out.data.imag).max() <= 1e-12 * np.abs(out.data).max()


class TestFieldIdentityAgreement:
    def test_core_identities_on_random_fields(self, grid):
        for ident, l, lhs, rhs in core_identity_pairs(2):
            f = random_bandlimited(grid, lhs.tag.l_in, "spherical",
                                   seed=hash(ident) % 1000)
            a = apply_operator(lhs, f)
            b = apply_operator(rhs, f)
            scale = a.norm() + b.norm() + f.norm()
            assert (a - b).norm() <= 1e-10 * scale, ident


class TestComplexCurlField:
    def test_matches_direct_operator(self, grid):
        u = random_bandlimited(grid, 1, "cartesian", seed=10)
        v = random_bandlimited(grid, 1, "cartesian", seed=11)
        combined = complex_curl_field(u, v)
        direct = apply_operator(build_cartesian_curls().curl_c, u + v * 1j)
        assert (combined - direct).norm() <= 1e-12 * max(direct.norm(), 1.0)

    def test_v_zero_reduces(self, grid):
        u = random_bandlimited(grid, 1, "cartesian", seed=12)
        v = TensorField.zeros(grid, 1, "cartesian")
        out = complex_curl_field(u, v)
        base = apply_operator(build_cartesian_curls().curl, u)
        assert (out - base * (1 + 1j)).norm() <= 1e-12 * base.norm()

    def test_u_equals_v_is_purely_doubled_imaginary(self, grid):
        u = random_bandlimited(grid, 1, "cartesian", seed=13)
        out = complex_curl_field(u, u)
        base = apply_operator(build_cartesian_curls().curl, u)
        assert (out - base * 2j).norm() <= 1e-12 * base.norm()

    def test_rotation_pair_band_limited_consistency(self, grid):
        u, v = example_rotation_fields(grid)
        combined = complex_curl_field(u, v)
        direct = apply_operator(build_cartesian_curls().curl_c, u + v * 1j)
        assert (combined - direct).norm() <= 1e-12 * max(direct.norm(), 1.0)


class TestHelmholtz:
    def test_gradient_is_longitudinal(self, grid):
        scalar = random_bandlimited(grid, 0, "cartesian", seed=14)
        f = apply_operator(cartesian_grad(), scalar)
        perp, par = helmholtz(f)
        assert perp.norm() <= 1e-10 * f.norm()
        assert (par - f).norm() <= 1e-10 * f.norm()

    def test_curl_is_transverse(self, grid):
        w = random_bandlimited(grid, 1, "cartesian", seed=15)
        f = apply_operator(build_cartesian_curls().curl, w)
        perp, par = helmholtz(f)
        assert par.norm() <= 1e-10 * f.norm()

    def test_random_field_split(self, grid):
        f = random_bandlimited(grid, 1, "cartesian", seed=16)
        perp, par = helmholtz(f)
        assert (f - (perp + par)).norm() <= 1e-12 * f.norm()
        assert relative_divergence(perp) <= 1e-10
        assert relative_complex_curl(par) <= 1e-10

    def test_idempotent(self, grid):
        f = random_bandlimited(grid, 1, "cartesian", seed=17)
        perp, _ = helmholtz(f)
        perp2, par2 = helmholtz(perp)
        assert (perp2 - perp).norm() <= 1e-10 * perp.norm()
        assert par2.norm() <= 1e-10 * perp.norm()

    def test_constant_field_is_longitudinal(self, grid):
        data = np.zeros((3, 16, 16, 16), dtype=complex)
        data[0] = 2.5
        f = TensorField(1, "cartesian", grid, data)
        perp, par = helmholtz(f)
        assert perp.norm() <= 1e-13
        assert (par - f).norm() <= 1e-13


class TestRank2Views:
    def test_basis_symmetric_traceless(self):
        basis = rank2_cartesian_basis()
        for mat in basis:
            assert np.allclose(mat, mat.T, atol=1e-14)
            assert abs(np.trace(mat)) < 1e-14

    def test_roundtrip_pack_unpack(self, grid):
        f = random_bandlimited(grid, 2, "spherical", seed=18)
        tensor = spherical_rank2_to_cartesian(f)
        packed = pack_rank2(tensor, grid)
        unpacked = unpack_rank2(packed)
        for i in range(3):
            for j in range(3):
                assert np.allclose(unpacked[i][j], tensor[i][j], atol=1e-13)

    def test_grid_curl_of_single_mode(self, grid):
        # T12 = T21 = exp(i*k*z): output follows the printed entry formulas
        z = grid.coords(2)[:, None, None]
        kz = 3.0
        f = np.exp(1j * kz * z) * np.ones((16, 16, 16))
        zero = np.zeros_like(f)
        t = [[zero, f, zero], [f, zero, zero], [zero, zero, zero]]
        out = curl_rank2_field(t, grid)
        dzf = 1j * kz * f
        assert np.allclose(out[0][0], -dzf, atol=1e-10)
        assert np.allclose(out[1][1], dzf, atol=1e-10)
        assert np.allclose(out[2][2], 0, atol=1e-12)
        assert np.allclose(out[0][1], 0, atol=1e-12)      # a = 0
        assert np.allclose(out[0][2], 0, atol=1e-12)      # b needs dx
        assert np.allclose(out[1][2], 0, atol=1e-12)      # c needs dy
        trace = out[0][0] + out[1][1] + out[2][2]
        assert np.allclose(trace, 0, atol=1e-10)

    def test_spectral_deriv_matches_analytic(self, grid):
        x = grid.coords(0)[None, None, :]
        f = np.exp(1j * 2 * x) * np.ones((16, 16, 16))
        d = spectral_deriv(grid)(0, f)
        assert np.allclose(d, 2j * f, atol=1e-10)


class TestCtfFormat:
    def test_roundtrip(self, grid, tmp_path):
        f = random_bandlimited(grid, 2, "spherical", seed=19)
        path = tmp_path / "field.ctf"
        write_ctf(f, path)
        g = read_ctf(path)
        assert g.l == 2 and g.basis == "spherical"
        assert g.grid == grid
        assert np.array_equal(g.data, f.data)

    def test_header_layout(self, grid, tmp_path):
        f = random_bandlimited(grid, 1, "cartesian", seed=20)
        path = tmp_path / "field.ctf"
        write_ctf(f, path)
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode("ascii"))
            payload = fh.read()
        assert header == {
            "magic": "CTF1", "l": 1, "basis": "cartesian",
            "grid": [16, 16, 16], "box": [TWO_PI, TWO_PI, TWO_PI],
            "dtype": "c128", "order": "component,z,y,x"}
        assert len(payload) == 3 * 16 ** 3 * 16

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ctf"
        path.write_bytes(b'{"magic": "nope"}\n')
        with pytest.raises(ValueError):
            read_ctf(path)

    def test_rejects_truncated_payload(self, grid, tmp_path):
        f = random_bandlimited(grid, 1, "cartesian", seed=21)
        path = tmp_path / "field.ctf"
        write_ctf(f, path)
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(ValueError):
            read_ctf(path)
