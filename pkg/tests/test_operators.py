import numpy as np
import pytest
import scipy.io
from hypothesis import given, settings
from hypothesis import strategies as st

from cpband.band import BandGrid, PointClassification, build_band, lattice_keys
from cpband.errors import StencilEscape
from cpband.geometry import modified_closest_points
from cpband.operators import (
    CONORMAL_THRESHOLD,
    approximate_conormal,
    build_boundary_diagonal,
    build_interpolation,
    build_laplacian,
    dump_matrices,
    lagrange_weights_1d,
    penalty_gamma,
)
from conftest import band_and_ops

# a smooth test function on the hemisphere with a non-zero conormal derivative on the equator
#   P = z + x^2 - y^2 + 3x^2 y - y^3 + xz, extended constantly along radial lines
# On the equator the outward conormal is -e_z, so d_n u = -(1 + x).


def _P(p):
    x, y, z = p.T
    return z + x * x - y * y + 3 * x * x * y - y**3 + x * z


def radial_ext(p):
    p = np.atleast_2d(p)
    return _P(p / np.linalg.norm(p, axis=1)[:, None])


def dn_radial(cp):
    return -(1.0 + cp[:, 0])


def _order(errs, hs):
    return np.polyfit(np.log(hs), np.log(errs), 1)[0]


# -- interpolation ---------------------------------------------------------------------------


def test_lagrange_weights_partition_of_unity():
    xi = np.linspace(0, 3, 31)
    w = lagrange_weights_1d(xi)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(lagrange_weights_1d(np.arange(4.0)), np.eye(4), atol=1e-15)


def test_interpolation_row_sums(hemi01, mobius01):
    for _, _, ops in (hemi01, mobius01):
        for M in (ops.E, ops.Ebar):
            np.testing.assert_allclose(np.asarray(M.sum(axis=1)).ravel(), 1.0, atol=1e-12)
            assert M.getnnz(axis=1).max() <= 64


@settings(max_examples=40, deadline=None)
@given(
    coef=st.lists(st.floats(-1, 1), min_size=6, max_size=6),
    powers=st.lists(st.tuples(*[st.integers(0, 3)] * 3), min_size=6, max_size=6),
)
def test_interpolation_reproduces_tricubics(hemi01, coef, powers):
    grid, cls, ops = hemi01

    def poly(p):
        return sum(c * p[:, 0] ** a * p[:, 1] ** b * p[:, 2] ** k for c, (a, b, k) in zip(coef, powers))

    v = poly(grid.points)
    np.testing.assert_allclose(ops.E @ v, poly(cls.cp), atol=1e-10)
    np.testing.assert_allclose(ops.Ebar @ v, poly(cls.cpbar), atol=1e-10)


def test_interpolation_specific_monomial(hemi01):
    grid, cls, ops = hemi01
    f = lambda p: p[:, 0] ** 3 * p[:, 1] ** 2  # noqa: E731
    np.testing.assert_allclose(ops.E @ f(grid.points), f(cls.cp), atol=1e-10)


def test_interpolation_at_nodes_is_unit_row(hemi01):
    grid, cls, _ = hemi01
    idx = np.nonzero(cls.distance < 0.5 * grid.dx)[0][:50]
    M = build_interpolation(grid, grid.points[idx])
    np.testing.assert_allclose(M.toarray(), np.eye(grid.m)[idx], atol=1e-14)


def test_interpolation_outside_band_raises(hemi01):
    grid, _, _ = hemi01
    with pytest.raises(StencilEscape):
        build_interpolation(grid, [[0.0, 0.0, 0.0]])


def test_interior_rows_of_E_and_Ebar_coincide(hemi01, mobius01):
    for _, cls, ops in (hemi01, mobius01):
        diff = (ops.E - ops.Ebar)[np.nonzero(cls.interior)[0]]
        assert abs(diff).max() == 0.0


# -- idempotence of the extension -------------------------------------------------------------


def _plane_setup(normal, dx=0.1, n=10):
    """Full lattice cube with closest points onto the plane through the origin."""
    r = np.arange(-n, n + 1)
    ijk = np.stack(np.meshgrid(r, r, r, indexing="ij"), -1).reshape(-1, 3)
    ijk = ijk[np.argsort(lattice_keys(ijk))]
    grid = BandGrid(dx, np.sqrt(17) * dx, ijk)
    nu = np.asarray(normal, float) / np.linalg.norm(normal)
    x = grid.points
    cp = x - np.outer(x @ nu, nu)
    # rows whose stencil lies in the cube, then rows whose stencil only touches such rows
    inner = np.all(np.abs(cp) <= (n - 2.5) * dx, axis=1)
    inner2 = np.all(np.abs(cp) <= (n - 6) * dx, axis=1) & inner
    rows = np.nonzero(inner)[0]
    E = build_interpolation(grid, cp[rows])
    return grid, cp, rows, np.nonzero(inner2[rows])[0], E


def _idempotence_defect(grid, rows, check, E, v):
    Ev = np.zeros(grid.m)
    Ev[rows] = E @ v
    EEv = E[check] @ Ev
    assert np.all(np.isin(E[check].indices, rows))
    return np.abs(EEv - Ev[rows][check]).max()


def test_idempotence_axis_aligned_plane_any_data(rng):
    grid, cp, rows, check, E = _plane_setup([0, 0, 1])
    v = np.sin(3 * grid.points[:, 0]) * np.exp(grid.points[:, 2]) + rng.normal(size=grid.m)
    assert _idempotence_defect(grid, rows, check, E, v) <= 1e-10 * np.abs(v).max()


def test_idempotence_tilted_plane_polynomial_data():
    grid, cp, rows, check, E = _plane_setup([1, 2, 3])
    p = grid.points
    v = p[:, 0] ** 3 - 2 * p[:, 0] * p[:, 1] * p[:, 2] + p[:, 2] ** 2 + 1
    assert _idempotence_defect(grid, rows, check, E, v) <= 1e-10 * np.abs(v).max()


def test_idempotence_on_curved_surface_is_high_order(hemisphere):
    # on a curved surface E^2 = E only up to the interpolation error of the cp-extension of a
    # piecewise (C^0) tricubic, which shows up as roughly second order
    defects = []
    for dx in (0.1, 0.05):
        grid, cls, ops = band_and_ops(hemisphere, dx)
        v = np.cos(grid.points[:, 0]) + grid.points[:, 1] * grid.points[:, 2]
        Ev = ops.E @ v
        defects.append(np.abs(ops.E @ Ev - Ev).max())
    assert defects[0] < 1e-2
    assert np.log2(defects[0] / defects[1]) > 1.5


# -- Laplacian -------------------------------------------------------------------------------


def test_laplacian_on_polynomials(hemi01):
    grid, _, ops = hemi01
    p = grid.points
    full = ops.laplacian_complete
    assert full.sum() > 0.5 * grid.m
    # 1/dx^2 is not a dyadic number for dx = 0.1, so constants vanish only to rounding here
    assert np.abs(ops.L @ np.ones(grid.m))[full].max() <= 16 * np.finfo(float).eps * 6 / grid.dx**2
    np.testing.assert_allclose((ops.L @ (p**2).sum(axis=1))[full], 6.0, rtol=1e-10)
    np.testing.assert_allclose((ops.L @ p[:, 0])[full], 0.0, atol=1e-10)
    np.testing.assert_allclose((ops.L @ (p[:, 0] * p[:, 1] * p[:, 2]))[full], 0.0, atol=1e-10)


def test_laplacian_annihilates_constants_exactly_on_dyadic_grid(hemisphere):
    grid, cls = build_band(hemisphere, 0.125)
    L, full = build_laplacian(grid)
    assert np.all((L @ np.ones(grid.m))[full] == 0.0)
    assert not np.all(full)


def test_laplacian_structure(hemi01):
    grid, _, ops = hemi01
    L = ops.L
    np.testing.assert_allclose(L.diagonal(), -6 / grid.dx**2)
    assert L.getnnz(axis=1).max() == 7
    assert abs(L - L.T).max() == 0.0


def test_penalty_parameter():
    assert penalty_gamma(0.1) == pytest.approx(600.0)
    assert penalty_gamma(0.05, dim=2) == pytest.approx(1600.0)


# -- boundary diagonal and conormal estimate --------------------------------------------------


def _synthetic_offsets(hemisphere, h, alphas, phis):
    """Points cp + h (cos a n + sin a N) around the equator, with their exact cp."""
    cp = np.column_stack([np.cos(phis), np.sin(phis), np.zeros_like(phis)])
    n = np.array([0.0, 0.0, -1.0])
    x = cp + h * (np.cos(alphas)[:, None] * n + np.sin(alphas)[:, None] * cp)
    return x, cp


def _single_cls(x, cp, cpbar):
    return PointClassification(cp=cp, cpbar=cpbar, distance=np.linalg.norm(x - cp, axis=1),
                               on_boundary=np.ones(len(x), bool))


def _fake_grid(x):
    # build_boundary_diagonal only uses grid.points and grid.m
    class G:
        points = x
        m = len(x)

    return G


def test_boundary_diagonal_synthetic(hemisphere):
    h = 0.03
    phis = np.linspace(0, 2 * np.pi, 7)
    x, cp = _synthetic_offsets(hemisphere, h, np.zeros(7), phis)
    cls = _single_cls(x, cp, modified_closest_points(hemisphere, x)[0])
    n_exact = np.tile([0.0, 0.0, -1.0], (7, 1))
    D = build_boundary_diagonal(_fake_grid(x), cls, n_exact)
    np.testing.assert_allclose(D.diagonal(), 2 * h, atol=1e-15)


def test_conormal_direction_error_is_first_order(hemisphere):
    alphas = np.linspace(0, 1.4, 8)
    phis = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    hs = np.array([0.1, 0.05, 0.025, 0.0125])
    errs = []
    for h in hs:
        x, cp = _synthetic_offsets(hemisphere, h, alphas, phis)
        cls = _single_cls(x, cp, modified_closest_points(hemisphere, x)[0])
        n, deg = approximate_conormal(_fake_grid(x), cls)
        assert not deg.any()
        errs.append(np.linalg.norm(n - [0, 0, -1], axis=1).max())
    # normalising cp - cpbar divides an O(h^2) remainder by an O(h) length
    assert 0.9 < _order(errs, hs) < 1.2


def test_boundary_diagonal_error_is_second_order(hemisphere):
    alphas = np.linspace(0, 1.4, 8)
    phis = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    hs = np.array([0.1, 0.05, 0.025, 0.0125])
    errs = []
    for h in hs:
        x, cp = _synthetic_offsets(hemisphere, h, alphas, phis)
        cls = _single_cls(x, cp, modified_closest_points(hemisphere, x)[0])
        n, _ = approximate_conormal(_fake_grid(x), cls)
        d_approx = build_boundary_diagonal(_fake_grid(x), cls, n).diagonal()
        d_exact = build_boundary_diagonal(_fake_grid(x), cls, np.tile([0.0, 0, -1], (len(x), 1))).diagonal()
        errs.append(np.abs(d_approx - d_exact).max())
    assert _order(errs, hs) >= 1.9


def test_degenerate_conormal_zeroes_diagonal():
    x = np.array([[1.0, 0.0, 0.05], [1.0, 0.0, -0.2]])
    cp = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    cpbar = cp + np.array([[0.0, 0.0, 0.3 * CONORMAL_THRESHOLD], [0.0, 0.0, 0.19]])
    cls = _single_cls(x, cp, cpbar)
    n, deg = approximate_conormal(_fake_grid(x), cls)
    np.testing.assert_array_equal(deg, [True, False])
    np.testing.assert_array_equal(n[0], 0.0)
    d = build_boundary_diagonal(_fake_grid(x), cls, n, deg).diagonal()
    assert d[0] == 0.0 and d[1] == pytest.approx(0.4)
    assert np.all(np.isfinite(d))


def test_diagonal_bounds_and_support(hemi01, mobius01):
    for grid, cls, ops in (hemi01, mobius01):
        d = ops.d
        assert np.all(d[cls.interior] == 0)
        assert np.all(np.abs(d) <= 2 * cls.distance + 1e-15)
        assert np.all(d[cls.exterior & ~ops.degenerate] >= -1e-12)
        n = ops.conormal[cls.exterior & ~ops.degenerate]
        np.testing.assert_allclose(np.linalg.norm(n, axis=1), 1.0, atol=1e-12)


def test_approximate_and_analytic_diagonals_agree(hemisphere):
    gaps = []
    for dx in (0.1, 0.05):
        _, cls, ops_a = band_and_ops(hemisphere, dx)
        _, _, ops_x = band_and_ops(hemisphere, dx, conormal="analytic")
        ext = cls.exterior & ~ops_a.degenerate
        gaps.append(np.abs(ops_a.d - ops_x.d)[ext].max())
    assert gaps[0] < 0.15
    assert np.log2(gaps[0] / gaps[1]) >= 1.9


# -- extrapolation identities ----------------------------------------------------------------


def test_central_difference_rate(hemisphere):
    alphas = np.linspace(0, 1.3, 6)
    phis = np.linspace(0.1, 2 * np.pi, 6, endpoint=False)
    hs = np.array([0.1, 0.05, 0.025, 0.0125])
    errs = []
    for h in hs:
        x, cp = _synthetic_offsets(hemisphere, h, alphas, phis)
        r = 2 * cp - x
        w = (x - cp) / h
        cd = (radial_ext(x) - radial_ext(r)) / (2 * h)
        errs.append(np.abs(cd - w @ [0, 0, -1.0] * dn_radial(cp)).max())
    assert _order(errs, hs) >= 1.95
    assert np.log2(errs[-2] / errs[-1]) >= 1.99


def _extension_residual(ops, grid, cls):
    u = radial_ext(grid.points)
    ext = cls.exterior & ~ops.degenerate
    j = dn_radial(cls.cp)
    return np.abs(u - ops.Ebar @ u - ops.d * j)[ext].max()


def test_extension_residual_high_order_with_exact_conormal(hemisphere):
    res = []
    for dx in (0.1, 0.05):
        grid, cls, ops = band_and_ops(hemisphere, dx, "analytic")
        res.append(_extension_residual(ops, grid, cls))
    assert np.log2(res[0] / res[1]) >= 2.5


def test_matrix_market_dump(hemi01, tmp_path):
    _, _, ops = hemi01
    dump_matrices(ops, tmp_path)
    for name in ("E", "Ebar", "L", "D"):
        M = scipy.io.mmread(tmp_path / f"{name}.mtx").tocsr()
        assert abs(M - getattr(ops, name)).max() == 0.0
