import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _support import bench, oracle_discrepancy, ring
from axivisc.biot_savart import (EllipticSolveError, SingularProbeError, Streamfunction, biot_savart_direct,
                                 divergence_ratio, elliptic_solver, kernel_split_fields, kernel_split_norms,
                                 reconstruct_velocity, ring_kernel_elliptic, ring_kernel_quadrature,
                                 ring_streamfunction, solve_streamfunction, velocity_at,
                                 velocity_from_streamfunction)
from axivisc.grid import ScalarField, hill_vortex, lp_norm_3d, zeros
from axivisc.validation import manufactured_error, translation_velocity


def test_zero_vorticity_gives_zero_streamfunction():
    for bc in ("free", "dirichlet"):
        assert not solve_streamfunction(zeros(bench(16)), bc).psi.any()


def test_manufactured_streamfunction_second_order():
    e = [manufactured_error(n) for n in (16, 32, 64)]
    for a, b in zip(e, e[1:]):
        assert 3.2 <= a / b <= 4.8


def test_residual_meets_tolerance():
    xi = ring(32)
    solver = elliptic_solver(xi.grid, "free")
    s = solver.solve(xi)
    from axivisc.biot_savart import corner_average

    rc = xi.grid.r_corners[1:-1, None]
    res = solver.residual(s.psi, corner_average(xi.data))
    assert np.max(np.abs(res)) <= 1e-10 * np.max(np.abs(rc ** 2 * corner_average(xi.data)))


def test_unreachable_tolerance_raises_with_residual():
    xi = ring(16)
    with pytest.raises(EllipticSolveError) as info:
        solve_streamfunction(xi, rtol=1e-40)
    assert info.value.residual > info.value.target


@settings(max_examples=10, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 1000))
def test_streamfunction_linear(a, b, seed):
    g = bench(16)
    rng = np.random.default_rng(seed)
    x1 = ScalarField(g, rng.standard_normal(g.shape))
    x2 = ScalarField(g, rng.standard_normal(g.shape))
    lhs = solve_streamfunction(x1.with_data(a * x1.data + b * x2.data)).psi
    rhs = a * solve_streamfunction(x1).psi + b * solve_streamfunction(x2).psi
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale


def test_zero_psi_gives_zero_velocity():
    g = bench(8)
    v = velocity_from_streamfunction(Streamfunction(g, np.zeros((g.nr + 1, g.nz + 1))))
    assert not v.Fr.any() and not v.Fz.any()


def test_rigid_translation_streamfunction():
    g = bench(16)
    v = translation_velocity(g, 0.7)
    assert not v.Fr.any()
    assert np.allclose(v.uz_faces(), 0.7, rtol=1e-14, atol=0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.sampled_from([4, 8, 16]))
def test_divergence_telescopes_for_any_psi(seed, n):
    g = bench(n)
    psi = np.random.default_rng(seed).standard_normal((g.nr + 1, g.nz + 1))
    psi[0] = 0.0
    v = velocity_from_streamfunction(Streamfunction(g, psi))
    assert divergence_ratio(v, psi) <= 1e-13
    assert not v.Fr[0].any()


def test_axis_regularity_of_reconstruction():
    xi = ring(64)
    v = reconstruct_velocity(xi)
    assert not v.Fr[0].any()
    uz = v.uz_faces()
    quotient = np.abs(uz[1] - uz[0]) / xi.grid.dr
    assert quotient.max() < 10 * v.max_speed()


def test_direct_zero_field():
    assert not biot_savart_direct(zeros(bench(16)), [(1.0, 0.0), (2.0, 1.0)]).any()


def test_direct_mirror_symmetry():
    g = bench(32)
    xi = ring(32)
    pts = [(g.r_corners[i], g.z_corners[32 + k]) for i, k in [(4, 5), (8, 3), (12, 9)]]
    mirrored = [(r, -z) for r, z in pts]
    u = biot_savart_direct(xi, pts)
    m = biot_savart_direct(xi, mirrored)
    scale = np.abs(u).max()
    assert np.allclose(u[:, 1], m[:, 1], atol=1e-8 * scale, rtol=0)
    assert np.allclose(u[:, 0], -m[:, 0], atol=1e-8 * scale, rtol=0)


def test_direct_refuses_singular_probe():
    g = bench(16)
    with pytest.raises(SingularProbeError, match="probe 1"):
        biot_savart_direct(ring(16), [(1.0, 0.0), (g.r[5], g.z[7])])
    with pytest.raises(SingularProbeError, match="probe 0"):
        biot_savart_direct(ring(16), [(0.0, 0.0)])


def test_ring_kernel_routes_agree():
    r, z = 0.8, 0.3
    rho = np.array([0.2, 1.0, 1.7, 3.1])
    zeta = np.array([-0.5, 0.0, 0.9, 0.31])
    q = np.array(ring_kernel_quadrature(r, z, rho, zeta))
    e = np.array(ring_kernel_elliptic(r, z, rho, zeta))
    assert np.allclose(q, e, rtol=1e-8, atol=1e-12)


def test_ring_streamfunction_generates_kernel():
    r, z, rho, zeta, h = 0.7, 0.4, 1.1, -0.2, 1e-5
    ur, uz = ring_kernel_elliptic(r, z, rho, zeta)
    dpsi_dz = (ring_streamfunction(r, z + h, rho, zeta) - ring_streamfunction(r, z - h, rho, zeta)) / (2 * h)
    dpsi_dr = (ring_streamfunction(r + h, z, rho, zeta) - ring_streamfunction(r - h, z, rho, zeta)) / (2 * h)
    assert -dpsi_dz / r == pytest.approx(float(ur), rel=1e-6)
    assert dpsi_dr / r == pytest.approx(float(uz), rel=1e-6)


def test_oracle_equivalence_coarse():
    assert oracle_discrepancy(ring(64)) <= 0.02


def test_dirichlet_edges_truncate_the_far_field():
    # the free edge condition is what brings the two routes together on this box
    xi = ring(32)
    s_free = solve_streamfunction(xi, "free")
    s_dir = solve_streamfunction(xi, "dirichlet")
    v_free = velocity_from_streamfunction(s_free)
    v_dir = velocity_from_streamfunction(s_dir)
    assert np.abs(s_free.psi[-1]).max() > 0 and not np.abs(s_dir.psi[-1]).any()
    assert v_free.boundary_tangential() / v_free.max_speed() < v_dir.boundary_tangential() / v_dir.max_speed()


def test_hill_center_velocity_matches_direct():
    g = bench(64)
    xi = hill_vortex(g, 0.0, 1.0, 1.0)
    p = (g.r_corners[2], 0.0)
    d = biot_savart_direct(xi, [p])[0]
    ur, uz = velocity_at(reconstruct_velocity(xi), p[0], p[1])
    assert abs(uz - d[1]) <= 0.02 * abs(d[1])


def test_kernel_split_zero():
    assert kernel_split_norms(zeros(bench(8)), 1.0) == (0.0, 0.0)


def test_kernel_split_sums_to_direct():
    xi = ring(16)
    R, Z, u1, u2 = kernel_split_fields(xi, 1.0, stride=4)
    pts = list(zip(R.ravel()[::7], Z.ravel()[::7]))
    direct = biot_savart_direct(xi, pts)
    total = (u1 + u2).reshape(-1, 2)[::7]
    assert np.allclose(total, direct, rtol=0, atol=1e-7 * np.abs(direct).max())


def test_kernel_split_bounded_under_refinement():
    ratios = []
    for n in (16, 32, 64):
        xi = ring(n)
        a, b = kernel_split_norms(xi, 1.0)
        ratios.append((a + b) / lp_norm_3d(xi, 1))
    assert max(ratios) / min(ratios) <= 3.0


def test_kernel_split_far_part_vanishes_with_cutoff():
    xi = ring(16)
    far = [kernel_split_norms(xi, c, stride=2)[1] for c in (0.5, 1, 2, 4, 8, 16)]
    assert all(b <= a for a, b in zip(far, far[1:]))
    assert far[-1] == 0.0


def test_kernel_split_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        kernel_split_norms(ring(8), 0.0)
