import json

import numpy as np
import pytest

from gaborlab.gabor import (
    GaborSystem,
    Window,
    analysis_matrix,
    bessel_bound_opt,
    cocycle,
    frame_operator,
    tf_shift,
    window_from_dict,
    window_to_dict,
)
from gaborlab.groups import (
    FiniteAbelianGroup,
    adjoint_lattice,
    covolume,
    enumerate_subgroups,
    lattice_from_generators,
    phase_point,
    phase_space,
)

Z2 = FiniteAbelianGroup((2,))
Z4 = FiniteAbelianGroup((4,))


def pp(group, x, w):
    return phase_point(group, x, w)


def delta0(group):
    v = np.zeros(group.size, dtype=complex)
    v[0] = 1.0
    return Window(group, v)


def test_tf_shift_identity():
    assert np.allclose(tf_shift(Z4, pp(Z4, (0,), (0,))), np.eye(4))


def test_tf_shift_translation_and_modulation():
    swap = tf_shift(Z2, pp(Z2, (1,), (0,)))
    assert np.allclose(swap, np.array([[0, 1], [1, 0]]))
    mod = tf_shift(Z2, pp(Z2, (0,), (1,)))
    assert np.allclose(mod, np.diag([1, -1]))


def test_tf_shift_unitary():
    for z in phase_space(Z4):
        u = tf_shift(Z4, z)
        assert np.linalg.norm(u @ u.conj().T - np.eye(4)) <= 1e-12


def test_cocycle_trivial_frequency():
    z = pp(Z4, (1,), (3,))
    zp = pp(Z4, (2,), (0,))
    assert cocycle(Z4, z, zp) == pytest.approx(1)


def test_cocycle_value():
    # phase conj(w'(x)) with x=2, w'=1 over Z_4: conj(i^2) = -1
    z = pp(Z4, (2,), (0,))
    zp = pp(Z4, (1,), (1,))
    assert cocycle(Z4, z, zp) == pytest.approx(-1)


def test_projectivity_all_pairs():
    """shift(z) shift(z') = cocycle(z,z') shift(z+z'), the whole phase space."""
    from gaborlab.groups import pp_add

    for z in phase_space(Z4):
        uz = tf_shift(Z4, z)
        for zp in phase_space(Z4):
            lhs = uz @ tf_shift(Z4, zp)
            rhs = cocycle(Z4, z, zp) * tf_shift(Z4, pp_add(Z4, z, zp))
            assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_cocycle_identity():
    from gaborlab.groups import pp_add

    rng = np.random.default_rng(1)
    pts = phase_space(Z4)
    for _ in range(50):
        z1, z2, z3 = (pts[rng.integers(len(pts))] for _ in range(3))
        lhs = cocycle(Z4, z1, z2) * cocycle(Z4, pp_add(Z4, z1, z2), z3)
        rhs = cocycle(Z4, z1, pp_add(Z4, z2, z3)) * cocycle(Z4, z2, z3)
        assert abs(lhs - rhs) <= 1e-12


def test_analysis_matrix_conventions():
    g = Window(Z4, np.array([1, 2j, -1, 0.5], dtype=complex))
    triv = lattice_from_generators(Z4, [])
    row = analysis_matrix(g, triv)
    assert row.shape == (1, 4)
    assert np.allclose(row[0], g.values.conj())

    zero = Window(Z4, np.zeros(4, dtype=complex))
    full = lattice_from_generators(Z4, [pp(Z4, (1,), (0,)), pp(Z4, (0,), (1,))])
    assert np.allclose(analysis_matrix(zero, full), 0)

    # (C f)_z = <f, shift(z) g>, linear in f
    f = np.array([0.3, -1j, 2, 1], dtype=complex)
    C = analysis_matrix(g, full)
    for i, z in enumerate(full.elements):
        want = np.vdot(tf_shift(Z4, z) @ g.values, f)  # vdot conjugates arg 1
        assert C[i] @ f == pytest.approx(want)


def test_frame_operator_full_lattice():
    full = lattice_from_generators(Z4, [pp(Z4, (1,), (0,)), pp(Z4, (0,), (1,))])
    S = frame_operator(delta0(Z4), full)
    assert np.allclose(S, 4 * np.eye(4), atol=1e-12)


def test_frame_operator_half_lattice():
    lat = lattice_from_generators(Z4, [pp(Z4, (2,), (0,)), pp(Z4, (0,), (1,))])
    S = frame_operator(delta0(Z4), lat)
    assert np.allclose(S, np.diag([4, 0, 4, 0]), atol=1e-12)


def test_frame_operator_rank_one():
    g = Window(Z4, np.array([1, 1j, 0, -1], dtype=complex))
    triv = lattice_from_generators(Z4, [])
    S = frame_operator(g, triv)
    v = g.values
    assert np.allclose(S, np.outer(v, v.conj()), atol=1e-12)


def test_bessel_bound_worked_values():
    full = lattice_from_generators(Z4, [pp(Z4, (1,), (0,)), pp(Z4, (0,), (1,))])
    half = lattice_from_generators(Z4, [pp(Z4, (2,), (0,)), pp(Z4, (0,), (1,))])
    g = delta0(Z4)
    assert bessel_bound_opt(g, full) == pytest.approx(4)
    assert bessel_bound_opt(g, half) == pytest.approx(4)
    assert bessel_bound_opt(g, adjoint_lattice(half)) == pytest.approx(2)
    assert bessel_bound_opt(g, adjoint_lattice(full)) == pytest.approx(1)


def test_bessel_bound_matches_synthesis_norm():
    # second route: squared operator norm of the analysis map
    rng = np.random.default_rng(7)
    lat = lattice_from_generators(Z4, [pp(Z4, (2,), (0,)), pp(Z4, (0,), (2,))])
    for _ in range(10):
        g = Window(Z4, rng.standard_normal(4) + 1j * rng.standard_normal(4))
        C = analysis_matrix(g, lat)
        assert bessel_bound_opt(g, lat) == pytest.approx(np.linalg.norm(C, 2) ** 2)


def test_shift_linear_independence():
    for lat in enumerate_subgroups(Z4):
        mats = np.stack([tf_shift(Z4, z) for z in lat.elements])
        flat = mats.reshape(lat.size, -1)
        svals = np.linalg.svd(flat, compute_uv=False)
        assert svals[-1] > 1e-10 * svals[0]


def test_bessel_duality_seeded_windows():
    """The duality of optimal bounds, directly from the two frame operators."""
    rng = np.random.default_rng(11)
    for group in (Z2, FiniteAbelianGroup((6,))):
        for lat in enumerate_subgroups(group):
            adj = adjoint_lattice(lat)
            cv = float(covolume(lat))
            for _ in range(5):
                g = Window(group, rng.standard_normal(group.size) + 1j * rng.standard_normal(group.size))
                b = bessel_bound_opt(g, lat)
                bo = bessel_bound_opt(g, adj)
                assert abs(bo - cv * b) <= 1e-8 * max(1.0, b)


def test_gabor_system_wrapper():
    lat = lattice_from_generators(Z4, [pp(Z4, (2,), (0,)), pp(Z4, (0,), (1,))])
    sys = GaborSystem(delta0(Z4), lat)
    assert np.allclose(sys.frame(), np.diag([4, 0, 4, 0]))
    assert sys.bessel_bound() == pytest.approx(4)


def test_window_json_round_trip():
    g = Window(Z4, np.array([1, 2j, -0.5, 0], dtype=complex))
    data = json.loads(json.dumps(window_to_dict(g)))
    back = window_from_dict(data)
    assert back.group.orders == (4,)
    assert np.allclose(back.values, g.values)
