import numpy as np
import pytest

from gaborlab.algebra import (
    StarAlgebra,
    TraceFunctional,
    block_matrix_algebra,
    full_matrix_algebra,
    gns,
)
from gaborlab.bimodule import (
    Bimodule,
    HypothesisError,
    check_alignment,
    gaussian_vector,
    left_bounded_operator,
    operator_norm,
    random_instance,
    right_bounded_operator,
    cdim_product_identity_deviation,
    trial_rng,
    verify_hypotheses,
    verify_left_right_bounded,
)
from gaborlab.duality import gabor_bimodule
from gaborlab.gabor import Window, bessel_bound_opt, frame_operator
from gaborlab.groups import FiniteAbelianGroup, lattice_from_generators, phase_point
from gaborlab.vnmod import LeftModule, RightModule, bounded_operator

Z4 = FiniteAbelianGroup((4,))


def halfline_lattice():
    # {0,2} x Z_4 over Z_4: index 2 in time, full in frequency
    gens = [phase_point(Z4, (2,), (0,)), phase_point(Z4, (0,), (1,))]
    return lattice_from_generators(Z4, gens)


def delta_window(group):
    vals = np.zeros(group.size, dtype=complex)
    vals[0] = 1.0
    return Window(group, vals)


def regular_right_module(alg, kappa):
    sp = gns(alg, kappa)
    images = np.stack([sp.right(b) for b in alg.basis])
    return RightModule(alg, kappa, images)


# ----------------------------------------------------------- operator basics


def test_zero_vector_gives_zero_operators():
    bm = gabor_bimodule(halfline_lattice()).bimodule
    zero = np.zeros(bm.space_dim, dtype=complex)
    assert operator_norm(left_bounded_operator(zero, bm)) == 0.0
    assert operator_norm(right_bounded_operator(zero, bm)) == 0.0


def test_bounded_operator_norm_on_regular_module():
    alg = full_matrix_algebra(2)
    kappa = TraceFunctional.from_matrix_trace(alg)
    mod = regular_right_module(alg, kappa)
    rng = np.random.default_rng(31)
    for _ in range(10):
        co = rng.normal(size=4) + 1j * rng.normal(size=4)
        n = alg.reconstruct(co)
        f = mod.space.hat(n)
        got = operator_norm(bounded_operator(f, mod))
        want = np.linalg.norm(n, ord=2)
        assert got == pytest.approx(want, abs=1e-10)


def test_gabor_worked_instance_norms():
    lat = halfline_lattice()
    gbm = gabor_bimodule(lat)
    g = delta_window(Z4)
    # frame operator diag(4,0,4,0), so the optimal Bessel bound is 4
    s = frame_operator(g, lat)
    assert np.allclose(s, np.diag([4.0, 0, 4.0, 0]), atol=1e-12)
    rn = operator_norm(right_bounded_operator(g.values, gbm.bimodule))
    assert rn**2 == pytest.approx(4.0, abs=1e-9)
    # left norm squared: adjoint-side Bessel bound divided by the covolume
    b_adj = bessel_bound_opt(g, gbm.adjoint)
    assert b_adj == pytest.approx(2.0, abs=1e-12)
    assert float(gbm.covol) == 0.5
    ln = operator_norm(left_bounded_operator(g.values, gbm.bimodule))
    assert ln**2 == pytest.approx(b_adj / float(gbm.covol), abs=1e-9)
    assert ln == pytest.approx(rn, abs=1e-9)


def test_left_operator_module_identity():
    # L_{f n} = L_f composed with left multiplication on the GNS side
    bm = random_instance(11, blocks=[(2, 2, 2)])
    rng = np.random.default_rng(32)
    sp = bm.right.space
    for _ in range(10):
        f = gaussian_vector(rng, bm.space_dim)
        co = rng.normal(size=bm.right.algebra.dimension)
        n = bm.right.algebra.reconstruct(co)
        lhs = left_bounded_operator(bm.act_right(n) @ f, bm)
        rhs = left_bounded_operator(f, bm) @ sp.left(n)
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * max(1.0, np.linalg.norm(rhs))


# -------------------------------------------------------------- alignment


def test_gabor_module_is_aligned():
    gbm = gabor_bimodule(halfline_lattice())
    report = check_alignment(gbm.bimodule)
    assert report.aligned
    assert report.deviation <= 1e-9


def test_scaled_trace_breaks_alignment():
    gbm = gabor_bimodule(halfline_lattice())
    bm = gbm.bimodule
    doubled = RightModule(bm.right.algebra, bm.right.trace.scaled(2.0), bm.right.images)
    skew = Bimodule(bm.left, doubled)
    report = check_alignment(skew)
    assert not report.aligned
    assert report.deviation > 1e-3


def test_induced_trace_instance_is_aligned():
    bm = random_instance(5, blocks=[(2, 2, 2), (1, 2, 2)])
    assert check_alignment(bm).aligned


# ------------------------------------------------------------- hypotheses


def test_mismatched_centers_detected():
    diag = block_matrix_algebra([1, 1])
    kappa = TraceFunctional.from_matrix_trace(diag)
    right = RightModule(diag, kappa, np.stack([b.T for b in diag.basis]))
    scalars = StarAlgebra(np.eye(2)[None, :, :].astype(complex) / np.sqrt(2))
    tau = TraceFunctional.from_function(scalars, lambda m: m[0, 0])
    left = LeftModule(scalars, tau, scalars.basis)
    bm = Bimodule(left, right)
    with pytest.raises(HypothesisError) as err:
        verify_hypotheses(bm)
    assert err.value.hypothesis == "matching centers"
    assert err.value.deviation > 0


def test_hypotheses_pass_on_seeded_instance():
    bm = random_instance(7, blocks=[(2, 4, 2)])
    info = verify_hypotheses(bm)
    assert info["alignment_deviation"] <= 1e-9
    assert info["center_defect"] <= 1e-8


# -------------------------------------------------------- norm inequality


def test_norm_equality_on_gabor_module():
    gbm = gabor_bimodule(halfline_lattice())
    reports = verify_left_right_bounded(gbm.bimodule, trials=25, seed=1)
    assert all(r.passed for r in reports)
    assert all(r.equality_deviation is not None for r in reports)
    assert max(r.slack for r in reports) <= 1e-9


def test_norm_inequality_on_multiplicity_instance():
    bm = random_instance(3, blocks=[(2, 4, 2)])
    assert bm.cdim_product().sup_norm() == pytest.approx(4.0, abs=1e-9)
    reports = verify_left_right_bounded(bm, trials=50, seed=2)
    assert all(r.passed for r in reports)
    # brute-force check on a few vectors
    for t in (0, 7, 23):
        f = gaussian_vector(trial_rng(2, t), bm.space_dim)
        ln = operator_norm(left_bounded_operator(f, bm))
        rn = operator_norm(right_bounded_operator(f, bm))
        assert rn <= 4.0 * ln + 1e-9
        assert ln <= 4.0 * rn + 1e-9


def test_trivial_scalar_instance():
    bm = random_instance(9, blocks=[(1, 1, 1)])
    assert bm.space_dim == 1
    reports = verify_left_right_bounded(bm, trials=5, seed=0)
    assert all(r.passed for r in reports)


def test_random_instance_determinism_and_caps():
    a = random_instance(42)
    b = random_instance(42)
    assert np.array_equal(a.left.images, b.left.images)
    assert np.array_equal(a.right.images, b.right.images)
    with pytest.raises(ValueError):
        random_instance(0, space_cap=1000)
    with pytest.raises(ValueError):
        random_instance(0, blocks=[(2, 3, 2)])


# --------------------------------------------------- product identity


def test_cdim_product_identity():
    for seed in (1, 2, 3):
        bm = random_instance(seed)
        assert cdim_product_identity_deviation(bm) <= 1e-9
    gbm = gabor_bimodule(halfline_lattice())
    assert cdim_product_identity_deviation(gbm.bimodule) <= 1e-9


def test_trial_rng_reproducible():
    a = gaussian_vector(trial_rng(5, 3), 8)
    b = gaussian_vector(trial_rng(5, 3), 8)
    c = gaussian_vector(trial_rng(5, 4), 8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
