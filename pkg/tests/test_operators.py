"""Truncated multipliers, submodules and quotient compressions, rational
compressions, cross-commutators, Schatten norms, and the profile harness."""

import numpy as np
import pytest

from symdom.domains import DomainSpec
from symdom.errors import DenominatorVanishes, NotPermissive, ValidationError
from symdom.kernels import truncated_basis
from symdom.operators import (
    compress,
    compress_rational,
    coordinate_mult_ops,
    cross_commutator,
    essential_normality_profile,
    mult_op,
    permissive_transform,
    quotient_model,
    schatten_norm,
    submodule_span,
    whole_space_model,
    windowed_submatrix,
)
from symdom.polynomials import Polynomial
from symdom.sampling import random_point

BALL1 = DomainSpec.ball(1)
BALL2 = DomainSpec.ball(2)
POLY2 = DomainSpec.polydisc(2)

Z1 = Polynomial.coordinate(0, 2)
Z2 = Polynomial.coordinate(1, 2)


def random_poly(nvars, degree, rng):
    from symdom.kernels import multi_indices

    terms = {}
    for d in range(degree + 1):
        for alpha in multi_indices(nvars, d):
            terms[alpha] = complex(rng.standard_normal(), rng.standard_normal())
    return Polynomial(nvars, terms)


# ---------------------------------------------------------------------
# truncated multiplication operators
# ---------------------------------------------------------------------

def test_mult_by_one_is_identity():
    basis = truncated_basis(BALL2, 2.0, 5)
    assert np.abs(mult_op(basis, Polynomial.constant(2, 1.0)) - np.eye(basis.dim)).max() < 1e-13


def test_disc_hardy_shift_exact():
    basis = truncated_basis(BALL1, 1.0, 4)
    shift = mult_op(basis, Polynomial.coordinate(0, 1))
    want = np.zeros((5, 5))
    for k in range(4):
        want[k + 1, k] = 1.0
    assert np.abs(shift - want).max() < 1e-13


def test_ball2_coordinate_multiplier_contraction():
    # Drury-Arveson weight: each coordinate multiplier has norm exactly <= 1
    for d_trunc in (4, 8):
        basis = truncated_basis(BALL2, 1.0, d_trunc)
        for op in coordinate_mult_ops(basis):
            assert np.linalg.norm(op, 2) <= 1.0 + 1e-12


def test_mult_top_degree_truncation():
    # z^D raises only the constant into range; everything else truncates away
    basis = truncated_basis(BALL1, 1.0, 3)
    op = mult_op(basis, Polynomial.monomial((3,), 1.0))
    want = np.zeros((4, 4))
    want[3, 0] = 1.0
    assert np.abs(op - want).max() < 1e-13


# ---------------------------------------------------------------------
# submodules
# ---------------------------------------------------------------------

def test_submodule_codimensions_frozen():
    basis3 = truncated_basis(BALL2, 1.0, 3)
    span = submodule_span(basis3, [Z1])
    assert basis3.dim - span.rank == 4  # complement spanned by z2^k, k <= 3

    basis4 = truncated_basis(BALL2, 1.0, 4)
    span = submodule_span(basis4, [Z1 * Z2])
    assert basis4.dim - span.rank == 9  # monomials z1^j, z2^k


def test_submodule_rejects_zero_generators():
    basis = truncated_basis(BALL2, 1.0, 3)
    with pytest.raises(ValidationError):
        submodule_span(basis, [Polynomial.zero(2)])


def test_submodule_invariance_under_truncated_multipliers():
    basis = truncated_basis(BALL2, 3.0, 8)
    for gens in ([Z1], [Z1 * Z2], [Z1 * Z1 + Z2]):
        span = submodule_span(basis, gens)
        proj = span.onb @ span.onb.conj().T
        for op in coordinate_mult_ops(basis):
            defect = np.linalg.norm((np.eye(basis.dim) - proj) @ op @ proj, 2)
            assert defect <= 1e-12 * max(1.0, np.linalg.norm(op, 2))


# ---------------------------------------------------------------------
# quotient models
# ---------------------------------------------------------------------

def test_quotient_z1_compressions():
    basis = truncated_basis(BALL2, 3.0, 10)
    model = quotient_model(basis, [Z1])
    s1, s2 = model.tuple_mats
    assert np.abs(s1).max() < 1e-12
    # weighted shift on {z2^k}: |S2[k+1,k]| = ||z2^(k+1)||/||z2^k||, phases free
    lam = 3.0
    mags = np.abs(s2)
    for k in range(10):
        want = np.sqrt((k + 1) / (lam + k))
        assert abs(mags[k + 1, k] - want) < 1e-12
        mags[k + 1, k] = 0.0
    assert mags.max() < 1e-12


def test_quotient_tuple_commutes():
    basis = truncated_basis(BALL2, 2.0, 8)
    for gens in ([Z1], [Z1 * Z2]):
        model = quotient_model(basis, gens)
        mats = model.tuple_mats
        scale = max(np.linalg.norm(m, 2) for m in mats) ** 2
        for i in range(2):
            for j in range(2):
                comm = mats[i] @ mats[j] - mats[j] @ mats[i]
                assert np.linalg.norm(comm, 2) <= 1e-10 * max(1.0, scale)


def test_quotient_projector_properties():
    basis = truncated_basis(BALL2, 2.0, 6)
    model = quotient_model(basis, [Z1 * Z2])
    proj = model.projector()
    assert np.abs(proj @ proj - proj).max() < 1e-12
    assert np.abs(proj - proj.conj().T).max() < 1e-12


def test_whole_space_quotient_is_empty():
    basis = truncated_basis(BALL2, 2.0, 4)
    model = quotient_model(basis, [Polynomial.constant(2, 1.0)])
    assert model.dim_quotient == 0


# ---------------------------------------------------------------------
# compressions
# ---------------------------------------------------------------------

def test_compress_one_is_identity():
    basis = truncated_basis(BALL2, 3.0, 6)
    model = quotient_model(basis, [Z1])
    out = compress(model, Polynomial.constant(2, 1.0))
    assert np.abs(out - np.eye(model.dim_quotient)).max() == 0.0


def test_compress_generator_is_zero():
    basis = truncated_basis(BALL2, 3.0, 6)
    model = quotient_model(basis, [Z1])
    assert np.abs(compress(model, Z1)).max() < 1e-12


def test_product_identity_on_degree_window(rng):
    # S_fg agrees with S_f S_g on basis vectors of low enough degree
    basis = truncated_basis(BALL2, 3.0, 10)
    for gens in ([Z1], [Z1 * Z2], [Z1 * Z1 + Z2]):
        model = quotient_model(basis, gens)
        labels = model.degree_labels
        for _ in range(5):
            f = random_poly(2, 2, rng)
            g = random_poly(2, 3, rng)
            lhs = compress(model, f * g)
            rhs = compress(model, f) @ compress(model, g)
            window = labels <= 10 - f.degree() - g.degree()
            diff = (lhs - rhs)[:, window]
            assert np.abs(diff).max() <= 1e-12


def test_compress_rational_trivial_cases(rng):
    basis = truncated_basis(BALL1, 1.0, 8)
    model = whole_space_model(basis)
    q = Polynomial.constant(1, 1.0) + Polynomial.coordinate(0, 1) * (-0.5)
    same = compress_rational(model, q, q)
    assert np.abs(same - np.eye(model.dim_quotient)).max() < 1e-10
    p = random_poly(1, 3, rng)
    via_rational = compress_rational(model, p, Polynomial.constant(1, 1.0))
    assert np.array_equal(via_rational, compress(model, p))


def test_compress_rational_mobius_contraction():
    # disc automorphism symbols compress to contractions with spectrum {-z0};
    # the internal denominator solve stays well conditioned up to |z0| = 0.7
    basis = truncated_basis(BALL1, 1.0, 10)
    model = whole_space_model(basis)
    z = Polynomial.coordinate(0, 1)
    for z0 in (0.3, 0.5, 0.7):
        p = z + Polynomial.constant(1, -z0)
        q = Polynomial.constant(1, 1.0) + z * (-np.conj(z0))
        s = compress_rational(model, p, q)
        assert np.linalg.norm(s, 2) <= 1.0 + 1e-10
        eigs = np.linalg.eigvals(s)
        assert np.abs(eigs - (-z0)).max() < 1e-8


def test_compress_rational_vanishing_denominator():
    basis = truncated_basis(BALL1, 1.0, 6)
    model = whole_space_model(basis)
    q = Polynomial.constant(1, 1.0) + Polynomial.coordinate(0, 1) * (-1.0)
    with pytest.raises(DenominatorVanishes):
        compress_rational(model, Polynomial.constant(1, 1.0), q)


# ---------------------------------------------------------------------
# cross-commutators and Schatten norms
# ---------------------------------------------------------------------

def test_cross_commutator_hermitian_vanishes(rng):
    herm = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    herm = herm + herm.conj().T
    assert np.abs(cross_commutator(herm, herm)).max() < 1e-13


def test_disc_truncation_commutator_structure():
    # [S, S*] on the degree-D Hardy truncation: defect -1 at the bottom and a
    # +1 truncation artifact at top degree; everything else zero
    for d_trunc in (6, 10):
        basis = truncated_basis(BALL1, 1.0, d_trunc)
        shift = mult_op(basis, Polynomial.coordinate(0, 1))
        comm = cross_commutator(shift, shift)
        diag = np.diag(comm).real
        assert abs(abs(diag[0]) - 1.0) < 1e-12
        assert abs(abs(diag[-1]) - 1.0) < 1e-12
        assert diag[0] == -diag[-1]
        assert np.abs(comm - np.diag(diag)).max() < 1e-12
        assert np.abs(diag[1:-1]).max() < 1e-12
        assert abs(schatten_norm(comm, 1.0) - 2.0) < 1e-12


def test_commutator_scaling_is_quadratic(rng):
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    for _ in range(20):
        c = rng.uniform(0.1, 1.0)
        d = complex(rng.standard_normal(), rng.standard_normal()) * 0.3
        scaled = cross_commutator(c * a + d * np.eye(6), c * a + d * np.eye(6))
        assert np.abs(scaled - c**2 * cross_commutator(a, a)).max() < 1e-13


def test_schatten_norm_values(rng):
    assert schatten_norm(np.zeros((4, 4)), 2.0) == 0.0
    u = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    rank_one = np.outer(u, np.conj(v))
    want = np.linalg.norm(u) * np.linalg.norm(v)
    for p in (1.0, 2.0, 3.0, np.inf):
        assert abs(schatten_norm(rank_one, p) - want) < 1e-12 * want
    assert abs(schatten_norm(np.diag([3.0, 4.0]), 2.0) - 5.0) < 1e-14


def test_schatten_norm_rejects_p_below_one():
    with pytest.raises(ValidationError):
        schatten_norm(np.eye(3), 0.5)


def test_schatten_adjoint_symmetry(rng):
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    b = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    for p in (1.0, 2.0, 4.0):
        assert abs(
            schatten_norm(cross_commutator(a, b), p) - schatten_norm(cross_commutator(b, a), p)
        ) < 1e-11


def test_commutator_algebra_identities(rng):
    # [UV, W] = U[V, W] + [U, W]V and [U^-m, V] = U^-m [V, U^m] U^-m
    def comm(x, y):
        return x @ y - y @ x

    for _ in range(10):
        u = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)) + 3 * np.eye(5)
        v = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        w = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        lhs = comm(u @ v, w)
        rhs = u @ comm(v, w) + comm(u, w) @ v
        assert np.abs(lhs - rhs).max() < 1e-12 * max(1.0, np.abs(lhs).max())
        m = 2
        u_m = np.linalg.matrix_power(u, m)
        u_minus = np.linalg.inv(u_m)
        lhs = comm(u_minus, v)
        rhs = u_minus @ comm(v, u_m) @ u_minus
        assert np.abs(lhs - rhs).max() < 1e-11 * max(1.0, np.abs(lhs).max())


def test_normal_tuple_has_commuting_compressions(rng):
    # diagonal (normal, commuting) tuples: every polynomial cross-commutator vanishes
    d1 = np.diag(rng.standard_normal(6) + 1j * rng.standard_normal(6))
    d2 = np.diag(rng.standard_normal(6) + 1j * rng.standard_normal(6))
    for _ in range(5):
        h = random_poly(2, 3, rng)
        q = random_poly(2, 3, rng)
        assert np.abs(cross_commutator(h.eval_tuple([d1, d2]), q.eval_tuple([d1, d2]))).max() < 1e-9


# ---------------------------------------------------------------------
# permissive transforms
# ---------------------------------------------------------------------

def test_permissive_identity_transform():
    basis = truncated_basis(BALL2, 2.0, 5)
    mats = quotient_model(basis, [Z1]).tuple_mats
    out = permissive_transform(mats, 1.0, np.zeros(2), BALL2)
    for a, b in zip(out, mats):
        assert np.array_equal(a, b)


def test_permissive_accepts_nilpotent_any_scale(rng):
    basis = truncated_basis(BALL2, 2.0, 5)
    mats = quotient_model(basis, [Z1]).tuple_mats
    for c in (0.25, 0.5, 1.0):
        shift = random_point(BALL2, rng, max_norm=0.9)
        permissive_transform(mats, c, shift, BALL2)


def test_permissive_rejects_exterior_spectrum():
    mats = [np.diag([0.8, 0.1]), np.diag([0.0, 0.0])]
    with pytest.raises(NotPermissive):
        permissive_transform(mats, 1.0, np.array([0.5, 0.0]), BALL2)


# ---------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------

def test_profile_constant_symbol_vanishes():
    rows = essential_normality_profile(
        BALL2, 2.0, [Z1], [Polynomial.constant(2, 1.0)], [2.0], [4, 6]
    )
    assert rows
    for row in rows:
        assert row.schatten_full == 0.0
        assert row.schatten_windowed == 0.0


def test_profile_disc_full_module_frozen():
    rows = essential_normality_profile(
        BALL1, 1.0, [], [Polynomial.coordinate(0, 1)], [1.0], [6, 10]
    )
    for row in rows:
        assert abs(row.schatten_full - 2.0) < 1e-12
        assert abs(row.schatten_windowed - 1.0) < 1e-12


def test_profile_regression_anchor():
    rows = essential_normality_profile(BALL2, 3.0, [Z1], [Z1, Z2], [3.0], [8])
    cells = {(r.symbol_i, r.symbol_j): r for r in rows}
    assert cells[("z2", "z2")].dim_quotient == 9
    assert abs(cells[("z2", "z2")].schatten_windowed - 0.35071399842643397) < 1e-9
    assert cells[("z1", "z1")].schatten_full < 1e-12


def test_windowed_submatrix_selects_low_degrees():
    mat = np.arange(16, dtype=float).reshape(4, 4)
    labels = np.array([0, 1, 1, 2])
    sub = windowed_submatrix(mat, labels, 1)
    assert sub.shape == (3, 3)
    assert np.array_equal(sub, mat[:3, :3])
