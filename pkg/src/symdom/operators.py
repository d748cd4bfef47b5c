"""Truncated multiplication operators, polynomial submodules and their
quotient compressions.

Everything acts on the degree-<= D orthonormal basis of a continuous-weight
kernel space.  Submodules are spanned by generator multiples truncated back
into the window, which keeps them exactly invariant under the truncated
coordinate multipliers, so the compressed tuple commutes in exact
arithmetic for every generator set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import koszul
from .domains import DomainSpec, spectral_norm
from .errors import (
    DenominatorVanishes,
    NotPermissive,
    NumericallySingular,
    ValidationError,
)
from .kernels import (
    TruncatedBasis,
    _position,
    _shift_positions,
    cached_truncated_basis,
    multi_indices,
)
from .polynomials import Polynomial, RationalSymbol
from .sampling import closed_domain_samples

SPAN_RANK_TOL = 1e-10
INVARIANCE_TOL = 1e-12
DENOMINATOR_MARGIN = 1e-3
DENOMINATOR_SAMPLES = 10_000
CONDITION_CUTOFF = 1e12


def mult_op(basis: TruncatedBasis, f: Polynomial) -> np.ndarray:
    """Matrix of P_D M_f P_D in the orthonormal graded basis."""
    if f.nvars != basis.dom.dim:
        raise ValidationError(
            f"symbol in {f.nvars} variables on {basis.dom.label()}"
        )
    n, D = basis.dom.dim, basis.max_degree
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    for gamma, coeff in f.terms.items():
        g = sum(gamma)
        for d in range(0, D - g + 1):
            rmap = _shift_positions(n, d, gamma)
            scattered = np.zeros((basis.degree_sizes[d + g], basis.degree_sizes[d]))
            scattered[rmap, :] = basis.change[d]
            block = scipy.linalg.solve_triangular(
                basis.change[d + g], scattered, lower=False
            )
            out[basis.block_slice(d + g), basis.block_slice(d)] += coeff * block
    return out


def coordinate_mult_ops(basis: TruncatedBasis) -> list[np.ndarray]:
    return [
        mult_op(basis, Polynomial.coordinate(i, basis.dom.dim))
        for i in range(basis.dom.dim)
    ]


# ---------------------------------------------------------------------
# submodules and quotients
# ---------------------------------------------------------------------

def _truncate(poly: Polynomial, max_degree: int) -> Polynomial:
    kept = {a: c for a, c in poly.terms.items() if sum(a) <= max_degree}
    return Polynomial(poly.nvars, kept)


def _generator_columns(basis: TruncatedBasis, generators) -> np.ndarray:
    """Orthonormal coordinates of the truncated products f_j z^alpha."""
    generators = list(generators)
    if not generators or any(g.is_zero() for g in generators):
        raise ValidationError("need at least one nonzero generator")
    cols = []
    for f in generators:
        if f.nvars != basis.dom.dim:
            raise ValidationError("generator variable count mismatch")
        min_deg = min(sum(a) for a in f.terms)
        if min_deg > basis.max_degree:
            continue
        for d in range(0, basis.max_degree - min_deg + 1):
            for alpha in multi_indices(basis.dom.dim, d):
                product = _truncate(f * Polynomial.monomial(alpha), basis.max_degree)
                if product.is_zero():
                    continue
                cols.append(basis.to_coords(product))
    if not cols:
        raise ValidationError("generators produce an empty span at this degree")
    return np.column_stack(cols)


@dataclass(frozen=True)
class SubmoduleSpan:
    """Orthonormal basis of the truncated submodule M^(D)."""

    basis: TruncatedBasis
    generators: tuple[Polynomial, ...]
    onb: np.ndarray  # dim x rank, orthonormal columns
    rank: int

    @property
    def codim(self) -> int:
        return self.basis.dim - self.rank


def submodule_span(basis: TruncatedBasis, generators) -> SubmoduleSpan:
    """Span of truncated generator multiples, orthonormalized by SVD.

    Singular values below ``SPAN_RANK_TOL`` times the largest one count as
    zero when deciding the rank.
    """
    cols = _generator_columns(basis, generators)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    rank = int(np.sum(s > SPAN_RANK_TOL * s[0])) if s.size else 0
    return SubmoduleSpan(basis, tuple(generators), u[:, :rank], rank)


@dataclass(frozen=True)
class QuotientModel:
    """Compression of the coordinate multipliers to the quotient M^(D) orth.

    ``quotient_onb`` columns are orthonormal, each supported on degrees
    <= its ``degree_labels`` entry; the labels drive windowed Schatten norms.
    """

    basis: TruncatedBasis
    generators: tuple[Polynomial, ...]
    module_onb: np.ndarray
    quotient_onb: np.ndarray
    degree_labels: np.ndarray
    tuple_mats: tuple[np.ndarray, ...]

    @property
    def dim_quotient(self) -> int:
        return self.quotient_onb.shape[1]

    def projector(self) -> np.ndarray:
        """Orthogonal projector of the truncated space onto the quotient."""
        return self.quotient_onb @ self.quotient_onb.conj().T


def _filtration_complement(
    basis: TruncatedBasis, cols: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the orthocomplement of span(cols), adapted to the
    degree filtration: each vector enters at a definite degree."""
    chosen: list[np.ndarray] = []
    labels: list[int] = []
    for k in range(basis.max_degree + 1):
        rows = basis.offset(k) + basis.degree_sizes[k]
        sub = cols[:rows, :]
        null = scipy.linalg.null_space(sub.conj().T, rcond=SPAN_RANK_TOL)
        expected_new = null.shape[1] - len(chosen)
        if expected_new <= 0:
            continue
        if chosen:
            prev = np.column_stack([v[:rows] for v in chosen])
            null = null - prev @ (prev.conj().T @ null)
        u, s, _ = np.linalg.svd(null, full_matrices=False)
        fresh = u[:, :expected_new]
        if expected_new > 0 and (s.size < expected_new or s[expected_new - 1] < 0.5):
            raise NumericallySingular(
                "filtration-adapted complement lost rank; span is ill conditioned"
            )
        for j in range(expected_new):
            vec = np.zeros(basis.dim, dtype=complex)
            vec[:rows] = fresh[:, j]
            chosen.append(vec)
            labels.append(k)
    if not chosen:
        return np.zeros((basis.dim, 0), dtype=complex), np.zeros(0, dtype=int)
    return np.column_stack(chosen), np.asarray(labels, dtype=int)


def quotient_model(basis: TruncatedBasis, generators) -> QuotientModel:
    """Quotient module model: projector onto M^(D) orth and compressed tuple.

    Asserts the two structural identities that hold in exact arithmetic:
    M^(D) is invariant under the truncated multipliers (defect <= 1e-12) and
    the compressed coordinates commute (defect <= 1e-10).
    """
    span = submodule_span(basis, generators)
    cols = _generator_columns(basis, generators)
    quotient_onb, labels = _filtration_complement(basis, cols)
    coords = coordinate_mult_ops(basis)
    compressed = tuple(
        quotient_onb.conj().T @ t @ quotient_onb for t in coords
    )
    if quotient_onb.shape[1] and span.rank:
        defect = max(
            np.linalg.norm(quotient_onb.conj().T @ t @ span.onb, 2) for t in coords
        )
        if defect > INVARIANCE_TOL * max(
            1.0, max(np.linalg.norm(t, 2) for t in coords)
        ):
            raise NumericallySingular(
                f"truncated submodule not invariant, defect {defect:.2e}"
            )
    if quotient_onb.shape[1]:
        koszul.check_commuting(compressed)
    return QuotientModel(
        basis, tuple(generators), span.onb, quotient_onb, labels, compressed
    )


def whole_space_model(basis: TruncatedBasis) -> QuotientModel:
    """Trivial quotient by the zero submodule: the full truncated module."""
    eye = np.eye(basis.dim, dtype=complex)
    return QuotientModel(
        basis,
        (),
        np.zeros((basis.dim, 0), dtype=complex),
        eye,
        basis.degree_labels(),
        tuple(coordinate_mult_ops(basis)),
    )


def compress(model: QuotientModel, f: Polynomial) -> np.ndarray:
    """S_f = P M_f P restricted to the quotient."""
    q = model.quotient_onb
    return q.conj().T @ mult_op(model.basis, f) @ q


def compress_rational(
    model: QuotientModel,
    p: Polynomial,
    q: Polynomial,
    *,
    check_denominator: bool = True,
    seed: int = 20_401,
) -> np.ndarray:
    """S_{p/q} = S_p (S_q)^{-1}.

    The denominator must stay away from zero on the closed domain (sampled
    lower bound >= ``DENOMINATOR_MARGIN``) and S_q must be invertible with
    condition number below ``CONDITION_CUTOFF``.
    """
    if check_denominator:
        rng = np.random.default_rng(seed)
        pts = closed_domain_samples(model.basis.dom, DENOMINATOR_SAMPLES, rng)
        values = np.abs([q.eval_point(pt) for pt in pts])
        if values.size and values.min() < DENOMINATOR_MARGIN:
            raise DenominatorVanishes(
                f"denominator modulus drops to {values.min():.2e} on the closed domain"
            )
    sq = compress(model, q)
    if sq.shape[0] == 0:
        return sq
    sv = np.linalg.svd(sq, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > CONDITION_CUTOFF:
        raise NumericallySingular(
            "compressed denominator condition number exceeds cutoff"
        )
    return compress(model, p) @ np.linalg.inv(sq)


def compress_symbol(model: QuotientModel, symbol) -> np.ndarray:
    if isinstance(symbol, RationalSymbol):
        return compress_rational(model, symbol.p, symbol.q)
    return compress(model, symbol)


# ---------------------------------------------------------------------
# commutators, Schatten norms, permissive transforms
# ---------------------------------------------------------------------

def cross_commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[A, B*] = A B* - B* A."""
    bstar = np.asarray(b, dtype=complex).conj().T
    a = np.asarray(a, dtype=complex)
    return a @ bstar - bstar @ a


def schatten_norm(x: np.ndarray, p: float) -> float:
    """Schatten p-norm via singular values; p may be inf, must be >= 1."""
    if p < 1:
        raise ValidationError(f"Schatten norm needs p >= 1, got {p}")
    x = np.asarray(x, dtype=complex)
    if min(x.shape) == 0:
        return 0.0
    sv = np.linalg.svd(x, compute_uv=False)
    if np.isinf(p):
        return float(sv[0])
    return float(np.sum(sv**p) ** (1.0 / p))


def permissive_transform(
    mats,
    c: float,
    shift,
    dom: DomainSpec,
    *,
    boundary_tol: float = 1e-9,
    seed: int = 0,
) -> list[np.ndarray]:
    """Affine reparametrization T -> c T + shift of a commuting tuple.

    Permissive means the transformed joint eigenvalues stay in the closed
    domain; otherwise :class:`NotPermissive` is raised.
    """
    if c <= 0:
        raise ValidationError("scale c must be positive")
    mats = [np.asarray(m, dtype=complex) for m in mats]
    shift = np.asarray(shift, dtype=complex).reshape(-1)
    if shift.size != len(mats):
        raise ValidationError("shift length must match the tuple")
    eye = np.eye(mats[0].shape[0], dtype=complex)
    out = [c * m + s * eye for m, s in zip(mats, shift)]
    for mu in koszul.joint_eigenvalues(out, seed=seed):
        if spectral_norm(dom, mu) > 1.0 + boundary_tol:
            raise NotPermissive(
                f"transformed joint eigenvalue leaves the closed domain "
                f"(spectral norm {spectral_norm(dom, mu):.6f})"
            )
    return out


# ---------------------------------------------------------------------
# essential-normality profiles
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileRow:
    domain: str
    lam: float
    max_degree: int
    family: str
    symbol_i: str
    symbol_j: str
    p: float
    schatten_full: float
    schatten_windowed: float
    dim_quotient: int


def _symbol_degree(symbol) -> int:
    return symbol.degree()


def windowed_submatrix(
    mat: np.ndarray, labels: np.ndarray, max_label: int
) -> np.ndarray:
    keep = np.flatnonzero(labels <= max_label)
    return mat[np.ix_(keep, keep)]


def essential_normality_profile(
    dom: DomainSpec,
    lam: float,
    generators,
    symbols,
    p_values,
    degree_list,
    *,
    family: str = "symbols",
    window: int | None = None,
    cache_dir: str | None = None,
) -> list[ProfileRow]:
    """Schatten norms of cross-commutators [S_i, S_j*] over a ladder of
    truncation degrees.

    For each D the windowed value restricts the commutator to quotient basis
    vectors of degree <= D - w, with w defaulting to one more than the top
    symbol degree; that discards rows and columns polluted by the truncation
    edge.
    """
    symbols = list(symbols)
    if not symbols:
        raise ValidationError("need at least one symbol")
    w = window if window is not None else max(_symbol_degree(s) for s in symbols) + 1
    rows: list[ProfileRow] = []
    for D in degree_list:
        basis = cached_truncated_basis(dom, lam, D, cache_dir)
        model = (
            quotient_model(basis, generators)
            if generators
            else whole_space_model(basis)
        )
        compressed = [compress_symbol(model, s) for s in symbols]
        labels = model.degree_labels
        for i, j in itertools.combinations_with_replacement(range(len(symbols)), 2):
            comm = cross_commutator(compressed[i], compressed[j])
            windowed = windowed_submatrix(comm, labels, D - w)
            for p in p_values:
                rows.append(
                    ProfileRow(
                        dom.label(),
                        lam,
                        D,
                        family,
                        symbols[i].label(),
                        symbols[j].label(),
                        float(p),
                        schatten_norm(comm, p),
                        schatten_norm(windowed, p),
                        model.dim_quotient,
                    )
                )
    return rows
