"""Reproducing-kernel expansion of Delta(z, w)^{-lambda} by total degree.

The generic norm Delta is a bi-polynomial with equal degree in z and
conj(w), so the kernel expands into degree blocks

    Delta(z, w)^{-lam} = sum_d  m_d(z)^T C_d conj(m_d(w)),

with m_d the graded-lex monomial vector of degree d.  Blocks are produced
by the power recurrence mu P' Q = Q' P (Euler derivative on the z-grading),
which needs only the finitely many blocks of Delta itself.  For continuous
Wallach weights C_d is positive definite; the Gram matrix of monomials is
its blockwise inverse, and a triangular Cholesky change of basis yields the
orthonormal graded basis used by the operator layer.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .domains import DomainSpec, flatten_point, generic_poly, generic_poly_terms
from .errors import (
    BranchCutError,
    NotAModuleWeight,
    NumericallySingular,
    ValidationError,
)
from .polynomials import MultiIndex, Polynomial
from .wallach import classify_weight, rising_factorial

MATRIXBALL_DEGREE_CEILING = 24
CACHE_FORMAT_VERSION = 1
CACHE_ENV_VAR = "SYMDOM_CACHE_DIR"


# ---------------------------------------------------------------------
# graded-lex monomial bookkeeping
# ---------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def multi_indices(n: int, d: int) -> tuple[MultiIndex, ...]:
    """Exponent tuples of total degree d in n variables, lex-descending.

    The ordering is the within-degree part of graded lex: (d,0,...) first,
    (0,...,0,d) last.
    """
    if n < 1 or d < 0:
        raise ValidationError("need n >= 1 and d >= 0")
    if n == 1:
        return ((d,),)
    out: list[MultiIndex] = []
    for first in range(d, -1, -1):
        out.extend((first,) + rest for rest in multi_indices(n - 1, d - first))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _position(n: int, d: int) -> dict[MultiIndex, int]:
    return {alpha: i for i, alpha in enumerate(multi_indices(n, d))}


@functools.lru_cache(maxsize=None)
def _shift_positions(n: int, d: int, gamma: MultiIndex) -> np.ndarray:
    """Positions of alpha + gamma inside degree d + |gamma|, for alpha of
    degree d."""
    target = _position(n, d + sum(gamma))
    return np.array(
        [target[tuple(a + g for a, g in zip(alpha, gamma))] for alpha in multi_indices(n, d)],
        dtype=np.intp,
    )


# ---------------------------------------------------------------------
# series blocks
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class SeriesBlock:
    """Degree-d coefficient block C_d of the kernel expansion (real, since
    Delta has real coefficients and the weight is real)."""

    degree: int
    coeffs: np.ndarray


def _delta_blocks(dom: DomainSpec) -> dict[int, list[tuple[MultiIndex, MultiIndex, float]]]:
    """Sparse per-degree terms of Delta; degree 0 (the constant 1) omitted."""
    by_degree: dict[int, list[tuple[MultiIndex, MultiIndex, float]]] = {}
    for (alpha, beta), coeff in generic_poly_terms(dom).items():
        d = sum(alpha)
        if d != sum(beta):
            raise AssertionError("generic polynomial lost its circular grading")
        if d == 0:
            continue
        by_degree.setdefault(d, []).append((alpha, beta, float(coeff)))
    return by_degree


def _check_degree(dom: DomainSpec, max_degree: int, unsafe_large_degree: bool) -> None:
    if max_degree < 0:
        raise ValidationError("max_degree must be non-negative")
    if (
        dom.kind == "matrixball"
        and max_degree > MATRIXBALL_DEGREE_CEILING
        and not unsafe_large_degree
    ):
        raise ValidationError(
            f"matrixball degree {max_degree} exceeds ceiling "
            f"{MATRIXBALL_DEGREE_CEILING}; block sizes grow like d^(dim-1) "
            "(pass unsafe_large_degree=True to override)"
        )


@functools.lru_cache(maxsize=8)
def _kernel_series_cached(dom: DomainSpec, lam: float, max_degree: int) -> tuple[SeriesBlock, ...]:
    n = dom.dim
    delta = _delta_blocks(dom)
    mu = -lam
    blocks: list[np.ndarray] = [np.ones((1, 1))]
    for d in range(1, max_degree + 1):
        size = len(multi_indices(n, d))
        acc = np.zeros((size, size))
        for j, terms in delta.items():
            if j > d:
                continue
            prev = blocks[d - j]
            factor = ((mu + 1.0) * j - d) / d
            for alpha, beta, coeff in terms:
                rmap = _shift_positions(n, d - j, alpha)
                cmap = _shift_positions(n, d - j, beta)
                acc[np.ix_(rmap, cmap)] += (factor * coeff) * prev
        blocks.append(acc)
    out = []
    for d, mat in enumerate(blocks):
        mat = (mat + mat.T) / 2.0  # Hermitian (real symmetric) by circularity
        mat.setflags(write=False)
        out.append(SeriesBlock(d, mat))
    return tuple(out)


def kernel_series(
    dom: DomainSpec, lam: float, max_degree: int, *, unsafe_large_degree: bool = False
) -> tuple[SeriesBlock, ...]:
    """Blocks C_0 .. C_{max_degree} of Delta^{-lam}; any real weight."""
    _check_degree(dom, max_degree, unsafe_large_degree)
    return _kernel_series_cached(dom, float(lam), int(max_degree))


def series_partial_sum(
    dom: DomainSpec, lam: float, z, w, max_degree: int, *, unsafe_large_degree: bool = False
) -> complex:
    """Evaluate sum_{d <= max_degree} m_d(z)^T C_d conj(m_d(w))."""
    blocks = kernel_series(dom, lam, max_degree, unsafe_large_degree=unsafe_large_degree)
    zf = flatten_point(dom, z)
    wf = flatten_point(dom, w)
    total = 0.0 + 0.0j
    for block in blocks:
        mz = _monomial_vector(zf, block.degree)
        mw = _monomial_vector(wf, block.degree)
        total += mz @ block.coeffs @ np.conj(mw)
    return complex(total)


@functools.lru_cache(maxsize=None)
def _alpha_array(n: int, d: int) -> np.ndarray:
    arr = np.array(multi_indices(n, d), dtype=np.int64).reshape(-1, n)
    arr.setflags(write=False)
    return arr


def _monomial_vector(zf: np.ndarray, d: int) -> np.ndarray:
    return np.prod(zf[None, :] ** _alpha_array(zf.size, d), axis=1)


# ---------------------------------------------------------------------
# Gram blocks and closed forms
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class GramBlock:
    """Gram matrix of degree-d monomials, G_d[alpha, beta] = <z^alpha, z^beta>."""

    degree: int
    gram: np.ndarray


def _require_module_weight(dom: DomainSpec, lam: float) -> None:
    verdict = classify_weight(lam, dom)
    if not verdict.is_module_weight:
        raise NotAModuleWeight(
            f"weight {lam} is {verdict.kind.value} for {dom.label()}; "
            "monomial Gram matrices need a continuous Wallach weight"
        )


def gram_blocks(
    dom: DomainSpec, lam: float, max_degree: int, *, unsafe_large_degree: bool = False
) -> tuple[GramBlock, ...]:
    """Blockwise inverse of the kernel coefficients, G_d = C_d^{-1}."""
    _require_module_weight(dom, lam)
    series = kernel_series(dom, lam, max_degree, unsafe_large_degree=unsafe_large_degree)
    out = []
    for block in series:
        try:
            cho = scipy.linalg.cho_factor(block.coeffs, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericallySingular(
                f"degree-{block.degree} coefficient block is not positive definite"
            ) from exc
        gram = scipy.linalg.cho_solve(cho, np.eye(block.coeffs.shape[0]))
        gram = (gram + gram.T) / 2.0
        gram.setflags(write=False)
        out.append(GramBlock(block.degree, gram))
    return tuple(out)


def gram_block(dom: DomainSpec, lam: float, degree: int) -> GramBlock:
    return gram_blocks(dom, lam, degree)[degree]


def closed_form_norm(dom: DomainSpec, lam: float, alpha) -> float:
    """Closed-form squared norm of the monomial z^alpha.

    ball: alpha! / (lam)_|alpha|;  polydisc: prod_i alpha_i! / (lam)_{alpha_i}.
    No closed form is exposed for the matrix ball.
    """
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha) or len(alpha) != dom.dim:
        raise ValidationError(f"bad multi-index {alpha} for {dom.label()}")
    _require_module_weight(dom, lam)
    if dom.kind == "ball":
        num = math.prod(math.factorial(a) for a in alpha)
        return num / rising_factorial(lam, sum(alpha))
    if dom.kind == "polydisc":
        return math.prod(
            math.factorial(a) / rising_factorial(lam, a) for a in alpha
        )
    raise ValidationError("no closed-form monomial norm for the matrix ball")


def kernel_eval(dom: DomainSpec, lam: float, z, w) -> complex:
    """Delta(z, w)^{-lam} through the principal branch.

    Raises :class:`BranchCutError` when Delta vanishes, or (for non-integer
    weights) when Delta lands on the closed negative real axis.
    """
    val = generic_poly(dom, z, w)
    if val == 0:
        raise BranchCutError("Delta(z, w) = 0, no principal power")
    if abs(lam - round(lam)) <= 1e-12:
        return complex(val ** (-round(lam)))
    if val.real <= 0 and abs(val.imag) <= 1e-15 * abs(val):
        raise BranchCutError(
            f"Delta(z, w) = {val:.6g} lies on the negative real axis"
        )
    return complex(np.exp(-lam * np.log(val)))


# ---------------------------------------------------------------------
# orthonormal graded basis
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedBasis:
    """Orthonormal basis of polynomials of degree <= D for weight lam.

    ``change[d]`` is the upper-triangular matrix whose column k gives the
    monomial coefficients (graded-lex order) of the k-th degree-d basis
    element.  Triangularity pins the basis down uniquely given the monomial
    order, so serialized bases reload bit-identically.
    """

    dom: DomainSpec
    lam: float
    max_degree: int
    change: tuple[np.ndarray, ...]

    @property
    def degree_sizes(self) -> list[int]:
        return [c.shape[0] for c in self.change]

    @property
    def dim(self) -> int:
        return sum(self.degree_sizes)

    def offset(self, d: int) -> int:
        return sum(self.degree_sizes[:d])

    def block_slice(self, d: int) -> slice:
        off = self.offset(d)
        return slice(off, off + self.degree_sizes[d])

    def degree_labels(self) -> np.ndarray:
        return np.concatenate(
            [np.full(size, d, dtype=int) for d, size in enumerate(self.degree_sizes)]
        )

    # -- coordinate transport -----------------------------------------
    def to_coords(self, poly: Polynomial) -> np.ndarray:
        """Coordinates of a polynomial in the orthonormal basis."""
        if poly.nvars != self.dom.dim:
            raise ValidationError(
                f"polynomial in {poly.nvars} variables on {self.dom.label()}"
            )
        if poly.degree() > self.max_degree:
            raise ValidationError(
                f"degree {poly.degree()} exceeds truncation {self.max_degree}"
            )
        out = np.zeros(self.dim, dtype=complex)
        for d, part in poly.homogeneous_parts().items():
            c = np.zeros(self.degree_sizes[d], dtype=complex)
            pos = _position(self.dom.dim, d)
            for alpha, coeff in part.terms.items():
                c[pos[alpha]] = coeff
            out[self.block_slice(d)] = scipy.linalg.solve_triangular(
                self.change[d], c, lower=False
            )
        return out

    def from_coords(self, vec: np.ndarray) -> Polynomial:
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if vec.size != self.dim:
            raise ValidationError(f"vector of size {vec.size}, expected {self.dim}")
        terms: dict[MultiIndex, complex] = {}
        for d in range(self.max_degree + 1):
            c = self.change[d] @ vec[self.block_slice(d)]
            for alpha, coeff in zip(multi_indices(self.dom.dim, d), c):
                if coeff != 0:
                    terms[alpha] = terms.get(alpha, 0.0) + coeff
        return Polynomial(self.dom.dim, terms)

    def eval_at(self, z) -> np.ndarray:
        """Values of every basis element at the point z."""
        zf = flatten_point(self.dom, z)
        out = np.empty(self.dim, dtype=complex)
        for d in range(self.max_degree + 1):
            out[self.block_slice(d)] = self.change[d].T @ _monomial_vector(zf, d)
        return out

    def kernel_partial_sum(self, z, w) -> complex:
        """sum_k e_k(z) conj(e_k(w)); converges to kernel_eval inside."""
        return complex(self.eval_at(z) @ np.conj(self.eval_at(w)))

    def monomial_norm(self, alpha) -> float:
        """Squared norm of z^alpha read off the Gram data used to build the
        basis (inverse change of basis)."""
        alpha = tuple(int(a) for a in alpha)
        d = sum(alpha)
        pos = _position(self.dom.dim, d)[alpha]
        # row of L^{-1}: solve L x = e_pos, norm^2 = |x|^2 since basis is ON
        c = np.zeros(self.degree_sizes[d])
        c[pos] = 1.0
        x = scipy.linalg.solve_triangular(self.change[d], c, lower=False)
        return float(x @ x)


@functools.lru_cache(maxsize=8)
def _truncated_basis_cached(dom: DomainSpec, lam: float, max_degree: int) -> TruncatedBasis:
    grams = gram_blocks(dom, lam, max_degree)
    change = []
    for block in grams:
        try:
            lower = np.linalg.cholesky(block.gram)
        except np.linalg.LinAlgError as exc:
            raise NumericallySingular(
                f"degree-{block.degree} Gram block is not positive definite"
            ) from exc
        mat = scipy.linalg.solve_triangular(
            lower.T, np.eye(lower.shape[0]), lower=False
        )
        mat.setflags(write=False)
        change.append(mat)
    return TruncatedBasis(dom, lam, max_degree, tuple(change))


def truncated_basis(
    dom: DomainSpec, lam: float, max_degree: int, *, unsafe_large_degree: bool = False
) -> TruncatedBasis:
    _check_degree(dom, max_degree, unsafe_large_degree)
    return _truncated_basis_cached(dom, float(lam), int(max_degree))


# ---------------------------------------------------------------------
# on-disk cache
# ---------------------------------------------------------------------

def cache_key(dom: DomainSpec, lam: float, max_degree: int) -> str:
    payload = json.dumps(
        {"domain": dom.to_json(), "lambda": float(lam), "D": int(max_degree),
         "ordering": "grlex", "format_version": CACHE_FORMAT_VERSION},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def resolve_cache_dir(cache_dir: str | None) -> str | None:
    if cache_dir is not None:
        return cache_dir
    return os.environ.get(CACHE_ENV_VAR)


def save_basis(basis: TruncatedBasis, cache_dir: str) -> str:
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(
        cache_dir, f"basis-{cache_key(basis.dom, basis.lam, basis.max_degree)}.npz"
    )
    header = json.dumps(
        {
            "format_version": CACHE_FORMAT_VERSION,
            "domain": basis.dom.to_json(),
            "lambda": basis.lam,
            "D": basis.max_degree,
            "ordering": "grlex",
        },
        sort_keys=True,
    )
    arrays = {f"change_{d}": c for d, c in enumerate(basis.change)}
    np.savez(path, header=np.array(header), **arrays)
    return path


def load_basis(dom: DomainSpec, lam: float, max_degree: int, cache_dir: str) -> TruncatedBasis | None:
    path = os.path.join(cache_dir, f"basis-{cache_key(dom, lam, max_degree)}.npz")
    if not os.path.exists(path):
        return None
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format_version") != CACHE_FORMAT_VERSION:
            return None
        if header.get("domain") != dom.to_json() or header.get("D") != max_degree:
            raise ValidationError(f"cache file {path} does not match its key")
        if header.get("lambda") != float(lam):
            raise ValidationError(f"cache file {path} does not match its key")
        change = []
        for d in range(max_degree + 1):
            mat = np.array(data[f"change_{d}"])
            mat.setflags(write=False)
            change.append(mat)
    return TruncatedBasis(dom, float(lam), int(max_degree), tuple(change))


def cached_truncated_basis(
    dom: DomainSpec, lam: float, max_degree: int, cache_dir: str | None = None
) -> TruncatedBasis:
    """Basis with read-through disk caching when a cache dir is configured."""
    directory = resolve_cache_dir(cache_dir)
    if directory is None:
        return truncated_basis(dom, lam, max_degree)
    found = load_basis(dom, lam, max_degree, directory)
    if found is not None:
        return found
    basis = truncated_basis(dom, lam, max_degree)
    save_basis(basis, directory)
    return basis
