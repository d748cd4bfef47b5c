"""Functional calculus for commuting tuples with interior joint spectrum.

Two routes to f(T) are implemented and played against each other:

* direct polynomial evaluation, summed degree by degree, and
* the boundary integral  f(T) = sum_nodes weight f(node) Delta(T, node)^{-n/r}
  over a quadrature of the normalized Shilov measure.

On top of that sit principal powers Delta(T, w)^{-lam} (closed forms for
ball and polydisc, a degree-block series for the matrix ball) and Moebius
transformations of tuples through their rational component symbols.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import ndtri
from scipy.stats import qmc

from . import koszul
from .domains import (
    DomainSpec,
    as_matrix,
    flatten_point,
    generic_poly_terms,
    hermitian_sqrt,
    in_domain,
    spectral_norm,
)
from .errors import (
    BranchCutError,
    PointOutsideDomain,
    QuadratureUnderResolved,
    SeriesDivergence,
    SingularDenominator,
    SpectrumTouchesBoundary,
    ValidationError,
)
from .polynomials import Polynomial, RationalSymbol

BOUNDARY_TOL = 1e-9
SERIES_TERM_TOL = 1e-14
SERIES_MAX_DEGREE = 400
DENOM_SPECTRUM_MARGIN = 1e-6
SPHERE_BASE_NODES = 1000
_CHUNK = 8192


# ---------------------------------------------------------------------
# quadrature of the normalized Shilov measure
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class ShilovQuadrature:
    """Nodes (rows, flattened points) and probability weights."""

    dom: DomainSpec
    level: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]


def shilov_quadrature(dom: DomainSpec, level: int) -> ShilovQuadrature:
    """Quadrature adapted to the Shilov boundary of the domain.

    circle (disc): 2^level equispaced points, exact for trigonometric
    polynomials of degree < 2^level; torus (polydisc): the product rule;
    sphere (ball, n >= 2): 4^level * 1000 equal-weight low-discrepancy
    nodes.  The matrix ball is not supported here.
    """
    if level < 1:
        raise ValidationError("level must be at least 1")
    if dom.kind == "matrixball":
        raise ValidationError(
            "no Shilov quadrature for the matrix ball; use the series calculus"
        )
    if dom.kind == "polydisc" or (dom.kind == "ball" and dom.dim == 1):
        per_axis = 2**level
        if per_axis ** dom.dim > 2**24:
            raise ValidationError("torus rule too large at this level")
        angles = 2.0 * np.pi * np.arange(per_axis) / per_axis
        axes = np.exp(1j * angles)
        if dom.dim == 1:
            nodes = axes[:, None]
        else:
            grids = np.meshgrid(*([axes] * dom.dim), indexing="ij")
            nodes = np.column_stack([g.reshape(-1) for g in grids])
        weights = np.full(nodes.shape[0], 1.0 / nodes.shape[0])
        return ShilovQuadrature(dom, level, nodes, weights)
    count = (4**level) * SPHERE_BASE_NODES
    if count > 5_000_000:
        raise ValidationError("sphere rule too large at this level")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sampler = qmc.Sobol(d=2 * dom.dim, scramble=False)
        sampler.fast_forward(1)
        u = sampler.random(count)
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    gauss = ndtri(u)
    norms = np.linalg.norm(gauss, axis=1)
    # the all-0.5 low-discrepancy point maps to the origin; pin it to a axis
    degenerate = norms < 1e-300
    gauss[degenerate, 0] = 1.0
    norms[degenerate] = 1.0
    gauss /= norms[:, None]
    nodes = gauss[:, 0::2] + 1j * gauss[:, 1::2]
    weights = np.full(count, 1.0 / count)
    return ShilovQuadrature(dom, level, nodes, weights)


# ---------------------------------------------------------------------
# principal matrix powers
# ---------------------------------------------------------------------

def matrix_power_principal(a: np.ndarray, mu: float) -> np.ndarray:
    """a^mu through the principal branch.

    Integer exponents use solves/products; fractional exponents go through
    the Schur-based algorithm after checking that no eigenvalue touches the
    closed negative real axis.
    """
    a = np.asarray(a, dtype=complex)
    if abs(mu - round(mu)) <= 1e-12:
        k = round(mu)
        if k >= 0:
            return np.linalg.matrix_power(a, k)
        return np.linalg.matrix_power(np.linalg.inv(a), -k)
    eigs = np.linalg.eigvals(a)
    if np.any((eigs.real <= 0) & (np.abs(eigs.imag) <= 1e-14 * np.abs(eigs))):
        raise BranchCutError("matrix has an eigenvalue on the negative real axis")
    return scipy.linalg.fractional_matrix_power(a, mu)


def _tuple_and_radius(mats, dom: DomainSpec, seed: int = 0):
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if len(mats) != dom.dim:
        raise ValidationError(
            f"tuple has {len(mats)} components, {dom.label()} needs {dom.dim}"
        )
    eigs = koszul.joint_eigenvalues(mats, seed=seed)
    radius = max((spectral_norm(dom, mu) for mu in eigs), default=0.0)
    return mats, eigs, radius


def _require_interior(radius: float) -> None:
    if radius >= 1.0 - BOUNDARY_TOL:
        raise SpectrumTouchesBoundary(
            f"joint spectral radius {radius:.8f} is not strictly interior"
        )


def delta_power_tuple(mats, w, lam: float, dom: DomainSpec, seed: int = 0) -> np.ndarray:
    """Delta(T, w)^{-lam} for a commuting tuple with interior spectrum.

    ball: (I - sum conj(w_i) T_i)^{-lam}; polydisc: the factorwise product;
    matrixball: the kernel series summed over total-degree blocks with the
    power recurrence transported to matrix arguments.
    """
    mats, _, radius = _tuple_and_radius(mats, dom, seed)
    _require_interior(radius)
    wf = flatten_point(dom, w)
    if spectral_norm(dom, wf) > 1.0 + BOUNDARY_TOL:
        raise PointOutsideDomain("second argument must lie in the closed domain")
    h = mats[0].shape[0]
    eye = np.eye(h, dtype=complex)
    if dom.kind == "ball":
        base = eye - sum(np.conj(wi) * t for wi, t in zip(wf, mats))
        return matrix_power_principal(base, -lam)
    if dom.kind == "polydisc":
        out = eye.copy()
        for wi, t in zip(wf, mats):
            out = out @ matrix_power_principal(eye - np.conj(wi) * t, -lam)
        return out
    return _delta_power_series(mats, wf, lam, dom)


def _delta_homogeneous_parts(dom: DomainSpec, wf: np.ndarray) -> dict[int, Polynomial]:
    """z-homogeneous parts of Delta(., w) with w fixed, as polynomials in z."""
    parts: dict[int, dict] = {}
    for (alpha, beta), coeff in generic_poly_terms(dom).items():
        d = sum(alpha)
        if d == 0:
            continue
        value = coeff
        for wi, bi in zip(wf, beta):
            if bi:
                value *= np.conj(wi) ** bi
        bucket = parts.setdefault(d, {})
        bucket[alpha] = bucket.get(alpha, 0.0) + value
    return {d: Polynomial(dom.dim, terms) for d, terms in sorted(parts.items())}


def _delta_power_series(
    mats: list[np.ndarray], wf: np.ndarray, lam: float, dom: DomainSpec
) -> np.ndarray:
    """Sum of the degree blocks of Delta(T, w)^{-lam}.

    The scalar power recurrence survives evaluation at a commuting tuple
    because polynomial evaluation is an algebra map:
    d F_d = sum_j ((mu+1) j - d) P_j(T) F_{d-j} with mu = -lam.
    """
    h = mats[0].shape[0]
    eye = np.eye(h, dtype=complex)
    hom = {d: p.eval_tuple(mats) for d, p in _delta_homogeneous_parts(dom, wf).items()}
    mu = -lam
    blocks = [eye]
    total = eye.copy()
    small_streak = 0
    for d in range(1, SERIES_MAX_DEGREE + 1):
        acc = np.zeros((h, h), dtype=complex)
        for j, pj in hom.items():
            if j <= d:
                acc += (((mu + 1.0) * j - d) / d) * (pj @ blocks[d - j])
        blocks.append(acc)
        total += acc
        term = np.linalg.norm(acc, 2)
        if term <= SERIES_TERM_TOL * max(1.0, np.linalg.norm(total, 2)):
            small_streak += 1
            if small_streak >= 3:
                return total
        else:
            small_streak = 0
        if term > 1e9 * max(1.0, np.linalg.norm(total, 2)):
            raise SeriesDivergence(
                f"degree-{d} block has norm {term:.2e}; series is not contracting"
            )
    raise SeriesDivergence(
        f"series did not contract within {SERIES_MAX_DEGREE} degree blocks"
    )


# ---------------------------------------------------------------------
# polynomial calculus: direct and integral
# ---------------------------------------------------------------------

def series_calculus(mats, f: Polynomial) -> np.ndarray:
    """f(T) by summing homogeneous parts in increasing degree."""
    mats = [np.asarray(m, dtype=complex) for m in mats]
    h = mats[0].shape[0]
    out = np.zeros((h, h), dtype=complex)
    for _, part in sorted(f.homogeneous_parts().items()):
        out += part.eval_tuple(mats)
    return out


def _eval_poly_batch(f: Polynomial, nodes: np.ndarray) -> np.ndarray:
    out = np.zeros(nodes.shape[0], dtype=complex)
    for alpha, c in f.terms.items():
        term = np.full(nodes.shape[0], c, dtype=complex)
        for i, a in enumerate(alpha):
            if a:
                term *= nodes[:, i] ** a
        out += term
    return out


def _szegoe_batch(dom: DomainSpec, mats: list[np.ndarray], nodes: np.ndarray) -> np.ndarray:
    """Delta(T, node)^{-n/r} for a batch of boundary nodes, shape (N, h, h).

    The Hardy exponent n/r is an integer for every quadrature-supported
    family, so only batched inverses and products are needed.
    """
    exponent = round(dom.hardy_weight)
    h = mats[0].shape[0]
    eye = np.eye(h, dtype=complex)
    if dom.kind == "ball":
        base = eye[None, :, :] - np.einsum(
            "nk,kij->nij", np.conj(nodes), np.stack(mats)
        )
        inv = np.linalg.inv(base)
        out = inv.copy()
        for _ in range(exponent - 1):
            out = out @ inv
        return out
    out = np.broadcast_to(eye, (nodes.shape[0], h, h)).copy()
    for k, t in enumerate(mats):
        base = eye[None, :, :] - np.conj(nodes[:, k])[:, None, None] * t[None, :, :]
        out = out @ np.linalg.inv(base)
    return out


@dataclass(frozen=True)
class CalculusResult:
    value: np.ndarray
    est_error: float
    node_count: int
    level: int


def integral_calculus(
    mats,
    f: Polynomial,
    quad: ShilovQuadrature,
    dom: DomainSpec,
    tol: float | None = None,
    seed: int = 0,
) -> CalculusResult:
    """Boundary-integral value of f(T) with a self-reported error estimate.

    The estimate compares against the same rule at half resolution (level-1
    rule for circle and torus, first half of the node stream for the
    sphere).  When ``tol`` is given and the estimate exceeds it,
    :class:`QuadratureUnderResolved` is raised.  Chunked accumulation runs
    in a fixed order, so results are reproducible bit for bit.
    """
    mats, _, radius = _tuple_and_radius(mats, dom, seed)
    _require_interior(radius)
    if quad.dom != dom:
        raise ValidationError("quadrature was built for a different domain")
    full = _quadrature_sum(dom, mats, f, quad.nodes, quad.weights)
    if dom.kind == "ball" and dom.dim >= 2:
        half_n = quad.node_count // 2
        half = _quadrature_sum(
            dom, mats, f, quad.nodes[:half_n], np.full(half_n, 1.0 / half_n)
        )
    elif quad.level >= 1:
        lower = shilov_quadrature(dom, quad.level - 1)
        half = _quadrature_sum(dom, mats, f, lower.nodes, lower.weights)
    else:
        half = None
    if half is None:
        est = math.nan
    else:
        est = float(
            np.linalg.norm(full - half, 2) / max(1.0, np.linalg.norm(full, 2))
        )
    if tol is not None and not (est <= tol):
        raise QuadratureUnderResolved(
            f"error estimate {est:.3e} exceeds requested tolerance {tol:.1e}"
        )
    return CalculusResult(full, est, quad.node_count, quad.level)


def _quadrature_sum(
    dom: DomainSpec,
    mats: list[np.ndarray],
    f: Polynomial,
    nodes: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    h = mats[0].shape[0]
    chunk_sums = []
    for start in range(0, nodes.shape[0], _CHUNK):
        sl = slice(start, min(start + _CHUNK, nodes.shape[0]))
        kernel = _szegoe_batch(dom, mats, nodes[sl])
        coeff = weights[sl] * _eval_poly_batch(f, nodes[sl])
        chunk_sums.append(np.einsum("n,nij->ij", coeff, kernel))
    total = np.zeros((h, h), dtype=complex)
    for part in chunk_sums:
        total += part
    return total


# ---------------------------------------------------------------------
# Moebius transformations of tuples
# ---------------------------------------------------------------------

def mobius_rational_components(dom: DomainSpec, z0) -> list[RationalSymbol]:
    """Components of g_{z0} as rational symbols p_i / q_i.

    ball: shared denominator 1 + <w, z0>; polydisc: factorwise
    (w_i + z0_i)/(1 + conj(z0_i) w_i); matrixball: the adjugate of
    I + w z0* over det(I + w z0*), sandwiched between the Bergman square
    roots.
    """
    z0f = flatten_point(dom, z0)
    if not in_domain(dom, z0f):
        raise PointOutsideDomain("moebius base point must be interior")
    n = dom.dim
    coords = [Polynomial.coordinate(i, n) for i in range(n)]

    if dom.kind == "polydisc":
        out = []
        for i in range(n):
            p = coords[i] + Polynomial.constant(n, z0f[i])
            q = Polynomial.constant(n, 1.0) + np.conj(z0f[i]) * coords[i]
            out.append(RationalSymbol(p, q, name=f"mobius{i + 1}"))
        return out

    if dom.kind == "ball":
        q = Polynomial.constant(n, 1.0)
        for j in range(n):
            q = q + np.conj(z0f[j]) * coords[j]
        s = math.sqrt(max(0.0, 1.0 - float(np.vdot(z0f, z0f).real)))
        z0m = z0f.reshape(1, n)
        root = hermitian_sqrt(
            np.eye(n, dtype=complex) - z0m.conj().T @ z0m
        )
        out = []
        for i in range(n):
            p = z0f[i] * q
            for j in range(n):
                p = p + s * root[j, i] * coords[j]
            out.append(RationalSymbol(p, q, name=f"mobius{i + 1}"))
        return out

    r, c = dom.rows, dom.cols
    z0m = as_matrix(dom, z0f)
    left_root = hermitian_sqrt(np.eye(r, dtype=complex) - z0m @ z0m.conj().T)
    right_root = hermitian_sqrt(np.eye(c, dtype=complex) - z0m.conj().T @ z0m)
    wpoly = [[coords[k * c + j] for j in range(c)] for k in range(r)]
    amat = [
        [
            Polynomial.constant(n, 1.0 if k == l else 0.0)
            + sum(
                (np.conj(z0m[l, j]) * wpoly[k][j] for j in range(c)),
                Polynomial.zero(n),
            )
            for l in range(r)
        ]
        for k in range(r)
    ]
    q = _poly_det(amat)
    adj = _poly_adjugate(amat)
    # numeric-left, symbolic-middle, numeric-right product, entry by entry
    middle = [
        [
            sum((adj[k][m] * wpoly[m][j] for m in range(r)), Polynomial.zero(n))
            for j in range(c)
        ]
        for k in range(r)
    ]
    out = []
    for k in range(r):
        for l in range(c):
            p = z0m[k, l] * q
            for a in range(r):
                for b in range(c):
                    weight = left_root[k, a] * right_root[b, l]
                    if weight != 0:
                        p = p + weight * middle[a][b]
            out.append(RationalSymbol(p, q, name=f"mobius{k + 1}{l + 1}"))
    return out


def _poly_det(mat: list[list[Polynomial]]) -> Polynomial:
    import itertools as _it

    r = len(mat)
    n = mat[0][0].nvars
    total = Polynomial.zero(n)
    for perm in _it.permutations(range(r)):
        sign = 1
        for i in range(r):
            for j in range(i + 1, r):
                if perm[i] > perm[j]:
                    sign = -sign
        prod = Polynomial.constant(n, float(sign))
        for i in range(r):
            prod = prod * mat[i][perm[i]]
        total = total + prod
    return total


def _poly_adjugate(mat: list[list[Polynomial]]) -> list[list[Polynomial]]:
    r = len(mat)
    n = mat[0][0].nvars
    if r == 1:
        return [[Polynomial.constant(n, 1.0)]]
    adj = [[Polynomial.zero(n) for _ in range(r)] for _ in range(r)]
    for i in range(r):
        for j in range(r):
            minor = [
                [mat[a][b] for b in range(r) if b != j]
                for a in range(r)
                if a != i
            ]
            cof = _poly_det(minor)
            if (i + j) % 2:
                cof = -1.0 * cof
            adj[j][i] = cof
    return adj


def mobius_of_tuple(mats, z0, dom: DomainSpec, seed: int = 0) -> list[np.ndarray]:
    """Apply g_{z0} to a commuting tuple through its rational components.

    Denominators are checked on the joint spectrum first; a modulus below
    ``DENOM_SPECTRUM_MARGIN`` raises :class:`SingularDenominator`.
    """
    mats, eigs, radius = _tuple_and_radius(mats, dom, seed)
    _require_interior(radius)
    components = mobius_rational_components(dom, z0)
    out = []
    for sym in components:
        margin = min(
            (abs(sym.q.eval_point(mu)) for mu in eigs), default=1.0
        )
        if margin < DENOM_SPECTRUM_MARGIN:
            raise SingularDenominator(
                f"denominator of {sym.name} reaches modulus {margin:.2e} on the spectrum"
            )
        qt = sym.q.eval_tuple(mats)
        pt = sym.p.eval_tuple(mats)
        out.append(np.linalg.solve(qt.T, pt.T).T)  # p(T) q(T)^{-1}
    return out


def composition_residual(mats, z0, dom: DomainSpec, seed: int = 0) -> float:
    """Largest component deviation of g_{-z0}(g_{z0}(T)) from T."""
    mats = [np.asarray(m, dtype=complex) for m in mats]
    forward = mobius_of_tuple(mats, z0, dom, seed=seed)
    back = mobius_of_tuple(forward, -np.asarray(z0, dtype=complex), dom, seed=seed)
    return max(
        float(np.linalg.norm(a - b, 2)) for a, b in zip(back, mats)
    )
