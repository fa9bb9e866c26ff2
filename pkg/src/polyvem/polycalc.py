"""Tensor-valued polynomial calculus in scaled monomial bases.

A scaled monomial basis on a d-dimensional domain (a cell, a face of any
codimension, or a vertex) consists of the monomials

    m_alpha(x) = prod_i xi_i(x)^alpha_i,   xi_i(x) = t_i . (x - c) / h,

where c is the domain centroid, h its diameter and t_1..t_d an orthonormal
tangent frame.  Cells use the identity frame (d = n), faces use their tangent
frame, and vertices carry the single constant 1 (d = 0).  Tensor-valued
polynomials store one coefficient array per basis function with s ambient
indices, so contraction with normal vectors and frame changes need no local
to global conversion.

Simplex quadrature uses the Grundmann-Moller family, which is available in
any dimension and any odd exactness degree.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

__all__ = [
    "multi_indices",
    "multi_indices_exact",
    "dim_poly",
    "grundmann_moeller",
    "simplex_quadrature",
    "Quadrature",
    "ScaledMonomialBasis",
    "TensorPoly",
    "mass_matrix",
    "integrate",
    "project_L2",
]


# ---------------------------------------------------------------------------
# multi-index bookkeeping


@lru_cache(maxsize=None)
def multi_indices_exact(d: int, degree: int) -> tuple:
    """All length-d multi-indices with |alpha| == degree, lex descending.

    Lex descending within a degree puts powers of the first variable first:
    (2,0), (1,1), (0,2).  With d == 0 the only index of degree 0 is ().
    """
    if degree < 0:
        return ()
    if d == 0:
        return ((),) if degree == 0 else ()
    out = [
        tuple(a)
        for a in itertools.product(range(degree, -1, -1), repeat=d)
        if sum(a) == degree
    ]
    return tuple(out)


@lru_cache(maxsize=None)
def multi_indices(d: int, degree: int) -> tuple:
    """All length-d multi-indices with |alpha| <= degree in graded lex order."""
    out = []
    for t in range(degree + 1):
        out.extend(multi_indices_exact(d, t))
    return tuple(out)


def dim_poly(d: int, k: int) -> int:
    """Dimension of P_k on a d-dimensional domain; 0 for k < 0."""
    if k < 0:
        return 0
    return math.comb(d + k, d)


# ---------------------------------------------------------------------------
# Grundmann-Moller simplex quadrature


@lru_cache(maxsize=None)
def grundmann_moeller(dim: int, s: int) -> tuple:
    """Rule of exactness degree 2s+1 on the dim-simplex, barycentric form.

    Returns (points, weights) with points of shape (npts, dim+1) in
    barycentric coordinates and raw weights summing to the unit simplex
    volume 1/dim!.
    """
    if dim == 0:
        return np.ones((1, 1)), np.ones(1)
    d = 2 * s + 1
    points = []
    weights = []
    for i in range(s + 1):
        w = (
            (-1) ** i
            * 2.0 ** (-2 * s)
            * float(d + dim - 2 * i) ** d
            / (math.factorial(i) * math.factorial(d + dim - i))
        )
        denom = d + dim - 2 * i
        for beta in itertools.product(range(s - i + 1), repeat=dim + 1):
            if sum(beta) != s - i:
                continue
            points.append([(2 * b + 1) / denom for b in beta])
            weights.append(w)
    return np.array(points), np.array(weights)


def simplex_quadrature(vertices: np.ndarray, degree: int) -> tuple:
    """Physical points and weights integrating P_degree on a simplex.

    ``vertices`` has shape (d+1, n) with d <= n, so lower-dimensional
    simplices embedded in R^n (edges of polygons, triangles bounding
    polyhedra) are supported; weights then carry the d-dimensional measure.
    A single row is a point with weight 1.
    """
    vertices = np.asarray(vertices, dtype=float)
    d = vertices.shape[0] - 1
    if d == 0:
        return vertices.copy(), np.ones(1)
    s = max(0, -(-(degree - 1) // 2))
    bary, wraw = grundmann_moeller(d, s)
    points = bary @ vertices
    edges = vertices[1:] - vertices[0]
    gram = edges @ edges.T
    vol = math.sqrt(abs(np.linalg.det(gram))) / math.factorial(d)
    weights = wraw * (vol / wraw.sum())
    return points, weights


class Quadrature:
    """Plain container for quadrature points and weights on some domain."""

    def __init__(self, points: np.ndarray, weights: np.ndarray, degree: int):
        self.points = points
        self.weights = weights
        self.degree = degree

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Contract point values (npts, ...) with the weights."""
        return np.tensordot(self.weights, values, axes=([0], [0]))


def quadrature_from_fan(fan, degree: int) -> Quadrature:
    """Concatenate simplex rules over a fan decomposition."""
    pts, wts = [], []
    for simplex in fan:
        p, w = simplex_quadrature(simplex, degree)
        pts.append(p)
        wts.append(w)
    return Quadrature(np.vstack(pts), np.concatenate(wts), degree)


# ---------------------------------------------------------------------------
# scaled monomial bases


class ScaledMonomialBasis:
    """Scaled monomials up to a degree cap on a d-dimensional domain.

    Parameters
    ----------
    center : (n,) array, domain centroid.
    h : positive scale (domain diameter; 1 for vertices).
    axes : (d, n) array with orthonormal rows spanning the tangent space.
        Cells pass the identity, vertices an empty (0, n) array.
    degree : maximum total degree held by the basis.

    The monomial list is ordered by total degree, lex descending within a
    degree, so the first dim_poly(d, l) entries span exactly P_l.
    """

    def __init__(self, center, h: float, axes, degree: int):
        self.center = np.asarray(center, dtype=float)
        self.h = float(h)
        self.axes = np.asarray(axes, dtype=float).reshape(-1, self.center.shape[0])
        self.dim = self.axes.shape[0]
        self.ambient = self.center.shape[0]
        self.degree = int(degree)
        self.exponents = multi_indices(self.dim, self.degree)
        self.size = len(self.exponents)
        self._position = {a: i for i, a in enumerate(self.exponents)}
        self._diff = None
        self._restrict_cache = {}

    def __len__(self) -> int:
        return self.size

    def position(self, alpha) -> int:
        return self._position[tuple(alpha)]

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Values of every basis monomial, shape (size, npts)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        xi = (points - self.center) @ self.axes.T / self.h
        npts = points.shape[0]
        if self.dim == 0:
            return np.ones((1, npts))
        # power tables per local coordinate
        pows = [
            np.vander(xi[:, j], self.degree + 1, increasing=True)
            for j in range(self.dim)
        ]
        vals = np.ones((self.size, npts))
        for i, alpha in enumerate(self.exponents):
            for j, a in enumerate(alpha):
                if a:
                    vals[i] *= pows[j][:, a]
        return vals

    @property
    def diff_mats(self):
        """Matrices of d/dxi_j acting on coefficient vectors (unscaled by h)."""
        if self._diff is None:
            mats = []
            for j in range(self.dim):
                D = np.zeros((self.size, self.size))
                for i, alpha in enumerate(self.exponents):
                    if alpha[j] > 0:
                        low = list(alpha)
                        low[j] -= 1
                        D[self._position[tuple(low)], i] = alpha[j]
                mats.append(D)
            self._diff = mats
        return self._diff

    def restriction_matrix(self, other: "ScaledMonomialBasis") -> np.ndarray:
        """Exact change of basis onto a sub-domain basis.

        Returns R with shape (other.size, self.size) such that a polynomial
        sum_a c_a m_a restricted to the affine hull of ``other`` equals
        sum_b (R c)_b m'_b.  Requires other.degree >= self.degree so nothing
        is truncated; the affine hull of ``other`` must lie inside that of
        ``self`` for the restriction to be meaningful.
        """
        key = id(other)
        hit = self._restrict_cache.get(key)
        if hit is not None and hit[0] is other:
            return hit[1]
        if other.degree < self.degree:
            raise ValueError("target basis degree too low for exact restriction")
        # local coords of self on the sub-domain: y_j = b_j + sum_t M[t,j] xi'_t
        b = (other.center - self.center) @ self.axes.T / self.h
        M = (other.h / self.h) * other.axes @ self.axes.T  # (d_other, d_self)
        zero = (0,) * other.dim
        lin = []
        for j in range(self.dim):
            form = {zero: b[j]}
            for t in range(other.dim):
                form[_unit(other.dim, t)] = form.get(_unit(other.dim, t), 0.0) + M[t, j]
            lin.append(form)
        R = np.zeros((other.size, self.size))
        for i, alpha in enumerate(self.exponents):
            poly = {zero: 1.0}
            for j, a in enumerate(alpha):
                for _ in range(a):
                    poly = _poly_mul(poly, lin[j])
            for expo, coef in poly.items():
                R[other._position[expo], i] = coef
        self._restrict_cache[key] = (other, R)
        return R


def _unit(d: int, j: int) -> tuple:
    e = [0] * d
    e[j] = 1
    return tuple(e)


def _poly_mul(p: dict, q: dict) -> dict:
    # exponent keys in both dicts share one fixed length
    out = {}
    for ea, ca in p.items():
        for eb, cb in q.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0.0) + ca * cb
    return out


# ---------------------------------------------------------------------------
# tensor-valued polynomials


class TensorPoly:
    """A rank-s tensor of polynomials in one ScaledMonomialBasis.

    coeffs has shape (basis.size,) + (ambient,)*rank; tensor indices always
    refer to ambient coordinates.  Gradients prepend their index, so the
    first tensor slot belongs to the newest derivative.
    """

    def __init__(self, basis: ScaledMonomialBasis, coeffs: np.ndarray):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.shape[0] != basis.size:
            raise ValueError("coefficient array does not match basis size")
        self.rank = self.coeffs.ndim - 1

    # -- constructors -------------------------------------------------

    @classmethod
    def monomial(cls, basis: ScaledMonomialBasis, index: int) -> "TensorPoly":
        c = np.zeros(basis.size)
        c[index] = 1.0
        return cls(basis, c)

    @classmethod
    def zero(cls, basis: ScaledMonomialBasis, rank: int = 0) -> "TensorPoly":
        return cls(basis, np.zeros((basis.size,) + (basis.ambient,) * rank))

    @classmethod
    def constant_tensor(cls, basis: ScaledMonomialBasis, tensor) -> "TensorPoly":
        tensor = np.asarray(tensor, dtype=float)
        c = np.zeros((basis.size,) + tensor.shape)
        c[0] = tensor
        return cls(basis, c)

    # -- algebra ------------------------------------------------------

    def __add__(self, other: "TensorPoly") -> "TensorPoly":
        self._check_compatible(other)
        return TensorPoly(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "TensorPoly") -> "TensorPoly":
        self._check_compatible(other)
        return TensorPoly(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "TensorPoly":
        return TensorPoly(self.basis, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "TensorPoly":
        return TensorPoly(self.basis, -self.coeffs)

    def _check_compatible(self, other: "TensorPoly"):
        if other.basis is not self.basis or other.rank != self.rank:
            raise ValueError("operands live in different bases or ranks")

    # -- calculus -----------------------------------------------------

    def grad(self) -> "TensorPoly":
        """Gradient, prepending a new ambient index.

        On a face basis this is automatically the surface gradient, since
        only tangential coordinates exist; on a cell basis it is the full
        gradient.
        """
        b = self.basis
        n = b.ambient
        new = np.zeros((b.size, n) + self.coeffs.shape[1:])
        for j in range(b.dim):
            dc = np.tensordot(b.diff_mats[j], self.coeffs, axes=([1], [0])) / b.h
            direction = b.axes[j].reshape((1, n) + (1,) * self.rank)
            new += dc[:, None, ...] * direction
        return TensorPoly(b, new)

    def nabla(self, m: int) -> "TensorPoly":
        """m-fold gradient (rank grows by m)."""
        out = self
        for _ in range(m):
            out = out.grad()
        return out

    def laplacian(self) -> "TensorPoly":
        """Componentwise Laplace operator in the domain's own coordinates."""
        b = self.basis
        flat = self.coeffs.reshape(b.size, -1)
        acc = np.zeros_like(flat)
        for j in range(b.dim):
            acc += b.diff_mats[j] @ (b.diff_mats[j] @ flat)
        return TensorPoly(b, (acc / b.h**2).reshape(self.coeffs.shape))

    def surface_div(self) -> "TensorPoly":
        """Divergence in the domain's coordinates, contracting the first index.

        On a cell basis this is the full divergence; on a face basis the
        surface divergence div_F.
        """
        if self.rank < 1:
            raise ValueError("divergence needs rank >= 1")
        b = self.basis
        out = np.zeros((b.size,) + self.coeffs.shape[2:])
        for j in range(b.dim):
            dc = np.tensordot(b.diff_mats[j], self.coeffs, axes=([1], [0])) / b.h
            out += np.tensordot(dc, b.axes[j], axes=([1], [0]))
        return TensorPoly(b, out)

    def contract_first(self, vector) -> "TensorPoly":
        """Contract the first (newest) tensor index with an ambient vector."""
        if self.rank < 1:
            raise ValueError("contraction needs rank >= 1")
        vector = np.asarray(vector, dtype=float)
        return TensorPoly(self.basis, np.tensordot(self.coeffs, vector, axes=([1], [0])))

    def times_vector(self, vector) -> "TensorPoly":
        """Tensor product with an ambient vector, prepending its index."""
        vector = np.asarray(vector, dtype=float)
        shaped = vector.reshape((1, -1) + (1,) * self.rank)
        return TensorPoly(self.basis, self.coeffs[:, None, ...] * shaped)

    # -- restriction and evaluation ------------------------------------

    def restrict(self, basis_to: ScaledMonomialBasis) -> "TensorPoly":
        """Exact re-expansion on a sub-domain basis (tensor part untouched)."""
        R = self.basis.restriction_matrix(basis_to)
        return TensorPoly(basis_to, np.tensordot(R, self.coeffs, axes=([1], [0])))

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Point values, shape (npts,) + (ambient,)*rank."""
        vals = self.basis.eval(points)
        return np.tensordot(vals, self.coeffs, axes=([0], [0]))

    def degree_bound(self, tol: float = 0.0) -> int:
        """Largest monomial degree with a coefficient above tol (-1 if none)."""
        flat = np.abs(self.coeffs.reshape(self.basis.size, -1)).max(axis=1)
        scale = flat.max()
        deg = -1
        for i, alpha in enumerate(self.basis.exponents):
            if flat[i] > tol * scale:
                deg = max(deg, sum(alpha))
        return deg

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)


# ---------------------------------------------------------------------------
# integration and projection


def mass_matrix(basis: ScaledMonomialBasis, quad: Quadrature) -> np.ndarray:
    """Gram matrix of the basis under the given quadrature."""
    V = basis.eval(quad.points)
    return (V * quad.weights) @ V.T


def integrate(p: TensorPoly, quad: Quadrature) -> np.ndarray:
    """Integral of a TensorPoly over the quadrature's domain."""
    if quad.degree < p.basis.degree:
        raise ValueError("quadrature exactness below polynomial degree")
    return quad.integrate(p.eval(quad.points))


def project_L2(values_or_poly, basis: ScaledMonomialBasis, quad: Quadrature,
               mass: np.ndarray | None = None) -> TensorPoly:
    """L2 projection onto the span of ``basis``.

    Accepts a TensorPoly (evaluated at the quadrature points), a callable
    points -> values, or a precomputed value array of shape (npts, ...).
    """
    if isinstance(values_or_poly, TensorPoly):
        vals = values_or_poly.eval(quad.points)
    elif callable(values_or_poly):
        vals = np.asarray(values_or_poly(quad.points), dtype=float)
    else:
        vals = np.asarray(values_or_poly, dtype=float)
    if mass is None:
        mass = mass_matrix(basis, quad)
    V = basis.eval(quad.points)
    rhs = np.tensordot(V * quad.weights, vals, axes=([1], [0]))
    flat = rhs.reshape(basis.size, -1)
    coeffs = np.linalg.solve(mass, flat)
    return TensorPoly(basis, coeffs.reshape(rhs.shape))
