"""Generalized integration by parts over the face lattice.

The element identity expands (nabla^m q, nabla^m v)_K for a polynomial q
into a volume pairing of (-Delta)^m q with v plus face functionals paired
with normal derivatives of v:

    sum over j = 1..m, faces F of codim j, alpha with |alpha| <= m - j of
    (D_{F,alpha}(q), d^|alpha| v / d nu_F^alpha)_F.

The recursion peels one gradient index at a time: on a codim-r face it
splits a pairing (tau, nabla^s v)_F into normal-derivative pairings on F,
a surface-divergence pairing on F, and conormal pairings on the boundary
faces of F (one codimension deeper).  Accumulated normal derivatives are
re-expanded in the finer face's normal frame when descending; the
expansion is exact because normal spaces nest along the lattice.

Weights are ordinary scalar polynomials in each face's own scaled
monomial basis, so they pair directly with the moment degrees of freedom.
"""

from __future__ import annotations

import numpy as np

from .mesh import Entity
from .polycalc import TensorPoly, multi_indices_exact

__all__ = [
    "FunctionalTerm",
    "FunctionalList",
    "face_green_step",
    "face_green_decompose",
    "element_green_decompose",
    "h2_explicit",
    "constant_moment_functionals",
    "normal_derivative",
    "directional_partial_table",
    "pair_with_polynomial",
    "pair_with_function",
    "dump_functional_list",
]

_PRUNE = 1e-13  # drops roundoff-only frame expansion coefficients


class FunctionalTerm:
    """One face functional: weight polynomial paired with d^|alpha| v/d nu^alpha."""

    __slots__ = ("face", "alpha", "weight")

    def __init__(self, face: Entity, alpha: tuple, weight: TensorPoly):
        self.face = face
        self.alpha = tuple(alpha)
        self.weight = weight

    @property
    def order(self) -> int:
        return sum(self.alpha)

    def __repr__(self):
        return f"FunctionalTerm(codim={self.face.codim}, index={self.face.index}, alpha={self.alpha})"


class FunctionalList:
    """Canonicalized decomposition: optional volume part plus face terms."""

    def __init__(self, cell: Entity | None, volume: TensorPoly | None, raw_terms):
        self.cell = cell
        self.volume = volume
        merged = {}
        faces = {}
        for face, alpha, weight in raw_terms:
            key = (face.codim, face.index, tuple(alpha))
            if key in merged:
                merged[key] = merged[key] + weight
            else:
                merged[key] = weight
                faces[key] = face
        self.terms = [
            FunctionalTerm(faces[key], key[2], w)
            for key, w in merged.items()
            if not w.is_zero()
        ]
        self.terms.sort(key=lambda t: (t.face.codim, t.face.index, t.alpha))

    def weight_table(self) -> dict:
        """Map (codim, face index, alpha) -> weight coefficient array."""
        return {
            (t.face.codim, t.face.index, t.alpha): t.weight.coeffs.copy()
            for t in self.terms
        }


def _unit_alpha(r: int, i: int) -> tuple:
    e = [0] * r
    e[i] = 1
    return tuple(e)


def _expand_alpha(alpha: tuple, change: np.ndarray) -> dict:
    """Re-expand a normal-derivative multi-index in a finer frame.

    ``change[i, l]`` holds the component of the old normal nu_i along the
    new normal nu'_l.  Returns {beta: coefficient} with beta against the
    new frame; exact because the old normal space embeds in the new one.
    """
    r_new = change.shape[1]
    poly = {(0,) * r_new: 1.0}
    for i, a in enumerate(alpha):
        if a == 0:
            continue
        form = {}
        for l in range(r_new):
            if abs(change[i, l]) > _PRUNE:
                form[_unit_alpha(r_new, l)] = change[i, l]
        for _ in range(a):
            new = {}
            for eb, cb in poly.items():
                for ef, cf in form.items():
                    key = tuple(x + y for x, y in zip(eb, ef))
                    new[key] = new.get(key, 0.0) + cb * cf
            poly = new
    return poly


def _reduce(face: Entity, alpha: tuple, tau: TensorPoly, s: int, out: list):
    """Recursive split of (tau, nabla^s [d^alpha v / d nu^alpha])_face."""
    if s == 0:
        out.append((face, alpha, tau))
        return
    r = face.codim
    mesh = face.mesh
    degree = tau.basis.degree
    for i in range(r):
        peeled = tau.contract_first(face.normal[i])
        new_alpha = tuple(a + (1 if j == i else 0) for j, a in enumerate(alpha))
        _reduce(face, new_alpha, peeled, s - 1, out)
    _reduce(face, alpha, -tau.surface_div(), s - 1, out)
    for sub_idx in face.subfaces.get(r + 1, ()):
        sub = mesh.entity(r + 1, sub_idx)
        conormal = face.conormals[sub_idx]
        tau_sub = tau.contract_first(conormal).restrict(sub.basis(degree))
        change = face.normal @ sub.normal.T
        for beta, coef in _expand_alpha(alpha, change).items():
            _reduce(sub, beta, coef * tau_sub, s - 1, out)


def face_green_decompose(tau: TensorPoly, face: Entity, s: int | None = None) -> FunctionalList:
    """Decompose (tau, nabla^s v)_F into dof-pairable face functionals."""
    if s is None:
        s = tau.rank
    if tau.rank != s:
        raise ValueError("tensor rank must equal the gradient order s")
    if s > face.dim:
        raise ValueError(
            f"cannot integrate nabla^{s} by parts on a {face.dim}-dimensional face"
        )
    out = []
    _reduce(face, (0,) * face.codim, tau, s, out)
    return FunctionalList(None, None, out)


def face_green_step(tau: TensorPoly, face: Entity) -> FunctionalList:
    """Single integration by parts of (tau, nabla v)_F for rank-1 tau."""
    if tau.rank != 1:
        raise ValueError("face_green_step expects a rank-1 tensor field")
    return face_green_decompose(tau, face, 1)


def element_green_decompose(q: TensorPoly, cell: Entity, m: int) -> FunctionalList:
    """Full decomposition of (nabla^m q, nabla^m v)_K for polynomial q.

    The volume part is (-Delta)^m q; face weights on a codim-j face obey
    the degree bound deg <= k - (2m - j - |alpha|) structurally, because
    every reduction step either differentiates or contracts with a
    constant vector.
    """
    n = cell.mesh.dim
    if not 1 <= m <= n:
        raise ValueError("the gradient order m must satisfy 1 <= m <= n")
    if q.rank != 0:
        raise ValueError("q must be a scalar polynomial")
    degree = q.basis.degree
    out = []
    u = q
    for ell in range(m, 0, -1):
        if u.is_zero():
            break
        g = u.nabla(ell)
        for fi in cell.subfaces[1]:
            face = cell.mesh.faces[1][fi]
            nu_out = cell.sigma[fi] * face.normal[0]
            tau = g.contract_first(nu_out).restrict(face.basis(degree))
            _reduce(face, (0,), tau, ell - 1, out)
        u = -u.laplacian()
    if u.is_zero():
        volume = None
    else:
        volume = u if (m % 1 == 0) else u
        volume = u
    # after the loop u = (-Delta)^m q (or an early exact zero)
    return FunctionalList(cell, volume, out)


def h2_explicit(q: TensorPoly, cell: Entity) -> FunctionalList:
    """Independent decomposition for m = 2 via plate-theory face operators.

    Uses the normal bending moment M_nn = nu_F^T (nabla^2 q) nu_out, the
    twisting moment M_nt = (nabla^2 q) nu_out - M_nn nu_F, and the
    effective transverse shear Q_n = nu_out^T div(nabla^2 q) + div_F M_nt,
    paired as (M_nn, dv/dnu_F)_F - (Q_n, v)_F plus conormal accumulations
    of M_nt on the codim-2 boundary.
    """
    degree = q.basis.degree
    hess = q.nabla(2)
    div_hess = hess.surface_div()  # full divergence: cell frame is ambient
    out = []
    for fi in cell.subfaces[1]:
        face = cell.mesh.faces[1][fi]
        nu_f = face.normal[0]
        nu_out = cell.sigma[fi] * nu_f
        tau = hess.contract_first(nu_out).restrict(face.basis(degree))
        m_nn = tau.contract_first(nu_f)
        m_nt = tau - m_nn.times_vector(nu_f)
        q_n = div_hess.contract_first(nu_out).restrict(face.basis(degree)) + m_nt.surface_div()
        out.append((face, (1,), m_nn))
        out.append((face, (0,), -q_n))
        for sub_idx in face.subfaces.get(face.codim + 1, ()):
            sub = cell.mesh.entity(face.codim + 1, sub_idx)
            w = m_nt.contract_first(face.conormals[sub_idx]).restrict(sub.basis(degree))
            out.append((sub, (0,) * sub.codim, w))
    volume = q.laplacian().laplacian()
    if volume.is_zero():
        volume = None
    return FunctionalList(cell, volume, out)


def index_tuple(beta: tuple) -> tuple:
    """Canonical tensor index tuple of a symmetric component multi-index."""
    out = []
    for axis, mult in enumerate(beta):
        out.extend([axis] * mult)
    return tuple(out)


def constant_moment_functionals(cell: Entity, r: int, m: int, degree: int):
    """Dof realizations of the face-average constraints v -> sum_F Q_0^F(nabla^{m-r} v).

    For each symmetric component beta (|beta| = m - r) returns the
    FunctionalList of sum over F in F^r(K) of (E_beta / |F|, nabla^{m-r} v)_F.
    Constant tensors kill every surface-divergence branch, so the result
    pairs only with moment dofs that exist for every k >= m.
    """
    n = cell.mesh.dim
    if not 1 <= r <= m:
        raise ValueError("constraint codimension r must satisfy 1 <= r <= m")
    results = []
    for beta in multi_indices_exact(n, m - r):
        out = []
        for face in cell.faces(r):
            tensor = np.zeros((n,) * (m - r)) if m > r else np.array(1.0)
            if m > r:
                tensor[index_tuple(beta)] = 1.0
            else:
                tensor = np.array(1.0)
            tau = TensorPoly.constant_tensor(face.basis(degree), tensor * (1.0 / face.measure))
            _reduce(face, (0,) * r, tau, m - r, out)
        results.append((beta, FunctionalList(cell, None, out)))
    return results


# ---------------------------------------------------------------------------
# evaluation oracles


def normal_derivative(v: TensorPoly, face: Entity, alpha: tuple) -> TensorPoly:
    """d^|alpha| v / d nu_face^alpha as a polynomial on v's own basis."""
    t = v.nabla(sum(alpha))
    for i, a in enumerate(alpha):
        for _ in range(a):
            t = t.contract_first(face.normal[i])
    return t


def directional_partial_table(directions) -> dict:
    """Expand a product of directional derivatives into ambient partials.

    Returns {beta: coefficient} so that prod_i (d/d dir_i) = sum_beta
    coefficient * d^beta.
    """
    directions = [np.asarray(d, dtype=float) for d in directions]
    if not directions:
        return {(): 1.0}
    n = directions[0].shape[0]
    table = {(0,) * n: 1.0}
    for d in directions:
        new = {}
        for beta, c in table.items():
            for j in range(n):
                if d[j] != 0.0:
                    nb = list(beta)
                    nb[j] += 1
                    nb = tuple(nb)
                    new[nb] = new.get(nb, 0.0) + c * d[j]
        table = new
    return table


def _alpha_directions(face: Entity, alpha: tuple):
    dirs = []
    for i, a in enumerate(alpha):
        dirs.extend([face.normal[i]] * a)
    return dirs


def pair_with_polynomial(flist: FunctionalList, v: TensorPoly, degree: int) -> float:
    """Exact pairing of a decomposition with a polynomial test function."""
    total = 0.0
    if flist.volume is not None and flist.cell is not None:
        M = flist.cell.mass(degree)
        total += float(flist.volume.coeffs @ M @ v.coeffs)
    for term in flist.terms:
        face = term.face
        dv = normal_derivative(v, face, term.alpha).restrict(face.basis(degree))
        M = face.mass(degree)
        total += float(term.weight.coeffs @ M @ dv.coeffs)
    return total


def pair_with_function(flist: FunctionalList, partial, quad_degree: int) -> float:
    """Pair a decomposition with a smooth function given by its partials.

    ``partial(beta, points)`` must return the values of d^beta v at the
    points, for |beta| up to the largest derivative order in the list.
    """
    total = 0.0
    if flist.volume is not None and flist.cell is not None:
        quad = flist.cell.quadrature(quad_degree)
        vol_vals = flist.volume.eval(quad.points)
        n = flist.cell.mesh.dim
        total += float(np.dot(quad.weights, vol_vals * partial((0,) * n, quad.points)))
    for term in flist.terms:
        face = term.face
        quad = face.quadrature(quad_degree)
        vals = np.zeros(quad.points.shape[0])
        table = directional_partial_table(_alpha_directions(face, term.alpha))
        for beta, coef in table.items():
            vals += coef * partial(beta, quad.points)
        wvals = term.weight.eval(quad.points)
        total += float(np.dot(quad.weights, wvals * vals))
    return total


def dump_functional_list(flist: FunctionalList, label: str = "") -> str:
    """Structured text dump for golden-file comparisons and debugging."""
    lines = []
    if label:
        lines.append(f"# {label}")
    if flist.volume is not None:
        lines.append("volume " + np.array2string(flist.volume.coeffs, precision=12))
    for term in flist.terms:
        lines.append(
            f"face codim={term.face.codim} index={term.face.index} "
            f"alpha={term.alpha} weight="
            + np.array2string(term.weight.coeffs, precision=12)
        )
    return "\n".join(lines)
