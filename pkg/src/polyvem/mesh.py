"""Polytopal meshes with the full face lattice and deterministic frames.

A mesh in R^n holds its cells plus every face of codimension r = 1..n; in
2D edges and vertices, in 3D polygonal faces, edges and vertices.  Each
lattice entity carries geometry (centroid, diameter, measure), a global
orthonormal tangent/normal frame shared by all incident cells, a simplex
fan for quadrature, incidence maps up and down the lattice, and a boundary
flag.  Frames are built deterministically by Gram-Schmidt over the
canonical axes projected into the tangent or normal space, processed in
coordinate order, with the sign fixed so the first nonzero component of
each frame vector is positive.

Mesh files are JSON with fields ``dimension``, ``vertices`` and ``cells``
(2D: counterclockwise vertex loops; 3D: face index lists with orientation
signs) plus, in 3D, ``faces`` as vertex loops.  All indices are 0-based.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import polycalc
from .polycalc import Quadrature, ScaledMonomialBasis

__all__ = ["MeshError", "Entity", "PolytopalMesh", "load_mesh", "fan_decompose"]

_TOL = 1e-12


class MeshError(Exception):
    """Malformed input, degenerate geometry, or broken lattice invariants."""


def _canonical_frame(projector: np.ndarray, dim: int, n: int) -> np.ndarray:
    """Deterministic orthonormal basis of the projector's range."""
    rows = []
    for i in range(n):
        v = projector[:, i].copy()
        for r in rows:
            v -= np.dot(v, r) * r
        norm = np.linalg.norm(v)
        if norm > 1e-10:
            v /= norm
            for comp in v:
                if abs(comp) > 1e-9:
                    if comp < 0:
                        v = -v
                    break
            rows.append(v)
        if len(rows) == dim:
            break
    if len(rows) != dim:
        raise MeshError("affine hull dimension does not match declared face dimension")
    return np.array(rows).reshape(dim, n)


def _span_frames(offsets: np.ndarray, dim: int, n: int):
    """Tangent and normal frames of span(offsets), with planarity check."""
    if dim == 0:
        tangent = np.zeros((0, n))
        normal = _canonical_frame(np.eye(n), n, n)
        return tangent, normal
    _, svals, vt = np.linalg.svd(offsets, full_matrices=True)
    if svals.shape[0] < dim or svals[dim - 1] <= 1e-10 * svals[0]:
        raise MeshError("degenerate face: affine hull is rank deficient")
    if svals.shape[0] > dim and svals[dim] > 1e-8 * svals[0]:
        raise MeshError("face vertices do not lie in a common affine subspace")
    basis = vt[:dim]
    p_t = basis.T @ basis
    tangent = _canonical_frame(p_t, dim, n)
    normal = _canonical_frame(np.eye(n) - p_t, n - dim, n)
    return tangent, normal


class Entity:
    """One member of the face lattice: a cell (codim 0) or a face (codim >= 1)."""

    def __init__(self, mesh: "PolytopalMesh", codim: int, index: int, vertex_ids):
        self.mesh = mesh
        self.codim = codim
        self.index = index
        self.vertex_ids = tuple(vertex_ids)
        self.dim = mesh.dim - codim
        self.center = None
        self.h = 1.0
        self.measure = 1.0
        self.tangent = None
        self.normal = None
        self.fan = []
        self.boundary = False
        self.subfaces = {}   # absolute codim -> tuple of indices
        self.parents = ()    # indices one codimension up the lattice (codim-1 direction)
        self.cells = ()      # indices of incident cells
        self.conormals = {}  # subface index (codim+1) -> outward unit conormal
        self.sigma = {}      # cells only: codim-1 face index -> outward sign
        self.loop = None
        self._basis_cache = {}
        self._quad_cache = {}
        self._mass_cache = {}
        self._tab_cache = {}

    def __repr__(self):
        return f"Entity(codim={self.codim}, index={self.index})"

    @property
    def key(self):
        return (self.codim, self.index)

    def faces(self, j: int):
        """Entities in F^j(self): subfaces of codimension self.codim + j."""
        if j == 0:
            return [self]
        target = self.codim + j
        return [self.mesh.entity(target, i) for i in self.subfaces.get(target, ())]

    def basis(self, degree: int) -> ScaledMonomialBasis:
        b = self._basis_cache.get(degree)
        if b is None:
            b = ScaledMonomialBasis(self.center, self.h, self.tangent, degree)
            self._basis_cache[degree] = b
        return b

    def quadrature(self, degree: int) -> Quadrature:
        if self.dim == 0:
            key = 0
        else:
            key = max(0, -(-(degree - 1) // 2))  # ceil((degree-1)/2)
        q = self._quad_cache.get(key)
        if q is None:
            if self.dim == 0:
                q = Quadrature(self.center[None, :].copy(), np.ones(1), degree=10**6)
            else:
                q = polycalc.quadrature_from_fan(self.fan, 2 * key + 1)
            self._quad_cache[key] = q
        return q

    def mass(self, degree: int) -> np.ndarray:
        M = self._mass_cache.get(degree)
        if M is None:
            M = polycalc.mass_matrix(self.basis(degree), self.quadrature(2 * degree))
            self._mass_cache[degree] = M
        return M

    def basis_values(self, degree: int, quad_degree: int):
        """Cached (basis values at quadrature points, quadrature) table."""
        quad = self.quadrature(quad_degree)
        key = (degree, quad.degree)
        tab = self._tab_cache.get(key)
        if tab is None:
            tab = (self.basis(degree).eval(quad.points), quad)
            self._tab_cache[key] = tab
        return tab

    def integrate_basis(self, degree: int) -> np.ndarray:
        """Vector of integrals of each basis monomial over the entity."""
        V, quad = self.basis_values(degree, degree)
        return V @ quad.weights


def fan_decompose(entity: Entity):
    """Simplex fan of a cell or face: list of (d+1, n) vertex arrays."""
    return list(entity.fan)


class PolytopalMesh:
    """Immutable polytopal mesh with full face lattice in R^2 or R^3."""

    def __init__(self, dimension: int, vertices, cells, faces=None):
        self.dim = int(dimension)
        if self.dim not in (2, 3):
            raise MeshError("only 2D and 3D meshes are supported")
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != self.dim:
            raise MeshError("vertex array shape does not match dimension")
        self.cells: list[Entity] = []
        self.faces: dict[int, list[Entity]] = {r: [] for r in range(1, self.dim + 1)}
        self._raw_cells = cells
        self._raw_faces = faces
        if self.dim == 2:
            self._build_2d(cells)
        else:
            self._build_3d(cells, faces)
        self._build_geometry()
        self._build_boundary()
        self._build_conormals()

    # -- lattice construction ------------------------------------------

    def entity(self, codim: int, index: int) -> Entity:
        if codim == 0:
            return self.cells[index]
        return self.faces[codim][index]

    def _new_face(self, codim: int, vertex_ids) -> Entity:
        ent = Entity(self, codim, len(self.faces[codim]), vertex_ids)
        self.faces[codim].append(ent)
        return ent

    def _build_2d(self, cells):
        n_vert = self.vertices.shape[0]
        for vid in range(n_vert):
            v = self._new_face(2, (vid,))
            v.subfaces = {}
        edge_of = {}

        def get_edge(a, b):
            key = (a, b) if a < b else (b, a)
            idx = edge_of.get(key)
            if idx is None:
                e = self._new_face(1, key)
                e.subfaces = {2: key}
                e.loop = key
                idx = e.index
                edge_of[key] = idx
            return idx

        for ci, loop in enumerate(cells):
            loop = [int(v) for v in loop]
            if len(loop) < 3 or len(set(loop)) != len(loop):
                raise MeshError(f"cell {ci}: invalid vertex loop")
            pts = self.vertices[loop]
            area2 = 0.0
            for i in range(len(loop)):
                a, b = pts[i], pts[(i + 1) % len(loop)]
                area2 += a[0] * b[1] - b[0] * a[1]
            if abs(area2) < _TOL:
                raise MeshError(f"cell {ci}: zero area")
            if area2 < 0:
                loop = loop[::-1]
            cell = Entity(self, 0, ci, tuple(sorted(set(loop))))
            cell.loop = tuple(loop)
            edges = tuple(
                get_edge(loop[i], loop[(i + 1) % len(loop)]) for i in range(len(loop))
            )
            cell.subfaces = {1: edges, 2: tuple(sorted(set(loop)))}
            self.cells.append(cell)
        self._link_incidence()

    def _build_3d(self, cells, faces):
        if faces is None:
            raise MeshError("3D meshes require a 'faces' array of vertex loops")
        n_vert = self.vertices.shape[0]
        for vid in range(n_vert):
            self._new_face(3, (vid,))
        edge_of = {}
        for loop in faces:
            loop = [int(v) for v in loop]
            if len(loop) < 3 or len(set(loop)) != len(loop):
                raise MeshError("invalid face vertex loop")
            face = self._new_face(1, tuple(sorted(set(loop))))
            face.loop = tuple(loop)
            edge_ids = []
            for i in range(len(loop)):
                a, b = loop[i], loop[(i + 1) % len(loop)]
                key = (a, b) if a < b else (b, a)
                idx = edge_of.get(key)
                if idx is None:
                    e = self._new_face(2, key)
                    e.subfaces = {3: key}
                    e.loop = key
                    idx = e.index
                    edge_of[key] = idx
                edge_ids.append(idx)
            face.subfaces = {2: tuple(edge_ids), 3: tuple(sorted(set(loop)))}
        for ci, spec in enumerate(cells):
            if isinstance(spec, dict):
                fids = [int(f) for f in spec["faces"]]
                signs = [int(s) for s in spec.get("signs", [])] or None
            else:
                fids = [int(f) for f in spec]
                signs = None
            cell = Entity(self, 0, ci, ())
            cell.loop = (tuple(fids), tuple(signs) if signs else None)
            edge_set, vert_set = set(), set()
            for fi in fids:
                face = self.faces[1][fi]
                edge_set.update(face.subfaces[2])
                vert_set.update(face.subfaces[3])
            cell.vertex_ids = tuple(sorted(vert_set))
            cell.subfaces = {
                1: tuple(fids),
                2: tuple(sorted(edge_set)),
                3: tuple(sorted(vert_set)),
            }
            self.cells.append(cell)
        self._link_incidence()

    def _link_incidence(self):
        n = self.dim
        cell_of_face = {r: {} for r in range(1, n + 1)}
        for cell in self.cells:
            for r, idxs in cell.subfaces.items():
                for i in idxs:
                    cell_of_face[r].setdefault(i, []).append(cell.index)
        for r in range(1, n + 1):
            for ent in self.faces[r]:
                ent.cells = tuple(cell_of_face[r].get(ent.index, ()))
                if r == 1 and len(ent.cells) > 2:
                    raise MeshError(
                        f"non-manifold mesh: facet {ent.index} shared by more than 2 cells"
                    )
        # parents: faces one codimension shallower containing the entity
        for r in range(2, n + 1):
            owner = {}
            for parent in self.faces[r - 1]:
                for i in parent.subfaces.get(r, ()):
                    owner.setdefault(i, []).append(parent.index)
            for ent in self.faces[r]:
                ent.parents = tuple(sorted(owner.get(ent.index, ())))
                if not ent.parents:
                    raise MeshError(
                        f"dangling face of codim {r}: index {ent.index} has no parent"
                    )
        # complete the downward closure of cells (2D already explicit)
        for cell in self.cells:
            for r in range(2, n + 1):
                collected = set(cell.subfaces.get(r, ()))
                for i in cell.subfaces[r - 1] if r - 1 >= 1 else ():
                    collected.update(self.faces[r - 1][i].subfaces.get(r, ()))
                cell.subfaces[r] = tuple(sorted(collected))

    # -- geometry -------------------------------------------------------

    def _build_geometry(self):
        n = self.dim
        for v in self.faces[n]:
            v.center = self.vertices[v.vertex_ids[0]].copy()
            v.h = 1.0
            v.measure = 1.0
            v.tangent, v.normal = _span_frames(np.zeros((0, n)), 0, n)
            v.fan = [v.center[None, :].copy()]
        for e in self.faces[n - 1]:
            a, b = self.vertices[e.vertex_ids[0]], self.vertices[e.vertex_ids[1]]
            length = float(np.linalg.norm(b - a))
            if length < _TOL:
                raise MeshError("zero-length edge")
            e.center = 0.5 * (a + b)
            e.h = length
            e.measure = length
            e.tangent, e.normal = _span_frames((b - a)[None, :] / length, 1, n)
            e.fan = [np.array([a, b])]
        if n == 3:
            for f in self.faces[1]:
                self._polygon_geometry(f, self.vertices[list(f.loop)])
        for cell in self.cells:
            if n == 2:
                self._polygon_geometry(cell, self.vertices[list(cell.loop)])
            else:
                self._polyhedron_geometry(cell)
            cell.tangent, cell.normal = np.eye(n), np.zeros((0, n))
            for fi in cell.subfaces[1]:
                face = self.faces[1][fi]
                dot = float(np.dot(face.center - cell.center, face.normal[0]))
                if abs(dot) < 1e-12 * cell.h:
                    raise MeshError("cannot orient facet: centroid lies on its plane")
                cell.sigma[fi] = 1 if dot > 0 else -1

    def _polygon_geometry(self, ent: Entity, pts: np.ndarray):
        n = self.dim
        k = pts.shape[0]
        provisional = pts.mean(axis=0)
        offsets = pts - provisional
        ent.tangent, ent.normal = _span_frames(offsets, 2, n)

        def local(p):
            return (p - provisional) @ ent.tangent.T

        def tri_area(a, b, c):
            u, v = local(b) - local(a), local(c) - local(a)
            return 0.5 * (u[0] * v[1] - u[1] * v[0])

        total = 0.0
        centroid = np.zeros(n)
        for i in range(k):
            a = tri_area(provisional, pts[i], pts[(i + 1) % k])
            total += a
            centroid += a * (provisional + pts[i] + pts[(i + 1) % k]) / 3.0
        if abs(total) < _TOL:
            raise MeshError("degenerate polygon: zero area")
        centroid /= total
        sign = 1.0 if total > 0 else -1.0
        fan, areas = [], []
        for i in range(k):
            a = sign * tri_area(centroid, pts[i], pts[(i + 1) % k])
            if a < -1e-12 * abs(total):
                raise MeshError(
                    "polygon is not star-shaped with respect to its centroid"
                )
            if a > 1e-14 * abs(total):
                fan.append(np.array([centroid, pts[i], pts[(i + 1) % k]]))
                areas.append(a)
        ent.center = centroid
        ent.measure = float(abs(total))
        ent.fan = fan
        ent.h = max(
            float(np.linalg.norm(pts[i] - pts[j]))
            for i in range(k)
            for j in range(i + 1, k)
        )
        if abs(sum(areas) - ent.measure) > 1e-12 * ent.measure:
            raise MeshError("fan areas do not add up to the polygon area")

    def _polyhedron_geometry(self, cell: Entity):
        fids, signs = cell.loop
        faces = [self.faces[1][fi] for fi in fids]
        if signs is None:
            ref = self.vertices[list(cell.vertex_ids)].mean(axis=0)
            signs = []
            for face in faces:
                loop_pts = self.vertices[list(face.loop)]
                nrm = np.zeros(3)
                for i in range(len(face.loop)):
                    nrm += np.cross(loop_pts[i], loop_pts[(i + 1) % len(face.loop)])
                signs.append(1 if np.dot(nrm, face.center - ref) > 0 else -1)
            signs = tuple(signs)
            cell.loop = (tuple(fids), signs)

        def tet_vol(p0, a, b, c):
            return float(np.linalg.det(np.array([a - p0, b - p0, c - p0]))) / 6.0

        provisional = self.vertices[list(cell.vertex_ids)].mean(axis=0)
        total = 0.0
        centroid = np.zeros(3)
        tris = []
        for face, s in zip(faces, signs):
            loop_pts = self.vertices[list(face.loop)]
            fc = face.center
            for i in range(len(face.loop)):
                a, b = loop_pts[i], loop_pts[(i + 1) % len(face.loop)]
                tris.append((fc, a, b, s))
                v = s * tet_vol(provisional, fc, a, b)
                total += v
                centroid += v * (provisional + fc + a + b) / 4.0
        if total < _TOL:
            raise MeshError("polyhedron has non-positive volume (check orientation signs)")
        centroid /= total
        fan, vols = [], []
        for fc, a, b, s in tris:
            v = s * tet_vol(centroid, fc, a, b)
            if v < -1e-12 * total:
                raise MeshError(
                    "polyhedron is not star-shaped with respect to its centroid"
                )
            if v > 1e-14 * total:
                fan.append(np.array([centroid, fc, a, b]))
                vols.append(v)
        cell.center = centroid
        cell.measure = float(total)
        cell.fan = fan
        pts = self.vertices[list(cell.vertex_ids)]
        cell.h = max(
            float(np.linalg.norm(pts[i] - pts[j]))
            for i in range(len(pts))
            for j in range(i + 1, len(pts))
        )

    # -- boundary and conormals ------------------------------------------

    def _build_boundary(self):
        for f in self.faces[1]:
            if not f.cells:
                raise MeshError(f"facet {f.index} belongs to no cell")
            f.boundary = len(f.cells) == 1
        for r in range(2, self.dim + 1):
            for ent in self.faces[r]:
                ent.boundary = any(self.faces[r - 1][p].boundary for p in ent.parents)

    def _build_conormals(self):
        for r in range(1, self.dim):
            for ent in self.faces[r]:
                for sub_idx in ent.subfaces.get(r + 1, ()):
                    sub = self.faces[r + 1][sub_idx]
                    w = sub.center - ent.center
                    for nu in ent.normal:
                        w = w - np.dot(w, nu) * nu
                    for t in sub.tangent:
                        w = w - np.dot(w, t) * t
                    norm = np.linalg.norm(w)
                    if norm < 1e-12 * ent.h:
                        raise MeshError("degenerate conormal on the face lattice")
                    ent.conormals[sub_idx] = w / norm

    # -- bookkeeping -------------------------------------------------------

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def total_measure(self) -> float:
        return float(sum(c.measure for c in self.cells))

    def mesh_size(self) -> float:
        return max(c.h for c in self.cells)

    def boundary_faces(self, r: int):
        return [f for f in self.faces[r] if f.boundary]

    def to_dict(self) -> dict:
        data = {
            "dimension": self.dim,
            "vertices": self.vertices.tolist(),
        }
        if self.dim == 2:
            data["cells"] = [list(c.loop) for c in self.cells]
        else:
            data["faces"] = [list(f.loop) for f in self.faces[1]]
            data["cells"] = [
                {"faces": list(c.loop[0]), "signs": list(c.loop[1])}
                for c in self.cells
            ]
        return data

    def save(self, path: str):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)


def load_mesh(source) -> PolytopalMesh:
    """Build a mesh from a JSON file path, file object, or plain dict."""
    if isinstance(source, dict):
        data = source
    elif hasattr(source, "read"):
        data = json.load(source)
    else:
        with open(source) as fh:
            data = json.load(fh)
    try:
        dimension = data["dimension"]
        vertices = data["vertices"]
        cells = data["cells"]
    except (KeyError, TypeError) as exc:
        raise MeshError(f"malformed mesh file: missing field {exc}") from exc
    return PolytopalMesh(dimension, vertices, cells, data.get("faces"))
