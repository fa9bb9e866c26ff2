"""Built-in mesh families on the unit square and cube.

Every family halves the mesh size per refinement level and produces cells
that are star-shaped with respect to their centroids (checked during mesh
construction).  The randomized quad family uses a fixed seed so studies
are reproducible; if a perturbation breaks star-shapedness the amplitude
is halved and the mesh rebuilt, failing only after two retries.

Families: tri-uniform (2 * 4^level triangles), quad-distorted(delta)
(4^level randomly perturbed quads), polygon-hex (brick-wall tiling bent
into convex hexagons, with pentagons and quads along the boundary),
tet-uniform (6 * 8^level Kuhn tetrahedra), hex-uniform (8^level cubes).
"""

from __future__ import annotations

import itertools

import numpy as np

from .mesh import MeshError, PolytopalMesh

__all__ = ["generate_mesh", "FAMILY_DIMENSION", "family_names"]


def _grid_2d(n: int):
    xs = np.linspace(0.0, 1.0, n + 1)
    verts = np.array([[x, y] for y in xs for x in xs])
    vid = lambda i, j: j * (n + 1) + i
    return verts, vid


def tri_uniform(level: int) -> PolytopalMesh:
    n = 2**level
    verts, vid = _grid_2d(n)
    cells = []
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            cells.append([v00, v10, v11])
            cells.append([v00, v11, v01])
    return PolytopalMesh(2, verts, cells)


def quad_distorted(level: int, delta: float = 0.2, seed: int = 42) -> PolytopalMesh:
    if not 0.0 <= delta < 0.3:
        raise ValueError("distortion amplitude must lie in [0, 0.3)")
    n = 2**level
    h = 1.0 / n
    last_err = None
    for attempt_delta in (delta, delta / 2.0, delta / 4.0):
        rng = np.random.default_rng(seed)
        verts, vid = _grid_2d(n)
        shift = rng.uniform(-1.0, 1.0, size=verts.shape) * attempt_delta * h
        interior = np.all((verts > 1e-12) & (verts < 1.0 - 1e-12), axis=1)
        verts = verts + shift * interior[:, None]
        cells = []
        for j in range(n):
            for i in range(n):
                cells.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)])
        try:
            return PolytopalMesh(2, verts, cells)
        except MeshError as exc:
            last_err = exc
    raise MeshError(f"distorted quad mesh failed even at delta/4: {last_err}")


def polygon_hex(level: int) -> PolytopalMesh:
    """Hexagon-dominant tiling built from a brick wall.

    Bricks are laid in rows with half-brick offsets.  Every interior
    T-junction vertex is displaced vertically by a quarter of the row
    height, toward the row whose wall ends there, which turns interior
    bricks into convex hexagons; boundary rows keep flat outer edges and
    become pentagons, half bricks at the left and right edges quads.
    """
    nrows = 3 * 2**level
    ncols = nrows
    W, H = 1.0 / ncols, 1.0 / nrows
    eta = H / 4.0

    def walls(row: int):
        # wall x-positions in units of W/2
        if row % 2 == 0:
            return list(range(0, 2 * ncols + 1, 2))
        return [0] + list(range(1, 2 * ncols, 2)) + [2 * ncols]

    ids = {}
    coords = []

    def vertex(q: int, line: int) -> int:
        key = (q, line)
        idx = ids.get(key)
        if idx is None:
            if line == 0 or line == nrows or q == 0 or q == 2 * ncols:
                s = 0
            else:
                s = 1 if (q % 2) == (line % 2) else -1
            idx = len(coords)
            ids[key] = idx
            coords.append((q * W / 2.0, line * H + s * eta))
        return idx

    cells = []
    for row in range(nrows):
        ws = walls(row)
        below = set(walls(row - 1)) if row > 0 else set()
        above = set(walls(row + 1)) if row + 1 < nrows else set()
        for qL, qR in zip(ws[:-1], ws[1:]):
            bottom_mids = sorted(q for q in below if qL < q < qR)
            top_mids = sorted((q for q in above if qL < q < qR), reverse=True)
            loop = (
                [(qL, row)]
                + [(q, row) for q in bottom_mids]
                + [(qR, row), (qR, row + 1)]
                + [(q, row + 1) for q in top_mids]
                + [(qL, row + 1)]
            )
            cells.append([vertex(q, line) for q, line in loop])
    return PolytopalMesh(2, np.array(coords), cells)


def _grid_3d(n: int):
    xs = np.linspace(0.0, 1.0, n + 1)
    verts = np.array([[x, y, z] for z in xs for y in xs for x in xs])
    vid = lambda i, j, k: (k * (n + 1) + j) * (n + 1) + i
    return verts, vid


def _assemble_3d(verts, cell_faces):
    """Build the deduplicated face list and per-cell orientation signs."""
    face_ids = {}
    face_loops = []
    cells = []
    for loops in cell_faces:
        fids, signs = [], []
        cell_verts = sorted({v for loop in loops for v in loop})
        ref = verts[cell_verts].mean(axis=0)
        for loop in loops:
            key = frozenset(loop)
            fi = face_ids.get(key)
            if fi is None:
                fi = len(face_loops)
                face_ids[key] = fi
                face_loops.append(list(loop))
            stored = face_loops[fi]
            pts = verts[stored]
            nrm = np.zeros(3)
            for i in range(len(stored)):
                nrm += np.cross(pts[i], pts[(i + 1) % len(stored)])
            center = pts.mean(axis=0)
            signs.append(1 if np.dot(nrm, center - ref) > 0 else -1)
            fids.append(fi)
        cells.append({"faces": fids, "signs": signs})
    return face_loops, cells


def tet_uniform(level: int) -> PolytopalMesh:
    n = 2**level
    verts, vid = _grid_3d(n)
    axes = np.eye(3, dtype=int)
    cell_faces = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                base = np.array([i, j, k])
                for perm in itertools.permutations(range(3)):
                    path = [base.copy()]
                    for p in perm:
                        path.append(path[-1] + axes[p])
                    ids = [vid(*pt) for pt in path]
                    tris = [
                        (ids[0], ids[1], ids[2]),
                        (ids[0], ids[1], ids[3]),
                        (ids[0], ids[2], ids[3]),
                        (ids[1], ids[2], ids[3]),
                    ]
                    cell_faces.append(tris)
    face_loops, cells = _assemble_3d(verts, cell_faces)
    return PolytopalMesh(3, verts, cells, face_loops)


def hex_uniform(level: int) -> PolytopalMesh:
    n = 2**level
    verts, vid = _grid_3d(n)
    cell_faces = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                quads = [
                    (vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)),
                    (vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i + 1, j + 1, k + 1), vid(i + 1, j, k + 1)),
                    (vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j, k + 1), vid(i, j, k + 1)),
                    (vid(i, j + 1, k), vid(i + 1, j + 1, k), vid(i + 1, j + 1, k + 1), vid(i, j + 1, k + 1)),
                    (vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)),
                    (vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j + 1, k + 1), vid(i, j + 1, k + 1)),
                ]
                cell_faces.append(quads)
    face_loops, cells = _assemble_3d(verts, cell_faces)
    return PolytopalMesh(3, verts, cells, face_loops)


FAMILY_DIMENSION = {
    "tri-uniform": 2,
    "quad-distorted": 2,
    "polygon-hex": 2,
    "tet-uniform": 3,
    "hex-uniform": 3,
}


def family_names():
    return sorted(FAMILY_DIMENSION)


def generate_mesh(family: str, level: int, delta: float = 0.2, seed: int = 42) -> PolytopalMesh:
    """Construct one refinement level of a named mesh family."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    if family == "tri-uniform":
        return tri_uniform(level)
    if family == "quad-distorted":
        return quad_distorted(level, delta=delta, seed=seed)
    if family == "polygon-hex":
        return polygon_hex(level)
    if family == "tet-uniform":
        return tet_uniform(level)
    if family == "hex-uniform":
        return hex_uniform(level)
    raise ValueError(f"unknown mesh family '{family}'; known: {family_names()}")
