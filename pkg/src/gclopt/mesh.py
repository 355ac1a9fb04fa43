"""Curvilinear hexahedral meshes of the cube ``[-1, 1]^3``.

The mesh family used throughout is a uniform ``c x c x c`` split of the
cube whose nodes are displaced by a smooth trigonometric perturbation.
The perturbation is engineered so that

* it vanishes identically on the outer boundary (the domain stays a
  cube and periodic identification remains geometrically exact), and
* every cell-corner lattice plane is invariant, so straight-sided
  (degree-1) meshes are *bitwise* independent of the perturbation
  amplitude.

Watertightness is bitwise, not just to tolerance: nodal coordinates
along any shared face are computed once per global grid line and reused
by every element touching it, and trig factors that vanish analytically
on lattice planes are snapped to exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sbp import (
    TensorOperator3D,
    face_direction,
    face_node_indices,
)

#: absolute tolerance for face identification keys
MATCH_TOL = 1e-10

#: trig factors smaller than this are analytically zero on the lattice
_SNAP = 1e-13


@dataclass(frozen=True)
class ElementMapping:
    """Nodal coordinates of one curved element, flat ordering ``(N, 3)``."""

    coords: np.ndarray
    degree: int


@dataclass(frozen=True)
class FaceConnection:
    """A conforming interior (or periodic) face shared by two elements.

    Element ``a`` sees the face on its ``xi_d = +1`` side, element ``b``
    on ``xi_d = -1``.  ``perm`` maps positions in a's face-node list to
    positions in b's list so that

        coords_a[ids_a] == coords_b[ids_b][perm] + shift .
    """

    elem_a: int
    face_a: int
    elem_b: int
    face_b: int
    perm: np.ndarray
    shift: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class HexMesh:
    op: TensorOperator3D
    coords: np.ndarray  # (K, N, 3)
    connections: list[FaceConnection]
    boundary_faces: list[tuple[int, int]]
    cells_per_dir: int
    eta: float
    periodic: bool

    @property
    def n_elements(self) -> int:
        return self.coords.shape[0]

    @property
    def degree(self) -> int:
        return self.op.ops[0].degree

    def element(self, k: int) -> ElementMapping:
        return ElementMapping(self.coords[k], self.degree)

    def face_map(self) -> dict:
        """Map ``(elem, face) -> (nbr_elem, nbr_face, perm)``, or ``None``
        on a physical boundary.  ``perm`` reorders the neighbour's face
        node list into this element's face ordering."""
        try:
            return self._face_map
        except AttributeError:
            fm: dict = {}
            for conn in self.connections:
                inv = np.argsort(conn.perm)
                fm[(conn.elem_a, conn.face_a)] = (conn.elem_b, conn.face_b, conn.perm)
                fm[(conn.elem_b, conn.face_b)] = (conn.elem_a, conn.face_a, inv)
            for ef in self.boundary_faces:
                fm[ef] = None
            self._face_map = fm
            return fm


def _snap(v: np.ndarray) -> np.ndarray:
    out = np.asarray(v).copy()
    out[np.abs(out) < _SNAP] = 0.0
    return out


def _displacement(eta: float, x1, x2, x3):
    """Smooth perturbation vanishing on the outer boundary and on the
    cell-corner lattice planes of the matching component."""
    a = 0.5 * np.pi * x1
    b = 0.5 * np.pi * x2
    c = 0.5 * np.pi * x3
    amp = 2.0 * eta / 15.0
    d1 = amp * _snap(np.cos(a)) * _snap(np.cos(3 * b)) * _snap(np.sin(4 * c))
    d2 = amp * _snap(np.sin(4 * a)) * _snap(np.cos(b)) * _snap(np.cos(3 * c))
    d3 = amp * _snap(np.cos(3 * a)) * _snap(np.sin(4 * b)) * _snap(np.cos(c))
    return d1, d2, d3


def build_perturbed_cube(
    cells_per_dir: int = 3,
    eta: float = 1.0,
    degree: int = 2,
    periodic: bool = False,
) -> HexMesh:
    """Uniform split of ``[-1, 1]^3`` with trigonometric node perturbation.

    ``eta`` scales the displacement (0 gives the Cartesian grid).  The
    mapping is isoparametric: geometry nodes coincide with the degree-p
    LGL solution nodes.
    """
    if cells_per_dir < 1:
        raise ValueError("cells_per_dir must be positive")
    op = TensorOperator3D.cube(degree)
    n = degree + 1
    c = cells_per_dir
    edges = np.linspace(-1.0, 1.0, c + 1)
    h = 2.0 / c

    # one coordinate line per (direction-agnostic) cell index, endpoints
    # snapped onto the shared edge values -> faces reuse identical floats
    xi = op.ops[0].nodes
    lines = []
    for ci in range(c):
        line = edges[ci] + 0.5 * h * (xi + 1.0)
        line[0] = edges[ci]
        line[-1] = edges[ci + 1]
        lines.append(line)

    K = c * c * c
    coords = np.empty((K, n * n * n, 3))
    for k in range(c):
        for j in range(c):
            for i in range(c):
                e = i + c * (j + c * k)
                g3, g2, g1 = np.meshgrid(lines[k], lines[j], lines[i], indexing="ij")
                x1 = g1.ravel()
                x2 = g2.ravel()
                x3 = g3.ravel()
                d1, d2, d3 = _displacement(eta, x1, x2, x3)
                coords[e, :, 0] = x1 + d1
                coords[e, :, 1] = x2 + d2
                coords[e, :, 2] = x3 + d3

    connections, boundary = _match_faces(op, coords, periodic)
    return HexMesh(op, coords, connections, boundary, c, eta, periodic)


def _corner_key(face_coords: np.ndarray, nf: tuple[int, int]) -> tuple:
    """Sorted, tolerance-rounded key of the four face corners."""
    f1, f2 = nf
    corner_rows = [0, f1 - 1, (f2 - 1) * f1, f1 * f2 - 1]
    pts = []
    for r in corner_rows:
        v = face_coords[r]
        pts.append(tuple(round(float(x) / MATCH_TOL) for x in v))
    return tuple(sorted(pts))


def _face_dims(op: TensorOperator3D, face: int) -> tuple[int, int]:
    d, _ = face_direction(face)
    nd = [op.ops[i].n for i in range(3) if i != d - 1]
    return nd[0], nd[1]


def _match_faces(op, coords, periodic):
    K = coords.shape[0]
    face_ids = {f: face_node_indices(op, f) for f in range(6)}

    entries = []  # (elem, face, face_coords, key)
    by_key: dict[tuple, list[int]] = {}
    for e in range(K):
        for f in range(6):
            fc = coords[e][face_ids[f]]
            key = _corner_key(fc, _face_dims(op, f))
            by_key.setdefault(key, []).append(len(entries))
            entries.append((e, f, fc, key))

    connections = []
    matched = set()
    for key, members in by_key.items():
        if len(members) == 2:
            ia, ib = members
            connections.append(_make_connection(op, entries[ia], entries[ib], np.zeros(3)))
            matched.update(members)
        elif len(members) > 2:
            raise RuntimeError(f"face key shared by {len(members)} faces")

    leftover = [i for i in range(len(entries)) if i not in matched]
    if periodic:
        # wrap +1 faces onto -1 faces across the domain; boundary
        # displacement is exactly zero so shifted keys match exactly
        minus = {}
        for i in leftover:
            e, f, fc, key = entries[i]
            if f % 2 == 0:
                minus[key] = i
        for i in leftover:
            e, f, fc, key = entries[i]
            if f % 2 == 1:
                d, _ = face_direction(f)
                shift = np.zeros(3)
                shift[d - 1] = -2.0
                skey = _corner_key(fc + shift, _face_dims(op, f))
                j = minus.get(skey)
                if j is None:
                    raise RuntimeError(f"periodic partner missing for element {e} face {f}")
                # stored shift satisfies x_a = x_b + shift
                connections.append(_make_connection(op, entries[i], entries[j], -shift))
                matched.update((i, j))
        leftover = [i for i in range(len(entries)) if i not in matched]
        if leftover:
            raise RuntimeError("unmatched faces remain under periodic identification")
        boundary = []
    else:
        boundary = [(entries[i][0], entries[i][1]) for i in leftover]

    return connections, boundary


def _make_connection(op, entry_a, entry_b, shift):
    # orient so the connection's a-side is the xi = +1 face
    if entry_a[1] % 2 == 0:
        entry_a, entry_b = entry_b, entry_a
        shift = -shift
    ea, fa, fca, _ = entry_a
    eb, fb, fcb, _ = entry_b
    lookup = {}
    for pos, v in enumerate(fcb):
        lookup[tuple(round(float(x) / MATCH_TOL) for x in v)] = pos
    pa = fca - np.asarray(shift)[None, :]
    perm = np.empty(fca.shape[0], dtype=np.int64)
    for i, v in enumerate(pa):
        key = tuple(round(float(x) / MATCH_TOL) for x in v)
        if key not in lookup:
            raise RuntimeError(
                f"face nodes of elements {ea}/{eb} do not coincide within {MATCH_TOL}"
            )
        perm[i] = lookup[key]
    assert np.unique(perm).size == perm.size, "face permutation is not a bijection"
    return FaceConnection(ea, fa, eb, fb, perm, np.asarray(shift, dtype=float))


def mapping_jacobian(elem: ElementMapping, op: TensorOperator3D):
    """Nodal Jacobian matrix and determinant of the mapping.

    Returns ``(dxdxi, J)`` with ``dxdxi[i, m, l] = d x_m / d xi_l`` at
    node ``i`` and ``J = det(dxdxi)``.
    """
    x = elem.coords if isinstance(elem, ElementMapping) else np.asarray(elem)
    N = x.shape[0]
    dxdxi = np.empty((N, 3, 3))
    for l in range(3):
        dxdxi[:, :, l] = op.apply_dxi(x, l + 1)
    J = np.linalg.det(dxdxi)
    return dxdxi, J


@dataclass(frozen=True)
class WatertightReport:
    max_mismatch: float
    n_connections: int
    n_boundary_faces: int

    @property
    def watertight(self) -> bool:
        return self.max_mismatch <= MATCH_TOL


def check_watertight(mesh: HexMesh) -> WatertightReport:
    """Verify nodal coincidence across every stored face connection."""
    worst = 0.0
    for conn in mesh.connections:
        ida = face_node_indices(mesh.op, conn.face_a)
        idb = face_node_indices(mesh.op, conn.face_b)
        xa = mesh.coords[conn.elem_a][ida]
        xb = mesh.coords[conn.elem_b][idb][conn.perm]
        worst = max(worst, float(np.abs(xa - (xb + conn.shift)).max()))
    return WatertightReport(worst, len(mesh.connections), len(mesh.boundary_faces))


def dump_mesh(mesh: HexMesh, path) -> None:
    """Plain-text nodal dump, one block per element (17 significant digits)."""
    with open(path, "w") as fh:
        fh.write(
            "# hexmesh cells_per_dir=%d eta=%.17g degree=%d periodic=%d elements=%d\n"
            % (mesh.cells_per_dir, mesh.eta, mesh.degree, int(mesh.periodic), mesh.n_elements)
        )
        for e in range(mesh.n_elements):
            fh.write(f"element {e}\n")
            for row in mesh.coords[e]:
                fh.write("%.17e %.17e %.17e\n" % tuple(row))


def load_mesh_coords(path) -> np.ndarray:
    """Read back the nodal blocks written by :func:`dump_mesh`."""
    elements = []
    current: list[list[float]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("element"):
                if current:
                    elements.append(np.asarray(current))
                current = []
            else:
                current.append([float(t) for t in line.split()])
    if current:
        elements.append(np.asarray(current))
    return np.stack(elements)
