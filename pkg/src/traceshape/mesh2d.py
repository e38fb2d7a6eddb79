"""Structured triangulations of a disk with one circular hole (N = 2).

Meshes are built from matched angular samplings of the hole circle and the
outer circle joined by graded concentric polylines; every quad splits into
two counterclockwise triangles.  Boundary edges carry HOLE/OUTER tags.
Meshes are immutable; deformation happens through :func:`transport_mesh`,
which moves every vertex by t V(x) (first-order transport of the flow
generated by V).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GeometryInvalid, MeshInverted, QualityFailure
from .problem import TraceProblem, validate_problem

__all__ = [
    "Mesh2D",
    "HOLE",
    "OUTER",
    "generate_annular_mesh",
    "transport_mesh",
    "signed_areas",
    "min_angle_degrees",
    "mesh_to_json",
    "mesh_from_json",
]

HOLE = "HOLE"
OUTER = "OUTER"

# Thickness ratio of outermost to innermost layer; fixed under refinement
# (equivalent to a 1.15 per-layer ratio on a 16-layer mesh).
LAYER_COMPRESSION = 8.0
MIN_ANGLE_DEG = 10.0


@dataclass(frozen=True)
class Mesh2D:
    """Triangle mesh with tagged boundary edges."""

    vertices: np.ndarray       # (nv, 2) float
    triangles: np.ndarray      # (nt, 3) int, counterclockwise
    boundary_edges: np.ndarray  # (ne, 2) int
    boundary_tags: tuple[str, ...]  # one of HOLE/OUTER per edge

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        e = np.asarray(self.boundary_edges, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise GeometryInvalid("vertices must be an (nv, 2) array")
        if t.ndim != 2 or t.shape[1] != 3:
            raise GeometryInvalid("triangles must be an (nt, 3) array")
        if e.shape[0] != len(self.boundary_tags):
            raise GeometryInvalid("one tag per boundary edge required")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary_edges", e)
        object.__setattr__(self, "boundary_tags", tuple(self.boundary_tags))

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    def _tagged(self, tag: str) -> np.ndarray:
        idx = [k for k, t in enumerate(self.boundary_tags) if t == tag]
        return self.boundary_edges[idx]

    @cached_property
    def hole_edges(self) -> np.ndarray:
        return self._tagged(HOLE)

    @cached_property
    def outer_edges(self) -> np.ndarray:
        return self._tagged(OUTER)

    @cached_property
    def hole_vertices(self) -> np.ndarray:
        return np.unique(self.hole_edges)

    @cached_property
    def outer_vertices(self) -> np.ndarray:
        return np.unique(self.outer_edges)

    def euler_characteristic(self) -> int:
        tri = self.triangles
        edges = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        edges = np.unique(np.sort(edges, axis=1), axis=0)
        return self.num_vertices - edges.shape[0] + self.num_triangles


def signed_areas(mesh: Mesh2D) -> np.ndarray:
    """Signed area of every triangle (positive for counterclockwise)."""
    v = mesh.vertices
    a, b, c = (v[mesh.triangles[:, k]] for k in range(3))
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def min_angle_degrees(mesh: Mesh2D) -> float:
    v = mesh.vertices
    corners = [v[mesh.triangles[:, k]] for k in range(3)]
    worst = np.inf
    for k in range(3):
        p0, p1, p2 = corners[k], corners[(k + 1) % 3], corners[(k + 2) % 3]
        u1, u2 = p1 - p0, p2 - p0
        cosang = np.sum(u1 * u2, axis=1) / (
            np.linalg.norm(u1, axis=1) * np.linalg.norm(u2, axis=1)
        )
        worst = min(worst, float(np.min(np.degrees(np.arccos(np.clip(cosang, -1, 1))))))
    return worst


def _layer_fractions(layers: int) -> np.ndarray:
    eta = np.linspace(0.0, 1.0, layers + 1)
    b = LAYER_COMPRESSION
    t = (b**eta - 1.0) / (b - 1.0)
    t[0], t[-1] = 0.0, 1.0
    return t


def generate_annular_mesh(problem: TraceProblem, layers: int, angular: int) -> Mesh2D:
    """Structured mesh of the disk of radius R minus the hole B_r(c).

    Layer k interpolates between matched angular samples of the hole and
    outer circles, graded geometrically toward the hole; each quad splits
    into two triangles.  (layers+1)*angular vertices, 2*layers*angular
    triangles, ``angular`` HOLE and ``angular`` OUTER edges.
    """
    problem = validate_problem(problem)
    if problem.N != 2:
        raise GeometryInvalid("mesh generation supports N = 2 only")
    if layers < 2 or angular < 8:
        raise GeometryInvalid("need layers >= 2 and angular >= 8")
    c = np.asarray(problem.c)
    theta = 2.0 * np.pi * np.arange(angular) / angular
    ring_dir = np.column_stack([np.cos(theta), np.sin(theta)])
    hole_ring = c + problem.r * ring_dir   # angle seen from the hole center
    outer_ring = problem.R * ring_dir      # angle seen from the origin

    t = _layer_fractions(layers)
    vertices = ((1.0 - t[:, None, None]) * hole_ring[None, :, :]
                + t[:, None, None] * outer_ring[None, :, :]).reshape(-1, 2)

    k = np.repeat(np.arange(layers), angular)
    j = np.tile(np.arange(angular), layers)
    jp = (j + 1) % angular
    v00 = k * angular + j
    v10 = k * angular + jp
    v01 = (k + 1) * angular + j
    v11 = (k + 1) * angular + jp
    triangles = np.vstack([
        np.column_stack([v00, v01, v11]),
        np.column_stack([v00, v11, v10]),
    ])

    jj = np.arange(angular)
    hole = np.column_stack([jj, (jj + 1) % angular])
    outer = layers * angular + hole
    boundary = np.vstack([hole, outer])
    tags = (HOLE,) * angular + (OUTER,) * angular

    mesh = Mesh2D(vertices, triangles, boundary, tags)
    areas = signed_areas(mesh)
    if np.any(areas <= 0.0):
        raise GeometryInvalid(
            "degenerate cells: hole too off-center or too close to the outer "
            "boundary for the requested resolution"
        )
    angle = min_angle_degrees(mesh)
    if angle < MIN_ANGLE_DEG:
        raise QualityFailure(
            f"minimum triangle angle {angle:.2f} deg below {MIN_ANGLE_DEG} deg"
        )
    return mesh


def transport_mesh(mesh: Mesh2D, V, t: float) -> Mesh2D:
    """Move every vertex by t V(x); tags and connectivity are preserved.

    ``V`` is a deformation field (anything with a ``velocity(points)``
    method, or a bare callable).  Raises MeshInverted when a triangle
    flips, i.e. |t| exceeded the validity of the first-order transport.
    """
    velocity = V.velocity if hasattr(V, "velocity") else V
    moved = Mesh2D(
        mesh.vertices + t * np.asarray(velocity(mesh.vertices), dtype=float),
        mesh.triangles,
        mesh.boundary_edges,
        mesh.boundary_tags,
    )
    if t != 0.0 and np.any(signed_areas(moved) <= 0.0):
        raise MeshInverted(f"transport with t={t:g} inverted a triangle")
    return moved


def mesh_to_json(mesh: Mesh2D) -> str:
    """Lossless JSON serialization (floats round-trip exactly)."""
    doc = {
        "vertices": [[float(x), float(y)] for x, y in mesh.vertices],
        "triangles": [[int(a), int(b), int(c)] for a, b, c in mesh.triangles],
        "boundary": [
            {"v": [int(i), int(j)], "tag": tag}
            for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags)
        ],
    }
    return json.dumps(doc)


def mesh_from_json(text: str) -> Mesh2D:
    doc = json.loads(text)
    unknown = set(doc) - {"vertices", "triangles", "boundary"}
    if unknown:
        raise GeometryInvalid(f"unknown mesh keys: {sorted(unknown)}")
    edges = [entry["v"] for entry in doc["boundary"]]
    tags = tuple(entry["tag"] for entry in doc["boundary"])
    if not all(tag in (HOLE, OUTER) for tag in tags):
        raise GeometryInvalid("boundary tags must be HOLE or OUTER")
    return Mesh2D(
        np.array(doc["vertices"], dtype=float),
        np.array(doc["triangles"], dtype=np.int64),
        np.array(edges, dtype=np.int64),
        tags,
    )
