"""Triangulations of the benchmark domains, red refinement and element geometry.

Conventions
-----------
* Triangles are counterclockwise; local edge ``i`` is opposite local vertex
  ``i`` and runs from vertex ``i+1`` to vertex ``i+2`` (indices mod 3).
* For an interior edge, ``K1`` is the adjacent triangle with the larger
  global label and ``K2`` the smaller one; the edge normal points from
  ``K1`` to ``K2``, i.e. it is the outward normal of ``K1``.  Boundary edges
  store their single triangle as ``K1`` and ``-1`` for ``K2``.
* Crack faces are separate boundary edges.  Vertices strictly inside the
  crack are duplicated (one copy per side); the crack tip is shared.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

TAGS = ("interior", "dirichlet", "neumann", "crack_upper", "crack_lower")
DOMAINS = ("square2", "square5", "triangle_jump", "crack8")

_SIDE = {"crack_upper": 1, "crack_lower": 2}


@dataclass(frozen=True)
class ElementGeometry:
    """Geometric data of one triangle (see :class:`Geometry` for the arrays)."""

    area: float
    vertices: np.ndarray
    edge_lengths: np.ndarray
    heights: np.ndarray
    midpoints: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray
    angles: np.ndarray
    centroid: np.ndarray
    H2: float
    grad_bary: np.ndarray


class Geometry:
    """Per-element geometric quantities for every triangle of a mesh, as arrays."""

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray):
        P = vertices[triangles]  # (M, 3, 2)
        nxt = P[:, [1, 2, 0]]
        prv = P[:, [2, 0, 1]]
        evec = prv - nxt  # edge i from p_{i+1} to p_{i+2}
        length = np.linalg.norm(evec, axis=2)
        t = evec / length[..., None]
        n = np.stack([t[..., 1], -t[..., 0]], axis=2)
        e1 = P[:, 1] - P[:, 0]
        e2 = P[:, 2] - P[:, 0]
        area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        self.vertices = P
        self.area = area
        self.edge_lengths = length
        self.tangents = t
        self.normals = n
        self.heights = 2.0 * area[:, None] / length
        self.grad_bary = -n / self.heights[..., None]
        self.midpoints = 0.5 * (nxt + prv)
        self.centroid = P.mean(axis=1)
        self.H2 = (length**2).sum(axis=1)
        self.diameter = length.max(axis=1)
        a = nxt - P
        b = prv - P
        cosang = (a * b).sum(axis=2) / (np.linalg.norm(a, axis=2) * np.linalg.norm(b, axis=2))
        self.angles = np.arccos(np.clip(cosang, -1.0, 1.0))

    def __len__(self):
        return len(self.area)

    def element(self, k: int) -> ElementGeometry:
        return ElementGeometry(
            area=float(self.area[k]),
            vertices=self.vertices[k],
            edge_lengths=self.edge_lengths[k],
            heights=self.heights[k],
            midpoints=self.midpoints[k],
            normals=self.normals[k],
            tangents=self.tangents[k],
            angles=self.angles[k],
            centroid=self.centroid[k],
            H2=float(self.H2[k]),
            grad_bary=self.grad_bary[k],
        )

    def barycentric(self, k: int, x) -> np.ndarray:
        """Barycentric coordinates of point(s) ``x`` in triangle ``k``."""
        x = np.asarray(x, dtype=float)
        p0 = self.vertices[k, 0]
        G = self.grad_bary[k]
        lam12 = (x - p0) @ G[1:].T
        lam0 = 1.0 - lam12.sum(axis=-1, keepdims=True)
        return np.concatenate([lam0, lam12], axis=-1)


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (M, 3)
    edges: np.ndarray  # (E, 2) vertex ids, sorted
    edge_tris: np.ndarray  # (E, 2): K1 (larger label), K2 (smaller) or -1
    edge_tags: np.ndarray  # (E,) str
    tri_edges: np.ndarray  # (M, 3) global edge opposite each local vertex
    level: int = 1
    crack_pairs: tuple = ()
    domain: str = "custom"

    # -- sizes -----------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def geometry(self) -> Geometry:
        return Geometry(self.vertices, self.triangles)

    @property
    def h(self) -> float:
        return float(self.geometry.diameter.max())

    @cached_property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_tris[:, 1] >= 0)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_tris[:, 1] < 0)

    @cached_property
    def tri_edge_sign(self) -> np.ndarray:
        """+1 where the local outward normal equals the global edge normal."""
        owner = self.edge_tris[self.tri_edges, 0]
        return np.where(owner == np.arange(self.n_triangles)[:, None], 1.0, -1.0)

    @cached_property
    def edge_normals(self) -> np.ndarray:
        g = self.geometry
        K1 = self.edge_tris[:, 0]
        loc = np.argmax(self.tri_edges[K1] == np.arange(self.n_edges)[:, None], axis=1)
        return g.normals[K1, loc]

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        v = self.vertices[self.edges]
        return np.linalg.norm(v[:, 1] - v[:, 0], axis=1)

    def edges_with_tags(self, tags) -> np.ndarray:
        tags = set(tags)
        unknown = tags - set(TAGS)
        if unknown:
            raise ValueError(f"unknown boundary tags {sorted(unknown)}")
        return np.flatnonzero(np.isin(self.edge_tags, sorted(tags)))

    # -- checks ----------------------------------------------------------
    def validate(self) -> None:
        g = self.geometry
        if np.any(g.area <= 0):
            raise ValueError("triangle with non-positive signed area")
        n_int = len(self.interior_edges)
        n_bnd = len(self.boundary_edges)
        if 3 * self.n_triangles != 2 * n_int + n_bnd:
            raise ValueError("inconsistent edge table")
        K1, K2 = self.edge_tris[self.interior_edges].T
        if np.any(K1 <= K2):
            raise ValueError("K1 must carry the larger label")
        if not set(np.unique(self.edge_tags)) <= set(TAGS):
            raise ValueError("unknown edge tag")
        if np.any(self.edge_tags[self.interior_edges] != "interior"):
            raise ValueError("interior edge carries a boundary tag")
        if np.any(self.edge_tags[self.boundary_edges] == "interior"):
            raise ValueError("boundary edge tagged interior")

    # -- refinement ------------------------------------------------------
    def refine(self) -> "Mesh":
        return refine_uniform(self)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        tags = {str(e): str(t) for e, t in enumerate(self.edge_tags) if t != "interior"}
        return {
            "domain": self.domain,
            "level": self.level,
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "edges": self.edges.tolist(),
            "tri_edges": self.tri_edges.tolist(),
            "boundary_tags": tags,
            "crack_pairs": [list(p) for p in self.crack_pairs],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict())
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "Mesh":
        vertices = np.asarray(data["vertices"], dtype=float)
        triangles = np.asarray(data["triangles"], dtype=np.int64)
        tri_edges = np.asarray(data["tri_edges"], dtype=np.int64)
        edges = np.asarray(data["edges"], dtype=np.int64)
        tags = np.full(len(edges), "interior", dtype="<U11")
        for k, t in data.get("boundary_tags", {}).items():
            tags[int(k)] = t
        local_tag = tags[tri_edges]
        local_side = np.vectorize(lambda t: _SIDE.get(t, 0))(local_tag)
        mesh = _assemble(
            vertices, triangles, local_tag, local_side,
            level=int(data.get("level", 1)),
            crack_pairs=tuple(tuple(p) for p in data.get("crack_pairs", [])),
            domain=data.get("domain", "custom"),
        )
        return mesh

    @classmethod
    def from_json(cls, text_or_path: str) -> "Mesh":
        text = text_or_path
        if not text.lstrip().startswith("{"):
            with open(text_or_path) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def _assemble(vertices, triangles, local_tag, local_side, level, crack_pairs, domain) -> Mesh:
    """Build the edge table from triangles and per-local-edge boundary hints.

    ``local_tag[t, i]`` is the tag the local edge receives if it turns out to
    be a boundary edge; ``local_side`` separates the two faces of a crack.
    """
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    M = len(triangles)
    N = len(vertices)
    a = triangles[:, [1, 2, 0]]
    b = triangles[:, [2, 0, 1]]
    lo = np.minimum(a, b).ravel()
    hi = np.maximum(a, b).ravel()
    side = np.asarray(local_side, dtype=np.int64).ravel()
    keys = (lo * N + hi) * 3 + side
    uniq, first, inverse, counts = np.unique(
        keys, return_index=True, return_inverse=True, return_counts=True
    )
    if np.any(counts > 2):
        raise ValueError("edge shared by more than two triangles")
    E = len(uniq)
    tri_of_local = np.repeat(np.arange(M), 3)
    edges = np.column_stack([lo[first], hi[first]])
    # K1 = larger label, K2 = smaller label (or -1)
    kmax = np.full(E, -1, dtype=np.int64)
    kmin = np.full(E, M, dtype=np.int64)
    np.maximum.at(kmax, inverse, tri_of_local)
    np.minimum.at(kmin, inverse, tri_of_local)
    edge_tris = np.column_stack([kmax, np.where(counts == 2, kmin, -1)])
    tags = np.full(E, "interior", dtype="<U11")
    bnd = counts == 1
    tags[bnd] = np.asarray(local_tag, dtype="<U11").ravel()[first[bnd]]
    if np.any(tags[bnd] == "interior"):
        raise ValueError("boundary edge without a boundary tag")
    mesh = Mesh(
        vertices=np.ascontiguousarray(vertices, dtype=float),
        triangles=triangles,
        edges=edges,
        edge_tris=edge_tris,
        edge_tags=tags,
        tri_edges=inverse.reshape(M, 3),
        level=level,
        crack_pairs=tuple(crack_pairs),
        domain=domain,
    )
    return mesh


# children of (v0, v1, v2) with edge midpoints m0 (v1v2), m1 (v2v0), m2 (v0v1)
# entries: 0..2 -> parent vertex, 3..5 -> midpoint of parent edge 0..2
_CHILDREN = np.array([[0, 5, 4], [5, 1, 3], [4, 3, 2], [3, 4, 5]])
# parent edge containing each child local edge, -1 for new interior edges
_CHILD_EDGE_PARENT = np.array([[-1, 1, 2], [0, -1, 2], [0, 1, -1], [-1, -1, -1]])


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement: every triangle split into four through edge midpoints.

    Children of triangle ``t`` receive labels ``4t .. 4t+3``.  New vertices
    are appended in edge order, one per edge; since crack faces are distinct
    edges, the crack-interior midpoints are duplicated automatically.
    """
    N = mesh.n_vertices
    v = mesh.vertices[mesh.edges]
    mids = 0.5 * (v[:, 0] + v[:, 1])
    vertices = np.vstack([mesh.vertices, mids])
    local = np.hstack([mesh.triangles, N + mesh.tri_edges])  # (M, 6)
    triangles = local[:, _CHILDREN].reshape(-1, 3)

    parent_edges = np.where(
        _CHILD_EDGE_PARENT[None] >= 0,
        np.take_along_axis(
            mesh.tri_edges[:, None, :].repeat(4, axis=1),
            np.maximum(_CHILD_EDGE_PARENT, 0)[None].repeat(mesh.n_triangles, axis=0),
            axis=2,
        ),
        -1,
    ).reshape(-1, 3)
    tags = np.where(parent_edges >= 0, mesh.edge_tags[np.maximum(parent_edges, 0)], "interior")
    side = np.vectorize(lambda t: _SIDE.get(t, 0), otypes=[np.int64])(tags)

    pairs = list(mesh.crack_pairs)
    up = np.flatnonzero(mesh.edge_tags == "crack_upper")
    lo = np.flatnonzero(mesh.edge_tags == "crack_lower")
    if len(up):
        lo_mid = {tuple(np.round(mids[e], 12)): e for e in lo}
        for e in up:
            f = lo_mid[tuple(np.round(mids[e], 12))]
            pairs.append((N + int(e), N + int(f)))
    return _assemble(vertices, triangles, tags, side, mesh.level + 1, pairs, mesh.domain)


def _from_coarse(vertices, triangles, classify, level, domain) -> Mesh:
    """Initial mesh; ``classify(midpoint, centroid)`` gives (boundary_tag, side)."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    M = len(triangles)
    tag = np.empty((M, 3), dtype="<U11")
    side = np.zeros((M, 3), dtype=np.int64)
    for t in range(M):
        c = vertices[triangles[t]].mean(axis=0)
        for i in range(3):
            a, b = triangles[t, (i + 1) % 3], triangles[t, (i + 2) % 3]
            m = 0.5 * (vertices[a] + vertices[b])
            tag[t, i], side[t, i] = classify(m, c)
    return _assemble(vertices, triangles, tag, side, level, (), domain)


def build_initial(domain_id: str, **params) -> Mesh:
    """Level-one mesh of a built-in domain.

    ``square2``        unit square cut by the diagonal (0,0)-(1,1)
    ``square5``        five-triangle non-uniform mesh of the unit square
    ``triangle_jump``  triangle (0.5, sqrt3/2), (1, 0), (1, sqrt3) split in 4;
                       Dirichlet on the two slanted sides, Neumann on x1 = 1
    ``crack8``         (-1, 1)^2 with a crack from (0, 0) to (1, 0), 8 triangles

    ``params`` are rejected except for ``square2``/``square5`` which accept
    none either; the argument exists for configs that pass an empty dict.
    """
    if params:
        raise ValueError(f"unexpected parameters for {domain_id}: {sorted(params)}")
    if domain_id == "square2":
        V = [(0, 0), (1, 0), (1, 1), (0, 1)]
        T = [(0, 1, 2), (0, 2, 3)]
        return _from_coarse(V, T, lambda m, c: ("dirichlet", 0), 1, domain_id)
    if domain_id == "square5":
        V = [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0.9), (0.05, 0), (0.9, 1)]
        T = [(4, 6, 3), (0, 5, 4), (5, 6, 4), (5, 1, 6), (1, 2, 6)]
        return _from_coarse(V, T, lambda m, c: ("dirichlet", 0), 1, domain_id)
    if domain_id == "triangle_jump":
        s3 = np.sqrt(3.0)
        V = [(0.5, s3 / 2), (1.0, 0.0), (1.0, s3)]

        def classify(m, c):
            return ("neumann" if abs(m[0] - 1.0) < 1e-12 else "dirichlet"), 0

        coarse = _from_coarse(V, [(0, 1, 2)], classify, 0, domain_id)
        return refine_uniform(coarse)
    if domain_id == "crack8":
        V = [(-1, -1), (0, -1), (1, -1), (-1, 0), (0, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
        T = [(0, 1, 4), (0, 4, 3), (1, 2, 5), (1, 5, 4), (3, 4, 7), (3, 7, 6), (4, 5, 8), (4, 8, 7)]

        def classify(m, c):
            if abs(m[1]) < 1e-12 and 0.0 < m[0] < 1.0:
                return ("crack_upper", 1) if c[1] > 0 else ("crack_lower", 2)
            return "dirichlet", 0

        return _from_coarse(V, T, classify, 1, domain_id)
    raise ValueError(f"unknown domain {domain_id!r}; choose from {DOMAINS}")


def build_level(domain_id: str, level: int) -> Mesh:
    mesh = build_initial(domain_id)
    if level < 1:
        raise ValueError("level must be >= 1")
    for _ in range(level - 1):
        mesh = refine_uniform(mesh)
    return mesh


def mesh_hierarchy(domain_id: str, max_level: int) -> list[Mesh]:
    meshes = [build_initial(domain_id)]
    while meshes[-1].level < max_level:
        meshes.append(refine_uniform(meshes[-1]))
    return meshes


@dataclass(frozen=True)
class UniformityReport:
    parallel_pair_fraction: float
    kappa: int
    is_uniform: bool


def parallelogram_pairs(mesh: Mesh, rtol: float = 1e-12) -> np.ndarray:
    """Boolean per interior edge: do its two triangles form a parallelogram?"""
    ie = mesh.interior_edges
    K1, K2 = mesh.edge_tris[ie].T
    loc1 = np.argmax(mesh.tri_edges[K1] == ie[:, None], axis=1)
    loc2 = np.argmax(mesh.tri_edges[K2] == ie[:, None], axis=1)
    q1 = mesh.vertices[mesh.triangles[K1, loc1]]
    q2 = mesh.vertices[mesh.triangles[K2, loc2]]
    ab = mesh.vertices[mesh.edges[ie]].sum(axis=1)
    # q2 must be the reflection of q1 through the shared-edge midpoint
    return np.linalg.norm(q1 + q2 - ab, axis=1) <= rtol * mesh.h


def check_uniformity(mesh: Mesh) -> UniformityReport:
    ok = parallelogram_pairs(mesh)
    ie = mesh.interior_edges
    covered = np.zeros(mesh.n_triangles, dtype=bool)
    covered[mesh.edge_tris[ie[ok]].ravel()] = True
    kappa = int((~covered).sum())
    frac = float(ok.mean()) if len(ok) else 1.0
    return UniformityReport(frac, kappa, bool(kappa == 0 and ok.all()))
