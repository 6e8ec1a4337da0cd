"""Global stiffness, mass and mixed RT0-P0 matrices.

Matrices are returned unconstrained as scipy CSR matrices built from their
lower triangle, so they are bitwise symmetric.  Boundary conditions are a
separate step (:func:`apply_dirichlet`) that either restricts to the free
DOFs or replaces constrained rows/columns by the identity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .mesh import Mesh
from .quad import TriangleRule, default_rule
from .spaces import FeFunction, FeSpace


@dataclass(frozen=True)
class CoefficientField:
    """Piecewise-constant diffusion coefficient, one positive value per triangle."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("diffusion coefficient must be positive on every triangle")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, mesh: Mesh, value: float = 1.0) -> "CoefficientField":
        return cls(np.full(mesh.n_triangles, float(value)))

    @classmethod
    def from_function(cls, mesh: Mesh, fn) -> "CoefficientField":
        """Sample ``fn(x, y)`` at element centroids."""
        c = mesh.geometry.centroid
        return cls(np.asarray(fn(c[:, 0], c[:, 1]), dtype=float) * np.ones(mesh.n_triangles))


def jump_coefficient(mesh: Mesh) -> CoefficientField:
    """A = 2 below the line x2 = 1 and 1 above, sampled at centroids."""
    return CoefficientField.from_function(mesh, lambda x, y: np.where(y < 1.0, 2.0, 1.0))


def _symmetric_csr(rows, cols, vals, n) -> sp.csr_matrix:
    K = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()
    K.sum_duplicates()
    L = sp.tril(K, format="csr")
    S = (L + sp.tril(L, k=-1, format="csr").T).tocsr()
    S.eliminate_zeros()
    S.sort_indices()
    return S


def _local_to_global(space: FeSpace, local: np.ndarray) -> sp.csr_matrix:
    dofs = space.local_dofs
    nloc = dofs.shape[1]
    rows = np.broadcast_to(dofs[:, :, None], (len(dofs), nloc, nloc))
    cols = np.broadcast_to(dofs[:, None, :], (len(dofs), nloc, nloc))
    return _symmetric_csr(rows, cols, local, space.n_dofs)


def local_stiffness(space: FeSpace, A: CoefficientField | None = None, rule: TriangleRule | None = None):
    if space.kind not in ("CR", "ECR", "P1", "P3"):
        raise ValueError(f"stiffness is defined for CR, ECR, P1 and P3, not {space.kind}; use assemble_mixed_rt")
    rule = default_rule() if rule is None else rule
    _, grads = space.local_basis(rule.points)
    g = space.mesh.geometry
    local = np.einsum("q,mqid,mqjd->mij", rule.weights, grads, grads) * g.area[:, None, None]
    if A is not None:
        local = local * A.values[:, None, None]
    return local


def local_mass(space: FeSpace, rule: TriangleRule | None = None):
    rule = default_rule() if rule is None else rule
    vals, _ = space.local_basis(rule.points)
    g = space.mesh.geometry
    if space.kind == "RT0":
        local = np.einsum("q,mqid,mqjd->mij", rule.weights, vals, vals)
    else:
        local = np.einsum("q,mqi,mqj->mij", rule.weights, vals, vals)
    return local * g.area[:, None, None]


def assemble_stiffness(space: FeSpace, A: CoefficientField | None = None, rule: TriangleRule | None = None) -> sp.csr_matrix:
    """sum_K int_K A grad(phi_i) . grad(phi_j) over all DOFs (no constraints applied)."""
    return _local_to_global(space, local_stiffness(space, A, rule))


def assemble_mass(space: FeSpace, rule: TriangleRule | None = None) -> sp.csr_matrix:
    """sum_K int_K phi_i phi_j (vector dot product for RT0)."""
    return _local_to_global(space, local_mass(space, rule))


def assemble_p0_load(space: FeSpace, load: FeFunction, rule: TriangleRule | None = None) -> np.ndarray:
    """Right-hand side int f phi_i for a piecewise-constant f."""
    if load.space.kind != "P0":
        raise ValueError("load must be a P0 function")
    rule = default_rule() if rule is None else rule
    vals, _ = space.local_basis(rule.points)
    if space.kind == "RT0":
        raise ValueError("RT0 load vectors come from assemble_mixed_rt")
    g = space.mesh.geometry
    local = np.einsum("q,mqi->mi", rule.weights, vals) * (g.area * load.coeffs)[:, None]
    b = np.zeros(space.n_dofs)
    np.add.at(b, space.local_dofs.ravel(), local.ravel())
    return b


@dataclass(frozen=True)
class ConstrainedSystem:
    """Matrix restricted to free DOFs plus the map back to the full vector."""

    matrix: sp.csr_matrix
    free: np.ndarray
    n_full: int

    def restrict(self, vec: np.ndarray) -> np.ndarray:
        return np.asarray(vec)[self.free]

    def scatter(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        out = np.zeros((self.n_full,) + x.shape[1:])
        out[self.free] = x
        return out

    @property
    def eliminated(self) -> np.ndarray:
        mask = np.ones(self.n_full, dtype=bool)
        mask[self.free] = False
        return np.flatnonzero(mask)


def constrained_mask(space: FeSpace, tags=None) -> np.ndarray:
    if tags is None:
        return np.asarray(space.dirichlet_mask)
    tags = tuple(tags)
    mesh = space.mesh
    for t in tags:
        if not np.any(mesh.edge_tags == t):
            raise ValueError(f"no edge carries tag {t!r}")
    return FeSpace(mesh, space.kind, dirichlet_tags=tags).dirichlet_mask


def apply_dirichlet(space: FeSpace, matrix: sp.spmatrix, tags=None) -> ConstrainedSystem:
    """Symmetric elimination by restriction to the unconstrained DOFs."""
    mask = constrained_mask(space, tags)
    free = np.flatnonzero(~mask)
    M = sp.csr_matrix(matrix)[free][:, free].tocsr()
    M.sort_indices()
    return ConstrainedSystem(M, free, space.n_dofs)


def eliminate_unit_diagonal(matrix: sp.spmatrix, mask: np.ndarray) -> sp.csr_matrix:
    """Zero constrained rows/columns and put 1 on their diagonal."""
    keep = sp.diags((~np.asarray(mask)).astype(float))
    out = (keep @ sp.csr_matrix(matrix) @ keep + sp.diags(np.asarray(mask, dtype=float))).tocsr()
    out.eliminate_zeros()
    out.sort_indices()
    return out


@dataclass(frozen=True)
class MixedSystem:
    """Saddle-point system [[M, B^T], [B, 0]] for (flux, P0 potential).

    Constrained flux DOFs (zero normal flux) are removed; ``rhs`` matches
    ``matrix``.  ``split`` maps a solution back to full RT0 and P0 functions.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    rt_space: FeSpace
    p0_space: FeSpace
    free_flux: np.ndarray

    def split(self, x: np.ndarray) -> tuple[FeFunction, FeFunction]:
        nf = len(self.free_flux)
        sigma = np.zeros(self.rt_space.n_dofs)
        sigma[self.free_flux] = x[:nf]
        return FeFunction(self.rt_space, sigma), FeFunction(self.p0_space, x[nf:])


def assemble_mixed_rt(mesh: Mesh, load: FeFunction, flux_zero_tags=("neumann",), rule=None) -> MixedSystem:
    """Mixed source problem: (sigma, tau) + (u, div tau) = 0, (div sigma, v) = -(f, v).

    Dirichlet conditions on u are natural here; edges tagged with
    ``flux_zero_tags`` get the essential condition sigma . n = 0.
    """
    if load.space.kind != "P0" or load.space.mesh is not mesh:
        raise ValueError("the load must be a P0 function on the same mesh")
    rt = FeSpace(mesh, "RT0", dirichlet_tags=flux_zero_tags)
    p0 = load.space
    Mrt = assemble_mass(rt, rule)
    M = mesh.n_triangles
    B = sp.coo_matrix(
        (mesh.tri_edge_sign.ravel(), (np.repeat(np.arange(M), 3), mesh.tri_edges.ravel())),
        shape=(M, rt.n_dofs),
    ).tocsr()
    free = rt.free_dofs
    Mf = Mrt[free][:, free]
    Bf = B[:, free]
    K = sp.bmat([[Mf, Bf.T], [Bf, None]], format="csr")
    K = _symmetric_csr(*_coo_parts(K), K.shape[0])
    rhs = np.concatenate([np.zeros(len(free)), -load.coeffs * mesh.geometry.area])
    return MixedSystem(K, rhs, rt, p0, free)


def _coo_parts(K):
    c = K.tocoo()
    return c.row, c.col, c.data


def export_matrix_market(matrix: sp.spmatrix, path, comment: str = "") -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment, symmetry="general")
