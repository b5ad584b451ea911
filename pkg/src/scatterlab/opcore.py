"""Nystrom discretization of sandwiched resolvent operators.

The support union of a sparse potential is covered by per-bump cubic
voxel lattices.  A dense action matrix A approximates an integral
operator with radial kernel k through

    A[i, j] = left(x_i) * k(|x_i - x_j|) * right(x_j) * w_j,

with the weakly singular self-cell integral evaluated by a subdivided
midpoint rule.  Norms are computed on the weight-symmetrized matrix
W^(1/2) A W^(-1/2), whose entries are sqrt(w_i w_j) * kernel part, so
matrix norms approximate L2 operator norms.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .potential import SparsePotential, split_sqrt
from .specfun import KernelSpec, SpectralPoint, free_kernel

_SUBDIV = 8  # per-axis subdivision of a voxel, both for volume fractions
             # and for the singular self-cell rule

_KINDS = ("free", "perturbed", "bs", "custom")

_MAGIC = b"SCLB0001"


@dataclass(frozen=True, eq=False)
class NystromGrid:
    """Quadrature nodes covering the retained support union.

    Cut-cell scheme: every lattice voxel that meets its bump's ball
    contributes one node at the centroid of the in-ball part (sampled on
    an 8x-per-axis midpoint grid), with weight = voxel volume times the
    in-ball fraction.  Interior voxels reduce to plain midpoint cells.

    nodes:       (K, d) in-ball cell centroids
    weights:     (K,) positive cell volumes (cut cells downweighted)
    bump_index:  (K,) 1-based owning bump index
    cell_center: (K, d) geometric voxel centers (subcell rules hang off these)
    cell_edge:   (K,) voxel edge lengths
    h:           requested resolution (actual edges are <= h)
    """

    nodes: np.ndarray
    weights: np.ndarray
    bump_index: np.ndarray
    cell_center: np.ndarray
    cell_edge: np.ndarray
    h: float

    @property
    def count(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense discretized integral operator tied to its grid.

    entries hold the action matrix A (quadrature weights folded into the
    columns).  z is the raw complex spectral parameter: lam + i*eps for
    resolvent sandwiches, a negative real energy for kind "bs".
    """

    entries: np.ndarray
    grid: NystromGrid
    z: complex
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        k = self.grid.count
        if self.entries.shape != (k, k):
            raise ValueError("entries must be square and match the grid size")

    def weighted(self) -> np.ndarray:
        """W^(1/2) A W^(-1/2); the norm-carrying symmetrized form."""
        rw = np.sqrt(self.grid.weights)
        return self.entries * (rw[:, None] / rw[None, :])


def _subcell_offsets(dim: int, edge: float) -> np.ndarray:
    """Midpoints of the 8^d subdivision of a voxel centered at 0."""
    side = (np.arange(_SUBDIV) + 0.5) / _SUBDIV - 0.5
    axes = np.meshgrid(*([side * edge] * dim), indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=1)


def build_grid(p: SparsePotential, h: float) -> NystromGrid:
    """Per-bump voxel lattice at resolution h over the retained window."""
    if not h > 0.0:
        raise ValueError("resolution h must be positive")
    if not p.retained:
        raise ValueError("truncation removed every bump; nothing to cover")
    nodes, weights, owner, vox, edges = [], [], [], [], []
    for n, bump, center in p.retained:
        rad = bump.radius
        m = int(np.ceil(2.0 * rad / h))
        edge = 2.0 * rad / m
        # one layer of margin so boundary-straddling voxels are candidates
        axis = -rad + (np.arange(-1, m + 1) + 0.5) * edge
        mesh = np.meshgrid(*([axis] * p.dim), indexing="ij")
        pts = np.stack([a.ravel() for a in mesh], axis=1)
        half_diag = 0.5 * edge * np.sqrt(p.dim)
        pts = pts[np.linalg.norm(pts, axis=1) <= rad + half_diag]
        sub = _subcell_offsets(p.dim, edge)
        sub_pts = pts[:, None, :] + sub[None, :, :]
        in_ball = np.linalg.norm(sub_pts, axis=2) <= rad
        counts = in_ball.sum(axis=1)
        keep = counts > 0
        pts, sub_pts, in_ball, counts = pts[keep], sub_pts[keep], in_ball[keep], counts[keep]
        centroid = (sub_pts * in_ball[:, :, None]).sum(axis=1) / counts[:, None]
        nodes.append(centroid + center[None, :])
        weights.append(edge ** p.dim * counts / sub.shape[0])
        owner.append(np.full(pts.shape[0], n, dtype=np.int32))
        vox.append(pts + center[None, :])
        edges.append(np.full(pts.shape[0], edge))
    return NystromGrid(
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        bump_index=np.concatenate(owner),
        cell_center=np.concatenate(vox),
        cell_edge=np.concatenate(edges),
        h=float(h),
    )


def _self_cell_geometry(g: NystromGrid, p: SparsePotential) -> list:
    """Per-cell subpoint layout reused by every kernel evaluation: for each
    group of equal-edge cells, the in-ball mask and the node distances of
    the 8^d midpoint subpoints (the same set that fixed the cell weights,
    so means stay consistent with the weight convention)."""
    geo = []
    centers = {n: c for n, _, c in p.retained}
    radii = {n: b.radius for n, b, _ in p.retained}
    for edge in np.unique(g.cell_edge):
        sel = np.nonzero(g.cell_edge == edge)[0]
        sub = _subcell_offsets(g.dim, float(edge))
        pts = g.cell_center[sel][:, None, :] + sub[None, :, :]
        own_center = np.stack([centers[int(n)] for n in g.bump_index[sel]])
        own_rad = np.array([radii[int(n)] for n in g.bump_index[sel]])
        in_ball = np.linalg.norm(pts - own_center[:, None, :], axis=2) <= own_rad[:, None]
        dist = np.linalg.norm(pts - g.nodes[sel][:, None, :], axis=2)
        # a centroid can sit arbitrarily close to one subpoint; clamp so a
        # weakly singular kernel cannot blow up one summand
        dist = np.maximum(dist, float(edge) / (4.0 * _SUBDIV))
        geo.append((sel, in_ball, dist))
    return geo


def _geometry_kernel_means(geo: list, radial: Callable[[np.ndarray], np.ndarray],
                           count: int) -> np.ndarray:
    """Masked mean of the radial kernel over each cell's in-ball subpoints."""
    out = np.empty(count, dtype=complex)
    for sel, in_ball, dist in geo:
        vals = radial(dist.ravel()).reshape(dist.shape)
        vals = np.where(in_ball, vals, 0.0)
        out[sel] = vals.sum(axis=1) / np.maximum(in_ball.sum(axis=1), 1)
    return out


def _self_cell_means(g: NystromGrid, p: SparsePotential,
                     radial: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Mean of the radial kernel over each node's own cell (voxel cut to
    the bump ball) by the subdivided midpoint rule; replaces k(0) so that
    entry = left*right*mean*w matches the off-diagonal weight convention."""
    return _geometry_kernel_means(_self_cell_geometry(g, p), radial, g.count)


def assemble_kernel_action(p: SparsePotential, g: NystromGrid,
                           radial: Callable[[np.ndarray], np.ndarray],
                           left: np.ndarray, right: np.ndarray,
                           z: complex, kind: str) -> OperatorMatrix:
    """Action matrix for a radial-kernel sandwich; building block shared by
    the resolvent assemblies here and the negative-energy diagnostics."""
    x = g.nodes
    r = cdist(x, x)
    np.fill_diagonal(r, 1.0)  # placeholder, replaced by the self-cell rule
    kmat = radial(r.ravel()).reshape(r.shape)
    np.fill_diagonal(kmat, _self_cell_means(g, p, radial))
    entries = left[:, None] * kmat * (right * g.weights)[None, :]
    return OperatorMatrix(entries=entries, grid=g, z=complex(z), kind=kind)


def assemble_free_sandwich(p: SparsePotential, g: NystromGrid,
                           z: SpectralPoint) -> OperatorMatrix:
    """Discretize |V|^(1/2) (free resolvent at z) V^(1/2) on the grid."""
    if not isinstance(z, SpectralPoint):
        raise TypeError("z must be a SpectralPoint (positive energy, eps in [0,1])")
    ks = KernelSpec(p.dim)
    absroot, signedroot = split_sqrt(p, g.nodes)
    return assemble_kernel_action(
        p, g, lambda r: free_kernel(ks, z, r), absroot, signedroot, z.z, "free")


class AssemblyContext:
    """Caches the z-independent parts of assembly (pairwise distances,
    square-root factors, self-cell subpoint layout) so a spectral scan can
    reassemble the sandwich at many z on one grid without redundant
    geometry work.  free_sandwich(z) reproduces assemble_free_sandwich
    bit for bit."""

    def __init__(self, p: SparsePotential, g: NystromGrid) -> None:
        self.p = p
        self.g = g
        self.spec = KernelSpec(p.dim)
        self.dist = cdist(g.nodes, g.nodes)
        np.fill_diagonal(self.dist, 1.0)  # placeholder, see free_sandwich
        self.absroot, self.signedroot = split_sqrt(p, g.nodes)
        self.geometry = _self_cell_geometry(g, p)
        self._scaled_right = self.signedroot * g.weights

    def free_sandwich(self, z: SpectralPoint) -> OperatorMatrix:
        if not isinstance(z, SpectralPoint):
            raise TypeError("z must be a SpectralPoint (positive energy, eps in [0,1])")

        def radial(r: np.ndarray) -> np.ndarray:
            return free_kernel(self.spec, z, r)

        kmat = radial(self.dist.ravel()).reshape(self.dist.shape)
        np.fill_diagonal(kmat, _geometry_kernel_means(self.geometry, radial,
                                                      self.g.count))
        entries = self.absroot[:, None] * kmat * self._scaled_right[None, :]
        return OperatorMatrix(entries=entries, grid=self.g, z=z.z, kind="free")


def block_split(m: OperatorMatrix) -> Tuple[OperatorMatrix, OperatorMatrix]:
    """Same-bump block part and its complement; they sum to m exactly."""
    same = m.grid.bump_index[:, None] == m.grid.bump_index[None, :]
    diag = np.where(same, m.entries, 0.0)
    off = np.where(same, 0.0, m.entries)
    return (
        OperatorMatrix(diag, m.grid, m.z, m.kind),
        OperatorMatrix(off, m.grid, m.z, m.kind),
    )


def op_norm(m: OperatorMatrix, tol: float = 1e-8, max_iter: int = 300) -> float:
    """Largest singular value of the weighted matrix: power iteration on
    M*M from a deterministic start, to relative tolerance tol; falls back
    to the exact dense decomposition when the iteration stalls (nearly
    degenerate top singular pair), so the tolerance holds either way."""
    mat = m.weighted()
    k = mat.shape[0]
    if k == 0:
        return 0.0
    rng = np.random.default_rng(0)
    v = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        u = mat @ v
        w = mat.conj().T @ u
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        # Rayleigh quotient of M*M at unit v is an estimate of sigma^2
        new_sigma = np.sqrt(max(float(np.real(np.vdot(v, w))), 0.0))
        v = w / nw
        if abs(new_sigma - sigma) <= tol * max(new_sigma, 1e-300):
            return float(new_sigma)
        sigma = new_sigma
    return float(np.linalg.norm(mat, 2))


def hs_norm(m: OperatorMatrix) -> float:
    """Weighted Frobenius norm: (sum |kernel part|^2 w_i w_j)^(1/2)."""
    return float(np.linalg.norm(m.weighted()))


def positivity_check(p: SparsePotential, g: NystromGrid, z: SpectralPoint) -> float:
    """Most negative eigenvalue of the imaginary part of the signed
    sandwich V^(1/2) (free resolvent) V^(1/2); the exact operator has
    nonnegative imaginary part for eps > 0, so the return value measures
    discretization error from below."""
    if not z.eps > 0.0:
        raise ValueError("positivity structure needs eps > 0")
    ks = KernelSpec(p.dim)
    signed = split_sqrt(p, g.nodes)[1]
    m = assemble_kernel_action(
        p, g, lambda r: free_kernel(ks, z, r), signed, signed, z.z, "custom")
    w = m.weighted()
    imag_part = (w - w.conj().T) / 2j
    return float(np.linalg.eigvalsh(imag_part)[0])


# ---------------------------------------------------------------------------
# binary serialization (scan resumption)
# ---------------------------------------------------------------------------

def save_matrix(m: OperatorMatrix, path: str) -> None:
    """Byte-stable dump: magic, dims, z, kind, grid arrays, entries."""
    k, d = m.grid.count, m.grid.dim
    kind = m.kind.encode("ascii").ljust(16, b"\x00")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(np.array([d, k], dtype="<u4").tobytes())
        fh.write(np.array([m.z], dtype="<c16").tobytes())
        fh.write(np.array([m.grid.h], dtype="<f8").tobytes())
        fh.write(kind)
        fh.write(m.grid.nodes.astype("<f8").tobytes())
        fh.write(m.grid.weights.astype("<f8").tobytes())
        fh.write(m.grid.cell_center.astype("<f8").tobytes())
        fh.write(m.grid.cell_edge.astype("<f8").tobytes())
        fh.write(m.grid.bump_index.astype("<i4").tobytes())
        fh.write(m.entries.astype("<c16").tobytes())


def load_matrix(path: str) -> OperatorMatrix:
    with open(path, "rb") as fh:
        raw = fh.read()
    buf = io.BytesIO(raw)
    if buf.read(8) != _MAGIC:
        raise ValueError(f"{path} is not an operator dump")
    d, k = np.frombuffer(buf.read(8), dtype="<u4")
    z = complex(np.frombuffer(buf.read(16), dtype="<c16")[0])
    h = float(np.frombuffer(buf.read(8), dtype="<f8")[0])
    kind = buf.read(16).rstrip(b"\x00").decode("ascii")
    nodes = np.frombuffer(buf.read(8 * k * d), dtype="<f8").reshape(int(k), int(d)).copy()
    weights = np.frombuffer(buf.read(8 * k), dtype="<f8").copy()
    cell_center = np.frombuffer(buf.read(8 * k * d), dtype="<f8").reshape(int(k), int(d)).copy()
    cell_edge = np.frombuffer(buf.read(8 * k), dtype="<f8").copy()
    bump_index = np.frombuffer(buf.read(4 * k), dtype="<i4").copy()
    entries = np.frombuffer(buf.read(16 * k * k), dtype="<c16").reshape(int(k), int(k)).copy()
    grid = NystromGrid(nodes, weights, bump_index, cell_center, cell_edge, h)
    return OperatorMatrix(entries, grid, z, kind)
