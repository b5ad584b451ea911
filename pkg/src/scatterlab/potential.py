"""Sparse compactly supported potentials.

A potential here is a finite ordered family of radial bumps v_n placed at
centers x_n whose mutual distances grow like C*n^gamma.  Indices are
1-based in every user-facing record so that the growth law reads exactly
dist(x_n, rest) >= C*n^gamma.  A truncation index N marks the first bump
of the retained window: bumps before N are dropped from evaluation, and
within the window all supports keep a gap larger than twice the global
support radius.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

_PROFILES = ("ball", "smooth", "well")


@dataclass(frozen=True)
class Bump:
    """Radial bump profile with signed amplitude and compact support.

    profile: "ball"   constant amplitude on the closed ball,
             "smooth" mollifier amplitude*exp(1 - 1/(1 - (r/radius)^2)),
             "well"   two-level step, amplitude inside radius/2 and
                      amplitude/2 on the outer shell.
    """

    profile: str
    amplitude: float
    radius: float

    def __post_init__(self) -> None:
        if self.profile not in _PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}, want one of {_PROFILES}")
        if not self.radius > 0.0:
            raise ValueError("bump radius must be positive")
        # amplitude 0 is allowed: a switched-off bump keeps its geometry

    def value_at(self, r):
        """Bump value at radial distance r from its center (scalar or array)."""
        rv = np.asarray(r, dtype=float)
        shape = rv.shape
        rv = np.atleast_1d(rv).ravel()
        out = np.zeros_like(rv)
        if self.profile == "ball":
            out[rv <= self.radius] = self.amplitude
        elif self.profile == "well":
            out[rv <= self.radius] = 0.5 * self.amplitude
            out[rv <= 0.5 * self.radius] = self.amplitude
        else:
            inside = rv < self.radius
            q = (rv[inside] / self.radius) ** 2
            out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - q))
        if shape == ():
            return float(out[0])
        return out.reshape(shape)


def _pairwise_dist(centers: np.ndarray) -> np.ndarray:
    diff = centers[:, None, :] - centers[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _least_valid_window(centers: np.ndarray, radii: np.ndarray, big_r: float) -> int:
    """Least 1-based N so that every pair m != n >= N has disjoint supports
    separated by more than 2*big_r (which subsumes disjointness)."""
    count = centers.shape[0]
    dist = _pairwise_dist(centers)
    gap = dist - radii[:, None] - radii[None, :]
    ok = gap > 2.0 * big_r
    np.fill_diagonal(ok, True)
    for n0 in range(1, count + 1):
        if np.all(ok[n0 - 1:, n0 - 1:]):
            return n0
    return count + 1  # unreachable for count >= 1: a one-bump window is vacuous


@dataclass(frozen=True)
class SparsePotential:
    """Finite sparse potential V = sum of bumps n = trunc_N .. count.

    Construction validates the distance growth law and, when trunc_N is
    given, the retained-window separation; trunc_N=None computes the least
    admissible window start automatically.
    """

    dim: int
    bumps: Tuple[Bump, ...]
    centers: np.ndarray
    sparsity_C: float
    gamma: float
    big_r: float
    trunc_N: int = None
    dropped_indices: Tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        object.__setattr__(self, "bumps", tuple(self.bumps))
        centers = np.asarray(self.centers, dtype=float)
        if centers.ndim != 2 or centers.shape[1] != self.dim:
            raise ValueError(f"centers must have shape (count, {self.dim})")
        object.__setattr__(self, "centers", centers)
        count = len(self.bumps)
        if count < 1 or centers.shape[0] != count:
            raise ValueError("need one center per bump, at least one bump")
        if not self.sparsity_C > 0.0:
            raise ValueError("sparsity constant must be positive")
        if not self.gamma > 2.0 / (self.dim - 1):
            raise ValueError(
                f"gamma must exceed 2/(d-1) = {2.0 / (self.dim - 1)}, got {self.gamma}")
        if not self.big_r > 0.0:
            raise ValueError("global support radius must be positive")
        radii = np.array([b.radius for b in self.bumps])
        if np.any(radii > self.big_r * (1.0 + 1e-12)):
            raise ValueError("every bump radius must be <= the global radius")

        # distance growth law, 1-based indices
        if count > 1:
            dist = _pairwise_dist(centers)
            np.fill_diagonal(dist, np.inf)
            nearest = dist.min(axis=1)
            need = self.sparsity_C * (np.arange(1, count + 1) ** self.gamma)
            bad = np.nonzero(nearest < need * (1.0 - 1e-12))[0]
            if bad.size:
                n = int(bad[0]) + 1
                raise ValueError(
                    f"center {n} violates the growth law: nearest neighbor at "
                    f"{nearest[bad[0]]:.6g} < {need[bad[0]]:.6g}")

        least = _least_valid_window(centers, radii, self.big_r)
        if self.trunc_N is None:
            object.__setattr__(self, "trunc_N", least)
        else:
            if not 1 <= self.trunc_N <= count + 1:
                raise ValueError(f"trunc_N must lie in [1, {count + 1}]")
            if self.trunc_N < least:
                raise ValueError(
                    f"window starting at {self.trunc_N} has supports closer than "
                    f"2*R; least admissible start is {least}")
        object.__setattr__(self, "dropped_indices", tuple(range(1, self.trunc_N)))

    @property
    def count(self) -> int:
        return len(self.bumps)

    @property
    def retained(self):
        """(1-based index, bump, center) for the retained window."""
        return [
            (n, self.bumps[n - 1], self.centers[n - 1])
            for n in range(self.trunc_N, self.count + 1)
        ]

    @property
    def sup_bound(self) -> float:
        """Uniform bound: sup |V| never exceeds the largest |amplitude|."""
        return max(abs(b.amplitude) for b in self.bumps)


def gen_sparse_centers(d: int, C: float, gamma: float, count: int, seed: int) -> np.ndarray:
    """Deterministic seeded centers satisfying dist(x_n, rest) >= C*n^gamma.

    Placement: x_1 at the origin; x_n starts on a seeded random direction
    at radius 1.5*C*n^gamma and is pushed radially outward until it clears
    every earlier center by C*n^gamma.  A forward pass suffices because
    the pair requirement max(m, n)^gamma is owned by the later index.
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    if not gamma > 2.0 / (d - 1):
        raise ValueError(f"gamma must exceed 2/(d-1) = {2.0 / (d - 1)}, got {gamma}")
    if count < 1:
        raise ValueError("count must be at least 1")
    if not C > 0.0:
        raise ValueError("sparsity constant must be positive")
    rng = np.random.default_rng(seed)
    pts = np.zeros((count, d))
    for n in range(2, count + 1):
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
        x = 1.5 * C * n ** gamma * direction
        need = C * n ** gamma
        while True:
            gaps = np.linalg.norm(pts[: n - 1] - x, axis=1)
            if np.all(gaps >= need):
                break
            x = x * 1.3
        pts[n - 1] = x
    if count > 1:
        dist = _pairwise_dist(pts)
        np.fill_diagonal(dist, np.inf)
        need = C * (np.arange(1, count + 1) ** gamma)
        assert np.all(dist.min(axis=1) >= need), "growth law violated after placement"
    return pts


def choose_truncation_N(p: SparsePotential) -> int:
    """Least 1-based window start with pairwise-disjoint, 2R-separated
    supports; audited by exhaustive pairwise geometry."""
    radii = np.array([b.radius for b in p.bumps])
    return _least_valid_window(p.centers, radii, p.big_r)


def eval_potential(p: SparsePotential, x):
    """V(x) summed over the retained window; x is a point (d,) or a batch
    (m, d).  Zero outside the support union."""
    xv = np.asarray(x, dtype=float)
    single = xv.ndim == 1
    pts = xv[None, :] if single else xv
    if pts.shape[-1] != p.dim:
        raise ValueError(f"points must have {p.dim} coordinates")
    acc = np.zeros(pts.shape[0])
    for _, bump, center in p.retained:
        r = np.linalg.norm(pts - center[None, :], axis=1)
        near = r <= bump.radius
        if np.any(near):
            acc[near] += bump.value_at(r[near])
    return float(acc[0]) if single else acc


def split_sqrt(p: SparsePotential, x):
    """(|V|^(1/2), sgn(V)|V|^(1/2)) at x; the product recovers V(x)."""
    v = eval_potential(p, x)
    vv = np.asarray(v, dtype=float)
    absroot = np.sqrt(np.abs(vv))
    signedroot = np.sign(vv) * absroot
    if np.isscalar(v) or vv.ndim == 0:
        return float(absroot), float(signedroot)
    return absroot, signedroot
