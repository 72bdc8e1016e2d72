"""Network realizations on a square torus.

Access points form a homogeneous Poisson process; each one gets ``K``
UEs placed uniformly at random inside its Voronoi cell (torus metric).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

log = logging.getLogger(__name__)


class GeometryError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimWindow:
    side_m: float = 2000.0
    wrap: bool = True
    inner_fraction: float = 0.5

    def __post_init__(self):
        if self.side_m <= 0:
            raise ValueError("window side must be positive")
        if not 0.0 < self.inner_fraction <= 1.0:
            raise ValueError("inner_fraction must lie in (0, 1]")

    @property
    def area(self) -> float:
        return self.side_m**2

    def inner_mask(self, points) -> np.ndarray:
        """Points inside the centred square holding ``inner_fraction`` of the area."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        half = 0.5 * self.side_m * np.sqrt(self.inner_fraction)
        c = 0.5 * self.side_m
        return np.all(np.abs(points - c) <= half, axis=1)


@dataclass
class NetworkRealization:
    window: SimWindow
    sap_positions: np.ndarray  # (n_sap, 2)
    ue_positions: np.ndarray  # (n_sap, k_s, 2)
    link_distance: np.ndarray  # (n_sap, k_s)
    realization_seed: int

    @property
    def n_sap(self) -> int:
        return self.sap_positions.shape[0]

    @property
    def k_s(self) -> int:
        return self.ue_positions.shape[1]

    def ue_flat(self) -> np.ndarray:
        return self.ue_positions.reshape(-1, 2)

    def serving_sap(self) -> np.ndarray:
        """SAP index of each UE in flat (row-major) order."""
        return np.repeat(np.arange(self.n_sap), self.k_s)

    def distances(self) -> np.ndarray:
        """Torus distance from every UE (flat order) to every SAP."""
        return pairwise_distance(self.ue_flat(), self.sap_positions, self.window)

    def inner_ues(self) -> np.ndarray:
        return self.window.inner_mask(self.ue_flat())


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _displacement(a, b, window):
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    if window.wrap:
        d = np.minimum(d, window.side_m - d)
    return d


def torus_distance(a, b, window: SimWindow) -> float:
    """Minimum-image Euclidean distance between two points."""
    return float(np.hypot(*_displacement(a, b, window)))


def pairwise_distance(a, b, window: SimWindow) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    d = _displacement(a[:, None, :], b[None, :, :], window)
    return np.hypot(d[..., 0], d[..., 1])


def sample_ppp(density: float, window: SimWindow, seed) -> np.ndarray:
    """Homogeneous Poisson points in the window, shape ``(n, 2)``."""
    if density <= 0:
        raise ValueError("density must be positive")
    rng = _rng(seed)
    n = rng.poisson(density * window.area)
    return rng.uniform(0.0, window.side_m, size=(n, 2))


def _tree(saps, window):
    if window.wrap:
        return cKDTree(saps, boxsize=window.side_m)
    return cKDTree(saps)


def assign_ues(saps, k_s: int, window: SimWindow, seed, max_proposals: int = 10**6) -> NetworkRealization:
    """Place ``k_s`` UEs uniformly in every Voronoi cell by rejection sampling.

    Uniform proposals over the window are routed to their nearest SAP; a cell
    keeps the first ``k_s`` proposals that land in it, so each kept point is
    uniform on its cell.  Proposals are shared by all cells and capped at
    ``max_proposals`` per cell.
    """
    saps = np.asarray(saps, dtype=float).reshape(-1, 2)
    if saps.shape[0] == 0:
        raise ValueError("need at least one SAP")
    if k_s < 1:
        raise ValueError("k_s must be at least 1")
    rng = _rng(seed)
    n = saps.shape[0]
    tree = _tree(saps, window)
    ues = np.full((n, k_s, 2), np.nan)
    filled = np.zeros(n, dtype=int)
    proposed = 0
    batch = max(4096, 8 * n * k_s)
    while filled.min() < k_s:
        if proposed >= max_proposals:
            short = int(np.sum(filled < k_s))
            raise GeometryError(
                f"{short} cell(s) still short of {k_s} UEs after {proposed} proposals"
            )
        pts = rng.uniform(0.0, window.side_m, size=(batch, 2))
        proposed += batch
        _, owner = tree.query(pts)
        for cell in np.unique(owner[filled[owner] < k_s]):
            need = k_s - filled[cell]
            hits = pts[owner == cell][:need]
            ues[cell, filled[cell]:filled[cell] + len(hits)] = hits
            filled[cell] += len(hits)
    link = np.hypot(*np.moveaxis(_displacement(ues, saps[:, None, :], window), -1, 0))
    seed_val = seed if isinstance(seed, (int, np.integer)) else -1
    return NetworkRealization(window, saps, ues, link, int(seed_val))


def sample_network(density: float, k_s: int, window: SimWindow, seed: int, retries: int = 5) -> NetworkRealization:
    """One realization; a degenerate draw is replaced by a fresh one."""
    for attempt in range(retries):
        ss = np.random.SeedSequence([int(seed), attempt])
        rng = np.random.default_rng(ss)
        saps = sample_ppp(density, window, rng)
        if saps.shape[0] == 0:
            continue
        try:
            net = assign_ues(saps, k_s, window, rng)
        except GeometryError as exc:
            log.warning("realization %d attempt %d: %s", seed, attempt, exc)
            continue
        net.realization_seed = int(seed)
        return net
    raise GeometryError(f"no usable realization for seed {seed} after {retries} attempts")
