"""Network geometry and channel realizations.

BSs sit at the centers of a hexagonal lattice, users are dropped uniformly
inside their serving cell, and every BS-user link gets log-distance
pathloss, i.i.d. lognormal shadowing and Rayleigh small-scale fading.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .quant import QuantModel, from_bits, parse_bits

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0
MAX_PLACEMENT_ATTEMPTS = 10_000


class ConfigError(ValueError):
    """Invalid network or experiment configuration."""


@dataclass
class NetworkConfig:
    """Physical-layer and topology parameters of one network.

    ``target_sinr_db`` is either a scalar applied to every user or an
    ``N_c x N_u`` array. Distances are in meters, frequencies in Hz.
    """

    n_cells: int = 4
    n_users: int = 2
    n_antennas: int = 32
    bits: float = 3
    target_sinr_db: Union[float, np.ndarray] = 2.0
    inter_bs_distance: float = 2000.0
    min_bs_user_distance: float = 100.0
    carrier_freq: float = 2.4e9
    bandwidth: float = 10e6
    noise_figure_db: float = 5.0
    shadowing_std_db: float = 8.7
    pathloss_exponent: float = 3.5
    pathloss_ref_distance: float = 100.0
    seed: int = 0

    def __post_init__(self):
        self.bits = parse_bits(self.bits)
        self.validate()

    def validate(self) -> None:
        for name in ("n_cells", "n_users", "n_antennas"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
            setattr(self, name, int(v))
        if self.bits <= 0:
            raise ConfigError(f"bits must be positive, got {self.bits!r}")
        gamma_db = np.asarray(self.target_sinr_db, dtype=float)
        if gamma_db.ndim not in (0, 2) or (
            gamma_db.ndim == 2 and gamma_db.shape != (self.n_cells, self.n_users)
        ):
            raise ConfigError(
                "target_sinr_db must be a scalar or an n_cells x n_users array"
            )
        if not np.all(np.isfinite(gamma_db)):
            raise ConfigError("target_sinr_db must be finite")
        positive = {
            "inter_bs_distance": self.inter_bs_distance,
            "carrier_freq": self.carrier_freq,
            "bandwidth": self.bandwidth,
            "pathloss_exponent": self.pathloss_exponent,
            "pathloss_ref_distance": self.pathloss_ref_distance,
        }
        for name, v in positive.items():
            if not v > 0:
                raise ConfigError(f"{name} must be > 0, got {v!r}")
        if self.min_bs_user_distance < 0:
            raise ConfigError("min_bs_user_distance must be >= 0")
        if self.shadowing_std_db < 0:
            raise ConfigError("shadowing_std_db must be >= 0")

    @property
    def quant(self) -> QuantModel:
        return from_bits(self.bits)

    @property
    def n_streams(self) -> int:
        return self.n_cells * self.n_users

    def target_sinr(self) -> np.ndarray:
        """Linear target SINRs as an ``N_c x N_u`` array."""
        gamma_db = np.broadcast_to(
            np.asarray(self.target_sinr_db, dtype=float),
            (self.n_cells, self.n_users),
        )
        return 10.0 ** (gamma_db / 10.0)

    def noise_power(self) -> float:
        """Thermal noise power over the band in mW."""
        return 10.0 ** (noise_power_dbm(self.bandwidth, self.noise_figure_db) / 10.0)


def noise_power_dbm(bandwidth: float, noise_figure_db: float) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth) + noise_figure_db


def free_space_loss_db(distance: np.ndarray, carrier_freq: float) -> np.ndarray:
    wavelength = SPEED_OF_LIGHT / carrier_freq
    return 20.0 * np.log10(4.0 * np.pi * np.asarray(distance, dtype=float) / wavelength)


def pathloss_db(distance, cfg: NetworkConfig) -> np.ndarray:
    """Log-distance pathloss anchored at free space loss at the reference distance.

    Below the reference distance plain free space loss is used.
    """
    d = np.asarray(distance, dtype=float)
    d0 = cfg.pathloss_ref_distance
    anchor = free_space_loss_db(d0, cfg.carrier_freq)
    far = anchor + 10.0 * cfg.pathloss_exponent * np.log10(np.maximum(d, d0) / d0)
    near = free_space_loss_db(np.maximum(d, 1e-3), cfg.carrier_freq)
    return np.where(d >= d0, far, near)


@dataclass(frozen=True)
class Geometry:
    """BS positions ``(N_c, 2)`` and user positions ``(N_c, N_u, 2)`` in meters."""

    bs_positions: np.ndarray
    user_positions: np.ndarray

    def distances(self) -> np.ndarray:
        """``d[j, i, u]``: distance from BS ``j`` to user ``u`` of cell ``i``."""
        diff = self.user_positions[None, :, :, :] - self.bs_positions[:, None, None, :]
        return np.linalg.norm(diff, axis=-1)


def hex_centers(n_cells: int, spacing: float) -> np.ndarray:
    """First ``n_cells`` centers of a hexagonal lattice, ring by ring.

    Within a ring cells are ordered counter-clockwise from the positive
    x-axis, so consecutive ring-1 cells are also neighbors of each other.
    """
    axial = [(0, 0)]
    ring = 1
    while len(axial) < n_cells:
        cells = []
        for q in range(-ring, ring + 1):
            for r in range(max(-ring, -q - ring), min(ring, -q + ring) + 1):
                if max(abs(q), abs(r), abs(q + r)) == ring:
                    cells.append((q, r))

        def angle(c):
            x, y = c[0] + c[1] / 2.0, c[1] * math.sqrt(3.0) / 2.0
            return math.atan2(y, x) % (2.0 * math.pi)

        axial.extend(sorted(cells, key=angle))
        ring += 1
    q, r = np.array(axial[:n_cells], dtype=float).T
    return spacing * np.column_stack([q + r / 2.0, r * math.sqrt(3.0) / 2.0])


def in_hexagon(points: np.ndarray, spacing: float) -> np.ndarray:
    """Membership test for the Voronoi cell of a lattice site at the origin."""
    pts = np.atleast_2d(points)
    dirs = np.array([[math.cos(a), math.sin(a)] for a in (0.0, math.pi / 3, 2 * math.pi / 3)])
    return np.all(np.abs(pts @ dirs.T) <= spacing / 2.0, axis=1)


def place_network(cfg: NetworkConfig, rng: np.random.Generator) -> Geometry:
    """Drop BSs on the lattice and ``N_u`` users uniformly in each cell."""
    spacing = cfg.inter_bs_distance
    bs = hex_centers(cfg.n_cells, spacing)
    radius = spacing / math.sqrt(3.0)
    users = np.empty((cfg.n_cells, cfg.n_users, 2))
    for i in range(cfg.n_cells):
        placed = 0
        attempts = 0
        while placed < cfg.n_users:
            if attempts >= MAX_PLACEMENT_ATTEMPTS:
                raise ConfigError(
                    f"could not place users in cell {i}: min_bs_user_distance="
                    f"{cfg.min_bs_user_distance} leaves no room in a hexagon of "
                    f"circumradius {radius:.1f} m"
                )
            attempts += 1
            p = rng.uniform(-radius, radius, size=2)
            if not in_hexagon(p, spacing)[0]:
                continue
            if np.hypot(*p) < cfg.min_bs_user_distance:
                continue
            users[i, placed] = bs[i] + p
            placed += 1
    return Geometry(bs_positions=bs, user_positions=users)


@dataclass(frozen=True)
class ChannelSet:
    """Channel vectors of the whole network.

    ``h[j, i, u]`` is the length-``N_b`` channel from BS ``j`` to user ``u``
    of cell ``i`` (the DL channel is its conjugate transpose).
    ``noise_var`` is the receiver noise power in mW.
    """

    h: np.ndarray
    noise_var: float
    gains: np.ndarray = field(default=None, repr=False)

    @property
    def n_cells(self) -> int:
        return self.h.shape[0]

    @property
    def n_users(self) -> int:
        return self.h.shape[2]

    @property
    def n_antennas(self) -> int:
        return self.h.shape[3]

    def stacked(self, i: int) -> np.ndarray:
        """``H_i`` (``N_b x N_c*N_u``): columns ``h[i, j, v]`` in ``(j, v)`` order."""
        return self.h[i].reshape(-1, self.n_antennas).T

    def direct(self, i: int, u: int) -> np.ndarray:
        return self.h[i, i, u]

    def save(self, path: Union[str, Path]) -> None:
        """Write to ``.npz`` with arrays ``h``, ``noise_var`` and ``gains``."""
        gains = self.gains if self.gains is not None else np.full(self.h.shape[:3], np.nan)
        np.savez(path, h=self.h, noise_var=np.float64(self.noise_var), gains=gains)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ChannelSet":
        with np.load(path) as data:
            gains = data["gains"] if "gains" in data else None
            return cls(h=data["h"], noise_var=float(data["noise_var"]), gains=gains)


def large_scale_gains(cfg: NetworkConfig, geom: Geometry, rng: np.random.Generator) -> np.ndarray:
    pl = pathloss_db(geom.distances(), cfg)
    if cfg.shadowing_std_db > 0:
        pl = pl + rng.normal(0.0, cfg.shadowing_std_db, size=pl.shape)
    return 10.0 ** (-pl / 10.0)


def gen_channels(cfg: NetworkConfig, geom: Geometry, rng: np.random.Generator) -> ChannelSet:
    """Draw one channel realization for ``geom``."""
    gains = large_scale_gains(cfg, geom, rng)
    shape = (cfg.n_cells, cfg.n_cells, cfg.n_users, cfg.n_antennas)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    h = np.sqrt(gains)[..., None] * z
    return ChannelSet(h=h, noise_var=cfg.noise_power(), gains=gains)


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``; same inputs, same stream."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key)))


def realize(cfg: NetworkConfig, *key: int) -> ChannelSet:
    """Geometry plus channels for the realization identified by ``key``."""
    rng = make_rng(cfg.seed, *key)
    geom = place_network(cfg, rng)
    return gen_channels(cfg, geom, rng)


def from_vectors(h: Sequence, noise_var: float = 1.0) -> ChannelSet:
    """Wrap a raw ``(N_c, N_c, N_u, N_b)`` array, mostly for tests."""
    arr = np.asarray(h, dtype=complex)
    if arr.ndim != 4 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected shape (N_c, N_c, N_u, N_b), got {arr.shape}")
    return ChannelSet(h=arr, noise_var=float(noise_var))
