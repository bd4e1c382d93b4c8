"""Network geometry and link gains for one Monte Carlo realization.

Both networks live on a wrapped square (torus) tiled by a grid of primary
access points. Distances use the minimum image, so there are no edge
effects.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry and radio parameters of a scenario.

    Defaults reproduce the desk-scale reference scenario: a 3x3 grid with
    200 m spacing, 7 of 9 access points active, 2 cognitive-radio links.
    """

    grid: int = 3
    spacing_m: float = 200.0
    coverage_radius_m: float = 100.0
    n_active_aps: int = 7
    n_crs: int = 2
    cr_link_radius_m: float = 50.0
    shadowing_std_db: float = 6.0
    bandwidth_hz: float = 180e3
    noise_dbm: float = -130.0
    underlay_limit: float = 0.05
    pn_power_min_dbm: float = -30.0
    pn_power_max_dbm: float = 20.0
    cr_power_min_dbm: float = -10.0
    cr_power_max_dbm: float = 20.0
    cr_power_step_db: float = 2.5
    pn_readapt_every_step: bool = False
    amc_table: str | None = None

    @property
    def width_m(self) -> float:
        return self.grid * self.spacing_m


@dataclass(frozen=True)
class Position:
    x: float
    y: float


def toroidal_distance(a, b, width_m=600.0):
    """Minimum-image distance between two points on the torus, in km."""
    dx = abs(a.x - b.x) % width_m
    dy = abs(a.y - b.y) % width_m
    dx = min(dx, width_m - dx)
    dy = min(dy, width_m - dy)
    return float(np.hypot(dx, dy)) / 1000.0


def _pairwise_km(src, dst, width_m):
    # src: (n, 2), dst: (m, 2) in meters
    d = np.abs(src[:, None, :] - dst[None, :, :]) % width_m
    d = np.minimum(d, width_m - d)
    return np.hypot(d[..., 0], d[..., 1]) / 1000.0


def link_gain_db(d_km, shadow_db):
    """Path, penetration and shadowing loss as a gain in dB.

    Add the result to a transmit power in dBm to get the received power.
    """
    d_km = np.asarray(d_km, dtype=float)
    if np.any(d_km <= 0):
        raise ValueError("link distance must be positive")
    g = -128.1 - 37.6 * np.log10(d_km) - 10.0 - np.asarray(shadow_db, dtype=float)
    return float(g) if g.ndim == 0 else g


@dataclass
class NetworkRealization:
    """Sampled geometry and frozen link gains of one Monte Carlo world.

    Transmitters are ordered as all access points followed by the CR
    transmitters; receivers as one PN receiver per active access point
    followed by the CR receivers. ``gain`` and ``shadowing_db`` are indexed
    ``[transmitter, receiver]``. ``ap_cr_tx_gain[ap, i]`` is the gain from
    access point ``ap`` to the position of CR transmitter ``i``, used to find
    the PN link each CR hears loudest.
    """

    ap_positions: np.ndarray
    active_aps: np.ndarray
    pn_rx_positions: np.ndarray
    cr_tx_positions: np.ndarray
    cr_rx_positions: np.ndarray
    gain: np.ndarray
    shadowing_db: np.ndarray
    ap_cr_tx_gain: np.ndarray
    seed: int | None = None
    width_m: float = 600.0

    @property
    def n_aps(self):
        return len(self.ap_positions)

    @property
    def n_pn(self):
        return len(self.active_aps)

    @property
    def n_crs(self):
        return len(self.cr_tx_positions)

    @property
    def serving_tx(self):
        """Transmitter index serving each receiver."""
        return np.concatenate([self.active_aps, self.n_aps + np.arange(self.n_crs)])

    def to_json(self):
        doc = {
            "seed": self.seed,
            "width_m": self.width_m,
            "ap_positions": self.ap_positions.tolist(),
            "active_aps": self.active_aps.tolist(),
            "pn_rx_positions": self.pn_rx_positions.tolist(),
            "cr_tx_positions": self.cr_tx_positions.tolist(),
            "cr_rx_positions": self.cr_rx_positions.tolist(),
            "gain": self.gain.tolist(),
            "shadowing_db": self.shadowing_db.tolist(),
            "ap_cr_tx_gain": self.ap_cr_tx_gain.tolist(),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(
            ap_positions=np.array(doc["ap_positions"], dtype=float),
            active_aps=np.array(doc["active_aps"], dtype=np.int64),
            pn_rx_positions=np.array(doc["pn_rx_positions"], dtype=float),
            cr_tx_positions=np.array(doc["cr_tx_positions"], dtype=float),
            cr_rx_positions=np.array(doc["cr_rx_positions"], dtype=float),
            gain=np.array(doc["gain"], dtype=float),
            shadowing_db=np.array(doc["shadowing_db"], dtype=float),
            ap_cr_tx_gain=np.array(doc["ap_cr_tx_gain"], dtype=float),
            seed=doc["seed"],
            width_m=doc["width_m"],
        )


def _point_in_disc(rng, center, radius_m, width_m):
    # uniform over the disc area, excluding the exact center
    while True:
        r = radius_m * np.sqrt(rng.uniform())
        if r > 0:
            break
    phi = rng.uniform(0.0, 2.0 * np.pi)
    return (center + r * np.array([np.cos(phi), np.sin(phi)])) % width_m


def sample_realization(seed, cfg=None):
    """Sample a realization deterministically from ``seed``.

    Draws that put a transmitter on top of a receiver (zero distance, or a
    gain of 0 dB or more) are redrawn.
    """
    cfg = cfg or ScenarioConfig()
    rng = np.random.default_rng(seed)
    w = cfg.width_m
    centers = (np.arange(cfg.grid) + 0.5) * cfg.spacing_m
    ap = np.array([(x, y) for y in centers for x in centers], dtype=float)
    n_ap = len(ap)
    if not 0 < cfg.n_active_aps <= n_ap:
        raise ValueError("n_active_aps must be in 1..grid**2")

    while True:
        active = np.sort(rng.choice(n_ap, size=cfg.n_active_aps, replace=False))
        pn_rx = np.array([_point_in_disc(rng, ap[a], cfg.coverage_radius_m, w) for a in active])
        cr_tx = rng.uniform(0.0, w, size=(cfg.n_crs, 2))
        cr_rx = np.array([_point_in_disc(rng, p, cfg.cr_link_radius_m, w) for p in cr_tx])

        tx = np.vstack([ap, cr_tx])
        rx = np.vstack([pn_rx, cr_rx])
        d = _pairwise_km(tx, rx, w)
        d_ap_crtx = _pairwise_km(ap, cr_tx, w)
        if not (np.all(d > 0) and np.all(d_ap_crtx > 0)):
            continue
        shadow = rng.normal(0.0, cfg.shadowing_std_db, size=d.shape)
        shadow_ap_crtx = rng.normal(0.0, cfg.shadowing_std_db, size=d_ap_crtx.shape)
        gain = 10.0 ** (link_gain_db(d, shadow) / 10.0)
        ap_crtx_gain = 10.0 ** (link_gain_db(d_ap_crtx, shadow_ap_crtx) / 10.0)
        # a gain >= 1 means a receiver practically on top of a transmitter
        if np.all(gain < 1.0) and np.all(ap_crtx_gain < 1.0):
            break

    return NetworkRealization(
        ap_positions=ap,
        active_aps=active,
        pn_rx_positions=pn_rx,
        cr_tx_positions=cr_tx,
        cr_rx_positions=cr_rx,
        gain=gain,
        shadowing_db=shadow,
        ap_cr_tx_gain=ap_crtx_gain,
        seed=seed,
        width_m=w,
    )
