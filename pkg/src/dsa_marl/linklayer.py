"""SINR, adaptive modulation and coding, and primary-network power control."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from importlib import resources

import numpy as np

log = logging.getLogger(__name__)

OFF = -np.inf


@dataclass(frozen=True)
class AmcTable:
    """SINR thresholds (dB) and spectral efficiencies (b/s/Hz) of each mode.

    A mode is usable when the SINR is at or above its threshold.
    """

    thresholds_db: tuple
    efficiencies: tuple

    def __post_init__(self):
        t = np.asarray(self.thresholds_db, dtype=float)
        e = np.asarray(self.efficiencies, dtype=float)
        if t.shape != e.shape or t.ndim != 1 or t.size == 0:
            raise ValueError("thresholds and efficiencies must be equal-length vectors")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(e) <= 0):
            raise ValueError("AMC thresholds and efficiencies must be strictly increasing")

    def __len__(self):
        return len(self.thresholds_db)

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            return cls._from_rows(csv.DictReader(fh))

    @classmethod
    def default(cls):
        with resources.files("dsa_marl").joinpath("data/amc_lte.csv").open(newline="") as fh:
            return cls._from_rows(csv.DictReader(fh))

    @classmethod
    def _from_rows(cls, rows):
        rows = sorted(rows, key=lambda r: int(r["mode"]))
        return cls(
            thresholds_db=tuple(float(r["threshold_db"]) for r in rows),
            efficiencies=tuple(float(r["efficiency"]) for r in rows),
        )

    def mode_index(self, sinr_db):
        """Index of the selected mode, or -1 when no mode is feasible."""
        return np.searchsorted(np.asarray(self.thresholds_db), sinr_db, side="right") - 1

    def efficiency(self, sinr_db):
        idx = self.mode_index(sinr_db)
        eff = np.concatenate([[0.0], self.efficiencies])
        return eff[np.asarray(idx) + 1]


def dbm_to_mw(p_dbm):
    with np.errstate(over="ignore"):
        return np.power(10.0, np.asarray(p_dbm, dtype=float) / 10.0)


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def sinr_linear(realization, powers_dbm, noise_dbm=-130.0):
    """Linear SINR at every receiver.

    ``powers_dbm`` has one entry per transmitter (access points first, then
    CR transmitters); ``-inf`` means off.
    """
    p = dbm_to_mw(powers_dbm)
    rx = p[:, None] * realization.gain
    serving = realization.serving_tx
    cols = np.arange(rx.shape[1])
    desired = rx[serving, cols]
    interference = rx.sum(axis=0) - desired
    return desired / (dbm_to_mw(noise_dbm) + interference)


def sinr_db(realization, powers_dbm, link, noise_dbm=-130.0):
    """SINR in dB at receiver ``link``; ``-inf`` when its transmitter is off."""
    return float(to_db(sinr_linear(realization, powers_dbm, noise_dbm)[link]))


def throughput_mbps(sinr_db, table, bandwidth_hz=180e3):
    """Throughput of the highest feasible AMC mode, in Mbps."""
    out = table.efficiency(sinr_db) * bandwidth_hz / 1e6
    return float(out) if np.ndim(out) == 0 else out


def top_mode_target_db(table):
    """Lowest SINR that selects the top AMC mode."""
    return table.thresholds_db[-1]


def pn_power_allocation(realization, cr_powers_dbm, target_db, p_min=-30.0, p_max=20.0,
                        noise_dbm=-130.0, tol_db=0.01, max_iter=500, p_init=None):
    """Iterative target-SINR power control for the active access points.

    Every active access point simultaneously moves its power by the gap
    between the target and its current SINR (in dB), then clips to
    ``[p_min, p_max]``. CR powers stay fixed. Stops when no power moves by
    ``tol_db`` or more, or after ``max_iter`` rounds (logged).

    Returns ``(powers, converged)`` where ``powers`` is the full transmitter
    power vector in dBm with inactive access points off.
    """
    n_ap, active = realization.n_aps, realization.active_aps
    powers = np.full(n_ap + realization.n_crs, OFF)
    powers[n_ap:] = cr_powers_dbm
    p = np.full(len(active), p_min if p_init is None else p_init, dtype=float)
    pn_links = np.arange(len(active))
    for _ in range(max_iter):
        powers[active] = p
        s = to_db(sinr_linear(realization, powers, noise_dbm)[pn_links])
        new = np.clip(p + (target_db - s), p_min, p_max)
        step = np.max(np.abs(new - p))
        p = new
        if step < tol_db:
            powers[active] = p
            return powers, True
    powers[active] = p
    log.warning("PN power allocation did not converge in %d iterations (seed=%s)",
                max_iter, realization.seed)
    return powers, False
