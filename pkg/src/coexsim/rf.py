"""Per-link radio math for the 60 GHz downlink.

All quantities are in dB / dBm unless the name says otherwise. Functions accept
scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# UMi-LOS validity range (horizontal distance, meters).
MIN_D2D_M = 10.0
BREAKPOINT_M = 3600.0

THERMAL_NOISE_DBM_HZ = -174.0

# Pattern-loss scale angle and zenith reference (degrees).
BEAMWIDTH_DEG = 65.0
ZENITH_REF_DEG = 90.0
PATTERN_SLOPE_DB = 12.0


class PathLossRangeError(ValueError):
    """Horizontal distance outside the UMi-LOS model range."""


@dataclass(frozen=True)
class LinkGeometry:
    d2d: float
    d3d: float
    theta_off: float
    phi_off: float

    @classmethod
    def from_points(cls, bs_xyz, target_xyz, victim_xyz) -> "LinkGeometry":
        bs = np.asarray(bs_xyz, dtype=float)
        victim = np.asarray(victim_xyz, dtype=float)
        d = victim - bs
        theta, phi = angular_offsets(bs, target_xyz, victim)
        return cls(
            d2d=float(np.hypot(d[0], d[1])),
            d3d=float(np.sqrt(d @ d)),
            theta_off=float(theta),
            phi_off=float(phi),
        )


def db_to_linear(x_db):
    return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("linear_to_db requires strictly positive input")
    return 10.0 * np.log10(x)


# Power conversions are the same maps; kept separate so call sites read in units.
dbm_to_mw = db_to_linear
mw_to_dbm = linear_to_db


def wrap_180(angle_deg):
    """Wrap angles into [-180, 180)."""
    return (np.asarray(angle_deg, dtype=float) + 180.0) % 360.0 - 180.0


def distance_3d(d2d, bs_height: float, ue_height: float):
    return np.hypot(d2d, bs_height - ue_height)


def path_loss_umi_los(d3d, fc_ghz, *, d2d=None):
    """3GPP TR 38.901 UMi-LOS path loss below the breakpoint, in dB.

    ``fc_ghz`` is the carrier in GHz and ``d3d`` is in meters. When ``d2d`` is
    given, it is checked against the model range [10 m, 3600 m].
    """
    d3d = np.asarray(d3d, dtype=float)
    fc_ghz = np.asarray(fc_ghz, dtype=float)
    if np.any(fc_ghz <= 0):
        raise ValueError("carrier frequency must be positive")
    if np.any(d3d <= 0):
        raise ValueError("d3d must be positive")
    if d2d is not None:
        d2d = np.asarray(d2d, dtype=float)
        if np.any((d2d < MIN_D2D_M) | (d2d > BREAKPOINT_M)):
            raise PathLossRangeError(
                f"horizontal distance outside UMi-LOS range "
                f"[{MIN_D2D_M:g}, {BREAKPOINT_M:g}] m"
            )
    return 32.4 + 21.0 * np.log10(d3d) + 20.0 * np.log10(fc_ghz)


def tx_array_gain(n_ant: int, g_ele_db: float) -> float:
    """Phased-array transmit gain: array factor plus element gain."""
    if n_ant < 1:
        raise ValueError("n_ant must be >= 1")
    return 10.0 * np.log10(n_ant) + g_ele_db


def beam_pattern_loss(theta_off, phi_off, a_m_db: float = 30.0):
    """Off-boresight gain loss, capped at ``a_m_db``.

    ``theta_off`` is encoded around the 90 degree zenith reference, so the
    steered direction is (90, 0) and yields zero loss.
    """
    theta_off = np.asarray(theta_off, dtype=float)
    phi_off = np.asarray(phi_off, dtype=float)
    loss = PATTERN_SLOPE_DB * ((theta_off - ZENITH_REF_DEG) / BEAMWIDTH_DEG) ** 2
    loss = loss + PATTERN_SLOPE_DB * (phi_off / BEAMWIDTH_DEG) ** 2
    return np.minimum(loss, a_m_db)


def _azimuth_elevation(v):
    horiz = np.hypot(v[..., 0], v[..., 1])
    az = np.degrees(np.arctan2(v[..., 1], v[..., 0]))
    el = np.degrees(np.arctan2(v[..., 2], horiz))
    return az, el


def angular_offsets(bs_xyz, boresight_target_xyz, victim_xyz):
    """Angles of ``victim`` relative to a beam steered from ``bs`` at ``target``.

    Returns ``(theta_off, phi_off)`` in degrees with theta encoded so that
    boresight is 90. Inputs are (..., 3) arrays and broadcast.
    """
    bs = np.asarray(bs_xyz, dtype=float)
    to_target = np.asarray(boresight_target_xyz, dtype=float) - bs
    to_victim = np.asarray(victim_xyz, dtype=float) - bs
    if np.any(np.linalg.norm(to_target, axis=-1) == 0) or np.any(
        np.linalg.norm(to_victim, axis=-1) == 0
    ):
        raise ValueError("zero-length direction vector")

    az_t, el_t = _azimuth_elevation(to_target)
    az_v, el_v = _azimuth_elevation(to_victim)
    phi = wrap_180(az_v - az_t)
    theta = ZENITH_REF_DEG + (el_v - el_t)
    # exact (90, 0) on the serving link regardless of rounding
    same = np.all(to_target == to_victim, axis=-1)
    phi = np.where(same, 0.0, phi)
    theta = np.where(same, ZENITH_REF_DEG, theta)
    if phi.ndim == 0:
        return float(theta), float(phi)
    return theta, phi


def received_power(tx_power_dbm, pl_db, g_tx_db, g_tx_loss_db, g_rx_db):
    return tx_power_dbm - pl_db + g_tx_db - g_tx_loss_db + g_rx_db


def noise_power(bw_hz: float, noise_figure_db: float = 0.0) -> float:
    """Thermal noise over ``bw_hz`` plus the receiver noise figure, in dBm."""
    if bw_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return THERMAL_NOISE_DBM_HZ + 10.0 * np.log10(bw_hz) + noise_figure_db
