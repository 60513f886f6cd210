"""Downlink SINR / rate evaluation per drop and the seeded Monte Carlo runner."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from coexsim import rf
from coexsim.scenario import (
    STREAM_SCHEDULING,
    Deployment,
    ScenarioConfig,
    Tech,
    generate_deployment,
    trial_rng,
    validate_config,
)

log = logging.getLogger(__name__)

_LOG10_E_X10 = 10.0 / np.log(10.0)

CSV_COLUMNS = (
    "trial", "tech", "cell", "ue", "p_rx_dbm", "i_agg_dbm",
    "inr_db", "sinr_db", "rate_bps", "interfered",
)


def sinr(p_rx_dbm, interferers_dbm, noise_dbm):
    """SINR in dB: serving power over summed interference plus noise.

    Interference is summed in linear scale relative to the noise, so an empty
    list gives exactly ``p_rx - noise`` and the result never exceeds the SNR.
    """
    interferers = np.asarray(interferers_dbm, dtype=float)
    inr_lin = np.sum(np.power(10.0, (interferers - noise_dbm) / 10.0))
    return p_rx_dbm - noise_dbm - _LOG10_E_X10 * np.log1p(inr_lin)


def shannon_rate(bw_hz, sinr_db):
    """Shannon capacity in bit/s."""
    if np.any(np.asarray(bw_hz) <= 0):
        raise ValueError("bandwidth must be positive")
    return bw_hz * np.log2(1.0 + np.power(10.0, np.asarray(sinr_db, dtype=float) / 10.0))


@dataclass(frozen=True)
class LinkSample:
    trial_index: int
    cell_index: int
    tech: Tech
    ue_index: int
    p_rx_dbm: float
    i_agg_dbm: float  # -inf when nothing interferes
    inr_db: float
    sinr_db: float
    rate_bps: float
    interfered: bool


@dataclass
class SampleSet:
    """Column-oriented collection of LinkSamples plus provenance.

    Rows are ordered by (trial, cell, ue).
    """

    trial: np.ndarray
    cell: np.ndarray
    tech: np.ndarray
    ue: np.ndarray
    p_rx_dbm: np.ndarray
    i_agg_dbm: np.ndarray
    inr_db: np.ndarray
    sinr_db: np.ndarray
    rate_bps: np.ndarray
    interfered: np.ndarray
    config_digest: str = ""
    seed: int = 0
    n_trials: int = 0

    _COLUMNS = ("trial", "cell", "tech", "ue", "p_rx_dbm", "i_agg_dbm",
                "inr_db", "sinr_db", "rate_bps", "interfered")

    def __len__(self) -> int:
        return len(self.sinr_db)

    def __getitem__(self, i: int) -> LinkSample:
        return LinkSample(
            trial_index=int(self.trial[i]),
            cell_index=int(self.cell[i]),
            tech=Tech(int(self.tech[i])),
            ue_index=int(self.ue[i]),
            p_rx_dbm=float(self.p_rx_dbm[i]),
            i_agg_dbm=float(self.i_agg_dbm[i]),
            inr_db=float(self.inr_db[i]),
            sinr_db=float(self.sinr_db[i]),
            rate_bps=float(self.rate_bps[i]),
            interfered=bool(self.interfered[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @classmethod
    def concatenate(cls, parts: list["SampleSet"], **provenance) -> "SampleSet":
        cols = {c: np.concatenate([getattr(p, c) for p in parts]) for c in cls._COLUMNS}
        return cls(**cols, **provenance)

    def snr_db(self) -> np.ndarray:
        """SNR recovered from stored fields: sinr plus the interference penalty."""
        return self.sinr_db + _LOG10_E_X10 * np.log1p(np.power(10.0, self.inr_db / 10.0))


def _link_budget_consts(cfg: ScenarioConfig):
    g_tx = rf.tx_array_gain(cfg.n_ant, cfg.g_ele_db)
    noise = rf.noise_power(cfg.bandwidth_hz, cfg.noise_figure_db)
    return g_tx, noise


def evaluate_drop(
    deployment: Deployment,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    trial_index: int = 0,
) -> SampleSet:
    """Evaluate every UE of one drop against full-buffer interference.

    Each UE is evaluated as if its own BS is steering at it. Every other BS is
    steering at one of its own UEs, drawn uniformly from ``rng``. Under the
    ``footprint`` scope an interferer only reaches UEs within its cell radius;
    under ``all`` it reaches everyone.
    """
    cells = deployment.cells
    n_bs = len(cells)
    g_tx, noise = _link_budget_consts(cfg)

    bs_xy = deployment.bs_xy
    radii = deployment.radii
    sizes = np.array([len(c.ue_xy) for c in cells])
    ue_xy = np.concatenate([c.ue_xy for c in cells]).reshape(-1, 2)
    serving = np.repeat(np.arange(n_bs), sizes)
    ue_index = np.concatenate([np.arange(n) for n in sizes]).astype(np.int32)

    # one scheduled UE per BS for this drop
    sched = rng.integers(0, sizes)
    targets = np.array([c.ue_xy[s] for c, s in zip(cells, sched)]).reshape(-1, 2)

    # serving link, beam on the UE: zero pattern loss
    d2d_serv = np.hypot(*(ue_xy - bs_xy[serving]).T)
    pl_serv = rf.path_loss_umi_los(
        rf.distance_3d(d2d_serv, cfg.bs_height, cfg.ue_height), cfg.carrier_freq_ghz
    )
    p_rx = rf.received_power(cfg.tx_power_dbm, pl_serv, g_tx, 0.0, cfg.ue_rx_gain_db)

    # interference matrix, UEs x BSs
    vec = ue_xy[:, None, :] - bs_xy[None, :, :]
    d2d = np.hypot(vec[..., 0], vec[..., 1])
    d2d_pl = np.maximum(d2d, rf.MIN_D2D_M)
    bs_xyz = np.column_stack([bs_xy, np.full(n_bs, cfg.bs_height)])
    target_xyz = np.column_stack([targets, np.full(n_bs, cfg.ue_height)])
    victim_xyz = np.column_stack([ue_xy, np.full(len(ue_xy), cfg.ue_height)])
    theta, phi = rf.angular_offsets(
        bs_xyz[None, :, :], target_xyz[None, :, :], victim_xyz[:, None, :]
    )
    loss = rf.beam_pattern_loss(theta, phi, cfg.a_m_db)
    pl = rf.path_loss_umi_los(
        rf.distance_3d(d2d_pl, cfg.bs_height, cfg.ue_height), cfg.carrier_freq_ghz
    )
    p_intf = rf.received_power(cfg.tx_power_dbm, pl, g_tx, loss, cfg.ue_rx_gain_db)

    active = np.ones_like(p_intf, dtype=bool)
    active[np.arange(len(ue_xy)), serving] = False
    if cfg.interference_scope == "footprint":
        active &= d2d <= radii[None, :]

    inr_lin = np.where(active, np.power(10.0, (p_intf - noise) / 10.0), 0.0).sum(axis=1)
    has_intf = inr_lin > 0
    with np.errstate(divide="ignore"):
        inr_db = np.where(has_intf, 10.0 * np.log10(inr_lin), -np.inf)
    i_agg = inr_db + noise
    sinr_db = p_rx - noise - _LOG10_E_X10 * np.log1p(inr_lin)
    rate = shannon_rate(cfg.bandwidth_hz, sinr_db)
    interfered = inr_db >= cfg.interfered_threshold_db

    n = len(ue_xy)
    return SampleSet(
        trial=np.full(n, trial_index, dtype=np.int32),
        cell=serving.astype(np.int32),
        tech=deployment.techs[serving],
        ue=ue_index,
        p_rx_dbm=p_rx,
        i_agg_dbm=i_agg,
        inr_db=inr_db,
        sinr_db=sinr_db,
        rate_bps=rate,
        interfered=interfered,
    )


def run_trial(cfg: ScenarioConfig, trial_index: int) -> SampleSet:
    dep = generate_deployment(cfg, trial_index, cfg.seed)
    rng = trial_rng(cfg.seed, trial_index, STREAM_SCHEDULING)
    return evaluate_drop(dep, cfg, rng, trial_index)


def _run_block(args) -> SampleSet:
    cfg, start, stop = args
    return SampleSet.concatenate([run_trial(cfg, t) for t in range(start, stop)])


def run_monte_carlo(cfg: ScenarioConfig, workers: int = 1, block: int = 25) -> SampleSet:
    """Run ``cfg.n_trials`` drops; output is independent of ``workers``."""
    validate_config(cfg)
    blocks = [
        (cfg, s, min(s + block, cfg.n_trials)) for s in range(0, cfg.n_trials, block)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, blocks))
    else:
        parts = []
        for i, b in enumerate(blocks):
            parts.append(_run_block(b))
            log.debug("block %d/%d done", i + 1, len(blocks))
    return SampleSet.concatenate(
        parts, config_digest=cfg.digest(), seed=cfg.seed, n_trials=cfg.n_trials
    )


# --- file formats -----------------------------------------------------------

def _fmt(values: np.ndarray) -> np.ndarray:
    out = np.char.mod("%.10g", values).astype(object)
    out[~np.isfinite(values)] = ""
    return out


def write_samples_csv(samples: SampleSet, path: str | Path) -> None:
    """One row per LinkSample; empty i_agg_dbm / inr_db mean no interferer."""
    labels = np.array([t.label for t in Tech], dtype=object)
    df = pd.DataFrame({
        "trial": samples.trial,
        "tech": labels[samples.tech],
        "cell": samples.cell,
        "ue": samples.ue,
        "p_rx_dbm": _fmt(samples.p_rx_dbm),
        "i_agg_dbm": _fmt(samples.i_agg_dbm),
        "inr_db": _fmt(samples.inr_db),
        "sinr_db": _fmt(samples.sinr_db),
        "rate_bps": _fmt(samples.rate_bps),
        "interfered": samples.interfered.astype(np.int8),
    }, columns=list(CSV_COLUMNS))
    df.to_csv(path, index=False, lineterminator="\n")


def read_samples_csv(path: str | Path) -> SampleSet:
    df = pd.read_csv(path)
    missing = [c for c in CSV_COLUMNS if c not in df.columns]
    if missing:
        raise KeyError(f"{path}: missing columns {missing}")
    tech_codes = {t.label: int(t) for t in Tech}
    return SampleSet(
        trial=df["trial"].to_numpy(np.int32),
        cell=df["cell"].to_numpy(np.int32),
        tech=df["tech"].map(tech_codes).to_numpy(np.int8),
        ue=df["ue"].to_numpy(np.int32),
        p_rx_dbm=df["p_rx_dbm"].to_numpy(float),
        i_agg_dbm=df["i_agg_dbm"].fillna(-np.inf).to_numpy(float),
        inr_db=df["inr_db"].fillna(-np.inf).to_numpy(float),
        sinr_db=df["sinr_db"].to_numpy(float),
        rate_bps=df["rate_bps"].to_numpy(float),
        interfered=df["interfered"].to_numpy().astype(bool),
        n_trials=int(df["trial"].max()) + 1 if len(df) else 0,
    )


def samples_summary_json(samples: SampleSet) -> dict:
    return {
        "n_samples": len(samples),
        "n_trials": samples.n_trials,
        "seed": samples.seed,
        "config_digest": samples.config_digest,
        "n_interfered": int(samples.interfered.sum()),
        "n_no_interferer": int((~np.isfinite(samples.i_agg_dbm)).sum()),
    }


def write_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
