"""Turbo receiver: iterative message exchange between detector and decoder.

One turbo iteration runs the phase detector with the current downward symbol
pmfs P_d (uniform on payload at the first iteration), marginalizes upward
symbol pmfs, converts them to bit LLRs for the sum-product decoder, and
feeds the decoder's extrinsic LLRs back as the next P_d. Genie modes replace
parts of the chain: known_phase derotates by the true phase trajectory and
decodes once over an AWGN channel; all_pilots hands the detector delta
priors on the true symbols everywhere while leaving the frame plan alone.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.special import logsumexp

from .detector import (
    DetectorConfig,
    DetectorVariant,
    OpCount,
    build_observations,
    dp_bcjr,
    run_detector,
    upward_log_pmfs,
)
from .ldpc import LLR_MAX, LdpcCode, decode_spa
from .modem import ChannelParams, Constellation, Frame

__all__ = [
    "IterationSchedule",
    "ReceiverConfig",
    "ReceiverResult",
    "TurboDiagnostics",
    "pmf_to_bit_llrs",
    "bit_llrs_to_pmf",
    "phase_rmse",
    "run_receiver",
]

GENIE_MODES = ("none", "known_phase", "all_pilots")


@dataclass(frozen=True)
class IterationSchedule:
    """Inner-detector (N_D), decoder (N_C), and turbo (N_T) iteration limits."""

    n_detector: int
    n_decoder: int
    n_turbo: int

    def __post_init__(self):
        if min(self.n_detector, self.n_decoder, self.n_turbo) < 1:
            raise ValueError("all iteration counts must be >= 1")


@dataclass(frozen=True)
class ReceiverConfig:
    schedule: IterationSchedule
    detector: DetectorConfig
    channel: ChannelParams
    constellation: Constellation
    genie: str = "none"

    def __post_init__(self):
        if self.genie not in GENIE_MODES:
            raise ValueError(f"genie must be one of {GENIE_MODES}")


@dataclass
class TurboDiagnostics:
    phase_rmse: float
    rejections: int
    decoder_iterations: int
    decoder_converged: bool


@dataclass
class ReceiverResult:
    decoded_bits: NDArray[np.uint8]  # information bits
    hard_codeword: NDArray[np.uint8]
    converged: bool
    turbo_iterations: int
    rejections: int
    ops: OpCount
    diagnostics: List[TurboDiagnostics] = field(default_factory=list)

    @property
    def phase_rmse(self) -> float:
        return self.diagnostics[-1].phase_rmse if self.diagnostics else math.nan


def _log_pmfs_to_bit_llrs(log_pmfs, bits) -> NDArray[np.float64]:
    """Per-bit LLRs (positive favours 0) from log symbol pmfs, log domain."""
    bps = bits.shape[1]
    K = log_pmfs.shape[0]
    out = np.empty((K, bps))
    for j in range(bps):
        zero = bits[:, j] == 0
        out[:, j] = logsumexp(log_pmfs[:, zero], axis=1) - logsumexp(
            log_pmfs[:, ~zero], axis=1
        )
    return out.reshape(-1)


def pmf_to_bit_llrs(pmfs, constellation: Constellation) -> NDArray[np.float64]:
    """Marginalize symbol pmfs (K, M) into a flat bit LLR vector."""
    p = np.asarray(pmfs, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != constellation.M:
        raise ValueError("pmfs must be (K, M)")
    with np.errstate(divide="ignore"):
        return _log_pmfs_to_bit_llrs(np.log(p), constellation.bits)


def _bit_llrs_to_log_pmfs(llrs, bits) -> NDArray[np.float64]:
    """Log symbol pmfs from independent per-bit LLRs.

    log P(bit=0) = -log(1 + e^{-llr}) and symmetrically for bit = 1; the
    product measure over a symbol's label is normalized by construction.
    """
    bps = bits.shape[1]
    l = np.asarray(llrs, dtype=np.float64).reshape(-1, bps)
    lp0 = -np.logaddexp(0.0, -l)  # (K, bps)
    lp1 = -np.logaddexp(0.0, l)
    b = bits.astype(np.float64)  # (M, bps)
    return lp0 @ (1.0 - b).T + lp1 @ b.T


def bit_llrs_to_pmf(llrs, constellation: Constellation) -> NDArray[np.float64]:
    """Symbol pmfs (K, M) from a flat bit LLR vector."""
    l = np.asarray(llrs, dtype=np.float64)
    if l.size % constellation.bits_per_symbol != 0:
        raise ValueError("LLR length must be a multiple of bits_per_symbol")
    return np.exp(_bit_llrs_to_log_pmfs(l, constellation.bits))


def _wrap(x):
    return np.mod(x + math.pi, 2.0 * math.pi) - math.pi


def phase_rmse(estimate, true_phase, valid=None) -> float:
    """RMS phase error after fitting a single global offset.

    Absolute phase is unobservable without an anchor, so the comparison is
    modulo a constant rotation; positions without an estimate are skipped.
    """
    est = np.asarray(estimate, dtype=np.float64)
    tru = np.asarray(true_phase, dtype=np.float64)
    if valid is None:
        valid = np.ones(est.shape, dtype=bool)
    if not valid.any():
        return math.inf
    d = est[valid] - tru[valid]
    offset = np.angle(np.mean(np.exp(1j * d)))
    return float(np.sqrt(np.mean(_wrap(d - offset) ** 2)))


def _awgn_log_pmfs(rotated, points, sigma2):
    lw = -np.abs(rotated[:, None] - points[None, :]) ** 2 / (2.0 * sigma2)
    return lw - logsumexp(lw, axis=1, keepdims=True)


def _nearest_indices(symbols, points):
    return np.argmin(np.abs(symbols[:, None] - points[None, :]), axis=1)


def run_receiver(frame: Frame, code: LdpcCode, cfg: ReceiverConfig) -> ReceiverResult:
    """Decode one received frame; see the module docstring for the loop."""
    if frame.received is None:
        raise ValueError("frame has not been through the channel")
    const = cfg.constellation
    plan = frame.plan
    M, bps = const.M, const.bits_per_symbol
    K = plan.total_len
    payload = ~plan.pilot_mask
    n_payload = plan.n_payload
    if n_payload * bps != code.n:
        raise ValueError(
            f"plan carries {n_payload * bps} coded bits but the code length is {code.n}"
        )
    received = frame.received
    sigma2 = cfg.channel.sigma2
    ops = OpCount()

    if cfg.genie == "known_phase":
        if frame.true_phase is None:
            raise ValueError("known-phase decoding needs the true phase track")
        rotated = received[payload] * np.exp(-1j * frame.true_phase[payload])
        lw = _awgn_log_pmfs(rotated, const.points, sigma2)
        llr = np.clip(_log_pmfs_to_bit_llrs(lw, const.bits), -LLR_MAX, LLR_MAX)
        dec = decode_spa(code, llr, cfg.schedule.n_decoder)
        diag = TurboDiagnostics(0.0, 0, dec.iterations_used, dec.converged)
        return ReceiverResult(
            decoded_bits=dec.hard_bits[code.info_cols],
            hard_codeword=dec.hard_bits,
            converged=dec.converged,
            turbo_iterations=1,
            rejections=0,
            ops=ops,
            diagnostics=[diag],
        )

    det = cfg.detector
    if det.n_inner != cfg.schedule.n_detector:
        # the schedule owns the per-pass inner iteration count N_D
        det = dataclasses.replace(det, n_inner=cfg.schedule.n_detector)
    sigma2_det = sigma2 * det.n0_inflation
    var_delta = cfg.channel.sigma_delta**2

    # downward log pmfs: pilots are deltas; payload starts uniform, or is a
    # delta on the true symbols in the all-pilot genie
    log_pd = np.full((K, M), -np.inf)
    pilot_idx = _nearest_indices(frame.coded_symbols[plan.pilot_mask], const.points)
    log_pd[plan.pilot_mask, :] = -np.inf
    log_pd[np.nonzero(plan.pilot_mask)[0], pilot_idx] = 0.0
    if cfg.genie == "all_pilots":
        true_idx = _nearest_indices(frame.coded_symbols[payload], const.points)
        log_pd[np.nonzero(payload)[0], true_idx] = 0.0
    else:
        log_pd[payload, :] = -math.log(M)

    use_rejection = (
        det.variant is DetectorVariant.EP_MODIFIED and len(det.rejection) > 0
    )
    gammas = [g for g, _ in det.rejection]
    static_m_bar = np.asarray([m for _, m in det.rejection], dtype=np.int64)
    ncond = len(det.rejection)
    prev_maxp = np.exp(np.max(log_pd, axis=1))

    diagnostics: List[TurboDiagnostics] = []
    total_rejections = 0
    dec = None
    dec_state = None
    turbo_used = 0
    for t in range(1, cfg.schedule.n_turbo + 1):
        gate = np.zeros(K, dtype=bool)
        m_bar = np.broadcast_to(static_m_bar, (K, ncond)).copy() if ncond else None
        if use_rejection:
            if det.decision_directed_thresholds:
                # reject only where the decoder's belief stopped improving;
                # on the first iteration nothing has improved yet, so the
                # whole payload is eligible
                maxp = np.exp(np.max(log_pd, axis=1))
                gate = payload & (maxp <= prev_maxp)
                # condition c tolerates (ncond - c) * max P_d inconsistent
                # modes, rounded half away from zero: the clearer the
                # belief, the harder it is to reject the message
                for c in range(ncond):
                    m_bar[:, c] = np.floor((ncond - c) * maxp + 0.5).astype(
                        np.int64
                    )
                prev_maxp = maxp
            else:
                gate = payload.copy()

        rejections = 0
        if det.variant is DetectorVariant.DP_BCJR:
            res = dp_bcjr(
                received,
                np.exp(log_pd),
                const.points,
                ChannelParams(sigma2_det, cfg.channel.sigma_delta),
                det.n_theta,
            )
            ops += res.ops
            lw_up = res.log_upward
            grid = np.exp(
                1j * 2.0 * math.pi * np.arange(det.n_theta) / det.n_theta
            )
            zbar = np.exp(res.log_posterior) @ grid
            est = np.angle(zbar)
            valid = np.abs(zbar) > 1e-12
        else:
            obs = build_observations(
                received,
                log_pd,
                const.points,
                sigma2_det,
                var_delta,
                gamma_th=gammas,
                m_bar=m_bar,
                gate=gate,
            )
            state = run_detector(obs, det)
            ops += state.ops
            rejections = state.total_rejections
            z_u = state.z_f + state.z_b
            lw_up = upward_log_pmfs(received, z_u, const.points, sigma2_det, ops)
            z_marg = z_u + state.z_d
            est = np.angle(z_marg)
            valid = np.abs(z_marg) > 1e-12
        total_rejections += rejections

        llr_in = np.clip(
            _log_pmfs_to_bit_llrs(lw_up[payload], const.bits), -LLR_MAX, LLR_MAX
        )
        # the decoder continues from its previous messages, so schedules
        # like 1-1-N accumulate N decoding iterations across the loop
        dec = decode_spa(code, llr_in, cfg.schedule.n_decoder, state=dec_state)
        dec_state = dec.messages
        rmse = (
            phase_rmse(est, frame.true_phase, valid)
            if frame.true_phase is not None
            else math.nan
        )
        diagnostics.append(
            TurboDiagnostics(rmse, rejections, dec.iterations_used, dec.converged)
        )
        turbo_used = t
        if dec.converged or t == cfg.schedule.n_turbo:
            break
        log_pd[payload] = _bit_llrs_to_log_pmfs(dec.llr_extrinsic, const.bits)

    return ReceiverResult(
        decoded_bits=dec.hard_bits[code.info_cols],
        hard_codeword=dec.hard_bits,
        converged=dec.converged,
        turbo_iterations=turbo_used,
        rejections=total_rejections,
        ops=ops,
        diagnostics=diagnostics,
    )
