"""Constellations, pilot framing, and the Wiener-phase-noise AWGN channel.

Symbols are unit-average-energy complex points with Gray bit labels. A frame
is a length-K symbol vector in which known pilot symbols are interleaved with
Gray-mapped coded payload bits according to a pilot plan; the channel applies
a phase random walk theta_k = theta_{k-1} + Delta_k, Delta_k ~ N(0, sigma_delta^2),
plus circular complex Gaussian noise with per-component variance sigma2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Constellation",
    "Distributed",
    "Bursts",
    "PreamblePostambleOnly",
    "FramePlan",
    "ChannelParams",
    "Frame",
    "make_plan",
    "plan_for_payload",
    "generate_phase",
    "apply_channel",
    "ebn0_to_sigma2",
    "build_frame",
]


@dataclass(frozen=True)
class Constellation:
    """Unit-energy constellation with Gray bit labels.

    bits[i] is the label of points[i]; index i equals the label read as a
    big-endian integer, so map/demap are simple reshapes.
    """

    name: str
    points: NDArray[np.complex128]
    bits: NDArray[np.uint8]  # (M, bits_per_symbol)

    @property
    def M(self) -> int:
        return self.points.shape[0]

    @property
    def bits_per_symbol(self) -> int:
        return self.bits.shape[1]

    @classmethod
    def qpsk(cls) -> "Constellation":
        # bit 0 -> sign of I, bit 1 -> sign of Q; one bit per axis is Gray.
        pts = np.empty(4, dtype=np.complex128)
        bits = np.empty((4, 2), dtype=np.uint8)
        s = 1.0 / math.sqrt(2.0)
        for idx in range(4):
            b0, b1 = (idx >> 1) & 1, idx & 1
            pts[idx] = complex(s * (1 - 2 * b0), s * (1 - 2 * b1))
            bits[idx] = (b0, b1)
        return cls("QPSK", pts, bits)

    @classmethod
    def qam16(cls) -> "Constellation":
        # Per-axis Gray on 2 bits: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3,
        # levels scaled by 1/sqrt(10) for unit average energy.
        level = {(0, 0): -3.0, (0, 1): -1.0, (1, 1): 1.0, (1, 0): 3.0}
        inv = {}
        for (b0, b1), v in level.items():
            inv[v] = (b0, b1)
        s = 1.0 / math.sqrt(10.0)
        pts = np.empty(16, dtype=np.complex128)
        bits = np.empty((16, 4), dtype=np.uint8)
        for idx in range(16):
            b = [(idx >> k) & 1 for k in (3, 2, 1, 0)]
            li = [v for v, bb in inv.items() if bb == (b[0], b[1])][0]
            lq = [v for v, bb in inv.items() if bb == (b[2], b[3])][0]
            pts[idx] = complex(s * li, s * lq)
            bits[idx] = b
        return cls("QAM16", pts, bits)

    @classmethod
    def by_name(cls, name: str) -> "Constellation":
        key = name.upper()
        if key == "QPSK":
            return cls.qpsk()
        if key in ("QAM16", "16QAM", "16-QAM"):
            return cls.qam16()
        raise ValueError(f"unknown constellation {name!r}")

    def map_bits(self, bits) -> NDArray[np.complex128]:
        """Gray-map a bit vector (length multiple of bits_per_symbol)."""
        b = np.asarray(bits, dtype=np.uint8)
        bps = self.bits_per_symbol
        if b.ndim != 1 or b.size % bps != 0:
            raise ValueError("bit vector length must be a multiple of bits_per_symbol")
        grp = b.reshape(-1, bps)
        idx = grp @ (1 << np.arange(bps - 1, -1, -1)).astype(np.uint8)
        return self.points[idx]

    def demap_hard(self, symbols) -> NDArray[np.uint8]:
        """Nearest-point hard demapping back to bits."""
        sym = np.asarray(symbols, dtype=np.complex128)
        idx = np.argmin(np.abs(sym[:, None] - self.points[None, :]), axis=1)
        return self.bits[idx].reshape(-1)


@dataclass(frozen=True)
class Distributed:
    """block_len pilots followed by gap payload symbols, tiled."""

    block_len: int
    gap: int


@dataclass(frozen=True)
class Bursts:
    """Preamble, then (burst_gap payload + burst_len pilots) tiled, postamble."""

    preamble: int
    burst_len: int
    burst_gap: int
    postamble: int


@dataclass(frozen=True)
class PreamblePostambleOnly:
    """len_each pilots at each end, pure payload in between."""

    len_each: int


PlanDescriptor = Union[Distributed, Bursts, PreamblePostambleOnly]


@dataclass(frozen=True)
class FramePlan:
    total_len: int
    pilot_mask: NDArray[np.bool_]
    descriptor: PlanDescriptor
    # Fixed pilot values; when None, build_frame draws them per frame from a
    # pilot-dedicated stream.
    pilot_symbols: Optional[NDArray[np.complex128]] = None

    @property
    def n_pilots(self) -> int:
        return int(np.count_nonzero(self.pilot_mask))

    @property
    def n_payload(self) -> int:
        return self.total_len - self.n_pilots

    @property
    def payload_fraction(self) -> float:
        return self.n_payload / self.total_len


def _mask_for(descriptor: PlanDescriptor, total_len: int) -> NDArray[np.bool_]:
    K = total_len
    idx = np.arange(K)
    if isinstance(descriptor, Distributed):
        b, g = descriptor.block_len, descriptor.gap
        if b < 0 or g < 0 or b + g < 1:
            raise ValueError("invalid distributed descriptor")
        if b == 0:
            return np.zeros(K, dtype=bool)
        if g == 0:
            return np.ones(K, dtype=bool)
        return (idx % (b + g)) < b
    if isinstance(descriptor, PreamblePostambleOnly):
        L = descriptor.len_each
        if L < 0 or 2 * L > K:
            raise ValueError("preamble/postamble longer than the frame")
        mask = np.zeros(K, dtype=bool)
        mask[:L] = True
        mask[K - L : K] = True
        return mask
    if isinstance(descriptor, Bursts):
        pre, bl, bg, post = (
            descriptor.preamble,
            descriptor.burst_len,
            descriptor.burst_gap,
            descriptor.postamble,
        )
        if min(pre, bl, bg, post) < 0 or pre + post > K or bg + bl < 1:
            raise ValueError("invalid bursts descriptor")
        mask = np.zeros(K, dtype=bool)
        mask[:pre] = True
        mask[K - post : K] = True
        mid = idx[pre : K - post] - pre
        mask[pre : K - post] = (mid % (bg + bl)) >= bg
        return mask
    raise TypeError(f"unknown plan descriptor {descriptor!r}")


def make_plan(descriptor: PlanDescriptor, total_len: int) -> FramePlan:
    """Tile a pilot pattern descriptor over a frame of total_len symbols."""
    if total_len < 1:
        raise ValueError("total_len must be >= 1")
    return FramePlan(total_len, _mask_for(descriptor, total_len), descriptor)


def plan_for_payload(descriptor: PlanDescriptor, n_payload: int) -> FramePlan:
    """Smallest plan whose tiled mask carries exactly n_payload payload symbols."""
    if n_payload < 0:
        raise ValueError("n_payload must be >= 0")
    if isinstance(descriptor, Distributed):
        b, g = descriptor.block_len, descriptor.gap
        if b == 0:
            K = n_payload
        elif g == 0:
            raise ValueError("all-pilot plan carries no payload")
        else:
            t, r = divmod(n_payload, g)
            K = t * (b + g) + (b + r if r else 0)
    elif isinstance(descriptor, PreamblePostambleOnly):
        K = n_payload + 2 * descriptor.len_each
    elif isinstance(descriptor, Bursts):
        bl, bg = descriptor.burst_len, descriptor.burst_gap
        t, r = divmod(n_payload, bg)
        mid = t * (bg + bl) + r if r else max(t * (bg + bl) - bl, 0)
        K = descriptor.preamble + mid + descriptor.postamble
    else:
        raise TypeError(f"unknown plan descriptor {descriptor!r}")
    plan = make_plan(descriptor, K)
    if plan.n_payload != n_payload:
        raise AssertionError("plan arithmetic is inconsistent with the tiled mask")
    return plan


@dataclass(frozen=True)
class ChannelParams:
    """sigma2: noise variance per component; sigma_delta: increment std (rad)."""

    sigma2: float
    sigma_delta: float

    def __post_init__(self):
        if not (self.sigma2 > 0.0) or self.sigma_delta < 0.0:
            raise ValueError("sigma2 must be > 0 and sigma_delta >= 0")


@dataclass
class Frame:
    payload_bits: NDArray[np.uint8]  # bits carried on payload positions
    coded_symbols: NDArray[np.complex128]  # length K, pilots included
    plan: FramePlan
    true_phase: Optional[NDArray[np.float64]] = None
    received: Optional[NDArray[np.complex128]] = None

    @property
    def pilot_values(self) -> NDArray[np.complex128]:
        return self.coded_symbols[self.plan.pilot_mask]


def generate_phase(K: int, params: ChannelParams, rng: np.random.Generator):
    """Wiener phase track: theta_0 ~ U[0, 2pi), unwrapped random walk."""
    if K < 1:
        raise ValueError("K must be >= 1")
    theta = np.empty(K, dtype=np.float64)
    theta[0] = rng.uniform(0.0, 2.0 * math.pi)
    if K > 1:
        theta[1:] = rng.normal(0.0, params.sigma_delta, K - 1)
        np.cumsum(theta, out=theta)
    return theta


def apply_channel(symbols, phase, params: ChannelParams, rng: np.random.Generator):
    """r_k = c_k e^{j theta_k} + n_k, n_k circular with per-component variance sigma2."""
    c = np.asarray(symbols, dtype=np.complex128)
    th = np.asarray(phase, dtype=np.float64)
    if c.shape != th.shape:
        raise ValueError("symbols and phase must have equal length")
    sd = math.sqrt(params.sigma2)
    noise = rng.normal(0.0, sd, c.shape) + 1j * rng.normal(0.0, sd, c.shape)
    return c * np.exp(1j * th) + noise


def ebn0_to_sigma2(
    ebn0_db: float, code_rate: float, bits_per_symbol: int, payload_fraction: float
) -> float:
    """Per-component noise variance for a target Eb/N0.

    Eb is energy per information (payload) bit, with unit symbol energy:
    Es/N0 = (Eb/N0) * code_rate * bits_per_symbol * payload_fraction and
    sigma2 = N0/2, i.e. pilot overhead is charged as an SNR penalty.
    """
    if code_rate <= 0.0 or bits_per_symbol <= 0 or not (0.0 < payload_fraction <= 1.0):
        raise ValueError("rate, bits_per_symbol and payload_fraction must be positive")
    ebn0_lin = 10.0 ** (ebn0_db / 10.0)
    if ebn0_lin <= 0.0:
        raise ValueError("Eb/N0 must be positive in linear units")
    return 1.0 / (2.0 * ebn0_lin * code_rate * bits_per_symbol * payload_fraction)


def build_frame(
    plan: FramePlan,
    constellation: Constellation,
    coded_bits,
    rng: np.random.Generator,
) -> Frame:
    """Assemble the pre-channel symbol vector for one frame.

    Payload positions carry the Gray-mapped coded bits; pilot positions carry
    known constellation points, either the plan's fixed values or a fresh draw
    from a pilot-dedicated stream spawned off the frame generator (so pilot
    values never perturb payload or noise draws).
    """
    bits = np.asarray(coded_bits, dtype=np.uint8)
    if bits.size != plan.n_payload * constellation.bits_per_symbol:
        raise ValueError(
            f"need {plan.n_payload * constellation.bits_per_symbol} coded bits, "
            f"got {bits.size}"
        )
    symbols = np.empty(plan.total_len, dtype=np.complex128)
    if plan.pilot_symbols is not None:
        if plan.pilot_symbols.size != plan.n_pilots:
            raise ValueError("plan pilot_symbols length mismatch")
        pilots = plan.pilot_symbols
    else:
        pilot_rng = rng.spawn(1)[0]
        pilots = constellation.points[
            pilot_rng.integers(0, constellation.M, plan.n_pilots)
        ]
    symbols[plan.pilot_mask] = pilots
    if plan.n_payload:
        symbols[~plan.pilot_mask] = constellation.map_bits(bits)
    return Frame(payload_bits=bits, coded_symbols=symbols, plan=plan)
