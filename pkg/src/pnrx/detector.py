"""Phase-tracking detectors passing directional messages along the frame.

The detector sees r_k = c_k e^{j theta_k} + n_k and exchanges messages with
the decoder. Downward symbol pmfs P_d turn each observation into a Tikhonov
mixture with one component per constellation point,

    z_k^m = r_k conj(c^m) / sigma2,
    log w_k^m = ln P_d(c^m) - |c^m|^2/(2 sigma2) + ln 2pi + ln I0(|z_k^m|).

Two projection families collapse the mixture to a single Tikhonov factor:

* transparent propagation (TP) projects the raw mixture and sends the result
  downstream unchanged by the running phase estimate;
* expectation propagation (EP) first multiplies the mixture by the incoming
  prior t(theta; z_u) -- shifting each component to z_u + z_k^m and
  recomputing its I0 weight factor -- projects the product, and sends the
  difference z_d = proj(...) - z_u so the prior transparently cancels.

The modified EP variant adds mode-consistency rejection (discard the
observation when too many shifted modes point far away from the prior) and a
piecewise inverse of the Bessel ratio in the projection. Damping blends each
new z_d with the previous inner iteration's value.

Messages run through a forward/backward filtering schedule: two independent
passes per inner iteration, each propagating its running estimate through
the phase random walk via convolve_with_gaussian. The discretized-phase
BCJR benchmark replaces all of this with an exact forward-backward over a
uniform phase grid.

The per-symbol scan is compiled with numba; it shares its scalar Bessel
cores with `directional`, so the compiled path and the public single-symbol
operations compute identical values.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numba as nb
import numpy as np
from numpy.typing import NDArray
from scipy.special import logsumexp

from .directional import (
    LOG_2PI,
    BrMode,
    TikhonovMixture,
    _convolve_gaussian,
    _log_i0,
    _log_i0_u,
    _moment_match_core,
    moment_match,
)
from .modem import ChannelParams, Constellation

__all__ = [
    "EPS_PRIOR",
    "DetectorVariant",
    "DetectorConfig",
    "DetectorState",
    "OpCount",
    "ObservationSet",
    "EpProjection",
    "DpBcjrResult",
    "observation_mixture",
    "build_observations",
    "tp_project",
    "ep_project",
    "rejection_check",
    "damp",
    "filter_pass",
    "run_detector",
    "upward_symbol_message",
    "upward_log_pmfs",
    "wrapped_gaussian_kernel",
    "dp_bcjr",
]

# Below this prior precision the phase estimate carries no direction, so
# mode-consistency rejection is meaningless and disabled.
EPS_PRIOR = 1e-6


class DetectorVariant(enum.Enum):
    TP = "TP"
    EP_NATIVE = "EpNative"
    EP_DAMPED = "EpDamped"
    EP_MODIFIED = "EpModified"
    DP_BCJR = "DpBcjr"

    @classmethod
    def from_name(cls, name: str) -> "DetectorVariant":
        for v in cls:
            if v.value == name:
                return v
        raise ValueError(f"unknown detector variant {name!r}")

    @property
    def is_ep(self) -> bool:
        return self in (
            DetectorVariant.EP_NATIVE,
            DetectorVariant.EP_DAMPED,
            DetectorVariant.EP_MODIFIED,
        )


@dataclass
class OpCount:
    """Tallies of two-term additions, multiplications, and LUT accesses."""

    adds: float = 0.0
    mults: float = 0.0
    lut: float = 0.0

    def __iadd__(self, other: "OpCount") -> "OpCount":
        self.adds += other.adds
        self.mults += other.mults
        self.lut += other.lut
        return self

    def scaled(self, factor: float) -> "OpCount":
        return OpCount(self.adds * factor, self.mults * factor, self.lut * factor)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.adds, self.mults, self.lut)


@dataclass(frozen=True)
class DetectorConfig:
    """Knobs for one detector variant.

    rejection holds (Gamma_th, M_bar) pairs joined by disjunction; with two
    entries the thresholds must satisfy Gamma_1 < Gamma_2 and M_bar_1 >
    M_bar_2. n0_inflation >= 1 scales the noise variance the detector (not
    the decoder) assumes, which widens mixture components at high SNR.
    """

    variant: DetectorVariant
    n_inner: int = 1
    damping: float = 1.0
    br_mode: BrMode = BrMode.Exact
    rejection: Tuple[Tuple[float, int], ...] = ()
    decision_directed_thresholds: bool = False
    n_theta: int = 512
    n0_inflation: float = 1.0

    def __post_init__(self):
        if self.n_inner < 1:
            raise ValueError("n_inner must be >= 1")
        if not (0.0 <= self.damping <= 1.0):
            raise ValueError("damping must lie in [0, 1]")
        if self.n_theta < 2:
            raise ValueError("n_theta must be >= 2")
        if self.n0_inflation < 1.0:
            raise ValueError("n0_inflation must be >= 1")
        gammas = [g for g, _ in self.rejection]
        mbars = [m for _, m in self.rejection]
        if any(g <= 0 for g in gammas) or any(m < 0 for m in mbars):
            raise ValueError("rejection thresholds must have Gamma > 0, M_bar >= 0")
        if len(self.rejection) == 2:
            if not (gammas[0] < gammas[1] and mbars[0] > mbars[1]):
                raise ValueError(
                    "two rejection conditions require Gamma_1 < Gamma_2 and "
                    "M_bar_1 > M_bar_2"
                )


@dataclass
class ObservationSet:
    """Per-frame detector inputs: compacted mixtures plus rejection data.

    z_obs and logw hold the mixture components row-compacted so that row k
    has ncomp[k] valid leading entries (pilot rows have one). m_bar carries
    the per-symbol rejection count limits (broadcast from the static config
    or decision-directed), and gate marks symbols where rejection may fire
    at all (never pilots).
    """

    received: NDArray[np.complex128]
    z_obs: NDArray[np.complex128]
    logw: NDArray[np.float64]
    ncomp: NDArray[np.int64]
    sigma2: float
    var_delta: float
    gamma_th: NDArray[np.float64]
    m_bar: NDArray[np.int64]
    gate: NDArray[np.uint8]

    @property
    def total_len(self) -> int:
        return self.received.shape[0]


def _mixture_arrays(received, log_priors, points, sigma2):
    """Vectorized mixture construction; returns full (K, M) arrays."""
    z = received[:, None] * np.conj(points)[None, :] / sigma2
    with np.errstate(invalid="ignore"):
        lw = (
            log_priors
            - np.abs(points)[None, :] ** 2 / (2.0 * sigma2)
            + LOG_2PI
            + _log_i0_u(np.abs(z))
        )
    lw = np.where(np.isneginf(log_priors), -np.inf, lw)
    return z, lw


def build_observations(
    received,
    log_priors,
    points,
    sigma2: float,
    var_delta: float,
    gamma_th=(),
    m_bar=None,
    gate=None,
) -> ObservationSet:
    """Turn received samples and log symbol pmfs into detector inputs.

    log_priors is (K, M) with -inf marking excluded symbols (pilot rows are
    deltas). Components with -inf weight are dropped and rows compacted;
    remaining weights are renormalized in log domain.
    """
    r = np.asarray(received, dtype=np.complex128)
    lp = np.asarray(log_priors, dtype=np.float64)
    pts = np.asarray(points, dtype=np.complex128)
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be > 0")
    if lp.shape != (r.size, pts.size):
        raise ValueError("log_priors must be (K, M)")
    z, lw = _mixture_arrays(r, lp, pts, sigma2)
    finite = np.isfinite(lw)
    ncomp = finite.sum(axis=1).astype(np.int64)
    if (ncomp == 0).any():
        raise ValueError("every symbol needs at least one admissible component")
    order = np.argsort(~finite, axis=1, kind="stable")
    z_c = np.take_along_axis(np.where(finite, z, 0.0), order, axis=1)
    lw_c = np.take_along_axis(np.where(finite, lw, -np.inf), order, axis=1)
    lw_c -= logsumexp(lw_c, axis=1, keepdims=True)

    K = r.size
    gammas = np.asarray([g for g in gamma_th], dtype=np.float64)
    ncond = gammas.size
    if m_bar is None:
        mb = np.zeros((K, ncond), dtype=np.int64)
    else:
        mb = np.asarray(m_bar, dtype=np.int64)
        if mb.ndim == 1:
            mb = np.broadcast_to(mb, (K, ncond)).copy()
        if mb.shape != (K, ncond):
            raise ValueError("m_bar must broadcast to (K, n_conditions)")
    gt = (
        np.zeros(K, dtype=np.uint8)
        if gate is None
        else np.asarray(gate, dtype=bool).astype(np.uint8)
    )
    return ObservationSet(
        received=r,
        z_obs=np.ascontiguousarray(z_c),
        logw=np.ascontiguousarray(lw_c),
        ncomp=ncomp,
        sigma2=float(sigma2),
        var_delta=float(var_delta),
        gamma_th=gammas,
        m_bar=np.ascontiguousarray(mb),
        gate=gt,
    )


def observation_mixture(
    r_k: complex, prior_pmf, constellation: Constellation, sigma2: float
) -> TikhonovMixture:
    """Single-symbol Tikhonov mixture from one received sample and a pmf."""
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be > 0")
    pmf = np.asarray(prior_pmf, dtype=np.float64)
    if pmf.shape != (constellation.M,) or (pmf < 0).any():
        raise ValueError("prior_pmf must be a nonnegative length-M vector")
    if not pmf.sum() > 0:
        raise ValueError("prior_pmf must have positive mass")
    with np.errstate(divide="ignore"):
        lp = np.log(pmf / pmf.sum())
    z, lw = _mixture_arrays(
        np.asarray([r_k], dtype=np.complex128),
        lp[None, :],
        constellation.points,
        sigma2,
    )
    keep = np.isfinite(lw[0])
    return TikhonovMixture.normalized(lw[0, keep], z[0, keep])


def tp_project(mix: TikhonovMixture, mode: BrMode) -> complex:
    """Transparent-propagation projection: match the raw mixture's moment."""
    return moment_match(mix, mode)


@dataclass(frozen=True)
class EpProjection:
    z_marginal: complex
    z_d: complex
    rejected: bool


def rejection_check(
    mix_shifted_params,
    z_u: complex,
    conditions: Sequence[Tuple[float, int]],
    m_bar_overrides: Optional[Sequence[int]] = None,
) -> bool:
    """Mode-consistency test on a shifted mixture.

    gamma^m = arg[z_MIX^m conj(z_u)] measures how far each mode points from
    the prior estimate; the observation is rejected when, for any condition
    (Gamma_th, M_bar), more than M_bar modes satisfy |gamma^m| > Gamma_th.
    Returns False when the prior is too weak to define a direction.
    """
    if abs(z_u) <= EPS_PRIOR:
        return False
    zm = np.asarray(mix_shifted_params, dtype=np.complex128)
    gam = np.abs(np.angle(zm * np.conj(z_u)))
    mbars = (
        [m for _, m in conditions] if m_bar_overrides is None else list(m_bar_overrides)
    )
    for (gamma_th, _), m_bar in zip(conditions, mbars):
        if int(np.count_nonzero(gam > gamma_th)) > m_bar:
            return True
    return False


def ep_project(
    mix: TikhonovMixture,
    z_u: complex,
    cfg: DetectorConfig,
    m_bar_overrides: Optional[Sequence[int]] = None,
    allow_rejection: bool = True,
) -> EpProjection:
    """Expectation-propagation projection against a Tikhonov prior t(.; z_u).

    Multiplying the observation mixture by the prior shifts component m to
    z_u + z^m and rescales its weight by I0(|z_u + z^m|)/I0(|z^m|); the
    product is projected and the prior subtracted back out. The returned
    z_marginal always equals z_u + z_d exactly.
    """
    if not cfg.variant.is_ep:
        raise ValueError("ep_project requires an EP variant config")
    if z_u == 0:
        # Nothing to shift: the product equals the raw mixture, and reusing
        # its arrays keeps this limit bit-identical to tp_project.
        z_d = moment_match(mix, cfg.br_mode)
        return EpProjection(z_marginal=z_d, z_d=z_d, rejected=False)
    shifted = z_u + mix.params
    if (
        allow_rejection
        and cfg.variant is DetectorVariant.EP_MODIFIED
        and rejection_check(shifted, z_u, cfg.rejection, m_bar_overrides)
    ):
        return EpProjection(z_marginal=z_u, z_d=0.0 + 0.0j, rejected=True)
    lw = mix.log_weights - _log_i0_u(np.abs(mix.params)) + _log_i0_u(np.abs(shifted))
    z_proj = moment_match(TikhonovMixture(lw, shifted), cfg.br_mode)
    z_d = z_proj - z_u
    return EpProjection(z_marginal=z_u + z_d, z_d=z_d, rejected=False)


def damp(z_new_d: complex, z_prev_d: complex, xi: float) -> complex:
    """Convex combination of the fresh and previous downward parameters."""
    if not (0.0 <= xi <= 1.0):
        raise ValueError("xi must lie in [0, 1]")
    return xi * z_new_d + (1.0 - xi) * z_prev_d


@dataclass
class DetectorState:
    """Per-frame message arrays for the forward/backward schedule.

    z_f[k] and z_b[k] are the directional messages entering symbol k (they
    exclude observation k). The *_prev copies hold the previous inner
    iteration's messages, which the opposite pass composes into its prior;
    z_d_prev is the damping memory, reset to zero for each detector run.
    """

    z_f: NDArray[np.complex128]
    z_b: NDArray[np.complex128]
    z_f_prev: NDArray[np.complex128]
    z_b_prev: NDArray[np.complex128]
    z_d: NDArray[np.complex128]
    z_d_prev: NDArray[np.complex128]
    rejected: NDArray[np.uint8]
    ops: OpCount = field(default_factory=OpCount)
    total_rejections: int = 0
    inner_iterations_run: int = 0

    @classmethod
    def fresh(cls, K: int) -> "DetectorState":
        return cls(
            z_f=np.zeros(K, dtype=np.complex128),
            z_b=np.zeros(K, dtype=np.complex128),
            z_f_prev=np.zeros(K, dtype=np.complex128),
            z_b_prev=np.zeros(K, dtype=np.complex128),
            z_d=np.zeros(K, dtype=np.complex128),
            z_d_prev=np.zeros(K, dtype=np.complex128),
            rejected=np.zeros(K, dtype=np.uint8),
        )

    @property
    def z_u(self) -> NDArray[np.complex128]:
        return self.z_f + self.z_b


@nb.njit(cache=True)
def _scan_pass(
    z_obs,
    logw,
    ncomp,
    z_out,
    z_opp,
    use_opp,
    z_d,
    z_d_prev,
    rej_flags,
    gate,
    gamma_th,
    m_bar,
    is_ep,
    use_rejection,
    br_mode,
    xi,
    var_delta,
    forward,
    ops,
):
    """One directional pass over the frame; see filter_pass for semantics.

    ops accumulates (adds, mults, lut, rejections, clamps); the arithmetic
    tallies follow the implemented operation mix per mixture component and
    per symbol, so totals are affine in the component count.
    """
    K = z_obs.shape[0]
    Mmax = z_obs.shape[1]
    sc_z = np.empty(Mmax, dtype=np.complex128)
    sc_lw = np.empty(Mmax, dtype=np.float64)
    ncond = gamma_th.shape[0]
    adds = 0.0
    mults = 0.0
    lut = 0.0
    if forward:
        start, stop, step = 0, K, 1
    else:
        start, stop, step = K - 1, -1, -1
    z_prop = 0.0 + 0.0j
    for k in range(start, stop, step):
        z_out[k] = z_prop
        n = ncomp[k]
        rej_flags[k] = 0
        if is_ep:
            zu = z_prop + z_opp[k] if use_opp else z_prop
            if use_opp:
                adds += 2.0
            if zu == 0:
                # transparent-prior limit: project the raw mixture directly
                z_t, cl = _moment_match_core(z_obs[k, :n], logw[k, :n], br_mode)
                adds += 3.0 * n + 2.0
                mults += 6.0 * n + 5.0
                lut += 2.0 * n + 2.0
                if cl:
                    ops[4] += 1.0
                if n == 1:
                    # single component: the message is exact, nothing to damp
                    z_d_k = z_t
                else:
                    z_d_k = xi * z_t + (1.0 - xi) * z_d_prev[k]
                    adds += 2.0
                    mults += 4.0
            else:
                for m in range(n):
                    sc_z[m] = zu + z_obs[k, m]
                adds += 2.0 * n
                rejected = False
                if use_rejection and gate[k] == 1 and abs(zu) > EPS_PRIOR:
                    zur = zu.real
                    zui = zu.imag
                    for c in range(ncond):
                        cnt = 0
                        for m in range(n):
                            re = sc_z[m].real * zur + sc_z[m].imag * zui
                            im = sc_z[m].imag * zur - sc_z[m].real * zui
                            if abs(math.atan2(im, re)) > gamma_th[c]:
                                cnt += 1
                        if cnt > m_bar[k, c]:
                            rejected = True
                            break
                    adds += 2.0 * n
                    mults += 4.0 * n
                    lut += 1.0 * n
                if rejected:
                    rej_flags[k] = 1
                    ops[3] += 1.0
                    z_d_k = 0.0 + 0.0j
                else:
                    for m in range(n):
                        sc_lw[m] = (
                            logw[k, m]
                            - _log_i0(abs(z_obs[k, m]))
                            + _log_i0(abs(sc_z[m]))
                        )
                    z_t, cl = _moment_match_core(sc_z[:n], sc_lw[:n], br_mode)
                    adds += 7.0 * n + 4.0
                    mults += 10.0 * n + 5.0
                    lut += 6.0 * n + 2.0
                    if cl:
                        ops[4] += 1.0
                    if n == 1:
                        z_d_k = z_t - zu
                        adds += 2.0
                    else:
                        z_d_k = xi * (z_t - zu) + (1.0 - xi) * z_d_prev[k]
                        adds += 4.0
                        mults += 4.0
        else:
            z_t, cl = _moment_match_core(z_obs[k, :n], logw[k, :n], br_mode)
            adds += 3.0 * n + 2.0
            mults += 6.0 * n + 5.0
            lut += 2.0 * n + 2.0
            if cl:
                ops[4] += 1.0
            if n == 1:
                z_d_k = z_t
            else:
                z_d_k = xi * z_t + (1.0 - xi) * z_d_prev[k]
                adds += 2.0
                mults += 4.0
        z_d[k] = z_d_k
        zt = z_prop + z_d_k
        a = abs(zt)
        if a == 0.0:
            z_prop = zt
        else:
            z_prop = zt / (1.0 + var_delta * a)
        adds += 4.0
        mults += 5.0
        lut += 1.0
    ops[0] += adds
    ops[1] += mults
    ops[2] += lut


def filter_pass(
    state: DetectorState,
    obs: ObservationSet,
    cfg: DetectorConfig,
    direction: str,
    iteration: int,
) -> DetectorState:
    """Run one directional pass, updating the state in place.

    At each symbol in scan order the incoming directional message is stored
    (it excludes the local observation), the prior z_u is composed per the
    schedule (iteration 1: own direction only; later iterations add the
    opposite direction's previous-iteration message), the configured
    projection produces a fresh z_d which is damped against z_d_prev, and
    the sum z_dir + z_d is propagated through the phase increment.

    Damping compensates the moment-matching approximation, so it applies
    only to multi-component rows: a single-component message (pilot, or a
    payload symbol pinned by feedback) is exact and passes through at full
    precision whatever the damping factor.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    if cfg.variant is DetectorVariant.DP_BCJR:
        raise ValueError("filter_pass does not apply to the grid-based variant")
    forward = direction == "forward"
    z_out = state.z_f if forward else state.z_b
    z_opp = state.z_b_prev if forward else state.z_f_prev
    ops = np.zeros(5, dtype=np.float64)
    _scan_pass(
        obs.z_obs,
        obs.logw,
        obs.ncomp,
        z_out,
        z_opp,
        iteration >= 2,
        state.z_d,
        state.z_d_prev,
        state.rejected,
        obs.gate,
        obs.gamma_th,
        obs.m_bar,
        cfg.variant.is_ep,
        cfg.variant is DetectorVariant.EP_MODIFIED and len(cfg.rejection) > 0,
        int(cfg.br_mode),
        float(cfg.damping),
        obs.var_delta,
        forward,
        ops,
    )
    state.ops += OpCount(ops[0], ops[1], ops[2])
    state.total_rejections += int(ops[3])
    if ops[4] > 0:
        warnings.warn(
            "moment magnitude clamped during projection", RuntimeWarning, stacklevel=2
        )
    return state


def run_detector(obs: ObservationSet, cfg: DetectorConfig) -> DetectorState:
    """Run n_inner forward/backward iterations over one frame."""
    state = DetectorState.fresh(obs.total_len)
    for n in range(1, cfg.n_inner + 1):
        state.z_f_prev[:] = state.z_f
        state.z_b_prev[:] = state.z_b
        filter_pass(state, obs, cfg, "forward", n)
        filter_pass(state, obs, cfg, "backward", n)
        state.z_d_prev[:] = state.z_d
        state.inner_iterations_run = n
    return state


def upward_log_pmfs(received, z_u, points, sigma2: float, ops: Optional[OpCount] = None):
    """Log symbol pmfs sent up to the decoder, for all symbols at once.

    P_u(c^m) is proportional to exp(-|c^m|^2/(2 sigma2)) I0(|z_u + z^m|):
    the observation likelihood marginalized over the Tikhonov phase belief
    t(theta; z_u), which excludes the symbol's own downward prior.
    """
    r = np.asarray(received, dtype=np.complex128)
    zu = np.asarray(z_u, dtype=np.complex128)
    pts = np.asarray(points, dtype=np.complex128)
    z = r[:, None] * np.conj(pts)[None, :] / sigma2
    lw = -np.abs(pts)[None, :] ** 2 / (2.0 * sigma2) + _log_i0_u(np.abs(zu[:, None] + z))
    lw -= logsumexp(lw, axis=1, keepdims=True)
    if ops is not None:
        K, M = lw.shape
        ops += OpCount(adds=K * (5.0 * M), mults=K * (8.0 * M), lut=K * (3.0 * M + 1.0))
    return lw


def upward_symbol_message(
    r_k: complex, z_u: complex, constellation: Constellation, sigma2: float
):
    """Normalized upward pmf for one symbol (see upward_log_pmfs)."""
    lw = upward_log_pmfs(
        np.asarray([r_k]), np.asarray([z_u]), constellation.points, sigma2
    )
    return np.exp(lw[0])


def wrapped_gaussian_kernel(n_theta: int, sigma_delta: float):
    """Banded circular kernel of the phase increment on the uniform grid.

    Returns (kernel, half_width): a wrapped Gaussian truncated at five
    standard deviations (renormalized), as taps for offsets -w..w in grid
    steps. sigma_delta = 0 degenerates to the identity kernel.
    """
    if n_theta < 2:
        raise ValueError("n_theta must be >= 2")
    if sigma_delta < 0:
        raise ValueError("sigma_delta must be >= 0")
    if sigma_delta == 0.0:
        return np.ones(1, dtype=np.float64), 0
    dth = 2.0 * math.pi / n_theta
    w = min(int(math.ceil(5.0 * sigma_delta / dth)), n_theta // 2)
    offs = np.arange(-w, w + 1) * dth
    kern = np.exp(-(offs**2) / (2.0 * sigma_delta**2))
    return kern / kern.sum(), w


def _band_convolve(x, kern, w):
    if w == 0:
        return x * kern[0]
    return np.convolve(np.concatenate((x[-w:], x, x[:w])), kern, mode="valid")


@dataclass
class DpBcjrResult:
    log_posterior: NDArray[np.float64]  # (K, N) phase posteriors
    log_upward: NDArray[np.float64]  # (K, M) extrinsic symbol pmfs
    log_alpha: NDArray[np.float64]
    log_beta: NDArray[np.float64]
    ops: OpCount

    @property
    def upward(self) -> NDArray[np.float64]:
        return np.exp(self.log_upward)


def dp_bcjr(
    received, priors, points, params: ChannelParams, n_theta: int = 512
) -> DpBcjrResult:
    """Discretized-phase BCJR over a uniform grid of n_theta phase bins.

    priors is the (K, M) matrix of downward symbol pmfs (linear domain,
    zeros allowed) over the constellation points. The forward/backward
    recursion runs in log domain with per-step normalization; predictions
    step through the banded wrapped Gaussian kernel. Upward messages
    marginalize the plain likelihood, not the prior-mixed emission, so they
    are extrinsic to the symbol's own pmf.
    """
    r = np.asarray(received, dtype=np.complex128)
    pr = np.asarray(priors, dtype=np.float64)
    pts = np.asarray(points, dtype=np.complex128)
    K = r.size
    M = pts.size
    if pr.shape != (K, M):
        raise ValueError("priors must be (K, M)")
    if not (pr >= 0).all() or (pr.sum(axis=1) <= 0).any():
        raise ValueError("each prior row must be a nonnegative pmf with mass")
    sigma2 = params.sigma2
    N = int(n_theta)
    kern, w = wrapped_gaussian_kernel(N, params.sigma_delta)
    L = float(kern.size)

    th = 2.0 * math.pi * np.arange(N) / N
    cos_th, sin_th = np.cos(th), np.sin(th)
    with np.errstate(divide="ignore"):
        lp = np.log(pr)
    # component parameters z_m = r conj(c_m)/sigma2 and the amplitude terms
    z = r[:, None] * np.conj(pts)[None, :] / sigma2
    base = -(np.abs(r)[:, None] ** 2 + np.abs(pts)[None, :] ** 2) / (2.0 * sigma2)

    def loglik(m):
        # log g_C(r_k - c_m e^{j theta_i}; sigma2) over the grid, constants
        # common to all m dropped
        return (
            base[:, m : m + 1]
            + np.real(z[:, m])[:, None] * cos_th[None, :]
            + np.imag(z[:, m])[:, None] * sin_th[None, :]
        )

    le = np.full((K, N), -np.inf)
    for m in range(M):
        np.logaddexp(le, lp[:, m : m + 1] + loglik(m), out=le)

    def step(msg, k):
        filt = msg + le[k]
        p = np.exp(filt - filt.max())
        with np.errstate(divide="ignore"):
            return np.log(_band_convolve(p / p.sum(), kern, w))

    log_alpha = np.empty((K, N))
    log_beta = np.empty((K, N))
    a = np.full(N, -math.log(N))
    for k in range(K):
        log_alpha[k] = a
        if k == K - 1:
            break
        a = step(a, k)
    b = np.full(N, -math.log(N))
    for k in range(K - 1, -1, -1):
        log_beta[k] = b
        if k == 0:
            break
        b = step(b, k)

    log_post = log_alpha + le + log_beta
    log_post -= logsumexp(log_post, axis=1, keepdims=True)

    ab = log_alpha + log_beta
    log_up = np.empty((K, M))
    for m in range(M):
        log_up[:, m] = logsumexp(ab + loglik(m), axis=1)
    log_up -= logsumexp(log_up, axis=1, keepdims=True)

    # per-frame tallies of the grid recursions (affine in L, hence
    # quadratic in N since the kernel width scales with the grid)
    ops = OpCount(
        adds=K * (N * (2.0 * M) + 2.0 * (N * (L + 1.0)) + 4.0 * N + M * 3.0 * N),
        mults=K * (N * 2.0 * M + 2.0 * (N * L)),
        lut=K * (N * (M + 1.0) + 2.0 * 3.0 * N + M * N),
    )
    return DpBcjrResult(
        log_posterior=log_post,
        log_upward=log_up,
        log_alpha=log_alpha,
        log_beta=log_beta,
        ops=ops,
    )
