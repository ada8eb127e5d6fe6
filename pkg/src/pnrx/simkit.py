"""Monte Carlo sweep engine: frame simulation, stopping, CSV/JSON output.

Every frame is seeded by (base_seed, point_key, frame_index), where the
point key folds the Eb/N0 value into an integer, so any frame can be
regenerated in isolation and a sweep's results do not depend on how the
frame loop is scheduled. Stopping follows the ordered-prefix rule: a point
ends at the first frame (in index order) where the cumulative frame-error
count reaches the target, or at the frame cap.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .detector import (
    BrMode,
    DetectorConfig,
    DetectorVariant,
    OpCount,
    build_observations,
    dp_bcjr,
    run_detector,
)
from .ldpc import LdpcCode, construct_regular, encode
from .modem import (
    Bursts,
    ChannelParams,
    Constellation,
    Distributed,
    FramePlan,
    PreamblePostambleOnly,
    apply_channel,
    build_frame,
    ebn0_to_sigma2,
    generate_phase,
    plan_for_payload,
)
from .receiver import GENIE_MODES, IterationSchedule, ReceiverConfig, run_receiver

__all__ = [
    "CSV_COLUMNS",
    "CodeSpec",
    "PlanSpec",
    "StoppingRule",
    "RunConfig",
    "PointResult",
    "predicted_symbol_ops",
    "count_ops",
    "config_hash",
    "point_key",
    "frame_rng",
    "simulate_frame",
    "run_point",
    "run_sweep",
]

CSV_COLUMNS = (
    "scenario",
    "variant",
    "ebn0_db",
    "frames",
    "bit_errors",
    "frame_errors",
    "ber",
    "fer",
    "mean_turbo_iters",
    "mean_rejections",
    "adds",
    "mults",
    "lut",
    "seed",
    "config_hash",
    "wall_seconds",
)


def _require(d: Dict, keys, where: str):
    missing = [k for k in keys if k not in d]
    if missing:
        raise ValueError(f"{where}: missing required keys {missing}")


def _reject_unknown(d: Dict, allowed, where: str):
    unknown = [k for k in d if k not in allowed]
    if unknown:
        raise ValueError(f"{where}: unknown keys {unknown}")


@dataclass(frozen=True)
class CodeSpec:
    """Regular LDPC construction parameters (deterministic given the seed)."""

    n: int
    col_weight: int = 3
    row_weight: int = 6
    seed: int = 0

    def build(self) -> LdpcCode:
        return construct_regular(
            self.n, self.col_weight, self.row_weight, rng=np.random.default_rng(self.seed)
        )

    def as_dict(self) -> Dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: Dict) -> "CodeSpec":
        _require(d, ("n",), "code")
        _reject_unknown(d, {"n", "col_weight", "row_weight", "seed"}, "code")
        return cls(**d)


_PLAN_KINDS = {
    "distributed": (Distributed, ("block_len", "gap")),
    "bursts": (Bursts, ("preamble", "burst_len", "burst_gap", "postamble")),
    "preamble_postamble": (PreamblePostambleOnly, ("length",)),
}


@dataclass(frozen=True)
class PlanSpec:
    kind: str
    params: Tuple[int, ...]

    def descriptor(self):
        ctor, names = _PLAN_KINDS[self.kind]
        return ctor(*self.params)

    def build(self, n_payload: int) -> FramePlan:
        return plan_for_payload(self.descriptor(), n_payload)

    def as_dict(self) -> Dict:
        names = _PLAN_KINDS[self.kind][1]
        return {"kind": self.kind, **dict(zip(names, self.params))}

    @classmethod
    def from_dict(cls, d: Dict) -> "PlanSpec":
        _require(d, ("kind",), "plan")
        kind = d["kind"]
        if kind not in _PLAN_KINDS:
            raise ValueError(f"plan: unknown kind {kind!r}")
        names = _PLAN_KINDS[kind][1]
        _require(d, names, "plan")
        _reject_unknown(d, {"kind", *names}, "plan")
        return cls(kind=kind, params=tuple(int(d[k]) for k in names))


@dataclass(frozen=True)
class StoppingRule:
    min_frame_errors: int = 100
    max_frames: int = 20000

    def __post_init__(self):
        if self.min_frame_errors < 1 or self.max_frames < 1:
            raise ValueError("stopping thresholds must be >= 1")

    def as_dict(self) -> Dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: Dict) -> "StoppingRule":
        _reject_unknown(d, {"min_frame_errors", "max_frames"}, "stopping")
        return cls(**d)


def _detector_as_dict(det: DetectorConfig) -> Dict:
    return {
        "variant": det.variant.value,
        "n_inner": det.n_inner,
        "damping": det.damping,
        "br_mode": det.br_mode.name,
        "rejection": [[g, m] for g, m in det.rejection],
        "decision_directed_thresholds": det.decision_directed_thresholds,
        "n_theta": det.n_theta,
    }


def _detector_from_dict(d: Dict) -> DetectorConfig:
    _require(d, ("variant",), "detector")
    _reject_unknown(
        d,
        {
            "variant",
            "n_inner",
            "damping",
            "br_mode",
            "rejection",
            "decision_directed_thresholds",
            "n_theta",
        },
        "detector",
    )
    kw = dict(d)
    kw["variant"] = DetectorVariant.from_name(kw["variant"])
    if "br_mode" in kw:
        try:
            kw["br_mode"] = BrMode[kw["br_mode"]]
        except KeyError:
            raise ValueError(f"detector: unknown br_mode {d['br_mode']!r}") from None
    if "rejection" in kw:
        kw["rejection"] = tuple((float(g), int(m)) for g, m in kw["rejection"])
    return DetectorConfig(**kw)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved description of one scenario/variant sweep."""

    scenario: str
    variant: str
    constellation: str
    code: CodeSpec
    plan: PlanSpec
    sigma_delta_deg: float
    schedule: IterationSchedule
    detector: DetectorConfig
    ebn0_grid: Tuple[float, ...]
    stopping: StoppingRule = StoppingRule()
    base_seed: int = 0
    genie: str = "none"
    n0_inflation_factor: float = 1.0
    n0_inflation_threshold_db: float = math.inf

    def __post_init__(self):
        if self.genie not in GENIE_MODES:
            raise ValueError(f"genie must be one of {GENIE_MODES}")
        if self.sigma_delta_deg < 0:
            raise ValueError("sigma_delta_deg must be >= 0")
        if self.n0_inflation_factor < 1.0:
            raise ValueError("n0_inflation_factor must be >= 1")
        if len(self.ebn0_grid) == 0:
            raise ValueError("ebn0_grid must not be empty")
        Constellation.by_name(self.constellation)  # validates the name

    def as_dict(self) -> Dict:
        return {
            "scenario": self.scenario,
            "variant": self.variant,
            "constellation": self.constellation,
            "code": self.code.as_dict(),
            "plan": self.plan.as_dict(),
            "sigma_delta_deg": self.sigma_delta_deg,
            "schedule": {
                "n_detector": self.schedule.n_detector,
                "n_decoder": self.schedule.n_decoder,
                "n_turbo": self.schedule.n_turbo,
            },
            "detector": _detector_as_dict(self.detector),
            "ebn0_grid": list(self.ebn0_grid),
            "stopping": self.stopping.as_dict(),
            "base_seed": self.base_seed,
            "genie": self.genie,
            "n0_inflation_factor": self.n0_inflation_factor,
            "n0_inflation_threshold_db": self.n0_inflation_threshold_db,
        }

    @classmethod
    def from_dict(cls, d: Dict) -> "RunConfig":
        required = (
            "scenario",
            "constellation",
            "code",
            "plan",
            "sigma_delta_deg",
            "schedule",
            "detector",
            "ebn0_grid",
        )
        _require(d, required, "config")
        _reject_unknown(
            d,
            {
                *required,
                "variant",
                "stopping",
                "base_seed",
                "genie",
                "n0_inflation_factor",
                "n0_inflation_threshold_db",
            },
            "config",
        )
        sched = d["schedule"]
        _require(sched, ("n_detector", "n_decoder", "n_turbo"), "schedule")
        _reject_unknown(sched, {"n_detector", "n_decoder", "n_turbo"}, "schedule")
        det = _detector_from_dict(d["detector"])
        thr = d.get("n0_inflation_threshold_db", math.inf)
        if isinstance(thr, str):
            thr = float(thr)  # JSON cannot carry inf natively
        return cls(
            scenario=str(d["scenario"]),
            variant=str(d.get("variant", det.variant.value)),
            constellation=str(d["constellation"]),
            code=CodeSpec.from_dict(d["code"]),
            plan=PlanSpec.from_dict(d["plan"]),
            sigma_delta_deg=float(d["sigma_delta_deg"]),
            schedule=IterationSchedule(
                int(sched["n_detector"]), int(sched["n_decoder"]), int(sched["n_turbo"])
            ),
            detector=det,
            ebn0_grid=tuple(float(x) for x in d["ebn0_grid"]),
            stopping=StoppingRule.from_dict(d.get("stopping", {})),
            base_seed=int(d.get("base_seed", 0)),
            genie=str(d.get("genie", "none")),
            n0_inflation_factor=float(d.get("n0_inflation_factor", 1.0)),
            n0_inflation_threshold_db=float(thr),
        )

    def resolved_detector(self, ebn0_db: float) -> DetectorConfig:
        """Per-point detector config with the noise inflation applied."""
        factor = (
            self.n0_inflation_factor
            if ebn0_db >= self.n0_inflation_threshold_db
            else 1.0
        )
        return dataclasses.replace(self.detector, n0_inflation=factor)


def config_hash(cfg: RunConfig) -> str:
    """sha256 over the canonical JSON form of the resolved config."""
    blob = json.dumps(cfg.as_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def point_key(ebn0_db: float) -> int:
    """Fold an Eb/N0 value into an unsigned 64-bit seed word (micro-dB)."""
    return int(round(ebn0_db * 1e6)) & 0xFFFFFFFFFFFFFFFF


def frame_rng(base_seed: int, ebn0_db: float, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence((base_seed, point_key(ebn0_db), frame_index))
    )


@dataclass
class PointResult:
    ebn0_db: float
    frames: int
    info_bits_per_frame: int
    bit_errors: int
    frame_errors: int
    mean_turbo_iters: float
    mean_rejections: float
    ops: OpCount  # mean per frame
    wall_seconds: float

    @property
    def ber(self) -> float:
        if not self.frames:
            return math.nan
        return self.bit_errors / (self.frames * self.info_bits_per_frame)

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else math.nan


@dataclass
class _FrameOutcome:
    bit_errors: int
    frame_error: bool
    turbo_iters: int
    rejections: int
    ops: OpCount


def _build_static(cfg: RunConfig):
    const = Constellation.by_name(cfg.constellation)
    code = cfg.code.build()
    if code.n % const.bits_per_symbol != 0:
        raise ValueError("code length must divide into whole symbols")
    plan = cfg.plan.build(code.n // const.bits_per_symbol)
    return const, code, plan


def simulate_frame(
    cfg: RunConfig,
    ebn0_db: float,
    frame_index: int,
    const: Constellation,
    code: LdpcCode,
    plan: FramePlan,
) -> _FrameOutcome:
    """Generate, transmit, and decode one frame; fully determined by index."""
    rng = frame_rng(cfg.base_seed, ebn0_db, frame_index)
    sigma2 = ebn0_to_sigma2(
        ebn0_db, code.rate, const.bits_per_symbol, plan.payload_fraction
    )
    ch = ChannelParams(sigma2, math.radians(cfg.sigma_delta_deg))
    info = rng.integers(0, 2, code.k).astype(np.uint8)
    frame = build_frame(plan, const, encode(code, info), rng)
    phase = generate_phase(plan.total_len, ch, rng)
    received = apply_channel(frame.coded_symbols, phase, ch, rng)
    frame = dataclasses.replace(frame, true_phase=phase, received=received)
    rcfg = ReceiverConfig(
        schedule=cfg.schedule,
        detector=cfg.resolved_detector(ebn0_db),
        channel=ch,
        constellation=const,
        genie=cfg.genie,
    )
    res = run_receiver(frame, code, rcfg)
    nerr = int(np.count_nonzero(res.decoded_bits != info))
    return _FrameOutcome(
        bit_errors=nerr,
        frame_error=nerr > 0,
        turbo_iters=res.turbo_iterations,
        rejections=res.rejections,
        ops=res.ops,
    )


def run_point(
    cfg: RunConfig,
    ebn0_db: float,
    static=None,
) -> PointResult:
    """Simulate one grid point under the ordered-prefix stopping rule."""
    const, code, plan = static if static is not None else _build_static(cfg)
    stop = cfg.stopping
    t0 = time.perf_counter()
    bit_errors = 0
    frame_errors = 0
    turbo_sum = 0
    rej_sum = 0
    ops = OpCount()
    frames = 0
    while frames < stop.max_frames and frame_errors < stop.min_frame_errors:
        out = simulate_frame(cfg, ebn0_db, frames, const, code, plan)
        frames += 1
        bit_errors += out.bit_errors
        frame_errors += int(out.frame_error)
        turbo_sum += out.turbo_iters
        rej_sum += out.rejections
        ops += out.ops
    return PointResult(
        ebn0_db=ebn0_db,
        frames=frames,
        info_bits_per_frame=code.k,
        bit_errors=bit_errors,
        frame_errors=frame_errors,
        mean_turbo_iters=turbo_sum / frames,
        mean_rejections=rej_sum / frames,
        ops=ops.scaled(1.0 / frames),
        wall_seconds=time.perf_counter() - t0,
    )


def _point_task(task: Tuple[RunConfig, float]) -> PointResult:
    cfg, ebn0 = task
    return run_point(cfg, ebn0)


def run_sweep(
    cfg: RunConfig,
    out_dir,
    on_point: Optional[Callable[[PointResult], None]] = None,
    workers: int = 1,
) -> Path:
    """Run all grid points and write the CSV plus its JSON config sidecar.

    Each grid point is seeded independently, so workers > 1 farms points out
    to a process pool without changing any counter, only the wall time.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = config_hash(cfg)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        n_workers = min(workers, len(cfg.ebn0_grid))
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            points = list(pool.map(_point_task, [(cfg, e) for e in cfg.ebn0_grid]))
    else:
        static = _build_static(cfg)
        points = [run_point(cfg, e, static=static) for e in cfg.ebn0_grid]
    rows: List[Dict] = []
    for ebn0, pt in zip(cfg.ebn0_grid, points):
        if on_point is not None:
            on_point(pt)
        fmt = lambda x: repr(float(x))  # noqa: E731
        rows.append(
            {
                "scenario": cfg.scenario,
                "variant": cfg.variant,
                "ebn0_db": fmt(ebn0),
                "frames": pt.frames,
                "bit_errors": pt.bit_errors,
                "frame_errors": pt.frame_errors,
                "ber": fmt(pt.ber),
                "fer": fmt(pt.fer),
                "mean_turbo_iters": fmt(pt.mean_turbo_iters),
                "mean_rejections": fmt(pt.mean_rejections),
                "adds": fmt(pt.ops.adds),
                "mults": fmt(pt.ops.mults),
                "lut": fmt(pt.ops.lut),
                "seed": cfg.base_seed,
                "config_hash": digest,
                "wall_seconds": fmt(pt.wall_seconds),
            }
        )
    stem = f"{cfg.scenario}_{cfg.variant}".replace(" ", "_")
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(CSV_COLUMNS))
        writer.writeheader()
        writer.writerows(rows)
    sidecar = cfg.as_dict()
    sidecar["config_hash"] = digest
    if math.isinf(sidecar["n0_inflation_threshold_db"]):
        sidecar["n0_inflation_threshold_db"] = "inf"
    with open(out_dir / f"{stem}.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path


def predicted_symbol_ops(
    variant: DetectorVariant, M: int, n_theta: int = 512
) -> OpCount:
    """Closed-form per-symbol, per-iteration operation counts.

    TP and EP costs are affine in the constellation size M; the grid
    detector's are quadratic in the grid resolution through the kernel
    width, with N = n_theta bins.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if variant is DetectorVariant.TP:
        return OpCount(7.0 * M + 12.0, 11.0 * M + 22.0, 2.0 * M + 2.0)
    if variant.is_ep:
        return OpCount(16.0 * M + 18.0, 34.0 * M + 25.0, 12.0 * M + 8.0)
    N = float(n_theta)
    return OpCount(
        5.0 * N * N + (18.0 * M - 6.0) * N - (M + 2.0),
        N * (14.0 * M + 1.0) + 1.0,
        2.0 * N * N + N * (3.0 * M - 1.0) - M,
    )


def count_ops(variant: DetectorVariant, M: int, n_theta: int = 512) -> Dict:
    """Predicted vs measured per-symbol operation counts for one variant.

    The measured numbers come from one synthetic M-PSK calibration frame
    (pilot-seeded so no observation is rejected) normalized per symbol and
    per inner iteration. They follow the same scaling law as the predictions
    but count the implemented operation mix, whose accounting constants
    differ, so the ratio is a calibration figure rather than one.
    """
    K = 256
    rng = np.random.default_rng(M)
    points = np.exp(2j * math.pi * np.arange(M) / M)
    idx = rng.integers(0, M, K)
    received = points[idx] + 0.2 * (rng.normal(size=K) + 1j * rng.normal(size=K))
    log_priors = np.full((K, M), -math.log(M))
    pilots = np.arange(K) % 4 == 0
    log_priors[pilots] = -np.inf
    log_priors[pilots, idx[pilots]] = 0.0
    # a 6 deg increment keeps the grid detector's banded kernel width growing
    # with n_theta, matching the scaling class of the dense-count prediction
    sigma2, var_delta = 0.3, math.radians(6.0) ** 2
    if variant is DetectorVariant.DP_BCJR:
        params = ChannelParams(sigma2, math.sqrt(var_delta))
        priors = np.exp(log_priors)  # the grid detector takes linear pmfs
        result = dp_bcjr(received, priors, points, params, n_theta)
        measured = result.ops.scaled(1.0 / K)
    else:
        cfg = DetectorConfig(variant)
        obs = build_observations(
            received, log_priors, points, sigma2, var_delta, gate=~pilots
        )
        state = run_detector(obs, cfg)
        measured = state.ops.scaled(1.0 / (K * cfg.n_inner))
    predicted = predicted_symbol_ops(variant, M, n_theta)
    pred = tuple(float(x) for x in predicted.as_tuple())
    meas = tuple(float(x) for x in measured.as_tuple())
    return {
        "predicted": pred,
        "measured": meas,
        "ratio": tuple(m / p if p else math.nan for m, p in zip(meas, pred)),
    }
