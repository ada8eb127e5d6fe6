"""Scenario presets: ready-to-run sweep configurations for the benchmarks.

Each preset expands to a dictionary of complete RunConfig objects keyed by
variant name, so one preset describes one figure-style comparison (shared
channel, code, and pilot layout; one entry per receiver). Desk-scale values
are baked in: the length-4000 (3,6) code, and per-variant Eb/N0 grids that
bracket each receiver's BER = 1e-3 crossing.
"""

from __future__ import annotations

import math
from typing import Dict, Optional, Tuple

from .detector import BrMode, DetectorConfig, DetectorVariant
from .receiver import IterationSchedule
from .simkit import CodeSpec, PlanSpec, RunConfig, StoppingRule

__all__ = ["PRESET_NAMES", "build_preset", "preset_config"]

PRESET_NAMES = (
    "Fig3Distributed",
    "Fig4DvbDistributed",
    "Fig5Concentrated",
    "KnownPhase",
    "AllPilots",
)

_CODE = CodeSpec(4000, col_weight=3, row_weight=6, seed=1)

# benchmark detectors; the native-EP family runs one inner pass, the
# modified variant needs two to converge, damping 0.4 throughout
_TP = DetectorConfig(DetectorVariant.TP)
_EP_NATIVE = DetectorConfig(DetectorVariant.EP_NATIVE, br_mode=BrMode.ExpApprox)
_EP_DAMPED = DetectorConfig(
    DetectorVariant.EP_DAMPED, damping=0.4, br_mode=BrMode.ExpApprox
)
_EP_MODIFIED = DetectorConfig(
    DetectorVariant.EP_MODIFIED,
    n_inner=2,
    damping=0.4,
    br_mode=BrMode.PiecewiseInverse,
    rejection=((math.pi / 2, 0),),
)
_DP_BCJR = DetectorConfig(DetectorVariant.DP_BCJR, n_theta=512)


def _grid(start: float, step: float, stop: float) -> Tuple[float, ...]:
    n = int(round((stop - start) / step))
    return tuple(round(start + i * step, 6) for i in range(n + 1))


def _separate(
    scenario: str,
    variant: str,
    plan: PlanSpec,
    sigma_delta_deg: float,
    detector: DetectorConfig,
    ebn0_grid: Tuple[float, ...],
    genie: str = "none",
) -> RunConfig:
    """Separate detection and decoding: N_T = 1 with the full decoder budget."""
    return RunConfig(
        scenario=scenario,
        variant=variant,
        constellation="qpsk",
        code=_CODE,
        plan=plan,
        sigma_delta_deg=sigma_delta_deg,
        schedule=IterationSchedule(detector.n_inner, 200, 1),
        detector=detector,
        ebn0_grid=ebn0_grid,
        stopping=StoppingRule(),
        genie=genie,
    )


def _fig3() -> Dict[str, RunConfig]:
    plan = PlanSpec("distributed", (1, 19))
    sd = 6.0

    def mk(variant, det, grid, genie="none"):
        return _separate("Fig3Distributed", variant, plan, sd, det, grid, genie)

    return {
        "KnownPhase": mk("KnownPhase", _TP, _grid(1.0, 0.25, 2.25), "known_phase"),
        "AllPilots": mk("AllPilots", _TP, _grid(1.25, 0.25, 2.5), "all_pilots"),
        "DpBcjr": mk("DpBcjr", _DP_BCJR, _grid(2.25, 0.25, 3.5)),
        "EpModified": mk("EpModified", _EP_MODIFIED, _grid(2.5, 0.25, 3.75)),
        "TP": mk("TP", _TP, _grid(2.75, 0.25, 4.0)),
        "EpDamped": mk("EpDamped", _EP_DAMPED, _grid(3.25, 0.25, 4.5)),
        "EpNative": mk("EpNative", _EP_NATIVE, _grid(4.0, 0.25, 5.25)),
    }


def _fig4() -> Dict[str, RunConfig]:
    plan = PlanSpec("bursts", (90, 36, 1440, 90))
    sd = 1.0
    epm = DetectorConfig(
        DetectorVariant.EP_MODIFIED,
        n_inner=2,
        damping=0.4,
        br_mode=BrMode.PiecewiseInverse,
        rejection=((math.pi / 12, 1), (math.pi / 6, 0)),
    )

    def mk(variant, det, grid, genie="none"):
        return _separate("Fig4DvbDistributed", variant, plan, sd, det, grid, genie)

    return {
        "KnownPhase": mk("KnownPhase", _TP, _grid(0.75, 0.25, 2.0), "known_phase"),
        "DpBcjr": mk("DpBcjr", _DP_BCJR, _grid(1.0, 0.25, 2.25)),
        "EpModified": mk("EpModified", epm, _grid(1.0, 0.25, 2.25)),
        "TP": mk("TP", _TP, _grid(1.25, 0.25, 2.75)),
        "EpDamped": mk("EpDamped", _EP_DAMPED, _grid(1.25, 0.25, 2.75)),
        "EpNative": mk("EpNative", _EP_NATIVE, _grid(1.5, 0.25, 3.0)),
    }


def _fig5() -> Dict[str, RunConfig]:
    plan = PlanSpec("preamble_postamble", (45,))
    sd = 1.0
    scenario = "Fig5Concentrated"
    epm = DetectorConfig(
        DetectorVariant.EP_MODIFIED,
        damping=0.5,
        br_mode=BrMode.PiecewiseInverse,
        rejection=((math.pi / 6, 1), (math.pi / 4, 0)),
        decision_directed_thresholds=True,
    )
    joint = IterationSchedule(1, 1, 50)
    out = {
        "KnownPhase": _separate(
            scenario, "KnownPhase", plan, sd, _TP, _grid(1.25, 0.25, 2.0), "known_phase"
        ),
        "AllPilots": _separate(
            scenario, "AllPilots", plan, sd, _TP, _grid(1.25, 0.25, 2.0), "all_pilots"
        ),
        "TpNt1": _separate(scenario, "TpNt1", plan, sd, _TP, _grid(1.0, 1.0, 4.0)),
        "TpNt50": RunConfig(
            scenario=scenario,
            variant="TpNt50",
            constellation="qpsk",
            code=_CODE,
            plan=plan,
            sigma_delta_deg=sd,
            schedule=joint,
            detector=_TP,
            ebn0_grid=_grid(1.0, 1.0, 4.0),
            stopping=StoppingRule(),
        ),
        "EpModified": RunConfig(
            scenario=scenario,
            variant="EpModified",
            constellation="qpsk",
            code=_CODE,
            plan=plan,
            sigma_delta_deg=sd,
            schedule=joint,
            detector=epm,
            ebn0_grid=_grid(1.25, 0.25, 2.5),
            stopping=StoppingRule(),
            n0_inflation_factor=1.25,
            n0_inflation_threshold_db=2.5,
        ),
    }
    return out


def _known_phase() -> Dict[str, RunConfig]:
    plan = PlanSpec("distributed", (1, 19))
    return {
        "KnownPhase": _separate(
            "KnownPhase", "KnownPhase", plan, 6.0, _TP,
            _grid(1.0, 0.25, 2.25), "known_phase",
        )
    }


def _all_pilots() -> Dict[str, RunConfig]:
    plan = PlanSpec("distributed", (1, 19))
    return {
        "AllPilots": _separate(
            "AllPilots", "AllPilots", plan, 6.0, _TP,
            _grid(1.25, 0.25, 2.5), "all_pilots",
        )
    }


_BUILDERS = {
    "Fig3Distributed": _fig3,
    "Fig4DvbDistributed": _fig4,
    "Fig5Concentrated": _fig5,
    "KnownPhase": _known_phase,
    "AllPilots": _all_pilots,
}


def build_preset(name: str) -> Dict[str, RunConfig]:
    """All variant configurations of one preset, keyed by variant name."""
    if name not in _BUILDERS:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    return _BUILDERS[name]()


def preset_config(name: str, variant: Optional[str] = None) -> RunConfig:
    """One variant of a preset; unambiguous presets need no variant name."""
    table = build_preset(name)
    if variant is None:
        if len(table) == 1:
            return next(iter(table.values()))
        raise ValueError(
            f"preset {name!r} has variants {sorted(table)}; pick one"
        )
    if variant not in table:
        raise ValueError(
            f"preset {name!r} has no variant {variant!r}; choose from {sorted(table)}"
        )
    return table[variant]
