"""Acceptance suite: oracle checks plus desk-scale BER reproductions.

Criteria 1-6 are fast deterministic oracle/property checks on the projection,
grid-detector, approximation, decoder, and operation-count layers. Criteria
7-10 run Monte Carlo sweeps of the packaged presets at reduced scale and
check the qualitative waterfall orderings; the sweeps are shared through
module-scoped fixtures and take tens of minutes in total. Every test prints
one "criterion N: PASS/FAIL" line carrying the measured numbers, and the
same line is the assertion message on failure.

Criterion 8's transparent-propagation clauses encode a payload-length effect
(pilot knowledge decaying to uselessness mid-frame) that the reduced payload
cannot reproduce: at 2000 symbols the preamble/postamble anchors still reach
the frame middle, so TP decodes where the full-scale system cannot bootstrap.
Those clauses are asserted as stated and left failing rather than loosened.
"""

import csv
import dataclasses
import math

import numpy as np
import pytest
from scipy.special import logsumexp

import oracles
from pnrx.detector import (
    DetectorConfig,
    DetectorVariant,
    dp_bcjr,
    ep_project,
    tp_project,
    wrapped_gaussian_kernel,
)
from pnrx.directional import (
    BrMode,
    TikhonovMixture,
    bessel_ratio,
    inv_br_piecewise,
    moment_match,
)
from pnrx.ldpc import LdpcCode, decode_spa
from pnrx.modem import ChannelParams
from pnrx.presets import build_preset
from pnrx.simkit import (
    StoppingRule,
    count_ops,
    predicted_symbol_ops,
    run_point,
    run_sweep,
)


def _report(num: int, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    line = f"criterion {num}: {verdict} - {detail}"
    print(line)
    assert ok, line


def _join_clauses(clauses):
    return "; ".join(("" if ok else "VIOLATED: ") + text for ok, text in clauses)


def _wrap(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _read_rows(csv_path):
    with open(csv_path, newline="") as fh:
        return list(csv.DictReader(fh))


def _crossing(rows, target=1e-3, bits_per_frame=2000.0):
    """Eb/N0 where log-linearly interpolated BER hits target, None if unbracketed.

    Zero-error points are floored at half an error over the observed bits, a
    conservative stand-in that keeps the bracket search meaningful.
    """
    pts = sorted(
        (float(r["ebn0_db"]), float(r["ber"]), float(r["frames"])) for r in rows
    )
    xs = [p[0] for p in pts]
    ys = [max(p[1], 0.5 / (p[2] * bits_per_frame)) for p in pts]
    for i in range(len(xs) - 1):
        if ys[i] >= target >= ys[i + 1]:
            if ys[i] == ys[i + 1]:
                return xs[i]
            t = (math.log10(target) - math.log10(ys[i])) / (
                math.log10(ys[i + 1]) - math.log10(ys[i])
            )
            return xs[i] + t * (xs[i + 1] - xs[i])
    return None


def _r_squared(x, y, deg):
    coef = np.polyfit(x, y, deg)
    resid = y - np.polyval(coef, x)
    return 1.0 - np.sum(resid**2) / np.sum((y - np.mean(y)) ** 2)


# --- oracle suite -----------------------------------------------------------


def test_criterion_01_moment_match_vs_quadrature():
    rng = np.random.default_rng(11)
    worst_ang = 0.0
    worst_mag = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 17))
        lw = rng.normal(0.0, 2.0, m)
        zs = rng.uniform(0.0, 30.0, m) * np.exp(1j * rng.uniform(-math.pi, math.pi, m))
        mix = TikhonovMixture.normalized(lw, zs)
        z = moment_match(mix, BrMode.Exact)
        m1 = oracles.mixture_trig_moment(mix.log_weights, mix.params, p=1, n=4096)
        worst_ang = max(worst_ang, abs(_wrap(np.angle(z) - np.angle(m1))))
        worst_mag = max(worst_mag, abs(bessel_ratio(abs(z)) - abs(m1)))
    _report(
        1,
        worst_ang < 1e-6 and worst_mag < 1e-6,
        f"1000 mixtures (M <= 16, |z| <= 30) vs 4096-point quadrature: "
        f"worst angle error {worst_ang:.2e} rad, worst first-moment "
        f"magnitude error {worst_mag:.2e} (tolerance 1e-6)",
    )


def test_criterion_02_grid_detector_vs_hmm_oracle():
    rng = np.random.default_rng(20260815)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 21))
        n = int(rng.choice([16, 32, 48, 64]))
        m = int(rng.choice([2, 4]))
        sigma2 = float(rng.uniform(0.05, 0.5))
        sigma_delta = math.radians(float(rng.uniform(1.0, 8.0)))
        points = np.exp(2j * math.pi * np.arange(m) / m)
        idx = rng.integers(0, m, k)
        theta = np.cumsum(rng.normal(0.0, sigma_delta, k)) + rng.uniform(
            -math.pi, math.pi
        )
        noise = math.sqrt(sigma2) * (rng.normal(size=k) + 1j * rng.normal(size=k))
        received = points[idx] * np.exp(1j * theta) + noise
        priors = rng.dirichlet(np.ones(m), size=k)
        pilots = rng.random(k) < 0.2
        priors[pilots] = 0.0
        priors[pilots, idx[pilots]] = 1.0
        res = dp_bcjr(
            received, priors, points, ChannelParams(sigma2, sigma_delta), n_theta=n
        )
        kern, w = wrapped_gaussian_kernel(n, sigma_delta)
        trans = np.zeros((n, n))
        for o in range(-w, w + 1):
            trans[np.arange(n), (np.arange(n) + o) % n] = kern[o + w]
        grid = 2.0 * math.pi * np.arange(n) / n
        ll = (
            -np.abs(
                received[:, None, None]
                - points[None, :, None] * np.exp(1j * grid)[None, None, :]
            )
            ** 2
            / (2.0 * sigma2)
        )
        with np.errstate(divide="ignore"):
            lp = np.log(priors)
        le = logsumexp(lp[:, :, None] + ll, axis=1)
        log_oracle = oracles.hmm_forward_backward(trans, le)
        worst = max(worst, float(np.max(np.abs(res.log_posterior - log_oracle))))
    _report(
        2,
        worst < 1e-10,
        f"100 random instances (K <= 20, N_theta <= 64) vs discrete-HMM "
        f"forward-backward: max abs log-marginal error {worst:.2e} "
        f"(tolerance 1e-10)",
    )


def test_criterion_03_inverse_bessel_ratio_round_trip():
    xs_dense = np.linspace(0.2, 10.0, 981)
    err_dense = np.abs(inv_br_piecewise(bessel_ratio(xs_dense)) - xs_dense)
    xs = np.linspace(0.2, 10.0, 50)
    br = bessel_ratio(xs)
    err_piece = np.abs(inv_br_piecewise(br) - xs)
    err_exp = np.abs(-0.5 / np.log(br) - xs)
    low = xs < 1.5
    margin = err_exp[low] - err_piece[low]
    _report(
        3,
        float(err_dense.max()) < 0.1 and bool(np.all(margin > 0.0)),
        f"piecewise round trip on x in [0.2, 10]: max error "
        f"{err_dense.max():.4f} (tolerance 0.1); exponential-approximation "
        f"round trip strictly larger at all {int(low.sum())} grid points "
        f"below x = 1.5 (min margin {margin.min():.4f})",
    )


def test_criterion_04_ep_reduces_to_tp_without_prior():
    rng = np.random.default_rng(4)
    modes = [BrMode.Exact, BrMode.ExpApprox, BrMode.Identity, BrMode.PiecewiseInverse]
    variants = [
        DetectorVariant.EP_NATIVE,
        DetectorVariant.EP_DAMPED,
        DetectorVariant.EP_MODIFIED,
    ]
    cases = 10_000
    mismatches = 0
    for i in range(cases):
        m = int(rng.integers(1, 9))
        lw = rng.normal(0.0, 2.0, m)
        zs = rng.uniform(0.0, 25.0, m) * np.exp(1j * rng.uniform(-math.pi, math.pi, m))
        mix = TikhonovMixture.normalized(lw, zs)
        mode = modes[i % 4]
        cfg = DetectorConfig(variants[i % 3], br_mode=mode, damping=0.5)
        proj = ep_project(mix, 0.0 + 0.0j, cfg)
        if np.angle(proj.z_d) != np.angle(tp_project(mix, mode)):
            mismatches += 1
    _report(
        4,
        mismatches == 0,
        f"EP data message with z_u = 0 vs TP projection over {cases} random "
        f"mixtures (all variants and Bessel-ratio modes): {mismatches} "
        f"angle mismatches (bit-exact comparison)",
    )


def test_criterion_05_spa_vs_exhaustive_map():
    h = np.array(
        [
            [1, 1, 0, 1, 1, 0, 0],
            [1, 0, 1, 1, 0, 1, 0],
            [0, 1, 1, 1, 0, 0, 1],
        ],
        dtype=np.uint8,
    )
    code = LdpcCode.from_dense(h)
    codewords = oracles.all_codewords(h)
    rng = np.random.default_rng(5)
    sigma2 = 1.0 / (2.0 * code.rate * 10.0 ** (4.0 / 10.0))
    draws = 10_000
    agree = 0
    for _ in range(draws):
        cw = codewords[rng.integers(0, len(codewords))]
        x = 1.0 - 2.0 * cw.astype(np.float64)
        y = x + math.sqrt(sigma2) * rng.normal(size=code.n)
        llr = 2.0 * y / sigma2
        spa = decode_spa(code, llr, 50)
        map_bits = (oracles.exhaustive_map_bit_llrs(codewords, llr) < 0).astype(
            np.uint8
        )
        agree += int(np.sum(spa.hard_bits == map_bits))
    rate = agree / (draws * code.n)
    _report(
        5,
        rate >= 0.99,
        f"(7,4) code, {draws} draws at Eb/N0 = 4 dB: SPA vs exhaustive-MAP "
        f"hard-decision agreement {rate:.4f} (threshold 0.99)",
    )


def test_criterion_06_operation_count_scaling():
    tp4 = predicted_symbol_ops(DetectorVariant.TP, 4).as_tuple()
    ep16 = predicted_symbol_ops(DetectorVariant.EP_NATIVE, 16).as_tuple()
    clauses = [
        (tp4 == (40.0, 66.0, 10.0), f"TP M=4 predicted {tp4} == (40, 66, 10)"),
        (
            ep16 == (274.0, 569.0, 200.0),
            f"EP M=16 predicted {ep16} == (274, 569, 200)",
        ),
    ]
    sizes = np.array([2.0, 4.0, 8.0, 16.0])
    for variant in (DetectorVariant.TP, DetectorVariant.EP_NATIVE):
        meas = np.array(
            [count_ops(variant, int(m))["measured"] for m in sizes]
        )
        r2 = min(_r_squared(sizes, meas[:, j], 1) for j in range(3))
        clauses.append(
            (r2 > 0.999, f"{variant.value} measured counters affine in M, "
             f"min R^2 {r2:.6f}")
        )
    grids = np.array([64.0, 128.0, 256.0, 512.0])
    meas = np.array(
        [count_ops(DetectorVariant.DP_BCJR, 4, int(n))["measured"] for n in grids]
    )
    r2 = min(_r_squared(grids, meas[:, j], 2) for j in range(3))
    clauses.append(
        (r2 > 0.999, f"DpBcjr measured counters quadratic in N_theta, "
         f"min R^2 {r2:.6f}")
    )
    _report(6, all(ok for ok, _ in clauses), _join_clauses(clauses))


# --- desk-scale sweeps ------------------------------------------------------

# three-point grids centered on previously located 1e-3 crossings, endpoints
# about 0.25 dB out so the bracket survives Monte Carlo wobble
_FIG3_RUNS = {
    "KnownPhase": ((1.45, 1.7, 1.95), StoppingRule(80, 4000)),
    "AllPilots": ((1.85, 2.1, 2.35), StoppingRule(80, 4000)),
    "DpBcjr": ((2.9, 3.15, 3.4), StoppingRule(50, 2200)),
    "EpModified": ((3.1, 3.35, 3.6), StoppingRule(50, 2000)),
    "TP": ((3.3, 3.55, 3.8), StoppingRule(50, 2000)),
    "EpDamped": ((3.85, 4.1, 4.35), StoppingRule(50, 2000)),
    "EpNative": ((4.65, 4.9, 5.15), StoppingRule(50, 2000)),
}


@pytest.fixture(scope="module")
def fig3(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig3")
    presets = build_preset("Fig3Distributed")
    rows = {}
    csvs = {}
    for name, (grid, stop) in _FIG3_RUNS.items():
        cfg = dataclasses.replace(
            presets[name], ebn0_grid=grid, stopping=stop, base_seed=0
        )
        csvs[name] = run_sweep(cfg, out / name, workers=3)
        rows[name] = _read_rows(csvs[name])
    return {"presets": presets, "rows": rows, "csvs": csvs}


def test_criterion_07_distributed_pilot_ordering(fig3):
    x = {name: _crossing(fig3["rows"][name]) for name in _FIG3_RUNS}
    unbracketed = sorted(name for name, v in x.items() if v is None)
    assert not unbracketed, (
        f"criterion 7: FAIL - no 1e-3 crossing bracketed for {unbracketed}"
    )
    dp = x["DpBcjr"]
    epm = x["EpModified"]
    tp = x["TP"]
    damped = x["EpDamped"]
    native = x["EpNative"]
    clauses = [
        (
            dp < min(epm, tp, damped, native),
            f"DpBcjr best at {dp:.2f} dB",
        ),
        (epm - dp <= 0.3, f"EpModified {epm - dp:+.2f} dB from DpBcjr (<= 0.3)"),
        (
            0.2 <= tp - dp <= 0.8,
            f"TP {tp - dp:+.2f} dB from DpBcjr (within [0.2, 0.8])",
        ),
        (
            native - dp >= 1.0,
            f"EpNative {native - dp:+.2f} dB from DpBcjr (>= 1.0)",
        ),
        (
            epm < damped < native,
            f"EpDamped at {damped:.2f} dB strictly between EpModified "
            f"({epm:.2f}) and EpNative ({native:.2f})",
        ),
    ]
    _report(7, all(ok for ok, _ in clauses), _join_clauses(clauses))


@pytest.fixture(scope="module")
def fig5(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig5")
    presets = build_preset("Fig5Concentrated")
    tp1 = run_point(
        dataclasses.replace(
            presets["TpNt1"],
            ebn0_grid=(3.0,),
            stopping=StoppingRule(30, 150),
            base_seed=0,
        ),
        3.0,
    )
    tp50 = run_point(
        dataclasses.replace(
            presets["TpNt50"],
            ebn0_grid=(3.0,),
            stopping=StoppingRule(30, 120),
            base_seed=0,
        ),
        3.0,
    )
    grid = (1.5, 1.875, 2.25)
    epm_csv = run_sweep(
        dataclasses.replace(
            presets["EpModified"],
            ebn0_grid=grid,
            stopping=StoppingRule(25, 350),
            base_seed=0,
        ),
        out / "epm",
        workers=3,
    )
    ap_csv = run_sweep(
        dataclasses.replace(
            presets["AllPilots"],
            ebn0_grid=grid,
            stopping=StoppingRule(30, 700),
            base_seed=0,
        ),
        out / "ap",
        workers=3,
    )
    return {
        "tp1": tp1,
        "tp50": tp50,
        "epm": _read_rows(epm_csv),
        "ap": _read_rows(ap_csv),
    }


def test_criterion_08_concentrated_pilot_bootstrap(fig5):
    tp1 = fig5["tp1"]
    tp50 = fig5["tp50"]
    clauses = [
        (
            tp1.ber > 0.1,
            f"TP N_T=1 at 3 dB: BER {tp1.ber:.3g} over {tp1.frames} frames "
            f"(> 0.1 required)",
        ),
        (
            tp50.ber > 0.1,
            f"TP N_T=50 at 3 dB: BER {tp50.ber:.3g} over {tp50.frames} frames "
            f"(> 0.1 required)",
        ),
    ]
    x_epm = _crossing(fig5["epm"])
    x_ap = _crossing(fig5["ap"])
    if x_epm is None or x_ap is None:
        clauses.append(
            (False, f"missing 1e-3 crossing (EpModified {x_epm}, AllPilots {x_ap})")
        )
    else:
        clauses.append(
            (
                x_epm - x_ap <= 1.5,
                f"EpModified with rejection reaches 1e-3 at {x_epm:.2f} dB, "
                f"{x_epm - x_ap:+.2f} dB from the All-Pilots bound at "
                f"{x_ap:.2f} dB (<= 1.5 required)",
            )
        )
    _report(8, all(ok for ok, _ in clauses), _join_clauses(clauses))


def test_criterion_09_all_pilots_vs_known_phase(fig3):
    x_kp = _crossing(fig3["rows"]["KnownPhase"])
    x_ap = _crossing(fig3["rows"]["AllPilots"])
    assert x_kp is not None and x_ap is not None, (
        f"criterion 9: FAIL - missing crossing (KnownPhase {x_kp}, AllPilots {x_ap})"
    )
    gap = x_ap - x_kp
    _report(
        9,
        0.0 < gap <= 0.5,
        f"All-Pilots at {x_ap:.2f} dB vs Known-Phase at {x_kp:.2f} dB: "
        f"gap {gap:+.2f} dB (positive, <= 0.5)",
    )


def test_criterion_10_determinism_across_workers(fig3, tmp_path):
    grid, stop = _FIG3_RUNS["AllPilots"]
    cfg = dataclasses.replace(
        fig3["presets"]["AllPilots"], ebn0_grid=grid, stopping=stop, base_seed=0
    )
    serial_csv = run_sweep(cfg, tmp_path / "serial", workers=1)
    drop = lambda rows: [
        {k: v for k, v in r.items() if k != "wall_seconds"} for r in rows
    ]
    pooled = drop(fig3["rows"]["AllPilots"])
    serial = drop(_read_rows(serial_csv))
    _report(
        10,
        pooled == serial,
        f"AllPilots sweep rerun with workers=1 vs workers=3: all "
        f"{len(serial)} rows bit-identical in every counter column",
    )
