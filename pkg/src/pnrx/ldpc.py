"""Regular LDPC codes: construction, alist I/O, GF(2) encoding, SPA decoding.

Construction is progressive edge growth on a (col_deg, row_deg)-regular
bipartite graph, greedily avoiding length-4 cycles; when block length makes
girth >= 6 infeasible the builder keeps the attempt with the fewest forced
short cycles and records the outcome in ``girth6``. Encoding works from the
reduced row echelon form of H over GF(2) on bit-packed rows, so systematic
positions are the RREF's free columns. Decoding is flooding sum-product with
the tanh rule and saturated output LLRs.

LLR convention: positive means bit 0 is more likely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "LLR_MAX",
    "LdpcCode",
    "DecodeResult",
    "construct_regular",
    "load_matrix",
    "save_matrix",
    "encode",
    "syndrome",
    "decode_spa",
]

LLR_MAX = 30.0

# Exclusive tanh products are clipped just inside +-1 before arctanh.
_TANH_EPS = 1e-15


def _pack_rows(H: NDArray[np.uint8]) -> NDArray[np.uint8]:
    return np.packbits(H, axis=1, bitorder="little")


def _gf2_rref_packed(
    Hp: NDArray[np.uint8], n: int
) -> Tuple[NDArray[np.uint8], List[int]]:
    """In-place RREF of packed rows; returns (reduced rows, pivot columns)."""
    m = Hp.shape[0]
    pivot_cols: List[int] = []
    r = 0
    for j in range(n):
        if r == m:
            break
        byte, bit = j >> 3, np.uint8(1 << (j & 7))
        col = (Hp[r:, byte] & bit) != 0
        hits = np.nonzero(col)[0]
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            Hp[[r, p]] = Hp[[p, r]]
        others = (Hp[:, byte] & bit) != 0
        others[r] = False
        Hp[others] ^= Hp[r]
        pivot_cols.append(j)
        r += 1
    return Hp, pivot_cols


@dataclass
class LdpcCode:
    """Parity-check matrix in adjacency form plus precomputed encoder data."""

    n: int
    m: int
    var_adj: List[NDArray[np.int32]]  # checks touching each variable
    chk_adj: List[NDArray[np.int32]]  # variables touching each check
    rank: int
    info_cols: NDArray[np.int64]  # free (systematic) codeword positions
    girth6: Optional[bool] = None

    # encoder: RREF rows restricted to pivot rows, packed little-endian
    _rref_packed: Optional[NDArray[np.uint8]] = None
    _pivot_cols: Optional[NDArray[np.int64]] = None
    # decoder: padded check adjacency
    _chk_pad: Optional[NDArray[np.int32]] = None
    _chk_valid: Optional[NDArray[np.bool_]] = None

    @property
    def k(self) -> int:
        return self.n - self.rank

    @property
    def rate(self) -> float:
        return self.k / self.n

    def to_dense(self) -> NDArray[np.uint8]:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for c, vs in enumerate(self.chk_adj):
            H[c, vs] = 1
        return H

    @classmethod
    def from_dense(cls, H, girth6: Optional[bool] = None) -> "LdpcCode":
        Hb = np.asarray(H, dtype=np.uint8)
        if Hb.ndim != 2 or not np.isin(Hb, (0, 1)).all():
            raise ValueError("H must be a 2-d binary matrix")
        chk_adj = [np.nonzero(row)[0].astype(np.int32) for row in Hb]
        return _finalize(Hb.shape[1], Hb.shape[0], chk_adj, girth6)


def _finalize(
    n: int,
    m: int,
    chk_adj: List[NDArray[np.int32]],
    girth6: Optional[bool],
) -> LdpcCode:
    var_lists: List[List[int]] = [[] for _ in range(n)]
    for c, vs in enumerate(chk_adj):
        for v in vs:
            var_lists[int(v)].append(c)
    var_adj = [np.asarray(sorted(l), dtype=np.int32) for l in var_lists]

    H = np.zeros((m, n), dtype=np.uint8)
    for c, vs in enumerate(chk_adj):
        H[c, vs] = 1
    Hp, pivots = _gf2_rref_packed(_pack_rows(H), n)
    rank = len(pivots)
    pivot_cols = np.asarray(pivots, dtype=np.int64)
    info_cols = np.setdiff1d(np.arange(n, dtype=np.int64), pivot_cols)

    dmax = max((len(vs) for vs in chk_adj), default=0)
    chk_pad = np.zeros((m, dmax), dtype=np.int32)
    chk_valid = np.zeros((m, dmax), dtype=bool)
    for c, vs in enumerate(chk_adj):
        chk_pad[c, : len(vs)] = vs
        chk_valid[c, : len(vs)] = True

    return LdpcCode(
        n=n,
        m=m,
        var_adj=var_adj,
        chk_adj=[np.asarray(vs, dtype=np.int32) for vs in chk_adj],
        rank=rank,
        info_cols=info_cols,
        girth6=girth6,
        _rref_packed=Hp[:rank].copy(),
        _pivot_cols=pivot_cols,
        _chk_pad=chk_pad,
        _chk_valid=chk_valid,
    )


def _peg_attempt(
    n: int, col_deg: int, row_deg: int, rng: np.random.Generator
) -> Tuple[List[List[int]], int]:
    """One PEG pass; returns (check adjacency lists, forced 4-cycle count)."""
    m = n * col_deg // row_deg
    chk_deg = np.zeros(m, dtype=np.int64)
    chk_adj: List[List[int]] = [[] for _ in range(m)]
    var_adj: List[List[int]] = [[] for _ in range(n)]
    violations = 0
    near_mask = np.zeros(m, dtype=bool)
    order = rng.permutation(n)
    for v in order:
        for _ in range(col_deg):
            attached = var_adj[v]
            # checks reachable in two graph hops: attaching one closes a 4-cycle
            near_mask[:] = False
            near_mask[attached] = True
            for c0 in attached:
                for v2 in chk_adj[c0]:
                    if v2 != v:
                        near_mask[var_adj[v2]] = True
            open_slots = chk_deg < row_deg
            pool = open_slots & ~near_mask
            if not pool.any():
                pool = open_slots.copy()
                pool[attached] = False
                violations += 1
                if not pool.any():
                    raise RuntimeError("graph construction ran out of check slots")
            lo = chk_deg[pool].min()
            best = np.nonzero(pool & (chk_deg == lo))[0]
            c = int(best[rng.integers(best.size)])
            chk_adj[c].append(int(v))
            var_adj[v].append(c)
            chk_deg[c] += 1
    return chk_adj, violations


def construct_regular(
    n: int,
    col_deg: int = 3,
    row_deg: int = 6,
    rng: Optional[np.random.Generator] = None,
    max_attempts: int = 25,
) -> LdpcCode:
    """Build a (col_deg, row_deg)-regular code of length n.

    Requires n * col_deg divisible by row_deg. Retries construction until an
    attempt is free of 4-cycles; otherwise returns the attempt with the fewest
    forced short cycles with ``girth6`` False. Deterministic for a given rng
    state.
    """
    if n < row_deg or col_deg < 1 or row_deg <= col_deg:
        raise ValueError("need n >= row_deg and 1 <= col_deg < row_deg")
    if (n * col_deg) % row_deg != 0:
        raise ValueError("n * col_deg must be divisible by row_deg")
    if rng is None:
        rng = np.random.default_rng()
    best: Optional[List[List[int]]] = None
    best_viol = math.inf
    for _ in range(max_attempts):
        chk_adj, viol = _peg_attempt(n, col_deg, row_deg, rng)
        if viol < best_viol:
            best, best_viol = chk_adj, viol
        if viol == 0:
            break
    assert best is not None
    m = n * col_deg // row_deg
    return _finalize(
        n, m, [np.asarray(vs, dtype=np.int32) for vs in best], best_viol == 0
    )


def save_matrix(code: LdpcCode, path) -> None:
    """Write the parity-check matrix in alist format (1-based, zero padded)."""
    col_degs = [len(a) for a in code.var_adj]
    row_degs = [len(a) for a in code.chk_adj]
    dvmax = max(col_degs, default=0)
    dcmax = max(row_degs, default=0)
    lines = [
        f"{code.n} {code.m}",
        f"{dvmax} {dcmax}",
        " ".join(map(str, col_degs)),
        " ".join(map(str, row_degs)),
    ]
    for adj, width in ((code.var_adj, dvmax), (code.chk_adj, dcmax)):
        for entries in adj:
            padded = [int(e) + 1 for e in entries] + [0] * (width - len(entries))
            lines.append(" ".join(map(str, padded)))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix(path) -> LdpcCode:
    """Parse an alist file into a code (rank and encoder data recomputed)."""
    with open(path, "r", encoding="ascii") as fh:
        rows = [ln.split() for ln in fh.read().splitlines()]
    rows = [r for r in rows if r]

    def ints(i: int, what: str) -> List[int]:
        if i >= len(rows):
            raise ValueError(f"{path}: truncated file, missing {what} (line {i + 1})")
        try:
            return [int(tok) for tok in rows[i]]
        except ValueError as exc:
            raise ValueError(f"{path}: bad integer in {what} (line {i + 1})") from exc

    hdr = ints(0, "size header")
    if len(hdr) != 2 or min(hdr) < 1:
        raise ValueError(f"{path}: first line must be 'n m' with positive sizes")
    n, m = hdr
    dmax = ints(1, "max degree header")
    if len(dmax) != 2:
        raise ValueError(f"{path}: second line must hold the two max degrees")
    col_degs = ints(2, "column degree list")
    row_degs = ints(3, "row degree list")
    if len(col_degs) != n or len(row_degs) != m:
        raise ValueError(f"{path}: degree list lengths do not match 'n m' header")
    if sum(col_degs) != sum(row_degs):
        raise ValueError(f"{path}: column and row degree sums differ")

    def adj_block(start: int, degs: List[int], limit: int, what: str):
        out = []
        for i, d in enumerate(degs):
            entries = [e for e in ints(start + i, f"{what} list {i + 1}") if e != 0]
            if len(entries) != d:
                raise ValueError(
                    f"{path}: {what} list {i + 1} has {len(entries)} entries, "
                    f"expected {d} (line {start + i + 1})"
                )
            if any(not (1 <= e <= limit) for e in entries):
                raise ValueError(
                    f"{path}: {what} list {i + 1} has an out-of-range index "
                    f"(line {start + i + 1})"
                )
            out.append(np.asarray(sorted(e - 1 for e in entries), dtype=np.int32))
        return out

    var_adj = adj_block(4, col_degs, m, "variable adjacency")
    chk_adj = adj_block(4 + n, row_degs, n, "check adjacency")

    # Both halves must describe the same edge set.
    edges_v = {(int(c), v) for v, cs in enumerate(var_adj) for c in cs}
    edges_c = {(c, int(v)) for c, vs in enumerate(chk_adj) for v in vs}
    if edges_v != edges_c:
        raise ValueError(f"{path}: variable and check adjacency lists disagree")

    return _finalize(n, m, chk_adj, girth6=None)


def has_4_cycles(code: LdpcCode) -> bool:
    """True when two checks share more than one variable (dense test)."""
    H = code.to_dense().astype(np.int64)
    gram = H @ H.T
    np.fill_diagonal(gram, 0)
    return bool((gram > 1).any())


def encode(code: LdpcCode, info_bits) -> NDArray[np.uint8]:
    """Systematic encoding: info bits on free columns, parity from RREF rows.

    Each RREF pivot row reads x_pivot = XOR of the row's free-column bits.
    """
    info = np.asarray(info_bits, dtype=np.uint8)
    if info.shape != (code.k,):
        raise ValueError(f"info length must be {code.k}, got {info.shape}")
    cw = np.zeros(code.n, dtype=np.uint8)
    cw[code.info_cols] = info
    packed = np.packbits(cw, bitorder="little")
    prod = code._rref_packed & packed[None, :]
    parity = np.bitwise_count(prod).sum(axis=1) & 1
    cw[code._pivot_cols] = parity.astype(np.uint8)
    return cw


def syndrome(code: LdpcCode, bits) -> NDArray[np.uint8]:
    b = np.asarray(bits, dtype=np.uint8)
    if b.shape != (code.n,):
        raise ValueError(f"codeword length must be {code.n}")
    gathered = np.where(code._chk_valid, b[code._chk_pad], 0)
    return np.bitwise_xor.reduce(gathered, axis=1).astype(np.uint8)


@dataclass
class DecodeResult:
    hard_bits: NDArray[np.uint8]
    llr_posterior: NDArray[np.float64]
    llr_extrinsic: NDArray[np.float64]
    iterations_used: int
    converged: bool
    messages: Optional[NDArray[np.float64]] = None


def decode_spa(
    code: LdpcCode, llr_in, max_iter: int, state: Optional[NDArray] = None
) -> DecodeResult:
    """Flooding sum-product decoding with early exit on a zero syndrome.

    Returns saturated posterior and extrinsic LLRs; extrinsic is the
    posterior minus the channel input, clipped to +-LLR_MAX. `state` warm
    starts the check-to-variable messages from a previous call's
    `messages` field, which lets an outer loop interleave single decoder
    iterations with detector updates while the decoding still converges.
    """
    llr = np.asarray(llr_in, dtype=np.float64)
    if llr.shape != (code.n,):
        raise ValueError(f"LLR length must be {code.n}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    chk_pad, valid = code._chk_pad, code._chk_valid
    m, dmax = chk_pad.shape
    if state is None:
        E_cv = np.zeros((m, dmax), dtype=np.float64)
    else:
        if state.shape != (m, dmax):
            raise ValueError(f"decoder state must have shape {(m, dmax)}")
        E_cv = state.copy()

    iterations_used = 0
    converged = False
    totals = np.zeros(code.n)
    for it in range(1, max_iter + 1):
        iterations_used = it
        # variable to check: posterior totals minus own incoming message
        totals[:] = 0.0
        np.add.at(totals, chk_pad[valid], E_cv[valid])
        E_vc = (llr + totals)[chk_pad] - E_cv
        # check to variable: tanh rule with exclusive products
        T = np.tanh(0.5 * E_vc)
        T[~valid] = 1.0
        pre = np.ones_like(T)
        suf = np.ones_like(T)
        for i in range(1, dmax):
            pre[:, i] = pre[:, i - 1] * T[:, i - 1]
            suf[:, dmax - 1 - i] = suf[:, dmax - i] * T[:, dmax - i]
        excl = np.clip(pre * suf, -1.0 + _TANH_EPS, 1.0 - _TANH_EPS)
        E_cv = 2.0 * np.arctanh(excl)
        E_cv[~valid] = 0.0

        totals[:] = 0.0
        np.add.at(totals, chk_pad[valid], E_cv[valid])
        hard = ((llr + totals) < 0.0).astype(np.uint8)
        gathered = np.where(valid, hard[chk_pad], 0)
        if not np.bitwise_xor.reduce(gathered, axis=1).any():
            converged = True
            break

    post = llr + totals
    return DecodeResult(
        hard_bits=((post < 0.0).astype(np.uint8)),
        llr_posterior=np.clip(post, -LLR_MAX, LLR_MAX),
        llr_extrinsic=np.clip(totals, -LLR_MAX, LLR_MAX),
        iterations_used=iterations_used,
        converged=converged,
        messages=E_cv,
    )
