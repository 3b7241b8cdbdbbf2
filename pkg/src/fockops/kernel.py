"""Matrix-free application of operator strings to state vectors.

Every balanced string of creation/annihilation operators maps each
configuration to exactly one configuration times a prefactor, so the action
on a state vector is a permutation-with-weights of its amplitudes.  The
kernel computes each output amplitude by *gathering* from its uniquely
determined source address: the elementary steps are undone one by one on
the output configuration (vectorized over all addresses at once),
accumulating the fermionic parity from prefix occupation counts or the
bosonic sqrt factors from the running occupations, while the source address
is obtained by shifting the combinadic rank terms of the affected orbitals.

Index-coincidence cases (k = q, k = s, ...) are defined by this sequential
elementary construction, which makes every term total; for pairwise
distinct indices it reproduces the closed-form sign (-1)^{d} between-counts
and sqrt(n) weights exactly.  Two-body gathers with distinct create/
annihilate pairs are composed from the cached one-body gathers, which is
an exact operator identity (b†_k b†_s b_l b_q = b†_s b_l b†_k b_q for
l != k).
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .combinadics import FERMION
from .errors import FockError, SpaceMismatchError
from .fockspace import FermionConfig, SpaceDescriptor, StateVector

DEFAULT_SKIP_THRESHOLD = 1e-15

# An elementary op is ("a", p) or ("c", p); a term is a tuple of them in
# application order (rightmost operator of the string first).
Ops = tuple[tuple[str, int], ...]


def one_body_ops(k: int, q: int) -> Ops:
    """Elementary steps of b†_k b_q."""
    return (("a", q), ("c", k))


def two_body_ops(k: int, s: int, l: int, q: int) -> Ops:
    """Elementary steps of b†_k b†_s b_l b_q."""
    return (("a", q), ("a", l), ("c", s), ("c", k))


def fermion_sign_count(config, k: int, q: int) -> int:
    """Number of occupied orbitals strictly between k and q (d^{kq}).

    ``config`` is a bit-set integer (bit p-1 set iff orbital p occupied)
    or a :class:`FermionConfig`.  Endpoints are excluded; adjacent k, q
    give 0.
    """
    bits = config.bits if isinstance(config, FermionConfig) else int(config)
    lo, hi = (k, q) if k < q else (q, k)
    if hi - lo <= 1:
        return 0
    mask = ((1 << (hi - 1)) - 1) & ~((1 << lo) - 1)
    return (bits & mask).bit_count()


def _check_orbitals(space: SpaceDescriptor, orbitals: Iterable[int]) -> None:
    for p in orbitals:
        if not 1 <= p <= space.m:
            raise FockError(f"orbital {p} outside [1, {space.m}]")


def term_gather(space: SpaceDescriptor, ops: Ops):
    """(source row, prefactor, mask, acting rows) for a term, cached per space.

    ``src`` and ``pref`` are full-length (garbage outside the mask); ``act``
    lists the 0-based output rows on which the term acts.
    """
    tb = space.tables()
    return tb.cached_gather(ops, lambda: _build_gather(space, tb, ops))


def _build_gather(space, tb, ops):
    if len(ops) == 4 and ops[1][1] != ops[3][1]:
        # b†_s b_l applied after b†_k b_q equals the canonical order for l != k
        (_, q), (_, l), (_, s), (_, k) = ops
        src1, pref1, mask1, _ = term_gather(space, one_body_ops(k, q))
        src2, pref2, mask2, _ = term_gather(space, one_body_ops(s, l))
        src = src1[src2]
        pref = pref2 * pref1[src2]
        mask = mask2 & mask1[src2]
    elif space.statistics == FERMION:
        src, pref, mask = _fermion_gather(space, tb, ops)
    else:
        src, pref, mask = _boson_gather(space, tb, ops)
    act = np.flatnonzero(mask)
    np.clip(src, 0, space.n_conf - 1, out=src)
    for arr in (src, pref, mask, act):
        arr.flags.writeable = False
    return src, pref, mask, act


def _fermion_gather(space, tb, ops):
    occ, prefix = tb.occ, tb.prefix
    r = space.n_conf
    mask = np.ones(r, dtype=bool)
    expo = np.zeros(r, dtype=np.int64)
    flips: dict[int, int] = {}
    for kind, p in reversed(ops):
        corr = sum(f for c, f in flips.items() if c < p)
        cur = occ[:, p - 1] + flips.get(p, 0)
        if kind == "c":
            mask &= cur == 1
            flips[p] = flips.get(p, 0) - 1
        else:
            mask &= cur == 0
            flips[p] = flips.get(p, 0) + 1
        # phase of the forward step is the occupancy below p at that moment
        expo += prefix[:, p - 1] + corr
    pref = np.where((expo & 1).astype(bool), -1.0, 1.0)
    net = {p: f for p, f in flips.items() if f != 0}
    if not net:
        return np.arange(r, dtype=np.int64), pref, mask
    m, n = space.m, space.n
    m_v = m - n
    tbl = space.binomials.array
    bmax = tbl.shape[1] - 1
    jsrc = np.ones(r, dtype=np.int64)
    for p in range(1, m + 1):
        occ_src = occ[:, p - 1] + net.get(p, 0)
        pcorr = sum(f for c, f in net.items() if c <= p)
        b = m_v + 1 - p + prefix[:, p] + pcorr
        hole = occ_src == 0
        valid = hole & (b >= 0) & (b <= bmax)
        bb = np.where(valid, b, 0)
        jsrc += np.where(valid, tbl[m - p, bb], 0)
    return jsrc - 1, pref, mask


def _boson_gather(space, tb, ops):
    occ = tb.occ
    r, m = occ.shape
    mask = np.ones(r, dtype=bool)
    # exact integer product of the sqrt arguments; one rounding at the end
    # keeps diagonal weights like n_k (n_k - 1) exact
    prod = np.ones(r, dtype=np.int64)
    deltas: dict[int, int] = {}
    for kind, p in reversed(ops):
        cur = occ[:, p - 1] + deltas.get(p, 0)
        if kind == "c":
            mask &= cur >= 1
            prod *= np.maximum(cur, 0)
            deltas[p] = deltas.get(p, 0) - 1
        else:
            prod *= np.maximum(cur + 1, 0)
            deltas[p] = deltas.get(p, 0) + 1
    pref = np.sqrt(prod.astype(np.float64))
    net = {p: d for p, d in deltas.items() if d != 0}
    if not net:
        return np.arange(r, dtype=np.int64), pref, mask
    arg, val = tb.addr_arg, tb.addr_val
    tbl = space.binomials.array
    amax = tbl.shape[0] - 1
    jdelta = np.zeros(r, dtype=np.int64)
    lo, hi = min(net), max(net)
    for col in range(lo, hi):  # rank-sum columns whose cumulative count shifts
        shift = sum(d for c, d in net.items() if c <= col)
        if shift == 0:
            continue
        a_src = arg[:, col - 1] - shift
        valid = (a_src >= 0) & (a_src <= amax)
        aa = np.where(valid, a_src, 0)
        jdelta += np.where(valid, tbl[aa, m - col], 0) - val[:, col - 1]
    return np.arange(r, dtype=np.int64) + jdelta, pref, mask


def apply_term_ops(
    space: SpaceDescriptor,
    ops: Ops,
    amps: np.ndarray,
    out: np.ndarray | None = None,
    coeff: complex = 1.0,
    axis: int = -1,
) -> np.ndarray:
    """Accumulate coeff * (term acting on ``amps``) into ``out`` along ``axis``."""
    src, pref, _, act = term_gather(space, ops)
    if out is None:
        out = np.zeros_like(amps, dtype=np.complex128)
    if act.size:
        amps_m = np.moveaxis(amps, axis, -1)
        out_m = np.moveaxis(out, axis, -1)
        out_m[..., act] += coeff * (pref[act] * amps_m[..., src[act]])
    return out


def apply_one_body_term(k: int, q: int, psi: StateVector) -> StateVector:
    """|Psi^{kq}> = b†_k b_q |Psi>; k = q gives the number-operator weighting."""
    _check_orbitals(psi.space, (k, q))
    out = apply_term_ops(psi.space, one_body_ops(k, q), psi.amplitudes)
    return StateVector(psi.space, out)


def apply_two_body_term(k: int, s: int, l: int, q: int, psi: StateVector) -> StateVector:
    """b†_k b†_s b_l b_q |Psi> for any index pattern, coincidences included."""
    _check_orbitals(psi.space, (k, s, l, q))
    out = apply_term_ops(psi.space, two_body_ops(k, s, l, q), psi.amplitudes)
    return StateVector(psi.space, out)


# -- deterministic term accumulation ----------------------------------------
#
# Terms are split into a fixed number of chunks (round-robin by term index,
# independent of any worker count), each chunk is accumulated left-to-right
# in term order, and the chunk partials are combined in a fixed pairwise
# tree.  The serial kernel and the thread-pool executor share this exact
# summation order, so results are bitwise reproducible for any worker count.

_CHUNK_TARGET = 64
_CHUNK_CAP_BYTES = 1 << 26


def chunk_terms(terms: Sequence, out_bytes: int) -> list[Sequence]:
    n = len(terms)
    if n == 0:
        return []
    c = min(_CHUNK_TARGET, n)
    while c > 1 and c * out_bytes > _CHUNK_CAP_BYTES:
        c //= 2
    return [terms[i::c] for i in range(c)]


def tree_reduce(parts: list[np.ndarray]) -> np.ndarray:
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def accumulate_chunks(
    terms: Sequence,
    eval_chunk: Callable,
    make_zero: Callable[[], np.ndarray],
    out_bytes: int,
    mapper: Callable = map,
) -> np.ndarray:
    """Sum chunk contributions over ``terms`` in the canonical chunk order.

    ``eval_chunk(chunk, out)`` adds a whole chunk into ``out``; ``mapper``
    may run chunks concurrently without affecting the result.
    """
    chunks = chunk_terms(terms, out_bytes)
    if not chunks:
        return make_zero()

    def run(chunk):
        part = make_zero()
        eval_chunk(chunk, part)
        return part

    return tree_reduce(list(mapper(run, chunks)))


def hamiltonian_terms(spec, skip_threshold: float = DEFAULT_SKIP_THRESHOLD) -> list[tuple[Ops, complex]]:
    """Canonical term list: one-body row-major, then two-body in storage order.

    Two-body coefficients already carry the global 1/2.
    """
    terms: list[tuple[Ops, complex]] = []
    for k, q, v in spec.one_body.entries(skip_threshold):
        terms.append((one_body_ops(k, q), v))
    for k, s, q, l, v in spec.two_body.entries(skip_threshold):
        terms.append((two_body_ops(k, s, l, q), 0.5 * v))
    return terms


def _apply_term_list(space, terms, amps, mapper: Callable = map) -> np.ndarray:
    def eval_chunk(chunk, out):
        for ops, coeff in chunk:
            apply_term_ops(space, ops, amps, out=out, coeff=coeff)

    return accumulate_chunks(
        terms,
        eval_chunk,
        lambda: np.zeros(space.n_conf, dtype=np.complex128),
        out_bytes=space.n_conf * 16,
        mapper=mapper,
    )


def apply_hamiltonian(
    spec,
    psi: StateVector,
    skip_threshold: float = DEFAULT_SKIP_THRESHOLD,
    mapper: Callable = map,
) -> StateVector:
    """H|Psi> = sum_kq h_kq |Psi^{kq}> + (1/2) sum_ksql W_ksql |Psi^{kslq}>."""
    if spec.space != psi.space:
        raise SpaceMismatchError("Hamiltonian and state belong to different spaces")
    space = spec.space
    terms = hamiltonian_terms(spec, skip_threshold)
    return StateVector(space, _apply_term_list(space, terms, psi.amplitudes, mapper))


def apply_one_body_operator(
    h, psi: StateVector, skip_threshold: float = DEFAULT_SKIP_THRESHOLD
) -> StateVector:
    """Total action of all one-body terms, sum_kq h_kq b†_k b_q |Psi>."""
    space = psi.space
    if h.m != space.m:
        raise SpaceMismatchError(f"one-body table for M={h.m} applied in M={space.m} space")
    terms = [(one_body_ops(k, q), v) for k, q, v in h.entries(skip_threshold)]
    return StateVector(space, _apply_term_list(space, terms, psi.amplitudes))
