"""Pure numpy implementations of the hot kernels.

Selected automatically when the compiled extension is unavailable (or when
WEAKCHAOS_FORCE_FALLBACK is set).  Orbit ensembles run in lockstep across
orbits; the batch decoder reads whole codewords through 57-bit windows of the
packed stream.  Integer bookkeeping matches the compiled kernels bit for bit;
map steps match them exactly for integer exponents (shared multiplication
order) and to rounding otherwise.
"""

import math

import numpy as np

from . import laminar

IMPLEMENTATION = "python"

_U64_7 = np.uint64(7)
_U64_1 = np.uint64(1)

#: decode window reads assume codewords of at most 2*26+1 bits
MAX_DECODE_M1 = 26


def _floor_log2_int64(values):
    """Exact floor(log2 v) for int64 arrays with 1 <= v < 2**53."""
    return (np.frexp(values.astype(np.float64))[1] - 1).astype(np.int64)


_NAT_LEN_LUT = (2 * (np.frexp(np.arange(1, 1025, dtype=np.float64))[1] - 1)
                + 1).astype(np.int64)


def _nat_lengths(values):
    """Codeword lengths 2*floor(log2(v+1)) + 1 for v >= 0 (int64 array)."""
    if values.size and int(values.max()) < 1024:
        return _NAT_LEN_LUT[values]
    return 2 * _floor_log2_int64(values + 1) + 1


def _accumulate_clipped(hist, values, limit):
    """hist[min(v, limit)] += 1 for each v, without a full-size bincount."""
    clipped = np.minimum(values, limit)
    part = np.bincount(clipped)
    hist[:part.size] += part


# ---------------------------------------------------------------------------
# renewal chain
# ---------------------------------------------------------------------------


def chain_process_chunk(intervals, t, horizon, grid, counts, bits, occ_bin, hist):
    """Advance one replica through a chunk of renewal intervals.

    Arrival times are t + cumsum(intervals); those at or before ``horizon``
    are committed to the per-grid passage counts and code-bit totals, to the
    occupation bincount (clipped) and to the interval histogram (clipped).
    Returns (t_new, finished, k_partial, s_partial) where a True ``finished``
    reports the first interval reaching past the horizon.
    """
    s = np.int64(t) + np.cumsum(intervals)
    m = intervals.shape[0]
    pos = int(np.searchsorted(s, horizon, side="right"))
    s_in = s[:pos]
    k_in = intervals[:pos]
    idx = np.searchsorted(s_in, grid - 1, side="right")
    counts += idx
    if pos:
        csum = np.zeros(pos + 1, dtype=np.int64)
        np.cumsum(_nat_lengths(k_in - 1), out=csum[1:])
        bits += csum[idx]
        if occ_bin.shape[0]:
            _accumulate_clipped(occ_bin, k_in, occ_bin.shape[0] - 1)
        if hist.shape[0]:
            _accumulate_clipped(hist, k_in, hist.shape[0] - 1)
    if pos == m:
        return (int(s[-1]) if m else int(t)), False, 0, 0
    return (int(s_in[-1]) if pos else int(t)), True, int(intervals[pos]), int(s[pos])


def chain_run_geometric(rng, p, horizon, grid, counts, bits, occ_bin, hist,
                        clip):
    """Whole replica with geometric renewal intervals (chunked).

    Draws through Generator.geometric so the stream consumption matches the
    compiled kernel draw for draw.  Returns (k_partial, s_partial, draws).
    """
    t = -1
    drawn = 0
    mean_iv = 1.0 / p
    while True:
        need = int((horizon - t) / mean_iv * 1.2) + 32
        chunk = min(max(need, 32), 1 << 20)
        intervals = rng.geometric(p, size=chunk).astype(np.int64, copy=False)
        np.minimum(intervals, clip, out=intervals)
        drawn += chunk
        t, finished, k_partial, s_partial = chain_process_chunk(
            intervals, t, horizon, grid, counts, bits, occ_bin, hist)
        if finished:
            return k_partial, s_partial, drawn


# ---------------------------------------------------------------------------
# intermittent-map orbit ensembles
# ---------------------------------------------------------------------------


def _pow_z_vec(x, z):
    # multiplication order here must mirror the compiled kernel and the
    # scalar step so integer exponents give bit-identical trajectories
    if z == 2.0:
        return x * x
    if z == 3.0:
        return (x * x) * x
    if z == 4.0:
        xx = x * x
        return xx * xx
    return x ** z


def mp_ensemble_stats(x0, z, r, c, grid, breaks, symbol_width, mode,
                      threshold, digits, tau_hist_max=0):
    """Passage counts and coded-bit totals for an orbit ensemble.

    Orbits advance in lockstep; per-orbit passage counts N and information
    bits I are snapshotted at every horizon in ``grid``.  When the precision
    mode asks for it, orbits dipping below ``threshold`` are taken out of the
    pool, their laminar segment is resolved exactly (or estimated in
    ode-approx mode), and they re-enter the pool at the right step.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.int64)
    breaks = np.asarray(breaks, dtype=np.float64)
    n_orbits = x0.shape[0]
    n_grid = grid.shape[0]
    n_max = int(grid[-1])
    out_n = np.zeros((n_orbits, n_grid), dtype=np.int64)
    out_i = np.zeros((n_orbits, n_grid), dtype=np.int64)
    passages = np.zeros(n_orbits, dtype=np.int64)
    bits = np.zeros(n_orbits, dtype=np.int64)
    run = np.zeros(n_orbits, dtype=np.int64)
    hist = np.zeros(tau_hist_max + 2, dtype=np.int64) if tau_hist_max else None
    x = x0.copy()
    wake_step = np.full(n_orbits, -1, dtype=np.int64)  # -1 awake; > n_max dormant
    wake_val = np.zeros(n_orbits, dtype=np.float64)
    b1 = float(breaks[0])
    binary = breaks.shape[0] == 1
    use_laminar = mode != "plain"
    thr = min(threshold, b1) if use_laminar else 0.0
    escalations = 0
    ode_segments = 0
    dormant = 0
    boundary_hits = 0
    gptr = 0
    for step in range(n_max):
        waking = wake_step == step
        if waking.any():
            x[waking] = wake_val[waking]
            wake_step[waking] = -1
        awake = wake_step < 0
        if binary:
            nz = awake & (x > b1)
            boundary_hits += int(np.count_nonzero(awake & (x == b1)))
        else:
            sym = np.searchsorted(breaks, x, side="left")
            nz = awake & (sym > 0)
            boundary_hits += int(np.count_nonzero(awake & np.isin(x, breaks)))
        if nz.any():
            d = run[nz]
            bits[nz] += _nat_lengths(d) + symbol_width
            passages[nz] += 1
            if hist is not None:
                _accumulate_clipped(hist, d + 1, tau_hist_max + 1)
            run[nz] = 0
        run[awake & ~nz] += 1
        if step + 1 == grid[gptr]:
            out_n[:, gptr] = passages
            out_i[:, gptr] = bits
            gptr += 1
            if gptr == n_grid:
                break
        y = x + r * _pow_z_vec(x, z)
        y = np.where(y > 1.0, y - 1.0, y)
        x = np.where(awake, y, x)
        if use_laminar:
            trig = awake & (x > 0.0) & (x < thr)
            if trig.any():
                remaining = n_max - (step + 1)
                for i in np.flatnonzero(trig):
                    seg, x_after, _ = laminar.resolve(
                        float(x[i]), remaining, mode, z, r, thr, digits)
                    escalations += 1
                    if mode == "ode-approx":
                        ode_segments += 1
                    if x_after is None:
                        wake_step[i] = n_max + 1
                        dormant += 1
                    else:
                        wake_step[i] = step + 1 + seg
                        wake_val[i] = x_after
                        run[i] += seg
    return {
        "passages": out_n,
        "information_bits": out_i,
        "tau_hist": hist,
        "escalations": escalations,
        "ode_segments": ode_segments,
        "dormant": dormant,
        "boundary_hits": boundary_hits,
    }


def mp_entropy_run(x0, z, r, c, passages_target, step_cap, mode, threshold,
                   digits):
    """Log-derivative sums along induced orbits, one ratio sample per orbit.

    Accumulates log T' over base steps into a pending sum that is committed
    each time a passage through (c, 1] completes; an orbit stops after
    ``passages_target`` committed passages, when it dips below the laminar
    threshold (negligible further contribution), or at ``step_cap``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    n_orbits = x0.shape[0]
    committed = np.zeros(n_orbits, dtype=np.float64)
    pending = np.zeros(n_orbits, dtype=np.float64)
    passages = np.zeros(n_orbits, dtype=np.int64)
    steps = np.zeros(n_orbits, dtype=np.int64)
    x = x0.copy()
    active = (x > 0.0)
    truncated = np.zeros(n_orbits, dtype=bool)
    thr = min(threshold, c) if mode != "plain" else 0.0
    zm1 = z - 1.0
    for _ in range(step_cap):
        if not active.any():
            break
        term = np.log1p(r * z * _pow_z_vec(x, zm1))
        pending = np.where(active, pending + term, pending)
        completing = active & (x > c)
        committed[completing] += pending[completing]
        pending[completing] = 0.0
        passages[completing] += 1
        y = x + r * _pow_z_vec(x, z)
        y = np.where(y > 1.0, y - 1.0, y)
        x = np.where(active, y, x)
        steps += active
        finished = passages >= passages_target
        stalled = active & (x > 0.0) & (x < thr)
        truncated |= stalled
        active &= ~(finished | stalled) & (x > 0.0)
    truncated |= active  # step cap hit with passages still missing
    return {
        "log_deriv_sum": committed,
        "passages": passages,
        "steps": steps,
        "truncated": truncated,
    }


# ---------------------------------------------------------------------------
# batch codec
# ---------------------------------------------------------------------------


def _ragged_arange(counts):
    """(owner_index, local_index) pairs enumerating ragged rows of sizes counts."""
    total = int(counts.sum())
    owners = np.repeat(np.arange(counts.shape[0], dtype=np.int64), counts)
    offs = np.zeros(counts.shape[0], dtype=np.int64)
    np.cumsum(counts[:-1], out=offs[1:])
    local = np.arange(total, dtype=np.int64) - np.repeat(offs, counts)
    return owners, local


def _encode_one(symbols, alphabet_size):
    """Bit array (uint8 0/1) coding one symbol string, header included."""
    n = symbols.shape[0]
    width = int(alphabet_size - 2).bit_length()
    nz = np.flatnonzero(symbols)
    runs = (np.diff(nz, prepend=-1) - 1).astype(np.int64)
    n_runs = nz.shape[0]
    # header codeword
    hm1 = (n + 1).bit_length() - 1
    head = np.empty(2 * hm1 + 1, dtype=np.uint8)
    head[:hm1] = 1
    head[hm1] = 0
    hpay = n - ((1 << hm1) - 1)
    for i in range(hm1):
        head[hm1 + 1 + i] = (hpay >> (hm1 - 1 - i)) & 1
    if n_runs == 0:
        return head, 0
    m1 = _floor_log2_int64(runs + 1)
    lens = 2 * m1 + 1 + width
    starts = np.zeros(n_runs, dtype=np.int64)
    np.cumsum(lens[:-1], out=starts[1:])
    starts += head.shape[0]
    body = np.zeros(head.shape[0] + int(lens.sum()), dtype=np.uint8)
    body[:head.shape[0]] = head
    owners, local = _ragged_arange(m1)
    # unary ones, then the 0 terminator is already there, then the payload
    body[starts[owners] + local] = 1
    payload = runs - ((np.int64(1) << m1) - 1)
    shift = (m1[owners] - 1 - local)
    body[starts[owners] + m1[owners] + 1 + local] = \
        ((payload[owners] >> shift) & 1).astype(np.uint8)
    if width:
        svals = (symbols[nz] - 1).astype(np.int64)
        base = starts + 2 * m1 + 1
        for i in range(width):
            body[base + i] = ((svals >> (width - 1 - i)) & 1).astype(np.uint8)
    return body, n_runs


def encode_batch(sym_concat, offsets, alphabets):
    """Code a packed batch of symbol strings.

    Returns (bits_concat, bit_offsets, runs) with the same packing idiom as
    the inputs.
    """
    count = alphabets.shape[0]
    pieces = []
    runs = np.zeros(count, dtype=np.int64)
    bit_offsets = np.zeros(count + 1, dtype=np.int64)
    for i in range(count):
        bits, n_runs = _encode_one(sym_concat[offsets[i]:offsets[i + 1]],
                                   int(alphabets[i]))
        pieces.append(bits)
        runs[i] = n_runs
        bit_offsets[i + 1] = bit_offsets[i] + bits.shape[0]
    bits_concat = (np.concatenate(pieces) if pieces
                   else np.empty(0, dtype=np.uint8))
    return bits_concat, bit_offsets, runs


def _read_codewords(packed, base_bits, cursor, blen):
    """Read one codeword per row through 57-bit windows of the packed stream.

    ``packed`` is the global byte stream (zero-padded by 8 bytes); rows read
    at absolute bit position base_bits + cursor.  Returns (value, advance,
    bad) where ``bad`` flags rows whose unary part exceeds MAX_DECODE_M1 or
    whose codeword would run past the row end.
    """
    pos = base_bits + cursor
    byte0 = (pos >> 3).astype(np.int64)
    window = np.zeros(pos.shape[0], dtype=np.uint64)
    for b in range(8):
        window = (window << np.uint64(8)) | packed[byte0 + b].astype(np.uint64)
    offset = (pos & 7).astype(np.uint64)
    aligned = (window >> (_U64_7 - offset)) & np.uint64((1 << 57) - 1)
    top32 = (aligned >> np.uint64(25)).astype(np.int64)
    flipped = np.uint32(0xFFFFFFFF) & (~top32).astype(np.uint64)
    # floor(log2) of a 32-bit value is exact through float64
    bitlen = np.frexp(flipped.astype(np.float64))[1].astype(np.int64)
    m1 = 32 - bitlen
    bad = m1 > MAX_DECODE_M1
    m1 = np.minimum(m1, MAX_DECODE_M1)
    shift = (np.uint64(57) - (2 * m1 + 1).astype(np.uint64))
    payload = (aligned >> shift) & ((_U64_1 << m1.astype(np.uint64)) - _U64_1)
    value = ((np.int64(1) << m1) - 1) + payload.astype(np.int64)
    advance = 2 * m1 + 1
    bad |= cursor + advance > blen
    return value, advance, bad, aligned


def _read_fixed(aligned, consumed, width):
    """Fixed-width field right after a codeword inside the same window."""
    shift = (np.uint64(57) - consumed.astype(np.uint64)
             - width.astype(np.uint64))
    return ((aligned >> shift)
            & ((_U64_1 << width.astype(np.uint64)) - _U64_1)).astype(np.int64)


def decode_batch(bits_concat, bit_offsets, ns, alphabets):
    """Decode a packed batch of coded streams; exact inverse of encode_batch.

    Raises MalformedStreamError (mentioning the first offending stream) on
    truncation, alphabet overflow, header mismatch or length overflow.
    """
    from ..errors import MalformedStreamError

    count = ns.shape[0]
    if count and int(ns.max()) >= (1 << MAX_DECODE_M1):
        raise ValueError("batch decoder supports streams with n < 2**26")
    sym_offsets = np.zeros(count + 1, dtype=np.int64)
    np.cumsum(ns, out=sym_offsets[1:])
    sym_concat = np.zeros(int(sym_offsets[-1]), dtype=np.int16)
    packed = np.concatenate([
        np.packbits(bits_concat), np.zeros(8, dtype=np.uint8)])
    widths = np.frexp(np.maximum(alphabets.astype(np.int64) - 2, 0)
                      .astype(np.float64))[1].astype(np.int64)
    # dense working set of not-yet-finished rows
    rows = np.arange(count, dtype=np.int64)
    base = bit_offsets[:-1].astype(np.int64)
    blen = np.diff(bit_offsets).astype(np.int64)
    cursor = np.zeros(count, dtype=np.int64)
    produced = np.zeros(count, dtype=np.int64)
    first_bad = count
    # header round: the leading codeword must equal the declared length
    value, advance, bad, _ = _read_codewords(packed, base, cursor, blen)
    bad |= value != ns
    if bad.any():
        first_bad = int(rows[bad][0])
    keep = ~bad
    rows, cursor = rows[keep], cursor[keep] + advance[keep]
    produced = produced[keep]
    while rows.shape[0]:
        live_base = base[rows]
        live_blen = blen[rows]
        done = cursor == live_blen
        if done.any():
            keep = ~done
            rows, cursor, produced = rows[keep], cursor[keep], produced[keep]
            if not rows.shape[0]:
                break
            live_base = base[rows]
            live_blen = blen[rows]
        value, advance, bad, aligned = _read_codewords(
            packed, live_base, cursor, live_blen)
        width = widths[rows]
        has_sym = width > 0
        symbol = np.ones(rows.shape[0], dtype=np.int64)
        if has_sym.any():
            sval = _read_fixed(aligned, advance, width)
            symbol = np.where(has_sym, sval + 1, 1)
            advance = advance + width
            bad |= cursor + advance > live_blen
            bad |= symbol >= alphabets[rows]
        new_produced = produced + value + 1
        bad |= new_produced > ns[rows]
        if bad.any():
            first_bad = min(first_bad, int(rows[bad][0]))
            keep = ~bad
            rows, cursor, produced = rows[keep], cursor[keep], produced[keep]
            value, advance = value[keep], advance[keep]
            symbol, new_produced = symbol[keep], new_produced[keep]
        if rows.shape[0]:
            sym_concat[sym_offsets[rows] + produced + value] = \
                symbol.astype(np.int16)
            produced = new_produced
            cursor = cursor + advance
    if first_bad < count:
        raise MalformedStreamError(
            f"stream {first_bad} is truncated or inconsistent")
    return sym_concat, sym_offsets
