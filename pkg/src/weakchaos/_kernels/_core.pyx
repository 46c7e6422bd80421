# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot loops.

Function-for-function mirror of fallback.py: whole-replica renewal chain
runs, per-orbit intermittent-map ensembles, induced-entropy accumulation and
the batch codec.  Integer bookkeeping is bit-identical to the fallback; map
steps are bit-identical for integer exponents (shared multiplication order).
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log1p, pow
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_geometric

from . import laminar

cnp.import_array()

IMPLEMENTATION = "cython"

MAX_DECODE_M1 = 26

cdef extern from *:
    int __builtin_clzll(unsigned long long) nogil


cdef inline long long _floor_log2(unsigned long long v) nogil:
    return 63 - __builtin_clzll(v)


cdef inline long long _nat_len(long long v) nogil:
    # codeword length of a natural v >= 0: 2*floor(log2(v+1)) + 1
    return 2 * _floor_log2(<unsigned long long> (v + 1)) + 1


cdef inline int _int_exponent(double z) nogil:
    if z == 1.0:
        return 1
    if z == 2.0:
        return 2
    if z == 3.0:
        return 3
    if z == 4.0:
        return 4
    return 0


cdef inline double _pow_z(double x, double z, int iz) nogil:
    # multiplication order mirrors the scalar step and the numpy fallback
    if iz == 1:
        return x
    if iz == 2:
        return x * x
    if iz == 3:
        return (x * x) * x
    if iz == 4:
        return (x * x) * (x * x)
    return pow(x, z)


# ---------------------------------------------------------------------------
# renewal chain
# ---------------------------------------------------------------------------


def chain_run_geometric(object rng, double p, long long horizon,
                        long long[::1] grid, long long[::1] counts,
                        long long[::1] bits, long long[::1] occ_bin,
                        long long[::1] hist, long long clip):
    """Run one whole replica with geometric renewal intervals.

    Consumes the generator exactly like Generator.geometric, so results are
    bit-identical to the chunked fallback.  Returns (k_partial, s_partial,
    draws) for the first interval reaching past the horizon.
    """
    cdef object bg = rng.bit_generator
    cdef bitgen_t *state = <bitgen_t *> PyCapsule_GetPointer(
        bg.capsule, "BitGenerator")
    cdef long long n_grid = grid.shape[0]
    cdef long long occ_limit = occ_bin.shape[0] - 1
    cdef long long hist_limit = hist.shape[0] - 1
    cdef long long t = -1, passages = 0, bitsum = 0, gptr = 0
    cdef long long k = 0, kp = 0, sp = 0, draws = 0
    with bg.lock:
        with nogil:
            while True:
                k = random_geometric(state, p)
                draws += 1
                if k > clip:
                    k = clip
                t = t + k
                while gptr < n_grid and grid[gptr] - 1 < t:
                    counts[gptr] += passages
                    bits[gptr] += bitsum
                    gptr += 1
                if t > horizon:
                    kp = k
                    sp = t
                    break
                passages += 1
                bitsum += _nat_len(k - 1)
                if occ_limit >= 0:
                    occ_bin[k if k < occ_limit else occ_limit] += 1
                if hist_limit >= 0:
                    hist[k if k < hist_limit else hist_limit] += 1
    while gptr < n_grid:
        counts[gptr] += passages
        bits[gptr] += bitsum
        gptr += 1
    return kp, sp, draws


def chain_process_chunk(long long[::1] intervals, long long t,
                        long long horizon, long long[::1] grid,
                        long long[::1] counts, long long[::1] bits,
                        long long[::1] occ_bin, long long[::1] hist):
    """Generic-chunk twin of fallback.chain_process_chunk."""
    cdef long long m = intervals.shape[0]
    cdef long long n_grid = grid.shape[0]
    cdef long long occ_limit = occ_bin.shape[0] - 1
    cdef long long hist_limit = hist.shape[0] - 1
    cdef long long passages = 0, bitsum = 0, gptr = 0
    cdef long long i, k, s = t, prev = t
    cdef bint finished = False
    cdef long long kp = 0, sp = 0
    with nogil:
        for i in range(m):
            k = intervals[i]
            prev = s
            s = s + k
            while gptr < n_grid and grid[gptr] - 1 < s:
                counts[gptr] += passages
                bits[gptr] += bitsum
                gptr += 1
            if s > horizon:
                finished = True
                kp = k
                sp = s
                s = prev
                break
            passages += 1
            bitsum += _nat_len(k - 1)
            if occ_limit >= 0:
                occ_bin[k if k < occ_limit else occ_limit] += 1
            if hist_limit >= 0:
                hist[k if k < hist_limit else hist_limit] += 1
        while gptr < n_grid:
            counts[gptr] += passages
            bits[gptr] += bitsum
            gptr += 1
    return int(s), bool(finished), int(kp), int(sp)


# ---------------------------------------------------------------------------
# intermittent-map orbit ensembles
# ---------------------------------------------------------------------------


cdef struct OrbitState:
    double x
    long long step
    long long passages
    long long bits
    long long run
    long long gptr


cdef int _orbit_segment(OrbitState *st, long long zero_skip,
                        double z, double r, int iz,
                        long long[::1] grid, long long n_grid,
                        double[::1] breaks, long long n_breaks,
                        long long symbol_width,
                        long long[:, ::1] out_n, long long[:, ::1] out_i,
                        long long orbit,
                        long long[::1] hist, long long hist_limit,
                        bint use_laminar, double thr,
                        long long *boundary_hits) nogil:
    """Advance one orbit until its grid is exhausted (0) or a laminar dip (1).

    ``zero_skip`` first consumes that many certified zero symbols in bulk,
    keeping the snapshot bookkeeping exact.
    """
    cdef long long take, boundary, sym
    cdef double x = st.x, y
    while zero_skip > 0:
        boundary = grid[st.gptr]
        take = boundary - st.step
        if zero_skip < take:
            take = zero_skip
        st.run += take
        st.step += take
        zero_skip -= take
        if st.step == boundary:
            out_n[orbit, st.gptr] = st.passages
            out_i[orbit, st.gptr] = st.bits
            st.gptr += 1
            if st.gptr == n_grid:
                return 0
    while True:
        if n_breaks == 1:
            sym = 1 if x > breaks[0] else 0
            if x == breaks[0]:
                boundary_hits[0] += 1
        else:
            sym = 0
            while sym < n_breaks and x > breaks[sym]:
                sym += 1
            if sym < n_breaks and x == breaks[sym]:
                boundary_hits[0] += 1
        if sym > 0:
            st.bits += _nat_len(st.run) + symbol_width
            st.passages += 1
            if hist_limit >= 0:
                hist[(st.run + 1) if st.run + 1 < hist_limit else hist_limit] += 1
            st.run = 0
        else:
            st.run += 1
        if st.step + 1 == grid[st.gptr]:
            out_n[orbit, st.gptr] = st.passages
            out_i[orbit, st.gptr] = st.bits
            st.gptr += 1
            if st.gptr == n_grid:
                st.x = x
                return 0
        y = x + r * _pow_z(x, z, iz)
        if y > 1.0:
            y = y - 1.0
        x = y
        st.step += 1
        if use_laminar and x > 0.0 and x < thr:
            st.x = x
            return 1


def mp_ensemble_stats(double[::1] x0, double z, double r, double c,
                      long long[::1] grid, double[::1] breaks,
                      long long symbol_width, str mode, double threshold,
                      long long digits, long long tau_hist_max=0):
    """Per-orbit twin of fallback.mp_ensemble_stats (same contract)."""
    cdef long long n_orbits = x0.shape[0]
    cdef long long n_grid = grid.shape[0]
    cdef long long n_max = grid[n_grid - 1]
    out_n_arr = np.zeros((n_orbits, n_grid), dtype=np.int64)
    out_i_arr = np.zeros((n_orbits, n_grid), dtype=np.int64)
    hist_arr = np.zeros(tau_hist_max + 2 if tau_hist_max else 0,
                        dtype=np.int64)
    cdef long long[:, ::1] out_n = out_n_arr
    cdef long long[:, ::1] out_i = out_i_arr
    cdef long long[::1] hist = hist_arr
    cdef long long hist_limit = hist_arr.shape[0] - 1
    cdef bint use_laminar = mode != "plain"
    cdef double b1 = breaks[0]
    cdef double thr = threshold if threshold < b1 else b1
    cdef int iz = _int_exponent(z)
    cdef long long n_breaks = breaks.shape[0]
    cdef long long boundary_hits = 0
    cdef long long escalations = 0, ode_segments = 0, dormant = 0
    cdef OrbitState st
    cdef long long i, zero_skip, remaining
    cdef int status
    mode_str = mode
    for i in range(n_orbits):
        st.x = x0[i]
        st.step = 0
        st.passages = 0
        st.bits = 0
        st.run = 0
        st.gptr = 0
        zero_skip = 0
        while True:
            status = _orbit_segment(
                &st, zero_skip, z, r, iz, grid, n_grid, breaks, n_breaks,
                symbol_width, out_n, out_i, i, hist, hist_limit,
                use_laminar, thr, &boundary_hits)
            if status == 0:
                break
            remaining = n_max - st.step
            seg, x_after, _ = laminar.resolve(
                st.x, remaining, mode_str, z, r, thr, digits)
            escalations += 1
            if mode_str == "ode-approx":
                ode_segments += 1
            if x_after is None:
                zero_skip = remaining
                dormant += 1
                st.x = 0.0
            else:
                zero_skip = seg
                st.x = x_after
    return {
        "passages": out_n_arr,
        "information_bits": out_i_arr,
        "tau_hist": hist_arr if tau_hist_max else None,
        "escalations": int(escalations),
        "ode_segments": int(ode_segments),
        "dormant": int(dormant),
        "boundary_hits": int(boundary_hits),
    }


def mp_entropy_run(double[::1] x0, double z, double r, double c,
                   long long passages_target, long long step_cap, str mode,
                   double threshold, long long digits):
    """Per-orbit twin of fallback.mp_entropy_run (same contract)."""
    cdef long long n_orbits = x0.shape[0]
    committed_arr = np.zeros(n_orbits, dtype=np.float64)
    passages_arr = np.zeros(n_orbits, dtype=np.int64)
    steps_arr = np.zeros(n_orbits, dtype=np.int64)
    truncated_arr = np.zeros(n_orbits, dtype=bool)
    cdef double[::1] committed = committed_arr
    cdef long long[::1] passages = passages_arr
    cdef long long[::1] steps = steps_arr
    cdef cnp.uint8_t[::1] truncated = truncated_arr.view(np.uint8)
    cdef bint use_laminar = mode != "plain"
    cdef double thr = threshold if threshold < c else c
    cdef double zm1 = z - 1.0
    cdef int iz = _int_exponent(z)
    cdef int izm1 = _int_exponent(zm1)
    cdef long long i, n_pass, n_steps
    cdef double x, pending, total
    cdef bint trunc, completed
    with nogil:
        for i in range(n_orbits):
            x = x0[i]
            pending = 0.0
            total = 0.0
            n_pass = 0
            n_steps = 0
            trunc = False
            completed = False
            if x > 0.0:
                while n_steps < step_cap:
                    pending += log1p(r * z * _pow_z(x, zm1, izm1))
                    if x > c:
                        total += pending
                        pending = 0.0
                        n_pass += 1
                        if n_pass >= passages_target:
                            completed = True
                    x = x + r * _pow_z(x, z, iz)
                    if x > 1.0:
                        x = x - 1.0
                    n_steps += 1
                    if completed:
                        break
                    if use_laminar and x > 0.0 and x < thr:
                        trunc = True
                        break
                    if x == 0.0:
                        break
                if n_steps >= step_cap and not completed:
                    trunc = True
            committed[i] = total
            passages[i] = n_pass
            steps[i] = n_steps
            truncated[i] = 1 if trunc else 0
    return {
        "log_deriv_sum": committed_arr,
        "passages": passages_arr,
        "steps": steps_arr,
        "truncated": truncated_arr,
    }


# ---------------------------------------------------------------------------
# batch codec
# ---------------------------------------------------------------------------


def encode_batch(short[::1] sym_concat, long long[::1] offsets,
                 short[::1] alphabets):
    """Per-string compiled twin of fallback.encode_batch."""
    cdef long long count = alphabets.shape[0]
    bit_offsets_arr = np.zeros(count + 1, dtype=np.int64)
    runs_arr = np.zeros(count, dtype=np.int64)
    cdef long long[::1] bit_offsets = bit_offsets_arr
    cdef long long[::1] runs = runs_arr
    cdef long long i, j, n, width, run, total, m1, nz
    # first pass: sizes
    with nogil:
        for i in range(count):
            n = offsets[i + 1] - offsets[i]
            width = _floor_log2(<unsigned long long> (alphabets[i] - 1)) \
                if alphabets[i] > 2 else 0
            if alphabets[i] > 2 and (1 << width) < alphabets[i] - 1:
                width += 1
            total = _nat_len(n)
            run = 0
            nz = 0
            for j in range(n):
                if sym_concat[offsets[i] + j] != 0:
                    total += _nat_len(run) + width
                    nz += 1
                    run = 0
                else:
                    run += 1
            bit_offsets[i + 1] = bit_offsets[i] + total
            runs[i] = nz
    bits_arr = np.zeros(int(bit_offsets_arr[count]), dtype=np.uint8)
    cdef cnp.uint8_t[::1] bits = bits_arr
    cdef long long pos, v, b, sval
    with nogil:
        for i in range(count):
            n = offsets[i + 1] - offsets[i]
            width = _floor_log2(<unsigned long long> (alphabets[i] - 1)) \
                if alphabets[i] > 2 else 0
            if alphabets[i] > 2 and (1 << width) < alphabets[i] - 1:
                width += 1
            pos = bit_offsets[i]
            # header codeword for n
            m1 = _floor_log2(<unsigned long long> (n + 1))
            v = n - ((<long long> 1 << m1) - 1)
            for b in range(m1):
                bits[pos + b] = 1
            pos += m1 + 1
            for b in range(m1):
                bits[pos + b] = <cnp.uint8_t> ((v >> (m1 - 1 - b)) & 1)
            pos += m1
            run = 0
            for j in range(n):
                sval = sym_concat[offsets[i] + j]
                if sval == 0:
                    run += 1
                    continue
                m1 = _floor_log2(<unsigned long long> (run + 1))
                v = run - ((<long long> 1 << m1) - 1)
                for b in range(m1):
                    bits[pos + b] = 1
                pos += m1 + 1
                for b in range(m1):
                    bits[pos + b] = <cnp.uint8_t> ((v >> (m1 - 1 - b)) & 1)
                pos += m1
                sval -= 1
                for b in range(width):
                    bits[pos + b] = <cnp.uint8_t> ((sval >> (width - 1 - b)) & 1)
                pos += width
                run = 0
    return bits_arr, bit_offsets_arr, runs_arr


def decode_batch(cnp.uint8_t[::1] bits_concat, long long[::1] bit_offsets,
                 long long[::1] ns, short[::1] alphabets):
    """Per-string compiled twin of fallback.decode_batch."""
    from ..errors import MalformedStreamError

    cdef long long count = ns.shape[0]
    sym_offsets_arr = np.zeros(count + 1, dtype=np.int64)
    cdef long long[::1] sym_offsets = sym_offsets_arr
    cdef long long i
    for i in range(count):
        sym_offsets[i + 1] = sym_offsets[i] + ns[i]
    sym_arr = np.zeros(int(sym_offsets_arr[count]), dtype=np.int16)
    cdef short[::1] sym = sym_arr
    cdef long long first_bad = count
    cdef long long base, blen, pos, n, produced, m1, v, b, width, sval
    cdef long long alphabet, out_base
    cdef bint bad
    with nogil:
        for i in range(count):
            base = bit_offsets[i]
            blen = bit_offsets[i + 1] - base
            n = ns[i]
            alphabet = alphabets[i]
            width = _floor_log2(<unsigned long long> (alphabet - 1)) \
                if alphabet > 2 else 0
            if alphabet > 2 and (1 << width) < alphabet - 1:
                width += 1
            out_base = sym_offsets[i]
            pos = 0
            produced = 0
            bad = False
            # header
            m1 = 0
            while pos + m1 < blen and bits_concat[base + pos + m1] == 1:
                m1 += 1
            if pos + m1 >= blen:
                bad = True
            else:
                pos += m1 + 1
                if pos + m1 > blen:
                    bad = True
                else:
                    v = 0
                    for b in range(m1):
                        v = (v << 1) | bits_concat[base + pos + b]
                    pos += m1
                    v += (<long long> 1 << m1) - 1
                    if v != n:
                        bad = True
            while not bad and pos < blen:
                m1 = 0
                while pos + m1 < blen and bits_concat[base + pos + m1] == 1:
                    m1 += 1
                if pos + m1 >= blen:
                    bad = True
                    break
                pos += m1 + 1
                if pos + m1 > blen:
                    bad = True
                    break
                v = 0
                for b in range(m1):
                    v = (v << 1) | bits_concat[base + pos + b]
                pos += m1
                v += (<long long> 1 << m1) - 1
                if width:
                    if pos + width > blen:
                        bad = True
                        break
                    sval = 0
                    for b in range(width):
                        sval = (sval << 1) | bits_concat[base + pos + b]
                    pos += width
                    sval += 1
                    if sval >= alphabet:
                        bad = True
                        break
                else:
                    sval = 1
                if produced + v + 1 > n:
                    bad = True
                    break
                produced += v
                sym[out_base + produced] = <short> sval
                produced += 1
            if bad and i < first_bad:
                first_bad = i
    if first_bad < count:
        raise MalformedStreamError(
            f"stream {first_bad} is truncated or inconsistent")
    return sym_arr, sym_offsets_arr
