"""Transfer-matrix sweep over the time slices of the planar lattice (numba).

Slices are stored in rotated coordinates.  At time n a walk started at
rotated position (u0, v0) occupies u = u0 + 2a - n, v = v0 + 2b - n for
0 <= a, b <= n; entry (a, b) lives at buffer index (a + 1, b + 1) so that
row/column 0 and n + 2 act as a zero border.  One step maps

    new[a, b] = w(n, a, b) / 4 * (old[a-1, b-1] + old[a-1, b] + old[a, b-1] + old[a, b])

(buffer-index form), i.e. the four diagonal moves (u +- 1, v +- 1).
"""
import math

import numpy as np
from numba import njit

from ._prf import (FAMILY_RADEMACHER, gaussian_from_hash, rademacher_index,
                   rademacher_word, replicate_key, site_hash, time_key)

MODE_TABLE = 2

STATUS_OK = 0
STATUS_RANGE = 1

# time steps advanced per pass over the rows of a slice
SWEEP_DEPTH = 2


@njit(cache=True)
def _binomial_row(s, out):
    """out[1 + a] = binom(s, a) / 2^s for a = 0..s, renormalized to sum 1."""
    ls = math.lgamma(s + 1.0) - s * math.log(2.0)
    tot = 0.0
    for a in range(s + 1):
        v = math.exp(ls - math.lgamma(a + 1.0) - math.lgamma(s - a + 1.0))
        out[a + 1] = v
        tot += v
    for a in range(s + 1):
        out[a + 1] /= tot


@njit(cache=True)
def _fill_weights(wrow, n, a, u0, v0, mode, tkey, beta, lam, lut,
                  table, ox1, ox2):
    u = u0 + 2 * a - n
    if mode == FAMILY_RADEMACHER:
        # lut[byte, i] is the weight selected by bit i of byte
        block, bit = rademacher_index(u, v0 - n)
        b = 0
        while b <= n:
            word = rademacher_word(tkey, u, block) >> np.uint64(bit)
            stop = min(n + 1, b + 64 - bit)
            c = b
            while c + 8 <= stop:
                row = lut[np.int64(word & np.uint64(255))]
                for i in range(8):
                    wrow[c + 1 + i] = row[i]
                word >>= np.uint64(8)
                c += 8
            row = lut[np.int64(word & np.uint64(255))]
            for i in range(stop - c):
                wrow[c + 1 + i] = row[i]
            b = stop
            bit = 0
            block += 1
        return
    for b in range(n + 1):
        v = v0 + 2 * b - n
        x1 = (u + v) // 2
        x2 = (u - v) // 2
        if mode == MODE_TABLE:
            i1 = x1 - ox1
            i2 = x2 - ox2
            om = 0.0
            if (0 <= n < table.shape[0] and 0 <= i1 < table.shape[1]
                    and 0 <= i2 < table.shape[2]):
                om = table[n, i1, i2]
            wrow[b + 1] = math.exp(beta * om - lam)
        else:
            wrow[b + 1] = math.exp(beta * gaussian_from_hash(site_hash(tkey, x1, x2)) - lam)


@njit(cache=True, fastmath={"reassoc"})
def _row_update(above, below, out, w, scale, stop):
    acc = 0.0
    for b in range(1, stop):
        val = w[b] * scale * ((above[b - 1] + below[b - 1]) + (above[b] + below[b]))
        out[b] = val
        acc += val
    out[stop] = 0.0
    return acc


@njit(cache=True)
def _sweep_one(bufs, rowsum, rkey, mode, beta, lam, table, ox1, ox2,
               u0, v0, starts, ends, slots, logz, status, depth):
    nf = starts.shape[0]
    nslot = bufs.shape[0]
    width = bufs.shape[2]
    horizon = 0
    for f in range(nf):
        if ends[f] > horizon:
            horizon = ends[f]
    mass = np.ones(nf)
    lut = np.empty((256, 8))
    wp = math.exp(beta - lam)
    wm = math.exp(-beta - lam)
    for byte in range(256):
        for i in range(8):
            lut[byte, i] = wp if (byte >> i) & 1 else wm
    wr = np.zeros((depth, width))
    cur = np.zeros(nslot, dtype=np.int64)  # buffer holding each slot's current slice
    # two-row rings for the intermediate slices of a multi-step pass
    tmp = np.zeros((nslot, max(depth - 1, 1), 2, width))
    for f in range(nf):
        logz[f] = 0.0
        status[f] = STATUS_OK
        if starts[f] == 0:
            sl = slots[f]
            for p in range(2):
                bufs[sl, p, :3, :3] = 0.0
            bufs[sl, 0, 1, 1] = 1.0
            cur[sl] = 0
    active = np.zeros(nf, dtype=np.bool_)
    newmass = np.zeros(nf)
    n = 1
    while n <= horizon:
        any_active = False
        k = min(depth, horizon - n + 1)
        for f in range(nf):
            # fields whose window opens at time n-1 start from the free walk law
            if starts[f] == n - 1 and n - 1 > 0:
                sl = slots[f]
                s = n - 1
                bufs[sl, 0, :s + 3, :s + 3] = 0.0
                bufs[sl, 1, :s + 3, :s + 3] = 0.0
                _binomial_row(s, rowsum)
                init = bufs[sl, 0]
                for a in range(s + 1):
                    for b in range(s + 1):
                        init[a + 1, b + 1] = rowsum[a + 1] * rowsum[b + 1]
                cur[sl] = 0
            in_now = starts[f] < n <= ends[f]
            # a pass covers steps n..n+k-1 only while no field opens or closes
            for j in range(1, k):
                if (starts[f] < n + j <= ends[f]) != in_now:
                    k = j
                    break
            active[f] = in_now and status[f] == STATUS_OK
            any_active = any_active or active[f]
        if not any_active:
            n += 1
            continue
        # level j holds slice n+j, rows 1..n+j+1; levels run in descending order
        # so each reads rows of the level below produced on the previous pass
        for f in range(nf):
            newmass[f] = 0.0
            if active[f]:
                tmp[slots[f], :, :, :n + k + 3] = 0.0
        for r in range(1, n + 2 * k + 1):
            for j in range(k - 1, -1, -1):
                q = r - j
                if q < 1 or q > n + j + 2:
                    continue
                last = q == n + j + 2
                if not last:
                    _fill_weights(wr[j], n + j, q - 1, u0, v0, mode, time_key(rkey, n + j),
                                  beta, lam, lut, table, ox1, ox2)
                for f in range(nf):
                    if not active[f]:
                        continue
                    sl = slots[f]
                    if j == k - 1:
                        out = bufs[sl, 1 - cur[sl], q]
                    else:
                        out = tmp[sl, j, q % 2]
                    if last:
                        out[:n + j + 4] = 0.0
                        continue
                    if j == 0:
                        lo = bufs[sl, cur[sl], q - 1]
                        hi = bufs[sl, cur[sl], q]
                    else:
                        lo = tmp[sl, j - 1, (q - 1) % 2]
                        hi = tmp[sl, j - 1, q % 2]
                    acc = _row_update(lo, hi, out, wr[j], 0.25 / mass[f] if j == 0 else 0.25,
                                      n + j + 2)
                    if j == k - 1:
                        newmass[f] += acc
        for f in range(nf):
            if active[f]:
                sl = slots[f]
                cur[sl] = 1 - cur[sl]
                logz[f] += math.log(mass[f])
                m = newmass[f]
                if not (m > 0.0 and m < np.inf):
                    status[f] = STATUS_RANGE
                    logz[f] = np.nan
                else:
                    mass[f] = m
        n += k
    for f in range(nf):
        if status[f] == STATUS_OK:
            if ends[f] > starts[f]:
                logz[f] += math.log(mass[f])
            else:
                logz[f] = 0.0


@njit(cache=True)
def sweep_keyed(seed, replicates, family, beta, lam, u0, v0, starts, ends, slots,
                nslots):
    """Log partition functions for every window and every replicate.

    Returns ``(logz, status)`` of shape (len(replicates), len(starts)).
    """
    horizon = 1
    for f in range(starts.shape[0]):
        if ends[f] > horizon:
            horizon = ends[f]
    bufs = np.zeros((nslots, 2, horizon + 3, horizon + 3))
    rowsum = np.zeros(horizon + 3)
    dummy = np.zeros((1, 1, 1))
    nr = replicates.shape[0]
    nf = starts.shape[0]
    logz = np.empty((nr, nf))
    status = np.empty((nr, nf), dtype=np.int64)
    for r in range(nr):
        rkey = replicate_key(seed, replicates[r])
        _sweep_one(bufs, rowsum, rkey, family, beta, lam, dummy, 0, 0,
                   u0, v0, starts, ends, slots, logz[r], status[r], SWEEP_DEPTH)
    return logz, status


@njit(cache=True)
def sweep_table(table, ox1, ox2, beta, lam, u0, v0, starts, ends, slots, nslots):
    """Same sweep, reading omega(n, x) from ``table[n, x1 - ox1, x2 - ox2]``
    (zero outside the table)."""
    horizon = 1
    for f in range(starts.shape[0]):
        if ends[f] > horizon:
            horizon = ends[f]
    bufs = np.zeros((nslots, 2, horizon + 3, horizon + 3))
    rowsum = np.zeros(horizon + 3)
    nf = starts.shape[0]
    logz = np.empty(nf)
    status = np.empty(nf, dtype=np.int64)
    _sweep_one(bufs, rowsum, np.uint64(0), MODE_TABLE, beta, lam, table, ox1, ox2,
               u0, v0, starts, ends, slots, logz, status, SWEEP_DEPTH)
    return logz, status
