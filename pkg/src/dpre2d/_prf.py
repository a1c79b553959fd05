"""Keyed pseudorandom function for the environment field (numba).

Every environment value is a pure function of
``(master_seed, replicate, n, x1, x2)``:

    k_rep  = fmix(fmix(master_seed) + G * (replicate + 1))
    k_time = fmix(k_rep + G * (n + 1))
    h      = fmix(k_time + G * (pack(x1, x2) + 1))

with all arithmetic mod 2^64, ``fmix`` the SplitMix64 finalizer, ``G`` the
SplitMix64 increment and ``pack`` the concatenation of the 32-bit zigzag
codes of x1 and x2.  Gaussian values map the top 52 bits of ``h`` to
``u = (k + 1/2) / 2^52`` and apply Wichura's AS241 (PPND16) inverse normal
CDF.

Rademacher values are bit-sliced: with u = x1 + x2, v = x1 - x2 and
j = (v - (u mod 2)) / 2, the sign is bit ``j mod 64`` of
``fmix(k_time + G * (pack(u, j // 64) + 1))`` (1 -> +1, 0 -> -1), so one
hash serves 64 consecutive sites of a rotated row.
"""
import math

import numpy as np
from numba import njit

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S32 = np.uint64(32)
_S63 = np.uint64(63)
_S12 = np.uint64(12)
_ONE = np.uint64(1)
_MASK32 = np.uint64(0xFFFFFFFF)

FAMILY_GAUSSIAN = 0
FAMILY_RADEMACHER = 1


@njit(cache=True, inline="always")
def fmix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def zigzag32(x):
    # x is a signed lattice coordinate with |x| < 2^31
    if x >= 0:
        return np.uint64(2 * x)
    return np.uint64(-2 * x - 1)


@njit(cache=True)
def replicate_key(master_seed, replicate):
    return fmix(fmix(np.uint64(master_seed)) + GAMMA * (np.uint64(replicate) + _ONE))


@njit(cache=True, inline="always")
def time_key(rep_key, n):
    return fmix(rep_key + GAMMA * (np.uint64(n) + _ONE))


@njit(cache=True, inline="always")
def site_hash(tkey, x1, x2):
    packed = (zigzag32(x1) << _S32) | (zigzag32(x2) & _MASK32)
    return fmix(tkey + GAMMA * (packed + _ONE))


@njit(cache=True)
def ppnd16(p):
    """Wichura's AS241 inverse of the standard normal CDF."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit(cache=True, inline="always")
def gaussian_from_hash(h):
    u = (float(h >> _S12) + 0.5) * 2.220446049250313e-16  # 2^-52
    return ppnd16(u)


@njit(cache=True, inline="always")
def rademacher_word(tkey, u, block):
    return site_hash(tkey, u, block)


@njit(cache=True, inline="always")
def rademacher_index(u, v):
    """(block, bit) of rotated site (u, v)."""
    j = (v - (u & 1)) // 2
    return j >> 6, j & 63


@njit(cache=True)
def site_value(master_seed, replicate, n, x1, x2, family):
    tkey = time_key(replicate_key(master_seed, replicate), n)
    if family == FAMILY_RADEMACHER:
        u = x1 + x2
        block, bit = rademacher_index(u, x1 - x2)
        word = rademacher_word(tkey, u, block)
        return 1.0 if (word >> np.uint64(bit)) & _ONE else -1.0
    return gaussian_from_hash(site_hash(tkey, x1, x2))


@njit(cache=True)
def site_values(master_seed, replicate, n, x1, x2, family):
    out = np.empty(x1.shape[0])
    for i in range(x1.shape[0]):
        out[i] = site_value(master_seed, replicate, n[i], x1[i], x2[i], family)
    return out
