"""Inner loops shared by geometry and sounder.

Each kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version.  The public names dispatch on ``_accel.HAVE_NUMBA``; both variants
stay importable so tests and the benchmark can compare them directly.
"""

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit

# 1 - rho^2 at or below this (unit-circle frame) counts as tangency
TANGENT_EPS = 1e-12


# --- segment / axis-aligned ellipse chord -----------------------------------

@njit(cache=True)
def _chords_loop(sx, sz, ex, ez, cx, cz, a, b):
    n = sx.shape[0]
    out = np.zeros(n)
    for i in range(n):
        dx = ex[i] - sx[i]
        dz = ez[i] - sz[i]
        # unit-circle frame: ellipse -> x^2 + z^2 = 1
        ux = (sx[i] - cx[i]) / a[i]
        uz = (sz[i] - cz[i]) / b[i]
        vx = dx / a[i]
        vz = dz / b[i]
        qa = vx * vx + vz * vz
        h = (ux * vx + uz * vz) / qa
        # distance of the line from the centre, taken at the closest point so
        # long near-tangent segments do not cancel h^2 against q
        rho = math.hypot(ux - h * vx, uz - h * vz)
        gap = (1.0 - rho) * (1.0 + rho)
        if gap <= TANGENT_EPS:
            continue
        root = math.sqrt(gap / qa)
        t0 = max(-h - root, 0.0)
        t1 = min(-h + root, 1.0)
        if t1 > t0:
            out[i] = (t1 - t0) * math.sqrt(dx * dx + dz * dz)
    return out


def _chords_numpy(sx, sz, ex, ez, cx, cz, a, b):
    dx = ex - sx
    dz = ez - sz
    ux = (sx - cx) / a
    uz = (sz - cz) / b
    vx = dx / a
    vz = dz / b
    qa = vx * vx + vz * vz
    h = (ux * vx + uz * vz) / qa
    rho = np.hypot(ux - h * vx, uz - h * vz)
    gap = (1.0 - rho) * (1.0 + rho)
    hit = gap > TANGENT_EPS
    root = np.sqrt(np.where(hit, gap, 0.0) / qa)
    t0 = np.maximum(-h - root, 0.0)
    t1 = np.minimum(-h + root, 1.0)
    span = np.where(hit & (t1 > t0), t1 - t0, 0.0)
    return span * np.hypot(dx, dz)


def chord_lengths(sx, sz, ex, ez, cx, cz, a, b, use_numba=None):
    """Chord of each segment ``(sx, sz)->(ex, ez)`` through each ellipse.

    All arguments broadcast to a common 1-D shape.  Segments must be
    non-degenerate and semi-axes positive; callers validate.
    """
    args = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, dtype=np.float64))
                                 for v in (sx, sz, ex, ez, cx, cz, a, b)))
    args = [np.ascontiguousarray(v).ravel() for v in args]
    if use_numba is None:
        use_numba = HAVE_NUMBA
    if use_numba:
        return _chords_loop(*args)
    return _chords_numpy(*args)


# --- band-limited delay response at arbitrary delays --------------------------

@njit(cache=True)
def _dtft_power_loop(re, im, f_step, taus):
    n = re.shape[0]
    out = np.empty(taus.shape[0])
    for j in range(taus.shape[0]):
        w = 2.0 * math.pi * f_step * taus[j]
        acc_re = 0.0
        acc_im = 0.0
        for k in range(n):
            c = math.cos(w * k)
            s = math.sin(w * k)
            acc_re += re[k] * c - im[k] * s
            acc_im += re[k] * s + im[k] * c
        acc_re /= n
        acc_im /= n
        out[j] = acc_re * acc_re + acc_im * acc_im
    return out


def _dtft_power_numpy(spectrum, f_step, taus):
    k = np.arange(spectrum.shape[0])
    phase = np.exp(2j * np.pi * f_step * np.outer(taus, k))
    return np.abs(phase @ spectrum / spectrum.shape[0]) ** 2


def dtft_power(spectrum, f_step, taus, use_numba=None):
    """|(1/N) sum_k X_k exp(j 2 pi k f_step tau)|^2 for each tau.

    At ``tau = n / (N f_step)`` this equals bin ``n`` of ``|ifft(X)|^2``.
    """
    spectrum = np.ascontiguousarray(spectrum, dtype=np.complex128)
    taus = np.ascontiguousarray(np.atleast_1d(taus), dtype=np.float64)
    if use_numba is None:
        use_numba = HAVE_NUMBA
    if use_numba:
        return _dtft_power_loop(spectrum.real.copy(), spectrum.imag.copy(), float(f_step), taus)
    return _dtft_power_numpy(spectrum, float(f_step), taus)
