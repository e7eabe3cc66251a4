"""Signal processing for the comfort and dynamics KPIs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal as sps
from scipy.integrate import trapezoid

from .._jit import njit
from ..errors import InsufficientDataError, InvalidWindowError, SamplingRateError

BAND = (1.0, 32.0)
FILTER_ORDER = 2


@dataclass(frozen=True)
class Signals:
    t: np.ndarray
    a_long: np.ndarray
    a_lat: np.ndarray
    j_long: np.ndarray
    j_lat: np.ndarray


def derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """Central differences inside, one-sided at the ends, then a 3-point moving average."""
    d = np.gradient(np.asarray(values, dtype=float), dt)
    out = d.copy()
    out[1:-1] = (d[:-2] + d[1:-1] + d[2:]) / 3.0
    out[0] = 0.5 * (d[0] + d[1])
    out[-1] = 0.5 * (d[-2] + d[-1])
    return out


def sample_step(t: np.ndarray) -> float:
    t = np.asarray(t, dtype=float)
    if len(t) < 3:
        raise InsufficientDataError(f"need at least 3 samples, got {len(t)}")
    steps = np.diff(t)
    dt = float(steps.mean())
    if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-6 * dt:
        raise InsufficientDataError("samples must be uniformly spaced in time")
    return dt


def derive_signals(traj, dt: float | None = None) -> Signals:
    t = traj.column("t")
    step = sample_step(t)
    dt = step if dt is None else dt
    a_long, a_lat = traj.column("a_long"), traj.column("a_lat")
    return Signals(t, a_long, a_lat, derivative(a_long, dt), derivative(a_lat, dt))


@lru_cache(maxsize=16)
def design_bandpass(fs: float, f_lo: float = BAND[0], f_hi: float = BAND[1]) -> np.ndarray:
    """Second-order-sections Butterworth band-pass (bilinear transform)."""
    if not fs > 2.0 * f_hi:
        raise SamplingRateError(f"sampling rate {fs} Hz must exceed {2 * f_hi} Hz")
    if not 0 < f_lo < f_hi:
        raise ValueError("need 0 < f_lo < f_hi")
    return sps.butter(FILTER_ORDER, [f_lo, f_hi], btype="bandpass", fs=fs, output="sos")


@njit
def sos_run(sos, zi, x):
    """Direct-form-II-transposed cascade over ``x`` starting from section states ``zi``."""
    y = x.copy()
    z = zi.copy()
    nsec = sos.shape[0]
    for n in range(y.shape[0]):
        v = y[n]
        for k in range(nsec):
            out = sos[k, 0] * v + z[k, 0]
            z[k, 0] = sos[k, 1] * v - sos[k, 4] * out + z[k, 1]
            z[k, 1] = sos[k, 2] * v - sos[k, 5] * out
            v = out
        y[n] = v
    return y


def zero_phase(sos: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Forward-backward filtering with odd-extension padding and steady-state initial states."""
    x = np.asarray(x, dtype=float)
    ntaps = 2 * len(sos) + 1 - min(int((sos[:, 2] == 0).sum()), int((sos[:, 5] == 0).sum()))
    pad = min(3 * ntaps, len(x) - 1)
    if pad > 0:
        ext = np.concatenate((2 * x[0] - x[pad:0:-1], x, 2 * x[-1] - x[-2:-pad - 2:-1]))
    else:
        ext = x.copy()
    zi = sps.sosfilt_zi(sos)
    y = sos_run(sos, zi * ext[0], ext)
    y = sos_run(sos, zi * y[-1], y[::-1].copy())[::-1]
    return y[pad:len(y) - pad] if pad > 0 else y


def bandpass(x, fs: float, f_lo: float = BAND[0], f_hi: float = BAND[1]) -> np.ndarray:
    return zero_phase(design_bandpass(float(fs), float(f_lo), float(f_hi)), np.asarray(x, dtype=float))


def rms(x, dt: float, t0: float | None = None, tf: float | None = None, t_start: float = 0.0) -> float:
    """sqrt(integral of x^2 over [t0, tf] / (tf - t0)), trapezoidal on the sampled signal."""
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        raise InvalidWindowError("empty signal")
    t = t_start + dt * np.arange(len(x))
    t0 = float(t[0]) if t0 is None else float(t0)
    tf = float(t[-1]) if tf is None else float(tf)
    tol = 1e-9 * max(1.0, abs(t[-1]))
    if not tf > t0 or t0 < t[0] - tol or tf > t[-1] + tol:
        raise InvalidWindowError(f"window [{t0}, {tf}] is empty or outside [{t[0]}, {t[-1]}]")
    sq = x * x
    inner = (t > t0) & (t < tf)
    tt = np.concatenate(([t0], t[inner], [tf]))
    yy = np.concatenate(([np.interp(t0, t, sq)], sq[inner], [np.interp(tf, t, sq)]))
    return math.sqrt(max(float(trapezoid(yy, tt)), 0.0) / (tf - t0))
