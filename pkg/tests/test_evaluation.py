import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import signal as sps

from adftest.errors import InsufficientDataError, InvalidReferenceError, InvalidWindowError, SamplingRateError
from adftest.evaluation import (
    COMFORT_LABELS,
    KpiRefs,
    KpiVector,
    aggregate_by_template,
    bandpass,
    comfort_class,
    compute_kpis,
    critical_radius,
    derivative,
    derive_signals,
    design_bandpass,
    kpi_radius_trend,
    normalize_kpi,
    rms,
    spearman,
    zero_phase,
)
from adftest.evaluation.signals import sos_run
from adftest.roadgen import Template
from adftest.simulator import Trajectory
from adftest.simulator.engine import COLUMNS
from oracles import biquad_gain, fine_rms

FS = 100.0
DT = 0.01


def _traj(n=500, **cols):
    data = np.zeros((n, len(COLUMNS)))
    data[:, 0] = DT * np.arange(n)
    for name, values in cols.items():
        data[:, COLUMNS.index(name)] = values
    return Trajectory(data)


# ------------------------------------------------------------------ derivatives

def test_derivative_constant_and_ramp():
    t = DT * np.arange(200)
    assert np.all(derive_signals(_traj(200, a_long=1.0)).j_long == 0.0)
    j = derive_signals(_traj(200, a_long=t)).j_long
    assert np.allclose(j[1:-1], 1.0, atol=1e-12)


def test_derivative_sine_amplitude():
    t = DT * np.arange(1000)
    j = derivative(np.sin(2 * math.pi * t), DT)
    x = 2 * math.pi * DT
    # central difference then 3-point average scale a sinusoid by (sin x / x) * (1 + 2 cos x) / 3
    factor = math.sin(x) / x * (1 + 2 * math.cos(x)) / 3
    assert factor == pytest.approx(0.998, abs=5e-5)
    inner = j[5:-5]
    assert np.max(np.abs(inner)) == pytest.approx(2 * math.pi * factor, rel=1e-4)
    assert np.max(np.abs(inner)) == pytest.approx(2 * math.pi, rel=2.5e-3)


def test_derive_signals_errors():
    with pytest.raises(InsufficientDataError):
        derive_signals(_traj(2))
    tr = _traj(10)
    tr.data[5, 0] += 0.003
    with pytest.raises(InsufficientDataError):
        derive_signals(tr)


# ------------------------------------------------------------------ normalization and KPIs

def test_normalize_examples():
    assert normalize_kpi(0.0, 2.0) == 1.0
    assert normalize_kpi(2.0, 2.0) == 0.0
    assert normalize_kpi(1.0, 2.0) == 0.5
    assert normalize_kpi(9.0, 2.0) == 0.0
    with pytest.raises(InvalidReferenceError):
        normalize_kpi(1.0, 0.0)
    with pytest.raises(ValueError):
        normalize_kpi(-1.0, 1.0)
    with pytest.raises(InvalidReferenceError):
        KpiRefs(a_long_ref=-1)


def test_compute_kpis_half_scores():
    n = 600
    t = DT * np.arange(n)
    # piecewise-linear accelerations; every ramp slope is 2.5 m/s^3
    a_long = np.interp(t, [0, 0.4, 1.0, 1.0 + 2.75 / 2.5, 6], [0, 1.0, 1.0, -1.75, -1.75])
    a_lat = np.interp(t, [0, 0.6, 2.0, 2.6], [0, 1.5, 1.5, 0])
    tr = _traj(n, a_long=a_long, a_lat=a_lat, x=10.0, y=2.0)
    k = compute_kpis(tr, KpiRefs(), (10.0, 2.0), 3.5)
    assert k.scores[:3] == pytest.approx((0.5, 0.5, 0.5))
    assert k.long_jerk == pytest.approx(0.5, abs=1e-9)
    assert k.lat_jerk == pytest.approx(0.5, abs=1e-9)
    assert k.distance_target == 1.0 and k.lane_keeping == 1.0


def test_compute_kpis_still_at_target():
    tr = _traj(300, x=4.0, y=3.0)
    k = compute_kpis(tr, KpiRefs(), (0.0, 0.0), 3.5)
    assert k.scores[:5] == (1.0,) * 5
    assert k.distance_target == 0.0 and k.oscillation == 1.0
    assert k.comfort_class == COMFORT_LABELS[0]
    assert compute_kpis(tr, KpiRefs(), (4.0, 0.5), 3.5).distance_target == pytest.approx(0.5)


def test_compute_kpis_exceeding():
    t = DT * np.arange(400)
    tr = _traj(400, a_long=20 * np.sin(3 * t), a_lat=20 * np.cos(3 * t), lane_dev=3.0)
    k = compute_kpis(tr, KpiRefs(), (0, 0), 3.5)
    assert k.scores[:5] == (0.0,) * 5 and k.lane_keeping == 0.0


def test_lane_keeping_reference():
    tr = _traj(300, lane_dev=np.linspace(0, 0.875, 300))
    assert compute_kpis(tr, KpiRefs(), (0, 0), 3.5).lane_keeping == pytest.approx(0.5)
    assert compute_kpis(tr, KpiRefs(lane_dev_ref=1.75), (0, 0), 4.0).lane_keeping == pytest.approx(0.5)


@given(st.integers(0, 2 ** 31), st.integers(3, 400))
def test_scores_bounded(seed, n):
    rng = np.random.default_rng(seed)
    cols = {c: rng.normal(0, rng.uniform(0.01, 30), n) for c in ("x", "y", "a_long", "a_lat", "lane_dev")}
    tr = _traj(n, **cols)
    k = compute_kpis(tr, KpiRefs(), tuple(rng.normal(0, 10, 2)), 3.5)
    assert all(0.0 <= s <= 1.0 for s in k.scores)
    assert KpiVector.from_dict(k.to_dict()) == k


# ------------------------------------------------------------------ band-pass

def _t(seconds=20.0):
    return np.arange(int(seconds * FS)) / FS


def test_bandpass_dc():
    y = bandpass(np.ones(2000), FS)
    assert np.max(np.abs(y[200:-200])) < 0.05
    assert len(y) == 2000


def test_bandpass_midband():
    t = _t()
    y = bandpass(np.sin(2 * math.pi * 8 * t), FS)
    amp = np.max(np.abs(y[300:-300]))
    assert amp == pytest.approx(1.0, rel=0.05)
    # zero phase: the filtered tone stays aligned with the input
    assert np.allclose(y[300:-300], np.sin(2 * math.pi * 8 * t[300:-300]), atol=0.05)


def test_bandpass_low_tone():
    t = _t(60)
    y = bandpass(np.sin(2 * math.pi * 0.1 * t), FS)
    assert np.max(np.abs(y[1000:-1000])) < 0.1


@pytest.mark.parametrize("f", [0.1, 0.5, 1.0, 4.0, 8.0, 20.0, 32.0, 45.0])
def test_design_matches_direct_biquad_evaluation(f):
    sos = design_bandpass(FS)
    _, h = sps.sosfreqz(sos, worN=[f], fs=FS)
    assert abs(h[0]) == pytest.approx(biquad_gain(sos, f, FS), rel=1e-9)
    if f in (1.0, 32.0):
        # -3 dB at the band edges for a Butterworth design
        assert biquad_gain(sos, f, FS) == pytest.approx(1 / math.sqrt(2), rel=1e-6)
    # forward-backward application squares the magnitude response
    t = _t(40)
    x = np.sin(2 * math.pi * f * t)
    y = bandpass(x, FS)
    if 0.5 <= f <= 32:
        amp = np.sqrt(2) * np.sqrt(np.mean(y[1000:-1000] ** 2))
        assert amp == pytest.approx(biquad_gain(sos, f, FS) ** 2, rel=0.02, abs=2e-3)


def test_zero_phase_matches_scipy():
    rng = np.random.default_rng(4)
    x = rng.normal(size=3000)
    sos = design_bandpass(FS)
    assert np.allclose(zero_phase(sos, x), sps.sosfiltfilt(sos, x), atol=1e-10)
    short = rng.normal(size=9)
    assert zero_phase(sos, short).shape == (9,)


def test_sos_run_interpreted_path():
    rng = np.random.default_rng(5)
    sos = design_bandpass(FS)
    x = rng.normal(size=500)
    zi = sps.sosfilt_zi(sos) * x[0]
    ref, _ = sps.sosfilt(sos, x, zi=zi)
    assert np.allclose(sos_run(sos, zi, x), ref, atol=1e-12)
    assert np.allclose(sos_run.py_func(sos, zi, x), ref, atol=1e-12)


def test_bandpass_rate_error():
    with pytest.raises(SamplingRateError):
        bandpass(np.zeros(100), 64.0)
    with pytest.raises(ValueError):
        design_bandpass(FS, 10.0, 5.0)


@given(st.integers(0, 2 ** 31))
def test_bandpass_linear(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=400), rng.normal(size=400)
    assert np.allclose(bandpass(a + b, FS), bandpass(a, FS) + bandpass(b, FS), atol=1e-9)


# ------------------------------------------------------------------ rms

def test_rms_examples():
    assert rms(np.ones(101), DT) == 1.0
    assert rms(np.ones(101), DT, 0.123, 0.777) == pytest.approx(1.0)
    assert rms(np.zeros(50), DT) == 0.0
    t = _t(10)
    assert rms(3 * np.sin(2 * math.pi * 5 * t), DT, 0.0, 9.0) == pytest.approx(3 / math.sqrt(2), rel=1e-3)


def test_rms_window_errors():
    with pytest.raises(InvalidWindowError):
        rms(np.ones(10), DT, 0.05, 0.05)
    with pytest.raises(InvalidWindowError):
        rms(np.ones(10), DT, 0.0, 1.0)
    with pytest.raises(InvalidWindowError):
        rms(np.array([]), DT)


@pytest.mark.parametrize("case", range(6))
def test_rms_against_fine_quadrature(case):
    funcs = [
        lambda t: np.sin(2 * math.pi * 3 * t),
        lambda t: 0.5 + np.cos(2 * math.pi * 1.3 * t) * np.exp(-t / 4),
        lambda t: np.tanh(t - 2.0),
        lambda t: t ** 2 / 10,
        lambda t: np.sin(2 * math.pi * 12 * t) + 0.3 * np.sin(2 * math.pi * 2 * t),
        lambda t: np.where(t < 3, 0.0, 1.0) * np.sin(t),
    ]
    f = funcs[case]
    t = _t(7)
    t0, tf = 0.37, 6.41
    got = rms(f(t), DT, t0, tf)
    assert got == pytest.approx(fine_rms(f, t0, tf), rel=5e-3)


@given(st.floats(-50, 50), st.integers(0, 2 ** 31))
def test_rms_homogeneous(c, seed):
    x = np.random.default_rng(seed).normal(size=300)
    assert rms(c * x, DT) == pytest.approx(abs(c) * rms(x, DT), rel=1e-12, abs=1e-12)


# ------------------------------------------------------------------ comfort class

@pytest.mark.parametrize("value,label", [
    (0.2, 0), (0.314, 0), (0.315, 1), (0.4, 1), (0.55, 2), (0.63, 2), (0.9, 3), (1.0, 3), (1.3, 4), (1.6, 4),
    (2.0, 5), (2.5, 5), (3.0, 5),
])
def test_comfort_cases(value, label):
    assert comfort_class(value) == COMFORT_LABELS[label]


def test_comfort_monotone_and_errors():
    ramp = np.linspace(0, 3, 3001)
    idx = [COMFORT_LABELS.index(comfort_class(v)) for v in ramp]
    assert idx == sorted(idx) and idx[0] == 0 and idx[-1] == 5
    with pytest.raises(ValueError):
        comfort_class(-0.1)


# ------------------------------------------------------------------ aggregation

def _kpi(v, rms_=0.1):
    return KpiVector(*([v] * 8), comfort_rms=rms_, comfort_class=comfort_class(rms_))


def test_aggregate_examples():
    assert aggregate_by_template([]) == []
    out = aggregate_by_template([(Template.CURVED_LEFT, True, _kpi(0.4)), (Template.CURVED_RIGHT, True, _kpi(0.8)),
                                 (Template.CURVED_LEFT, False, None), (Template.COMPLEX, False, _kpi(0.1))])
    curved, complex_ = out
    assert curved.template == "curved" and curved.count == 3 and curved.successes == 2
    assert curved.means["long_accel"] == pytest.approx(0.6)
    assert curved.success_rate == pytest.approx(2 / 3)
    assert complex_.means is None and complex_.success_rate == 0.0
    assert complex_.axis_values() == [None] * 8


def test_aggregate_permutation_invariant():
    rng = random.Random(3)
    rows = [(rng.choice(list(Template)), rng.random() < 0.8, _kpi(rng.random(), rng.random())) for _ in range(300)]
    base = aggregate_by_template(rows)
    for _ in range(5):
        rng.shuffle(rows)
        assert aggregate_by_template(rows) == base


# ------------------------------------------------------------------ radius analyses

def test_critical_radius_examples():
    r = critical_radius([(rad, 3.5, "Success") for rad in (50, 100, 150)])
    assert r[0].critical is None and r[0].min_success == 50
    sweep = [(rad, 3.5, "OffRoad" if rad <= 80 else "Success") for rad in range(50, 200, 10)]
    r = critical_radius(sweep)[0]
    assert r.critical == 80 and r.min_success == 90 and r.monotone


def test_critical_radius_non_monotone():
    sweep = [(40, 3.0, "OffRoad"), (60, 3.0, "Success"), (80, 3.0, "Timeout"), (100, 3.0, "Success")]
    r = critical_radius(sweep)[0]
    assert not r.monotone and r.boundary == (80, 60) and r.critical == 80


def test_critical_radius_groups_widths():
    sweep = [(10, 4.0, "Success"), (10, 3.0, "OffRoad"), (20, 3.0, "Success")]
    assert [(c.lane_width, c.critical) for c in critical_radius(sweep)] == [(3.0, 10.0), (4.0, None)]


def test_spearman_examples():
    assert spearman([1, 2, 3, 4, 5], [2, 4, 8, 16, 32]) == pytest.approx(1.0)
    assert spearman([1, 2, 3, 4, 5], [5, 4, 3, 2, 1]) == pytest.approx(-1.0)
    assert spearman([1, 2, 3, 4, 5], [7, 7, 7, 7, 7]) == 0.0
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)


def test_kpi_radius_trend():
    pts = [(r, _kpi(r / 1000)) for r in (50, 100, 150, 200, 250)]
    assert kpi_radius_trend(pts) == pytest.approx(1.0)
    assert kpi_radius_trend([(r, _kpi(0.5)) for r in range(5)]) == 0.0
    with pytest.raises(InsufficientDataError):
        kpi_radius_trend(pts[:4])
