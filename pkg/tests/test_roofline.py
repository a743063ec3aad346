import json

import pytest
from hypothesis import given, settings, strategies as st

from stencilcgra.reference import BadRadius
from stencilcgra.roofline import (MachineModel, ai_1d, ai_2d, compute_bound,
                                  flops_per_point, worker_bounds)

M = MachineModel()


def test_arithmetic_intensity_values():
    assert ai_1d(194400, 8) == pytest.approx(2.06, abs=0.01)
    assert ai_1d(1000, 0) == 1 / 16 == 0.0625
    assert ai_1d(10, 1, 1) == pytest.approx(5 * 8 / 20)
    assert ai_2d(960, 449, 12, 12) == pytest.approx(5.59, abs=0.01)
    assert ai_2d(960, 449, 12, 0) == pytest.approx(ai_1d(960, 12) * 1)


def test_flops_per_point():
    assert flops_per_point(8) == 33
    assert flops_per_point(12, 12) == 97


def test_full_size_1d_bounds():
    rep = worker_bounds(M, n=194400, rx=8)
    assert rep.recommended_w == 6
    assert rep.compute_bound(6) == pytest.approx(237.6, abs=1)
    assert rep.bw_bound_gflops == pytest.approx(206, abs=1)
    assert rep.peak_gflops <= rep.roof_gflops


def test_full_size_2d_bounds():
    rep = worker_bounds(M, nx=960, ny=449, rx=12, ry=12)
    assert rep.w_max == 5
    assert rep.compute_bound(5) == pytest.approx(582, abs=1)
    assert rep.peak_gflops == pytest.approx(559, abs=1)
    assert rep.roof_gflops == pytest.approx(614.4, abs=1)


def test_unbounded_bandwidth_hits_compute_ceiling():
    rep = worker_bounds(MachineModel(bw_gbs=1e12), n=194400, rx=8)
    assert rep.recommended_w == rep.w_max
    assert rep.peak_gflops == rep.compute_bound(rep.w_max)


def test_radius_zero_worker_count():
    rep = worker_bounds(M, n=1000, rx=0)
    assert rep.w_max == 256 and rep.recommended_w == 6


@pytest.mark.parametrize("args", [(10, 5), (10, -1)])
def test_bad_radius(args):
    with pytest.raises(BadRadius):
        ai_1d(*args)


def test_machine_validation():
    with pytest.raises(ValueError):
        MachineModel(bw_gbs=0)


def test_report_serialization():
    rep = worker_bounds(M, nx=960, ny=449, rx=12, ry=12)
    d = json.loads(rep.to_json())
    assert d["w_max"] == 5 and set(d["compute_bound_gflops"]) == {"1", "2", "3", "4", "5"}
    lines = rep.to_csv().splitlines()
    assert lines[0] == "w,compute_bound_gflops,bw_bound_gflops" and len(lines) == 6


@settings(max_examples=200)
@given(st.integers(0, 20), st.integers(1, 10_000), st.floats(0.1, 5.0),
       st.integers(1, 1024), st.floats(1.0, 1e4))
def test_invariants_1d(rx, extra, freq, pes, bw):
    m = MachineModel(freq, pes, bw)
    if pes < 2 * rx + 1:
        with pytest.raises(ValueError):
            worker_bounds(m, n=2 * rx + extra, rx=rx)
        return
    rep = worker_bounds(m, n=2 * rx + extra, rx=rx)
    assert rep.peak_gflops <= rep.roof_gflops + 1e-9
    vals = [rep.compute_bound(w) for w in range(1, rep.w_max + 1)]
    assert vals == sorted(vals)
    assert rep.recommended_w <= rep.w_max


@settings(max_examples=100)
@given(st.integers(1, 8), st.floats(1.5, 4.0))
def test_joint_scaling(w, k):
    a = compute_bound(w, 16, M)
    b = compute_bound(w, 16, MachineModel(M.freq_ghz * k, M.n_mac_pes, M.bw_gbs * k))
    assert b == pytest.approx(a * k)
    ra = worker_bounds(M, n=194400, rx=8)
    rb = worker_bounds(MachineModel(M.freq_ghz * k, M.n_mac_pes, M.bw_gbs * k), n=194400, rx=8)
    assert rb.bw_bound_gflops == pytest.approx(ra.bw_bound_gflops * k)
    assert rb.recommended_w == ra.recommended_w


@settings(max_examples=100)
@given(st.integers(0, 10), st.integers(1, 500), st.integers(1, 50))
def test_ai_2d_with_zero_ry_matches_1d(rx, extra, ny):
    nx = 2 * rx + extra
    assert ai_2d(nx, ny, rx, 0) == pytest.approx(ai_1d(nx, rx))
