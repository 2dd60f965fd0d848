import cmath
import math

import numpy as np
import pytest

from sflab.fiber_models import FiberModel, density_model_coords
from sflab.semiflat import (FiberFlatData, HermitianMatrix2, derivative_scale,
                            fiber_flat_data, gamma, hermitian_entries,
                            kahler_residual, metric_at, ricci_residual,
                            ricci_scale)
from sflab.sl2z import KodairaType

MODELS = [
    FiberModel(KodairaType("I", 1)),
    FiberModel(KodairaType("I", 2), epsilon=0.5, k_coeffs=(1.0 + 0.5j,)),
    FiberModel(KodairaType("Istar", 1)),
    FiberModel(KodairaType("I", 0), tau0=0.2 + 1.1j, tau_slope=0.3),
    FiberModel(KodairaType("II"), j_multiplicity=4),
    FiberModel(KodairaType("IIIstar"), j_multiplicity=3),
]


def sample_point(model, rng):
    r = 10 ** rng.uniform(-3, -0.3)
    th = rng.uniform(-1.4, 1.4) if model.uses_u_coordinate \
        else rng.uniform(-3.0, 3.0)
    z = r * cmath.exp(1j * th)
    w = complex(rng.normal(), rng.normal())
    return z, w


def test_positivity_enforced():
    with pytest.raises(ValueError):
        HermitianMatrix2(h_zz=1.0, h_ww=1.0, h_zw=2.0 + 0j)
    with pytest.raises(ValueError):
        HermitianMatrix2(h_zz=-1.0, h_ww=1.0, h_zw=0.0j)


def test_volume_identity_exact():
    rng = np.random.default_rng(3)
    for model in MODELS:
        for _ in range(200):
            z, w = sample_point(model, rng)
            pt = metric_at(model, z, w)
            g, _ = density_model_coords(model, z)
            half = abs(g) ** 2 / 2
            assert abs(pt.A_coeff * pt.B_coeff - half) <= 1e-14 * half


def test_matrix_entries_from_coefficients():
    rng = np.random.default_rng(4)
    for model in MODELS:
        z, w = sample_point(model, rng)
        pt = metric_at(model, z, w)
        A, B, G = pt.A_coeff, pt.B_coeff, pt.gamma
        assert abs(pt.matrix.h_zz - (A + B * abs(G) ** 2)) < 1e-13 * pt.matrix.h_zz
        assert pt.matrix.h_ww == B
        assert abs(pt.matrix.h_zw - (-B * G.conjugate())) < 1e-13 * (1 + abs(B * G))


def test_ib_h_ww_closed_form():
    # B = eps / (2 pairing) = pi / |log z| for I_1 with eps = 1
    pt = metric_at(FiberModel(KodairaType("I", 1)), 0.1, 0.0)
    assert abs(pt.matrix.h_ww - math.pi / math.log(10)) < 1e-14


def test_ib_gamma_closed_form():
    # for z = t in (0,1), w = iy: Gamma = -i y / (t |log t|)
    model = FiberModel(KodairaType("I", 1))
    t, y = 0.2, 0.7
    G = gamma(model, t, 1j * y)
    assert abs(G - (-1j * y / (t * abs(math.log(t))))) < 1e-14


def test_single_valuedness():
    rng = np.random.default_rng(5)
    for model in MODELS:
        z, w = sample_point(model, rng)
        H0 = np.array(hermitian_entries(model, z, w, winding=0))
        H1 = np.array(hermitian_entries(model, z, w, winding=1))
        assert np.max(np.abs(H0 - H1)) < 1e-12 * np.max(np.abs(H0))


def test_fiber_area_is_epsilon():
    for model in MODELS:
        flat = fiber_flat_data(model, 0.2)
        assert abs(flat.area - model.epsilon) <= 1e-14 * model.epsilon


def test_lattice_reduction_against_enumeration():
    model = FiberModel(KodairaType("I", 1))
    for z in (0.3, 0.05, 1e-3):
        flat = fiber_flat_data(model, z)
        # brute-force shortest nonzero vector over a window of combinations
        best = min(abs(a * flat.v1 + b * flat.v2)
                   for a in range(-8, 9) for b in range(-8, 9)
                   if (a, b) != (0, 0))
        assert abs(abs(flat.shortest_vector) - best) < 1e-12 * best
        assert isinstance(flat, FiberFlatData)


def test_reduced_basis_spans_same_area():
    model = FiberModel(KodairaType("I", 2), epsilon=0.7)
    flat = fiber_flat_data(model, 0.11)
    area = abs((flat.v1.conjugate() * flat.v2).imag)
    assert abs(area - flat.area) < 1e-13 * flat.area


def test_kahler_residual_second_order():
    rng = np.random.default_rng(6)
    for model in MODELS[:3]:
        z, w = sample_point(model, rng)
        step = 1e-3 * abs(z)
        r1 = kahler_residual(model, z, w, step)
        r2 = kahler_residual(model, z, w, 2 * step)
        scale = derivative_scale(model, z, w, step)
        assert r1 < 1e-5 * scale
        if r1 > 1e-10 * scale:  # above the round-off floor
            assert 2.0 < r2 / r1 < 8.0


def test_ricci_residual_round_off_only():
    rng = np.random.default_rng(8)
    for model in MODELS:
        z, _ = sample_point(model, rng)
        step = 1e-4 * abs(z)
        res = ricci_residual(model, z, step)
        assert res <= 1e-6 * max(ricci_scale(model, z, step), 1e-8)
