import math

import numpy as np
import pytest

from sflab.curvature import (asymptotic_target, chern_curvature,
                             curvature_decay_scan, curvature_scale,
                             dbar_entries, hermitian_matrix, theta_norm_sq,
                             wp_residual)
from sflab.fiber_models import FiberModel
from sflab.sl2z import KodairaType


def fd_dbar(model, z, w, hz, hw):
    """Independent central-difference d/dzbar H and d/dwbar H."""
    def H(a, b):
        return hermitian_matrix(model, a, b)

    dz = ((H(z + hz, w) - H(z - hz, w)) / (2 * hz)
          + 1j * (H(z + 1j * hz, w) - H(z - 1j * hz, w)) / (2 * hz)) / 2
    dw = ((H(z, w + hw) - H(z, w - hw)) / (2 * hw)
          + 1j * (H(z, w + 1j * hw) - H(z, w - 1j * hw)) / (2 * hw)) / 2
    return dz, dw


@pytest.mark.parametrize("model", [
    FiberModel(KodairaType("I", 1)),
    FiberModel(KodairaType("Istar", 1)),
    FiberModel(KodairaType("II"), j_multiplicity=4),
], ids=["I_1", "I_1*", "II"])
def test_closed_form_dbar_matches_fd(model):
    z, w = 0.21 + 0.08j, 0.4 - 0.2j
    dz, dw = dbar_entries(model, z, w)
    fz, fw = fd_dbar(model, z, w, 1e-6 * abs(z), 1e-6)
    assert np.max(np.abs(dz - fz)) < 1e-6 * max(1.0, np.max(np.abs(dz)))
    assert np.max(np.abs(dw - fw)) < 1e-6 * max(1.0, np.max(np.abs(dw)))


def test_modes_agree_three_digits():
    model = FiberModel(KodairaType("I", 1))
    for r in (1e-4, 1e-3, 1e-2, 1e-1):
        a = theta_norm_sq(model, complex(r), mode="closed")
        b = theta_norm_sq(model, complex(r), mode="fd")
        assert abs(a - b) < 5e-4 * abs(a)


def test_fd_mode_domain_guard():
    model = FiberModel(KodairaType("I", 1))
    with pytest.raises(ValueError):
        chern_curvature(model, 1e-5, 0.0, mode="fd")
    with pytest.raises(ValueError):
        chern_curvature(model, 0.1, 0.0, mode="bogus")


def test_ib_constant_deep():
    model = FiberModel(KodairaType("I", 2), epsilon=0.5, k_coeffs=(2.0,))
    z = 1e-8
    ratio = theta_norm_sq(model, z) / asymptotic_target(model, z)
    assert abs(ratio - 1) < 1e-6


def test_asymptotic_target_formulas():
    z = 1e-4
    L = abs(math.log(z))
    m = FiberModel(KodairaType("I", 3), epsilon=0.5, k_coeffs=(2.0,))
    assert abs(asymptotic_target(m, z)
               - 6 * math.pi ** 2 * 0.25 / (9 * 16) / L ** 6) < 1e-20
    ms = FiberModel(KodairaType("Istar", 2))
    assert abs(asymptotic_target(ms, z)
               - math.pi ** 2 / (2 * 4) * z ** 4 / L ** 4) < 1e-25
    assert asymptotic_target(FiberModel(KodairaType("II")), z) == 0.0


def test_isotrivial_models_flat():
    for model in (FiberModel(KodairaType("II")),
                  FiberModel(KodairaType("IV")),
                  FiberModel(KodairaType("I", 0), tau0=0.4 + 1.0j)):
        z = 0.03 + 0.02j
        assert theta_norm_sq(model, z) < 1e-12 * curvature_scale(model, z)


def test_decay_scan_fields():
    model = FiberModel(KodairaType("I", 1))
    radii = [1e-6, 1e-5]
    samples = curvature_decay_scan(model, radii)
    assert len(samples) == 2
    for r, s in zip(radii, samples):
        assert s.z == complex(r)
        assert s.target > 0
        assert abs(s.ratio - s.theta_norm_sq / s.target) < 1e-15


def test_wp_residual_constant_tau_exact():
    model = FiberModel(KodairaType("I", 0), tau0=1j)
    assert wp_residual(model, 0.1, 1e-3) == 0.0


def test_wp_residual_requires_i0():
    with pytest.raises(ValueError):
        wp_residual(FiberModel(KodairaType("I", 1)), 0.1, 1e-3)


def test_wp_residual_linear_tau():
    model = FiberModel(KodairaType("I", 0), tau0=1j, tau_slope=0.5)
    assert wp_residual(model, 0.0, 1e-3) < 1e-6
