"""Chern curvature of the semi-flat metric and asymptotic-constant checks.

Theta = del(h^-1 delbar h).  The antiholomorphic derivative delbar h is
available in closed form from the period jets; the outer holomorphic
derivative is taken by central differences in a logarithmic parametrization
of z (robust down to |z| = 1e-12).  A fully nested finite-difference mode is
kept as a cross-check for moderate |z| >= 1e-4.

The pointwise norm is evaluated at w = 0, where the metric is diagonal:

    |Theta|^2 = sum_{l,m} (1/h_l)(1/h_m) sum_{j,k} (h_k/h_j) |A_{lm}[k,j]|^2

with A_{lm} the endomorphism coefficient of dz^l wedge dzbar^m.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .fiber_models import FiberModel, density_model_coords, period_jet
from .semiflat import hermitian_entries, metric_at


def _coeffs(model: FiberModel, z: complex, w: complex):
    """Closed-form metric data at (z, w): A, B, Gamma and the derivatives
    needed for delbar h."""
    jet = period_jet(model, z)
    g, dg = density_model_coords(model, z)
    p = jet.pairing
    eps = model.epsilon

    p_z = (jet.tau1.conjugate() * jet.dtau2
           - jet.tau2.conjugate() * jet.dtau1) / 2j
    p_zbar = p_z.conjugate()

    num = ((jet.tau1.conjugate() * w).imag * jet.dtau2
           - (jet.tau2.conjugate() * w).imag * jet.dtau1)
    gam = num / p
    gam_w = (jet.tau1.conjugate() * jet.dtau2
             - jet.tau2.conjugate() * jet.dtau1) / (2j * p)
    gam_wbar = -(jet.tau1 * jet.dtau2 - jet.tau2 * jet.dtau1) / (2j * p)
    num_z = ((jet.tau1.conjugate() * w).imag * jet.ddtau2
             - (jet.tau2.conjugate() * w).imag * jet.ddtau1)
    num_zbar = w * (jet.dtau1.conjugate() * jet.dtau2
                    - jet.dtau2.conjugate() * jet.dtau1) / 2j
    gam_z = num_z / p - gam * p_z / p
    gam_zbar = num_zbar / p - gam * p_zbar / p

    A = abs(g) ** 2 * p / eps
    B = eps / (2 * p)
    A_z = (dg * g.conjugate() * p + abs(g) ** 2 * p_z) / eps
    A_zbar = A_z.conjugate()
    B_z = -eps * p_z / (2 * p * p)
    B_zbar = B_z.conjugate()
    return dict(A=A, B=B, gam=gam, gam_w=gam_w, gam_wbar=gam_wbar,
                gam_z=gam_z, gam_zbar=gam_zbar, A_zbar=A_zbar,
                B_zbar=B_zbar, A_z=A_z, B_z=B_z)


def hermitian_matrix(model: FiberModel, z: complex, w: complex) -> np.ndarray:
    return np.array(hermitian_entries(model, z, w), dtype=complex)


def dbar_entries(model: FiberModel, z: complex, w: complex):
    """Closed-form (d/dzbar H, d/dwbar H) of the entry matrix
    H[j][k] = h_{j kbar}."""
    c = _coeffs(model, z, w)
    B, gam = c["B"], c["gam"]
    gz_c = c["gam_z"].conjugate()
    gw_c = c["gam_w"].conjugate()
    dz = np.array([
        [c["A_zbar"] + c["B_zbar"] * abs(gam) ** 2
         + B * (c["gam_zbar"] * gam.conjugate() + gam * gz_c),
         -c["B_zbar"] * gam - B * c["gam_zbar"]],
        [-c["B_zbar"] * gam.conjugate() - B * gz_c,
         c["B_zbar"]],
    ], dtype=complex)
    dw = np.array([
        [B * (c["gam_wbar"] * gam.conjugate() + gam * gw_c),
         -B * c["gam_wbar"]],
        [-B * gw_c, 0.0],
    ], dtype=complex)
    return dz, dw


def _connection_closed(model: FiberModel, z: complex, w: complex):
    """(F_z, F_w) with F_m = H^-1 * d/dmbar H, all factors closed-form."""
    H = hermitian_matrix(model, z, w)
    Hinv = np.linalg.inv(H)
    dz, dw = dbar_entries(model, z, w)
    return Hinv @ dz, Hinv @ dw


def _connection_fd(model: FiberModel, z: complex, w: complex, step_z: float,
                   step_w: float):
    """Same as _connection_closed but with delbar H by central differences."""
    def H(a, b):
        return hermitian_matrix(model, a, b)

    Hinv = np.linalg.inv(H(z, w))
    dz = (((H(z + step_z, w) - H(z - step_z, w)) / (2 * step_z)
           + 1j * (H(z + 1j * step_z, w) - H(z - 1j * step_z, w))
           / (2 * step_z)) / 2)
    dw = (((H(z, w + step_w) - H(z, w - step_w)) / (2 * step_w)
           + 1j * (H(z, w + 1j * step_w) - H(z, w - 1j * step_w))
           / (2 * step_w)) / 2)
    return Hinv @ dz, Hinv @ dw


def chern_curvature(model: FiberModel, z: complex, w: complex,
                    mode: str = "closed") -> List[List[np.ndarray]]:
    """Theta[l][m]: the 2x2 endomorphism coefficient of dz^l wedge dzbar^m,
    indices 0 = z, 1 = w.  mode "closed" uses the registered closed-form
    delbar h; mode "fd" nests finite differences and needs |z| >= 1e-4."""
    if mode not in ("closed", "fd"):
        raise ValueError("mode must be 'closed' or 'fd'")
    if mode == "fd" and abs(z) < 1e-4:
        raise ValueError("nested-FD mode needs |z| >= 1e-4")

    hs = 1e-6  # step in the logarithmic coordinate z = z0 * exp(s)
    hw = 1e-5 * max(1.0, abs(w))

    if mode == "closed":
        def conn(a, b):
            return _connection_closed(model, a, b)
    else:
        def conn(a, b):
            return _connection_fd(model, a, b, 1e-5 * abs(a), hw)

    def conn_at_s(s: complex, b: complex):
        return conn(z * cmath.exp(s), b)

    # d/dz = (1/z) d/ds in the logarithmic parametrization
    fz_p, fw_p = conn_at_s(hs, w)
    fz_m, fw_m = conn_at_s(-hs, w)
    fz_ip, fw_ip = conn_at_s(1j * hs, w)
    fz_im, fw_im = conn_at_s(-1j * hs, w)
    dz_fz = ((fz_p - fz_m) / (2 * hs) - 1j * (fz_ip - fz_im) / (2 * hs)) / (2 * z)
    dz_fw = ((fw_p - fw_m) / (2 * hs) - 1j * (fw_ip - fw_im) / (2 * hs)) / (2 * z)

    fz_wp, fw_wp = conn(z, w + hw)
    fz_wm, fw_wm = conn(z, w - hw)
    fz_wip, fw_wip = conn(z, w + 1j * hw)
    fz_wim, fw_wim = conn(z, w - 1j * hw)
    dw_fz = ((fz_wp - fz_wm) / (2 * hw) - 1j * (fz_wip - fz_wim) / (2 * hw)) / 2
    dw_fw = ((fw_wp - fw_wm) / (2 * hw) - 1j * (fw_wip - fw_wim) / (2 * hw)) / 2

    return [[dz_fz, dz_fw], [dw_fz, dw_fw]]


def theta_norm_sq(model: FiberModel, z: complex, mode: str = "closed") -> float:
    """|Theta|^2 at (z, 0), where the metric is diagonal."""
    theta = chern_curvature(model, z, 0.0, mode=mode)
    pt = metric_at(model, z, 0.0)
    diag = (pt.matrix.h_zz, pt.matrix.h_ww)
    total = 0.0
    for l in range(2):
        for m in range(2):
            M = theta[l][m]
            inner = 0.0
            for j in range(2):
                for k in range(2):
                    inner += (diag[k] / diag[j]) * abs(M[k, j]) ** 2
            total += inner / (diag[l] * diag[m])
    return total


def curvature_scale(model: FiberModel, z: complex) -> float:
    """Reference magnitude for flatness checks: the same norm applied to the
    connection matrices divided by |z| (a first-derivative scale)."""
    fz, fw = _connection_closed(model, z, 0.0)
    pt = metric_at(model, z, 0.0)
    diag = (pt.matrix.h_zz, pt.matrix.h_ww)
    total = 0.0
    for m, M in enumerate((fz, fw)):
        inner = 0.0
        for j in range(2):
            for k in range(2):
                inner += (diag[k] / diag[j]) * abs(M[k, j]) ** 2
        total += inner / diag[m]
    return max(total / (abs(z) ** 2 * diag[0]), 1e-300)


def asymptotic_target(model: FiberModel, z: complex) -> float:
    """Closed-form |Theta|^2 asymptote: the I_b and I_b* constants; 0 for the
    exactly flat isotrivial models; 0 (no registered target) otherwise."""
    tag = model.kodaira_type.tag
    eps, k0 = model.epsilon, abs(model.k0) * math.sqrt(model.alpha)
    if tag == "I" and model.b >= 1:
        L = abs(math.log(abs(z)))
        return 6 * math.pi ** 2 * eps ** 2 / (model.b ** 2 * k0 ** 4) / L ** 6
    if tag == "Istar" and model.b >= 1:
        L = abs(math.log(abs(z)))
        return (math.pi ** 2 * eps ** 2 / (2 * model.b ** 2 * k0 ** 4)
                * abs(z) ** 4 / L ** 4)
    return 0.0


@dataclass(frozen=True)
class CurvatureSample:
    z: complex
    theta_norm_sq: float
    target: float
    ratio: float


def curvature_decay_scan(model: FiberModel,
                         radii: Sequence[float]) -> List[CurvatureSample]:
    out = []
    for r in radii:
        tsq = theta_norm_sq(model, complex(r))
        target = asymptotic_target(model, complex(r))
        ratio = tsq / target if target > 0 else 0.0
        out.append(CurvatureSample(complex(r), tsq, target, ratio))
    return out


def wp_residual(model: FiberModel, z: complex, step: float) -> float:
    """Check that -dd^c log Im tau equals |tau'|^2 / (4 Im(tau)^2)."""
    if model.kodaira_type.tag != "I" or model.b != 0:
        raise ValueError("wp_residual needs an I_0 model")
    if model.tau_fn is None and model.tau_slope == 0:
        return 0.0

    def f(a: complex) -> float:
        return math.log(model.tau_at(a).imag)

    lap = (f(z + step) + f(z - step) + f(z + 1j * step) + f(z - 1j * step)
           - 4 * f(z)) / step ** 2
    lhs = -lap / 4
    tp = model.dtau_at(z)
    rhs = abs(tp) ** 2 / (4 * model.tau_at(z).imag ** 2)
    return abs(lhs - rhs)
