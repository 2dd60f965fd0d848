"""Pointwise assembly of the semi-flat Kähler metric and structure checks.

The metric on the punctured-disk model is

    omega = i*A dz^dzbar + i*B (dw - Gamma dz)^(dwbar - Gammabar dzbar)

with A = |g(z)|^2 * p / epsilon, B = epsilon / (2*p), p = Im(conj(tau1)*tau2)
and Gamma = (Im(conj(tau1)*w)*tau2' - Im(conj(tau2)*w)*tau1') / p.  For the
starred I families the coordinate z below is the half-disk coordinate u.

Finite-difference checks use Wirtinger derivatives with central differences,
default relative step 1e-4 * |z| near the puncture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

from .fiber_models import FiberModel, density_model_coords, generators


@dataclass(frozen=True)
class HermitianMatrix2:
    """Semi-flat metric coefficients; h_zw stores -B*conj(Gamma) and
    h_wz is its conjugate."""

    h_zz: float
    h_ww: float
    h_zw: complex

    def __post_init__(self):
        if not (self.h_zz > 0 and self.h_ww > 0):
            raise ValueError("diagonal coefficients must be positive")
        if self.h_zz * self.h_ww - abs(self.h_zw) ** 2 <= 0:
            raise ValueError("metric not positive definite")

    @property
    def det(self) -> float:
        return self.h_zz * self.h_ww - abs(self.h_zw) ** 2


@dataclass(frozen=True)
class MetricPoint:
    z: complex
    w: complex
    matrix: HermitianMatrix2
    A_coeff: float
    B_coeff: float
    gamma: complex


def gamma(model: FiberModel, z: complex, w: complex, winding: int = 0) -> complex:
    """Horizontal-connection coefficient Gamma(z, w)."""
    s = generators(model, z, winding)
    num = ((s.tau1.conjugate() * w).imag * s.dtau2
           - (s.tau2.conjugate() * w).imag * s.dtau1)
    return num / s.pairing


def metric_at(model: FiberModel, z: complex, w: complex,
              winding: int = 0) -> MetricPoint:
    s = generators(model, z, winding)
    g, _ = density_model_coords(model, z)
    p = s.pairing
    A = abs(g) ** 2 * p / model.epsilon
    B = model.epsilon / (2 * p)
    num = ((s.tau1.conjugate() * w).imag * s.dtau2
           - (s.tau2.conjugate() * w).imag * s.dtau1)
    gam = num / p
    matrix = HermitianMatrix2(
        h_zz=A + B * abs(gam) ** 2,
        h_ww=B,
        h_zw=-B * gam.conjugate(),
    )
    return MetricPoint(z, w, matrix, A, B, gam)


def hermitian_entries(model: FiberModel, z: complex, w: complex,
                      winding: int = 0):
    """2x2 array H[j][k] = h_{j kbar} in the (z, w) frame.

    Note H[0][1] (the coefficient of i dz^dwbar) is -B*Gamma, the conjugate
    of the stored h_zw field.
    """
    pt = metric_at(model, z, w, winding)
    off = -pt.B_coeff * pt.gamma
    return ((pt.matrix.h_zz + 0j, off),
            (off.conjugate(), pt.matrix.h_ww + 0j))


# ---------------------------------------------------------------------------
# Fiber lattice geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiberFlatData:
    v1: complex
    v2: complex
    area: float
    shortest_vector: float
    diameter_proxy: float


def _lagrange_reduce(v1: complex, v2: complex) -> Tuple[complex, complex]:
    """Lagrange-Gauss reduction of the rank-2 lattice Z v1 + Z v2."""
    if abs(v1) > abs(v2):
        v1, v2 = v2, v1
    for _ in range(200):
        mu = round((v2 * v1.conjugate()).real / abs(v1) ** 2)
        v2 = v2 - mu * v1
        if abs(v2) >= abs(v1):
            return v1, v2
        v1, v2 = v2, v1
    raise RuntimeError("lattice reduction did not terminate")


def fiber_flat_data(model: FiberModel, z: complex,
                    winding: int = 0) -> FiberFlatData:
    """Flat data of the fiber torus C / sqrt(2B)(Z tau1 + Z tau2)."""
    s = generators(model, z, winding)
    B = model.epsilon / (2 * s.pairing)
    scale = math.sqrt(2 * B)
    v1, v2 = _lagrange_reduce(scale * s.tau1, scale * s.tau2)
    area = 2 * B * s.pairing
    return FiberFlatData(
        v1=v1, v2=v2, area=area,
        shortest_vector=abs(v1) if abs(v1) <= abs(v2) else abs(v2),
        diameter_proxy=0.5 * (abs(v1) + abs(v2)),
    )


# ---------------------------------------------------------------------------
# Finite-difference structure checks
# ---------------------------------------------------------------------------

def _wirtinger(fun: Callable[[complex], complex], a: complex,
               step: float) -> complex:
    """del/del a of fun by central differences, holding conj(a) notation
    implicit (fun is evaluated on the real 4-dim chart)."""
    dx = (fun(a + step) - fun(a - step)) / (2 * step)
    dy = (fun(a + 1j * step) - fun(a - 1j * step)) / (2 * step)
    return 0.5 * (dx - 1j * dy)


def _entry_funs(model: FiberModel, z: complex, w: complex):
    def entry(j: int, k: int):
        def at(zz: complex, ww: complex) -> complex:
            return hermitian_entries(model, zz, ww)[j][k]
        return at
    return entry


def kahler_residual(model: FiberModel, z: complex, w: complex,
                    step: float) -> float:
    """Max over index pairs of |d_l h_{j kbar} - d_j h_{l kbar}| plus the
    conjugate relations, derivatives by central differences."""
    entry = _entry_funs(model, z, w)
    coords = (z, w)

    def d_holo(l: int, j: int, k: int) -> complex:
        fun = entry(j, k)
        if l == 0:
            return _wirtinger(lambda a: fun(a, w), z, step)
        return _wirtinger(lambda a: fun(z, a), w, step)

    def d_anti(l: int, j: int, k: int) -> complex:
        fun = entry(j, k)
        if l == 0:
            return _wirtinger(lambda a: fun(a, w).conjugate(), z, step).conjugate()
        return _wirtinger(lambda a: fun(z, a).conjugate(), w, step).conjugate()

    res = 0.0
    for k in range(2):
        for l in range(2):
            for j in range(2):
                res = max(res, abs(d_holo(l, j, k) - d_holo(j, l, k)))
                # conjugate relation: d_lbar h_{k jbar} symmetric in (l, j)
                res = max(res, abs(d_anti(l, k, j) - d_anti(j, k, l)))
    _ = coords
    return res


def derivative_scale(model: FiberModel, z: complex, w: complex,
                     step: float) -> float:
    """Largest first-derivative magnitude of the metric entries; the natural
    scale against which kahler_residual should be measured."""
    entry = _entry_funs(model, z, w)
    scale = 0.0
    for j in range(2):
        for k in range(2):
            fun = entry(j, k)
            scale = max(scale,
                        abs(_wirtinger(lambda a: fun(a, w), z, step)),
                        abs(_wirtinger(lambda a: fun(z, a), w, step)))
    return max(scale, 1e-300)


def _log_det(model: FiberModel, z: complex) -> float:
    g, _ = density_model_coords(model, z)
    return math.log(abs(g) ** 2 / 2)


def ricci_residual(model: FiberModel, z: complex, step: float) -> float:
    """|d^2/(dz dzbar) of log det h|; log det h = log(|g|^2/2) is harmonic
    away from the puncture, so this is round-off plus O(step^2) truncation."""
    f0 = _log_det(model, z)
    fxx = (_log_det(model, z + step) - 2 * f0 + _log_det(model, z - step))
    fyy = (_log_det(model, z + 1j * step) - 2 * f0 + _log_det(model, z - 1j * step))
    return abs(fxx + fyy) / (4 * step * step)


def ricci_scale(model: FiberModel, z: complex, step: float) -> float:
    """Size of the individual second-difference terms whose cancellation
    ricci_residual measures.  The mixed difference is included because the
    axis-aligned ones both vanish on the diagonals for radial log det h."""
    f0 = _log_det(model, z)
    fxx = (_log_det(model, z + step) - 2 * f0 + _log_det(model, z - step))
    fyy = (_log_det(model, z + 1j * step) - 2 * f0 + _log_det(model, z - 1j * step))
    d = step * (1 + 1j) / 2
    fxy = (_log_det(model, z + d) - _log_det(model, z + d.conjugate())
           - _log_det(model, z - d.conjugate()) + _log_det(model, z - d))
    return max(abs(fxx), abs(fyy), abs(fxy), 1e-300) / (4 * step * step)
