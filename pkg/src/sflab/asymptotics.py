"""Asymptotic geometry of the base and total space.

The base metric is lambda(z) |dz|^2 with lambda = |g|^2 * pairing / epsilon.
For constant-k models with constant (or isotrivial) tau this factor is
radial, lambda(t) = K * t^(-q) * l^s * c(l) with l = log(1/t) and c -> 1,
and every quadrature below is parametrized by the log-depth l so that scans
to total-space distance 1e6 never form t itself (t can be far below float
underflow for the I_b family).

Starred families live on the half-disk; their circle fibers over the base
have angular extent pi instead of 2*pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from .fiber_models import FINITE_EXPONENT, FiberModel
from .semiflat import metric_at

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    intercept: float
    r_squared: float
    samples: Tuple[Tuple[float, float], ...]


def fit_powerlaw(xs: Sequence[float], ys: Sequence[float]) -> GrowthFit:
    """OLS fit of log y against log x."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return GrowthFit(float(slope), float(intercept), r2,
                     tuple(zip(map(float, xs), map(float, ys))))


class BaseMetric:
    """Radial conformal base metric lambda(t)|dz|^2 of a constant-k model."""

    def __init__(self, model: FiberModel):
        if len(model.k_coeffs) > 1:
            # polynomial k is handled through the correction factor below,
            # which needs |k| radial; only constant k is supported here
            raise ValueError("BaseMetric needs constant k")
        tag = model.kodaira_type.tag
        if tag in ("I", "Istar") and model.b == 0:
            if model.tau_fn is not None or model.tau_slope != 0:
                raise ValueError("BaseMetric needs constant tau for I_0/I_0*")
        self.model = model
        complete = model.pole_flag == "minus-D"
        alpha_k = model.alpha * abs(model.k0) ** 2
        eps = model.epsilon

        # lambda(t) = K * t^(-q) * l^s * (1 - t^(2*pex)) with l = log(1/t)
        self.pairing_exp = 0.0  # pex; 0 means no (1 - t^(2 pex)) factor
        if tag == "I" and model.b >= 1:
            self.K = alpha_k * model.b / (2 * math.pi * eps)
            self.q = 2.0 if complete else 0.0
            self.s = 1.0
        elif tag == "Istar" and model.b >= 1:
            self.K = alpha_k * model.b / (math.pi * eps)
            self.q = 4.0 if complete else 0.0
            self.s = 1.0
        elif tag == "I":
            self.K = alpha_k * model.tau0.imag / eps
            self.q = 2.0 if complete else 0.0
            self.s = 0.0
        elif tag == "Istar":
            self.K = alpha_k * model.tau0.imag / eps
            self.q = 4.0 if complete else 0.0
            self.s = 0.0
        else:
            e = FINITE_EXPONENT[tag]
            if tag in ("II", "IVstar", "IIstar", "IV"):
                pair_coeff = math.sqrt(3) / 2
                if not model.isotrivial:
                    self.pairing_exp = model.j_multiplicity / 3.0
            else:
                pair_coeff = 1.0
                if not model.isotrivial:
                    self.pairing_exp = model.j_multiplicity / 2.0
            self.K = alpha_k * pair_coeff / eps
            self.q = (4.0 if complete else 2.0) - 2 * e
            self.s = 0.0

        self.angle = math.pi if tag == "Istar" else 2 * math.pi
        self.complete = complete
        self.logK = math.log(self.K)

    # -- conformal factor -------------------------------------------------
    def loglam(self, ell: float) -> float:
        """log lambda at t = exp(-ell)."""
        val = self.logK + self.q * ell
        if self.s:
            val += self.s * math.log(ell)
        if self.pairing_exp:
            val += math.log1p(-math.exp(-2 * self.pairing_exp * ell))
        return val

    def lam(self, t: float) -> float:
        return math.exp(self.loglam(-math.log(t)))

    # -- distances --------------------------------------------------------
    def distance_l(self, ell0: float, ell1: float) -> float:
        """Distance between |z| = exp(-ell0) and exp(-ell1), ell0 < ell1."""
        if ell1 <= ell0:
            return 0.0
        val, err = quad(lambda l: math.exp(0.5 * self.loglam(l) - l),
                        ell0, ell1, epsrel=1e-10, limit=400)
        return val

    def distance_to_origin_l(self, ell: float) -> float:
        """Distance from |z| = exp(-ell) to the puncture (incomplete only)."""
        if self.complete and self.q >= 2:
            raise ValueError("the puncture is at infinite distance")
        val, err = quad(lambda l: math.exp(0.5 * self.loglam(l) - l),
                        ell, math.inf, epsrel=1e-10, limit=400)
        return val

    def circumference_l(self, ell: float) -> float:
        """Length of the circle |z| = exp(-ell) (half-circle when starred)."""
        return self.angle * math.exp(0.5 * self.loglam(ell) - ell)

    # -- areas ------------------------------------------------------------
    def area_l(self, ell0: float, ell1: float) -> float:
        """lambda-area of the annulus exp(-ell1) <= |z| <= exp(-ell0)."""
        if ell1 <= ell0:
            return 0.0
        val, err = quad(lambda l: math.exp(self.loglam(l) - 2 * l),
                        ell0, ell1, epsrel=1e-10, limit=400)
        return self.angle * val


def radial_distance(base: BaseMetric, r0: float, r1: float) -> float:
    """Base distance between radii 0 < r1 <= r0 < 1 by adaptive quadrature."""
    if not (0 < r1 <= r0 < 1):
        raise ValueError("need 0 < r1 <= r0 < 1")
    return base.distance_l(-math.log(r0), -math.log(r1))


def _invert_distance(base: BaseMetric, s: float, ell_base: float) -> float:
    """ell with distance(ell_base, ell) = s toward the puncture (complete
    direction), by bisection in ell to 1e-10 relative."""
    lo, hi = ell_base, ell_base + 1.0
    while base.distance_l(ell_base, hi) < s:
        hi *= 2
        if hi > 1e9:
            raise RuntimeError("distance inversion out of range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if base.distance_l(ell_base, mid) < s:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-10 * hi:
            break
    return 0.5 * (lo + hi)


def ball_volume(base: BaseMetric, s: float) -> float:
    """epsilon times the lambda-area of the radial ball of radius s around
    |z| = 1/2, measured toward the puncture."""
    if s <= 0:
        raise ValueError("s must be positive")
    ell_s = _invert_distance(base, s, LOG2)
    return base.model.epsilon * base.area_l(LOG2, ell_s)


def volume_growth_fit(base: BaseMetric, s_values: Sequence[float]) -> GrowthFit:
    vols = [ball_volume(base, s) for s in s_values]
    return fit_powerlaw(s_values, vols)


def cone_angle_numeric(base: BaseMetric, r: float) -> float:
    """Tangent-cone angle estimate at radius r.

    Incomplete models: circumference(r) / (2 pi dist(0, r)), with one
    Richardson step in 1/log(1/r) for the I_b/I_b* families whose base
    deviates from its cone by exactly that order.  Complete models: secant
    slope of circumference against distance between r and r_ref = 1/4,
    exact on cones; a decaying slope (half-line, theta = 0) is detected by
    comparing two depths and reported as 0.
    """
    if not (0 < r < 0.25):
        raise ValueError("need 0 < r < 1/4")
    ell = -math.log(r)

    if not base.complete:
        def raw(l: float) -> float:
            return base.circumference_l(l) / (
                2 * math.pi * base.distance_to_origin_l(l))
        theta = raw(ell)
        if base.s:  # logarithmic conformal factor: remove the 1/l term
            theta = 2 * theta - raw(ell / 2)
        return theta

    ell_ref = -math.log(0.25)

    def secant(l: float) -> float:
        circ = base.circumference_l(l) - base.circumference_l(ell_ref)
        return circ / (2 * math.pi * base.distance_l(ell_ref, l))

    t1 = secant(ell)
    t2 = secant(2 * ell)
    if abs(t2) < 0.75 * abs(t1) or abs(t1) < 1e-12:
        return 0.0  # circumference growth sublinear in distance: half-line
    if base.s and ell / 2 > ell_ref + 0.5:
        return 2 * t1 - secant(ell / 2)
    return t1


# ---------------------------------------------------------------------------
# Injectivity proxies for the I_b / I_b* families
# ---------------------------------------------------------------------------

def _fiber_quantities(model: FiberModel, ell: float) -> Tuple[float, float]:
    """(shortest lattice vector, diameter proxy) of the fiber at log-depth
    ell, from the closed-form I_b / I_b* lattice (tau1 = 1, |tau2| >> 1)."""
    tag = model.kodaira_type.tag
    if tag == "I":
        pairing = model.b * ell / (2 * math.pi)
    else:
        pairing = model.b * ell / math.pi
    B = model.epsilon / (2 * pairing)
    scale = math.sqrt(2 * B)
    tau2_abs = pairing  # tau2 is purely imaginary at real z, |tau2| = pairing
    return scale * min(1.0, tau2_abs), 0.5 * scale * (1 + tau2_abs)


def injectivity_proxy_scan(model: FiberModel, distances: Sequence[float],
                           quantity: str = "shortest") -> GrowthFit:
    """Fit of the shortest fiber loop (or fiber diameter) against the
    total-space distance r; for I_b* the fit abscissa is log r."""
    tag = model.kodaira_type.tag
    if tag not in ("I", "Istar") or model.b < 1:
        raise ValueError("injectivity proxies need an I_b or I_b* model")
    if quantity not in ("shortest", "diameter"):
        raise ValueError("quantity must be 'shortest' or 'diameter'")
    base = BaseMetric(model)
    xs, ys = [], []
    for s in distances:
        ell = _invert_distance(base, s, LOG2)
        short, diam = _fiber_quantities(model, ell)
        xs.append(s if tag == "I" else math.log(s))
        ys.append(short if quantity == "shortest" else diam)
    return fit_powerlaw(xs, ys)


# ---------------------------------------------------------------------------
# ALH cylinder convergence for complete I_0 models
# ---------------------------------------------------------------------------

def alh_mu(model: FiberModel) -> float:
    """mu = sqrt(alpha) |k(0)| sqrt(2 Im tau(0))."""
    tau0 = model.tau_at(0.0)
    return math.sqrt(model.alpha) * abs(model.k0) * math.sqrt(2 * tau0.imag)


def alh_circle_length(model: FiberModel) -> float:
    return 2 * math.pi * alh_mu(model) / math.sqrt(model.epsilon)


def alh_deviation(model: FiberModel, t: float) -> float:
    """Sup over fiber samples of the deviation of the metric coefficients in
    the cylinder coordinate u (z = exp(-u sqrt(eps)/mu)) from the flat
    product with h_uu = 1/2 and h_ww = eps/(2 Im tau(0))."""
    mu = alh_mu(model)
    rate = math.sqrt(model.epsilon) / mu
    z = math.exp(-rate * t)
    if z == 0.0:
        raise ValueError("t too large: fiber coordinate underflows")
    tau0 = model.tau_at(0.0)
    target_ww = model.epsilon / (2 * tau0.imag)
    jac = rate * z  # |dz/du|
    dev = 0.0
    for w in (0.0, 0.3 + 0.1j, -0.2 + 0.45j, 0.5j):
        pt = metric_at(model, z, w)
        h_uu = pt.matrix.h_zz * jac ** 2
        h_uw = abs(pt.matrix.h_zw) * jac
        dev = max(dev, abs(h_uu - 0.5), abs(pt.matrix.h_ww - target_ww), h_uw)
    return dev


def alh_decay(model: FiberModel, t_samples: Sequence[float]) -> GrowthFit:
    """Exponential-rate fit of the cylinder deviation: log(dev) against t.
    The fitted slope should be -sqrt(eps)/mu."""
    if model.kodaira_type.tag != "I" or model.b != 0:
        raise ValueError("alh_decay needs an I_0 model")
    if model.pole_flag != "minus-D":
        raise ValueError("alh_decay needs the complete model")
    devs = [alh_deviation(model, t) for t in t_samples]
    ts = np.asarray(t_samples, dtype=float)
    ly = np.log(np.asarray(devs, dtype=float))
    slope, intercept = np.polyfit(ts, ly, 1)
    pred = slope * ts + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return GrowthFit(float(slope), float(intercept), r2,
                     tuple(zip(map(float, ts), map(float, devs))))
