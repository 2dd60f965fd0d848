"""Registry of model data and closed-form period evaluators.

Each Kodaira type comes with multi-valued period generators tau1(z), tau2(z)
on the punctured disk.  The finite-monodromy families and I_0 / I_b are
evaluated directly in z.  The starred I families (I_0*, I_b*) are evaluated
in the half-disk coordinate u with z = u^2, where the metric formulas are
simplest; their z-presentation (square-root generators) is exposed read-only
through :func:`generators_z_presentation` and used for the monodromy check.

Branch convention: principal branch on C minus (-inf, 0]; analytic
continuation is requested through an explicit integer winding count, under
which z^e acquires exp(2*pi*i*e*winding) and log z gains 2*pi*i*winding.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

from .sl2z import KodairaType, representative

ZETA3 = cmath.exp(2j * cmath.pi / 3)
TWO_PI_I = 2j * cmath.pi

#: fractional exponent e of the finite-monodromy generators (tau_j ~ z^e)
FINITE_EXPONENT = {
    "II": 5.0 / 6.0,
    "IVstar": 1.0 / 3.0,
    "IIstar": 1.0 / 6.0,
    "IV": 2.0 / 3.0,
    "III": 3.0 / 4.0,
    "IIIstar": 1.0 / 4.0,
}

#: multiplicity congruence (modulus, residue) of m for each finite type
FINITE_CONGRUENCE = {
    "II": (3, 1),
    "IVstar": (3, 1),
    "IIstar": (3, 2),
    "IV": (3, 2),
    "III": (2, 1),
    "IIIstar": (2, 1),
}

CONE_ANGLES = {
    "I": (1.0, 0.0),
    "Istar": (0.5, 0.5),
    "II": (5.0 / 6.0, 1.0 / 6.0),
    "IVstar": (1.0 / 3.0, 2.0 / 3.0),
    "IIstar": (1.0 / 6.0, 5.0 / 6.0),
    "IV": (2.0 / 3.0, 1.0 / 3.0),
    "III": (3.0 / 4.0, 1.0 / 4.0),
    "IIIstar": (1.0 / 4.0, 3.0 / 4.0),
}


@dataclass(frozen=True)
class FiberModel:
    """A Kodaira type plus the data needed to evaluate its semi-flat metric.

    j_multiplicity is the parameter m (math.inf = isotrivial, z^m == 0).
    k_coeffs are low-to-high polynomial coefficients of k with k(0) != 0.
    pole_flag selects div(Omega) = -D ("minus-D", complete) or 0 ("zero",
    incomplete).  tau0/tau_slope define the default affine tau(z) for the
    trivial-monodromy families; tau_fn/dtau_fn/ddtau_fn may override it.
    """

    kodaira_type: KodairaType
    j_multiplicity: float = math.inf
    epsilon: float = 1.0
    k_coeffs: Tuple[complex, ...] = (1.0 + 0j,)
    pole_flag: str = "minus-D"
    alpha: float = 1.0
    tau0: complex = 1j
    tau_slope: complex = 0.0
    tau_fn: Optional[Callable[[complex], complex]] = None
    dtau_fn: Optional[Callable[[complex], complex]] = None
    ddtau_fn: Optional[Callable[[complex], complex]] = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.pole_flag not in ("minus-D", "zero"):
            raise ValueError("pole_flag must be 'minus-D' or 'zero'")
        if abs(self.k_coeffs[0]) == 0:
            raise ValueError("k(0) must be nonzero")
        tag = self.kodaira_type.tag
        m = self.j_multiplicity
        if tag in FINITE_CONGRUENCE and m != math.inf:
            mod, res = FINITE_CONGRUENCE[tag]
            if not (isinstance(m, int) and m >= 1 and m % mod == res):
                raise ValueError(
                    "type %s needs m = %d mod %d or infinity" % (tag, res, mod))
        if tag in ("I", "Istar") and self.kodaira_type.b > 0:
            pass  # b carried on the type
        if tag in ("I", "Istar") and self.kodaira_type.b == 0:
            if self.tau_fn is None and self.tau0.imag <= 0:
                raise ValueError("tau0 must lie in the upper half plane")

    # -- convenience -----------------------------------------------------
    @property
    def b(self) -> int:
        return self.kodaira_type.b

    @property
    def k0(self) -> complex:
        return complex(self.k_coeffs[0])

    @property
    def uses_u_coordinate(self) -> bool:
        """Starred I families are evaluated in u with z = u^2."""
        return self.kodaira_type.tag == "Istar"

    @property
    def isotrivial(self) -> bool:
        return self.j_multiplicity == math.inf

    def k_at(self, z: complex) -> complex:
        val = 0j
        for coeff in reversed(self.k_coeffs):
            val = val * z + coeff
        return val

    def dk_at(self, z: complex) -> complex:
        val = 0j
        for j in range(len(self.k_coeffs) - 1, 0, -1):
            val = val * z + j * self.k_coeffs[j]
        return val

    def tau_at(self, z: complex) -> complex:
        if self.tau_fn is not None:
            return self.tau_fn(z)
        return self.tau0 + self.tau_slope * z

    def dtau_at(self, z: complex) -> complex:
        if self.tau_fn is not None:
            if self.dtau_fn is None:
                raise ValueError("tau_fn needs a matching dtau_fn")
            return self.dtau_fn(z)
        return self.tau_slope

    def ddtau_at(self, z: complex) -> complex:
        if self.tau_fn is not None:
            if self.ddtau_fn is None:
                raise ValueError("tau_fn needs a matching ddtau_fn")
            return self.ddtau_fn(z)
        return 0j


@dataclass(frozen=True)
class PeriodSample:
    tau1: complex
    tau2: complex
    dtau1: complex
    dtau2: complex
    pairing: float  # Im(conj(tau1) * tau2) > 0

    def row(self) -> Tuple[complex, complex]:
        return (self.tau1, self.tau2)


@dataclass(frozen=True)
class PeriodJet(PeriodSample):
    """PeriodSample plus second derivatives (internal, used by curvature)."""
    ddtau1: complex = 0j
    ddtau2: complex = 0j


def _check_domain(model: FiberModel, z: complex) -> None:
    if z == 0:
        raise ValueError("z = 0 is outside the punctured disk")
    if abs(z) >= 1:
        raise ValueError("|z| must be < 1")
    if model.uses_u_coordinate and z.real < 0:
        raise ValueError("u must lie in the right half-disk (Re u > 0)")


def _branch_pow(z: complex, e: float, winding: int) -> complex:
    """z^e on the principal branch, continued by `winding` turns."""
    return cmath.exp(e * (cmath.log(z) + TWO_PI_I * winding))


def _branch_log(z: complex, winding: int) -> complex:
    return cmath.log(z) + TWO_PI_I * winding


def period_jet(model: FiberModel, z: complex, winding: int = 0) -> PeriodJet:
    """Closed-form generators and first/second derivatives at z (or u for
    the starred I families), on the principal branch continued by winding."""
    _check_domain(model, z)
    tag = model.kodaira_type.tag
    m = model.j_multiplicity

    if tag == "I" and model.b == 0:
        tau1, dtau1, ddtau1 = 1.0 + 0j, 0j, 0j
        tau2 = model.tau_at(z)
        dtau2 = model.dtau_at(z)
        ddtau2 = model.ddtau_at(z)
    elif tag == "I":
        b = model.b
        tau1, dtau1, ddtau1 = 1.0 + 0j, 0j, 0j
        tau2 = b / TWO_PI_I * _branch_log(z, winding)
        dtau2 = b / (TWO_PI_I * z)
        ddtau2 = -b / (TWO_PI_I * z * z)
    elif tag == "Istar" and model.b == 0:
        tau1, dtau1, ddtau1 = 1.0 + 0j, 0j, 0j
        z2 = z * z
        tau2 = model.tau_at(z2)
        dtau2 = 2 * z * model.dtau_at(z2)
        ddtau2 = 2 * model.dtau_at(z2) + 4 * z2 * model.ddtau_at(z2)
    elif tag == "Istar":
        b = model.b
        pii = 1j * cmath.pi
        tau1, dtau1, ddtau1 = 1.0 + 0j, 0j, 0j
        tau2 = b / pii * _branch_log(z, winding)
        dtau2 = b / (pii * z)
        ddtau2 = -b / (pii * z * z)
    elif tag in ("II", "IVstar", "IIstar", "IV"):
        e = FINITE_EXPONENT[tag]
        p = 0.0 if m == math.inf else m / 3.0
        x = 0j if m == math.inf else _branch_pow(z, p, winding)
        ze = _branch_pow(z, e, winding)
        zem1 = ze / z
        zem2 = zem1 / z
        tau1 = (1 - x) * ze
        tau2 = ZETA3 * (1 - ZETA3 * x) * ze
        dtau1 = zem1 * (e - (e + p) * x)
        dtau2 = ZETA3 * zem1 * (e - ZETA3 * (e + p) * x)
        ddtau1 = zem2 * (e * (e - 1) - (e + p) * (e + p - 1) * x)
        ddtau2 = ZETA3 * zem2 * (e * (e - 1) - ZETA3 * (e + p) * (e + p - 1) * x)
    elif tag in ("III", "IIIstar"):
        e = FINITE_EXPONENT[tag]
        p = 0.0 if m == math.inf else m / 2.0
        x = 0j if m == math.inf else _branch_pow(z, p, winding)
        ze = _branch_pow(z, e, winding)
        zem1 = ze / z
        zem2 = zem1 / z
        tau1 = (1 - x) * ze
        tau2 = 1j * (1 + x) * ze
        dtau1 = zem1 * (e - (e + p) * x)
        dtau2 = 1j * zem1 * (e + (e + p) * x)
        ddtau1 = zem2 * (e * (e - 1) - (e + p) * (e + p - 1) * x)
        ddtau2 = 1j * zem2 * (e * (e - 1) + (e + p) * (e + p - 1) * x)
    else:  # pragma: no cover
        raise AssertionError(tag)

    pairing = (tau1.conjugate() * tau2).imag
    if pairing <= 0:
        raise ValueError("period basis not positively oriented at %r" % (z,))
    return PeriodJet(tau1, tau2, dtau1, dtau2, pairing, ddtau1, ddtau2)


def generators(model: FiberModel, z: complex, winding: int = 0) -> PeriodSample:
    """Period generators and derivatives (model coordinate: u for I_b*)."""
    jet = period_jet(model, z, winding)
    return PeriodSample(jet.tau1, jet.tau2, jet.dtau1, jet.dtau2, jet.pairing)


def generators_z_presentation(model: FiberModel, z: complex,
                              winding: int = 0) -> Tuple[complex, complex]:
    """Table presentation of (tau1, tau2) as functions of z, values only.

    This is the read-only z-form: the starred I families appear with their
    square-root generators.  Used by the monodromy consistency check.
    """
    _check_domain_z(z)
    tag = model.kodaira_type.tag
    if tag == "Istar" and model.b == 0:
        h = _branch_pow(z, 0.5, winding)
        return (h, h * model.tau_at(z))
    if tag == "Istar":
        h = _branch_pow(z, 0.5, winding)
        return (h, model.b / TWO_PI_I * h * _branch_log(z, winding))
    if tag == "I" and model.b == 0:
        return (1.0 + 0j, model.tau_at(z))
    jet = period_jet(model, z, winding)
    return (jet.tau1, jet.tau2)


def _check_domain_z(z: complex) -> None:
    if z == 0:
        raise ValueError("z = 0 is outside the punctured disk")
    if abs(z) >= 1:
        raise ValueError("|z| must be < 1")


def multiplicity_N(model: FiberModel) -> int:
    """Pole multiplicity N: 0 for I_0 and I_b, 1 for every other row."""
    return 0 if model.kodaira_type.tag == "I" else 1


def cone_angles(model: FiberModel) -> Tuple[float, float]:
    """(theta_incomplete, theta_complete); 0 encodes a half-line cone."""
    return CONE_ANGLES[model.kodaira_type.tag]


def volume_density_g(model: FiberModel, z: complex) -> complex:
    """sqrt(alpha) * k(z) * z^{-N-1} (complete) or z^{-N} (incomplete).

    This is the z-presentation density; the metric internals for the starred
    I families use :func:`density_model_coords` instead.
    """
    if z == 0:
        raise ValueError("z = 0")
    N = multiplicity_N(model)
    power = N + 1 if model.pole_flag == "minus-D" else N
    return math.sqrt(model.alpha) * model.k_at(z) * z ** (-power)


def density_model_coords(model: FiberModel, t: complex) -> Tuple[complex, complex]:
    """(g, dg/dt) in the model coordinate t (u for starred I, z otherwise)."""
    if t == 0:
        raise ValueError("coordinate 0")
    sa = math.sqrt(model.alpha)
    if model.uses_u_coordinate:
        t2 = t * t
        k = model.k_at(t2)
        dk = model.dk_at(t2)
        if model.pole_flag == "minus-D":
            g = sa * k / t2
            dg = sa * (2 * dk / t - 2 * k / (t2 * t))
        else:
            g = sa * k
            dg = sa * 2 * t * dk
        return g, dg
    N = multiplicity_N(model)
    power = N + 1 if model.pole_flag == "minus-D" else N
    k = model.k_at(t)
    dk = model.dk_at(t)
    g = sa * k * t ** (-power)
    dg = sa * (dk * t ** (-power) - power * k * t ** (-power - 1))
    return g, dg


def monodromy_consistency(model: FiberModel, z: complex) -> float:
    """Max-norm difference between the winding-1 continuation of the
    z-presentation generators and (tau1, tau2) * A for the table A."""
    t0 = generators_z_presentation(model, z, 0)
    t1 = generators_z_presentation(model, z, 1)
    A = representative(model.kodaira_type)
    target = (A.a * t0[0] + A.c * t0[1], A.b * t0[0] + A.d * t0[1])
    return max(abs(t1[0] - target[0]), abs(t1[1] - target[1]))


# ---------------------------------------------------------------------------
# Table registry (one entry per table row) and the model description format
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TableRow:
    j_value: str          # "generic", "0", "1", "inf"
    multiplicity: str     # congruence condition on m, or "-b" for I_b
    type_name: str
    order: str
    generators_id: str
    N: int
    theta_incomplete: float
    theta_complete: float


TABLE_REGISTRY: Tuple[TableRow, ...] = (
    TableRow("generic", "any", "I_0", "1", "1, tau(z)", 0, 1.0, 0.0),
    TableRow("generic", "any", "I_0*", "2", "z^(1/2), z^(1/2) tau(z)", 1, 0.5, 0.5),
    TableRow("0", "m = 1 mod 3", "II", "6",
             "(1-z^(m/3)) z^(5/6), zeta3 (1-zeta3 z^(m/3)) z^(5/6)", 1, 5/6, 1/6),
    TableRow("0", "m = 1 mod 3", "IV*", "3",
             "(1-z^(m/3)) z^(1/3), zeta3 (1-zeta3 z^(m/3)) z^(1/3)", 1, 1/3, 2/3),
    TableRow("0", "m = 2 mod 3", "II*", "6",
             "(1-z^(m/3)) z^(1/6), zeta3 (1-zeta3 z^(m/3)) z^(1/6)", 1, 1/6, 5/6),
    TableRow("0", "m = 2 mod 3", "IV", "3",
             "(1-z^(m/3)) z^(2/3), zeta3 (1-zeta3 z^(m/3)) z^(2/3)", 1, 2/3, 1/3),
    TableRow("0", "m = 0 mod 3", "I_0", "1", "1, tau(z)", 0, 1.0, 0.0),
    TableRow("0", "m = 0 mod 3", "I_0*", "2", "z^(1/2), z^(1/2) tau(z)", 1, 0.5, 0.5),
    TableRow("1", "m = 1 mod 2", "III", "4",
             "(1-z^(m/2)) z^(3/4), i (1+z^(m/2)) z^(3/4)", 1, 3/4, 1/4),
    TableRow("1", "m = 1 mod 2", "III*", "4",
             "(1-z^(m/2)) z^(1/4), i (1+z^(m/2)) z^(1/4)", 1, 1/4, 3/4),
    TableRow("1", "m = 0 mod 2", "I_0", "1", "1, tau(z)", 0, 1.0, 0.0),
    TableRow("1", "m = 0 mod 2", "I_0*", "2", "z^(1/2), z^(1/2) tau(z)", 1, 0.5, 0.5),
    TableRow("inf", "-b", "I_b", "inf", "1, (b/(2 pi i)) log z", 0, 1.0, 0.0),
    TableRow("inf", "-b", "I_b*", "inf",
             "z^(1/2), (b/(2 pi i)) z^(1/2) log z", 1, 0.5, 0.5),
)


MODEL_FILE_KEYS = (
    "type", "b", "m", "epsilon", "k0_re", "k0_im", "pole_flag", "alpha",
    "tau0_re", "tau0_im", "tau_slope_re", "tau_slope_im",
)


def parse_model_text(text: str) -> FiberModel:
    """Parse the key-value model description format.

    Grammar: one "key = value" pair per line; blank lines and lines starting
    with '#' are ignored; unknown keys are errors.  See README for keys.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError("line %d: expected 'key = value'" % lineno)
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in MODEL_FILE_KEYS:
            raise ValueError("line %d: unknown key %r" % (lineno, key))
        if key in values:
            raise ValueError("line %d: duplicate key %r" % (lineno, key))
        values[key] = val
    if "type" not in values:
        raise ValueError("missing required key 'type'")

    name = values.pop("type")
    b = int(values.pop("b", "0"))
    mtxt = values.pop("m", "inf")
    m = math.inf if mtxt in ("inf", "infinity") else int(mtxt)

    def fval(key, default):
        return float(values.pop(key, default))

    epsilon = fval("epsilon", "1")
    k0 = complex(fval("k0_re", "1"), fval("k0_im", "0"))
    pole_flag = values.pop("pole_flag", "minus-D")
    alpha = fval("alpha", "1")
    tau0 = complex(fval("tau0_re", "0"), fval("tau0_im", "1"))
    tau_slope = complex(fval("tau_slope_re", "0"), fval("tau_slope_im", "0"))
    assert not values

    kt = KodairaType.parse(name)
    if kt.tag in ("I", "Istar") and b and kt.b == 0:
        kt = KodairaType(kt.tag, b)
    return FiberModel(
        kodaira_type=kt, j_multiplicity=m, epsilon=epsilon,
        k_coeffs=(k0,), pole_flag=pole_flag, alpha=alpha,
        tau0=tau0, tau_slope=tau_slope,
    )


def load_model(path: str) -> FiberModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model_text(fh.read())
