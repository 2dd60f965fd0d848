"""Complex Monge-Ampere solver on flat tori and a weighted-Sobolev probe.

The torus is [0,1)^{2m} with n grid points per axis, m = 1 or 2.  Complex
coordinates pair the real axes as z_j = x_{2j-1} + i*x_{2j}.  All
complex-Hessian entries are composed centered first differences (wide
stencils).  With this choice the discrete divergence identity

    grid-sum of (det(1/2 delta + Hess u) - (1/2)^m) = 0

holds to round-off for arbitrary periodic u, by Parseval and the Lagrange
identity for the difference symbols sigma_a = sin(2 pi k_a / n) / h.  The
price is a 2^{2m}-dimensional null space of checkerboard (Nyquist) modes on
which every symbol vanishes; the unperturbed Newton stage projects those
modes out of residual and update, and the reported residual is measured in
the complementary (solvable) subspace.  For smooth data the projected-out
components are spectrally small.

The equation solved is det(1/2 delta_jk + u_{j kbar}) = (1/2)^m e^{f + eps*u}
with the continuity schedule eps in {1, 1/2, ..., 2^-20, 0}, Newton inner
iterations, damped line search on the sup-norm residual, and a positivity
guard on 1/2 delta + Hess u.  Newton linear solves use a constant-coefficient
frequency-domain preconditioner inside GMRES.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.sparse.linalg import LinearOperator, gmres

MAGIC = b"CMAGRID1"
HEADER = struct.Struct("<8sII16x")


# ---------------------------------------------------------------------------
# Grids and difference operators
# ---------------------------------------------------------------------------

def _check_grid(m: int, n: int) -> None:
    if m not in (1, 2):
        raise ValueError("m must be 1 or 2")
    if n < 4 or n & (n - 1):
        raise ValueError("n must be a power of two, at least 4")


def _diff(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(u, -1, axis=axis) - np.roll(u, 1, axis=axis)) / (2 * h)


def _sigma(n: int) -> np.ndarray:
    """Fourier symbol of the centered first difference: i*sigma."""
    h = 1.0 / n
    sig = np.sin(2 * math.pi * np.arange(n) / n) / h
    sig[n // 2] = 0.0  # sin(pi) rounds to ~1e-16; the symbol is exactly 0
    return sig


def hessian_entries(u: np.ndarray, m: int):
    """Complex-Hessian entries by composed centered differences.

    m = 1: returns (u_11bar,).  m = 2: returns (u_11bar, u_22bar, u_12bar)
    with u_12bar complex.
    """
    n = u.shape[0]
    h = 1.0 / n
    d = [_diff(u, a, h) for a in range(2 * m)]
    if m == 1:
        u11 = 0.25 * (_diff(d[0], 0, h) + _diff(d[1], 1, h))
        return (u11,)
    u11 = 0.25 * (_diff(d[0], 0, h) + _diff(d[1], 1, h))
    u22 = 0.25 * (_diff(d[2], 2, h) + _diff(d[3], 3, h))
    d02 = _diff(d[0], 2, h)
    d13 = _diff(d[1], 3, h)
    d03 = _diff(d[0], 3, h)
    d12 = _diff(d[1], 2, h)
    u12 = 0.25 * ((d02 + d13) + 1j * (d03 - d12))
    return (u11, u22, u12)


def ma_determinant(u: np.ndarray, m: int) -> np.ndarray:
    """det(1/2 delta + Hess u) nodewise."""
    ent = hessian_entries(u, m)
    if m == 1:
        return 0.5 + ent[0]
    u11, u22, u12 = ent
    return (0.5 + u11) * (0.5 + u22) - np.abs(u12) ** 2


def positivity_margin(u: np.ndarray, m: int) -> float:
    """Smallest eigenvalue of 1/2 delta + Hess u over all nodes."""
    ent = hessian_entries(u, m)
    if m == 1:
        return float(np.min(0.5 + ent[0]))
    a = 0.5 + ent[0]
    b = 0.5 + ent[1]
    c = np.abs(ent[2])
    lam = 0.5 * (a + b) - np.sqrt(0.25 * (a - b) ** 2 + c ** 2)
    return float(np.min(lam))


def trace_margin(u: np.ndarray, m: int) -> float:
    """Smallest value of m + 2*sum_j u_jjbar (the trace of omega against
    omega0, which must stay positive)."""
    ent = hessian_entries(u, m)
    tr = ent[0] if m == 1 else ent[0] + ent[1]
    return float(np.min(m + 2 * tr))


def _nyquist_mask(m: int, n: int) -> np.ndarray:
    """Boolean mask (frequency domain) of modes with every sigma_a = 0."""
    idx = np.arange(n)
    dead1 = (idx == 0) | (idx == n // 2)
    mask = dead1
    for _ in range(2 * m - 1):
        mask = np.multiply.outer(mask, dead1)
    return mask


def project_solvable(v: np.ndarray, m: int) -> np.ndarray:
    """Remove the checkerboard/constant modes killed by every stencil."""
    n = v.shape[0]
    vh = np.fft.fftn(v)
    vh[_nyquist_mask(m, n)] = 0.0
    return np.real(np.fft.ifftn(vh))


# ---------------------------------------------------------------------------
# Problems and solutions
# ---------------------------------------------------------------------------

@dataclass
class TorusProblem:
    m: int
    n: int
    f: np.ndarray
    epsilon_perturb: float = 0.0
    newton_tol: float = 1e-11
    max_iters: int = 60

    def __post_init__(self):
        _check_grid(self.m, self.n)
        self.f = np.asarray(self.f, dtype=float)
        if self.f.shape != (self.n,) * (2 * self.m):
            raise ValueError("f has wrong shape for (m, n)")
        if not np.all(np.isfinite(self.f)):
            raise ValueError("f must be finite")
        if self.epsilon_perturb < 0:
            raise ValueError("epsilon_perturb must be >= 0")
        if self.newton_tol <= 0 or self.max_iters <= 0:
            raise ValueError("newton_tol and max_iters must be positive")


@dataclass
class Solution:
    u: np.ndarray
    residual_inf: float
    iterations: int
    positivity_margin: float


def normalize_compatibility(f: np.ndarray) -> np.ndarray:
    """Shift f by the unique constant making grid-mean(e^f) = 1."""
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("f must be finite")
    c = 0.0
    for _ in range(60):
        val = float(np.mean(np.exp(f - c)))
        step = math.log(val)  # Newton step for g(c) = log mean e^{f-c}
        c += step
        if abs(step) < 1e-15:
            break
    return f - c


def solve_linearized(f: np.ndarray) -> np.ndarray:
    """Exact grid solution of the m = 1 equation Delta u = 2(e^f - 1),
    with the wide-stencil Laplacian, by frequency-domain division."""
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    _check_grid(1, n)
    rhs = 2 * (np.exp(f) - 1.0)
    sig = _sigma(n)
    sym = -(np.add.outer(sig ** 2, sig ** 2))  # symbol of D0^2 + D1^2
    rh = np.fft.fftn(rhs)
    dead = sym == 0.0
    rh[dead] = 0.0
    sym_safe = np.where(dead, 1.0, sym)
    u = np.real(np.fft.ifftn(rh / sym_safe))
    return u - np.mean(u)


def _residual(u: np.ndarray, prob: TorusProblem, eps: float) -> np.ndarray:
    return (ma_determinant(u, prob.m)
            - 0.5 ** prob.m * np.exp(prob.f + eps * u))


def _newton_system(u: np.ndarray, prob: TorusProblem, eps: float,
                   project: bool = False):
    """LinearOperator for the Jacobian at u plus a frequency-domain
    preconditioner (constant-coefficient Laplacian + mean zeroth order)."""
    m, n = prob.m, prob.n
    shape = u.shape
    N = u.size
    h = 1.0 / n
    zero_order = eps * 0.5 ** m * np.exp(prob.f + eps * u)
    ent = hessian_entries(u, m)

    def matvec(vflat: np.ndarray) -> np.ndarray:
        v = vflat.reshape(shape)
        if project:
            v = project_solvable(v, m)
        hv = hessian_entries(v, m)
        if m == 1:
            out = hv[0]
        else:
            u11, u22, u12 = ent
            v11, v22, v12 = hv
            out = ((0.5 + u22) * v11 + (0.5 + u11) * v22
                   - 2 * np.real(np.conj(u12) * v12))
        out = out - zero_order * v
        if project:
            out = project_solvable(out, m)
        return out.ravel()

    sig = _sigma(n)
    sig2 = sig ** 2
    lap = sig2
    for _ in range(2 * m - 1):
        lap = np.add.outer(lap, sig2)
    coeff = 0.25 if m == 1 else 0.125
    c0 = float(np.mean(zero_order))
    psym = -coeff * lap - c0
    dead = psym == 0.0
    psym_safe = np.where(dead, 1.0, psym)

    def precond(vflat: np.ndarray) -> np.ndarray:
        vh = np.fft.fftn(vflat.reshape(shape))
        if c0 == 0.0:
            vh[dead] = 0.0
        out = np.real(np.fft.ifftn(vh / psym_safe))
        return out.ravel()

    J = LinearOperator((N, N), matvec=matvec, dtype=float)
    M = LinearOperator((N, N), matvec=precond, dtype=float)
    return J, M


def _newton_solve(prob: TorusProblem, eps: float, u0: np.ndarray,
                  project: bool, max_steps: Optional[int] = None,
                  inner_rtol: float = 1e-10,
                  stop_tol: Optional[float] = None,
                  ) -> Tuple[np.ndarray, float, int]:
    """Damped Newton iteration at fixed eps, starting from u0.

    max_steps caps the step count without raising (used by the continuation
    stages, which only need a warm start); stop_tol overrides newton_tol as
    the termination residual.
    """
    u = u0.copy()
    if project:
        u = project_solvable(u, prob.m)
    steps = prob.max_iters if max_steps is None else max_steps
    tol = prob.newton_tol if stop_tol is None else stop_tol

    def res_of(uu: np.ndarray) -> np.ndarray:
        r = _residual(uu, prob, eps)
        return project_solvable(r, prob.m) if project else r

    res = res_of(u)
    rnorm = float(np.max(np.abs(res)))
    for it in range(steps):
        if rnorm < tol:
            return u, rnorm, it
        J, M = _newton_system(u, prob, eps, project=project)
        step, info = gmres(J, -res.ravel(), M=M, rtol=inner_rtol, atol=0.0,
                           maxiter=400)
        if info != 0:
            raise RuntimeError("inner linear solve failed (gmres info %d)"
                               % info)
        v = step.reshape(u.shape)
        if project:
            v = project_solvable(v, prob.m)
        if eps == 0.0:
            v = v - np.mean(v)
        t = 1.0
        while True:
            cand = u + t * v
            if positivity_margin(cand, prob.m) > 0:
                cres = res_of(cand)
                cnorm = float(np.max(np.abs(cres)))
                if cnorm <= rnorm or cnorm < prob.newton_tol:
                    u, res, rnorm = cand, cres, cnorm
                    break
            t *= 0.5
            if t < 1e-12:
                raise RuntimeError("line search underflow: step rejected")
    if max_steps is None and rnorm >= tol:
        raise RuntimeError("Newton did not converge in %d iterations"
                           % prob.max_iters)
    return u, rnorm, steps


def solve_perturbed(prob: TorusProblem) -> Solution:
    """Newton solve of the eps-perturbed equation (eps > 0)."""
    if prob.epsilon_perturb <= 0:
        raise ValueError("solve_perturbed needs epsilon_perturb > 0")
    eps = prob.epsilon_perturb
    u, rnorm, iters = _newton_solve(prob, eps, np.zeros_like(prob.f),
                                    project=False)
    bound = np.max(np.abs(prob.f)) / eps + prob.newton_tol
    if np.max(np.abs(u)) > bound * (1 + 1e-9):
        raise RuntimeError("maximum-principle bound violated")
    return Solution(u, rnorm, iters, positivity_margin(u, prob.m))


EPSILON_SCHEDULE = tuple(2.0 ** (-j) for j in range(21)) + (0.0,)


def solve_cma(prob: TorusProblem, initial: Optional[np.ndarray] = None) -> Solution:
    """Continuity-schedule solve of the unperturbed equation."""
    if prob.epsilon_perturb != 0:
        raise ValueError("solve_cma expects epsilon_perturb = 0")
    mean_ef = float(np.mean(np.exp(prob.f)))
    if abs(mean_ef - 1.0) > 1e-10:
        raise ValueError("f is not compatibility-normalized")
    u = (np.zeros_like(prob.f) if initial is None
         else np.asarray(initial, dtype=float))
    total_iters = 0
    rnorm = math.inf
    for eps in EPSILON_SCHEDULE[:-1]:
        # warm-up stages: one damped Newton step each is enough to track the
        # continuation path; full convergence is only needed at eps = 0
        u, rnorm, iters = _newton_solve(prob, eps, u, project=False,
                                        max_steps=1, inner_rtol=1e-6,
                                        stop_tol=0.01 * prob.newton_tol)
        total_iters += iters
    u, rnorm, iters = _newton_solve(prob, 0.0, u, project=True)
    total_iters += iters
    u = u - np.mean(u)
    if trace_margin(u, prob.m) <= 0:
        raise RuntimeError("trace positivity lost")
    return Solution(u, rnorm, total_iters, positivity_margin(u, prob.m))


def mass_defect(u: np.ndarray, m: int) -> float:
    """Grid-mean of det(1/2 delta + Hess u) - (1/2)^m; zero to round-off for
    any periodic u by summation by parts."""
    return float(np.mean(ma_determinant(u, m) - 0.5 ** m))


# ---------------------------------------------------------------------------
# Weighted Sobolev probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SobolevReport:
    beta: float
    alpha: float
    ratios: Tuple[Tuple[float, ...], ...]  # per profile, per dilation
    sup_ratio: float
    stability_factor: float  # max over profiles of (max ratio / min ratio)


def default_profiles() -> List[Callable[[float], float]]:
    """Five compactly supported radial profiles on [0, 1]."""
    def tent(r):
        return max(0.0, 1.0 - r)

    def quad_tent(r):
        return max(0.0, 1.0 - r) ** 2

    def poly_bump(r):
        return (1.0 - r * r) ** 2 if r < 1.0 else 0.0

    def cos_bump(r):
        return math.cos(0.5 * math.pi * r) ** 2 if r < 1.0 else 0.0

    def smooth_bump(r):
        return math.exp(1.0 - 1.0 / (1.0 - r * r)) if r < 1.0 else 0.0

    return [tent, quad_tent, poly_bump, cos_bump, smooth_bump]


def _radial_derivative(u: Callable[[float], float], r: float) -> float:
    h = 1e-6
    return (u(r + h) - u(max(r - h, 0.0))) / (h + min(r, h))


def sobolev_probe(beta: float, alpha: float,
                  family: Optional[Sequence[Callable[[float], float]]] = None,
                  dilations: Optional[Sequence[float]] = None) -> SobolevReport:
    """Empirical weighted-Sobolev ratio report.

    LHS = (int |u|^{2 alpha} (1+r)^{alpha(beta-2)-beta} dvol)^{1/alpha},
    RHS = int |u'|^2 dvol, on flat R^beta with radial u; dvol uses the
    sphere-area factor omega_{beta-1} r^{beta-1}.
    """
    if beta <= 2:
        raise ValueError("beta must exceed 2")
    if not (1.0 <= alpha <= beta / (beta - 2) + 1e-12):
        raise ValueError("alpha out of range [1, beta/(beta-2)]")
    if family is None:
        family = default_profiles()
    if dilations is None:
        dilations = [2.0 ** j for j in range(-4, 5)]
    omega = 2 * math.pi ** (beta / 2) / math.gamma(beta / 2)
    wexp = alpha * (beta - 2) - beta

    def ratio(u: Callable[[float], float], lam: float) -> float:
        def ul(r):
            return u(lam * r)

        sup_r = 1.0 / lam  # support radius of the dilated profile
        lhs_int, _ = quad(
            lambda r: abs(ul(r)) ** (2 * alpha) * (1 + r) ** wexp
            * omega * r ** (beta - 1), 0, sup_r, epsrel=1e-9, limit=300)
        rhs_int, _ = quad(
            lambda r: _radial_derivative(ul, r) ** 2 * omega * r ** (beta - 1),
            0, sup_r, epsrel=1e-9, limit=300)
        if rhs_int == 0.0:
            raise ValueError("profile with vanishing gradient excluded")
        return lhs_int ** (1.0 / alpha) / rhs_int

    rows = []
    sup_ratio = 0.0
    stability = 0.0
    for u in family:
        vals = tuple(ratio(u, lam) for lam in dilations)
        rows.append(vals)
        sup_ratio = max(sup_ratio, max(vals))
        stability = max(stability, max(vals) / min(vals))
    return SobolevReport(beta, alpha, tuple(rows), sup_ratio, stability)


# ---------------------------------------------------------------------------
# Grid file I/O
# ---------------------------------------------------------------------------

def write_grid(path: str, arr: np.ndarray, m: int) -> None:
    arr = np.asarray(arr, dtype="<f8")
    n = arr.shape[0]
    _check_grid(m, n)
    if arr.shape != (n,) * (2 * m):
        raise ValueError("array shape does not match (m, n)")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, m, n))
        fh.write(arr.tobytes(order="C"))


def read_grid(path: str) -> Tuple[np.ndarray, int, int]:
    if path.endswith(".csv"):
        return _read_grid_csv(path)
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) != HEADER.size:
            raise ValueError("truncated grid header")
        magic, m, n = HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError("bad magic: not a CMAGRID1 file")
        _check_grid(m, n)
        count = n ** (2 * m)
        data = np.frombuffer(fh.read(count * 8), dtype="<f8")
        if data.size != count:
            raise ValueError("truncated grid payload")
    return data.reshape((n,) * (2 * m)).astype(float), m, n


def write_grid_csv(path: str, arr: np.ndarray, m: int) -> None:
    arr = np.asarray(arr, dtype=float)
    n = arr.shape[0]
    _check_grid(m, n)
    flat = arr.reshape(-1, n)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("m,n\n%d,%d\n" % (m, n))
        for row in flat:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def _read_grid_csv(path: str) -> Tuple[np.ndarray, int, int]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "m,n":
            raise ValueError("CSV grid must start with 'm,n' header")
        m, n = (int(v) for v in fh.readline().strip().split(","))
        _check_grid(m, n)
        rows = [[float(v) for v in line.strip().split(",")]
                for line in fh if line.strip()]
    arr = np.asarray(rows, dtype=float)
    if arr.shape != (n ** (2 * m - 1), n):
        raise ValueError("CSV grid payload has wrong shape")
    return arr.reshape((n,) * (2 * m)), m, n


def write_solution(path: str, sol: Solution, m: int) -> None:
    write_grid(path, sol.u, m)
    sidecar = {
        "residual_inf": sol.residual_inf,
        "iterations": sol.iterations,
        "positivity_margin": sol.positivity_margin,
    }
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
