import json
import math

import numpy as np
import pytest

from sflab import ma_lab
from sflab.ma_lab import (TorusProblem, hessian_entries, ma_determinant,
                          mass_defect, normalize_compatibility,
                          positivity_margin, project_solvable, read_grid,
                          sobolev_probe, solve_cma, solve_linearized,
                          solve_perturbed, trace_margin, write_grid,
                          write_grid_csv, write_solution)


def lap_wide(u, m):
    """Wide-stencil Laplacian: 4 * trace of the complex Hessian."""
    ent = hessian_entries(u, m)
    if m == 1:
        return 4 * ent[0]
    return 4 * (ent[0] + ent[1]).real


def grid_points(n, m):
    xs = np.arange(n) / n
    return np.meshgrid(*([xs] * (2 * m)), indexing="ij")


def test_problem_validation():
    with pytest.raises(ValueError):
        TorusProblem(3, 8, np.zeros((8, 8)))
    with pytest.raises(ValueError):
        TorusProblem(1, 12, np.zeros((12, 12)))  # not a power of two


def test_nyquist_symbol_exactly_zero():
    sig = ma_lab._sigma(16)
    assert sig[8] == 0.0


def test_project_solvable_idempotent():
    rng = np.random.default_rng(1)
    v = rng.standard_normal((16, 16))
    p = project_solvable(v, 1)
    assert np.allclose(project_solvable(p, 1), p, atol=1e-14)
    # the checkerboard mode is killed
    n = 16
    cb = np.cos(math.pi * np.arange(n))[:, None] * np.ones(n)[None, :]
    assert np.max(np.abs(project_solvable(cb, 1))) < 1e-13


def test_normalize_compatibility():
    rng = np.random.default_rng(2)
    f = rng.standard_normal((16, 16))
    g = normalize_compatibility(f)
    assert abs(np.mean(np.exp(g)) - 1) < 1e-12
    # bisection oracle for the shift constant
    lo, hi = -10.0, 10.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if np.mean(np.exp(f + mid)) > 1:
            hi = mid
        else:
            lo = mid
    assert abs((g - f).flat[0] - 0.5 * (lo + hi)) < 1e-10


def test_solve_linearized_manufactured():
    n = 32
    X, Y = grid_points(n, 1)
    ustar = 0.01 * np.sin(2 * math.pi * X) * np.cos(2 * math.pi * Y)
    ustar -= ustar.mean()
    f = np.log(1 + 0.5 * lap_wide(ustar, 1))
    u = solve_linearized(f)
    assert np.max(np.abs(u - ustar)) < 1e-12


def test_mass_defect_round_off():
    rng = np.random.default_rng(3)
    for m, n in ((1, 32), (2, 8)):
        v = 0.05 * rng.standard_normal((n,) * (2 * m))
        v -= v.mean()
        assert abs(mass_defect(v, m)) < 1e-14


def test_positivity_and_trace_margins_at_zero():
    z1 = np.zeros((8, 8))
    assert abs(positivity_margin(z1, 1) - 0.5) < 1e-15
    assert abs(trace_margin(z1, 1) - 1.0) < 1e-15
    z2 = np.zeros((4,) * 4)
    assert abs(positivity_margin(z2, 2) - 0.5) < 1e-15
    assert abs(trace_margin(z2, 2) - 2.0) < 1e-15


def test_solve_perturbed_bound_and_zero_case():
    n = 16
    X, Y = grid_points(n, 1)
    f = 0.3 * np.sin(2 * math.pi * X) + 0.2 * np.cos(2 * math.pi * (X + Y))
    for eps in (1.0, 0.25):
        prob = TorusProblem(1, n, f, epsilon_perturb=eps)
        sol = solve_perturbed(prob)
        assert sol.residual_inf < prob.newton_tol
        assert np.max(np.abs(sol.u)) <= np.max(np.abs(f)) / eps \
            + prob.newton_tol * 2
        assert sol.positivity_margin > 0
    zero = solve_perturbed(TorusProblem(1, n, np.zeros((n, n)),
                                        epsilon_perturb=1.0))
    assert np.max(np.abs(zero.u)) < 1e-14


def test_solve_cma_rejects_incompatible_f():
    f = 0.5 + np.zeros((8, 8))
    with pytest.raises(ValueError):
        solve_cma(TorusProblem(1, 8, f))


def test_solve_cma_m1_matches_linear_solve():
    n = 16
    X, Y = grid_points(n, 1)
    f = normalize_compatibility(0.2 * np.sin(2 * math.pi * (X + Y)))
    sol = solve_cma(TorusProblem(1, n, f))
    u_lin = solve_linearized(f)
    assert np.max(np.abs(sol.u - u_lin)) < 1e-10
    assert abs(sol.u.mean()) < 1e-14


def test_solve_cma_unique_from_different_starts():
    n = 8
    X, Y = grid_points(n, 1)
    f = normalize_compatibility(0.3 * np.sin(2 * math.pi * X))
    prob = TorusProblem(1, n, f)
    rng = np.random.default_rng(4)
    s1 = solve_cma(prob)
    s2 = solve_cma(prob, initial=project_solvable(
        0.01 * rng.standard_normal((n, n)), 1))
    assert np.max(np.abs(s1.u - s2.u)) < 10 * prob.newton_tol


def manufactured_m2(n):
    g = grid_points(n, 2)
    tp = 2 * math.pi
    a, b, c = 0.01, 0.01, 0.005
    s0, c1 = np.sin(tp * g[0]), np.cos(tp * g[1])
    c2, s13 = np.cos(tp * g[2]), np.sin(tp * (g[1] + g[3]))
    u11 = 0.25 * (-2 * a * tp * tp * s0 * c1 - c * tp * tp * s13)
    u22 = 0.25 * (-b * tp * tp * c2 - c * tp * tp * s13)
    u12 = 0.25 * (-c * tp * tp * s13) + 0j
    det = (0.5 + u11) * (0.5 + u22) - np.abs(u12) ** 2
    f = normalize_compatibility(np.log(4 * det))
    ustar = a * s0 * c1 + b * c2 + c * s13
    return f, ustar - ustar.mean()


def test_solve_cma_m2_second_order():
    errs = {}
    for n in (8, 16):
        f, ustar = manufactured_m2(n)
        sol = solve_cma(TorusProblem(2, n, f))
        assert sol.residual_inf < 1e-12
        assert sol.positivity_margin > 0
        errs[n] = np.max(np.abs(sol.u - ustar))
    order = math.log2(errs[8] / errs[16])
    assert 1.8 < order < 2.2


def test_grid_io_binary_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    arr = rng.standard_normal((4,) * 4)
    path = str(tmp_path / "g.grid")
    write_grid(path, arr, 2)
    back, m, n = read_grid(path)
    assert m == 2 and n == 4
    assert back.tobytes() == arr.astype("<f8").tobytes()


def test_grid_io_csv_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    arr = rng.standard_normal((8, 8))
    path = str(tmp_path / "g.csv")
    write_grid_csv(path, arr, 1)
    back, m, n = read_grid(path)
    assert m == 1 and n == 8
    assert np.array_equal(back, arr)


def test_grid_io_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.grid"
    path.write_bytes(b"NOTAGRID" + b"\0" * 64)
    with pytest.raises(ValueError):
        read_grid(str(path))


def test_write_solution_sidecar(tmp_path):
    n = 8
    X, _ = grid_points(n, 1)
    f = normalize_compatibility(0.1 * np.sin(2 * math.pi * X))
    sol = solve_cma(TorusProblem(1, n, f))
    path = str(tmp_path / "u.grid")
    write_solution(path, sol, 1)
    with open(path + ".json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    assert meta["residual_inf"] == sol.residual_inf
    assert meta["iterations"] == sol.iterations
    assert meta["positivity_margin"] == sol.positivity_margin
    back, m, n2 = read_grid(path)
    assert (m, n2) == (1, n)
    assert np.array_equal(back, sol.u)


def test_sobolev_probe_reports():
    rep = sobolev_probe(4, 2)
    assert math.isfinite(rep.sup_ratio)
    assert rep.stability_factor <= 4
    assert len(rep.ratios) == 5 and len(rep.ratios[0]) == 9


def test_sobolev_probe_validation():
    with pytest.raises(ValueError):
        sobolev_probe(2, 2)
    with pytest.raises(ValueError):
        sobolev_probe(4, 5)
