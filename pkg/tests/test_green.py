"""c-Green solver: closed-form Robin constants, convergence, Hessians.

The off-center values are frozen from the image-charge closed form
Lambda(y) = -R^2/(R^2 - |y|^2)^2 (n = 2) and log((R^2 - |y|^2)/R) (n = 1);
test_image_charge_oracle re-derives the n = 2 form independently before the
solver compares against it, and test_c_term_vs_radial_ode checks the c > 0
path against a one-dimensional boundary-value solve.
"""

import numpy as np
import pytest
import scipy.integrate

from robinlab.errors import (NegativeC, PoleTooCloseToBoundary,
                             StencilOutOfRange, ValidationError)
from robinlab.green import (GridDomain, RobinFunctionField, fundamental_solution,
                            hessian_flat_directions, robin_function,
                            solve_green)


def image_charge_lambda(y, R=1.0):
    return -R ** 2 / (R ** 2 - y ** 2) ** 2


def test_image_charge_oracle():
    """The method-of-images Green function for the R^4 ball: harmonic away
    from the pole (checked by finite differences), zero on the sphere, and
    its regular part at the pole equals the closed form."""
    R, y = 1.0, 0.5
    pole = np.array([y, 0.0, 0.0, 0.0])
    ystar = pole * R ** 2 / y ** 2
    fac = (R / y) ** 2

    def g(x):
        return (1.0 / np.sum((x - pole) ** 2, axis=-1)
                - fac / np.sum((x - ystar) ** 2, axis=-1))

    rng = np.random.default_rng(0)
    # vanishes on the sphere
    pts = rng.normal(size=(50, 4))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    assert np.max(np.abs(g(pts))) < 1e-12
    # harmonic: 4-D finite-difference Laplacian at interior sample points,
    # relative to the size of the individual second-derivative terms
    h = 1e-3
    for _ in range(20):
        x = rng.normal(size=4) * 0.3 + np.array([0.1, 0, 0, 0])
        if np.linalg.norm(x) > 0.9 or np.linalg.norm(x - pole) < 0.15:
            continue
        terms = [(g(x + h * e) + g(x - h * e) - 2 * g(x)) / h ** 2
                 for e in np.eye(4)]
        scale = max(abs(t) for t in terms)
        assert abs(sum(terms)) < 1e-4 * max(scale, 1.0)
    # regular part at the pole
    lam = -fac / np.sum((pole - ystar) ** 2)
    assert abs(lam - image_charge_lambda(y)) < 1e-14


# -- closed-form benchmarks ------------------------------------------------------

def test_unit_ball_center_pole():
    dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=20)
    fld = solve_green(dom)
    assert abs(fld.lam + 1.0) < 1e-6
    assert fld.residual < 1e-9


def test_ball_radius_two():
    dom = GridDomain.ball(2, radius=2.0, nodes_per_axis=20)
    assert abs(solve_green(dom).lam + 0.25) < 1e-6


def test_off_center_pole():
    dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=24)
    fld = solve_green(dom, pole=[0.5, 0, 0, 0])
    exact = image_charge_lambda(0.5)
    assert abs((fld.lam - exact) / exact) < 0.01


def test_disk_n1_closed_forms():
    dom = GridDomain.ball(1, radius=1.0, nodes_per_axis=65)
    assert abs(solve_green(dom).lam) < 1e-9            # log R = 0
    fld = solve_green(dom, pole=[0.5, 0.0])
    assert abs(fld.lam - np.log(0.75)) < 5e-4
    dom2 = GridDomain.ball(1, radius=2.0, nodes_per_axis=65)
    assert abs(solve_green(dom2).lam - np.log(2.0)) < 1e-8


def test_green_nonnegative_and_boundary():
    dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=20)
    y = 0.3
    fld = solve_green(dom, pole=[y, 0, 0, 0])
    assert fld.min_g() >= -1e-6 * abs(fld.lam)
    # away from the pole the solve tracks the image-charge Green function
    pole = np.array([y, 0, 0, 0])
    ystar = pole / y ** 2
    rng = np.random.default_rng(1)
    for _ in range(10):
        v = rng.normal(size=4)
        x = 0.75 * v / np.linalg.norm(v)
        exact = (1.0 / np.sum((x - pole) ** 2)
                 - (1.0 / y ** 2) / np.sum((x - ystar) ** 2))
        assert abs(fld.interp_g(x) - exact) < 0.05 * max(abs(exact), 0.1)


def test_grid_convergence_factor():
    """|lambda_h - lambda_{h/2}| must shrink by at least 3 when halving h."""
    lams = {}
    for m in (12, 24, 48):
        dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=m)
        lams[m] = solve_green(dom, pole=[0.35, 0, 0, 0]).lam
    d1 = abs(lams[12] - lams[24])
    d2 = abs(lams[24] - lams[48])
    assert d1 / d2 >= 3.0, (lams, d1 / d2)


def test_domain_monotonicity():
    lam_small = solve_green(GridDomain.ball(2, 0.8, 20)).lam
    lam_big = solve_green(GridDomain.ball(2, 1.0, 20)).lam
    assert lam_small <= lam_big + 1e-6


def test_boundary_blowup_monotone():
    dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=24)
    rf = robin_function(dom, [[y, 0, 0, 0] for y in (0.0, 0.25, 0.45, 0.6)])
    assert np.all(np.diff(rf.Lambda) < 0)
    for y, lam in zip((0.0, 0.25, 0.45, 0.6), rf.Lambda):
        exact = image_charge_lambda(y)
        assert abs((lam - exact) / exact) < 0.02


def test_pole_margin_enforced():
    dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=16)
    with pytest.raises(PoleTooCloseToBoundary):
        solve_green(dom, pole=[0.9, 0, 0, 0])


def test_negative_c_rejected():
    dom = GridDomain.ball(1, radius=1.0, nodes_per_axis=33)
    with pytest.raises(NegativeC):
        solve_green(dom, c_spec=-1.0)
    with pytest.raises(NegativeC):
        solve_green(dom, c_spec=lambda pts: -np.ones(len(pts)))


def test_c_term_vs_radial_ode():
    """c >= 0 supported away from the pole: the 4-D solve must match a
    high-resolution radial two-point boundary-value oracle."""
    c0, r0 = 3.0, 0.4

    def c_radial(r):
        return c0 * np.clip((r - r0) / (1 - r0), 0.0, 1.0) ** 2

    def c_spec(pts):
        return c_radial(np.linalg.norm(pts, axis=-1))

    # oracle: -(1/2)(u'' + 3 u'/r) + c (u + r^-2) = 0, u'(0)=0, u(1) = -1
    def rhs(r, y):
        u, du = y
        cr = c_radial(r)
        return np.vstack([du, -3.0 * du / r + 2.0 * cr * (u + r ** -2.0)])

    def bc(ya, yb):
        return np.array([ya[1], yb[0] + 1.0])

    rmesh = np.linspace(1e-4, 1.0, 2000)
    guess = np.vstack([-np.ones_like(rmesh), np.zeros_like(rmesh)])
    sol = scipy.integrate.solve_bvp(rhs, bc, rmesh, guess, tol=1e-10,
                                    max_nodes=200000)
    assert sol.success
    lam_oracle = float(sol.sol(1e-4)[0])

    dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=24)
    lam = solve_green(dom, c_spec=c_spec).lam
    assert abs(lam - lam_oracle) < 0.02 * abs(lam_oracle), (lam, lam_oracle)
    # absorption strictly lowers the Robin constant
    lam0 = solve_green(dom).lam
    assert lam < lam0


# -- Robin function field and Hessians ---------------------------------------------

def test_robin_lattice_and_csv():
    dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=20)
    rf = robin_function(dom, [[0, 0, 0, 0], [0.25, 0, 0, 0], [0.5, 0, 0, 0]])
    expected = [image_charge_lambda(y) for y in (0.0, 0.25, 0.5)]
    assert np.allclose(rf.Lambda, expected, rtol=5e-3)
    csv = rf.to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "x1,x2,x3,x4,Lambda"
    assert len(lines) == 4
    assert float(lines[1].split(",")[-1]) == rf.Lambda[0]


def test_hessian_at_ball_center():
    dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=16)
    rf = robin_function(dom, [[0, 0, 0, 0]])
    w, V, flats = hessian_flat_directions(rf, [0, 0], tol_eig=0.1)
    assert np.all(np.abs(w - 2.0) < 0.4)
    assert flats == []


def test_hessian_hermitian_defect_is_measured():
    dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=16)
    rf = robin_function(dom, [[0, 0, 0, 0]])
    H = rf.hessian_at([0, 0])
    scale = float(np.max(np.abs(H)))
    assert float(np.max(np.abs(H - H.conj().T))) < 1e-4 * scale


def test_hessian_flat_direction_synthetic():
    syn = RobinFunctionField.from_function(
        lambda x: -1.0 - (x[0] ** 2 + x[1] ** 2), n=2)
    w, V, flats = hessian_flat_directions(syn, [0.0, 0.0], tol_eig=0.1,
                                          h_t=0.05)
    assert len(flats) == 1
    val, vec = flats[0]
    assert abs(val) < 1e-9
    assert abs(abs(vec[1]) - 1.0) < 1e-9       # flat along e_2


def test_hessian_empty_flat_list_with_tolerance():
    syn = RobinFunctionField.from_function(
        lambda x: -(1.0 - x @ x) ** -2.0, n=2)   # -Lambda for the unit ball
    w, V, flats = hessian_flat_directions(syn, [0.0, 0.0], tol_eig=0.1,
                                          h_t=0.02)
    assert np.all(np.abs(w - 2.0) < 0.01)
    assert flats == []


def test_interp_out_of_range():
    dom = GridDomain.ball(2, radius=1.0, nodes_per_axis=16)
    fld = solve_green(dom)
    with pytest.raises((StencilOutOfRange, ValidationError)):
        fld.interp_u([2.0, 0.0, 0.0, 0.0])


def test_fundamental_solution_forms():
    p = np.zeros(4)
    assert abs(fundamental_solution(2, [1.0, 0, 0, 0], p) - 1.0) < 1e-14
    assert abs(fundamental_solution(2, [2.0, 0, 0, 0], p) - 0.25) < 1e-14
    assert abs(fundamental_solution(1, [1.0, 0.0], np.zeros(2))) < 1e-14


def test_solver_supports_only_low_dims():
    with pytest.raises(ValidationError):
        GridDomain.ball(3, radius=1.0, nodes_per_axis=8)
