import math

import numpy as np
import pytest

from oracles import delta_double_well, square_well_even_ground
from softwg.errors import DiscretizationTooCoarse, NoBoundState, TailNotExponential, ZeroTestFunction
from softwg.transverse import (
    Delta,
    Discretization1D,
    SquareWell,
    Tabulated,
    default_discretization,
    double_well_boundary_term,
    double_well_upper_bound,
    fd_matrix,
    fd_solve,
    log_gap_slope,
    mirrored_test_function,
    rayleigh_quotient_1d,
    solve_double_well,
    solve_ground_state,
    tail_constants,
    tridiagonal_eigenvalues,
)


@pytest.fixture(scope="module")
def delta_gs():
    return solve_ground_state(Delta(-1.0))


@pytest.fixture(scope="module")
def sw_gs():
    return solve_ground_state(SquareWell(1.0, 1.0))


def test_profile_validation(tmp_path):
    with pytest.raises(ValueError):
        Delta(0.5)
    with pytest.raises(ValueError):
        SquareWell(-1.0, 1.0)
    with pytest.raises(ValueError):
        Tabulated((0.0, 0.0, 1.0), (1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        Tabulated((0.0, 1.0), (math.inf, 0.0))
    path = tmp_path / "w.csv"
    path.write_text("# t,W\n-0.5,0\n0,-2\n0.5,0\n")
    tab = Tabulated.from_csv(path)
    assert tab(0.0) == -2.0 and tab(0.25) == -1.0 and tab(3.0) == 0.0
    assert tab.integral() == pytest.approx(-1.0)


def test_delta_closed_form(delta_gs):
    assert delta_gs.E1 == -0.25
    assert delta_gs.xi1(0.0) == 0.5
    assert delta_gs.xi1(2.0) == pytest.approx(0.5 * math.exp(-1), abs=1e-15)
    assert delta_gs.N_plus == delta_gs.N_minus == 0.5
    # the closed-form amplitude carries squared norm 1/2
    assert delta_gs.norm_check == pytest.approx(0.5, abs=1e-14)


def test_square_well_oracle(sw_gs):
    E, N = square_well_even_ground(1.0, 1.0)
    assert sw_gs.E1 == pytest.approx(E, abs=1e-9)
    assert sw_gs.N_plus == pytest.approx(N, rel=1e-6)
    assert sw_gs.N_minus == pytest.approx(N, rel=1e-6)
    Np, Nm = tail_constants(sw_gs, 1.0)
    assert Np == pytest.approx(N, rel=1e-4) and Nm == pytest.approx(N, rel=1e-4)


def test_normalization_and_positivity(sw_gs):
    assert sw_gs.norm_check == pytest.approx(1.0, abs=1e-8)
    t = np.linspace(-12, 12, 2001)
    assert np.all(sw_gs.xi1(t) > 0)
    assert np.max(np.abs(sw_gs.xi1(t) - sw_gs.xi1(-t))) <= 1e-10


def test_tail_is_exponential(sw_gs):
    k = sw_gs.decay
    for ts in (2.0, 3.0):
        assert sw_gs.xi1(ts) == pytest.approx(sw_gs.N_plus * math.exp(-k * ts), rel=1e-6)
        assert sw_gs.xi1(-ts) == pytest.approx(sw_gs.N_minus * math.exp(-k * ts), rel=1e-6)


def test_tail_constants_reject_non_exponential(sw_gs):
    class Fake:
        E1 = sw_gs.E1
        decay = sw_gs.decay

        @staticmethod
        def xi1(t):
            return math.exp(-abs(t))

    with pytest.raises(TailNotExponential):
        tail_constants(Fake, 1.0)


def test_fd_level_properties(sw_gs):
    coarse, fine = sw_gs.levels
    for lv in (coarse, fine):
        assert lv.E2 > lv.E  # simple ground state
        assert np.all(lv.vector > 0) or np.all(lv.vector < 0)
        assert lv.residual <= 1e-8
        assert np.sum(lv.vector ** 2) * lv.h == pytest.approx(1.0, abs=1e-12)


def test_asymmetric_tabulated_profile():
    prof = Tabulated((-0.5, 0.0, 0.7), (-1.0, -3.0, 0.0))
    gs = solve_ground_state(prof)
    assert gs.E1 < 0
    assert gs.norm_check == pytest.approx(1.0, abs=1e-8)
    assert gs.N_plus != pytest.approx(gs.N_minus, rel=1e-3)
    # FD eigenvector against the shooting evaluator
    lv = gs.levels[1]
    assert np.max(np.abs(lv.vector - gs.xi1(lv.t))) < 1e-4


def test_no_bound_state():
    # a barrier has no negative eigenvalue
    with pytest.raises(NoBoundState):
        solve_ground_state(Tabulated((-1.0, 1.0), (2.0, 2.0)))


def test_coarse_grid_rejected():
    with pytest.raises(DiscretizationTooCoarse):
        solve_ground_state(SquareWell(400.0, 0.05), Discretization1D(8.0, 0.5))


def test_discretization_validation():
    with pytest.raises(ValueError):
        Discretization1D(1.0, 0.3)
    d = default_discretization(SquareWell(1.0, 1.0))
    assert d.L >= 1.0 + 20 / math.sqrt(0.46)


def test_regularized_delta_first_order():
    errs = []
    for eps in (0.1, 0.05, 0.025):
        prof = Delta(-1.0).regularized(eps)
        assert prof.integral() == pytest.approx(-1.0)
        gs = solve_ground_state(prof, default_discretization(prof, h=eps / 8))
        errs.append(abs(gs.E1 + 0.25))
    assert errs[0] <= 0.2  # |E1(eps) + alpha^2/4| <= C eps
    for a, b in zip(errs, errs[1:]):
        assert 2 / 1.5 <= a / b <= 2 * 1.5


def test_sturm_bisection_against_numpy():
    d, e = fd_matrix(SquareWell(1.0, 1.0), Discretization1D(6.0, 0.25))
    ref = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
    assert tridiagonal_eigenvalues(d, e, 4) == pytest.approx(ref[:4], abs=1e-12)


def test_delta_fd_converges():
    prof = Delta(-1.0)
    E = [fd_solve(prof, Discretization1D(40.0, h)).E for h in (1 / 16, 1 / 32)]
    assert abs(E[1] + 0.25) < abs(E[0] + 0.25) < 1e-2


@pytest.mark.parametrize("R", [3.0, 5.0, 7.0])
def test_delta_double_well(delta_gs, R):
    dw = solve_double_well(Delta(-1.0), R, gs=delta_gs)
    exact = delta_double_well(-1.0, R)
    assert dw.E1R == pytest.approx(exact, abs=1e-6)
    assert dw.E1R < delta_gs.E1
    assert dw.E1R <= dw.upper_bound + 1e-6
    assert dw.upper_bound < delta_gs.E1


def test_square_well_double_well(sw_gs):
    dw = solve_double_well(SquareWell(1.0, 1.0), 4.0, gs=sw_gs)
    assert dw.E1R < sw_gs.E1
    assert dw.E1R <= dw.upper_bound


def test_boundary_term_value(delta_gs):
    assert double_well_boundary_term(delta_gs, 4.0) == pytest.approx(-0.25 * math.exp(-4), rel=1e-14)
    assert double_well_boundary_term(delta_gs, 4.0) == pytest.approx(-0.00457891, abs=1e-8)


def test_gap_slope(delta_gs):
    Rs = [3.0, 5.0, 7.0]
    E1R = [solve_double_well(Delta(-1.0), R, gs=delta_gs).E1R for R in Rs]
    gaps = [delta_gs.E1 - e for e in E1R]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    slope = log_gap_slope(delta_gs.E1, E1R, Rs)
    assert slope == pytest.approx(-2 * delta_gs.decay, rel=0.1)


def test_rayleigh_quotients(delta_gs, sw_gs):
    disc = Discretization1D(40.0, 1 / 4096)
    assert rayleigh_quotient_1d(Delta(-1.0), delta_gs.xi1, disc) == pytest.approx(-0.25, abs=1e-8)
    lv = sw_gs.levels[1]
    disc_sw = Discretization1D(lv.L, lv.h)
    assert rayleigh_quotient_1d(SquareWell(1.0, 1.0), lv.vector, disc_sw) == pytest.approx(lv.E, abs=1e-10)
    with pytest.raises(ZeroTestFunction):
        rayleigh_quotient_1d(Delta(-1.0), lambda t: 0 * t, disc)


def test_rayleigh_of_mirrored_test_function(delta_gs):
    R = 4.0
    bound = double_well_upper_bound(delta_gs, R)
    disc = Discretization1D(44.0, 1 / 4096)
    q = rayleigh_quotient_1d(Delta(-1.0), mirrored_test_function(delta_gs, R), disc, R=R)
    assert q == pytest.approx(bound, abs=1e-6)
    assert bound == pytest.approx(delta_gs.E1 + double_well_boundary_term(delta_gs, R)
                                  / (2 * (0.5 - 0.25 * math.exp(-R))), rel=1e-12)
