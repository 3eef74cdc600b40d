import math

import numpy as np
import pytest

from perbif import lsred
from perbif.continuation import (
    BranchOrigin,
    ContinuationOptions,
    DegeneracyError,
    IntegrationError,
    SymmetryClass,
    Termination,
    branches_from_eigenvalue,
    continue_branch,
    detect_parity,
    find_bifurcation_points,
    integrate,
    norms,
    seed_from_root,
    shoot_newton,
    shooting_map,
    winding_number,
)
from perbif.continuation.crosscheck import spectral_resolve
from perbif.orbit import OrbitPoint, Parity
from perbif.weights import Weight
from tests.conftest import PI, e00_weight, bumps_even_weight
from tests.oracles import values as ORC


# trajectory -------------------------------------------------------------------

def test_linear_flow_is_exact():
    # a = 0: u = cos(sqrt(lam) t)
    w = Weight.zeros(PI)
    tr = integrate(w, 2.0, 1.0, 0.0, samples=64)
    np.testing.assert_allclose(tr.u, np.cos(math.sqrt(2.0) * tr.t), atol=1e-10)
    tr = integrate(w, 4.0, 1.0, 0.0, samples=0, variational=True)
    np.testing.assert_allclose(tr.monodromy, np.eye(2), atol=1e-10)


def test_variational_matches_finite_differences(e00):
    lam, u0, v0, h = 3.0, 0.4, -0.3, 1e-6
    S, J, dl = shooting_map(e00, lam, u0, v0)
    fd = np.column_stack([(shooting_map(e00, lam, u0 + h, v0)[0] - shooting_map(e00, lam, u0 - h, v0)[0]) / (2 * h),
                          (shooting_map(e00, lam, u0, v0 + h)[0] - shooting_map(e00, lam, u0, v0 - h)[0]) / (2 * h)])
    np.testing.assert_allclose(J, fd, atol=1e-7)
    fdl = (shooting_map(e00, lam + h, u0, v0)[0] - shooting_map(e00, lam - h, u0, v0)[0]) / (2 * h)
    np.testing.assert_allclose(dl, fdl, atol=1e-7)


def test_blowup_raises(const1):
    with pytest.raises(IntegrationError):
        integrate(const1, 1.0, 1e8, 0.0, samples=0, max_steps=200)


def test_winding_and_zero_times(const1):
    # a = 0 at lam = 16: u = sin(4 t) has zeros at multiples of pi/4
    tr = integrate(Weight.zeros(PI), 16.0, 0.0, 4.0, samples=100)
    wi = winding_number(tr)
    assert wi.winding == 2 and wi.zeros == 4
    np.testing.assert_allclose(wi.zero_times, [0, PI / 4, PI / 2, 3 * PI / 4], atol=1e-9)
    with pytest.raises(DegeneracyError):
        winding_number(integrate(const1, 1.0, 0.0, 0.0))


def test_parity_and_norms(bumps_even):
    roots = lsred.solve_local_roots(lsred.compute_coefficients(bumps_even, 1))
    c = lsred.compute_coefficients(bumps_even, 1)
    even = shoot_newton(bumps_even, lsred.local_predictor(c, roots[2], 3.9))
    odd = shoot_newton(bumps_even, lsred.local_predictor(c, roots[0], 3.9))
    assert even.parity == Parity.EVEN and odd.parity == Parity.ODD
    tr = integrate(bumps_even, even.lam, even.u0, even.v0, samples=4096)
    assert detect_parity(tr) == Parity.EVEN
    nm = norms(tr)
    assert nm.linf_u == pytest.approx(np.max(np.abs(tr.u)))
    assert nm.h2 > nm.linf_u
    assert detect_parity(integrate(e00_weight(), 1.0, 1.0, 0.0)) is None


# shooting ---------------------------------------------------------------------

@pytest.mark.parametrize("root", ["E00_LAM39_ROOT1", "E00_LAM39_ROOT3"])
def test_shooting_matches_high_precision_oracle(root, e00):
    u0, v0 = getattr(ORC, root)
    p = shoot_newton(e00, OrbitPoint(3.9, u0 + 1e-3, v0 - 1e-3))
    assert abs(p.u0 - u0) < 1e-9 and abs(p.v0 - v0) < 1e-9
    assert p.residual < 1e-8 and p.zeros == 2 and p.winding == 1


def test_shooting_rank_one_for_constant_weight(const1):
    from perbif.autonomous import AutonomousProblem, find_orbit
    up = find_orbit(AutonomousProblem(1.0, 3.0, PI), 1).u_plus
    info = {}
    p = shoot_newton(const1, OrbitPoint(3.0, up + 0.05, 0.1), info=info)
    assert p is not None and p.winding == 1
    # time shifts of one orbit: every converged point sits on its energy level
    assert 0.5 * p.v0**2 + 1.5 * p.u0**2 + 0.25 * p.u0**4 == pytest.approx(1.5 * up**2 + 0.25 * up**4)
    assert info["near_bifurcation"] and info["rank"] == 1


def test_shooting_rejects_nonfinite(e00):
    with pytest.raises(ValueError):
        shoot_newton(e00, OrbitPoint(1.0, math.nan, 0.0))


# branches ---------------------------------------------------------------------

def test_find_bifurcation_points():
    pts = find_bifurcation_points(PI, 3)
    assert pts == [(0, 0.0, 1), (1, 4.0, 2), (2, 16.0, 2), (3, 36.0, 2)]
    sub = find_bifurcation_points(PI, 2, n=2)
    assert [s for _, s, _ in sub] == pytest.approx([0.0, 1.0, 4.0])


def test_options_with():
    o = ContinuationOptions()
    assert o.with_(ds=0.1).ds == 0.1 and o.ds == 0.02
    with pytest.raises(Exception):
        o.ds = 1.0


def test_origin_labels():
    assert BranchOrigin("eigen", 1, 3).label() == "k1_r3"
    assert BranchOrigin("k0", 0, 1).label() == "k0_pos"
    assert BranchOrigin("k0", 0, -1).label() == "k0_neg"


def test_branch_invariants_and_negation(e00):
    c = lsred.compute_coefficients(e00, 1)
    r = lsred.solve_local_roots(c)[2]
    b = continue_branch(e00, seed_from_root(e00, c, r), ContinuationOptions(lambda_min=2.0),
                        BranchOrigin("eigen", 1, 3), c)
    assert b.termination == Termination.REACHED_LAMBDA_MIN
    assert b.winding == 1 and b.points[-1].lam == pytest.approx(2.0)
    lam = b.lambdas
    assert np.all(lam < 4.0) and lam[0] == pytest.approx(3.96)
    assert all(p.residual < 1e-8 for p in b.points)
    # E00 is not symmetric about T/2
    assert b.symmetry_class == SymmetryClass.ASYMMETRIC
    nb = b.negated()
    assert nb.points[5].u0 == -b.points[5].u0 and len(nb) == len(b)
    # u -> -u maps solutions to solutions
    q = shoot_newton(e00, nb.points[5])
    assert abs(q.u0 - nb.points[5].u0) < 1e-8


def test_bound_cap_and_step_budget(e00):
    c = lsred.compute_coefficients(e00, 1)
    seed = seed_from_root(e00, c, lsred.solve_local_roots(c)[0])
    b = continue_branch(e00, seed, ContinuationOptions(lambda_min=-50.0, bound_cap=5.0))
    assert b.termination == Termination.BOUND_EXCEEDED
    b = continue_branch(e00, seed, ContinuationOptions(lambda_min=-50.0, max_steps=3))
    assert b.termination == Termination.MAX_STEPS and len(b) == 4


def test_bad_seed_is_newton_failure():
    w = Weight.zeros(PI)
    b = continue_branch(w, OrbitPoint(3.0, 0.5, 0.0))
    assert b.termination == Termination.NEWTON_FAILURE and b.message


def test_bumps_even_loop_partners_pair_up(bumps_even):
    bs = branches_from_eigenvalue(bumps_even, 1, ContinuationOptions(lambda_min=0.0), workers=1)
    loops = {b.origin.root: b.loop_partner for b in bs if b.termination == Termination.CLOSED_LOOP}
    for r, q in loops.items():
        assert q is None or loops.get(q) == r


def test_spectral_crosscheck_point(e00):
    u0, v0 = ORC.E00_LAM39_ROOT1
    chk = spectral_resolve(e00, OrbitPoint(3.9, u0, v0))
    assert chk.error(OrbitPoint(3.9, u0, v0)) < 1e-7
    assert chk.N == 128
