import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import jv

from heavyrmt.combinatorics import CSequence, limiting_moment_covariance, limiting_moment_mean
from heavyrmt.ensembles import EnsembleSpec, phi_limit
from heavyrmt.errors import DomainError, SolverError, UnsupportedFamilyError
from heavyrmt.fixedpoint import (
    KernelSpec,
    L_of_z,
    L_of_z_difference,
    PairMeasureSpec,
    bessel_ratio,
    covariance_C,
    kernel_g,
    make_grid,
    solve_rho,
    solve_rho_pair,
    stieltjes_limit,
)
from heavyrmt.fixedpoint.solver import nystrom_matrix

ER1 = EnsembleSpec.erdos_renyi(1.0)
SEMI = KernelSpec.semicircle()
LEVY = EnsembleSpec.levy(1.5)


def semicircle_s(z):
    r = np.sqrt(z - 2 + 0j) * np.sqrt(z + 2 + 0j)
    return (z - r) / 2


# ------------------------------------------------------------------ kernels


def test_kernel_values():
    assert kernel_g(EnsembleSpec.wigner(), 3.0) == -1
    assert kernel_g(ER1, 1e-12) == pytest.approx(-1)
    assert kernel_g(EnsembleSpec.levy(1.0), 1.0) == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        kernel_g(ER1, 0.0)


def test_bessel_ratio_against_series():
    s = np.array([0.0, 1e-6, 1e-3, 0.5, 3.0, 20.0])
    series = np.array([sum((-1) ** m * (x / 2) ** (2 * m) / (math.factorial(m) * math.factorial(m + 1))
                           for m in range(60)) for x in s])
    assert np.allclose(bessel_ratio(s), series, atol=1e-12)
    assert np.allclose(bessel_ratio(s[1:]), 2 * jv(1, s[1:]) / s[1:])


def _laplace_of_g(spec, lam, gamma):
    # int_0^inf g(y) exp(i y / lam) dy with the y^gamma endpoint removed by y = v^(1/(1+gamma))
    k = KernelSpec.from_ensemble(spec) if isinstance(spec, EnsembleSpec) else spec
    p = 1.0 / (1.0 + gamma)

    def f(v, part):
        y = v**p
        val = kernel_g(k, y) * np.exp(1j * y / lam) * p * v ** (p - 1)
        return part(val)

    re = integrate.quad(f, 0, np.inf, args=(np.real,), limit=500)[0]
    im = integrate.quad(f, 0, np.inf, args=(np.imag,), limit=500)[0]
    return complex(re, im)


@pytest.mark.parametrize("spec", [ER1, EnsembleSpec.exploding(((2.0, 0.5), (0.0, 0.3))),
                                  EnsembleSpec.wigner(), LEVY, EnsembleSpec.levy(0.8)],
                         ids=["er", "mixed", "wigner", "levy1.5", "levy0.8"])
def test_kernel_reproduces_phi(spec):
    k = KernelSpec.from_ensemble(spec)
    for lam in (-1j, -0.5j):
        assert _laplace_of_g(k, lam, k.singular_exponent) == pytest.approx(
            complex(phi_limit(spec, lam)), rel=1e-6, abs=1e-8)


def test_tau_decomposition_for_er():
    # Phi(x + y) - Phi(x) - Phi(y) = iint tau(v, v') exp(i v/x + i v'/y)
    pair = PairMeasureSpec(KernelSpec.from_ensemble(EnsembleSpec.erdos_renyi(2.0)))
    x, y = -1j, -2j
    grid = make_grid(1.0, t_max=60.0)
    v = grid.nodes
    wv = grid.weights * np.exp(1j * v / x)
    wv2 = grid.weights * np.exp(1j * v / y)
    lhs = wv @ pair.tau(v[:, None], v[None, :]) @ wv2
    phi = KernelSpec.from_ensemble(EnsembleSpec.erdos_renyi(2.0)).phi
    rhs = phi(x + y) - phi(x) - phi(y)
    assert lhs == pytest.approx(complex(rhs), rel=1e-8)
    assert np.allclose(pair.mu(v), kernel_g(pair.kernel, v))


def test_pair_measure_rejects_levy():
    with pytest.raises(Exception):
        PairMeasureSpec(KernelSpec.from_ensemble(LEVY))


# ------------------------------------------------------------------- solver


def test_semicircle_rho_is_linear():
    rho = solve_rho(2j, SEMI)
    s = stieltjes_limit(2j, rho)
    t = np.array([0.1, 0.5, 1.0, 3.0])
    assert np.allclose(rho(t), -1j * t * s, atol=1e-9)
    assert s == pytest.approx(-0.41421356237j, abs=1e-9)


@pytest.mark.parametrize("x", np.linspace(-3, 3, 7))
def test_semicircle_closure(x):
    z = complex(x, 1.0)
    s = stieltjes_limit(z, spec=SEMI)
    assert abs(s - 1 / (z - s)) < 1e-6
    assert s == pytest.approx(semicircle_s(z), abs=1e-8)


def test_stieltjes_large_imaginary_part():
    for spec in (ER1, LEVY):
        s = stieltjes_limit(50j, spec=spec)
        assert s == pytest.approx(1 / 50j, rel=0.05)


def test_stieltjes_basic_bounds_and_conjugation():
    for z in (2j, 1 + 1j, -0.5 + 0.3j):
        s = stieltjes_limit(z, spec=ER1)
        assert s.imag < 0 and abs(s) <= 1 / z.imag + 1e-12
        assert stieltjes_limit(z.conjugate(), spec=ER1) == pytest.approx(s.conjugate())


def test_er_stieltjes_moment_expansion():
    # s(z) ~ sum_K m_K z^(-K-1) at large |z|
    z = 12j
    C = CSequence.constant(1.0)
    series = sum(limiting_moment_mean(K, C) * z ** (-K - 1) for K in range(0, 9) if K) + 1 / z
    assert stieltjes_limit(z, spec=ER1) == pytest.approx(series, rel=1e-6)


@pytest.mark.parametrize("spec", [ER1, LEVY, SEMI], ids=["er", "levy", "semi"])
def test_rho_invariants(spec):
    tol = 1e-11
    rho = solve_rho(1 + 0.5j, spec, tol=tol)
    assert np.all(rho.values.real <= 1e-9)
    assert rho.residual < tol
    # the returned values are a fixed point of the discrete map
    F = rho.kmat @ rho.exp_factor
    assert np.max(np.abs(F - rho.values)) < 2 * tol
    assert abs(rho(1e-9)) < 1e-6
    assert rho(0.0) == 0


def test_levy_homogeneity():
    rho = solve_rho(1 + 1j, LEVY, tol=1e-12)
    r1 = rho(1.0)
    for t in (0.25, 4.0):
        assert abs(rho(t) - t**0.75 * r1) < 1e-12


def test_grid_resolution_convergence():
    coarse = stieltjes_limit(0.5 + 0.5j, spec=ER1, order=8)
    fine = stieltjes_limit(0.5 + 0.5j, spec=ER1, order=16, panel_width=0.5)
    assert coarse == pytest.approx(fine, abs=1e-8)


def test_solver_errors():
    with pytest.raises(DomainError):
        solve_rho(-1j, ER1)
    with pytest.raises(DomainError):
        solve_rho(1.0, ER1)
    with pytest.raises(SolverError) as info:
        solve_rho(2j, ER1, max_iter=2)
    assert info.value.residual > 0


def test_rho_csv(tmp_path):
    rho = solve_rho(2j, ER1)
    text = rho.to_csv(tmp_path / "rho.csv")
    lines = text.splitlines()
    assert lines[0] == "# schema=1" and lines[1] == "t,re_rho,im_rho"
    assert len(lines) == len(rho.grid) + 2
    assert (tmp_path / "rho.csv").read_text() == text


def test_nystrom_matrix_zero_row():
    grid = make_grid(2.0)
    K = nystrom_matrix(KernelSpec.from_ensemble(ER1), grid, [0.0, 1.0])
    assert np.all(K[0] == 0) and np.any(K[1] != 0)


# ------------------------------------------------------------------ L(z)


def test_L_semicircle_closed_form():
    z = 2j
    s = semicircle_s(z)
    ds = -s * s / (1 - s * s)
    # rho = -i t s, sigma = -i t s'; the integrand is i(1 - s') exp(i t (z - s))
    assert L_of_z(z, SEMI) == pytest.approx(-(1 - ds) * s, abs=1e-9)
    assert L_of_z_difference(z, SEMI) == pytest.approx(-(1 - ds) * s, abs=1e-6)


@pytest.mark.parametrize("z", [2j, 1 + 1j, -0.7 + 0.6j])
def test_L_analytic_matches_finite_difference(z):
    for spec in (ER1, LEVY):
        assert L_of_z(z, spec) == pytest.approx(L_of_z_difference(z, spec), abs=1e-6)


def test_L_decay_and_conjugation():
    # the rho = 0 term gives L ~ -1/z
    for y in (8.0, 16.0, 32.0):
        assert abs(L_of_z(1j * y, ER1) * 1j * y + 1) < 4.0 / y
    assert L_of_z(-1 - 1j, ER1) == pytest.approx(L_of_z(-1 + 1j, ER1).conjugate())


# -------------------------------------------------------------- pair / C


@pytest.mark.parametrize("u", [0.0, 0.5, 1.0])
def test_pair_marginal(u):
    rho = solve_rho(2j, ER1)
    S = solve_rho_pair(2j, 1 + 1j, u, ER1, rho_z=rho)
    t = np.array([0.0, 0.3, 1.0, 5.0])
    assert np.max(np.abs(S(t, [0.0])[:, 0] - rho(t))) < 2e-10
    rho2 = solve_rho(1 + 1j, ER1)
    assert np.max(np.abs(S([0.0], t)[0] - rho2(t))) < 2e-10


def test_pair_wigner_is_additive():
    S = solve_rho_pair(2j, 1 + 1j, 0.5, EnsembleSpec.wigner())
    s1, s2 = stieltjes_limit(2j, spec=SEMI), stieltjes_limit(1 + 1j, spec=SEMI)
    t, u = np.array([0.5, 2.0]), np.array([1.0, 3.0])
    want = -1j * t[:, None] * s1 - 1j * u[None, :] * s2
    assert np.allclose(S(t, u), want, atol=1e-9)


def test_pair_full_coupling_reduces_to_single():
    # u = 1 and z = z': A' = A, so rho^1(t, s) = rho(t + s)
    rho = solve_rho(2j, ER1)
    S = solve_rho_pair(2j, 2j, 1.0, ER1, rho_z=rho, rho_z2=rho, tol=1e-12)
    t = np.array([0.5, 1.0])
    assert np.allclose(S(t, t[::-1]).diagonal(), rho(t + t[::-1]), atol=1e-9)


def test_pair_surface_properties():
    S = solve_rho_pair(2j, 2j, 0.5, ER1)
    assert np.all(S.values.real <= 1e-9)
    assert np.allclose(S.values, S.values.T)


def test_pair_rejects_levy():
    with pytest.raises(UnsupportedFamilyError):
        solve_rho_pair(2j, 2j, 0.5, LEVY)
    with pytest.raises(UnsupportedFamilyError):
        covariance_C(2j, 2j, LEVY)


def test_covariance_wigner_vanishes():
    assert covariance_C(2j, 1 + 1j, EnsembleSpec.wigner()).value == 0


def test_covariance_symmetries():
    c12 = covariance_C(2j, 1 + 2j, ER1).value
    c21 = covariance_C(1 + 2j, 2j, ER1).value
    assert c12 == pytest.approx(c21, rel=1e-6)
    conj = covariance_C(-2j, 1 - 2j, ER1).value
    assert conj == pytest.approx(c12.conjugate(), rel=1e-6)
    var = covariance_C(1 + 2j, 1 - 2j, ER1).value
    assert abs(var.imag) < 1e-9 and var.real >= -1e-6


@pytest.mark.parametrize("z,z2", [(8j, 8j), (8j, 4 + 8j), (8j, -8j)])
def test_covariance_matches_moment_graph_series(z, z2):
    C = CSequence.constant(1.0)
    series = sum(limiting_moment_covariance(a, b, C) * z ** (-a - 1) * z2 ** (-b - 1)
                 for a in range(1, 8) for b in range(1, 8))
    got = covariance_C(z, z2, ER1).value
    assert got == pytest.approx(series, rel=3e-3)


def test_covariance_u_quadrature_error_small():
    est = covariance_C(2j, 2j, ER1, estimate_error=True)
    assert est.u_error < 1e-6 * abs(est.value) + 1e-10


@settings(max_examples=8, deadline=None)
@given(x=st.floats(-2.5, 2.5), y=st.floats(0.8, 4.0))
def test_property_semicircle_equation(x, y):
    z = complex(x, y)
    s = stieltjes_limit(z, spec=SEMI)
    assert abs(s - 1 / (z - s)) < 1e-6
