from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetaspec.eigen import (
    Spectrum,
    eig_dense,
    eig_secular,
    eigh_dense,
    householder_tridiagonalize,
    secular_determinant,
    solve_spectrum,
    tql_implicit,
)
from zetaspec.errors import NumericalError, ValidationError
from zetaspec.operators import FourierBasis, LogWindow, build_generator, constrain_kill, constrain_perturb
from zetaspec.specfun import sieve_mangoldt
from zetaspec.weil import build_xi


def weil_operator(kappa):
    b = FourierBasis(LogWindow(float(kappa)), kappa)
    xi = build_xi(b.window.half_width, kappa, sieve_mangoldt(kappa))
    return constrain_kill(build_generator(b), xi.unit(), b)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


# -- dense path -------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=30), st.integers(min_value=0, max_value=2**31))
def test_dense_matches_numpy(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    A = A + A.T
    vals, _ = eigh_dense(A)
    ref = np.linalg.eigvalsh(A)
    assert np.max(np.abs(vals - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_tridiagonalization_preserves_spectrum():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(12, 12))
    A = A + A.T
    d, e, Q = householder_tridiagonalize(A, want_q=True)
    T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.allclose(Q.T @ A @ Q, T, atol=1e-12)
    assert np.allclose(Q.T @ Q, np.eye(12), atol=1e-13)


def test_dense_three_by_three():
    op = constrain_kill(np.array([-math.pi, 0.0, math.pi]), unit([1, 1, 1]))
    s = math.pi / math.sqrt(3)
    assert np.allclose(eig_dense(op).eigenvalues, [-s, 0, s], atol=1e-12)


def test_dense_unconstrained_diagonal():
    vals, _ = eigh_dense(np.diag([math.pi, -math.pi, 0.0]))
    assert np.allclose(vals, [-math.pi, 0, math.pi], atol=0)


def test_dense_reversal():
    op = weil_operator(20)
    D = op.dense()
    vals, _ = eigh_dense(D)
    neg, _ = eigh_dense(-D)
    assert np.allclose(neg, -vals[::-1], atol=1e-12 * op.norm_M)


def test_dense_residuals():
    op = weil_operator(30)
    spec = eig_dense(op, vectors=True)
    D = op.dense()
    norm = np.linalg.norm(D, 2)
    for i in range(0, spec.dimension, 7):
        v = spec.vectors[:, i]
        assert np.linalg.norm(D @ v - spec.eigenvalues[i] * v) <= 1e-9 * norm


def test_dense_kernel_vector_is_xi():
    op = weil_operator(25)
    spec = eig_dense(op, vectors=True)
    v = spec.vectors[:, spec.kernel_index]
    assert abs(abs(np.dot(v, op.xi_hat)) - 1.0) <= 1e-10
    assert np.linalg.norm(op.matvec(op.xi_hat)) <= 1e-10 * op.norm_M


def test_ql_iteration_cap():
    rng = np.random.default_rng(1)
    d = rng.normal(size=20)
    e = rng.normal(size=19)
    with pytest.raises(NumericalError) as info:
        tql_implicit(d, e, max_iter=0)
    assert info.value.stage == "eig_dense"


# -- secular path -----------------------------------------------------------


def test_secular_three_by_three():
    op = constrain_kill(np.array([-math.pi, 0.0, math.pi]), unit([1, 1, 1]))
    assert np.max(np.abs(eig_secular(op).eigenvalues - eig_dense(op).eigenvalues)) <= 1e-10


@pytest.mark.parametrize("kappa", [25, 50, 100, 200])
def test_secular_matches_dense(kappa):
    op = weil_operator(kappa)
    sec = eig_secular(op).eigenvalues
    den = eig_dense(op).eigenvalues
    assert np.max(np.abs(sec - den)) <= 1e-8 * op.norm_M


def test_secular_roots_zero_determinant():
    op = weil_operator(40)
    vals = eig_secular(op).eigenvalues
    roots = vals[np.abs(vals) > 1e-9]
    # compare against the determinant's scale next to each root
    f = secular_determinant(roots, op)
    g = secular_determinant(roots + 1e-3, op)
    assert np.all(np.abs(f) <= 1e-6 * np.abs(g))


def test_secular_deflation():
    # xi vanishes on the +-2 modes: those diagonal entries survive as exact eigenvalues
    M = np.array([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
    xi = unit([0.3, 0.0, 0.5, 0.6, 0.5, 0.0, 0.3])
    op = constrain_kill(M, xi)
    vals = eig_secular(op).eigenvalues
    assert -2.0 in vals and 2.0 in vals
    assert np.max(np.abs(vals - eig_dense(op).eigenvalues)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=2**31))
def test_secular_random_even_vectors(N, seed):
    rng = np.random.default_rng(seed)
    half = rng.uniform(0.05, 1.0, size=N + 1)
    xi = unit(np.concatenate([half[:0:-1], half]))
    op = constrain_kill(build_generator(FourierBasis(LogWindow(20.0), N)), xi)
    assert np.max(np.abs(eig_secular(op).eigenvalues - eig_dense(op).eigenvalues)) <= 1e-8 * op.norm_M


def test_secular_requires_kill_structure():
    M = np.array([1.0, 2.0])
    with pytest.raises(ValidationError):
        eig_secular(constrain_perturb(M, np.array([0.6, 0.8])))
    with pytest.raises(ValidationError):
        eig_secular(constrain_kill(np.array([0.0, 1.0, 2.0]), unit([1, 1, 1])))


def test_solve_spectrum_falls_back():
    op = constrain_kill(np.array([0.0, 1.0, 2.0]), unit([1, 1, 1]))
    spec = solve_spectrum(op, "secular")
    assert spec.fallback and spec.solver == "dense"
    assert np.allclose(spec.eigenvalues, np.linalg.eigvalsh(op.dense()), atol=1e-12)
    with pytest.raises(ValidationError):
        solve_spectrum(op, "magic")


# -- spectral invariants ----------------------------------------------------


@pytest.mark.parametrize("kappa", [10, 50])
def test_symmetry_kernel_interlacing(kappa):
    op = weil_operator(kappa)
    spec = solve_spectrum(op)
    nu = spec.eigenvalues
    mu = np.sort(op.diag)
    assert np.all(np.diff(nu) >= 0)
    assert abs(spec.nu0) <= 1e-10 * op.norm_M
    assert spec.symmetry_defect() <= 1e-9 * op.norm_M
    lower = np.concatenate([[-np.inf], mu[:-1]])
    upper = np.concatenate([mu[1:], [np.inf]])
    assert np.all(lower <= nu) and np.all(nu <= upper)


def test_spectrum_helpers():
    s = Spectrum(np.array([-2.0, -1.0, 1e-14, 1.0, 2.0]), "test")
    assert s.kernel_index == 2
    assert list(s.positive()) == [1.0, 2.0]
    assert s.symmetry_defect() == pytest.approx(1e-14)
