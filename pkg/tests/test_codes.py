"""Cat-code layer: codewords, logical operators, the Bell target, Kerr twist."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from darkbus import codes, hilbert
from darkbus.codes import LogicalBasis

DIM = 25
ALPHA = math.sqrt(2)


def test_cat_norms_formula():
    np_, nm_ = codes.cat_norms(1.0)
    e = math.exp(-2.0)
    assert np_ == pytest.approx(2 * (1 + e))
    assert nm_ == pytest.approx(2 * (1 - e))


def test_codewords_orthonormal_and_vacuum_free():
    w = LogicalBasis(ALPHA).codewords(DIM)
    assert np.linalg.norm(w.plus) == pytest.approx(1.0)
    assert np.linalg.norm(w.minus) == pytest.approx(1.0)
    assert abs(np.vdot(w.plus, w.minus)) < 1e-14
    assert w.plus[0] == 0.0  # the whole point of the modified basis
    # the odd branch never had vacuum support
    assert abs(w.minus[0]) < 1e-15


def test_codewords_small_alpha_limit():
    """As alpha -> 0 the vacuum-free even cat tends to |2> and the odd to |1>."""
    w = LogicalBasis(5e-3).codewords(8)
    assert abs(w.plus[2]) == pytest.approx(1.0, abs=1e-4)
    assert abs(w.minus[1]) == pytest.approx(1.0, abs=1e-4)


def test_codeword_parity():
    w = LogicalBasis(ALPHA).codewords(DIM)
    par = hilbert.parity(DIM)
    assert np.vdot(w.plus, par @ w.plus).real == pytest.approx(1.0)
    assert np.vdot(w.minus, par @ w.minus).real == pytest.approx(-1.0)


def test_logical_pauli_algebra():
    w = LogicalBasis(1.1).codewords(DIM)
    p = codes.logical_paulis(w)
    eye_l = p["I"]
    for s in ("X", "Y", "Z"):
        assert_allclose(p[s] @ p[s], eye_l, atol=1e-13)
        assert_allclose(p[s], p[s].conj().T, atol=1e-13)
    assert_allclose(p["X"] @ p["Z"] + p["Z"] @ p["X"], np.zeros((DIM, DIM)), atol=1e-13)
    assert_allclose(1j * p["X"] @ p["Z"], p["Y"], atol=1e-13)
    # projector property of the logical identity
    assert_allclose(eye_l @ eye_l, eye_l, atol=1e-13)
    assert np.trace(eye_l).real == pytest.approx(2.0)


def test_computational_basis_eigenstates():
    w = LogicalBasis(ALPHA).codewords(DIM)
    p = codes.logical_paulis(w)
    assert_allclose(p["Z"] @ w.zero, w.zero, atol=1e-13)
    assert_allclose(p["Z"] @ w.one, -w.one, atol=1e-13)
    assert_allclose(p["X"] @ w.plus, w.plus, atol=1e-13)


def test_ket_encoding():
    w = LogicalBasis(ALPHA).codewords(DIM)
    k = w.ket(1 / math.sqrt(2), 1j / math.sqrt(2))
    assert np.linalg.norm(k) == pytest.approx(1.0)
    p = codes.logical_paulis(w)
    assert np.vdot(k, p["Y"] @ k).real == pytest.approx(1.0)


def test_bell_state_is_singlet_in_both_bases():
    """(|01>-|10>)/sqrt(2) equals (|-+>-|+->)/sqrt(2) up to global phase."""
    w1 = LogicalBasis(ALPHA).codewords(DIM)
    w2 = LogicalBasis(ALPHA).codewords(DIM)
    bell = codes.bell_state(w1, w2)
    assert np.linalg.norm(bell) == pytest.approx(1.0)
    alt = (np.kron(w1.minus, w2.plus) - np.kron(w1.plus, w2.minus)) / math.sqrt(2)
    assert abs(np.vdot(alt, bell)) == pytest.approx(1.0, abs=1e-13)


def test_logical_density_and_leakage():
    w = LogicalBasis(ALPHA).codewords(DIM)
    rho = hilbert.as_dm(w.zero)
    rho_l, leak = codes.logical_density(rho, w)
    assert_allclose(rho_l, np.diag([1.0, 0.0]), atol=1e-13)
    assert leak == pytest.approx(0.0, abs=1e-13)
    # a Fock state far from the codespace is almost all leakage
    rho_bad = hilbert.as_dm(hilbert.fock(DIM, 0))
    _, leak_bad = codes.logical_density(rho_bad, w)
    assert leak_bad > 0.9


def test_logical_density_two_mode():
    w = LogicalBasis(ALPHA).codewords(DIM)
    bell = codes.bell_state(w, w)
    rho_l, leak = codes.logical_density(hilbert.as_dm(bell), w, w)
    singlet = np.zeros(4, dtype=complex)
    singlet[1], singlet[2] = 1 / math.sqrt(2), -1 / math.sqrt(2)
    assert_allclose(rho_l, np.outer(singlet, singlet.conj()), atol=1e-13)
    assert leak == pytest.approx(0.0, abs=1e-12)


def test_dark_bright_amplitudes():
    d, b = codes.dark_bright_amplitudes(1.0, -1.0)
    assert d == pytest.approx(math.sqrt(2))
    assert b == pytest.approx(0.0)
    d, b = codes.dark_bright_amplitudes(1.0, 1.0)
    assert d == pytest.approx(0.0)
    assert b == pytest.approx(math.sqrt(2))


def test_initial_protocol_ket():
    sp = hilbert.HilbertSpace((16, 4, 16), ("cav1", "bus", "cav2"))
    psi = codes.initial_protocol_ket(sp, ALPHA)
    assert psi.trace == pytest.approx(1.0)
    # bus starts empty
    nb = hilbert.embed(sp, {"bus": hilbert.number(4)})
    assert hilbert.expect(nb, psi).real == pytest.approx(0.0, abs=1e-12)
    # each cavity holds |alpha|^2 photons on average (cross terms cancel:
    # <a+a> over |a> + i|-a> has no interference in the number operator)
    n1 = hilbert.embed(sp, {"cav1": hilbert.number(16)})
    assert hilbert.expect(n1, psi).real == pytest.approx(ALPHA**2, abs=1e-6)


def test_kerr_absorption_identity():
    """Free Kerr evolution is exactly undone by the matching basis twist.

    Evolve codewords under e^{-i 2pi K t n(n-1)/2}, then decode in the basis
    twisted by kerr_twist_angle(K, t): fidelity must return to 1.
    """
    kerr_hz, t = -23e3, 3.7e-6
    base = LogicalBasis(1.2)
    w = base.codewords(DIM)
    u = codes.kerr_unitary(DIM, kerr_hz, t)
    evolved = u @ w.ket(0.6, 0.8j)

    theta = codes.kerr_twist_angle(kerr_hz, t)
    w_twisted = base.with_(theta_k=theta).codewords(DIM)
    target = w_twisted.ket(0.6, 0.8j)
    assert abs(np.vdot(target, evolved)) ** 2 == pytest.approx(1.0, abs=1e-9)
    # and the untwisted basis really does see infidelity, so the identity
    # is not vacuously true
    naive = w.ket(0.6, 0.8j)
    assert abs(np.vdot(naive, evolved)) ** 2 < 0.999


def test_basis_with_rotation():
    w0 = LogicalBasis(1.0).codewords(DIM)
    wr = LogicalBasis(1.0, theta_r=0.4).codewords(DIM)
    n = np.arange(DIM)
    rot = np.exp(1j * 0.4 * n)
    assert_allclose(wr.plus, rot * w0.plus, atol=1e-14)


def test_codewords_invalid():
    with pytest.raises(ValueError):
        codes.codewords(LogicalBasis(0.0), 8)
