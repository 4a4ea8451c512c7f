"""Cat-code logical qubits with a vacuum-free plus codeword.

The code used throughout the package encodes one qubit in superpositions of
coherent states of a single cavity:

    |+>_L  ~  (1 - |0><0|) (|alpha> + |-alpha>)        (vacuum removed)
    |->_L  ~  |alpha> - |-alpha>                       (no vacuum anyway)

Removing the vacuum from the even branch is what lets a projective
"is the cavity empty?" check herald entanglement without destroying it.
As alpha -> 0 the codewords collapse onto the Fock states |2> and |1>.

|+->_L are eigenstates of the logical X (they carry definite photon parity),
so the computational basis is |0/1>_L = (|+>_L ± |->_L)/sqrt(2) and

    X_L = |+><+| - |-><-| ,   Z_L = |+><-| + |-><+| ,   Y_L = i X_L Z_L .

An analysis basis may additionally carry a Kerr twist and a rotation,

    |±>_L(alpha, th_k, th_r) ~ e^{i th_r n} e^{i (th_k/2) n(n-1)} [Pi_novac] (|alpha> ± |-alpha>),

which is how self-Kerr evolution and frame rotations accumulated between
preparation and readout get absorbed into the decoding instead of being
counted as infidelity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import hilbert
from .hilbert import HilbertSpace, QuantumState


@dataclass(frozen=True)
class LogicalBasis:
    """Parameters of the single-cavity cat-code analysis basis."""

    alpha: float
    theta_k: float = 0.0  # Kerr twist angle, applied as e^{i (theta_k/2) n(n-1)}
    theta_r: float = 0.0  # linear rotation angle, applied as e^{i theta_r n}

    def with_(self, **kw) -> "LogicalBasis":
        return replace(self, **kw)

    def codewords(self, dim: int) -> "Codewords":
        return codewords(self, dim)


@dataclass(frozen=True)
class Codewords:
    """Normalized codeword kets of a :class:`LogicalBasis` at a truncation."""

    plus: np.ndarray
    minus: np.ndarray
    basis: LogicalBasis
    dim: int

    @property
    def zero(self) -> np.ndarray:
        return (self.plus + self.minus) / math.sqrt(2)

    @property
    def one(self) -> np.ndarray:
        return (self.plus - self.minus) / math.sqrt(2)

    def ket(self, c0: complex, c1: complex) -> np.ndarray:
        """Encoded qubit c0|0>_L + c1|1>_L (normalized)."""
        v = c0 * self.zero + c1 * self.one
        return v / np.linalg.norm(v)


def cat_norms(alpha: float) -> tuple[float, float]:
    """Squared norms of |alpha> ± |-alpha>: N± = 2 (1 ± e^{-2|alpha|^2})."""
    e = math.exp(-2 * abs(alpha) ** 2)
    return 2 * (1 + e), 2 * (1 - e)


def codewords(basis: LogicalBasis, dim: int) -> Codewords:
    """Build the codeword kets at truncation ``dim``."""
    a = basis.alpha
    raw_p = hilbert.coherent(dim, a, normalized=False) + hilbert.coherent(
        dim, -a, normalized=False
    )
    raw_p[0] = 0.0  # vacuum removal on the even branch
    raw_m = hilbert.coherent(dim, a, normalized=False) - hilbert.coherent(
        dim, -a, normalized=False
    )
    n = np.arange(dim)
    twist = np.exp(1j * basis.theta_r * n + 1j * basis.theta_k / 2 * n * (n - 1))
    plus = twist * raw_p
    minus = twist * raw_m
    np_, nm_ = np.linalg.norm(plus), np.linalg.norm(minus)
    if np_ == 0 or nm_ == 0:
        raise ValueError(f"codewords vanish at alpha={a}")
    return Codewords(plus / np_, minus / nm_, basis, dim)


def logical_paulis(words: Codewords) -> dict:
    """Logical operators as dim x dim matrices, zero outside the codespace.

    'I' is the codespace projector, so Tr(rho @ paulis['I']) < 1 measures
    leakage out of the code.
    """
    p, m = words.plus, words.minus
    pp = np.outer(p, p.conj())
    mm = np.outer(m, m.conj())
    pm = np.outer(p, m.conj())
    x = pp - mm
    z = pm + pm.conj().T
    return {"I": pp + mm, "X": x, "Z": z, "Y": 1j * x @ z}


def logical_density(rho, words1: Codewords, words2: Codewords | None = None):
    """Project a one- or two-cavity density matrix into the logical basis.

    Returns ``(rho_L, leakage)`` where rho_L is 2x2 (one cavity) or 4x4
    (two cavities) in the |0>_L, |1>_L basis and ``leakage`` is the weight
    outside the codespace.  rho_L is *not* renormalized.
    """
    rho = hilbert.as_dm(rho)
    if words2 is None:
        basis_kets = [words1.zero, words1.one]
    else:
        basis_kets = [
            np.kron(a, b)
            for a in (words1.zero, words1.one)
            for b in (words2.zero, words2.one)
        ]
    v = np.column_stack(basis_kets)
    rho_l = v.conj().T @ rho @ v
    leakage = float(np.real(np.trace(rho)) - np.real(np.trace(rho_l)))
    return rho_l, leakage


def bell_state(words1: Codewords, words2: Codewords) -> np.ndarray:
    """The antisymmetric logical Bell ket (|0 1> - |1 0>)/sqrt(2), as a
    two-cavity Fock ket.  This is the state the heralded protocol targets;
    being the singlet it looks the same in the |±>_L basis."""
    ket = np.kron(words1.zero, words2.one) - np.kron(words1.one, words2.zero)
    return ket / np.linalg.norm(ket)


def dark_bright_amplitudes(alpha1: complex, alpha2: complex) -> tuple[complex, complex]:
    """Symmetric/antisymmetric combinations of two cavity amplitudes.

    dark = (a1 - a2)/sqrt(2) stays decoupled from the shared bus;
    bright = (a1 + a2)/sqrt(2) couples with sqrt(2) enhanced strength.
    """
    s = 1 / math.sqrt(2)
    return (alpha1 - alpha2) * s, (alpha1 + alpha2) * s


def initial_protocol_ket(space: HilbertSpace, alpha: float) -> QuantumState:
    """Pre-dump product state (|a> + i|-a>)_1 |0>_bus (|a> - i|-a>)_2.

    The relative phases put half the weight on pure-dark coherent components
    and half on pure-bright ones, which is what makes the post-dump vacuum
    check a 50/50 entanglement herald.
    """
    d1 = space.dims[space.axis("cav1")]
    d2 = space.dims[space.axis("cav2")]
    k1 = hilbert.coherent(d1, alpha, normalized=False) + 1j * hilbert.coherent(
        d1, -alpha, normalized=False
    )
    k2 = hilbert.coherent(d2, alpha, normalized=False) - 1j * hilbert.coherent(
        d2, -alpha, normalized=False
    )
    state = hilbert.product_ket(space, {"cav1": k1, "cav2": k2})
    return state.normalized()


def kerr_twist_angle(kerr_hz: float, t: float) -> float:
    """Analysis-basis Kerr angle that absorbs free Kerr evolution for time t.

    Self-Kerr evolution is e^{-i pi K t n(n-1)} for a Kerr constant quoted in
    Hz (K = kerr_hz, typically negative), i.e. angle -2 pi kerr_hz t in the
    e^{+i (theta_k/2) n(n-1)} convention of :class:`LogicalBasis`.
    """
    return -2 * math.pi * kerr_hz * t


def kerr_unitary(dim: int, kerr_hz: float, t: float) -> np.ndarray:
    """Diagonal free-Kerr propagator exp(-i 2 pi K t n(n-1)/2) on one mode."""
    n = np.arange(dim)
    return np.diag(np.exp(-1j * 2 * math.pi * kerr_hz * t / 2 * n * (n - 1)))
