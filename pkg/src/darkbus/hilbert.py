"""Truncated-Fock-space primitives shared by every other layer of the package.

Conventions used throughout:

* a "mode" is a harmonic oscillator truncated to ``dim`` Fock levels,
* multi-mode spaces are Kronecker products in label order,
* kets are 1-d complex arrays, density matrices 2-d complex arrays,
* operators act inside the truncated space; population pushed against the
  truncation edge is silently lost by the dynamics, so :func:`edge_population`
  exists to make that visible.

Nothing in here knows about buses, cats or heralding -- it is plain linear
algebra on numpy arrays, with a couple of thin dataclass wrappers so that
states and operators carry their mode structure around with them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.linalg
import scipy.sparse


class NumericalError(RuntimeError):
    """Raised when an iteration diverges or produces non-finite numbers."""


# ---------------------------------------------------------------------------
# spaces, states, operators
# ---------------------------------------------------------------------------


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(f"mode{i}" for i in range(n))


@dataclass(frozen=True)
class HilbertSpace:
    """Tensor product of truncated oscillator modes.

    Parameters
    ----------
    dims:
        Fock truncation of each mode, in tensor order.
    labels:
        Human-readable mode names ("cav1", "bus", ...).  Defaults to
        ``mode0, mode1, ...``.
    """

    dims: tuple[int, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims or any(d < 2 for d in dims):
            raise ValueError(f"every mode needs dim >= 2, got {dims}")
        labels = tuple(self.labels) or _default_labels(len(dims))
        if len(labels) != len(dims):
            raise ValueError("need one label per mode")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate mode labels: {labels}")
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no mode {label!r} in {self.labels}") from None

    def subspace(self, keep: tuple[str, ...]) -> "HilbertSpace":
        axes = [self.axis(lb) for lb in keep]
        return HilbertSpace(tuple(self.dims[a] for a in axes), tuple(keep))

    def identity(self, sparse: bool = False):
        if sparse:
            return scipy.sparse.identity(self.dim, dtype=complex, format="csr")
        return np.eye(self.dim, dtype=complex)


def make_space(dims, labels=()) -> HilbertSpace:
    """Convenience constructor, accepts any iterables."""
    return HilbertSpace(tuple(dims), tuple(labels))


@dataclass
class QuantumState:
    """A ket (1-d) or density matrix (2-d) together with its mode structure."""

    data: np.ndarray
    space: HilbertSpace

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim not in (1, 2):
            raise ValueError("state must be a ket (1-d) or density matrix (2-d)")
        if self.data.shape[0] != self.space.dim:
            raise ValueError(
                f"state of dim {self.data.shape[0]} does not fit space of dim {self.space.dim}"
            )

    @property
    def is_ket(self) -> bool:
        return self.data.ndim == 1

    def dm(self) -> np.ndarray:
        """Dense density matrix regardless of the underlying representation."""
        if self.is_ket:
            return np.outer(self.data, self.data.conj())
        return self.data

    @property
    def trace(self) -> float:
        if self.is_ket:
            return float(np.vdot(self.data, self.data).real)
        return float(np.trace(self.data).real)

    def normalized(self) -> "QuantumState":
        tr = self.trace
        if tr <= 0:
            raise NumericalError("cannot normalize a state with non-positive norm")
        scale = 1.0 / math.sqrt(tr) if self.is_ket else 1.0 / tr
        return QuantumState(self.data * scale, self.space)

    def expect(self, op) -> complex:
        return expect(op, self)

    def ptrace(self, keep) -> "QuantumState":
        """Reduced state on the modes named in ``keep`` (order respected)."""
        keep = (keep,) if isinstance(keep, str) else tuple(keep)
        axes = [self.space.axis(lb) for lb in keep]
        rho = partial_trace(self.dm(), self.space.dims, axes)
        return QuantumState(rho, self.space.subspace(keep))


@dataclass
class Operator:
    """Matrix + space.  ``matrix`` may be dense or any scipy.sparse format."""

    matrix: object
    space: HilbertSpace

    @property
    def is_sparse(self) -> bool:
        return scipy.sparse.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self.matrix.todense(), dtype=complex)
        return np.asarray(self.matrix, dtype=complex)

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.space)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self.matrix @ other.matrix, self.space)
        return self.matrix @ other

    def __add__(self, other):
        other_m = other.matrix if isinstance(other, Operator) else other
        return Operator(self.matrix + other_m, self.space)

    def __sub__(self, other):
        other_m = other.matrix if isinstance(other, Operator) else other
        return Operator(self.matrix - other_m, self.space)

    def __mul__(self, scalar):
        return Operator(self.matrix * scalar, self.space)

    __rmul__ = __mul__


def as_matrix(op):
    """Accept an Operator, ndarray or sparse matrix; hand back the raw matrix."""
    return op.matrix if isinstance(op, Operator) else op


def as_dm(state) -> np.ndarray:
    """Accept a QuantumState, ket or density matrix; hand back a dense dm."""
    if isinstance(state, QuantumState):
        return state.dm()
    arr = np.asarray(state, dtype=complex)
    return np.outer(arr, arr.conj()) if arr.ndim == 1 else arr


# ---------------------------------------------------------------------------
# single-mode building blocks
# ---------------------------------------------------------------------------


def destroy(dim: int) -> np.ndarray:
    """Lowering operator a with <n-1|a|n> = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def create(dim: int) -> np.ndarray:
    return destroy(dim).conj().T


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def fock(dim: int, n: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise ValueError(f"Fock level {n} outside truncation {dim}")
    ket = np.zeros(dim, dtype=complex)
    ket[n] = 1.0
    return ket


def parity(dim: int) -> np.ndarray:
    """Photon-number parity (-1)^n."""
    return np.diag((-1.0) ** np.arange(dim)).astype(complex)


def displacement(dim: int, beta: complex) -> np.ndarray:
    """D(beta) = expm(beta a† - beta* a) in the truncated space.

    Exact only well below the truncation edge; callers that need displaced
    operators at large |beta| should build them in a padded space and cut
    back (see tomography._displaced_parity_stack).
    """
    a = destroy(dim)
    return scipy.linalg.expm(beta * a.conj().T - np.conj(beta) * a)


def coherent(dim: int, alpha: complex, normalized: bool = True) -> np.ndarray:
    """Coherent state amplitudes e^{-|a|^2/2} alpha^n / sqrt(n!).

    With ``normalized=False`` the amplitudes are the exact projection of the
    infinite-dimensional state onto the truncated space (norm < 1); this is
    what the exact coherent-superposition engine wants.  The default
    renormalizes inside the truncation, which is what state preparation wants.
    """
    if alpha == 0:
        return fock(dim, 0)
    n = np.arange(dim)
    # log-space to stay finite for large alpha and dim
    logmag = -abs(alpha) ** 2 / 2 + n * np.log(abs(alpha))
    log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, dim)))))
    amp = np.exp(logmag - log_fact / 2) * np.exp(1j * n * np.angle(alpha))
    if normalized:
        amp = amp / np.linalg.norm(amp)
    return amp.astype(complex)


def cat(dim: int, alpha: complex, phase: float = 0.0) -> np.ndarray:
    """Normalized superposition |alpha> + e^{i phase} |-alpha>."""
    ket = coherent(dim, alpha, normalized=False) + np.exp(1j * phase) * coherent(
        dim, -alpha, normalized=False
    )
    nrm = np.linalg.norm(ket)
    if nrm < 1e-12:
        raise ValueError("cat state vanished (alpha=0 with phase=pi?)")
    return ket / nrm


def amplitude_damp(rho: np.ndarray, gamma: float) -> np.ndarray:
    """Single-mode amplitude damping channel with loss probability ``gamma``.

    Kraus form: K_k = sum_n sqrt(C(n,k)) (1-gamma)^{(n-k)/2} gamma^{k/2} |n-k><n|.
    A coherent state |a> maps to |a sqrt(1-gamma)>.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must be in [0, 1]")
    out = np.zeros_like(rho)
    n = np.arange(dim)
    for k in range(dim):
        keep = n >= k
        m = n[keep] - k
        coeff = np.sqrt(
            np.array([math.comb(int(nn), k) for nn in n[keep]], dtype=float)
            * (1 - gamma) ** m.astype(float)
            * gamma**k
        )
        kmat = np.zeros((dim, dim))
        kmat[m, n[keep]] = coeff
        out += kmat @ rho @ kmat.T
    return out


# ---------------------------------------------------------------------------
# multi-mode assembly
# ---------------------------------------------------------------------------


def tensor(*mats):
    """Kronecker product, staying sparse if any factor is sparse."""
    if any(scipy.sparse.issparse(m) for m in mats):
        mats = [
            m if scipy.sparse.issparse(m) else scipy.sparse.csr_matrix(m) for m in mats
        ]
        return reduce(lambda a, b: scipy.sparse.kron(a, b, format="csr"), mats)
    return reduce(np.kron, mats)


def embed(space: HilbertSpace, parts: dict, sparse: bool = False) -> Operator:
    """Lift per-mode matrices into the full space.

    ``parts`` maps mode label -> single-mode matrix; every unnamed mode gets
    the identity.  With ``sparse=True`` the result is CSR, which is what the
    integrator wants for large spaces.
    """
    factors = []
    for lb, d in zip(space.labels, space.dims):
        if lb in parts:
            m = parts[lb]
            if m.shape != (d, d):
                raise ValueError(f"matrix for {lb!r} has shape {m.shape}, expected {(d, d)}")
            factors.append(scipy.sparse.csr_matrix(m) if sparse else m)
        else:
            factors.append(
                scipy.sparse.identity(d, dtype=complex, format="csr")
                if sparse
                else np.eye(d, dtype=complex)
            )
    unknown = set(parts) - set(space.labels)
    if unknown:
        raise KeyError(f"labels {unknown} not in space {space.labels}")
    return Operator(tensor(*factors), space)


def product_ket(space: HilbertSpace, kets: dict) -> QuantumState:
    """Tensor product ket from per-mode kets; unnamed modes start in vacuum."""
    factors = []
    for lb, d in zip(space.labels, space.dims):
        factors.append(np.asarray(kets.get(lb, fock(d, 0)), dtype=complex))
    return QuantumState(reduce(np.kron, factors), space)


def partial_trace(rho: np.ndarray, dims, keep) -> np.ndarray:
    """Trace out every mode not listed in ``keep`` (axis indices)."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    rho = np.asarray(rho).reshape(dims + dims)
    idx_ket = list(range(n))
    idx_bra = list(range(n, 2 * n))
    for i in range(n):
        if i not in keep:
            idx_bra[i] = idx_ket[i]  # contract this pair
    out = [idx_ket[i] for i in keep] + [idx_bra[i] for i in keep]
    reduced = np.einsum(rho, idx_ket + idx_bra, out)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return reduced.reshape(d, d)


def expect(op, state) -> complex:
    """<op> = Tr(op rho), returned as a complex number."""
    mat = as_matrix(op)
    if isinstance(state, QuantumState) and state.is_ket:
        return complex(np.vdot(state.data, mat @ state.data))
    rho = as_dm(state)
    if scipy.sparse.issparse(mat):
        return complex((mat @ rho).diagonal().sum())
    return complex(np.einsum("ij,ji->", mat, rho))


# ---------------------------------------------------------------------------
# comparisons
# ---------------------------------------------------------------------------


def overlap(a, b) -> complex:
    """<a|b> for kets."""
    av = a.data if isinstance(a, QuantumState) else np.asarray(a)
    bv = b.data if isinstance(b, QuantumState) else np.asarray(b)
    return complex(np.vdot(av, bv))


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(a, b) -> float:
    """State fidelity, squared-overlap convention: F(pure, pure) = |<a|b>|^2.

    For two density matrices this is the Uhlmann fidelity
    (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
    """
    a_ket = isinstance(a, QuantumState) and a.is_ket or (
        not isinstance(a, QuantumState) and np.asarray(a).ndim == 1
    )
    b_ket = isinstance(b, QuantumState) and b.is_ket or (
        not isinstance(b, QuantumState) and np.asarray(b).ndim == 1
    )
    if a_ket and b_ket:
        return float(abs(overlap(a, b)) ** 2)
    if a_ket or b_ket:
        ket, rho = (a, b) if a_ket else (b, a)
        kv = ket.data if isinstance(ket, QuantumState) else np.asarray(ket)
        return float(np.real(np.vdot(kv, as_dm(rho) @ kv)))
    ra, rb = as_dm(a), as_dm(b)
    sq = _psd_sqrt(ra)
    inner = _psd_sqrt(sq @ rb @ sq)
    return float(np.real(np.trace(inner)) ** 2)


def trace_distance(a, b) -> float:
    """T(rho, sigma) = (1/2) ||rho - sigma||_1."""
    diff = as_dm(a) - as_dm(b)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def purity(state) -> float:
    rho = as_dm(state)
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


# ---------------------------------------------------------------------------
# truncation bookkeeping
# ---------------------------------------------------------------------------


def edge_population(state, n_levels: int = 1) -> dict:
    """Population in the top ``n_levels`` Fock levels of each mode.

    This is the honest diagnostic for "was the truncation big enough":
    anything much above float noise means amplitude is piling up against
    the edge and the simulation is quietly lossy.
    """
    if not isinstance(state, QuantumState):
        raise TypeError("edge_population needs a QuantumState (mode structure)")
    out = {}
    for lb in state.space.labels:
        reduced = state.ptrace(lb)
        pops = np.real(np.diag(reduced.dm()))
        out[lb] = float(pops[-n_levels:].sum())
    return out


def suggest_dim(alpha: float, tol: float = 1e-9) -> int:
    """Smallest truncation keeping a coherent state's tail mass below tol."""
    lam = abs(alpha) ** 2
    if lam == 0:
        return 2
    term = math.exp(-lam)
    cum = term
    n = 0
    while 1 - cum > tol and n < 10_000:
        n += 1
        term *= lam / n
        cum += term
    return n + 1
