"""Wigner tomography of the heralded cavity states.

The measurement primitive is displaced parity: displace by beta, measure
photon parity; the mean signal is W(beta) = Tr[D(2 beta) P D(2 beta)^dag rho]
which lives in [-1, 1] (no 2/pi prefactor -- the maps stay directly
comparable to raw parity contrast).  Everything downstream consumes the
hermitian kernel M(beta) = D(2 beta) P.

Kernels are built by exponentiating the displacement generator in a padded
Fock space and truncating back, with the separable split
D(2x + 2iy) = e^{4ixy} D(2x) D(2iy) so a whole rectangular grid costs one
1-D expm per axis value instead of one 2-D expm per point.  Padding is
generous enough that the retained block is exact to ~1e-14 (tests double it
and compare).

Reconstruction is maximum likelihood: diluted R rho R iterations under a
binomial likelihood when shot counts are available, a PSD-preserving
projected gradient on the least-squares surface when only noiseless maps
are.  Logical-level analysis (Pauli correlations, two-qubit inversion,
basis fitting) lives at the bottom of the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from . import codes, hilbert
from .codes import Codewords, LogicalBasis

PAULI_LABELS = ("I", "X", "Y", "Z")
_PAULI_2 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


# ---------------------------------------------------------------------------
# grids and kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WignerGrid:
    """Rectangular grid of phase-space points beta = re + i im."""

    re_beta: np.ndarray
    im_beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "re_beta", np.atleast_1d(np.asarray(self.re_beta, float)))
        object.__setattr__(self, "im_beta", np.atleast_1d(np.asarray(self.im_beta, float)))

    @classmethod
    def default(cls, extent: float = 2.0, step: float = 0.1) -> "WignerGrid":
        n = int(round(2 * extent / step)) + 1
        ax = np.linspace(-extent, extent, n)
        return cls(ax, ax.copy())

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.re_beta), len(self.im_beta)

    @property
    def betas(self) -> np.ndarray:
        """Complex points, re index fastest-varying last (C order of shape)."""
        return (self.re_beta[:, None] + 1j * self.im_beta[None, :]).ravel()


def _pad_dim(dim: int, beta_max: float) -> int:
    # D(2b) routes population up to ~|2b|^2 photons (plus spread) through the
    # intermediate separable displacements; pad generously past that.
    return dim + int(math.ceil(4 * beta_max**2 + 12 * beta_max)) + 16


_KERNEL_CACHE: dict = {}


def displaced_parity(dim: int, beta: complex, pad: int | None = None) -> np.ndarray:
    """The hermitian kernel M(beta) = D(2 beta) P truncated to dim."""
    return _kernel_stack(dim, np.array([beta]), pad)[0]


def _kernel_stack(dim: int, betas: np.ndarray, pad: int | None = None) -> np.ndarray:
    """Stack of M(beta) kernels, shape (len(betas), dim, dim), cached."""
    betas = np.asarray(betas, dtype=complex)
    d_pad = pad if pad is not None else _pad_dim(dim, float(np.max(np.abs(betas))) if betas.size else 0.0)
    key = (dim, d_pad, betas.tobytes())
    hit = _KERNEL_CACHE.get(key)
    if hit is not None:
        return hit

    a = hilbert.destroy(d_pad)
    gen_re = a.conj().T - a          # expm(x * gen_re) = D(x)
    gen_im = 1j * (a.conj().T + a)   # expm(y * gen_im) = D(iy)
    xs = np.unique(betas.real)
    ys = np.unique(betas.imag)
    dx = {x: expm(2 * x * gen_re) for x in xs}
    dy = {y: expm(2 * y * gen_im) for y in ys}
    par = (-1.0) ** np.arange(d_pad)

    out = np.empty((len(betas), dim, dim), dtype=complex)
    for k, b in enumerate(betas):
        x, y = b.real, b.imag
        # D(2x) D(2iy) = e^{-4ixy} D(2b)
        m = np.exp(4j * x * y) * (dx[x] @ (dy[y] * par[None, :]))
        out[k] = m[:dim, :dim]
    _KERNEL_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# forward maps
# ---------------------------------------------------------------------------


def wigner_map(state, grid: WignerGrid | None = None, pad: int | None = None) -> np.ndarray:
    """Parity-contrast Wigner map of a single-mode state on a grid."""
    grid = grid or WignerGrid.default()
    rho = hilbert.as_dm(state)
    ops = _kernel_stack(rho.shape[0], grid.betas, pad)
    w = np.einsum("kij,ji->k", ops, rho).real
    return w.reshape(grid.shape)


def joint_wigner(
    state, betas1, betas2, dims: tuple[int, int] | None = None, pad: int | None = None
) -> np.ndarray:
    """Two-mode joint parity map W(b1, b2), shape (len(betas1), len(betas2)).

    The two displacement axes are independent 1-D arrays of complex points
    (sweep lines, not necessarily a full grid): the interesting structure of
    the Bell pair lives on cuts.
    """
    rho = hilbert.as_dm(state)
    betas1 = np.atleast_1d(np.asarray(betas1, complex))
    betas2 = np.atleast_1d(np.asarray(betas2, complex))
    if dims is None:
        d1 = int(round(math.sqrt(rho.shape[0])))
        if d1 * d1 != rho.shape[0]:
            raise ValueError("cannot infer unequal cavity truncations; pass dims")
        dims = (d1, d1)
    d1, d2 = dims
    m1 = _kernel_stack(d1, betas1, pad)
    m2 = _kernel_stack(d2, betas2, pad)
    rho4 = rho.reshape(d1, d2, d1, d2)
    return np.einsum("ijkl,aki,blj->ab", rho4, m1, m2).real


def simulate_readout(w: np.ndarray, epsilon_g: float = 0.0, epsilon_e: float = 0.0) -> np.ndarray:
    """Parity signal after asymmetric assignment errors.

    A +1 shot is misrecorded with probability epsilon_g, a -1 shot with
    epsilon_e; the mean picks up a contrast factor and a constant bias.
    """
    return (1 - epsilon_g - epsilon_e) * w + (epsilon_e - epsilon_g)


def symmetrize(w_plus: np.ndarray, w_minus: np.ndarray) -> np.ndarray:
    """Difference map from preparing the parity-flipped partner state.

    Readout bias is common mode between the two preparations and cancels
    identically; the contrast scale survives and is fit downstream.
    """
    return 0.5 * (np.asarray(w_plus) - np.asarray(w_minus))


def symmetrize_joint(w_pp, w_pm, w_mp, w_mm) -> np.ndarray:
    """Four-preparation symmetrization of a joint map (both biases cancel)."""
    return 0.25 * (np.asarray(w_pp) - np.asarray(w_pm) - np.asarray(w_mp) + np.asarray(w_mm))


def sample_counts(w: np.ndarray, shots: int, seed: int | None = None) -> np.ndarray:
    """Binomial shot counts of +1 parity outcomes for each grid point."""
    w = np.asarray(w, float)
    if np.any(np.abs(w) > 1 + 1e-9):
        raise ValueError("parity signal outside [-1, 1]; not a physical Wigner map here")
    p = np.clip((1 + w) / 2, 0.0, 1.0)
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.binomial(shots, p)


# ---------------------------------------------------------------------------
# flat-file format shared with the command line tools
# ---------------------------------------------------------------------------


@dataclass
class WignerData:
    """One tomography data set: grid points, values, optionally shot counts."""

    re_beta: np.ndarray
    im_beta: np.ndarray
    value: np.ndarray
    shots: np.ndarray | None = None
    counts: np.ndarray | None = None

    @classmethod
    def from_map(cls, grid: WignerGrid, w: np.ndarray, shots=None, counts=None) -> "WignerData":
        b = grid.betas
        flat = np.asarray(w).ravel()
        return cls(
            re_beta=b.real.copy(),
            im_beta=b.imag.copy(),
            value=flat,
            shots=None if shots is None else np.broadcast_to(shots, flat.shape).copy(),
            counts=None if counts is None else np.asarray(counts).ravel(),
        )

    def save_csv(self, path) -> None:
        cols = [self.re_beta, self.im_beta, self.value]
        header = "re_beta,im_beta,value"
        if self.counts is not None:
            if self.shots is None:
                raise ValueError("counts without shots")
            cols += [self.shots, self.counts]
            header += ",shots,counts"
        with open(path, "w") as f:
            f.write(header + "\n")
            for row in zip(*cols):
                f.write(",".join(f"{float(x)!r}" for x in row) + "\n")

    @classmethod
    def load_csv(cls, path) -> "WignerData":
        with open(path) as f:
            header = f.readline().strip().split(",")
            data = np.loadtxt(f, delimiter=",", ndmin=2)
        cols = {name: data[:, k] for k, name in enumerate(header)}
        for need in ("re_beta", "im_beta", "value"):
            if need not in cols:
                raise ValueError(f"missing column {need!r} in {path}")
        return cls(
            re_beta=cols["re_beta"],
            im_beta=cols["im_beta"],
            value=cols["value"],
            shots=cols.get("shots"),
            counts=cols.get("counts"),
        )

    @property
    def betas(self) -> np.ndarray:
        return self.re_beta + 1j * self.im_beta


# ---------------------------------------------------------------------------
# maximum-likelihood reconstruction
# ---------------------------------------------------------------------------


@dataclass
class MleResult:
    rho: np.ndarray
    converged: bool
    n_iter: int
    rms_residual: float
    loglik: float


def _binomial_loglik(p, counts, shots):
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float(np.sum(counts * np.log(p) + (shots - counts) * np.log1p(-p)))


def mle_density(
    data: WignerData,
    dim: int,
    pad: int | None = None,
    max_iter: int = 2000,
    tol: float = 1e-10,
) -> MleResult:
    """Reconstruct a single-mode density matrix from displaced-parity data.

    With shot counts: diluted R rho R fixed-point iteration on the binomial
    likelihood (each kernel splits into the +/- parity POVM pair).  Without
    counts: PSD-preserving projected gradient descent on the squared misfit.
    Both start from the maximally mixed state and adapt their step by
    halving whenever the objective fails to improve; the result is flagged
    unconverged (rather than raised) at the iteration cap since a good-enough
    state at the cap is still useful.
    """
    ops = _kernel_stack(dim, data.betas, pad)
    eye = np.eye(dim, dtype=complex)
    rho = eye / dim

    have_counts = data.counts is not None
    if have_counts:
        counts = np.asarray(data.counts, float)
        shots = np.asarray(data.shots, float)
        w_obs = 2 * counts / shots - 1
    else:
        w_obs = np.asarray(data.value, float)

    def predicted(r):
        return np.einsum("kij,ji->k", ops, r).real

    if have_counts:
        obj = _binomial_loglik((1 + predicted(rho)) / 2, counts, shots)
    else:
        obj = -float(np.sum((predicted(rho) - w_obs) ** 2))

    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w_pred = predicted(rho)
        if have_counts:
            p = np.clip((1 + w_pred) / 2, 1e-12, 1 - 1e-12)
            # R = sum_k [ c/p * E+ + (n-c)/(1-p) * E- ],  E+- = (I +- M)/2
            c_plus = counts / p
            c_minus = (shots - counts) / (1 - p)
            r_op = 0.5 * (
                float(np.sum(c_plus + c_minus)) * eye
                + np.einsum("k,kij->ij", c_plus - c_minus, ops)
            )
            r_op /= float(np.sum(shots))
            g = step * r_op + (1 - step) * eye
        else:
            grad = np.einsum("k,kij->ij", w_obs - w_pred, ops)
            scale = np.linalg.norm(grad)
            g = eye + (step / scale) * grad if scale > 0 else eye

        cand = g @ rho @ g.conj().T
        cand = 0.5 * (cand + cand.conj().T)
        cand /= np.real(np.trace(cand))
        if have_counts:
            new_obj = _binomial_loglik((1 + predicted(cand)) / 2, counts, shots)
        else:
            new_obj = -float(np.sum((predicted(cand) - w_obs) ** 2))

        if new_obj >= obj - 1e-15:
            improved = new_obj - obj
            rho, obj = cand, new_obj
            if improved < tol * (1 + abs(obj)):
                converged = True
                break
        else:
            step /= 2
            if step < 1e-8:
                converged = True  # step exhausted: fixed point to working precision
                break

    resid = predicted(rho) - w_obs
    loglik = obj if have_counts else math.nan
    return MleResult(
        rho=rho,
        converged=converged,
        n_iter=it,
        rms_residual=float(np.sqrt(np.mean(resid**2))),
        loglik=loglik,
    )


# ---------------------------------------------------------------------------
# logical-level analysis
# ---------------------------------------------------------------------------


def conditional_decomposition(state, meas_ops: dict, dims: tuple[int, int]) -> dict:
    """Split a two-mode state by a measurement on mode 2.

    meas_ops maps outcome name -> POVM element on mode 2; returns
    outcome -> (probability, unnormalized mode-1 density matrix).  Tracing
    the measured mode with the POVM element inserted is exactly the
    unnormalized conditional state of the kept mode.
    """
    rho = hilbert.as_dm(state)
    d1, d2 = dims
    rho4 = rho.reshape(d1, d2, d1, d2)
    out = {}
    for name, m in meas_ops.items():
        rho1 = np.einsum("ijkl,lj->ik", rho4, np.asarray(m, complex))
        out[name] = (float(np.real(np.trace(rho1))), rho1)
    return out


def _logical_meas_ops(words: Codewords, which: str):
    """+/- measurement pair for one logical Pauli, plus-eigenvector first.

    The pair sums to the codespace projector, not the identity: leaked
    population is post-selected away so that the correlation table's
    identity slots measure codespace weight.  (The teleport decoder makes
    the opposite choice -- a fair coin -- because it must emit a bit.)
    """
    paulis = codes.logical_paulis(words)
    proj = paulis["I"]
    plus = 0.5 * (proj + paulis[which])
    minus = 0.5 * (proj - paulis[which])
    return plus, minus


def pauli_correlations(
    state, words1: Codewords, words2: Codewords, route: str = "measurement"
) -> np.ndarray:
    """4x4 table T[i, j] = <sigma_i x sigma_j> over (I, X, Y, Z).

    The identity slot is the codespace projector, so T[0, 0] < 1 measures
    leakage and nothing here renormalizes it away.

    route="measurement" mimics the experiment: decode mode 2 along sigma_j,
    then evaluate sigma_i on the conditional mode-1 states (mode-2 identity
    entries average the three decode bases; by construction they agree).
    route="direct" contracts the operators in one shot; the two agree to
    machine precision and the tests hold them to that.
    """
    rho = hilbert.as_dm(state)
    d1, d2 = words1.dim, words2.dim
    p1 = codes.logical_paulis(words1)
    p2 = codes.logical_paulis(words2)
    t = np.zeros((4, 4))

    if route == "direct":
        rho4 = rho.reshape(d1, d2, d1, d2)
        for i, si in enumerate(PAULI_LABELS):
            for j, sj in enumerate(PAULI_LABELS):
                t[i, j] = np.real(np.einsum("ijkl,ki,lj->", rho4, p1[si], p2[sj]))
        return t

    if route != "measurement":
        raise ValueError(f"unknown route {route!r}")

    cond = {}
    for sj in ("X", "Y", "Z"):
        plus, minus = _logical_meas_ops(words2, sj)
        cond[sj] = conditional_decomposition(rho, {"+": plus, "-": minus}, (d1, d2))
    for i, si in enumerate(PAULI_LABELS):
        op1 = p1[si]
        for j, sj in enumerate(PAULI_LABELS):
            if sj == "I":
                # sum over outcomes of any basis recovers <sigma_i x Pi_code>;
                # average the three to use all the data symmetrically
                acc = 0.0
                for basis in ("X", "Y", "Z"):
                    for _, (
                        _,
                        rho1,
                    ) in cond[basis].items():
                        acc += np.real(np.trace(op1 @ rho1))
                t[i, j] = acc / 3
            else:
                (_, rp), (_, rm) = cond[sj]["+"], cond[sj]["-"]
                t[i, j] = np.real(np.trace(op1 @ rp)) - np.real(np.trace(op1 @ rm))
    return t


def logical_two_qubit(correlations: np.ndarray) -> tuple[np.ndarray, float]:
    """Invert a Pauli correlation table into a two-qubit matrix.

    rho_L = (1/4) sum_ij T[i,j] sigma_i x sigma_j, followed by clipping
    negative eigenvalues to zero.  The trace is left alone: it equals the
    codespace weight <Pi x Pi>, and the shortfall is the leakage -- reported,
    not renormalized.
    """
    t = np.asarray(correlations, float)
    if t.shape != (4, 4):
        raise ValueError("expected a 4x4 Pauli correlation table")
    rho = np.zeros((4, 4), dtype=complex)
    for i, si in enumerate(PAULI_LABELS):
        for j, sj in enumerate(PAULI_LABELS):
            rho += t[i, j] * np.kron(_PAULI_2[si], _PAULI_2[sj])
    rho /= 4
    vals, vecs = np.linalg.eigh(rho)
    rho_psd = (vecs * np.clip(vals, 0, None)) @ vecs.conj().T
    leakage = float(1 - t[0, 0])
    return rho_psd, leakage


def logical_bell_fidelity(rho_l: np.ndarray) -> float:
    """Overlap with the singlet (|01> - |10>)/sqrt(2), trace as-is."""
    s = np.zeros(4, dtype=complex)
    s[1], s[2] = 1 / math.sqrt(2), -1 / math.sqrt(2)
    return float(np.real(s.conj() @ rho_l @ s))


# ---------------------------------------------------------------------------
# analysis-basis fitting
# ---------------------------------------------------------------------------


@dataclass
class OptimizedBasis:
    basis: LogicalBasis
    fidelity: float
    x: np.ndarray
    success: bool


def optimize_basis(
    state,
    dims: tuple[int, int],
    alpha0: float = 1.4,
    extra_starts: tuple = (0.0, 0.25, 0.5, -0.5),
) -> OptimizedBasis:
    """Fit the analysis cat basis (alpha, theta_k, theta_r) to a pair state.

    Maximizes the logical Bell fidelity over a basis applied symmetrically
    to both cavities -- the knob an experiment turns when calibrating its
    decoding: cat amplitude shrinks under damping, self-Kerr twists the
    lobes quadratically, and a linear rotation mops up drive detuning.
    Nelder-Mead from several Kerr-angle starting points (the landscape is
    locally smooth but the global twist can be far from zero).
    """
    rho = hilbert.as_dm(state)
    d1, d2 = dims

    def neg_fid(x):
        alpha, theta_k, theta_r = x
        if alpha < 0.05:
            return 1.0 + abs(alpha)
        basis = LogicalBasis(alpha, theta_k=theta_k, theta_r=theta_r)
        w1, w2 = basis.codewords(d1), basis.codewords(d2)
        bell = codes.bell_state(w1, w2)
        tr = float(np.real(np.trace(rho)))
        return -float(np.real(bell.conj() @ rho @ bell) / tr)

    best = None
    for tk0 in extra_starts:
        x0 = np.array([alpha0, tk0, 0.0])
        simplex = np.array(
            [x0, x0 + [0.15, 0, 0], x0 + [0, 0.25, 0], x0 + [0, 0, 0.25]]
        )
        res = minimize(
            neg_fid,
            x0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": 1e-7,
                "fatol": 1e-12,
                "maxiter": 2000,
            },
        )
        if best is None or res.fun < best.fun:
            best = res
    basis = LogicalBasis(abs(best.x[0]), theta_k=best.x[1], theta_r=best.x[2])
    return OptimizedBasis(
        basis=basis, fidelity=-best.fun, x=best.x, success=bool(best.success)
    )
