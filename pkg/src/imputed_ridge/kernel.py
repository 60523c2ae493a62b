"""Gram matrices for linearly imputed data, exact and relaxed.

The exact matrix is the Gram of the imputed rows and is quadratic in
the imputation map M, which ruins convexity of the training objective.
The relaxed form replaces every product of two M columns with its own
d x d matrix (one slice N_k per feature), so the entries become affine
in (M, N):

    K[i, j] = xt_i.xt_j + xt_i' M Zb_i xt_j + xt_i' Zb_j M' xt_j
              + sum_k zb_ik zb_jk xt_i' N_k xt_j

where Zb_i is the diagonal of row i's missingness indicator.  Choosing
N_k as the outer product of column k of M with itself recovers the
exact matrix on corrupted coordinates, so the affine family contains
every exact one; the price is that a free N can make the matrix
indefinite, which the solver polices with eigenvector cuts.

Budgets are Frobenius balls: ||M||_F <= gamma and
sqrt(sum_k ||N_k||_F^2) <= gamma^2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .dataset import Dataset
from .imputation import FEASIBILITY_SLACK, impute_dataset

# Below this order, a full dense eigendecomposition is cheaper than ARPACK.
DENSE_EIG_CUTOFF = 256


class Provenance(Enum):
    EXACT = "exact"
    RELAXED = "relaxed"


@dataclass(frozen=True)
class LiftedTensor:
    """Stack of d symmetric d x d slices standing in for M-column outer products.

    slices[k] plays the role of the rank-one matrix M[:, k] M[:, k]^T.
    The budget caps the joint Frobenius norm at gamma2 (= gamma^2 when
    tied to an M-ball of radius gamma).
    """

    slices: np.ndarray
    gamma2: float

    def __post_init__(self):
        slices = np.asarray(self.slices, dtype=float)
        object.__setattr__(self, "slices", slices)
        object.__setattr__(self, "gamma2", float(self.gamma2))
        if slices.ndim != 3 or slices.shape[1] != slices.shape[2]:
            raise ValueError("slices must have shape (k, d, d)")
        if self.gamma2 < 0:
            raise ValueError("budget must be nonnegative")
        if self.norm > self.gamma2 + FEASIBILITY_SLACK:
            raise ValueError(
                f"joint norm {self.norm:.6g} exceeds budget {self.gamma2}"
            )

    @property
    def norm(self) -> float:
        return float(np.sqrt((self.slices * self.slices).sum()))

    @classmethod
    def zeros(cls, d: int, gamma2: float = 0.0) -> "LiftedTensor":
        return cls(np.zeros((d, d, d)), gamma2)

    @classmethod
    def projected(cls, slices, gamma2) -> "LiftedTensor":
        """Radially scale the stack onto the budget ball."""
        slices = np.asarray(slices, dtype=float)
        norm = float(np.sqrt((slices * slices).sum()))
        if norm > gamma2 and norm > 0:
            slices = slices * (gamma2 / norm)
        return cls(slices, gamma2)


@dataclass(frozen=True)
class KernelMatrix:
    """A Gram matrix tagged with how it was produced."""

    K: np.ndarray
    provenance: Provenance

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        object.__setattr__(self, "K", K)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("kernel matrix must be square")
        if not np.allclose(K, K.T, rtol=1e-9, atol=1e-9):
            raise ValueError("kernel matrix must be symmetric within 1e-9")

    @property
    def m(self) -> int:
        return self.K.shape[0]


def lift(M) -> LiftedTensor:
    """Exact lift of an imputation map: slice k is outer(M[:, k], M[:, k]).

    The joint norm of the result is sqrt(sum_k ||M_k||^4) <= ||M||_F^2,
    so the budget gamma2 = ||M||_F^2 is always feasible.
    """
    M = np.asarray(M, dtype=float)
    slices = np.einsum("rk,sk->krs", M, M)
    gamma2 = float(np.linalg.norm(M)) ** 2
    return LiftedTensor(slices, gamma2)


def build_km(train: Dataset, M) -> KernelMatrix:
    """Exact imputed Gram matrix: the Gram of rows filled through M."""
    M = np.asarray(M, dtype=float)
    if M.shape != (train.d, train.d):
        raise ValueError(f"M must be {train.d} x {train.d}")
    Ximp = impute_dataset(M, train.X, train.Z)
    G = Ximp @ Ximp.T
    return KernelMatrix(0.5 * (G + G.T), Provenance.EXACT)


def assemble_relaxed(X, Zb, M, slices, active, base=None) -> np.ndarray:
    """Relaxed Gram from raw arrays.

    ``slices`` holds one d x d matrix per index in ``active`` (features
    with at least one masked entry); inactive features contribute
    nothing because their zb column is identically zero.  ``base`` may
    carry a precomputed X X' to skip the dominant product.
    """
    m = X.shape[0]
    G = X @ X.T if base is None else base.copy()
    C = Zb * (X @ M)
    T2 = C @ X.T
    G = G + T2 + T2.T
    active = np.asarray(active, dtype=int)
    if active.size:
        B = Zb[:, active, None] * X[:, None, :]  # B[i, k, :] = zb_i[k] xt_i
        A = np.einsum("ikr,krs->iks", B, slices, optimize=True)
        G = G + A.reshape(m, -1) @ B.reshape(m, -1).T
    return 0.5 * (G + G.T)


def build_kmn(train: Dataset, M, N: LiftedTensor) -> KernelMatrix:
    """Relaxed Gram matrix, affine in (M, N)."""
    M = np.asarray(M, dtype=float)
    d = train.d
    if M.shape != (d, d):
        raise ValueError(f"M must be {d} x {d}")
    if N.slices.shape != (d, d, d):
        raise ValueError(f"N must carry {d} slices of shape ({d}, {d})")
    Zb = 1.0 - train.Z
    active = np.flatnonzero(Zb.any(axis=0))
    G = assemble_relaxed(train.X, Zb, M, N.slices[active], active)
    return KernelMatrix(G, Provenance.RELAXED)


def quad_factors(X, Zb, a):
    """Factor the affine map (M, N) -> a' K a for a fixed vector a.

    Returns (const, s, V) with const = a' X X' a, s = X' a and
    V[:, k] = X' (a * Zb[:, k]), so that

        a' K a = const + 2 sum_k s_k (M[:, k] . V[:, k])
                       + sum_k V[:, k]' N_k V[:, k].
    """
    s = X.T @ a
    V = X.T @ (a[:, None] * Zb)
    return float(s @ s), s, V


def kernel_gradient_contraction(train: Dataset, alpha):
    """Gradient of alpha' K alpha in (M, N); the map is affine so it is constant.

    Returns (G_M, G_N) where G_M[:, k] = 2 s_k v_k and slice k of G_N is
    outer(v_k, v_k), with s = X' alpha and v_k = X' (alpha * zb_k).
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (train.m,):
        raise ValueError("alpha must have one entry per training row")
    Zb = 1.0 - train.Z
    _, s, V = quad_factors(train.X, Zb, alpha)
    G_M = 2.0 * V * s[None, :]
    slices = np.einsum("rk,sk->krs", V, V)
    norm = float(np.sqrt((slices * slices).sum()))
    return G_M, LiftedTensor(slices, norm)


def min_eigpair(K):
    """Smallest eigenvalue and a unit eigenvector of a symmetric matrix.

    Dense orders use a full symmetric decomposition.  Larger ones run
    shifted Lanczos: with sigma an upper bound on the spectrum (max
    absolute row sum), the top eigenpair of sigma*I - K maps back to
    the bottom of K.  The start vector is fixed so results do not
    depend on global random state, and a stalled ARPACK run (clustered
    spectra do that at tight tolerance) falls back to the dense path.
    """
    A = K.K if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(A, A.T, rtol=1e-9, atol=1e-9):
        raise ValueError("matrix must be symmetric")
    n = A.shape[0]
    if n <= DENSE_EIG_CUTOFF:
        w, U = np.linalg.eigh(A)
        v = U[:, 0].copy()
        return float(w[0]), v / np.linalg.norm(v)
    sigma = float(np.abs(A).sum(axis=1).max())
    if sigma == 0.0:
        v = np.zeros(n)
        v[0] = 1.0
        return 0.0, v
    B = sigma * np.eye(n) - A
    v0 = np.random.default_rng(0).standard_normal(n)
    try:
        # a low iteration cap makes clustered spectra fail over to the
        # dense path quickly instead of burning thousands of matvecs
        vals, vecs = eigsh(
            B, k=1, which="LA", maxiter=300, tol=1e-10, v0=v0, ncv=min(n, 48)
        )
    except ArpackNoConvergence:
        w, U = np.linalg.eigh(A)
        v = U[:, 0].copy()
        return float(w[0]), v / np.linalg.norm(v)
    v = vecs[:, 0]
    return float(sigma - vals[0]), v / np.linalg.norm(v)


def min_eig_low_rank(K, basis):
    """Smallest eigenvalue of K given a spanning set for its range.

    ``basis`` is an m x c matrix whose columns span range(K) with
    c < m.  All nonzero eigenvalues of K live in that subspace, and the
    complement contributes an exact zero eigenvalue.  Returns
    (eigenvalue, eigenvector-or-None); the vector is only materialized
    when the eigenvalue is negative, which is the only case the solver
    needs it.
    """
    m = K.shape[0]
    Q, R, _ = scipy.linalg.qr(basis, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] <= 0.0:
        return 0.0, None
    rank = int((diag > diag[0] * 1e-12).sum())
    Q = Q[:, :rank]
    small = Q.T @ (K @ Q)
    small = 0.5 * (small + small.T)
    w, U = np.linalg.eigh(small)
    lam = float(w[0])
    if rank < m and lam > 0.0:
        return 0.0, None
    if lam < 0.0:
        v = Q @ U[:, 0]
        return lam, v / np.linalg.norm(v)
    return lam, None


def dump_kernel(K, path):
    """Write a kernel matrix to a flat binary file.

    Layout: 8-byte header of two little-endian uint32 (rows, cols),
    then the entries as row-major little-endian float64.
    """
    A = K.K if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", A.shape[0], A.shape[1]))
        fh.write(np.ascontiguousarray(A, dtype="<f8").tobytes())


def load_kernel(path) -> np.ndarray:
    """Read a matrix written by dump_kernel."""
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise ValueError(f"{path}: truncated header")
        rows, cols = struct.unpack("<II", header)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(
            f"{path}: expected {rows * cols} entries, found {data.size}"
        )
    return data.reshape(rows, cols).astype(float)
