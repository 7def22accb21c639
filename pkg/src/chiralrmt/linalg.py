"""Pfaffians, Hermitian eigenvalues, singular values and random-matrix samplers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ContractError(ValueError):
    """Input violates an operation's precondition."""


@dataclass(frozen=True)
class RngStream:
    """Seed provenance: (master_seed, stream_id) determines the draw sequence."""

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


def _check_skew(A: np.ndarray) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractError("pfaffian: matrix must be square")
    scale = max(np.max(np.abs(A)), 1.0) if A.size else 1.0
    if np.max(np.abs(A + A.T), initial=0.0) > 1e-12 * scale:
        raise ContractError("pfaffian: matrix is not skew-symmetric")


def pfaffian(A: np.ndarray) -> float | complex:
    """Pfaffian by Parlett-Reid skew tridiagonalization with partial pivoting."""
    A = np.array(A, dtype=complex if np.iscomplexobj(A) else float)
    _check_skew(A)
    n = A.shape[0]
    if n % 2:
        raise ContractError("pfaffian: dimension must be even")
    pf = A.dtype.type(1.0)
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.abs(A[k + 1 :, k]).argmax())
        if kp != k + 1:
            A[[k + 1, kp], k:] = A[[kp, k + 1], k:]
            A[k:, [k + 1, kp]] = A[k:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0.0:
            return A.dtype.type(0.0).item()
        pf = pf * A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2 :] / A[k, k + 1]
            col = A[k + 2 :, k + 1]
            A[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return pf.item()


def hermitian_eigenvalues(H: np.ndarray, tol: float = 1e-13, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations, ascending."""
    A = np.array(H, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractError("hermitian_eigenvalues: matrix must be square")
    norm = np.linalg.norm(A)
    if np.max(np.abs(A - A.conj().T), initial=0.0) > 1e-12 * max(norm, 1.0):
        raise ContractError("hermitian_eigenvalues: matrix is not Hermitian")
    n = A.shape[0]
    A = 0.5 * (A + A.conj().T)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                r = abs(apq)
                if r <= 1e-20 * norm:
                    A[p, q] = A[q, p] = 0.0
                    continue
                phase = apq / r
                theta = 0.5 * np.arctan2(2.0 * r, (A[q, q] - A[p, p]).real)
                c, s = np.cos(theta), np.sin(theta)
                # unitary acting on the (p, q) plane; chosen so that (J^H A J)[p, q] = 0
                J = np.array([[c, s * phase], [-s * np.conj(phase), c]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ J
                A[idx, :] = J.conj().T @ A[idx, :]
                A[p, q] = A[q, p] = 0.0
    return np.sort(np.diag(A).real)


def singular_values(W: np.ndarray) -> np.ndarray:
    """Singular values, ascending; accepts a stack (..., N, N)."""
    W = np.asarray(W)
    if W.ndim < 2 or W.shape[-1] != W.shape[-2]:
        raise ContractError("singular_values: matrix must be square")
    sv = np.linalg.svd(W, compute_uv=False)
    return np.maximum(sv[..., ::-1], 0.0)


def singular_values_jacobi(W: np.ndarray) -> np.ndarray:
    """Singular values from the chiral block [[0, iW], [iW^H, 0]] via Jacobi."""
    W = np.asarray(W, dtype=complex)
    n = W.shape[0]
    D = np.zeros((2 * n, 2 * n), dtype=complex)
    D[:n, n:] = 1j * W
    D[n:, :n] = 1j * W.conj().T
    ev = hermitian_eigenvalues(-1j * D)  # D is anti-Hermitian with spectrum +-i*lambda
    return np.sort(np.abs(ev))[::2] if n else ev


def sample_gue(n: int, rng: RngStream | np.random.Generator, size: int | None = None) -> np.ndarray:
    """GUE with weight exp(-Tr H^2 / 2): diag ~ N(0, 1), off-diagonal Re/Im ~ N(0, 1/2)."""
    if n < 1:
        raise ContractError("sample_gue: n must be >= 1")
    gen = _as_generator(rng)
    shape = (n, n) if size is None else (size, n, n)
    X = gen.standard_normal(shape) + 1j * gen.standard_normal(shape)
    return (X + np.swapaxes(X.conj(), -1, -2)) / 2.0


def sample_ginibre(n: int, rng: RngStream | np.random.Generator, size: int | None = None) -> np.ndarray:
    gen = _as_generator(rng)
    shape = (n, n) if size is None else (size, n, n)
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)


def sample_haar_unitary(n: int, rng: RngStream | np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar unitary: QR of a Ginibre matrix with R's diagonal phases divided out."""
    if n < 1:
        raise ContractError("sample_haar_unitary: n must be >= 1")
    Z = sample_ginibre(n, rng, size)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[..., None, :]
