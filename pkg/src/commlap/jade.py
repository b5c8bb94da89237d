"""Joint approximate diagonalization of two symmetric matrices (Jacobi / JADE)
and the joint spectral constructions built on the resulting basis."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ValidationError
from .graph import EigenSystem, fix_signs
from .spectral import HeatOperator, diffusion_distance, heat_operator


def off_norm(A) -> float:
    """Sum of squared off-diagonal entries."""
    A = np.asarray(getattr(A, "matrix", A), dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("off_norm needs a square matrix")
    off = A.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.sum(off * off))


def joint_offdiag(A, B, U) -> float:
    """``off(U^T A U) + off(U^T B U)`` for a given orthonormal ``U``."""
    A, B = _as_sym_pair(A, B, check=False)
    return off_norm(U.T @ A @ U) + off_norm(U.T @ B @ U)


@dataclass(frozen=True)
class JointBasis:
    """Orthonormal basis ``U`` with the joint approximate eigenvalues of both matrices.

    Columns are ordered by ``lam1`` ascending (ties by ``lam2``) and carry the
    first-nonzero-positive sign convention.
    """

    U: np.ndarray
    residual: float
    lam1: np.ndarray
    lam2: np.ndarray
    sweeps: int = 0
    converged: bool = True
    history: tuple = field(default=(), repr=False)

    @property
    def n(self):
        return self.U.shape[0]

    def mean_eigenvalues(self):
        return 0.5 * (self.lam1 + self.lam2)

    def eigensystem(self, which="mean") -> EigenSystem:
        """Shared basis paired with ``lam1``, ``lam2`` or their mean (``which`` in 1, 2, "mean").

        Columns are re-sorted so the eigenvalues ascend, as :class:`EigenSystem` requires.
        """
        lam = {1: self.lam1, 2: self.lam2, "mean": self.mean_eigenvalues()}[which]
        order = np.argsort(lam, kind="stable")
        return EigenSystem(self.U[:, order], lam[order])

    def to_json(self):
        return {
            "residual": self.residual,
            "lambda1": self.lam1.tolist(),
            "lambda2": self.lam2.tolist(),
            "U": self.U.tolist(),
            "sweeps": self.sweeps,
            "converged": self.converged,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            np.asarray(obj["U"], dtype=float),
            float(obj["residual"]),
            np.asarray(obj["lambda1"], dtype=float),
            np.asarray(obj["lambda2"], dtype=float),
            int(obj.get("sweeps", 0)),
            bool(obj.get("converged", True)),
        )

    def dumps(self):
        return json.dumps(self.to_json())


def _as_sym_pair(A, B, check=True):
    A = np.asarray(getattr(A, "matrix", A), dtype=float)
    B = np.asarray(getattr(B, "matrix", B), dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise ValidationError(f"need two square matrices of equal size, got {A.shape} and {B.shape}")
    if check:
        for name, M in (("A", A), ("B", B)):
            scale = max(1.0, np.abs(M).max(initial=0.0))
            if np.abs(M - M.T).max(initial=0.0) > 1e-10 * scale:
                raise ValidationError(f"{name} is not symmetric")
    return A, B


def jade(A, B, tol: float = 1e-10, max_sweeps: int = 100, init=None) -> JointBasis:
    """Jointly diagonalize two symmetric matrices by cyclic Jacobi rotations.

    Each Givens angle is the closed-form minimizer of the pair's off-diagonal
    energy in both matrices. Sweeps stop once every sine in a sweep is below
    ``tol`` or after ``max_sweeps``.

    Parameters
    ----------
    A, B : array_like or LaplacianMatrix
        Symmetric ``n x n`` matrices.
    tol : float
        Rotation-sine threshold.
    max_sweeps : int
    init : array_like, optional
        Orthonormal starting basis (identity by default).
    """
    A, B = _as_sym_pair(A, B)
    n = A.shape[0]
    V = np.eye(n) if init is None else np.array(init, dtype=float, order="C")
    Aw = np.ascontiguousarray(V.T @ A @ V)
    Bw = np.ascontiguousarray(V.T @ B @ V)
    Aw = 0.5 * (Aw + Aw.T)
    Bw = 0.5 * (Bw + Bw.T)
    history = [off_norm(Aw) + off_norm(Bw)]
    converged = n < 2
    sweeps = 0
    while not converged and sweeps < max_sweeps:
        smax, _ = _kernels.jacobi_sweep(Aw, Bw, V, tol)
        sweeps += 1
        history.append(off_norm(Aw) + off_norm(Bw))
        converged = smax <= tol
    return _finish(A, B, V, sweeps, converged, tuple(history))


def _finish(A, B, V, sweeps, converged, history):
    # re-orthonormalize accumulated rotations, then canonical order and signs
    q, r = np.linalg.qr(V)
    V = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
    lam1 = np.sum(V * (A @ V), axis=0)
    lam2 = np.sum(V * (B @ V), axis=0)
    order = np.lexsort((lam2, lam1))
    V = fix_signs(np.ascontiguousarray(V[:, order]))
    return JointBasis(V, joint_offdiag(A, B, V), lam1[order], lam2[order], sweeps, converged, history)


def project_to_commuting(A, B, jb):
    """Zero the off-diagonals of both matrices in the basis ``jb`` and map back.

    Returns the commuting pair ``(U Diag(U^T A U) U^T, U Diag(U^T B U) U^T)``.
    """
    A, B = _as_sym_pair(A, B, check=False)
    U = getattr(jb, "U", jb)
    a = np.sum(U * (A @ U), axis=0)
    b = np.sum(U * (B @ U), axis=0)
    At = (U * a) @ U.T
    Bt = (U * b) @ U.T
    return 0.5 * (At + At.T), 0.5 * (Bt + Bt.T)


def joint_heat_kernel(jb: JointBasis, t: float) -> HeatOperator:
    """Heat kernel of the shared basis with the averaged joint eigenvalues."""
    return heat_operator(jb.eigensystem("mean"), t)


def multimodal_diffusion_distance(jb: JointBasis, t: float, p: int, q: int) -> float:
    """Row distance of :func:`joint_heat_kernel` between vertices ``p`` and ``q``."""
    return diffusion_distance(jb.eigensystem("mean"), t, p, q)
