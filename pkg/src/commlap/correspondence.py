"""Functional correspondence between two vertex sets and the generalized commutator."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import EigenSystem


@dataclass(frozen=True)
class FunctionalCorrespondence:
    """Coefficient matrix ``C`` between truncated eigenbases and the transfer operators.

    ``T12 = phi2 @ C @ phi1.T`` maps functions on the first vertex set to the
    second; ``T21`` maps back (adjoint ``phi1 @ C.T @ phi2.T`` unless given).
    """

    C: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    T12: np.ndarray
    T21: np.ndarray

    @property
    def m(self):
        return self.C.shape[0]

    @property
    def shape(self):
        """``(n1, n2)``."""
        return self.phi1.shape[0], self.phi2.shape[0]

    @classmethod
    def from_coefficients(cls, C, phi1, phi2, C21=None):
        C = np.asarray(C, dtype=float)
        m = C.shape[0]
        if C.shape != (m, m) or phi1.shape[1] < m or phi2.shape[1] < m:
            raise ValidationError("coefficient matrix does not match the truncated bases")
        p1, p2 = phi1[:, :m], phi2[:, :m]
        T12 = p2 @ C @ p1.T
        T21 = p1 @ (C.T if C21 is None else np.asarray(C21, dtype=float)) @ p2.T
        return cls(C, p1, p2, T12, T21)

    @classmethod
    def identity(cls, n):
        """Identity transfer on ``n`` vertices (full basis, ``C = I``)."""
        eye = np.eye(n)
        return cls(eye, eye, eye, eye.copy(), eye.copy())

    def to_json(self, landmarks=None):
        out = {"m": self.m, "C": self.C.tolist()}
        if landmarks is not None:
            out["landmarks"] = [[int(a), int(b)] for a, b in landmarks]
        return out

    def dumps(self, landmarks=None):
        return json.dumps(self.to_json(landmarks))


def landmark_functions(n1, n2, landmarks):
    """Delta functions at corresponding vertices: columns of ``F`` (on set 1) and ``G`` (on set 2)."""
    pairs = np.asarray(landmarks, dtype=np.int64).reshape(-1, 2)
    if pairs.size == 0:
        raise ValidationError("no landmarks given")
    if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= n1 or pairs[:, 1].min() < 0 or pairs[:, 1].max() >= n2:
        raise ValidationError("landmark index out of range")
    q = len(pairs)
    F = np.zeros((n1, q))
    G = np.zeros((n2, q))
    F[pairs[:, 0], np.arange(q)] = 1.0
    G[pairs[:, 1], np.arange(q)] = 1.0
    return F, G


def solve_correspondence(es1: EigenSystem, es2: EigenSystem, F, G, m: int, ridge: float = 0.0, C21=None):
    """Least-squares coefficient matrix ``C`` with ``C phi1^T F ~= phi2^T G``.

    With ``ridge == 0`` the minimum-norm least-squares solution is returned
    (well defined also when ``phi1^T F`` is rank deficient). A positive
    ``ridge`` solves the regularized normal equations instead.
    """
    F = np.asarray(F, dtype=float)
    G = np.asarray(G, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    if G.ndim == 1:
        G = G[:, None]
    if F.shape[0] != es1.n or G.shape[0] != es2.n or F.shape[1] != G.shape[1]:
        raise ValidationError(f"F {F.shape} and G {G.shape} do not match vertex counts {es1.n}, {es2.n}")
    q = F.shape[1]
    if q * m == 0:
        raise ValidationError("need at least one function pair and m >= 1")
    if not 1 <= m <= min(es1.n, es2.n):
        raise ValidationError(f"m must be in 1..{min(es1.n, es2.n)}")
    if not np.any(F):
        raise ValidationError("F is identically zero")
    p1, p2 = es1.phi[:, :m], es2.phi[:, :m]
    A = p1.T @ F
    B = p2.T @ G
    if ridge > 0:
        C = np.linalg.solve(A @ A.T + ridge * np.eye(m), A @ B.T).T
    else:
        C = np.linalg.lstsq(A.T, B.T, rcond=None)[0].T
    return FunctionalCorrespondence.from_coefficients(C, p1, p2, C21)


def correspondence_residual(fc: FunctionalCorrespondence, F, G, C=None):
    C = fc.C if C is None else C
    return float(np.linalg.norm(C @ (fc.phi1.T @ F) - fc.phi2.T @ G))


def transported(L2, fc: FunctionalCorrespondence):
    """``T21 L2 T12``: the second operator pulled back to the first vertex set."""
    L2 = getattr(L2, "matrix", L2)
    return fc.T21 @ L2 @ fc.T12


def generalized_commutator(L1, L2, fc: FunctionalCorrespondence):
    """``[L1, T21 L2 T12]`` as an ``n1 x n1`` matrix."""
    L1 = np.asarray(getattr(L1, "matrix", L1), dtype=float)
    L2 = np.asarray(getattr(L2, "matrix", L2), dtype=float)
    n1, n2 = fc.shape
    if L1.shape != (n1, n1) or L2.shape != (n2, n2):
        raise ValidationError(f"shape mismatch: L1 {L1.shape}, L2 {L2.shape}, correspondence {(n1, n2)}")
    B = transported(L2, fc)
    return L1 @ B - B @ L1
