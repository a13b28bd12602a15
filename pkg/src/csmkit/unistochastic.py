"""Deciding (or semi-deciding) whether a stochastic matrix is unistochastic.

A matrix ``p`` is unistochastic when ``p[j, i] = |U[j, i]|^2`` for some
unitary ``U``.  Double stochasticity is necessary.  For ``N = 3`` the
question is settled exactly by a closed polygon test on each pair of
columns; for larger ``N`` we search over the phases of ``U`` with a
multi-start least-squares solver, which can certify but never refute.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .linalg import dagger, matrix_to_dict
from .stochastic import TOL_STOCH, TransitionMatrix, is_doubly_stochastic

TOL_CERTIFY = 1e-8

CERTIFIED = "certified"
NOT_CERTIFIED = "not_certified"
REFUTED = "refuted"


@dataclass(frozen=True)
class CertifyOptions:
    restarts: int = 256
    max_iters: int = 5000
    tol_certify: float = TOL_CERTIFY
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.tol_certify > 0:
            raise ValueError("tol_certify must be positive")


@dataclass(frozen=True, eq=False)
class UnistochasticCertificate:
    witness: np.ndarray
    residual: float
    method: str  # "exact_3x3" | "phase_optimization" | "construction"


@dataclass(frozen=True, eq=False)
class CertifyResult:
    status: str
    certificate: Optional[UnistochasticCertificate] = None
    best_residual: Optional[float] = None
    reason: str = ""
    seed: int = 0
    restarts_used: int = 0

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def to_dict(self) -> dict:
        out = {"status": self.status, "seed": self.seed}
        if self.certificate is not None:
            out["witness"] = matrix_to_dict(self.certificate.witness)
            out["residual"] = self.certificate.residual
            out["method"] = self.certificate.method
        if self.best_residual is not None:
            out["best_residual"] = self.best_residual
        if self.reason:
            out["reason"] = self.reason
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def modulus_residual(U, pi) -> float:
    """Largest ``| |U[j, i]|^2 - p[j, i] |``."""
    return float(np.max(np.abs(np.abs(U) ** 2 - np.asarray(pi))))


def nearest_unitary(M) -> np.ndarray:
    A, _, Bh = np.linalg.svd(M)
    return A @ Bh


def unistochastic_oracle_3x3(pi: TransitionMatrix, tol: float = 1e-12) -> bool:
    """Closed-polygon test for 3x3 doubly stochastic matrices.

    Two columns of a unitary are orthogonal only if the three complex terms
    ``U[j, i]^* U[j, k]`` can sum to zero, i.e. the lengths
    ``sqrt(p[j, i] p[j, k])`` close a (possibly degenerate) triangle.
    """
    p = np.asarray(pi, dtype=float)
    if p.shape != (3, 3):
        raise ValueError(f"oracle only handles 3x3 matrices, got {p.shape}")
    for i, k in combinations(range(3), 2):
        links = np.sqrt(np.clip(p[:, i] * p[:, k], 0.0, None))
        longest = links.max()
        if longest > links.sum() - longest + tol:
            return False
    return True


def _close_triangle(a: float, b: float, c: float, mirror: bool) -> tuple[float, float]:
    """Angles ``(alpha, beta)`` with ``a + b e^{i alpha} + c e^{i beta} = 0``."""
    if b == 0.0 and c == 0.0:
        return 0.0, 0.0
    if a == 0.0:
        return 0.0, np.pi
    if c == 0.0:
        return np.pi, 0.0
    cos_beta = np.clip((b * b - a * a - c * c) / (2.0 * a * c), -1.0, 1.0)
    beta = np.arccos(cos_beta) * (-1.0 if mirror else 1.0)
    alpha = np.angle(-a - c * np.exp(1j * beta)) if b > 0 else 0.0
    return float(alpha), float(beta)


def _solve_3x3(p: np.ndarray) -> np.ndarray:
    """Best witness from the four mirror choices of the two closing triangles."""
    m = np.sqrt(p)
    best, best_err = None, np.inf
    for mirror1 in (False, True):
        for mirror2 in (False, True):
            theta = np.zeros((3, 3))
            l1 = m[:, 0] * m[:, 1]
            theta[1, 1], theta[2, 1] = _close_triangle(l1[0], l1[1], l1[2], mirror1)
            l2 = m[:, 0] * m[:, 2]
            theta[1, 2], theta[2, 2] = _close_triangle(l2[0], l2[1], l2[2], mirror2)
            U = m * np.exp(1j * theta)
            err = np.linalg.norm(dagger(U) @ U - np.eye(3))
            if err < best_err:
                best, best_err = U, err
    return best


class PhaseProblem:
    """Fixed moduli ``sqrt(p)``; free phases on rows and columns 1..N-1.

    Residuals are the real and imaginary parts of the strictly upper
    triangle of ``U^dagger U``.  Its diagonal equals the column sums of
    ``p`` and carries no phase dependence.
    """

    def __init__(self, pi):
        self.p = np.asarray(pi, dtype=float)
        self.n = self.p.shape[0]
        self.m = np.sqrt(np.clip(self.p, 0.0, None))
        self.iu = np.triu_indices(self.n, 1)

    @property
    def n_params(self) -> int:
        return (self.n - 1) ** 2

    def unitary(self, x) -> np.ndarray:
        theta = np.zeros((self.n, self.n))
        theta[1:, 1:] = np.reshape(x, (self.n - 1, self.n - 1))
        return self.m * np.exp(1j * theta)

    def residuals(self, x) -> np.ndarray:
        G = dagger(U := self.unitary(x)) @ U
        g = G[self.iu]
        return np.concatenate([g.real, g.imag])

    def jacobian(self, x) -> np.ndarray:
        U = self.unitary(x)
        k, l = self.iu
        npair = k.size
        # G_kl = sum_j conj(U_jk) U_jl; d/d theta_jk -> -i term, d/d theta_jl -> +i term
        term = (np.conj(U[:, k]) * U[:, l]).T
        J = np.zeros((npair, self.n, self.n), dtype=np.complex128)
        t = np.arange(npair)
        J[t, :, k] = -1j * term
        J[t, :, l] = 1j * term
        J = J[:, 1:, 1:].reshape(npair, -1)
        return np.concatenate([J.real, J.imag])

    def objective(self, x) -> float:
        U = self.unitary(x)
        return float(np.linalg.norm(dagger(U) @ U - np.eye(self.n)) ** 2)


@dataclass
class PhaseSearchResult:
    unitary: np.ndarray
    objective: float
    restart: int
    objectives: list = field(default_factory=list)


def optimize_phases(pi, restarts: int = 32, max_iters: int = 5000, seed: int = 0,
                    target: float = 0.0) -> PhaseSearchResult:
    """Multi-start search for phases making ``sqrt(p) * exp(i theta)`` unitary.

    Restart ``r`` draws its starting phases from an independent stream
    spawned from ``seed``.  The lowest objective wins, ties going to the
    earlier restart.  The search stops once a restart reaches ``target``.
    """
    prob = PhaseProblem(pi)
    streams = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    objectives = []
    for r, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        x0 = rng.uniform(-np.pi, np.pi, prob.n_params)
        if prob.n_params == 0:
            x = x0
        else:
            sol = least_squares(prob.residuals, x0, jac=prob.jacobian, method="lm",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_iters)
            x = sol.x
        obj = prob.objective(x)
        objectives.append(obj)
        if best is None or obj < best.objective:
            best = PhaseSearchResult(prob.unitary(x), obj, r)
        if best.objective <= target:
            break
    best.objectives = objectives
    return best


def _is_permutation(p: np.ndarray, tol: float) -> bool:
    ones = np.abs(p - 1.0) <= tol
    zeros = np.abs(p) <= tol
    return bool(np.all(ones | zeros) and np.all(ones.sum(axis=0) == 1) and np.all(ones.sum(axis=1) == 1))


def certify_unistochastic(pi: TransitionMatrix, opts: CertifyOptions | None = None,
                          tol_stoch: float = TOL_STOCH) -> CertifyResult:
    """Three-way verdict: certified (with a unitary witness), refuted, or not certified.

    ``not_certified`` only means the phase search failed within its budget;
    for ``N >= 4`` it is not evidence that the matrix is not unistochastic.
    """
    opts = opts or CertifyOptions()
    p = np.asarray(pi, dtype=float)
    n = p.shape[0]
    tol = opts.tol_certify

    if not is_doubly_stochastic(pi, tol_stoch):
        sums = p.sum(axis=1)
        worst = int(np.argmax(np.abs(sums - 1.0)))
        return CertifyResult(REFUTED, reason=f"not doubly stochastic: row {worst} sums to {sums[worst]:.12g}",
                             seed=opts.seed)

    if _is_permutation(p, tol_stoch):
        W = np.round(p).astype(np.complex128)
        cert = UnistochasticCertificate(W, modulus_residual(W, p), "construction")
        return CertifyResult(CERTIFIED, cert, cert.residual, seed=opts.seed)

    method = "phase_optimization"
    if n == 3:
        if not unistochastic_oracle_3x3(pi):
            return CertifyResult(REFUTED, reason="column-pair links cannot close a triangle",
                                 seed=opts.seed)
        method = "exact_3x3"
        W = nearest_unitary(_solve_3x3(p))
        res = modulus_residual(W, p)
        if res <= tol:
            return CertifyResult(CERTIFIED, UnistochasticCertificate(W, res, method), res,
                                 seed=opts.seed, restarts_used=0)

    search = optimize_phases(p, opts.restarts, opts.max_iters, opts.seed, target=tol ** 2)
    W = nearest_unitary(search.unitary)
    res = modulus_residual(W, p)
    used = len(search.objectives)
    if search.objective <= tol ** 2 and res <= tol:
        return CertifyResult(CERTIFIED, UnistochasticCertificate(W, res, method), res,
                             seed=opts.seed, restarts_used=used)
    if n == 3:
        # the oracle guarantees a witness exists; failing to find one is a budget problem
        return CertifyResult(NOT_CERTIFIED, best_residual=res, seed=opts.seed, restarts_used=used,
                             reason="exact oracle accepts but no witness reached tolerance")
    return CertifyResult(NOT_CERTIFIED, best_residual=res, seed=opts.seed, restarts_used=used,
                         reason=f"best objective {search.objective:.3e} after {used} restarts")
