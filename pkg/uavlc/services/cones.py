"""
Small dense convex solvers.

solve_sdp: primal-dual path following for complex Hermitian SDPs (real
embedding, Nesterov-Todd scaling) with an optional nonnegative-orthant block.
solve_subproblem: log-barrier Newton method for linear objectives under
linear, hyperbolic (x_a·x_b ≥ c) and quadratic-under-linear constraints.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from uavlc.core.logging_config import logger
from uavlc.exceptions.app_exceptions import (
    InfeasibleSubproblemException,
    SolverFailureException,
    ValidationException,
)

STEP_FRACTION = 0.95
# relative diagonal shifts tried when a factorization fails on rounding
JITTERS = (1e-14, 1e-12, 1e-10)


# ----------------------------------------------------------------------
# Semidefinite programs
# ----------------------------------------------------------------------

def _is_hermitian(matrix: np.ndarray) -> bool:
    scale = max(1.0, float(np.abs(matrix).max(initial=0.0)))
    return bool(np.abs(matrix - matrix.conj().T).max(initial=0.0) <= 1e-12 * scale)


@dataclass(frozen=True, eq=False)
class SdpStandardForm:
    """
    minimize ⟨C, X⟩ + c·x  s.t.  ⟨A_k, X⟩ + F_k·x = b_k,  X ⪰ 0,  x ≥ 0.

    The orthant block (orthant_cost c, orthant_coefficients F) is optional.
    """
    cost: np.ndarray
    equality_constraints: Tuple[Tuple[np.ndarray, float], ...]
    dimension: int
    orthant_cost: Optional[np.ndarray] = None
    orthant_coefficients: Optional[np.ndarray] = None

    def __post_init__(self):
        matrices = [self.cost] + [matrix for matrix, _ in self.equality_constraints]
        for matrix in matrices:
            if matrix.shape != (self.dimension, self.dimension):
                raise ValidationException(f"SDP matrix of shape {matrix.shape} does not match dimension {self.dimension}")
            if not _is_hermitian(matrix):
                raise ValidationException("SDP matrices must be Hermitian")
        count = len(self.equality_constraints)
        if self.orthant_cost is None:
            object.__setattr__(self, "orthant_cost", np.zeros(0))
        orthant = np.asarray(self.orthant_cost, dtype=float)
        object.__setattr__(self, "orthant_cost", orthant)
        if self.orthant_coefficients is None:
            object.__setattr__(self, "orthant_coefficients", np.zeros((count, orthant.size)))
        coefficients = np.asarray(self.orthant_coefficients, dtype=float).reshape(count, orthant.size)
        object.__setattr__(self, "orthant_coefficients", coefficients)

    @property
    def rhs(self) -> np.ndarray:
        return np.array([rhs for _, rhs in self.equality_constraints], dtype=float)


@dataclass(frozen=True, eq=False)
class SdpResult:
    primal: np.ndarray
    orthant: np.ndarray
    dual: np.ndarray
    gap: float
    primal_objective: float
    dual_objective: float
    iterations: int


def embed(matrix: np.ndarray) -> np.ndarray:
    """Real symmetric 2n×2n image of a Hermitian n×n matrix."""
    re, im = matrix.real, matrix.imag
    return np.block([[re, -im], [im, re]])


def unembed(matrix: np.ndarray) -> np.ndarray:
    n = matrix.shape[0] // 2
    y11, y12 = matrix[:n, :n], matrix[:n, n:]
    y21, y22 = matrix[n:, :n], matrix[n:, n:]
    return 0.5 * (y11 + y22) + 0.5j * (y21 - y12)


def _max_step(chol: np.ndarray, delta: np.ndarray) -> float:
    """Largest α with L Lᵀ + α·Δ ⪰ 0."""
    tmp = linalg.solve_triangular(chol, delta, lower=True)
    scaled = linalg.solve_triangular(chol, tmp.T, lower=True)
    smallest = linalg.eigvalsh(0.5 * (scaled + scaled.T))[0]
    return np.inf if smallest >= 0 else -1.0 / smallest


def _max_orthant_step(x: np.ndarray, dx: np.ndarray) -> float:
    shrinking = dx < 0
    if not shrinking.any():
        return np.inf
    return float(np.min(-x[shrinking] / dx[shrinking]))


def regularized_cholesky(matrix: np.ndarray, jitters: Sequence[float] = JITTERS) -> np.ndarray:
    """
    Lower Cholesky factor of a symmetric matrix. A factorization that fails
    on rounding is retried with δ·max(1, mean diagonal)·I for each δ in
    `jitters`; the last LinAlgError propagates.
    """
    matrix = 0.5 * (matrix + matrix.T)
    try:
        return linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError as exc:
        error = exc
    scale = max(1.0, float(np.mean(np.abs(np.diag(matrix)))))
    identity = np.eye(matrix.shape[0])
    for jitter in jitters:
        try:
            factor = linalg.cholesky(matrix + jitter * scale * identity, lower=True)
        except linalg.LinAlgError as exc:
            error = exc
            continue
        logger.debug("Cholesky needed diagonal jitter %.1e", jitter)
        return factor
    raise error


def solve_sdp(form: SdpStandardForm, tol: float = 1e-8, max_iters: int = 200) -> SdpResult:
    """
    Infeasible-start primal-dual path following from X = S = I, y = 0.

    Stops when primal and dual residuals and the relative duality gap
    |pobj − dobj| / max(1, |pobj|) are all below tol.
    """
    cost = embed(form.cost) / 2.0
    stack = np.array([embed(matrix) / 2.0 for matrix, _ in form.equality_constraints]).reshape(-1, *cost.shape)
    rhs = form.rhs
    c_orth = form.orthant_cost
    f_orth = form.orthant_coefficients

    size = cost.shape[0]
    count = rhs.size
    p = c_orth.size
    nu = size + p

    def amap(matrix):
        return np.einsum("kij,ij->k", stack, matrix)

    def aadj(vector):
        return np.einsum("k,kij->ij", vector, stack)

    X, S = np.eye(size), np.eye(size)
    x, s = np.ones(p), np.ones(p)
    y = np.zeros(count)

    trace: List[Dict[str, float]] = []
    best = None
    best_score = np.inf
    b_norm = 1.0 + np.linalg.norm(rhs)
    c_norm = 1.0 + np.linalg.norm(cost) + np.linalg.norm(c_orth)

    for iteration in range(max_iters + 1):
        rp = rhs - amap(X) - f_orth @ x
        Rd = cost - aadj(y) - S
        rd = c_orth - f_orth.T @ y - s
        mu = (np.vdot(X, S).real + x @ s) / nu

        pobj = float(np.vdot(cost, X).real + c_orth @ x)
        dobj = float(rhs @ y)
        gap = abs(pobj - dobj) / max(1.0, abs(pobj))
        pres = np.linalg.norm(rp) / b_norm
        dres = (np.linalg.norm(Rd) + np.linalg.norm(rd)) / c_norm
        trace.append({"iteration": iteration, "pobj": pobj, "dobj": dobj, "gap": gap, "pres": pres, "dres": dres})

        score = max(gap, pres, dres)
        result = SdpResult(
            primal=unembed(X), orthant=x.copy(), dual=y.copy(), gap=gap,
            primal_objective=pobj, dual_objective=dobj, iterations=iteration,
        )
        if score < best_score:
            best, best_score = result, score
        if score <= tol:
            logger.debug("SDP converged (iterations=%s, gap=%.3e)", iteration, gap)
            return result
        if iteration == max_iters:
            break

        try:
            lx = regularized_cholesky(X)
            ls = regularized_cholesky(S)
            _, sv, vt = linalg.svd(ls.T @ lx)
            g = (lx @ vt.T) / np.sqrt(sv)
            W = g @ g.T
            d = x / s
            waw = W @ stack @ W
            schur = np.einsum("kij,lij->kl", stack, waw) + (f_orth * d) @ f_orth.T
            factor = (regularized_cholesky(schur), True)
            s_inv = linalg.cho_solve((ls, True), np.eye(size))
        except (linalg.LinAlgError, ValueError) as exc:
            raise SolverFailureException(
                f"SDP factorization failed at iteration {iteration}: {exc}", trace=trace, best=best
            ) from exc

        wrw = W @ Rd @ W

        def direction(sigma: float):
            rc = sigma * mu * s_inv - X
            rc_orth = sigma * mu / s - x
            rhs_y = rp - amap(rc - wrw) - f_orth @ (rc_orth - d * rd)
            dy = linalg.cho_solve(factor, rhs_y)
            dS = Rd - aadj(dy)
            ds = rd - f_orth.T @ dy
            dX = rc - W @ dS @ W
            dX = 0.5 * (dX + dX.T)
            dx = rc_orth - d * ds
            return dX, dx, dy, dS, ds

        def steps(dX, dx, dS, ds):
            alpha_p = min(1.0, STEP_FRACTION * min(_max_step(lx, dX), _max_orthant_step(x, dx)))
            alpha_d = min(1.0, STEP_FRACTION * min(_max_step(ls, dS), _max_orthant_step(s, ds)))
            return alpha_p, alpha_d

        dX, dx, dy, dS, ds = direction(0.0)
        alpha_p, alpha_d = steps(dX, dx, dS, ds)
        mu_aff = (
            np.vdot(X + alpha_p * dX, S + alpha_d * dS).real
            + (x + alpha_p * dx) @ (s + alpha_d * ds)
        ) / nu
        sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0

        dX, dx, dy, dS, ds = direction(sigma)
        alpha_p, alpha_d = steps(dX, dx, dS, ds)
        if not np.isfinite(alpha_p * alpha_d) or max(alpha_p, alpha_d) < 1e-14:
            raise SolverFailureException(f"SDP stalled at iteration {iteration}", trace=trace, best=best)

        X = X + alpha_p * dX
        X = 0.5 * (X + X.T)
        x = x + alpha_p * dx
        y = y + alpha_d * dy
        S = S + alpha_d * dS
        S = 0.5 * (S + S.T)
        s = s + alpha_d * ds

    raise SolverFailureException(
        f"SDP did not converge in {max_iters} iterations (best residual {best_score:.3e})",
        trace=trace,
        best=best,
    )


# ----------------------------------------------------------------------
# Barrier subproblems
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinearConstraint:
    """a·x ≤ b"""
    name: str
    coefficients: np.ndarray
    bound: float


@dataclass(frozen=True, eq=False)
class HyperbolicConstraint:
    """x_first·x_second ≥ bound with both factors positive."""
    name: str
    first: int
    second: int
    bound: float


@dataclass(frozen=True, eq=False)
class QuadraticConstraint:
    """‖A x + b‖² ≤ c·x + d"""
    name: str
    matrix: np.ndarray
    offset: np.ndarray
    coefficients: np.ndarray
    constant: float


Constraint = Union[LinearConstraint, HyperbolicConstraint, QuadraticConstraint]


@dataclass(frozen=True, eq=False)
class ConvexSubproblem:
    variables: Tuple[str, ...]
    objective: np.ndarray
    constraints: Tuple[Constraint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        n = len(self.variables)
        if len(set(self.variables)) != n:
            raise ValidationException("subproblem variable names must be unique")
        if np.asarray(self.objective).shape != (n,):
            raise ValidationException("objective needs one coefficient per variable")
        for constraint in self.constraints:
            if isinstance(constraint, LinearConstraint):
                ok = np.asarray(constraint.coefficients).shape == (n,)
            elif isinstance(constraint, HyperbolicConstraint):
                ok = 0 <= constraint.first < n and 0 <= constraint.second < n and constraint.bound >= 0
            else:
                ok = (
                    np.asarray(constraint.matrix).shape[1:] == (n,)
                    and np.asarray(constraint.coefficients).shape == (n,)
                )
            if not ok:
                raise ValidationException(f"constraint {constraint.name} references undeclared variables")

    def index(self, name: str) -> int:
        return self.variables.index(name)


@dataclass(frozen=True, eq=False)
class SubproblemResult:
    x: np.ndarray
    objective: float
    iterations: int
    gap: float
    variables: Tuple[str, ...]

    def value(self, name: str) -> float:
        return float(self.x[self.variables.index(name)])

    @property
    def values(self) -> Dict[str, float]:
        return dict(zip(self.variables, self.x.tolist()))


def _slack(constraint: Constraint, x: np.ndarray) -> float:
    if isinstance(constraint, LinearConstraint):
        return constraint.bound - constraint.coefficients @ x
    if isinstance(constraint, HyperbolicConstraint):
        a, b = x[constraint.first], x[constraint.second]
        if a <= 0 or b <= 0:
            return -np.inf
        return a * b - constraint.bound
    residual = constraint.matrix @ x + constraint.offset
    return constraint.coefficients @ x + constraint.constant - residual @ residual


def _barrier(constraints: Sequence[Constraint], x: np.ndarray):
    n = x.size
    value, grad, hess = 0.0, np.zeros(n), np.zeros((n, n))
    for constraint in constraints:
        slack = _slack(constraint, x)
        value -= np.log(slack)
        if isinstance(constraint, LinearConstraint):
            a = constraint.coefficients
            grad += a / slack
            hess += np.outer(a, a) / slack ** 2
            continue
        if isinstance(constraint, HyperbolicConstraint):
            i, j = constraint.first, constraint.second
            ds = np.zeros(n)
            ds[i], ds[j] = x[j], x[i]
            curvature = np.zeros((n, n))
            curvature[i, j] = curvature[j, i] = 1.0
        else:
            residual = constraint.matrix @ x + constraint.offset
            ds = constraint.coefficients - 2.0 * constraint.matrix.T @ residual
            curvature = -2.0 * constraint.matrix.T @ constraint.matrix
        grad -= ds / slack
        hess += np.outer(ds, ds) / slack ** 2 - curvature / slack
    return value, grad, hess


def _strictly_feasible(constraints: Sequence[Constraint], x: np.ndarray) -> bool:
    return all(_slack(c, x) > 0 for c in constraints)


def solve_subproblem(
    problem: ConvexSubproblem,
    start: np.ndarray,
    tol: float = 1e-8,
    max_newton: int = 500,
) -> SubproblemResult:
    """
    Barrier path following from a strictly feasible start.

    Terminates when the barrier gap m/t drops below tol·max(1, |c·x0|).
    The returned point never has a larger objective than the start.
    """
    c = np.asarray(problem.objective, dtype=float)
    constraints = problem.constraints
    x = np.asarray(start, dtype=float).copy()
    start_x = x.copy()

    for constraint in constraints:
        if not _slack(constraint, x) > 0:
            raise InfeasibleSubproblemException(
                f"start point violates constraint {constraint.name}", constraint=constraint.name
            )

    m = len(constraints)
    target = tol * max(1.0, abs(float(c @ x)))
    if m == 0:
        return SubproblemResult(x=x, objective=float(c @ x), iterations=0, gap=0.0, variables=problem.variables)

    t, factor = 1.0, 10.0
    newton_steps = 0
    while True:
        for _ in range(100):
            value, grad, hess = _barrier(constraints, x)
            total_grad = t * c + grad
            try:
                step = linalg.solve(hess, -total_grad, assume_a="sym")
            except linalg.LinAlgError:
                step = linalg.lstsq(hess, -total_grad)[0]
            decrement = -float(total_grad @ step)
            newton_steps += 1
            if decrement / 2.0 <= 1e-12 or newton_steps > max_newton:
                break
            alpha = 1.0
            while not _strictly_feasible(constraints, x + alpha * step) and alpha > 1e-20:
                alpha *= 0.5
            current = t * (c @ x) + value
            while alpha > 1e-20:
                candidate = x + alpha * step
                if _strictly_feasible(constraints, candidate):
                    new_value = t * (c @ candidate) + _barrier(constraints, candidate)[0]
                    if new_value <= current - 0.25 * alpha * decrement:
                        break
                alpha *= 0.5
            if alpha <= 1e-20:
                break
            x = x + alpha * step

        if newton_steps > max_newton:
            raise SolverFailureException(
                f"barrier method exceeded {max_newton} Newton steps",
                trace=[{"t": t, "objective": float(c @ x)}],
                best=x,
            )
        gap = m / t
        if gap <= target:
            break
        t *= factor

    objective = float(c @ x)
    if objective > float(c @ start_x):
        x, objective = start_x, float(c @ start_x)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("Subproblem solved (variables=%s, constraints=%s, newton=%s)", x.size, m, newton_steps)
    return SubproblemResult(x=x, objective=objective, iterations=newton_steps, gap=gap, variables=problem.variables)
