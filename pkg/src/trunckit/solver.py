"""Levenberg-Marquardt search for the dihedral angles of a triangulation."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .equations import AngleVector, ResidualSystem, assemble, evaluate, jacobian, residual_by_class
from .lorentz import EPS_ANGLE
from .tetshape import edges_at, validate_angles
from .triangulation import Triangulation


class Status(Enum):
    SOLVED = "Solved"
    NO_CONVERGENCE = "NoConvergence"
    LEFT_DOMAIN = "LeftDomain"


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 200
    residual_tol: float = 1e-10
    retries: int = 16
    seed: int = 0
    perturbation: float = 0.2
    lambda_init: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    lambda_max: float = 1e16
    max_halvings: int = 40
    eps_angle: float = EPS_ANGLE

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.residual_tol <= 0 or self.eps_angle <= 0:
            raise ValueError("tolerances must be positive")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")


@dataclass(frozen=True)
class SolveOutcome:
    status: Status
    x: np.ndarray
    theta: np.ndarray
    residual_norm: float
    iterations: int
    trace: tuple
    attempt: int = 0

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLVED


def initial_angle() -> float:
    return min(math.pi / 3, 0.9 * math.pi / 3)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TRUNCKIT_THREADS", "1")))
    except ValueError:
        return 1


class _Problem:
    def __init__(self, tri: Triangulation, config: SolverConfig):
        self.tri = tri
        self.config = config
        self.system: ResidualSystem = assemble(tri)
        self.unknowns: AngleVector = self.system.unknowns
        index = self.unknowns.index
        rows = []
        for t, comb in enumerate(tri.tetrahedra):
            for v in range(4):
                if comb.is_ideal(v):
                    continue
                cols = [index[(t, e)] for e in edges_at(v) if (t, e) in index]
                rows.append(cols)
        self.vertex_rows = rows

    def feasible(self, x) -> bool:
        limit = math.pi - self.config.eps_angle
        return all(sum(x[c] for c in cols) < limit for cols in self.vertex_rows)

    def project(self, x) -> np.ndarray:
        eps = self.config.eps_angle
        return np.clip(x, eps, math.pi - eps)

    def run(self, x0: np.ndarray, attempt: int) -> SolveOutcome:
        cfg = self.config
        x = self.project(x0)
        if not self.feasible(x):
            return self._outcome(Status.LEFT_DOMAIN, x, math.inf, 0, (), attempt)
        r = evaluate(self.system, x)
        if not np.all(np.isfinite(r)):
            return self._outcome(Status.LEFT_DOMAIN, x, math.inf, 0, (), attempt)
        norm = float(np.linalg.norm(r))
        trace = [norm]
        lam = cfg.lambda_init
        for it in range(1, cfg.max_iters + 1):
            if np.max(np.abs(r)) < cfg.residual_tol:
                return self._finish(x, r, it - 1, trace, attempt)
            jac = jacobian(self.system, x)
            grad = jac.T @ r
            jtj = jac.T @ jac
            scale = np.maximum(np.diag(jtj), 1e-12)
            accepted = False
            while lam <= cfg.lambda_max:
                try:
                    step = np.linalg.solve(jtj + lam * np.diag(scale), -grad)
                except np.linalg.LinAlgError:
                    lam *= cfg.lambda_up
                    continue
                cand = self._damped(x, step)
                if cand is not None:
                    rc = evaluate(self.system, cand)
                    if np.all(np.isfinite(rc)):
                        nc = float(np.linalg.norm(rc))
                        if nc < norm:
                            x, r, norm = cand, rc, nc
                            lam = max(lam * cfg.lambda_down, 1e-15)
                            accepted = True
                            break
                lam *= cfg.lambda_up
            trace.append(norm)
            if not accepted:
                return self._outcome(Status.NO_CONVERGENCE, x, norm, it, tuple(trace), attempt)
        if np.max(np.abs(r)) < cfg.residual_tol:
            return self._finish(x, r, cfg.max_iters, trace, attempt)
        return self._outcome(Status.NO_CONVERGENCE, x, norm, cfg.max_iters, tuple(trace), attempt)

    def _damped(self, x, step):
        for _ in range(self.config.max_halvings):
            cand = self.project(x + step)
            if self.feasible(cand):
                return cand
            step = step / 2
        return None

    def _finish(self, x, r, iterations, trace, attempt) -> SolveOutcome:
        theta = self.unknowns.to_angles(x)
        valid = all(validate_angles(c, theta[t]).ok for t, c in enumerate(self.tri.tetrahedra))
        status = Status.SOLVED if valid else Status.LEFT_DOMAIN
        return self._outcome(status, x, float(np.linalg.norm(r)), iterations, tuple(trace), attempt)

    def _outcome(self, status, x, norm, iterations, trace, attempt) -> SolveOutcome:
        return SolveOutcome(status, np.array(x), self.unknowns.to_angles(x), norm, iterations,
                            tuple(trace), attempt)


def starting_points(n: int, config: SolverConfig) -> list:
    base = np.full(n, initial_angle())
    rng = np.random.default_rng(config.seed)
    points = [base]
    for _ in range(config.retries):
        points.append(base * (1.0 + rng.uniform(-config.perturbation, config.perturbation, n)))
    return points


def solve(tri: Triangulation, config: SolverConfig | None = None) -> SolveOutcome:
    config = config or SolverConfig()
    problem = _Problem(tri, config)
    points = starting_points(len(problem.unknowns), config)
    threads = _threads()
    outcomes = []
    if threads == 1:
        for i, p in enumerate(points):
            out = problem.run(p, i)
            outcomes.append(out)
            if out.solved:
                return out
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda a: problem.run(a[1], a[0]), enumerate(points)))
        for out in outcomes:
            if out.solved:
                return out
    for status in (Status.NO_CONVERGENCE, Status.LEFT_DOMAIN):
        candidates = [o for o in outcomes if o.status is status]
        if candidates:
            return min(candidates, key=lambda o: (o.residual_norm, o.attempt))
    raise RuntimeError("no attempts were made")


@dataclass(frozen=True)
class Certificate:
    by_class: dict
    validity: tuple
    tolerance: float

    @property
    def ok(self) -> bool:
        return not self.validity and all(v < self.tolerance for v in self.by_class.values())


def certify(tri: Triangulation, theta, tol: float = 1e-9) -> Certificate:
    """Evaluate every condition class, including those the reduced system
    leaves out, plus the per-tetrahedron validity constraints."""
    theta = np.asarray(theta, dtype=float)
    system = assemble(tri, reduce=False)
    x = system.unknowns.from_angles(theta)
    problems = []
    for t, comb in enumerate(tri.tetrahedra):
        rep = validate_angles(comb, theta[t])
        problems.extend(f"tetrahedron {t}: {p}" for p in rep.problems)
    return Certificate(residual_by_class(system, x), tuple(problems), tol)
