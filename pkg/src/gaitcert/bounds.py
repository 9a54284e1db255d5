"""Stage 2: PAC-Bayes certification over a finite policy set.

The continuous weight distribution from stage 1 is discretized by sampling m
policies; their tube costs over N fresh environments form a cost matrix.
Minimizing the quadratic PAC-Bayes bound

    (sqrt(C_D(p) + R(p)) + sqrt(R(p)))^2,
    R(p) = (KL(p || uniform) + log(2 sqrt(N) / delta)) / (2 N)

over the simplex is a smooth convex problem; it is solved by exponentiated
gradient descent with backtracking, verified against a brute-force simplex
grid in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environments import Environment
from .errors import InvalidParameterError
from .gaits import GaitLibrary
from .policy import DiscretePolicySet, PolicyDistribution
from .simulate import SimConfig, rollout_batch


@dataclass(frozen=True)
class CostMatrix:
    """Tube costs, entry (i, j) = cost of policy j in environment i."""

    entries: np.ndarray  # (N, m) in [0, 1]
    env_ids: tuple[int, ...]
    policy_ids: tuple[int, ...]

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", e)
        if e.ndim != 2:
            raise InvalidParameterError("entries must be a 2-D matrix")
        if e.shape != (len(self.env_ids), len(self.policy_ids)):
            raise InvalidParameterError("entry shape must match id lists")
        if np.any(e < 0) or np.any(e > 1):
            raise InvalidParameterError("cost entries must lie in [0, 1]")

    @property
    def column_means(self) -> np.ndarray:
        return self.entries.mean(axis=0)


@dataclass(frozen=True)
class BoundResult:
    """Optimized posterior and the certified bound it achieves."""

    posterior: np.ndarray
    empirical_cost: float
    kl: float
    regularizer: float
    bound: float
    n_envs: int
    delta: float
    converged: bool
    iterations: int
    gap: float  # first-order optimality residual at termination


def kl_discrete(p, q) -> float:
    """KL divergence between finite distributions, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise InvalidParameterError("p and q must be equal-length vectors")
    support = p > 0
    if np.any(q[support] == 0):
        return math.inf
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


def regularizer(kl: float, n_envs: int, delta: float) -> float:
    """(KL + log(2 sqrt(N) / delta)) / (2 N)."""
    if n_envs < 1:
        raise InvalidParameterError("n_envs must be >= 1")
    if not 0 < delta < 1:
        raise InvalidParameterError("delta must lie in (0, 1)")
    if kl < 0:
        raise InvalidParameterError("kl must be nonnegative")
    return (kl + math.log(2.0 * math.sqrt(n_envs) / delta)) / (2.0 * n_envs)


def quad_bound(empirical: float, reg: float) -> float:
    """(sqrt(empirical + reg) + sqrt(reg))^2."""
    if not 0 <= empirical <= 1:
        raise InvalidParameterError("empirical cost must lie in [0, 1]")
    if reg < 0:
        raise InvalidParameterError("regularizer must be nonnegative")
    return (math.sqrt(empirical + reg) + math.sqrt(reg)) ** 2


def discretize_policy_space(
    prior: PolicyDistribution, m: int, stream: np.random.Generator
) -> DiscretePolicySet:
    """Sample m iid policies from the trained distribution, uniform probs."""
    if m < 2:
        raise InvalidParameterError("need at least two policies")
    eps = stream.standard_normal((m, prior.dim))
    weights = prior.mean + prior.sigma * eps
    return DiscretePolicySet(weights=weights, probs=np.full(m, 1.0 / m))


def compute_cost_matrix(
    policy_set: DiscretePolicySet,
    envs: list[Environment],
    library: GaitLibrary,
    cfg: SimConfig,
    workers: int = 1,
) -> CostMatrix:
    """Tube cost of every policy in every environment, row-major order."""
    if not envs:
        raise InvalidParameterError("need at least one environment")
    m = len(policy_set)
    jobs = [(policy_set.weights[j], env) for env in envs for j in range(m)]
    results = rollout_batch(jobs, library, cfg, workers=workers)
    entries = np.array([res.tube_cost for res in results]).reshape(len(envs), m)
    return CostMatrix(
        entries=entries,
        env_ids=tuple(env.env_index for env in envs),
        policy_ids=tuple(range(m)),
    )


def _objective_and_grad(p: np.ndarray, cbar: np.ndarray, n_envs: int,
                        log_term: float) -> tuple[float, np.ndarray]:
    m = p.size
    log_ratio = np.log(p * m)  # prior is uniform 1/m
    kl = float(np.dot(p, log_ratio))
    reg = (kl + log_term) / (2.0 * n_envs)
    emp = float(np.dot(cbar, p))
    sq_e = math.sqrt(emp + reg)
    sq_r = math.sqrt(reg)
    f = (sq_e + sq_r) ** 2
    d_reg = (log_ratio + 1.0) / (2.0 * n_envs)
    grad = (sq_e + sq_r) * ((cbar + d_reg) / sq_e + d_reg / sq_r)
    return f, grad


def optimize_posterior(
    matrix: CostMatrix,
    delta: float,
    tol: float = 1e-8,
    max_iter: int = 200_000,
) -> BoundResult:
    """Minimize the quadratic bound over the simplex.

    Exponentiated-gradient descent with a backtracking surrogate test; the
    objective never increases across accepted steps.  Terminates when the
    Frank-Wolfe gap (an upper bound on the suboptimality of this convex
    objective) drops below `tol`; if the iteration cap is hit first the
    result is returned with `converged=False`.
    """
    if not 0 < delta < 1:
        raise InvalidParameterError("delta must lie in (0, 1)")
    cbar = matrix.column_means
    n_envs = matrix.entries.shape[0]
    m = cbar.size
    log_term = math.log(2.0 * math.sqrt(n_envs) / delta)

    p = np.full(m, 1.0 / m)
    eta = 1.0
    f, grad = _objective_and_grad(p, cbar, n_envs, log_term)
    gap = float(np.dot(p, grad) - grad.min())
    iteration = 0
    while gap > tol and iteration < max_iter:
        accepted = False
        while eta >= 1e-18:
            step = -eta * grad
            step -= step.max()
            p_new = p * np.exp(step)
            p_new = np.maximum(p_new / p_new.sum(), 1e-300)
            p_new /= p_new.sum()
            f_new, grad_new = _objective_and_grad(p_new, cbar, n_envs, log_term)
            kl_step = float(np.sum(p_new * np.log(p_new / p)))
            surrogate = f + float(np.dot(grad, p_new - p)) + kl_step / eta
            if f_new <= surrogate + 1e-15:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break
        p, f, grad = p_new, f_new, grad_new
        gap = float(np.dot(p, grad) - grad.min())
        eta = min(eta * 2.0, 1e6)
        iteration += 1

    p = p / p.sum()
    # KL is nonnegative mathematically; rounding can leave a tiny negative sum
    kl = max(0.0, kl_discrete(p, np.full(m, 1.0 / m)))
    reg = regularizer(kl, n_envs, delta)
    emp = float(np.dot(cbar, p))
    return BoundResult(
        posterior=p,
        empirical_cost=emp,
        kl=kl,
        regularizer=reg,
        bound=quad_bound(emp, reg),
        n_envs=n_envs,
        delta=delta,
        converged=gap <= tol,
        iterations=iteration,
        gap=gap,
    )


@dataclass(frozen=True)
class TrueCostEstimate:
    """Held-out estimate of the posterior's expected tube cost."""

    estimate: float
    per_env_costs: np.ndarray
    policy_indices: np.ndarray
    per_policy_mean: np.ndarray  # NaN for policies never drawn
    per_policy_count: np.ndarray


def estimate_true_cost(
    policy_set: DiscretePolicySet,
    held_out: list[Environment],
    library: GaitLibrary,
    cfg: SimConfig,
    stream: np.random.Generator,
    workers: int = 1,
) -> TrueCostEstimate:
    """Deploy the posterior on held-out environments.

    One policy is drawn from the posterior per environment, mirroring how
    the supervisor would act when meeting a new task instance.
    """
    if not held_out:
        raise InvalidParameterError("need at least one held-out environment")
    m = len(policy_set)
    indices = stream.choice(m, size=len(held_out), p=policy_set.probs)
    jobs = [(policy_set.weights[j], env) for j, env in zip(indices, held_out)]
    results = rollout_batch(jobs, library, cfg, workers=workers)
    costs = np.array([res.tube_cost for res in results])
    per_policy_mean = np.full(m, np.nan)
    per_policy_count = np.zeros(m, dtype=int)
    for j in range(m):
        mask = indices == j
        per_policy_count[j] = int(mask.sum())
        if per_policy_count[j]:
            per_policy_mean[j] = float(costs[mask].mean())
    return TrueCostEstimate(
        estimate=float(costs.mean()),
        per_env_costs=costs,
        policy_indices=indices,
        per_policy_mean=per_policy_mean,
        per_policy_count=per_policy_count,
    )
