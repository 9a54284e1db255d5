"""Stage 1: evolutionary-strategies training of the weight distribution.

Minimizes the empirical tracking cost over a diagonal Gaussian on policy
weights.  Gradients are estimated from antithetic perturbation pairs:

    grad_mean  ~ E[ C(mean + sigma*eps) * eps ] / sigma
    grad_sigma ~ E[ C(mean + sigma*eps) * (eps*eps - 1) ] / sigma

with each pair contributing both +eps and -eps evaluations, which cancels
any cost offset exactly in the mean gradient.  The sigma gradient is
chain-ruled into log-variance space before the update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .environments import Environment
from .errors import InvalidParameterError, NonFiniteCostError
from .gaits import GaitLibrary
from .policy import PolicyArch, PolicyDistribution, param_count
from .rng import LANE_ES_PERTURB, LANE_ES_SHUFFLE, make_stream
from .simulate import SimConfig, rollout_batch

SIGMA_FLOOR = 1e-8  # guards the elementwise division in the estimators


@dataclass(frozen=True)
class ESConfig:
    env_count: int = 500
    minibatch: int = 20
    pair_count: int = 2  # antithetic pairs per environment per iteration
    lr_mean: float = 0.1
    lr_logvar: float = 0.01
    epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        if min(self.env_count, self.minibatch, self.pair_count) < 1 or self.epochs < 0:
            raise InvalidParameterError("counts must be >= 1 and epochs >= 0")
        if self.minibatch > self.env_count:
            raise InvalidParameterError("minibatch cannot exceed env_count")
        if self.lr_mean <= 0 or self.lr_logvar <= 0:
            raise InvalidParameterError("learning rates must be positive")


@dataclass(frozen=True)
class ESIterationRecord:
    iteration: int
    epoch: int
    mean_cost: float  # mean over the iteration's sampled evaluations
    grad_mean_norm: float
    grad_sigma_norm: float
    mean_norm: float


@dataclass
class ESTrace:
    records: list[ESIterationRecord] = field(default_factory=list)

    def epoch_mean_costs(self) -> list[float]:
        if not self.records:
            return []
        n_epochs = self.records[-1].epoch + 1
        sums = [0.0] * n_epochs
        counts = [0] * n_epochs
        for rec in self.records:
            sums[rec.epoch] += rec.mean_cost
            counts[rec.epoch] += 1
        return [s / c for s, c in zip(sums, counts)]


def estimate_gradient(
    dist: PolicyDistribution,
    minibatch: list,
    cfg: ESConfig,
    stream: np.random.Generator,
    cost_fn=None,
    batch_cost_fn=None,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Monte Carlo gradient estimate over a minibatch of environments.

    Draws `cfg.pair_count` antithetic pairs per environment.  Exactly one of
    `cost_fn(weights, env) -> float` or `batch_cost_fn(jobs) -> list[float]`
    must be given.  Returns (grad_mean, grad_sigma, mean_cost); grad_sigma is
    with respect to sigma itself, not log-variance.
    """
    if not minibatch:
        raise InvalidParameterError("minibatch must be nonempty")
    if (cost_fn is None) == (batch_cost_fn is None):
        raise InvalidParameterError("pass exactly one of cost_fn or batch_cost_fn")
    d = dist.dim
    sigma = dist.sigma
    eps_draws = []
    jobs = []
    for env in minibatch:
        for _ in range(cfg.pair_count):
            eps = stream.standard_normal(d)
            eps_draws.append(eps)
            delta = sigma * eps
            jobs.append((dist.mean + delta, env))
            jobs.append((dist.mean - delta, env))
    if batch_cost_fn is not None:
        costs = batch_cost_fn(jobs)
    else:
        costs = [cost_fn(w, env) for w, env in jobs]

    acc_mean = np.zeros(d)
    acc_sigma = np.zeros(d)
    for pair_idx, eps in enumerate(eps_draws):
        c_plus = costs[2 * pair_idx]
        c_minus = costs[2 * pair_idx + 1]
        acc_mean += (0.5 * (c_plus - c_minus)) * eps
        acc_sigma += (0.5 * (c_plus + c_minus)) * (eps * eps - 1.0)
    n_pairs = len(eps_draws)
    sigma_safe = np.maximum(sigma, SIGMA_FLOOR)
    grad_mean = (acc_mean / n_pairs) / sigma_safe
    grad_sigma = (acc_sigma / n_pairs) / sigma_safe
    return grad_mean, grad_sigma, float(np.mean(costs))


def train_prior(
    cfg: ESConfig,
    dataset: list[Environment],
    library: GaitLibrary,
    sim_cfg: SimConfig,
    workers: int = 1,
) -> tuple[PolicyDistribution, ESTrace]:
    """Fit the weight distribution to the dataset by minibatch ES descent.

    Starts from the standard Gaussian N(0, I); `cfg.epochs == 0` returns it
    unchanged.  Minibatches are drawn without replacement, reshuffled each
    epoch.  Fully determined by (cfg.seed, dataset).
    """
    if len(dataset) != cfg.env_count:
        raise InvalidParameterError(
            f"dataset has {len(dataset)} environments, config expects {cfg.env_count}"
        )
    arch = PolicyArch(output_dim=len(library))
    dist = PolicyDistribution.standard(param_count(arch))
    trace = ESTrace()
    perturb = make_stream(cfg.seed, LANE_ES_PERTURB)
    shuffle = make_stream(cfg.seed, LANE_ES_SHUFFLE)

    def batch_cost_fn(jobs):
        results = rollout_batch(jobs, library, sim_cfg, workers=workers)
        return [res.prior_cost for res in results]

    iters_per_epoch = cfg.env_count // cfg.minibatch
    iteration = 0
    for epoch in range(cfg.epochs):
        order = shuffle.permutation(cfg.env_count)
        for b in range(iters_per_epoch):
            batch = [dataset[i] for i in order[b * cfg.minibatch:(b + 1) * cfg.minibatch]]
            grad_mean, grad_sigma, mean_cost = estimate_gradient(
                dist, batch, cfg, perturb, batch_cost_fn=batch_cost_fn
            )
            if not np.isfinite(mean_cost):
                raise NonFiniteCostError(
                    f"cost became non-finite at iteration {iteration}"
                )
            # d/d(log var) = (sigma / 2) * d/d(sigma)
            grad_logvar = 0.5 * dist.sigma * grad_sigma
            dist = PolicyDistribution(
                mean=dist.mean - cfg.lr_mean * grad_mean,
                log_var=dist.log_var - cfg.lr_logvar * grad_logvar,
            )
            trace.records.append(ESIterationRecord(
                iteration=iteration,
                epoch=epoch,
                mean_cost=mean_cost,
                grad_mean_norm=float(np.linalg.norm(grad_mean)),
                grad_sigma_norm=float(np.linalg.norm(grad_sigma)),
                mean_norm=float(np.linalg.norm(dist.mean)),
            ))
            iteration += 1
    return dist, trace
