"""Elitist mu+lambda evolution strategy over the joint 6N pose vector.

Every random draw is derived from (seed, generation, child index) through
``numpy.random.SeedSequence`` spawn keys, so offspring can be created and
evaluated in any order (or in parallel) without changing the result.
Selection keeps the best mu of parents and offspring, ties broken by
creation order, so the best loss never increases.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import LengthMismatch
from .fitness import encode_poses


@dataclass(frozen=True)
class ESConfig:
    generations: int = 100
    mu: int = 64
    lambda_offspring: int = 128
    sigma_rotation: float = 0.005  # radians, per rotation component
    sigma_translation: float = 0.1  # meters, per translation component
    sigma_decay: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.mu < 2:
            raise ValueError("mu must be at least 2")
        if self.lambda_offspring < 1:
            raise ValueError("lambda_offspring must be at least 1")
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if self.sigma_rotation < 0 or self.sigma_translation < 0:
            raise ValueError("mutation strengths must be non-negative")
        if not 0.0 < self.sigma_decay <= 1.0:
            raise ValueError("sigma_decay must lie in (0, 1]")

    def sigmas_at(self, generation: int) -> tuple[float, float]:
        """(rotation, translation) mutation strengths for a 1-based generation."""
        decay = self.sigma_decay ** (generation - 1)
        return self.sigma_rotation * decay, self.sigma_translation * decay


@dataclass
class Individual:
    genome: np.ndarray
    loss: float | None = None
    order: int = 0  # creation index, used as the deterministic tie-breaker


@dataclass
class EvolveTrace:
    generations: list[int] = field(default_factory=list)
    best_loss: list[float] = field(default_factory=list)
    mean_loss: list[float] = field(default_factory=list)
    best_genomes: list[np.ndarray] = field(default_factory=list)

    def record(self, generation: int, population: Sequence[Individual]) -> None:
        losses = [ind.loss for ind in population]
        best = int(np.argmin(losses))
        self.generations.append(generation)
        self.best_loss.append(float(losses[best]))
        self.mean_loss.append(float(np.mean(losses)))
        self.best_genomes.append(population[best].genome.copy())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["generation", "best_loss", "mean_loss"])
            for g, b, m in zip(self.generations, self.best_loss, self.mean_loss):
                writer.writerow([g, repr(b), repr(m)])


def _stream(seed: int, generation: int, index: int) -> np.random.Generator:
    """Independent RNG for one (generation, child) cell of the run."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(generation, index)))


def _genome_sigmas(cfg: ESConfig, n_components: int, generation: int) -> np.ndarray:
    """Per-component noise scale: rotation triplets then translation triplets."""
    s_rot, s_tr = cfg.sigmas_at(generation)
    sigma = np.empty(n_components)
    for i in range(0, n_components, 6):
        sigma[i : i + 3] = s_rot
        sigma[i + 3 : i + 6] = s_tr
    return sigma


def init_population(start_poses, cfg: ESConfig) -> list[Individual]:
    """mu copies of the start genome, each corrupted by per-component Gaussian noise."""
    start = encode_poses(start_poses)
    sigma = _genome_sigmas(cfg, start.size, 1)
    population = []
    for i in range(cfg.mu):
        rng = _stream(cfg.seed, 0, i)
        population.append(Individual(start + rng.normal(0.0, 1.0, start.size) * sigma, order=i))
    return population


def recombine(p_i: Individual, p_j: Individual, rng: np.random.Generator) -> Individual:
    """Componentwise convex combination with independent uniform weights."""
    if p_i.genome.shape != p_j.genome.shape:
        raise LengthMismatch(f"genome lengths differ: {p_i.genome.size} vs {p_j.genome.size}")
    a = rng.uniform(0.0, 1.0, p_i.genome.size)
    return Individual(a * p_i.genome + (1.0 - a) * p_j.genome)


def mutate(child: Individual, generation: int, cfg: ESConfig, rng: np.random.Generator) -> Individual:
    """Add Gaussian noise whose strength decays exponentially with the generation."""
    sigma = _genome_sigmas(cfg, child.genome.size, generation)
    return Individual(child.genome + rng.normal(0.0, 1.0, child.genome.size) * sigma)


def _evaluate(individuals: list[Individual], loss_fn, threads: int) -> None:
    pending = [ind for ind in individuals if ind.loss is None]
    if not pending:
        return
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            losses = list(pool.map(lambda ind: loss_fn(ind.genome), pending))
    else:
        losses = [loss_fn(ind.genome) for ind in pending]
    for ind, loss in zip(pending, losses):
        ind.loss = float(loss)


def evolve(
    loss_fn: Callable[[np.ndarray], float],
    start_poses,
    cfg: ESConfig,
    threads: int = 0,
) -> tuple[Individual, EvolveTrace]:
    """Run the full strategy and return the best individual plus its trace.

    ``start_poses`` is a list of per-camera (rotation, translation) pairs.
    The trace records the selected population after initialization
    (generation 0) and after each of the G selection steps.
    """
    population = init_population(start_poses, cfg)
    _evaluate(population, loss_fn, threads)
    trace = EvolveTrace()
    trace.record(0, population)

    counter = cfg.mu
    for g in range(1, cfg.generations + 1):
        offspring = []
        for c in range(cfg.lambda_offspring):
            rng = _stream(cfg.seed, g, c)
            i, j = rng.choice(cfg.mu, size=2, replace=False)
            child = mutate(recombine(population[i], population[j], rng), g, cfg, rng)
            child.order = counter
            counter += 1
            offspring.append(child)
        _evaluate(offspring, loss_fn, threads)
        pool = population + offspring
        pool.sort(key=lambda ind: (ind.loss, ind.order))
        population = pool[: cfg.mu]
        trace.record(g, population)

    best = min(population, key=lambda ind: (ind.loss, ind.order))
    return best, trace
