"""Genetic search over binary pinning sets with a stability-violation penalty.

A chromosome holds one bit per (node, member network) pair: bit k/i says
whether node i is pinned inside network k.  Positions outside a node's
membership do not exist.  Fitness counts the distinct pinned nodes (an overlap
node pinned in several networks counts once) and, when any network's gain
search fails, adds penalty_coeff times the summed stability violation, so the
population is pulled toward certifiable sets while minimizing their size.

Evolution follows tournament selection, uniform (or one-point) crossover,
independent bit-flip mutation, and elitist truncation of parents plus
offspring.  Everything is deterministic for a fixed seed, and gain solves are
cached by gene bitmask since the eigensolve dominates the cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .network import MultiNetworkSystem
from .stability import (
    FeasibilityResult,
    PinningPlan,
    StabilityParams,
    check_gain,
    infeasibility_multi,
    solve_min_gain,
)


@dataclass(frozen=True)
class Chromosome:
    """Per-network binary pin indicators, aligned with each network's nodes."""

    genes: tuple[np.ndarray, ...]  # uint8 arrays

    def key(self) -> bytes:
        return b"|".join(g.tobytes() for g in self.genes)

    def aggregated(self, sys: MultiNetworkSystem) -> np.ndarray:
        """Global 0/1 vector: node pinned in at least one member network."""
        agg = np.zeros(sys.total_nodes, dtype=np.uint8)
        for net, g in zip(sys.networks, self.genes):
            np.maximum.at(agg, net.node_ids, g)
        return agg


@dataclass(frozen=True)
class GaConfig:
    """All evolutionary knobs plus the stability constants used by fitness."""

    population_size: int = 100
    generations: int = 20
    crossover_prob: float = 0.8
    mutation_prob: float = 0.05
    init_prob: float = 0.3
    penalty_coeff: float = 10.0
    tournament_size: int = 2
    rng_seed: int = 0
    stability: StabilityParams = field(default_factory=StabilityParams)
    crossover_op: str = "uniform"
    adaptive_penalty: bool = False
    fixed_gain: Optional[float] = None

    def __post_init__(self):
        for name in ("crossover_prob", "mutation_prob", "init_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.population_size < 1 or self.generations < 0:
            raise ValueError("population_size must be >= 1 and generations >= 0")
        if self.penalty_coeff < 0.0:
            raise ValueError("penalty_coeff must be >= 0")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.crossover_op not in ("uniform", "one_point"):
            raise ValueError(f"unknown crossover_op {self.crossover_op!r}")
        if self.fixed_gain is not None and self.fixed_gain <= 0.0:
            raise ValueError("fixed_gain must be > 0 when set")


@dataclass(frozen=True)
class FitnessDetails:
    """Cached evaluation: pin count, violation, gains and per-network results."""

    pinned_count: int
    xi: float
    feasible: bool
    gains: tuple[Optional[float], ...]
    per_network: tuple[FeasibilityResult, ...]
    aggregated: np.ndarray


def fitness(
    ch: Chromosome,
    sys: MultiNetworkSystem,
    cfg: GaConfig,
    penalty_coeff: Optional[float] = None,
) -> tuple[float, FitnessDetails]:
    """Evaluate one chromosome: distinct-pin count plus violation penalty.

    Solves each network's minimal gain (or tests cfg.fixed_gain when set).
    Feasible everywhere gives fitness exactly equal to the pinned count.
    """
    lam = cfg.penalty_coeff if penalty_coeff is None else penalty_coeff
    results = []
    for net, genes in zip(sys.networks, ch.genes):
        if genes.shape != (net.n,):
            raise ValueError("chromosome shape does not match the system")
        pins = genes.astype(np.float64)
        if cfg.fixed_gain is None:
            res = solve_min_gain(
                net.lap.symmetric_part, pins, net.coupling_strength, net.gamma, cfg.stability
            )
        else:
            res = check_gain(
                net.lap.symmetric_part,
                pins,
                net.coupling_strength,
                net.gamma,
                cfg.fixed_gain,
                cfg.stability,
            )
        results.append(res)
    agg = ch.aggregated(sys)
    count = int(agg.sum())
    xi = infeasibility_multi(results)
    feasible = xi == 0.0
    fit = float(count) if feasible else float(count) + lam * xi
    details = FitnessDetails(
        pinned_count=count,
        xi=xi,
        feasible=feasible,
        gains=tuple(r.gain for r in results),
        per_network=tuple(results),
        aggregated=agg,
    )
    return fit, details


@dataclass(frozen=True)
class Individual:
    """A chromosome with its evaluated fitness, as ranked by the GA."""

    chromosome: Chromosome
    fitness: float
    details: FitnessDetails


def init_population(cfg: GaConfig, sys: MultiNetworkSystem, rng: np.random.Generator) -> list[Chromosome]:
    """Draw population_size chromosomes with each defined gene ~ Bernoulli(p_d)."""
    pop = []
    for _ in range(cfg.population_size):
        genes = tuple(
            (rng.random(net.n) < cfg.init_prob).astype(np.uint8) for net in sys.networks
        )
        pop.append(Chromosome(genes=genes))
    return pop


def tournament_select(
    population: Sequence[Individual], k: int, rng: np.random.Generator
) -> Individual:
    """Best of k uniform draws with replacement.

    Ties break toward fewer pinned nodes, then the lower population index.
    """
    if len(population) == 0:
        raise ValueError("population must not be empty")
    if k < 1:
        raise ValueError("tournament size must be >= 1")
    idx = rng.integers(0, len(population), size=k)
    best = min(idx, key=lambda i: (population[i].fitness, population[i].details.pinned_count, i))
    return population[best]


def crossover(
    a: Chromosome,
    b: Chromosome,
    p_c: float,
    rng: np.random.Generator,
    op: str = "uniform",
) -> tuple[Chromosome, Chromosome]:
    """With probability p_c, mix two parents; otherwise return copies.

    Uniform crossover swaps each gene between the children with probability
    one half; one-point crossover splits the concatenated gene string once.
    """
    if len(a.genes) != len(b.genes) or any(
        x.shape != y.shape for x, y in zip(a.genes, b.genes)
    ):
        raise ValueError("parents must have matching gene shapes")
    c1 = [g.copy() for g in a.genes]
    c2 = [g.copy() for g in b.genes]
    if rng.random() < p_c:
        if op == "uniform":
            for k in range(len(c1)):
                mask = rng.random(c1[k].shape[0]) < 0.5
                c1[k][mask], c2[k][mask] = b.genes[k][mask], a.genes[k][mask]
        elif op == "one_point":
            total = sum(g.shape[0] for g in c1)
            point = int(rng.integers(1, total)) if total > 1 else 0
            offset = 0
            for k in range(len(c1)):
                size = c1[k].shape[0]
                lo = max(0, point - offset)
                if lo < size:
                    c1[k][lo:], c2[k][lo:] = b.genes[k][lo:], a.genes[k][lo:]
                offset += size
        else:
            raise ValueError(f"unknown crossover op {op!r}")
    return Chromosome(genes=tuple(c1)), Chromosome(genes=tuple(c2))


def mutate(ch: Chromosome, p_m: float, rng: np.random.Generator) -> Chromosome:
    """Flip each defined gene independently with probability p_m."""
    genes = []
    for g in ch.genes:
        flips = rng.random(g.shape[0]) < p_m
        genes.append(g ^ flips.astype(np.uint8))
    return Chromosome(genes=tuple(genes))


@dataclass(frozen=True)
class GaReport:
    """Evolution outcome: incumbent, best feasible find and statistics series.

    ``best`` is the lowest-fitness individual of the final population; when
    violations are small the penalty can rank a near-feasible set above a
    feasible one, so ``best_feasible`` separately tracks the lowest-count
    feasible chromosome seen anywhere in the run (None when none was found).
    The series include the initial population as generation 0, so their length
    is generations + 1.  ``lmi_evaluations`` counts gain solves actually run
    (cache misses times networks).
    """

    best: Individual
    best_feasible: Optional[Individual]
    generations: np.ndarray
    best_fitness: np.ndarray
    mean_fitness: np.ndarray
    best_pinned_count: np.ndarray
    feasible_fraction: np.ndarray
    lmi_evaluations: int

    def best_plan(self, sys: MultiNetworkSystem) -> PinningPlan:
        """Pins and solved gains of the best feasible chromosome."""
        if self.best_feasible is None:
            raise ValueError("no feasible chromosome was found; nothing to plan with")
        ind = self.best_feasible
        return PinningPlan.from_genes(sys, ind.chromosome.genes, ind.details.gains)

    def to_dict(self) -> dict:
        det = self.best.details
        d = {
            "best_fitness": float(self.best.fitness),
            "best_pinned_count": det.pinned_count,
            "best_is_feasible": det.feasible,
            "best_xi": det.xi,
            "best_gains": [None if g is None else float(g) for g in det.gains],
            "best_genes": ["".join(str(int(b)) for b in g) for g in self.best.chromosome.genes],
            "generations": self.generations.tolist(),
            "best_fitness_series": self.best_fitness.tolist(),
            "mean_fitness_series": self.mean_fitness.tolist(),
            "best_pinned_count_series": self.best_pinned_count.tolist(),
            "feasible_fraction_series": self.feasible_fraction.tolist(),
            "lmi_evaluations": self.lmi_evaluations,
        }
        if self.best_feasible is None:
            d["feasible_best"] = None
        else:
            fdet = self.best_feasible.details
            d["feasible_best"] = {
                "pinned_count": fdet.pinned_count,
                "gains": [float(g) for g in fdet.gains],
                "genes": [
                    "".join(str(int(b)) for b in g)
                    for g in self.best_feasible.chromosome.genes
                ],
            }
        return d

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("generation,best_fitness,mean_fitness,best_pinned_count,feasible_fraction\n")
            for row in zip(
                self.generations,
                self.best_fitness,
                self.mean_fitness,
                self.best_pinned_count,
                self.feasible_fraction,
            ):
                fh.write(
                    f"{row[0]},{row[1]:.17g},{row[2]:.17g},{row[3]},{row[4]:.17g}\n"
                )


class _EvalCache:
    """Bitmask-keyed store of FitnessDetails; fitness is recomputed from it.

    Also tracks the lowest-count feasible individual seen over the whole run.
    """

    def __init__(self, sys: MultiNetworkSystem, cfg: GaConfig):
        self.sys = sys
        self.cfg = cfg
        self.store: dict[bytes, FitnessDetails] = {}
        self.lmi_evaluations = 0
        self.best_feasible: Optional[Individual] = None

    def evaluate(self, ch: Chromosome, penalty_coeff: float) -> Individual:
        key = ch.key()
        det = self.store.get(key)
        if det is None:
            _, det = fitness(ch, self.sys, self.cfg, penalty_coeff=penalty_coeff)
            self.store[key] = det
            self.lmi_evaluations += self.sys.num_networks
        fit = (
            float(det.pinned_count)
            if det.feasible
            else float(det.pinned_count) + penalty_coeff * det.xi
        )
        ind = Individual(chromosome=ch, fitness=fit, details=det)
        if det.feasible and (
            self.best_feasible is None
            or det.pinned_count < self.best_feasible.details.pinned_count
        ):
            self.best_feasible = ind
        return ind


def evolve(cfg: GaConfig, sys: MultiNetworkSystem) -> GaReport:
    """Run the full evolutionary loop and report per-generation statistics.

    Each generation breeds population_size offspring via tournament selection,
    crossover and mutation, then keeps the best population_size individuals of
    parents and offspring combined.  With adaptive_penalty the coefficient
    grows linearly to twice its base value over the run.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    cache = _EvalCache(sys, cfg)

    def lam_at(gen: int) -> float:
        if not cfg.adaptive_penalty or cfg.generations == 0:
            return cfg.penalty_coeff
        return cfg.penalty_coeff * (1.0 + gen / cfg.generations)

    population = [cache.evaluate(ch, lam_at(0)) for ch in init_population(cfg, sys, rng)]
    population.sort(key=lambda ind: (ind.fitness, ind.details.pinned_count))

    stats = {"best": [], "mean": [], "count": [], "feasible": []}

    def record(pop: list[Individual]) -> None:
        stats["best"].append(pop[0].fitness)
        stats["mean"].append(float(np.mean([i.fitness for i in pop])))
        stats["count"].append(pop[0].details.pinned_count)
        stats["feasible"].append(
            float(np.mean([1.0 if i.details.feasible else 0.0 for i in pop]))
        )

    record(population)

    for gen in range(1, cfg.generations + 1):
        lam = lam_at(gen)
        offspring: list[Chromosome] = []
        while len(offspring) < cfg.population_size:
            p1 = tournament_select(population, cfg.tournament_size, rng)
            p2 = tournament_select(population, cfg.tournament_size, rng)
            c1, c2 = crossover(
                p1.chromosome, p2.chromosome, cfg.crossover_prob, rng, op=cfg.crossover_op
            )
            offspring.append(mutate(c1, cfg.mutation_prob, rng))
            offspring.append(mutate(c2, cfg.mutation_prob, rng))
        offspring = offspring[: cfg.population_size]

        evaluated = [cache.evaluate(ch, lam) for ch in offspring]
        if cfg.adaptive_penalty:
            population = [cache.evaluate(i.chromosome, lam) for i in population]
        combined = population + evaluated
        combined.sort(key=lambda ind: (ind.fitness, ind.details.pinned_count))
        population = combined[: cfg.population_size]
        record(population)

    return GaReport(
        best=population[0],
        best_feasible=cache.best_feasible,
        generations=np.arange(cfg.generations + 1),
        best_fitness=np.array(stats["best"]),
        mean_fitness=np.array(stats["mean"]),
        best_pinned_count=np.array(stats["count"], dtype=np.int64),
        feasible_fraction=np.array(stats["feasible"]),
        lmi_evaluations=cache.lmi_evaluations,
    )
