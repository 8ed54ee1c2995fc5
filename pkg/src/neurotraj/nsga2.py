"""Elitist Pareto-dominance search: fast non-dominated sorting, crowding
distance, size-3 tournaments and the merge-and-truncate generational step."""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Any, Callable

from .errors import ContractError
from .genome import GeneticOperators, Genome, random_genome
from .objectives import ObjectiveVector

EvaluateFn = Callable[[Genome], tuple[ObjectiveVector, Any]]


@dataclass
class Individual:
    genome: Genome
    objectives: ObjectiveVector
    rank: int = 0
    crowding: float = 0.0
    evaluation: Any = None  # engine-agnostic payload (e.g. EvaluationResult)


@dataclass
class FrontSet:
    fronts: list[list[Individual]] = field(default_factory=list)


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """True iff a <= b componentwise with at least one strict improvement."""
    if a.ids != b.ids:
        raise ContractError("objective vectors have different ids or order")
    better = False
    for va, vb in zip(a.values, b.values):
        if va > vb:
            return False
        if va < vb:
            better = True
    return better


def nondominated_sort(pop: list[Individual]) -> FrontSet:
    """Iterative front peeling; assigns each individual's rank."""
    if not pop:
        raise ContractError("population must be non-empty")
    n = len(pop)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(pop[p].objectives, pop[q].objectives):
                dominated_by[p].append(q)
            elif dominates(pop[q].objectives, pop[p].objectives):
                counts[p] += 1
        if counts[p] == 0:
            pop[p].rank = 0
            fronts[0].append(p)

    i = 0
    while fronts[i]:
        nxt = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                counts[q] -= 1
                if counts[q] == 0:
                    pop[q].rank = i + 1
                    nxt.append(q)
        i += 1
        fronts.append(nxt)
    fronts.pop()
    return FrontSet([[pop[i] for i in front] for front in fronts])


def crowding_distance(front: list[Individual]) -> None:
    """Assign per-objective-range-normalized neighbor-gap sums.

    Boundary individuals per objective get infinity; objectives with zero
    range are skipped.
    """
    if not front:
        return
    for ind in front:
        ind.crowding = 0.0
    if len(front) <= 2:
        for ind in front:
            ind.crowding = float("inf")
        return
    m = len(front[0].objectives.values)
    for j in range(m):
        ordered = sorted(front, key=lambda ind: ind.objectives.values[j])
        lo = ordered[0].objectives.values[j]
        hi = ordered[-1].objectives.values[j]
        ordered[0].crowding = float("inf")
        ordered[-1].crowding = float("inf")
        if hi == lo:
            continue
        for i in range(1, len(ordered) - 1):
            gap = ordered[i + 1].objectives.values[j] - ordered[i - 1].objectives.values[j]
            ordered[i].crowding += gap / (hi - lo)


def tournament_select(pop: list[Individual], k: int, rng: Random) -> Individual:
    """k uniform draws with replacement; lowest rank wins, ties by larger
    crowding, remaining ties by draw order."""
    if k < 1:
        raise ContractError(f"tournament size must be >= 1, got {k}")
    winner = pop[rng.randrange(len(pop))]
    for _ in range(k - 1):
        challenger = pop[rng.randrange(len(pop))]
        if challenger.rank < winner.rank or (
            challenger.rank == winner.rank and challenger.crowding > winner.crowding
        ):
            winner = challenger
    return winner


def init_population(size: int, evaluate_fn: EvaluateFn, ops: GeneticOperators, rng: Random) -> list[Individual]:
    """Random evaluated population with ranks and crowding assigned."""
    pop = []
    for _ in range(size):
        g = random_genome(ops.table, rng)
        obj, payload = evaluate_fn(g)
        pop.append(Individual(genome=g, objectives=obj, evaluation=payload))
    for front in nondominated_sort(pop).fronts:
        crowding_distance(front)
    return pop


def nsga2_step(
    pop: list[Individual],
    evaluate_fn: EvaluateFn,
    ops: GeneticOperators,
    rng: Random,
    tournament_k: int = 3,
) -> list[Individual]:
    """One generation: breed N offspring, merge with parents, peel fronts
    into the next population, truncating the overflow front by crowding."""
    n = len(pop)
    offspring: list[Individual] = []
    while len(offspring) < n:
        p1 = tournament_select(pop, tournament_k, rng)
        p2 = tournament_select(pop, tournament_k, rng)
        for child in ops.offspring(p1.genome, p2.genome, rng):
            if len(offspring) < n:
                obj, payload = evaluate_fn(child)
                offspring.append(Individual(genome=child, objectives=obj, evaluation=payload))

    merged = pop + offspring
    next_pop: list[Individual] = []
    for front in nondominated_sort(merged).fronts:
        crowding_distance(front)
        if len(next_pop) + len(front) <= n:
            next_pop.extend(front)
        else:
            by_crowding = sorted(front, key=lambda ind: ind.crowding, reverse=True)
            next_pop.extend(by_crowding[: n - len(next_pop)])
            break
    return next_pop
