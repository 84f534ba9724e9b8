"""Multi-Strategy Coevolving Aging Particles (MS-CAP).

Two stages alternate until the budget runs out:

* the coevolving aging particle (CAP) sweep perturbs each particle with a
  velocity that is pulled towards the swarm best (with a pull growing as the
  budget is consumed), shrinks and flips the velocity of unsuccessful
  particles, and restarts particles whose decay ``exp(-life)`` drops below
  ``epsilon`` from a random donor;
* whenever a sweep fails to improve the best, ``gens_ms`` generations of
  DE-style mutation/crossover run with strategies drawn per particle from a
  pool of four mutations and two crossovers.

``observer`` arguments accept a callable ``observer(event, payload)`` used by
the test-suite for instrumentation; it never affects the search.
"""

from __future__ import annotations

import enum
import math
from typing import Callable, Optional

import numpy as np

from .core import (
    BudgetExhausted,
    BudgetLedger,
    Problem,
    RunConfig,
    RunRecord,
    Swarm,
    evaluate,
    init_velocity,
    make_record,
    toroidal_wrap,
)

Observer = Optional[Callable[[str, dict], None]]

ALGORITHM_ID = "mscap"


class MutationStrategy(enum.IntEnum):
    RAND1 = 0
    RAND2 = 1
    RAND_TO_BEST2 = 2
    CUR_TO_BEST1 = 3


class CrossoverStrategy(enum.IntEnum):
    BINOMIAL = 0
    EXPONENTIAL = 1


_MUTATIONS = tuple(MutationStrategy)
_CROSSOVERS = tuple(CrossoverStrategy)


def cap_update_particle(i: int, swarm: Swarm, problem: Problem, ledger: BudgetLedger,
                        rng: np.random.Generator) -> tuple[bool, bool, np.ndarray, float]:
    """Perturb particle ``i`` and evaluate it.

    Returns ``(improved_parent, improved_best, old_x, old_f)``; the saved
    parent state is needed by :func:`cap_age`.
    """
    if ledger.exhausted:
        raise BudgetExhausted("no budget left for a CAP perturbation")
    old_x = swarm.x[i].copy()
    old_f = float(swarm.f[i])
    pull = ledger.progress
    u = rng.random(problem.dimension)
    swarm.v[i] += u * pull * (swarm.x[swarm.best] - swarm.x[i])
    x_new = toroidal_wrap(swarm.x[i] + swarm.v[i], problem.bounds)
    f_best = swarm.best_f
    f_new = evaluate(problem, x_new, ledger)
    swarm.x[i] = x_new
    swarm.f[i] = f_new
    improved_best = f_new < f_best
    if improved_best:
        swarm.best = i
    return f_new < old_f, improved_best, old_x, old_f


def cap_age(i: int, improved: bool, swarm: Swarm, old_x: np.ndarray, old_f: float,
            epsilon: float, problem: Problem, rng: np.random.Generator,
            observer: Observer = None) -> None:
    """Lifetime bookkeeping for particle ``i`` after its perturbation."""
    if improved:
        swarm.life[i] = 0
        return
    swarm.life[i] += 1
    life = int(swarm.life[i])
    if observer is not None:
        observer("age", {"i": i, "life": life})
    decay = math.exp(-life)
    if decay < epsilon:
        n = swarm.size
        r = int(rng.integers(n - 1))
        if r >= i:
            r += 1
        swarm.x[i] = swarm.x[r]
        swarm.f[i] = swarm.f[r]
        swarm.life[i] = 0
        swarm.v[i] = init_velocity(problem.bounds, rng)
        if i == swarm.best:
            # the best particle was overwritten by a worse donor
            swarm.refresh_best()
        if observer is not None:
            observer("reset", {"i": i, "donor": r})
    else:
        swarm.x[i] = old_x
        swarm.f[i] = old_f
        if life % 2 == 0:
            swarm.v[i] *= -decay
        else:
            swarm.v[i] *= -1.0


def cap_sweep(swarm: Swarm, problem: Problem, ledger: BudgetLedger, rng: np.random.Generator,
              epsilon: float, observer: Observer = None) -> bool:
    """One CAP pass over all particles in index order.

    Returns True iff some perturbation strictly improved the swarm best. On
    budget exhaustion the sweep stops and returns the flag as it stands.
    """
    update = False
    for i in range(swarm.size):
        try:
            improved, improved_best, old_x, old_f = cap_update_particle(i, swarm, problem, ledger, rng)
        except BudgetExhausted:
            break
        update = update or improved_best
        cap_age(i, improved, swarm, old_x, old_f, epsilon, problem, rng, observer)
    if observer is not None:
        observer("cap_sweep", {"update": update, "n_eval": ledger.n_eval})
    return update


def draw_indices(i: int, n: int, k: int, rng: np.random.Generator) -> list:
    """``k`` mutually distinct indices from ``range(n)``, all different from ``i``.

    Partial Fisher-Yates over ``range(n - 1)`` with a sparse swap table, then
    indices at or above ``i`` are shifted up by one.
    """
    m = n - 1
    if k > m:
        raise ValueError(f"cannot draw {k} distinct indices from {m} candidates")
    u = rng.random(k)
    swapped: dict[int, int] = {}
    out = []
    for a in range(k):
        j = a + int(u[a] * (m - a))
        out.append(swapped.get(j, j))
        swapped[j] = swapped.get(a, a)
    return [o + 1 if o >= i else o for o in out]


def de_mutate(strategy: MutationStrategy, i: int, swarm: Swarm, F: float, K: float,
              rng: np.random.Generator, bounds=None, x=None, best=None,
              observer: Observer = None) -> np.ndarray:
    """Build a mutant for particle ``i``.

    ``x`` and ``best`` default to the live swarm positions and best index;
    the MS stage passes its generation-start snapshot instead. The mutant is
    wrapped into ``bounds`` when given.
    """
    pos = swarm.x if x is None else x
    b = swarm.best if best is None else best
    r, s, t, u, v = draw_indices(i, len(pos), 5, rng)
    if observer is not None:
        observer("mutation", {"i": i, "strategy": MutationStrategy(strategy), "idx": (r, s, t, u, v)})
    if strategy == MutationStrategy.RAND1:
        mutant = pos[r] + F * (pos[s] - pos[t])
    elif strategy == MutationStrategy.RAND2:
        mutant = pos[r] + F * (pos[s] - pos[t]) + F * (pos[u] - pos[v])
    elif strategy == MutationStrategy.RAND_TO_BEST2:
        # x_r is both base and first difference operand, as in the original formulation
        mutant = pos[r] + K * (pos[b] - pos[i]) + F * (pos[r] - pos[s]) + F * (pos[u] - pos[v])
    elif strategy == MutationStrategy.CUR_TO_BEST1:
        mutant = pos[i] + F * (pos[b] - pos[i]) + F * (pos[s] - pos[t])
    else:
        raise ValueError(f"unknown mutation strategy {strategy!r}")
    if bounds is not None:
        mutant = toroidal_wrap(mutant, bounds)
    return mutant


def de_crossover(strategy: CrossoverStrategy, parent: np.ndarray, mutant: np.ndarray,
                 CR: float, rng: np.random.Generator) -> np.ndarray:
    """Binomial or exponential recombination; at least one gene comes from the mutant."""
    d = parent.size
    trial = np.array(parent, dtype=float)
    if strategy == CrossoverStrategy.BINOMIAL:
        j_rand = int(rng.integers(d))
        mask = rng.random(d) < CR
        mask[j_rand] = True
        trial[mask] = mutant[mask]
    elif strategy == CrossoverStrategy.EXPONENTIAL:
        j = int(rng.integers(d))
        trial[j] = mutant[j]
        copied = 1
        while copied < d and rng.random() < CR:
            j = (j + 1) % d
            trial[j] = mutant[j]
            copied += 1
    else:
        raise ValueError(f"unknown crossover strategy {strategy!r}")
    return trial


def ms_stage(swarm: Swarm, problem: Problem, ledger: BudgetLedger, L: int,
             rng: np.random.Generator, observer: Observer = None) -> np.ndarray:
    """Multi-strategy mutation/recombination for ``L`` generations.

    Returns the ``changed`` mask; changed particles leave the stage with a
    fresh velocity and zero lifetime, also when the budget ran out midway.
    """
    n = swarm.size
    changed = np.zeros(n, dtype=bool)
    try:
        for _generation in range(L):
            x_old = swarm.x.copy()
            f_old = swarm.f.copy()
            best_old = swarm.best
            # per-particle parameters: F ~ U(0.1, 1), CR ~ U(0, 1), K ~ U(0, 1), strategies uniform
            Fs = rng.uniform(0.1, 1.0, n)
            CRs = rng.random(n)
            Ks = rng.random(n)
            muts = rng.integers(len(_MUTATIONS), size=n)
            xovers = rng.integers(len(_CROSSOVERS), size=n)
            for i in range(n):
                if ledger.exhausted:
                    raise BudgetExhausted("no budget left for a trial")
                mutant = de_mutate(_MUTATIONS[muts[i]], i, swarm, Fs[i], Ks[i], rng,
                                   bounds=problem.bounds, x=x_old, best=best_old, observer=observer)
                trial = toroidal_wrap(de_crossover(_CROSSOVERS[xovers[i]], x_old[i], mutant, CRs[i], rng),
                                      problem.bounds)
                f_trial = evaluate(problem, trial, ledger)
                if f_trial < f_old[i]:
                    swarm.x[i] = trial
                    swarm.f[i] = f_trial
                    changed[i] = True
            swarm.refresh_best()
    except BudgetExhausted:
        swarm.refresh_best()
    for i in np.flatnonzero(changed):
        swarm.v[i] = init_velocity(problem.bounds, rng)
        swarm.life[i] = 0
    if observer is not None:
        observer("ms_stage", {"changed": changed.copy(), "n_eval": ledger.n_eval})
    return changed


def initialize(problem: Problem, config: RunConfig, ledger: BudgetLedger,
               rng: np.random.Generator) -> Swarm:
    """A swarm of identical copies of one random solution with independent velocities."""
    x_init = problem.bounds.sample(rng)
    f_init = evaluate(problem, x_init, ledger)
    n = config.pop_size
    x = np.tile(x_init, (n, 1))
    v = np.array([init_velocity(problem.bounds, rng) for _ in range(n)])
    return Swarm(x, v, np.full(n, f_init), best=0)


def run(problem: Problem, config: RunConfig = RunConfig(), observer: Observer = None) -> RunRecord:
    """Run MS-CAP on ``problem`` until the evaluation budget is spent."""
    config.validate(min_pop=6)
    rng = np.random.default_rng(config.seed)
    ledger = BudgetLedger(config.budget(problem.dimension))
    swarm = initialize(problem, config, ledger, rng)
    while not ledger.exhausted:
        update = cap_sweep(swarm, problem, ledger, rng, config.epsilon, observer)
        if ledger.exhausted:
            break
        if not update:
            ms_stage(swarm, problem, ledger, config.gens_ms, rng, observer)
    return make_record(ALGORITHM_ID, problem, config, ledger)
