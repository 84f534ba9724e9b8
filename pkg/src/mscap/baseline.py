"""Plain DE/rand/1/bin with fixed parameters, used as a comparison opponent."""

from __future__ import annotations

import numpy as np

from .algorithm import draw_indices
from .core import (
    BudgetExhausted,
    BudgetLedger,
    Problem,
    RunConfig,
    RunRecord,
    evaluate,
    make_record,
    toroidal_wrap,
)

ALGORITHM_ID = "de-rand1-bin"


def run_de(problem: Problem, config: RunConfig = RunConfig(), F: float = 0.5, CR: float = 0.9) -> RunRecord:
    config.validate(min_pop=4)
    rng = np.random.default_rng(config.seed)
    ledger = BudgetLedger(config.budget(problem.dimension))
    n, d = config.pop_size, problem.dimension
    pop = np.empty((n, d))
    fit = np.full(n, np.inf)
    try:
        for i in range(n):
            pop[i] = problem.bounds.sample(rng)
            fit[i] = evaluate(problem, pop[i], ledger)
        while True:
            old = pop.copy()
            for i in range(n):
                r, s, t = draw_indices(i, n, 3, rng)
                mutant = toroidal_wrap(old[r] + F * (old[s] - old[t]), problem.bounds)
                mask = rng.random(d) < CR
                mask[rng.integers(d)] = True
                trial = np.where(mask, mutant, old[i])
                f_trial = evaluate(problem, trial, ledger)
                if f_trial < fit[i]:
                    pop[i] = trial
                    fit[i] = f_trial
    except BudgetExhausted:
        pass
    return make_record(ALGORITHM_ID, problem, config, ledger)
