"""Baseline derivative-free optimizers under a fixed-budget harness.

Five fully specified baselines on the box [-5, 5]^d: uniform random
search, a (1+1) evolution strategy with 1/5th-success step control,
differential evolution (rand/1/bin), global-best particle swarm, and
simultaneous-perturbation stochastic approximation. Every run owns a
private generator stream, consumes at most its budget of evaluations,
never evaluates outside the box, and records best-so-far precision at a
1-2-5 checkpoint grid.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .io import write_csv
from .rng import run_seed as derive_run_seed
from .suite import LOWER, UPPER, ProblemId, ProblemInstance, create_instance, evaluate

log = logging.getLogger(__name__)

ALGORITHMS = ("RS", "OnePlusOneES", "DE", "PSO", "SPSA")


@dataclass(frozen=True)
class RunRecord:
    """One optimizer run: best-so-far precision at each checkpoint."""

    algorithm: str
    instance: ProblemId
    run_seed: int
    checkpoints: tuple  # ((budget, best_precision), ...)

    @property
    def final_precision(self) -> float:
        return self.checkpoints[-1][1]

    def precision_at(self, budget: int) -> float:
        best = None
        for b, prec in self.checkpoints:
            if b <= budget:
                best = prec
        if best is None:
            raise ValueError(f"no checkpoint at or below budget {budget}")
        return best


def checkpoint_budgets(budget: int):
    """The 1-2-5 decade grid up to ``budget``, always including it."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    grid = set()
    scale = 1
    while scale <= budget:
        for mult in (1, 2, 5):
            if mult * scale <= budget:
                grid.add(mult * scale)
        scale *= 10
    grid.add(budget)
    return sorted(grid)


def _evaluate(inst: ProblemInstance, X):
    # single chokepoint so tests can audit every evaluated point
    return evaluate(inst, X)


class _Tracker:
    """Counts evaluations, tracks best precision, snapshots checkpoints."""

    def __init__(self, inst, budget):
        self.inst = inst
        self.budget = budget
        self.marks = checkpoint_budgets(budget)
        self.used = 0
        self.best = np.inf
        self.snapshots = []
        self._next = 0

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def evaluate(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[0] > self.remaining:
            raise RuntimeError("evaluation budget exceeded")
        values = np.atleast_1d(_evaluate(self.inst, X))
        precisions = np.maximum(values - self.inst.fopt, 0.0)
        for prec in precisions:
            self.used += 1
            if prec < self.best:
                self.best = float(prec)
            while self._next < len(self.marks) and self.marks[self._next] == self.used:
                self.snapshots.append((self.used, self.best))
                self._next += 1
        return values

    def record(self, algorithm, seed) -> RunRecord:
        return RunRecord(algorithm=algorithm, instance=self.inst.id,
                         run_seed=seed, checkpoints=tuple(self.snapshots))


def _clip(X):
    return np.clip(X, LOWER, UPPER)


def _reflect(X):
    # fold trial coordinates back into the box, repeating until inside
    width = UPPER - LOWER
    Y = np.mod(X - LOWER, 2.0 * width)
    Y = np.where(Y > width, 2.0 * width - Y, Y)
    return LOWER + Y


def random_search(inst: ProblemInstance, budget: int, seed: int) -> RunRecord:
    """Uniform i.i.d. sampling of the box."""
    rng = np.random.default_rng(seed)
    tracker = _Tracker(inst, budget)
    chunk = 256
    while tracker.remaining > 0:
        k = min(chunk, tracker.remaining)
        tracker.evaluate(rng.uniform(LOWER, UPPER, (k, inst.dim)))
    return tracker.record("RS", seed)


def one_plus_one_es(inst: ProblemInstance, budget: int, seed: int) -> RunRecord:
    """Isotropic Gaussian (1+1) ES with 1/5th-success-rule step control:
    every 10 iterations the step multiplies or divides by 1.5."""
    if budget < 2:
        raise ValueError("one_plus_one_es needs budget >= 2")
    rng = np.random.default_rng(seed)
    tracker = _Tracker(inst, budget)
    x = rng.uniform(LOWER, UPPER, inst.dim)
    fx = tracker.evaluate(x)[0]
    sigma = 2.5
    successes = 0
    window = 0
    while tracker.remaining > 0:
        child = _clip(x + sigma * rng.standard_normal(inst.dim))
        fc = tracker.evaluate(child)[0]
        if fc <= fx:
            x, fx = child, fc
            successes += 1
        window += 1
        if window == 10:
            if successes > 2:
                sigma *= 1.5
            elif successes < 2:
                sigma /= 1.5
            sigma = min(max(sigma, 1e-12), 10.0)
            successes = 0
            window = 0
    return tracker.record("OnePlusOneES", seed)


def differential_evolution(inst: ProblemInstance, budget: int, seed: int) -> RunRecord:
    """DE/rand/1/bin with F=0.5, CR=0.9, population 10*dim; out-of-box
    trial coordinates are reflected back inside."""
    rng = np.random.default_rng(seed)
    tracker = _Tracker(inst, budget)
    d = inst.dim
    pop_size = 10 * d
    f_weight, crossover = 0.5, 0.9

    init = min(pop_size, tracker.remaining)
    pop = rng.uniform(LOWER, UPPER, (init, d))
    fitness = tracker.evaluate(pop)
    if init < pop_size:
        return tracker.record("DE", seed)

    while tracker.remaining > 0:
        trials = np.empty_like(pop)
        for i in range(pop_size):
            choices = rng.choice(pop_size - 1, size=3, replace=False)
            choices[choices >= i] += 1
            r1, r2, r3 = pop[choices]
            mutant = r1 + f_weight * (r2 - r3)
            cross = rng.random(d) < crossover
            cross[rng.integers(d)] = True
            trials[i] = _reflect(np.where(cross, mutant, pop[i]))
        k = min(pop_size, tracker.remaining)
        trial_fit = tracker.evaluate(trials[:k])
        improved = trial_fit <= fitness[:k]
        pop[:k][improved] = trials[:k][improved]
        fitness[:k][improved] = trial_fit[improved]
    return tracker.record("DE", seed)


def pso(inst: ProblemInstance, budget: int, seed: int) -> RunRecord:
    """Global-best PSO: inertia 0.729, cognitive = social = 1.49445,
    velocities clamped to half the box width; positions clamped with the
    velocity zeroed on clamped coordinates."""
    rng = np.random.default_rng(seed)
    tracker = _Tracker(inst, budget)
    d = inst.dim
    swarm = 40
    inertia, c_cog, c_soc = 0.729, 1.49445, 1.49445
    v_max = 0.5 * (UPPER - LOWER)

    init = min(swarm, tracker.remaining)
    pos = rng.uniform(LOWER, UPPER, (init, d))
    vel = rng.uniform(-v_max, v_max, (init, d))
    fit = tracker.evaluate(pos)
    if init < swarm:
        return tracker.record("PSO", seed)

    pbest, pbest_fit = pos.copy(), fit.copy()
    g = int(np.argmin(pbest_fit))
    while tracker.remaining > 0:
        r1 = rng.random((swarm, d))
        r2 = rng.random((swarm, d))
        vel = (inertia * vel + c_cog * r1 * (pbest - pos)
               + c_soc * r2 * (pbest[g] - pos))
        vel = np.clip(vel, -v_max, v_max)
        raw = pos + vel
        pos = _clip(raw)
        vel[raw != pos] = 0.0
        k = min(swarm, tracker.remaining)
        fit = tracker.evaluate(pos[:k])
        improved = fit < pbest_fit[:k]
        pbest[:k][improved] = pos[:k][improved]
        pbest_fit[:k][improved] = fit[improved]
        g = int(np.argmin(pbest_fit))
    return tracker.record("PSO", seed)


def spsa(inst: ProblemInstance, budget: int, seed: int) -> RunRecord:
    """SPSA with gains a_k = a/(k+1+A)^0.602 and c_k = c/(k+1)^0.101,
    a = 0.2, A = budget/20, c = 0.1, Rademacher perturbations; two
    evaluations per iteration, iterate clamped to the box."""
    if budget < 2:
        raise ValueError("spsa needs budget >= 2")
    rng = np.random.default_rng(seed)
    tracker = _Tracker(inst, budget)
    d = inst.dim
    a_gain, stability, c_gain = 0.2, budget / 20.0, 0.1
    theta = rng.uniform(LOWER, UPPER, d)
    k = 0
    while tracker.remaining >= 2:
        a_k = a_gain / (k + 1 + stability) ** 0.602
        c_k = c_gain / (k + 1) ** 0.101
        delta = np.where(rng.random(d) < 0.5, -1.0, 1.0)
        plus = _clip(theta + c_k * delta)
        minus = _clip(theta - c_k * delta)
        f_plus, f_minus = tracker.evaluate(np.vstack([plus, minus]))
        grad = (f_plus - f_minus) / (2.0 * c_k) * (1.0 / delta)
        theta = _clip(theta - a_k * grad)
        k += 1
    return tracker.record("SPSA", seed)


_RUNNERS = {
    "RS": random_search,
    "OnePlusOneES": one_plus_one_es,
    "DE": differential_evolution,
    "PSO": pso,
    "SPSA": spsa,
}


def planned_run_count(n_algorithms: int, n_functions: int, n_instances: int,
                      n_runs: int) -> int:
    """Accounting identity for a full sweep."""
    return n_algorithms * n_functions * n_instances * n_runs


def run_experiment(algorithms, fids, iids, dim, runs, budget, base_seed,
                   dry_run: bool = False):
    """Full cross-product sweep; every run's seed derives from its own
    (algorithm, fid, iid, run) cell so any subset reproduces in isolation.

    With ``dry_run`` no run executes and the planned count is returned.
    A failing run is logged and skipped; the sweep never aborts.
    """
    algorithms = list(algorithms)
    fids = list(fids)
    iids = list(iids)
    if not algorithms or not fids or not iids or runs < 1:
        raise ValueError("algorithms, fids, iids must be nonempty and runs >= 1")
    if dry_run:
        return planned_run_count(len(algorithms), len(fids), len(iids), runs)
    unknown = [a for a in algorithms if a not in _RUNNERS]
    if unknown:
        raise ValueError(f"unknown algorithms: {unknown}")

    records = []
    for fid in fids:
        for iid in iids:
            inst = create_instance(ProblemId(fid, iid, dim))
            for alg in algorithms:
                for run in range(runs):
                    seed = derive_run_seed(base_seed, ALGORITHMS.index(alg),
                                           fid, iid, run)
                    try:
                        records.append(_RUNNERS[alg](inst, budget, seed))
                    except Exception:  # noqa: BLE001 - sweep must not abort
                        log.exception("run failed: %s f%d i%d run%d", alg, fid, iid, run)
    return records


def export_runs(records, path, dim):
    """Long-format run export: one row per checkpoint."""
    header = ["algorithm", "fid", "iid", "dim", "run_seed", "budget", "best_precision"]
    rows = []
    for rec in records:
        for budget, prec in rec.checkpoints:
            rows.append([rec.algorithm, rec.instance.fid, rec.instance.iid,
                         dim, rec.run_seed, budget, prec])
    write_csv(path, header, rows)
