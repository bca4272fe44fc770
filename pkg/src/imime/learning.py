"""Model-based learning stack: binomial outcome counts, MAP transition
estimates, Q-form value iteration over the induced MDP, and the
epsilon-greedy action policy.

States are (routine, attending) pairs over the selectable routine set; the
successor routine is deterministically the chosen action, and the attending
bit of the successor is the (binary) reward.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass, field

import numpy as np

from .attention import AttentionState
from .behavior import Routine

EPSILON = 0.125
GAMMA = 0.9
VI_TOL = 1e-6
VI_MAX_SWEEPS = 10_000


class UnknownStateOrAction(KeyError):
    pass


class EmptyActionSet(ValueError):
    pass


class NonConvergence(RuntimeError):
    def __init__(self, residual: float):
        super().__init__(f"value iteration did not converge, residual {residual:.3e}")
        self.residual = residual


@dataclass(frozen=True)
class StateId:
    routine: Routine
    attending: bool


def compute_reward(attention: AttentionState) -> int:
    """1 when the viewer attends, else 0."""
    return 1 if attention.attending else 0


class OutcomeTable:
    """Per (state, action) binomial counts: k attended-after, m did not."""

    def __init__(self, routines: tuple[Routine, ...]):
        if not routines:
            raise EmptyActionSet("no selectable routines")
        self.routines = tuple(routines)
        self.index = {r: i for i, r in enumerate(self.routines)}
        n = len(self.routines)
        self.k = np.zeros((n, 2, n), dtype=np.int64)  # [state routine, attending, action]
        self.m = np.zeros((n, 2, n), dtype=np.int64)

    def _cell(self, s: StateId, a: Routine) -> tuple[int, int, int]:
        try:
            return self.index[s.routine], int(s.attending), self.index[a]
        except KeyError as exc:
            raise UnknownStateOrAction(f"unknown routine {exc}") from exc

    def record(self, s: StateId, a: Routine, attended_after: bool) -> None:
        i, j, l = self._cell(s, a)
        if attended_after:
            self.k[i, j, l] += 1
        else:
            self.m[i, j, l] += 1

    def counts(self, s: StateId, a: Routine) -> tuple[int, int]:
        i, j, l = self._cell(s, a)
        return int(self.k[i, j, l]), int(self.m[i, j, l])


def estimate_transition(k: int, m: int) -> float:
    """MAP of Beta(1+k, 1+m): k/(k+m), or 0.5 on zero evidence (flat posterior)."""
    if k + m == 0:
        return 0.5
    return k / (k + m)


class TransitionModel:
    """p_hat[(state routine, attending, action)] array derived from an OutcomeTable."""

    def __init__(self, routines: tuple[Routine, ...], p: np.ndarray | None = None):
        self.routines = tuple(routines)
        self.index = {r: i for i, r in enumerate(self.routines)}
        n = len(self.routines)
        self.p = np.full((n, 2, n), 0.5) if p is None else np.asarray(p, float)

    @classmethod
    def from_table(cls, table: OutcomeTable) -> "TransitionModel":
        total = table.k + table.m
        p = np.where(total > 0, table.k / np.maximum(total, 1), 0.5)
        return cls(table.routines, p)

    def refresh_cell(self, table: OutcomeTable, s: StateId, a: Routine) -> None:
        i, j, l = table._cell(s, a)
        self.p[i, j, l] = estimate_transition(int(table.k[i, j, l]), int(table.m[i, j, l]))

    def prob(self, s: StateId, a: Routine) -> float:
        return float(self.p[self.index[s.routine], int(s.attending), self.index[a]])


@dataclass
class PolicyConfig:
    epsilon: float = EPSILON
    gamma: float = GAMMA
    tol: float = VI_TOL
    max_sweeps: int = VI_MAX_SWEEPS
    random_policy: bool = False  # uniform-random baseline, for paired comparisons


class QTable:
    def __init__(self, routines: tuple[Routine, ...], gamma: float, q: np.ndarray | None = None):
        self.routines = tuple(routines)
        self.index = {r: i for i, r in enumerate(self.routines)}
        self.gamma = gamma
        n = len(self.routines)
        self.q = np.zeros((n, 2, n)) if q is None else np.asarray(q, float)

    def row(self, s: StateId) -> np.ndarray:
        return self.q[self.index[s.routine], int(s.attending)]

    def greedy(self, s: StateId) -> Routine:
        return self.routines[int(np.argmax(self.row(s)))]


def update_values(model: TransitionModel, cfg: PolicyConfig | None = None, q0: QTable | None = None) -> QTable:
    """Synchronous sweeps of the Q-form Bellman fixed point:

        Q(s, a) = p(s, a) * (1 + gamma * max_b Q((a, T), b))
                + (1 - p(s, a)) * gamma * max_b Q((a, F), b)

    Residuals shrink by a factor gamma per sweep (contraction); the per-sweep
    history is kept on the returned table for inspection.
    """
    cfg = cfg or PolicyConfig()
    n = len(model.routines)
    # flatten to (state, action) with states routine-major: s = 2*routine + attending
    p = model.p.reshape(2 * n, n)
    q = np.zeros_like(p) if q0 is None else q0.q.reshape(2 * n, n).copy()
    gamma = cfg.gamma
    residuals = []
    for _ in range(cfg.max_sweeps):
        vmax = q.max(axis=1)  # value of best action in each state
        v_att = vmax[1::2]  # successor state (action routine, attending=True)
        v_not = vmax[0::2]
        q_new = p + gamma * (p * (v_att - v_not) + v_not)
        resid = float(np.abs(q_new - q).max())
        residuals.append(resid)
        q = q_new
        if resid < cfg.tol:
            table = QTable(model.routines, gamma, q.reshape(n, 2, n))
            table.residuals = residuals
            return table
    raise NonConvergence(residuals[-1])


def select_action(q: QTable, s: StateId, epsilon: float, rng: np.random.Generator) -> Routine:
    """Epsilon-greedy: argmax with prob 1-eps, else uniform over the rest."""
    row = q.row(s)
    n = len(row)
    if n == 0:
        raise EmptyActionSet("no actions")
    best = int(np.argmax(row))  # lowest index on ties
    if n == 1:
        return q.routines[0]
    if rng.random() < 1.0 - epsilon:
        return q.routines[best]
    other = int(rng.integers(n - 1))
    if other >= best:
        other += 1
    return q.routines[other]


class Learner:
    """Glue: records decision-tick outcomes, refreshes the model, and keeps
    the value table current before each action selection.

    `async_mode` runs value iteration on a worker thread with a convergence
    barrier at each decision tick, so observable results match the
    synchronous mode exactly.
    """

    def __init__(self, routines: tuple[Routine, ...], cfg: PolicyConfig | None = None, async_mode: bool = False):
        self.cfg = cfg or PolicyConfig()
        self.table = OutcomeTable(routines)
        self.model = TransitionModel.from_table(self.table)
        self.q = update_values(self.model, self.cfg)
        self.async_mode = async_mode
        self._worker: threading.Thread | None = None
        self.previous: tuple[StateId, Routine] | None = None
        self.outcomes_recorded = 0

    def _refresh_values(self) -> None:
        if self.async_mode:
            result: dict = {}

            def run():
                result["q"] = update_values(self.model, self.cfg, q0=self.q)

            self._worker = threading.Thread(target=run)
            self._worker.start()
            self._worker.join()  # convergence barrier at the decision tick
            self.q = result["q"]
        else:
            self.q = update_values(self.model, self.cfg, q0=self.q)

    def observe(self, attention: AttentionState) -> None:
        """Attribute the attending bit at this decision tick to the previous
        (state, action), then refresh model and values."""
        if self.previous is None:
            return
        s, a = self.previous
        self.table.record(s, a, bool(attention.attending))
        self.model.refresh_cell(self.table, s, a)
        self.outcomes_recorded += 1
        self._refresh_values()

    def choose(self, s: StateId, rng: np.random.Generator) -> tuple[Routine, bool]:
        """Select an action for state s; returns (action, explored)."""
        if self.cfg.random_policy:
            action = self.table.routines[int(rng.integers(len(self.table.routines)))]
        else:
            action = select_action(self.q, s, self.cfg.epsilon, rng)
        explored = action != self.q.greedy(s)
        return action, explored

    def commit(self, s: StateId, a: Routine) -> None:
        self.previous = (s, a)

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["state_routine", "state_attending", "action", "k", "m", "p_hat", "q"])
            for i, sr in enumerate(self.table.routines):
                for j in (0, 1):
                    for l, a in enumerate(self.table.routines):
                        writer.writerow(
                            [
                                sr.value,
                                j,
                                a.value,
                                int(self.table.k[i, j, l]),
                                int(self.table.m[i, j, l]),
                                f"{self.model.p[i, j, l]:.10g}",
                                f"{self.q.q[i, j, l]:.10g}",
                            ]
                        )

    def load_csv(self, path) -> None:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            next(reader)
            by_value = {r.value: r for r in self.table.routines}
            for row in reader:
                sr, j, a = by_value[row[0]], int(row[1]), by_value[row[2]]
                i, l = self.table.index[sr], self.table.index[a]
                self.table.k[i, j, l] = int(row[3])
                self.table.m[i, j, l] = int(row[4])
        self.model = TransitionModel.from_table(self.table)
        self.q = update_values(self.model, self.cfg)
