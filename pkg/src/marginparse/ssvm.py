"""Slack-rescaling structural SVM, trained with n-slack cutting planes.

The trainer alternates a separation phase (loss-augmented inference finds
each example's most violating output under the current weights) with
re-solves of the quadratic program restricted to the working set of
constraints found so far.  A constraint enters the working set when its
slack-rescaled violation  loss * (1 - w . dpsi) - xi  exceeds epsilon;
training stops when a full pass adds nothing.

The restricted QP  min 1/2 ||w||^2 + C/n sum_i xi_i  subject to
xi_i >= loss * (1 - w . dpsi)  is solved in the dual by coordinate ascent,
one dual variable per constraint, with the per-example budget sum_k
alpha_ik <= C/n induced by the shared slack.  When an example's budget is
saturated, mass is rebalanced pairwise between its constraints so the
ascent cannot stall on the simplex boundary.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .chart import Model, feature_diff, feature_vector
from .lossdp import F1_UNBINARIZED, LossMode, loss_augmented_infer


@dataclass(frozen=True)
class TrainConfig:
    C: float = 100.0
    epsilon: float = 0.01
    max_outer_iters: int = 100
    loss_mode: LossMode = F1_UNBINARIZED
    qp_tolerance: float = 1e-8
    qp_max_passes: int = 2000
    batch_size: int = 1
    threads: int = 1

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer_iters < 1 or self.qp_max_passes < 1:
            raise ValueError("iteration limits must be >= 1")
        if self.batch_size < 1 or self.threads < 1:
            raise ValueError("batch_size and threads must be >= 1")


@dataclass
class Constraint:
    example: int
    dpsi: dict
    loss: float
    norm_sq: float = field(init=False)

    def __post_init__(self):
        if self.loss <= 0:
            raise ValueError("constraints carry strictly positive loss")
        self.norm_sq = sum(v * v for v in self.dpsi.values())


class WorkingSet:
    """Per-example constraint lists with their dual variables."""

    def __init__(self, n_examples: int, dim: int):
        self.n_examples = n_examples
        self.dim = dim
        self.constraints: list[Constraint] = []
        self.alphas: list[float] = []
        self.by_example = [[] for _ in range(n_examples)]
        self._keys = set()

    def add(self, example: int, dpsi: dict, loss: float) -> bool:
        """Add a constraint unless an identical one is already present."""
        key = (example, tuple(sorted(dpsi.items())), round(loss, 12))
        if key in self._keys:
            return False
        self._keys.add(key)
        self.by_example[example].append(len(self.constraints))
        self.constraints.append(Constraint(example, dpsi, loss))
        self.alphas.append(0.0)
        return True

    def __len__(self):
        return len(self.constraints)


def _sparse_dot(w, dpsi) -> float:
    return sum(w[k] * v for k, v in dpsi.items())


def _axpy(w, scale, dpsi) -> None:
    for k, v in dpsi.items():
        w[k] += scale * v


def violation(model: Model, constraint: Constraint, slack: float) -> float:
    """Signed slack-rescaled violation; > epsilon means the constraint is
    added to the working set."""
    return constraint.loss * (1.0 - _sparse_dot(model.weights, constraint.dpsi)) - slack


def solve_restricted_qp(working_set: WorkingSet, C: float, n: int,
                        qp_tolerance: float = 1e-8, qp_max_passes: int = 2000):
    """Solve the working-set QP; returns (weights, per-example slacks).

    Warm-starts from the dual variables stored on the working set, so
    repeated calls after single constraint additions are cheap.
    """
    w = np.zeros(working_set.dim)
    cons = working_set.constraints
    alphas = working_set.alphas
    slacks = [0.0] * working_set.n_examples
    if not cons:
        return w, slacks
    budget = C / n
    sums = [0.0] * working_set.n_examples
    for c, a in zip(cons, alphas):
        if a:
            sums[c.example] += a
            _axpy(w, a * c.loss, c.dpsi)

    for _ in range(qp_max_passes):
        max_improve = 0.0
        for ci, c in enumerate(cons):
            a = alphas[ci]
            room = budget - sums[c.example]
            g = c.loss * (1.0 - _sparse_dot(w, c.dpsi))
            q = c.loss * c.loss * c.norm_sq
            if q > 0.0:
                new_a = min(max(a + g / q, 0.0), a + room)
            else:
                # dpsi = 0: the dual is linear in this coordinate
                new_a = a + room if g > 0 else 0.0
            step = new_a - a
            if step == 0.0:
                continue
            improve = g * step - 0.5 * q * step * step
            if improve <= 0.0:
                continue
            alphas[ci] = new_a
            sums[c.example] += step
            _axpy(w, step * c.loss, c.dpsi)
            if improve > max_improve:
                max_improve = improve

        # Saturated budgets block single-coordinate increases; shift mass
        # from the flattest constraint to the steepest one instead.
        for ex in range(working_set.n_examples):
            ids = working_set.by_example[ex]
            if len(ids) < 2 or budget - sums[ex] > qp_tolerance:
                continue
            grads = {ci: cons[ci].loss * (1.0 - _sparse_dot(w, cons[ci].dpsi))
                     for ci in ids}
            up = max(ids, key=lambda ci: grads[ci])
            candidates = [ci for ci in ids if alphas[ci] > 0.0 and ci != up]
            if not candidates:
                continue
            down = min(candidates, key=lambda ci: grads[ci])
            gain = grads[up] - grads[down]
            if gain <= 0.0:
                continue
            cu, cd = cons[up], cons[down]
            cross = 0.0
            small, big = (cu.dpsi, cd.dpsi) if len(cu.dpsi) < len(cd.dpsi) \
                else (cd.dpsi, cu.dpsi)
            for k, v in small.items():
                other = big.get(k)
                if other is not None:
                    cross += v * other
            qq = (cu.loss * cu.loss * cu.norm_sq + cd.loss * cd.loss * cd.norm_sq
                  - 2.0 * cu.loss * cd.loss * cross)
            step = alphas[down] if qq <= 0.0 else min(gain / qq, alphas[down])
            if step <= 0.0:
                continue
            improve = gain * step - 0.5 * qq * step * step
            if improve <= 0.0:
                continue
            alphas[up] += step
            alphas[down] -= step
            _axpy(w, step * cu.loss, cu.dpsi)
            _axpy(w, -step * cd.loss, cd.dpsi)
            if improve > max_improve:
                max_improve = improve

        if max_improve < qp_tolerance:
            break

    for c in cons:
        s = c.loss * (1.0 - _sparse_dot(w, c.dpsi))
        if s > slacks[c.example]:
            slacks[c.example] = s
    return w, slacks


@dataclass
class TrainReport:
    passes: int
    constraints: int
    objective: float
    skipped_noparse: int
    wall_time_seconds: float
    remaining_violations: int
    converged: bool
    per_pass: list

    def to_json_dict(self) -> dict:
        return {
            "passes": self.passes,
            "constraints": self.constraints,
            "objective": self.objective,
            "skipped_noparse": self.skipped_noparse,
            "wall_time_seconds": self.wall_time_seconds,
            "remaining_violations": self.remaining_violations,
            "converged": self.converged,
            "per_pass": self.per_pass,
        }


def _objective(w, slacks, C, n) -> float:
    return 0.5 * float(np.dot(w, w)) + (C / n) * sum(slacks)


def train(examples, grammar, config: TrainConfig = TrainConfig()):
    """Cutting-plane training loop.

    ``examples`` is a list of (tokens, binarized gold tree, GoldReference)
    triples, with references built under the loss mode's counting config.
    Returns (Model, TrainReport).  Sentences the grammar cannot parse are
    skipped and counted; it is an error if none survive.
    """
    started = time.perf_counter()
    n = len(examples)
    if n == 0:
        raise ValueError("no training examples")
    gold_fvs = [feature_vector(gtree, grammar) for _, gtree, _ in examples]
    dim = grammar.num_productions
    w = np.zeros(dim)
    slacks = [0.0] * n
    working = WorkingSet(n, dim)
    dead = [False] * n
    skipped = 0
    per_pass = []
    converged = False

    def separate(i, weights):
        tokens, _, gref = examples[i]
        model = Model(grammar, weights)
        const = 1.0 - gold_fvs[i].dot(weights)
        return loss_augmented_infer(model, tokens, gref, config.loss_mode,
                                    const=const)

    pool = None
    if config.threads > 1 and config.batch_size > 1:
        from concurrent.futures import ThreadPoolExecutor
        pool = ThreadPoolExecutor(max_workers=config.threads)
    try:
        passes = 0
        for _ in range(config.max_outer_iters):
            passes += 1
            found = 0
            alive = [i for i in range(n) if not dead[i]]
            for start in range(0, len(alive), config.batch_size):
                chunk = alive[start:start + config.batch_size]
                if pool is not None and len(chunk) > 1:
                    results = list(pool.map(lambda i: separate(i, w), chunk))
                else:
                    results = [separate(i, w) for i in chunk]
                added = 0
                for i, result in zip(chunk, results):
                    if result is None:
                        dead[i] = True
                        skipped += 1
                        continue
                    if result.loss <= 0.0:
                        continue
                    if result.objective - slacks[i] <= config.epsilon:
                        continue
                    dpsi = feature_diff(gold_fvs[i],
                                        feature_vector(result.tree, grammar))
                    if working.add(i, dpsi, result.loss):
                        added += 1
                if added:
                    found += added
                    w, slacks = solve_restricted_qp(
                        working, config.C, n, config.qp_tolerance,
                        config.qp_max_passes)
            per_pass.append({"violations_found": found,
                             "objective": _objective(w, slacks, config.C, n)})
            if all(dead):
                raise ValueError("every training sentence failed to parse")
            if found == 0:
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()

    report = TrainReport(
        passes=passes,
        constraints=len(working),
        objective=_objective(w, slacks, config.C, n),
        skipped_noparse=skipped,
        wall_time_seconds=time.perf_counter() - started,
        remaining_violations=0 if converged else per_pass[-1]["violations_found"],
        converged=converged,
        per_pass=per_pass,
    )
    return Model(grammar, w), report
