"""Exact finite-alphabet verification of the contrastive fairness bounds.

Everything here works on a fully enumerated joint distribution over four
discrete variables: a group attribute, a class label, the code assigned to an
input, and the code assigned to its augmented view.  Entropies and mutual
informations are exact sums in nats with the 0 log 0 = 0 convention, so bound
checks certify inequalities up to float round-off rather than sampling error.

Checks cover: the sandwich pinning representation-group information between
view-information differences, the cross-entropy upper bound on conditional
view information, the exact small-N contrastive lower bound, the variational
characterization of KL divergence, and the mixture-product KL bound.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Axis layout of the enumerated joint: p[attr, label, code, view].
AXES = {"attr": 0, "label": 1, "code": 2, "view": 3}
SLACK = 1e-9


@dataclass
class DiscreteJoint:
    """Exact joint p(attr, label, code, view) as a 4-D probability table."""

    p: np.ndarray

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, dtype=float)
        if self.p.ndim != 4:
            raise ConfigError("joint table must be 4-D (attr, label, code, view)")
        if self.p.shape[2] != self.p.shape[3]:
            raise ConfigError("code and view share one alphabet; axes 2 and 3 must match")
        if (self.p < 0).any():
            raise ConfigError("negative probability entry")
        total = float(self.p.sum())
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(f"joint mass {total!r} is not 1 within 1e-12")

    @property
    def n_groups(self) -> int:
        return self.p.shape[0]

    @property
    def n_labels(self) -> int:
        return self.p.shape[1]

    @property
    def n_codes(self) -> int:
        return self.p.shape[2]

    def marginal(self, variables: tuple[str, ...]) -> np.ndarray:
        """Marginal table over ``variables`` in canonical axis order."""
        keep = sorted(AXES[v] for v in variables)
        drop = tuple(ax for ax in range(4) if ax not in keep)
        return self.p.sum(axis=drop)


def _plogp_sum(table: np.ndarray) -> float:
    flat = table[table > 0]
    return float((flat * np.log(flat)).sum())


def entropy(joint: DiscreteJoint, variables: tuple[str, ...], given: tuple[str, ...] = ()) -> float:
    """H(variables | given) in nats by exact enumeration."""
    variables = tuple(variables)
    given = tuple(given)
    if set(variables) & set(given):
        raise ConfigError("variables and conditioners overlap")
    h_all = -_plogp_sum(joint.marginal(variables + given))
    if not given:
        return h_all
    return h_all - (-_plogp_sum(joint.marginal(given)))


def mutual_information(
    joint: DiscreteJoint, u: str, v: str, given: tuple[str, ...] = ()
) -> float:
    """I(u; v | given) in nats via an entropy identity; exact for finite tables."""
    given = tuple(given)
    if u == v or u in given or v in given:
        raise ConfigError("variables must be distinct from each other and the conditioners")
    return (
        entropy(joint, (u,), given)
        + entropy(joint, (v,), given)
        - entropy(joint, (u, v), given)
    )


# ---------------------------------------------------------------------------
# Generative processes: the ground truth the encoder/augmentation pipeline
# induces a joint from.


@dataclass
class GenerativeProcess:
    """Sampling order: group, label | group, input | both, view input | input.

    ``encoder_table[x]`` is the deterministic code for input symbol x; the code
    of the view input is the view code.
    """

    p_group: np.ndarray  # (A,)
    p_label_given_group: np.ndarray  # (A, Y)
    p_input: np.ndarray  # (A, Y, X)
    p_augment: np.ndarray  # (X, X), row x -> distribution of the view input
    encoder_table: np.ndarray  # (X,) ints in [0, n_codes)
    n_codes: int

    def __post_init__(self) -> None:
        self.p_group = np.asarray(self.p_group, dtype=float)
        self.p_label_given_group = np.asarray(self.p_label_given_group, dtype=float)
        self.p_input = np.asarray(self.p_input, dtype=float)
        self.p_augment = np.asarray(self.p_augment, dtype=float)
        self.encoder_table = np.asarray(self.encoder_table, dtype=int)

    def validate(self) -> None:
        def check_rows(name, arr):
            if (arr < 0).any():
                raise ConfigError(f"{name}: negative probability")
            sums = arr.sum(axis=-1)
            if not np.allclose(sums, 1.0, atol=1e-9):
                raise ConfigError(f"{name}: rows must sum to 1")

        check_rows("p_group", self.p_group[None, :])
        check_rows("p_label_given_group", self.p_label_given_group)
        check_rows("p_input", self.p_input)
        check_rows("p_augment", self.p_augment)
        n_inputs = self.p_input.shape[-1]
        if self.p_augment.shape != (n_inputs, n_inputs):
            raise ConfigError("p_augment must be square over the input alphabet")
        if self.encoder_table.shape != (n_inputs,):
            raise ConfigError("encoder_table must cover the input alphabet")
        if self.n_codes < 1 or (self.encoder_table < 0).any() or (
            self.encoder_table >= self.n_codes
        ).any():
            raise ConfigError("encoder_table entries must lie in [0, n_codes)")


def joint_from_process(proc: GenerativeProcess) -> DiscreteJoint:
    """Push the process forward through the code table to p(attr, label, code, view)."""
    proc.validate()
    n_a, n_y = proc.p_label_given_group.shape
    n_x = proc.p_input.shape[-1]
    base = (
        proc.p_group[:, None, None]
        * proc.p_label_given_group[:, :, None]
        * proc.p_input
    )  # p(a, y, x)
    out = np.zeros((n_a, n_y, proc.n_codes, proc.n_codes))
    for x in range(n_x):
        zx = proc.encoder_table[x]
        for xv in range(n_x):
            out[:, :, zx, proc.encoder_table[xv]] += base[:, :, x] * proc.p_augment[x, xv]
    return DiscreteJoint(out)


def _prob_vector(rng: np.random.Generator, size: int, sparse: bool) -> np.ndarray:
    v = rng.random(size) + 0.05
    if sparse and size > 1:
        kill = rng.random(size) < 0.4
        if kill.all():
            kill[rng.integers(size)] = False
        v[kill] = 0.0
    return v / v.sum()


def random_process(
    rng: np.random.Generator,
    n_groups: int = 2,
    n_labels: int = 2,
    n_inputs: int = 4,
    n_codes: int = 3,
    sparse: bool = False,
    shared_input: bool = False,
) -> GenerativeProcess:
    """Draw a random process; ``sparse`` zeroes entries to exercise edge cases.

    ``shared_input`` makes p(input | group, label) identical across cells,
    the regime where the exact contrastive bound uses a single common
    score-to-density-ratio critic.
    """
    p_group = _prob_vector(rng, n_groups, sparse)
    p_label = np.stack([_prob_vector(rng, n_labels, sparse) for _ in range(n_groups)])
    if shared_input:
        shared = _prob_vector(rng, n_inputs, sparse)
        p_input = np.broadcast_to(shared, (n_groups, n_labels, n_inputs)).copy()
    else:
        p_input = np.stack(
            [
                np.stack([_prob_vector(rng, n_inputs, sparse) for _ in range(n_labels)])
                for _ in range(n_groups)
            ]
        )
    p_augment = np.stack([_prob_vector(rng, n_inputs, sparse) for _ in range(n_inputs)])
    encoder_table = rng.integers(0, n_codes, size=n_inputs)
    return GenerativeProcess(p_group, p_label, p_input, p_augment, encoder_table, n_codes)


def identity_process(
    rng: np.random.Generator, n_groups: int = 2, n_labels: int = 2, n_symbols: int = 3
) -> GenerativeProcess:
    """Identity augmentation plus a bijective code table: the view code equals
    the code, so the residual view-conditional code entropy is exactly zero."""
    proc = random_process(
        rng, n_groups, n_labels, n_inputs=n_symbols, n_codes=n_symbols, sparse=False
    )
    proc.p_augment = np.eye(n_symbols)
    proc.encoder_table = rng.permutation(n_symbols)
    return proc


# ---------------------------------------------------------------------------
# Bound checks.


@dataclass
class SandwichReport:
    """Group information pinned between view-information differences.

    ``leakage`` is I(code; attr | label); the difference of the two view
    informations, widened by the residual entropy ``epsilon`` on both sides,
    must contain it.
    """

    leakage: float
    view_info_by_label: float
    view_info_by_cell: float
    epsilon: float
    lower: float
    upper: float

    @property
    def passed(self) -> bool:
        return (self.lower <= self.leakage + SLACK) and (
            self.leakage <= self.upper + SLACK
        )

    @property
    def slack(self) -> float:
        """Worst-side violation; negative means strictly inside the sandwich."""
        return max(self.lower - self.leakage, self.leakage - self.upper)

    def to_dict(self) -> dict:
        return {
            "leakage": self.leakage,
            "view_info_by_label": self.view_info_by_label,
            "view_info_by_cell": self.view_info_by_cell,
            "epsilon": self.epsilon,
            "lower": self.lower,
            "upper": self.upper,
            "passed": self.passed,
        }


def check_cmi_sandwich(joint: DiscreteJoint) -> SandwichReport:
    """Exact evaluation of the two-sided bound on I(code; attr | label)."""
    leakage = mutual_information(joint, "code", "attr", ("label",))
    by_label = mutual_information(joint, "view", "code", ("label",))
    by_cell = mutual_information(joint, "view", "code", ("attr", "label"))
    eps = entropy(joint, ("code",), ("view", "label"))
    diff = by_label - by_cell
    return SandwichReport(leakage, by_label, by_cell, eps, diff - eps, diff + eps)


@dataclass
class UpperBoundReport:
    """Cross-entropy style upper bound on I(view; code | label)."""

    lhs: float
    rhs: float
    infinite: bool

    @property
    def passed(self) -> bool:
        return self.infinite or self.lhs <= self.rhs + SLACK

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "infinite": self.infinite,
            "passed": self.passed,
        }


def check_logprob_upper_bound(joint: DiscreteJoint) -> UpperBoundReport:
    """Bound I(view; code | label) by an independent-product expected log-loss.

    The right-hand side averages -log p(view | code, label) with the view and
    code drawn independently from their label-conditional marginals.  Whenever
    that puts positive weight on a zero conditional the bound is infinite,
    which is reported rather than treated as a failure.
    """
    lhs = mutual_information(joint, "view", "code", ("label",))
    p_y = joint.marginal(("label",))
    p_yc = joint.marginal(("label", "code"))
    p_yv = joint.marginal(("label", "view"))
    p_ycv = joint.marginal(("label", "code", "view"))
    rhs = 0.0
    infinite = False
    for y in range(joint.n_labels):
        if p_y[y] <= 0:
            continue
        for c in range(joint.n_codes):
            if p_yc[y, c] <= 0:
                continue
            for v in range(joint.n_codes):
                weight = p_yv[y, v] * p_yc[y, c] / p_y[y]
                if weight <= 0:
                    continue
                cond = p_ycv[y, c, v] / p_yc[y, c]
                if cond <= 0:
                    infinite = True
                else:
                    rhs -= weight * math.log(cond)
    return UpperBoundReport(lhs, math.inf if infinite else rhs, infinite)


# ---------------------------------------------------------------------------
# Exact small-N contrastive lower bound.


@dataclass
class Critic:
    """Score table s[view, code] for the contrastive lower bound."""

    scores: np.ndarray

    def __post_init__(self) -> None:
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.ndim != 2 or self.scores.shape[0] != self.scores.shape[1]:
            raise ConfigError("critic scores must be square (view, code)")
        if not np.isfinite(self.scores).all():
            raise ConfigError("critic scores must be finite")


MAX_EXACT_TUPLE = 3
MAX_EXACT_CODES = 4


def conditional_infonce_exact(
    joint: DiscreteJoint, critic: Critic, n_tuple: int
) -> float:
    """Exactly enumerate the cell-conditional contrastive bound value.

    Within each (attr, label) cell one positive (view, code) pair is drawn
    jointly and ``n_tuple - 1`` negative codes independently from the cell's
    code marginal; the score of the positive is contrasted against the mean
    exponentiated score over the tuple.  With one element the ratio is
    identically zero.  Values never exceed I(view; code | attr, label).
    """
    if critic.scores.shape[0] != joint.n_codes:
        raise ConfigError("critic alphabet does not match the joint")
    if n_tuple < 1:
        raise ConfigError("tuple size must be >= 1")
    if n_tuple > MAX_EXACT_TUPLE or joint.n_codes > MAX_EXACT_CODES:
        raise ConfigError(
            "enumeration over n_tuple "
            f"{n_tuple} with {joint.n_codes} codes is too large for the exact "
            "path; use a Monte Carlo estimate instead"
        )
    p_cell = joint.marginal(("attr", "label"))
    s = critic.scores
    total = 0.0
    for a in range(joint.n_groups):
        for y in range(joint.n_labels):
            w_cell = p_cell[a, y]
            if w_cell <= 0:
                continue
            cj = joint.p[a, y] / w_cell  # (code, view) within the cell
            p_code = cj.sum(axis=1)
            cell_val = 0.0
            for c1 in range(joint.n_codes):
                for v in range(joint.n_codes):
                    w_pos = cj[c1, v]
                    if w_pos <= 0:
                        continue
                    for rest in itertools.product(
                        range(joint.n_codes), repeat=n_tuple - 1
                    ):
                        w_rest = 1.0
                        for c in rest:
                            w_rest *= p_code[c]
                        if w_rest <= 0:
                            continue
                        scores = [s[v, c1]] + [s[v, c] for c in rest]
                        log_mean = _log_mean_exp(scores)
                        cell_val += w_pos * w_rest * (s[v, c1] - log_mean)
            total += w_cell * cell_val
    return total


def _log_mean_exp(scores: list[float]) -> float:
    m = max(scores)
    return m + math.log(sum(math.exp(x - m) for x in scores) / len(scores))


def near_optimal_critic(joint: DiscreteJoint) -> Critic:
    """Cell-weighted log density-ratio critic s[view, code].

    Averages log p(view, code | cell) / (p(view | cell) p(code | cell)) over
    cells with cell-mass weights.  Requires every cell to have full in-cell
    support: wherever both cell marginals are positive the cell joint must be
    too.  Pairs unreachable in every cell score zero.
    """
    p_cell = joint.marginal(("attr", "label"))
    n = joint.n_codes
    s = np.zeros((n, n))
    for v in range(n):
        for c in range(n):
            acc = 0.0
            reachable = False
            for a in range(joint.n_groups):
                for y in range(joint.n_labels):
                    w = p_cell[a, y]
                    if w <= 0:
                        continue
                    cj = joint.p[a, y] / w
                    p_code = cj.sum(axis=1)
                    p_view = cj.sum(axis=0)
                    prod = p_code[c] * p_view[v]
                    if prod <= 0:
                        continue
                    reachable = True
                    if cj[c, v] <= 0:
                        raise ConfigError(
                            "cell joint lacks full in-cell support; the density-"
                            "ratio critic is undefined"
                        )
                    acc += w * math.log(cj[c, v] / prod)
            s[v, c] = acc if reachable else 0.0
    return Critic(s)


# ---------------------------------------------------------------------------
# KL divergence and its variational characterization.


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) in nats; requires q > 0 wherever p > 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ConfigError("distributions must share a shape")
    for name, arr in (("p", p), ("q", q)):
        if (arr < 0).any() or abs(arr.sum() - 1.0) > 1e-9:
            raise ConfigError(f"{name} is not a probability table")
    mask = p > 0
    if (q[mask] <= 0).any():
        raise ConfigError("support violation: q is zero where p is positive")
    return float((p[mask] * np.log(p[mask] / q[mask])).sum())


def optimal_kl_critic(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Pointwise log density ratio; -inf off the support of p."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, np.log(p / np.where(p > 0, q, 1.0)), -np.inf)


def variational_objective(p: np.ndarray, q: np.ndarray, scores: np.ndarray) -> float:
    """E_p[s] - E_q[exp s] + 1; maximized exactly at the log density ratio."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if np.isposinf(scores).any():
        raise ConfigError("critic scores must be < +inf")
    mask = p > 0
    if np.isneginf(scores[mask]).any():
        return -math.inf
    e_p = float((p[mask] * scores[mask]).sum())
    with np.errstate(over="raise"):
        e_q = float((q * np.exp(np.where(np.isneginf(scores), -np.inf, scores))).sum())
    return e_p - e_q + 1.0


@dataclass
class KLIdentityReport:
    kl: float
    objective_at_optimum: float
    identity_gap: float
    max_excess_over_kl: float  # over the sampled non-optimal critics

    @property
    def passed(self) -> bool:
        return self.identity_gap <= SLACK and self.max_excess_over_kl <= SLACK

    def to_dict(self) -> dict:
        return {
            "kl": self.kl,
            "objective_at_optimum": self.objective_at_optimum,
            "identity_gap": self.identity_gap,
            "max_excess_over_kl": self.max_excess_over_kl,
            "passed": self.passed,
        }


def check_kl_variational(
    p: np.ndarray, q: np.ndarray, n_critics: int, rng: np.random.Generator
) -> KLIdentityReport:
    """Certify the KL variational identity and its domination of other critics.

    Half the sampled critics are free uniform tables, half are noisy
    perturbations of the optimizer (a sharper test of strictness near the
    maximum); none may exceed the KL value.
    """
    kl = kl_divergence(p, q)
    star = optimal_kl_critic(p, q)
    at_opt = variational_objective(p, q, star)
    excess = -math.inf
    for k in range(n_critics):
        if k % 2 == 0:
            s = rng.uniform(-3.0, 3.0, size=p.shape)
        else:
            s = star + rng.normal(0.0, 0.5, size=p.shape)
        excess = max(excess, variational_objective(p, q, s) - kl)
    return KLIdentityReport(kl, at_opt, abs(kl - at_opt), excess)


@dataclass
class MixtureBoundReport:
    """KL from the joint code-view pair law to the cell-mixture of products."""

    lhs: float
    rhs: float
    infinite: bool

    @property
    def passed(self) -> bool:
        return self.infinite or self.lhs <= self.rhs + SLACK

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "infinite": self.infinite,
            "passed": self.passed,
        }


def check_mixture_kl_bound(joint: DiscreteJoint) -> MixtureBoundReport:
    """KL(pair law || mixture of per-cell marginal products) vs cell-conditional
    view information; convexity makes the former never larger."""
    p_cell = joint.marginal(("attr", "label"))
    pair = joint.marginal(("code", "view"))
    mix = np.zeros_like(pair)
    for a in range(joint.n_groups):
        for y in range(joint.n_labels):
            w = p_cell[a, y]
            if w <= 0:
                continue
            cj = joint.p[a, y] / w
            mix += w * np.outer(cj.sum(axis=1), cj.sum(axis=0))
    mask = pair > 0
    if (mix[mask] <= 0).any():
        return MixtureBoundReport(math.inf, mutual_information(joint, "view", "code", ("attr", "label")), True)
    lhs = float((pair[mask] * np.log(pair[mask] / mix[mask])).sum())
    rhs = mutual_information(joint, "view", "code", ("attr", "label"))
    return MixtureBoundReport(lhs, rhs, False)


# ---------------------------------------------------------------------------
# Randomized suites.  Every trial derives its own seed from (seed, index) so
# results are independent of execution order and safe to parallelize.


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _sandwich_trial(args: tuple[int, int]) -> dict:
    seed, i = args
    rng = _trial_rng(seed, i)
    sparse = rng.random() < 0.2
    n_labels = 3 if rng.random() < 0.2 else 2
    proc = random_process(
        rng,
        n_labels=n_labels,
        n_inputs=int(rng.integers(3, 6)),
        n_codes=int(rng.integers(2, 4)),
        sparse=sparse,
    )
    rep = check_cmi_sandwich(joint_from_process(proc))
    return {"trial": i, "sparse": sparse, **rep.to_dict(), "slack": rep.slack}


def _equality_trial(args: tuple[int, int]) -> dict:
    seed, i = args
    rng = _trial_rng(seed, i)
    proc = identity_process(rng, n_symbols=int(rng.integers(2, 5)))
    rep = check_cmi_sandwich(joint_from_process(proc))
    gap = abs(rep.view_info_by_label - rep.view_info_by_cell - rep.leakage)
    return {"trial": i, **rep.to_dict(), "equality_gap": gap}


def _upper_trial(args: tuple[int, int]) -> dict:
    seed, i = args
    rng = _trial_rng(seed, i)
    sparse = rng.random() < 0.3
    proc = random_process(rng, n_inputs=int(rng.integers(3, 6)), sparse=sparse)
    rep = check_logprob_upper_bound(joint_from_process(proc))
    return {"trial": i, "sparse": sparse, **rep.to_dict()}


def _infonce_trial(args: tuple[int, int, int]) -> dict:
    seed, i, n_critics = args
    rng = _trial_rng(seed, i)
    proc = random_process(rng, n_inputs=4, n_codes=3, sparse=False)
    joint = joint_from_process(proc)
    cmi = mutual_information(joint, "view", "code", ("attr", "label"))
    worst = -math.inf
    for _ in range(n_critics):
        critic = Critic(rng.uniform(-2.0, 2.0, size=(3, 3)))
        worst = max(worst, conditional_infonce_exact(joint, critic, 2) - cmi)
    return {"trial": i, "cmi": cmi, "max_excess": worst, "passed": worst <= SLACK}


def _monotone_trial(args: tuple[int, int]) -> dict:
    seed, i = args
    rng = _trial_rng(seed, i)
    proc = random_process(rng, n_inputs=4, n_codes=3, sparse=False, shared_input=True)
    joint = joint_from_process(proc)
    critic = near_optimal_critic(joint)
    cmi = mutual_information(joint, "view", "code", ("attr", "label"))
    values = [conditional_infonce_exact(joint, critic, n) for n in (1, 2, 3)]
    steps = [values[k + 1] - values[k] for k in range(2)]
    monotone = min(steps) >= -SLACK
    bounded = max(v - cmi for v in values) <= SLACK
    starts_at_zero = abs(values[0]) <= 1e-15
    return {
        "trial": i,
        "values": values,
        "cmi": cmi,
        "monotone": monotone,
        "bounded": bounded,
        "starts_at_zero": starts_at_zero,
        "passed": monotone and bounded and starts_at_zero,
    }


def _kl_trial(args: tuple[int, int, int]) -> dict:
    seed, i, n_critics = args
    rng = _trial_rng(seed, i)
    p = _prob_vector(rng, 6, sparse=False)
    q = _prob_vector(rng, 6, sparse=False)
    rep = check_kl_variational(p, q, n_critics, rng)
    return {"trial": i, **rep.to_dict()}


def _mixture_trial(args: tuple[int, int]) -> dict:
    seed, i = args
    rng = _trial_rng(seed, i)
    sparse = rng.random() < 0.2
    proc = random_process(rng, n_inputs=int(rng.integers(3, 6)), sparse=sparse)
    rep = check_mixture_kl_bound(joint_from_process(proc))
    return {"trial": i, "sparse": sparse, **rep.to_dict()}


def _run_trials(worker, arg_list, workers: int = 1) -> list[dict]:
    if workers <= 1:
        return [worker(a) for a in arg_list]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        chunk = max(1, len(arg_list) // (workers * 4))
        return list(ex.map(worker, arg_list, chunksize=chunk))


def run_sandwich_suite(n_trials: int, seed: int, workers: int = 1) -> list[dict]:
    return _run_trials(_sandwich_trial, [(seed, i) for i in range(n_trials)], workers)


def run_equality_suite(n_trials: int, seed: int, workers: int = 1) -> list[dict]:
    return _run_trials(_equality_trial, [(seed, i) for i in range(n_trials)], workers)


def run_upper_bound_suite(n_trials: int, seed: int, workers: int = 1) -> list[dict]:
    return _run_trials(_upper_trial, [(seed, i) for i in range(n_trials)], workers)


def run_infonce_suite(
    n_trials: int, seed: int, n_critics: int = 100, workers: int = 1
) -> list[dict]:
    return _run_trials(
        _infonce_trial, [(seed, i, n_critics) for i in range(n_trials)], workers
    )


def run_monotone_suite(n_trials: int, seed: int, workers: int = 1) -> list[dict]:
    return _run_trials(_monotone_trial, [(seed, i) for i in range(n_trials)], workers)


def run_kl_suite(
    n_trials: int, seed: int, n_critics: int = 100, workers: int = 1
) -> list[dict]:
    return _run_trials(_kl_trial, [(seed, i, n_critics) for i in range(n_trials)], workers)


def run_mixture_suite(n_trials: int, seed: int, workers: int = 1) -> list[dict]:
    return _run_trials(_mixture_trial, [(seed, i) for i in range(n_trials)], workers)


def summarize_suite(rows: list[dict]) -> dict:
    """Aggregate pass counts and flag counts for CLI reporting."""
    out = {
        "trials": len(rows),
        "failures": sum(1 for r in rows if not r.get("passed", True)),
    }
    if rows and "infinite" in rows[0]:
        out["infinite"] = sum(1 for r in rows if r["infinite"])
    return out
