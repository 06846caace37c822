"""Experiment runner: seeded trial execution, exact-vs-sampled
cross-validation, Hoeffding confidence intervals, and persistence.

A run fixes one instance (drawn from the master seed), executes T independent
trials on per-trial derived streams, and aggregates acceptance counts.
Aggregation is a commutative sum, so worker count never changes the result;
reports serialize to one deterministic JSON line plus a CSV summary row.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from . import adversaries as adv
from .classical import (
    DisjParams,
    NeRrrParams,
    OneOutOfTwoParams,
    disj_rrr_run,
    disj_rrr_soundness_exact,
    eq_rr_exact,
    eq_rr_run,
    ne_rrr_exact,
    ne_rrr_run,
    one_out_of_two_exact,
    one_out_of_two_run,
)
from .codes import CodeSpec
from .core import InstanceKind, OneOutOfTwoVerdict, RandomSource, Verdict, sample_instance
from .qsim import random_state, trace_distance_pure
from .quantum import RrqParams, UqstParams, eq_qq_round_prob, eq_qq_run, qrq_eq_run, rrq_eq_run, uqst_run

PROTOCOL_IDS = (
    "eq-rr",
    "one-of-two",
    "ne-rrr",
    "eq-qq",
    "uqst",
    "qrq-eq",
    "rrq-eq",
    "disj-rrr",
)

_INSTANCE_STREAM = 0xBEEF
_TRIAL_STREAM = 1


class ConfigError(ValueError):
    """Bad experiment configuration (reported before any trial runs)."""


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str
    n: int = 16
    trials: int = 1000
    seed: int = 0
    adversary: dict | None = None
    scale: float | None = None
    mode: str = "monte_carlo"  # monte_carlo | exact | both
    instance: str | None = None  # override the protocol's default instance kind
    repetitions: int = 1
    confidence_beta: float = 0.01
    workers: int | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.protocol not in PROTOCOL_IDS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.mode not in ("monte_carlo", "exact", "both"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not 0 < self.confidence_beta < 1:
            raise ConfigError("confidence_beta must lie in (0, 1)")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_json(data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return ExperimentConfig(**data)


def hoeffding_half_width(trials: int, beta: float) -> float:
    """Distribution-free CI half width sqrt(ln(2/beta) / (2 T))."""
    return math.sqrt(math.log(2.0 / beta) / (2.0 * trials))


@dataclass(frozen=True)
class TrialReport:
    config: ExperimentConfig
    p_hat: float | None
    exact: Fraction | None
    ci_half_width: float
    within_ci: bool | None
    lengths: dict[str, int]
    protocol_type: str
    instance_echo: str
    extras: dict[str, float]
    wall_time_s: float

    def record(self) -> dict:
        """Deterministic JSON record (volatile timing excluded)."""
        return {
            "config": self.config.to_json(),
            "p_hat": self.p_hat,
            "exact": None if self.exact is None else str(self.exact),
            "exact_float": None if self.exact is None else float(self.exact),
            "ci_half_width": self.ci_half_width,
            "within_ci": self.within_ci,
            "lengths": self.lengths,
            "protocol_type": self.protocol_type,
            "instance": self.instance_echo,
            "extras": self.extras,
        }

    def json_line(self) -> str:
        return json.dumps(self.record(), sort_keys=True, separators=(",", ":"))

    def csv_row(self) -> dict:
        cfg = self.config
        return {
            "protocol": cfg.protocol,
            "n": cfg.n,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "mode": cfg.mode,
            "p_hat": "" if self.p_hat is None else f"{self.p_hat:.6f}",
            "exact": "" if self.exact is None else f"{float(self.exact):.6f}",
            "ci_half_width": f"{self.ci_half_width:.6f}",
            "within_ci": "" if self.within_ci is None else str(self.within_ci).lower(),
            "alice_len": self.lengths.get("alice", ""),
            "bob_len": self.lengths.get("bob", ""),
            "merlin_len": self.lengths.get("merlin", ""),
            "protocol_type": self.protocol_type,
            "wall_time_s": f"{self.wall_time_s:.3f}",
        }


CSV_COLUMNS = (
    "protocol,n,trials,seed,mode,p_hat,exact,ci_half_width,within_ci,"
    "alice_len,bob_len,merlin_len,protocol_type,wall_time_s"
)


# ---------------------------------------------------------------------------
# Protocol adapters


@dataclass(frozen=True)
class RunPlan:
    trial: Callable[[RandomSource], tuple[bool, dict[str, float]]]
    exact: Callable[[], Fraction | None]
    lengths: Callable[[], dict[str, int]]
    protocol_type: str
    instance_echo: str


def _instance_kind(config: ExperimentConfig, default: InstanceKind) -> InstanceKind:
    if config.instance is None:
        return default
    try:
        return InstanceKind(config.instance)
    except ValueError as exc:
        raise ConfigError(f"unknown instance kind {config.instance!r}") from exc


def _strategy(config: ExperimentConfig, default):
    if config.adversary is None:
        return default
    try:
        return adv.parse_strategy(config.adversary)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad adversary spec: {exc}") from exc


def _require_strategy_api(strategy, method: str, protocol: str):
    """Incompatible protocol/adversary pairs fail before any trial runs."""
    if not callable(getattr(strategy, method, None)):
        raise ConfigError(
            f"adversary {type(strategy).__name__} is not compatible with {protocol}"
        )


def _echo(*parts) -> str:
    return " ".join(str(p) for p in parts)


def _plan_eq_rr(config: ExperimentConfig) -> RunPlan:
    if config.adversary is not None:
        raise ConfigError("eq-rr takes no adversary")
    spec = CodeSpec.create(config.n)
    kind = _instance_kind(config, InstanceKind.EQ_PAIR)
    x, y = sample_instance(kind, config.n, RandomSource(config.seed, _INSTANCE_STREAM))

    def trial(rng):
        verdict, _ = eq_rr_run(x, y, spec, rng)
        return verdict is Verdict.ACCEPT, {}

    def lengths():
        _, tr = eq_rr_run(x, y, spec, RandomSource(config.seed, 7))
        return tr.lengths()

    return RunPlan(trial, lambda: eq_rr_exact(x, y, spec), lengths, "RR", _echo(x, y))


def _plan_one_of_two(config: ExperimentConfig) -> RunPlan:
    if config.adversary is not None:
        raise ConfigError("one-of-two takes no adversary")
    params = OneOutOfTwoParams.create(config.n)
    kind = _instance_kind(config, InstanceKind.ONE_OUT_OF_TWO_TRIPLE)
    if kind is not InstanceKind.ONE_OUT_OF_TWO_TRIPLE:
        raise ConfigError("one-of-two needs a promise triple instance")
    x1, x2, y = sample_instance(kind, config.n, RandomSource(config.seed, _INSTANCE_STREAM))
    truth = OneOutOfTwoVerdict.FIRST_EQUAL if x1 == y else OneOutOfTwoVerdict.SECOND_EQUAL

    def trial(rng):
        verdict, _ = one_out_of_two_run(x1, x2, y, params, rng)
        return verdict is truth, {}

    def lengths():
        _, tr = one_out_of_two_run(x1, x2, y, params, RandomSource(config.seed, 7))
        return tr.lengths()

    return RunPlan(
        trial, lambda: one_out_of_two_exact(x1, x2, y, params), lengths, "RR", _echo(x1, x2, y)
    )


def _plan_ne_rrr(config: ExperimentConfig) -> RunPlan:
    params = NeRrrParams.create(
        config.n,
        repetitions=config.repetitions,
        rows=config.options.get("rows"),
        cols=config.options.get("cols"),
    )
    strategy = _strategy(config, adv.NeHonest())
    _require_strategy_api(strategy, "message", "ne-rrr")
    default_kind = (
        InstanceKind.NE_PAIR
        if isinstance(strategy, adv.NeHonest)
        else InstanceKind.EQ_PAIR
    )
    kind = _instance_kind(config, default_kind)
    x, y = sample_instance(kind, config.n, RandomSource(config.seed, _INSTANCE_STREAM))

    def trial(rng):
        verdict, _ = ne_rrr_run(x, y, strategy, params, rng)
        return verdict is Verdict.ACCEPT, {}

    def exact():
        msg = strategy.message(x, y, params, RandomSource(config.seed, 7))
        return ne_rrr_exact(x, y, msg, params) ** params.repetitions

    def lengths():
        _, tr = ne_rrr_run(x, y, strategy, params, RandomSource(config.seed, 7))
        return tr.lengths()

    return RunPlan(trial, exact, lengths, "RRR", _echo(x, y))


def _plan_eq_qq(config: ExperimentConfig) -> RunPlan:
    if config.adversary is not None:
        raise ConfigError("eq-qq takes no adversary")
    spec = CodeSpec.create(config.n)
    kind = _instance_kind(config, InstanceKind.EQ_PAIR)
    x, y = sample_instance(kind, config.n, RandomSource(config.seed, _INSTANCE_STREAM))
    reps = config.repetitions

    def trial(rng):
        _, verdict, _ = eq_qq_run(x, y, spec, reps, rng)
        return verdict is Verdict.ACCEPT, {}

    def exact():
        return eq_qq_round_prob(x, y, spec) ** reps

    def lengths():
        _, _, tr = eq_qq_run(x, y, spec, reps, RandomSource(config.seed, 7))
        return tr.lengths()

    return RunPlan(trial, exact, lengths, "QQ", _echo(x, y))


def _uqst_params(config: ExperimentConfig, n: int) -> UqstParams:
    opts = config.options
    return UqstParams(
        n=n,
        a=int(opts.get("a", max(1, n // 4))),
        eps=float(opts.get("eps", 0.5)),
        delta=float(opts.get("delta", 0.25)),
        scale=config.scale if config.scale is not None else 1.0 / 3200.0,
    )


def _plan_uqst(config: ExperimentConfig) -> RunPlan:
    params = _uqst_params(config, config.n)
    strategy = _strategy(config, adv.UqstHonest())
    if isinstance(strategy, adv.ProtocolResolved):
        raise ConfigError(f"{strategy.variant} is not a uqst adversary")
    _require_strategy_api(strategy, "blocks", "uqst")
    phi = random_state(config.n, RandomSource(config.seed, _INSTANCE_STREAM).generator())
    mode = config.options.get("referee_mode", "swap")

    def trial(rng):
        outcome = uqst_run(phi, params, strategy, rng, referee_mode=mode)
        extras = {}
        if outcome.accepted:
            far = trace_distance_pure(outcome.output_state, phi) > params.eps
            extras["accept_and_far"] = 1.0 if far else 0.0
        return outcome.accepted, extras

    def lengths():
        probe = uqst_run(phi, params, adv.UqstHonest(), RandomSource(config.seed, 7))
        return {
            "alice": probe.diagnostics["alice_bits"],
            "merlin": probe.diagnostics["merlin_qubits"],
        }

    return RunPlan(trial, lambda: None, lengths, "RQ", _echo("haar-state", config.n))


def _plan_qrq(config: ExperimentConfig) -> RunPlan:
    spec = CodeSpec.create(config.n)
    fdim = 2 * spec.block_len
    opts = dict(config.options)
    opts.setdefault("a", max(2, fdim // 4))
    config = dataclasses.replace(config, options=opts)
    params = _uqst_params(config, fdim)
    kind = _instance_kind(config, InstanceKind.EQ_PAIR)
    x, y = sample_instance(kind, config.n, RandomSource(config.seed, _INSTANCE_STREAM))
    strategy = _strategy(config, adv.UqstHonest())
    if isinstance(strategy, adv.ProtocolResolved):
        if strategy.variant != "QrqCrossFingerprint":
            raise ConfigError(f"{strategy.variant} is not a qrq adversary")
        from .qsim import fingerprint

        strategy = adv.ProductCopies(fingerprint(spec, x))
    _require_strategy_api(strategy, "blocks", "qrq-eq")

    def trial(rng):
        verdict, _ = qrq_eq_run(x, y, spec, params, strategy, rng, config.repetitions)
        return verdict is Verdict.ACCEPT, {}

    def lengths():
        _, tr = qrq_eq_run(
            x, y, spec, params, strategy, RandomSource(config.seed, 7), config.repetitions
        )
        return tr.lengths()

    return RunPlan(trial, lambda: None, lengths, "QRQ", _echo(x, y))


def _plan_rrq(config: ExperimentConfig) -> RunPlan:
    spec = CodeSpec.create(config.n)
    fdim = 2 * spec.block_len
    params = RrqParams(
        n=fdim,
        a=int(config.options.get("a", max(2, min(fdim // 4, 16)))),
        m_copies=int(config.options.get("m_copies", 32)),
    )
    kind = _instance_kind(config, InstanceKind.EQ_PAIR)
    x, y = sample_instance(kind, config.n, RandomSource(config.seed, _INSTANCE_STREAM))
    strategy = _strategy(config, adv.UqstHonest())
    if isinstance(strategy, adv.ProtocolResolved):
        if strategy.variant != "RrqOrthogonalJunk":
            raise ConfigError(f"{strategy.variant} is not an rrq adversary")
        strategy = adv.UqstFarProduct(1.0)
    _require_strategy_api(strategy, "blocks", "rrq-eq")

    def trial(rng):
        verdict, _ = rrq_eq_run(x, y, spec, params, strategy, rng)
        return verdict is Verdict.ACCEPT, {}

    def lengths():
        _, tr = rrq_eq_run(x, y, spec, params, strategy, RandomSource(config.seed, 7))
        return tr.lengths()

    return RunPlan(trial, lambda: None, lengths, "RRQ", _echo(x, y))


def _plan_disj(config: ExperimentConfig) -> RunPlan:
    params = DisjParams.create(
        config.n,
        alpha=float(config.options.get("alpha", 2.0 / 3.0)),
        sample_scale=config.scale if config.scale is not None else 1.0,
    )
    strategy = _strategy(config, adv.DisjHonest())
    _require_strategy_api(strategy, "polynomial", "disj-rrr")
    default_kind = (
        InstanceKind.DISJ_PAIR
        if isinstance(strategy, adv.DisjHonest)
        else InstanceKind.INTERSECT_PAIR
    )
    kind = _instance_kind(config, default_kind)
    x, y = sample_instance(kind, config.n, RandomSource(config.seed, _INSTANCE_STREAM))

    def trial(rng):
        verdict, _ = disj_rrr_run(x, y, strategy, params, rng)
        return verdict is Verdict.ACCEPT, {}

    def exact():
        s_prime = strategy.polynomial(x, y, params, RandomSource(config.seed, 7))
        return disj_rrr_soundness_exact(x, y, s_prime, params)

    def lengths():
        _, tr = disj_rrr_run(x, y, strategy, params, RandomSource(config.seed, 7))
        return tr.lengths()

    return RunPlan(trial, exact, lengths, "RRR", _echo(x, y))


_PLANNERS = {
    "eq-rr": _plan_eq_rr,
    "one-of-two": _plan_one_of_two,
    "ne-rrr": _plan_ne_rrr,
    "eq-qq": _plan_eq_qq,
    "uqst": _plan_uqst,
    "qrq-eq": _plan_qrq,
    "rrq-eq": _plan_rrq,
    "disj-rrr": _plan_disj,
}


def build_plan(config: ExperimentConfig) -> RunPlan:
    try:
        return _PLANNERS[config.protocol](config)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Execution


def _run_range(config_json: dict, start: int, stop: int) -> tuple[int, dict[str, float]]:
    config = ExperimentConfig.from_json(config_json)
    plan = build_plan(config)
    accepts = 0
    extras: dict[str, float] = {}
    base = RandomSource(config.seed)
    for t in range(start, stop):
        ok, extra = plan.trial(base.derive(_TRIAL_STREAM, t))
        accepts += ok
        for k, v in extra.items():
            extras[k] = extras.get(k, 0.0) + v
    return accepts, extras


def default_workers() -> int:
    return max(1, int(os.environ.get("SMPLAB_WORKERS", "1")))


def run(config: ExperimentConfig) -> TrialReport:
    """Execute one experiment; deterministic given (config, seed)."""
    t0 = time.perf_counter()
    plan = build_plan(config)  # validates before any trial
    workers = config.workers if config.workers is not None else default_workers()

    p_hat = None
    extras: dict[str, float] = {}
    if config.mode in ("monte_carlo", "both"):
        T = config.trials
        if workers <= 1 or T < 2 * workers:
            accepts, extras = _run_range(config.to_json(), 0, T)
        else:
            bounds = [(T * w) // workers for w in range(workers + 1)]
            accepts = 0
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_run_range, config.to_json(), lo, hi)
                    for lo, hi in zip(bounds, bounds[1:])
                    if lo < hi
                ]
                for fut in futures:
                    acc, extra = fut.result()
                    accepts += acc
                    for k, v in extra.items():
                        extras[k] = extras.get(k, 0.0) + v
        p_hat = accepts / config.trials
        extras = {k: v / config.trials for k, v in extras.items()}

    exact = plan.exact() if config.mode in ("exact", "both") else None
    ci = hoeffding_half_width(config.trials, config.confidence_beta)
    within = None
    if p_hat is not None and exact is not None:
        within = abs(p_hat - float(exact)) <= ci
    return TrialReport(
        config=config,
        p_hat=p_hat,
        exact=exact,
        ci_half_width=ci,
        within_ci=within,
        lengths=plan.lengths(),
        protocol_type=plan.protocol_type,
        instance_echo=plan.instance_echo,
        extras=extras,
        wall_time_s=time.perf_counter() - t0,
    )


def sweep(template: ExperimentConfig, points: list[dict]) -> list[TrialReport]:
    """One report per grid point; each point overrides template fields."""
    if not points:
        raise ConfigError("sweep needs at least one grid point")
    reports = []
    for point in points:
        data = template.to_json()
        for key, value in point.items():
            if key == "options":
                data["options"] = {**data.get("options", {}), **value}
            else:
                data[key] = value
        reports.append(run(ExperimentConfig.from_json(data)))
    return reports


def persist(reports: list[TrialReport], out: str) -> tuple[str, str]:
    """Write <out>.jsonl (deterministic records) and <out>.csv (summary)."""
    jsonl_path, csv_path = out + ".jsonl", out + ".csv"
    with open(jsonl_path, "w") as fh:
        for report in reports:
            fh.write(report.json_line() + "\n")
    with open(csv_path, "w") as fh:
        fh.write(CSV_COLUMNS + "\n")
        for report in reports:
            row = report.csv_row()
            fh.write(",".join(str(row[c]) for c in CSV_COLUMNS.split(",")) + "\n")
    return jsonl_path, csv_path
