"""Lift index and the repeated-trial sweep harness."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .baselines import METHODS as BASELINE_METHODS
from .baselines import baseline_distances
from .errors import GenerationError, ParameterError
from .qanet import QanetParams, RankedList, run_query
from .synth import SynthConfig, generate_network, generate_query, inject_anomalies

log = logging.getLogger(__name__)

ALL_METHODS = ("qanet",) + BASELINE_METHODS
SWEEP_VARIABLES = ("network_size", "node_types", "communities", "ref_size", "query_type")
MAX_SKIP_FRACTION = 0.2


def lift_index(ranked: RankedList, ground_truth: Mapping[int, bool]) -> float:
    """Position-weighted share of positives near the top, divided by the positive count.

    With ``n`` candidates the node at 1-based rank ``i`` weighs
    ``(n - i + 1) / n``. For ten candidates of which five are positive the
    value runs from 0.3 (all positives last) to 0.8 (all positives first).
    """
    n = len(ranked)
    labels = np.array([bool(ground_truth[v]) for v in ranked.nodes], dtype=float)
    positives = labels.sum()
    if positives == 0:
        raise ValueError("lift index is undefined without positive labels")
    weights = (n - np.arange(n)) / n
    return float(np.dot(weights, labels) / positives)


@dataclass(frozen=True)
class ExperimentConfig:
    sweep_variable: str = "network_size"
    sweep_values: tuple = (1000, 2000, 4000)
    synth: SynthConfig = SynthConfig()
    qanet: QanetParams = QanetParams()
    query_type: int = 5
    ref_size: int = 20
    cand_size: int = 10
    repetitions: int = 20
    methods: tuple[str, ...] = ALL_METHODS
    seed: int = 0

    def validate(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ParameterError(f"sweep_variable must be one of {SWEEP_VARIABLES}")
        if not self.sweep_values:
            raise ParameterError("sweep_values must not be empty")
        if self.repetitions < 1:
            raise ParameterError("repetitions must be >= 1")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown or not self.methods:
            raise ParameterError(f"methods must be a non-empty subset of {ALL_METHODS}")

    def cell(self, value):
        """Synth config, qanet params, query type, ref size for one sweep value."""
        synth, qtype, ref = self.synth, self.query_type, self.ref_size
        if self.sweep_variable == "network_size":
            synth = replace(synth, n_nodes=int(value))
        elif self.sweep_variable == "node_types":
            synth = replace(synth, n_types=int(value))
        elif self.sweep_variable == "communities":
            synth = replace(synth, n_colors=int(value))
        elif self.sweep_variable == "ref_size":
            ref = int(value)
        else:
            qtype = int(value)
        return synth, self.qanet, qtype, ref


@dataclass
class LiftResult:
    method: str
    sweep_value: object
    mean_li: float
    std_li: float
    runs: int
    values: list = field(default_factory=list, repr=False)


def rep_seeds(master: int, cell_index: int, rep: int) -> list[int]:
    """Four independent seeds (network, injection, query, method) per repetition."""
    ss = np.random.SeedSequence([master, cell_index, rep])
    return [int(s) for s in ss.generate_state(4)]


def run_trial(synth: SynthConfig, params: QanetParams, query_type: int, ref_size: int, cand_size: int,
              methods: Sequence[str], seeds: Sequence[int]) -> dict[str, float]:
    """One repetition: generate, inject, query, score every method."""
    net = generate_network(replace(synth, seed=seeds[0]))
    net = inject_anomalies(net, synth.anomaly_fraction, synth.p_anom, seed=seeds[1])
    lq = generate_query(net, query_type, ref_size, cand_size, seed=seeds[2])
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for m in methods:
            if m == "qanet":
                ranked = run_query(net.graph, lq.query, replace(params, seed=seeds[3]))
            else:
                ranked = RankedList.from_scores(lq.query.candidates,
                                                baseline_distances(net.graph, lq.query, m))
            out[m] = lift_index(ranked, lq.abnormal)
    return out


def run_experiment(config: ExperimentConfig, progress=None) -> list[LiftResult]:
    """Sweep one variable; mean and std of the lift index per method and value.

    Repetitions whose query cannot be generated are skipped and counted; a
    sweep value with more than 20% skips aborts the run.
    """
    config.validate()
    results = []
    for ci, value in enumerate(config.sweep_values):
        synth, params, qtype, ref = config.cell(value)
        per_method = {m: [] for m in config.methods}
        skipped = 0
        for rep in range(config.repetitions):
            try:
                lis = run_trial(synth, params, qtype, ref, config.cand_size, config.methods,
                                rep_seeds(config.seed, ci, rep))
            except GenerationError as exc:
                skipped += 1
                log.warning("sweep %s=%s rep %d skipped: %s", config.sweep_variable, value, rep, exc)
                continue
            for m, li in lis.items():
                per_method[m].append(li)
            if progress:
                progress(value, rep, lis)
        if skipped > MAX_SKIP_FRACTION * config.repetitions:
            raise GenerationError(f"{skipped} of {config.repetitions} repetitions skipped at "
                                  f"{config.sweep_variable}={value}")
        for m in config.methods:
            vals = per_method[m]
            results.append(LiftResult(m, value, float(np.mean(vals)) if vals else float("nan"),
                                      float(np.std(vals)) if vals else float("nan"), len(vals), vals))
    return results


def format_results(results: Sequence[LiftResult]) -> str:
    lines = ["method\tsweep_value\tmean_li\tstd_li\truns"]
    lines += [f"{r.method}\t{r.sweep_value}\t{r.mean_li:.6f}\t{r.std_li:.6f}\t{r.runs}" for r in results]
    return "\n".join(lines) + "\n"


def format_gnuplot(results: Sequence[LiftResult]) -> str:
    """Whitespace table: sweep value, then mean and std per method."""
    methods = list(dict.fromkeys(r.method for r in results))
    values = list(dict.fromkeys(r.sweep_value for r in results))
    table = {(r.method, r.sweep_value): r for r in results}
    head = "# sweep_value " + " ".join(f"{m}_mean {m}_std" for m in methods)
    rows = [" ".join([str(v)] + [f"{table[m, v].mean_li:.6f} {table[m, v].std_li:.6f}" for m in methods])
            for v in values]
    return "\n".join([head] + rows) + "\n"
