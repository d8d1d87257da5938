"""Config-driven experiment runs: simulate counts, reconstruct, report.

Counting model: every measurement setting integrates ``counts_per_setting``
post-selected events, so the raw count for outcome o is
Poisson(N p_o eta_o) with eta_o the product of the relevant detector
efficiencies; the corrected column divides the raw count by that product.
Analyzer detectors are keyed "<mode><outcome char>", e.g. "a+" or "d-",
and default to unit efficiency.

Reports carry every estimated quantity with a bootstrap error bar plus
enough metadata (config echo, seed, code version) to re-run bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from ._version import __version__
from .gate import GateChannel, gate_channel
from .metrics import (
    CHSH_VARIANT_FOR_BELL,
    ChshSpec,
    chsh,
    chsh_from_correlators,
    fidelity_pure,
    log_negativity,
)
from .protocols import (
    CORRECTION_FOR_BELL,
    CORRECTION_MATRICES,
    TELEPORT_PAIR_TARGET,
    TILDE_LABELS,
    swap,
    teleport,
    tilde_bell,
)
from .sources import (
    PairSpec,
    SINGLE_QUBIT_AMPLITUDES,
    make_input,
    make_pair,
    single_qubit_state,
    tomographic_input_set,
)
from .states import DensityMatrix, analyzer_eigenvectors
from .tomography import (
    MeasurementSetting,
    identity_process,
    mle_fit,
    process_fidelity,
    process_tomo,
    settings_1q,
    settings_2q,
)

PROTOCOLS = ("teleport", "swap", "gate-only")


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


# -- count tables ------------------------------------------------------------

@dataclass(frozen=True)
class CountRow:
    setting: str
    outcome: str
    raw: int
    corrected: float


@dataclass(frozen=True)
class CountTable:
    """Coincidence counts per setting and outcome, with detector efficiencies."""

    modes: tuple[str, ...]
    rows: tuple[CountRow, ...]
    efficiencies: dict[str, float] = field(default_factory=dict)

    def correction_factor(self, outcome: str) -> float:
        eta = 1.0
        for mode, ch in zip(self.modes, outcome):
            eta *= self.efficiencies.get(f"{mode}{ch}", 1.0)
        return eta

    def by_setting(self) -> dict[str, list[CountRow]]:
        out: dict[str, list[CountRow]] = defaultdict(list)
        for r in self.rows:
            out[r.setting].append(r)
        return dict(out)

    def total_raw(self) -> int:
        return sum(r.raw for r in self.rows)

    def resample(self, rng: np.random.Generator) -> "CountTable":
        """Poisson-resample the raw counts and re-apply the correction."""
        rows = tuple(
            CountRow(
                r.setting,
                r.outcome,
                raw := int(rng.poisson(r.raw)),
                raw / self.correction_factor(r.outcome),
            )
            for r in self.rows
        )
        return CountTable(self.modes, rows, self.efficiencies)


def simulate_counts(probabilities: Mapping[str, Mapping[str, float]], n_per_setting: int,
                    efficiencies: Mapping[str, float], seed, modes: Sequence[str],
                    normalized: bool = True) -> CountTable:
    """Draw Poisson counts for every setting and outcome.

    ``probabilities`` maps setting id to outcome distribution; each
    distribution must sum to one (set ``normalized=False`` for tables that
    legitimately carry missing mass, e.g. gate failure). Raw counts are
    Poisson(N p eta): detection eats efficiency *before* counting, the
    corrected column restores it.
    """
    if n_per_setting <= 0:
        raise ValueError(f"counts per setting must be positive, got {n_per_setting}")
    table = CountTable(tuple(modes), (), dict(efficiencies))
    rng = np.random.default_rng(seed)
    rows = []
    for setting_id, dist in probabilities.items():
        total = sum(dist.values())
        if normalized and abs(total - 1.0) > 1e-9:
            raise ValueError(f"setting {setting_id}: probabilities sum to {total}")
        if total > 1.0 + 1e-9 or any(p < -1e-12 for p in dist.values()):
            raise ValueError(f"setting {setting_id}: invalid distribution")
        for outcome, p in dist.items():
            eta = table.correction_factor(outcome)
            raw = int(rng.poisson(n_per_setting * max(p, 0.0) * eta))
            rows.append(CountRow(setting_id, outcome, raw, raw / eta))
    return replace(table, rows=tuple(rows))


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str
    overlap: float = 1.0
    pair_mixedness: float = 0.0
    input_mixedness: float = 0.0
    counts_per_setting: int = 1000
    efficiencies: dict[str, float] = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    pair_target: str | None = None
    gate_input: str = "VV"
    bootstrap_resamples: int = 100

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol: must be one of {PROTOCOLS}, got {self.protocol!r}")
        for name in ("overlap", "pair_mixedness", "input_mixedness"):
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or not 0.0 <= float(val) <= 1.0:
                raise ConfigError(f"{name}: must lie in [0, 1], got {val!r}")
        if not isinstance(self.counts_per_setting, int) or self.counts_per_setting <= 0:
            raise ConfigError(f"counts_per_setting: must be a positive integer, got {self.counts_per_setting!r}")
        for key, eta in self.efficiencies.items():
            if not isinstance(eta, (int, float)) or not 0.0 < float(eta) <= 1.0:
                raise ConfigError(f"efficiencies.{key}: must lie in (0, 1], got {eta!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed: must be an integer, got {self.seed!r}")
        if self.bootstrap_resamples < 100:
            raise ConfigError(f"bootstrap_resamples: must be at least 100, got {self.bootstrap_resamples}")
        if len(self.gate_input) != 2 or any(c not in SINGLE_QUBIT_AMPLITUDES for c in self.gate_input):
            raise ConfigError(f"gate_input: must be two of {sorted(SINGLE_QUBIT_AMPLITUDES)}, got {self.gate_input!r}")

    def resolved_pair_target(self) -> str:
        if self.pair_target is not None:
            return self.pair_target
        return TELEPORT_PAIR_TARGET if self.protocol == "teleport" else "phi+"

    def echo(self) -> dict:
        return {
            "protocol": self.protocol,
            "overlap": self.overlap,
            "pair_mixedness": self.pair_mixedness,
            "input_mixedness": self.input_mixedness,
            "counts_per_setting": self.counts_per_setting,
            "efficiencies": dict(sorted(self.efficiencies.items())),
            "seed": self.seed,
            "pair_target": self.resolved_pair_target(),
            "gate_input": self.gate_input,
            "bootstrap_resamples": self.bootstrap_resamples,
        }


_CONFIG_FIELDS = {
    "protocol", "overlap", "pair_mixedness", "input_mixedness", "counts_per_setting",
    "efficiencies", "seed", "out", "pair_target", "gate_input", "bootstrap_resamples",
}


def config_from_mapping(data: Mapping) -> ExperimentConfig:
    if not isinstance(data, Mapping):
        raise ConfigError(f"config root: expected a mapping, got {type(data).__name__}")
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if "protocol" not in data:
        raise ConfigError("protocol: field is required")
    eff = data.get("efficiencies", {})
    if eff is None:
        eff = {}
    if not isinstance(eff, Mapping):
        raise ConfigError("efficiencies: expected a mapping of detector -> efficiency")
    kwargs = dict(data)
    kwargs["efficiencies"] = dict(eff)
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> ExperimentConfig:
    import yaml

    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    return config_from_mapping(data or {})


# -- exact (count-free) protocol summaries ------------------------------------

def _as_channel(gate) -> GateChannel:
    return gate if isinstance(gate, GateChannel) else gate_channel(float(gate))


def teleport_summary(gate, pair_mixedness: float = 0.0, input_mixedness: float = 0.0,
                     pair_target: str = TELEPORT_PAIR_TARGET) -> dict:
    """Exact teleportation figures for the four probe inputs.

    Fidelities are of the correction-rotated conditional states averaged
    over the four analyzer outcomes with their joint probabilities; the
    process matrix treats the nominal pure probes as the channel inputs.
    """
    channel = _as_channel(gate)
    pair = make_pair(PairSpec(pair_target, pair_mixedness), ("a", "b"))
    summary: dict = {"per_outcome": {}}
    avg_states = []
    probes = []
    fids = []
    for spec in tomographic_input_set(input_mixedness):
        res = teleport(make_input(spec, "c"), pair, channel, correct=True)
        chi = single_qubit_state(spec.state, "a")
        total = res.success_probability
        avg = sum(o.probability * o.state.entries for o in res.outcomes if o.state is not None) / total
        state = DensityMatrix(0.5 * (avg + avg.conj().T), ("a",), validate_psd=False)
        fid = fidelity_pure(state, chi)
        summary[f"F_{spec.state}"] = fid
        summary["per_outcome"][spec.state] = {
            o.bell_label: {
                "probability": o.probability,
                "fidelity": fidelity_pure(o.state, chi) if o.state is not None else None,
            }
            for o in res.outcomes
        }
        fids.append(fid)
        avg_states.append(state)
        probes.append(single_qubit_state(spec.state))
    matrix = process_tomo(probes, avg_states)
    summary["F_avg"] = float(np.mean(fids))
    summary["F_p"] = process_fidelity(matrix, identity_process())
    summary["process_matrix"] = matrix
    return summary


def swap_summary(gate, pair_mixedness: float = 0.0, pair_target: str = "phi+") -> dict:
    """Exact entanglement-swapping figures for the four analyzer outcomes."""
    channel = _as_channel(gate)
    pair = make_pair(PairSpec(pair_target, pair_mixedness))
    res = swap(pair, pair, channel)
    out: dict = {"outcomes": {}}
    for o in res.outcomes:
        variant = CHSH_VARIANT_FOR_BELL[o.bell_label]
        target = tilde_bell(o.bell_label, ("a", "d"))
        s_val = chsh(o.state, ChshSpec(variant=variant))
        out["outcomes"][o.bell_label] = {
            "probability": o.probability,
            "fidelity": fidelity_pure(o.state, target),
            "log_negativity": log_negativity(o.state),
            "chsh_variant": variant,
            "chsh": s_val,
            "chsh_abs": abs(s_val),
            "state": o.state,
        }
    vals = out["outcomes"]
    out["success_probability"] = res.success_probability
    out["F_avg"] = float(np.mean([v["fidelity"] for v in vals.values()]))
    out["N_avg"] = float(np.mean([v["log_negativity"] for v in vals.values()]))
    out["S_abs_avg"] = float(np.mean([v["chsh_abs"] for v in vals.values()]))
    return out


# -- calibration ---------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationResult:
    overlap: float
    pair_mixedness: float
    input_mixedness: float
    residual: float
    predictions: dict[str, float]


#: Teleportation targets reported by the experiment this simulator mirrors.
PAPER_TELEPORT_TARGETS = {"F_H": 0.93, "F_V": 0.75, "F_+": 0.79, "F_R": 0.84, "F_p": 0.75}

#: Swap averages from the same experiment, usable as extra targets to pin
#: the otherwise degenerate split between pair and input mixedness.
PAPER_SWAP_TARGETS = {"F_swap_avg": 0.773, "S_abs_avg": 2.14}

_TELEPORT_KEYS = ("F_H", "F_V", "F_+", "F_R", "F_p", "F_avg")
_SWAP_KEYS = {"F_swap_avg": "F_avg", "S_abs_avg": "S_abs_avg"}


def calibrate(targets: Mapping[str, float],
              overlap_grid: Sequence[float],
              pair_grid: Sequence[float] = (0.0,),
              input_grid: Sequence[float] = (0.0,)) -> CalibrationResult:
    """Exhaustive grid search matching exact protocol outputs to targets.

    Minimizes the summed squared residual over the supplied (overlap,
    pair mixedness, input mixedness) grid using the count-free pipeline.
    Teleportation targets alone leave the split between pair and input
    mixedness nearly degenerate (both degrade the teleported qubit the same
    way); adding the swap-average targets resolves it, since swapping uses
    the pair twice and the input photon not at all.
    """
    for key in targets:
        if key not in _TELEPORT_KEYS and key not in _SWAP_KEYS:
            raise ValueError(
                f"unknown calibration target {key!r}; options: "
                f"{_TELEPORT_KEYS + tuple(_SWAP_KEYS)}")
    if not len(overlap_grid) or not len(pair_grid) or not len(input_grid):
        raise ValueError("calibration grids must be non-empty")
    swap_targets = {k: v for k, v in targets.items() if k in _SWAP_KEYS}
    tele_targets = {k: v for k, v in targets.items() if k not in _SWAP_KEYS}
    best = None
    for v in overlap_grid:
        channel = gate_channel(round(float(v), 12))
        for lp in pair_grid:
            swap_pred = {}
            swap_residual = 0.0
            if swap_targets:
                sw = swap_summary(channel, float(lp))
                for key, target in swap_targets.items():
                    swap_pred[key] = sw[_SWAP_KEYS[key]]
                    swap_residual += (swap_pred[key] - target) ** 2
            for li in input_grid:
                pred = teleport_summary(channel, float(lp), float(li))
                residual = swap_residual + sum(
                    (pred[k] - t) ** 2 for k, t in tele_targets.items())
                if best is None or residual < best[0] - 1e-15:
                    predictions = {k: pred[k] for k in _TELEPORT_KEYS}
                    predictions.update(swap_pred)
                    best = (residual, float(v), float(lp), float(li), predictions)
    residual, v, lp, li, pred = best
    return CalibrationResult(v, lp, li, residual, pred)


# -- reports -------------------------------------------------------------------

@dataclass
class Report:
    protocol: str
    version: str
    seed: int
    config: dict
    results: dict
    count_tables: dict[str, CountTable] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def counts_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["table", "modes", "setting", "outcome", "raw", "corrected"])
        for key in sorted(self.count_tables):
            table = self.count_tables[key]
            for r in table.rows:
                writer.writerow([key, "".join(table.modes), r.setting, r.outcome,
                                 r.raw, repr(r.corrected)])
        return buf.getvalue()

    def save(self, base_path: str) -> list[str]:
        json_path = f"{base_path}.json"
        csv_path = f"{base_path}.counts.csv"
        with open(json_path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")
        with open(csv_path, "w") as fh:
            fh.write(self.counts_csv())
        return [json_path, csv_path]


def _matrix_payload(entries: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(entries)]


def _joint_bootstrap(tables: Mapping[str, CountTable], estimator: Callable,
                     n_resamples: int, seed_seq: np.random.SeedSequence):
    """Resample every table together and re-run a dict-valued estimator."""
    values = estimator(tables)
    samples = defaultdict(list)
    failures = 0
    for child in seed_seq.spawn(n_resamples):
        rng = np.random.default_rng(child)
        try:
            out = estimator({k: t.resample(rng) for k, t in tables.items()})
        except Exception:
            failures += 1
            continue
        for k, v in out.items():
            samples[k].append(v)
    if failures > 0.1 * n_resamples:
        raise RuntimeError(f"{failures}/{n_resamples} bootstrap resamples failed")
    errors = {k: (float(np.std(vs, ddof=1)) if len(vs) > 1 else 0.0)
              for k, vs in samples.items()}
    return values, errors


def _tomo_probabilities(state: DensityMatrix, settings: list[MeasurementSetting]) -> dict:
    return {s.id: s.probabilities(state) for s in settings}


_CHSH_SPEC = ChshSpec()


def _chsh_probabilities(state: DensityMatrix) -> dict:
    probs = {}
    for i, ta in enumerate(_CHSH_SPEC.mode_a_angles):
        vecs_a = analyzer_eigenvectors(ta)
        for j, td in enumerate(_CHSH_SPEC.mode_d_angles):
            vecs_d = analyzer_eigenvectors(td)
            dist = {}
            for sa, va in zip("+-", vecs_a):
                for sd, vd in zip("+-", vecs_d):
                    vec = np.kron(va, vd)
                    dist[sa + sd] = max(float(np.real(vec.conj() @ state.entries @ vec)), 0.0)
            probs[f"chsh{i}{j}"] = dist
    return probs


def _chsh_from_counts(table: CountTable, variant: str) -> float:
    e = np.zeros((2, 2))
    for setting_id, rows in table.by_setting().items():
        i, j = int(setting_id[4]), int(setting_id[5])
        total = sum(r.corrected for r in rows)
        if total <= 0:
            raise ValueError(f"setting {setting_id} has zero counts")
        e[i, j] = sum(
            r.corrected * (1 if r.outcome[0] == "+" else -1) * (1 if r.outcome[1] == "+" else -1)
            for r in rows
        ) / total
    return chsh_from_correlators(e, variant)


def _run_teleport(config: ExperimentConfig, seed_seq: np.random.SeedSequence) -> Report:
    channel = gate_channel(config.overlap)
    pair = make_pair(PairSpec(config.resolved_pair_target(), config.pair_mixedness), ("a", "b"))
    settings = settings_1q()
    counts_seed, boot_seed = seed_seq.spawn(2)
    table_seeds = iter(counts_seed.spawn(16))

    tables: dict[str, CountTable] = {}
    weights: dict[str, dict[str, float]] = {}
    exact_states: dict[str, dict[str, DensityMatrix]] = {}
    for spec in tomographic_input_set(config.input_mixedness):
        res = teleport(make_input(spec, "c"), pair, channel, correct=False)
        total = res.success_probability
        weights[spec.state] = {}
        exact_states[spec.state] = {}
        for o in res.outcomes:
            if o.state is None:
                continue
            weights[spec.state][o.bell_label] = o.probability / total
            exact_states[spec.state][o.bell_label] = o.state
            probs = _tomo_probabilities(o.state, settings)
            tables[f"{spec.state}/{o.bell_label}"] = simulate_counts(
                probs, config.counts_per_setting, config.efficiencies,
                next(table_seeds), modes=("a",))

    probes = {name: single_qubit_state(name, "a") for name in ("H", "V", "+", "R")}

    def estimate(tabs: Mapping[str, CountTable]) -> dict[str, float]:
        out: dict[str, float] = {}
        averaged: list[DensityMatrix] = []
        for name in ("H", "V", "+", "R"):
            acc = np.zeros((2, 2), dtype=complex)
            fid = 0.0
            for bell, w in weights[name].items():
                rho_hat = mle_fit(tabs[f"{name}/{bell}"])
                u = CORRECTION_MATRICES[CORRECTION_FOR_BELL[bell]]
                corrected = u @ rho_hat.entries @ u.conj().T
                f = float(np.real(probes[name].amplitudes.conj() @ corrected @ probes[name].amplitudes))
                out[f"F_{name}/{bell}"] = f
                fid += w * f
                acc += w * corrected
            out[f"F_{name}"] = fid
            averaged.append(DensityMatrix(0.5 * (acc + acc.conj().T), ("a",), validate_psd=False))
        matrix = process_tomo([probes[n] for n in ("H", "V", "+", "R")], averaged)
        out["F_p"] = process_fidelity(matrix, identity_process())
        return out

    values, errors = _joint_bootstrap(tables, estimate, config.bootstrap_resamples, boot_seed)

    # rebuild the reportable states once from the original tables
    reconstructed: dict[str, dict] = {}
    averaged: dict[str, DensityMatrix] = {}
    for name in ("H", "V", "+", "R"):
        reconstructed[name] = {}
        acc = np.zeros((2, 2), dtype=complex)
        for bell, w in weights[name].items():
            rho_hat = mle_fit(tables[f"{name}/{bell}"])
            u = CORRECTION_MATRICES[CORRECTION_FOR_BELL[bell]]
            corrected = u @ rho_hat.entries @ u.conj().T
            acc += w * corrected
            reconstructed[name][bell] = {
                "probability_weight": w,
                "correction": CORRECTION_FOR_BELL[bell],
                "fidelity": values[f"F_{name}/{bell}"],
                "fidelity_err": errors[f"F_{name}/{bell}"],
                "state": _matrix_payload(rho_hat.entries),
            }
        averaged[name] = DensityMatrix(0.5 * (acc + acc.conj().T), ("a",), validate_psd=False)
    matrix = process_tomo([probes[n] for n in ("H", "V", "+", "R")],
                          [averaged[n] for n in ("H", "V", "+", "R")])

    results = {
        "inputs": {
            name: {
                "fidelity": values[f"F_{name}"],
                "fidelity_err": errors[f"F_{name}"],
                "outcomes": reconstructed[name],
            }
            for name in ("H", "V", "+", "R")
        },
        "process_matrix": _matrix_payload(matrix.entries),
        "process_fidelity": values["F_p"],
        "process_fidelity_err": errors["F_p"],
    }
    return Report("teleport", __version__, config.seed, config.echo(), results, tables)


def _run_swap(config: ExperimentConfig, seed_seq: np.random.SeedSequence) -> Report:
    channel = gate_channel(config.overlap)
    pair = make_pair(PairSpec(config.resolved_pair_target(), config.pair_mixedness))
    res = swap(pair, pair, channel)
    settings = settings_2q()
    counts_seed, boot_seed = seed_seq.spawn(2)
    table_seeds = iter(counts_seed.spawn(8))

    tables: dict[str, CountTable] = {}
    outcome_results: dict[str, dict] = {}
    boot_values: dict[str, dict] = {}
    boot_errors: dict[str, dict] = {}
    for o in res.outcomes:
        if o.state is None:
            continue
        label = o.bell_label
        tomo = simulate_counts(_tomo_probabilities(o.state, settings),
                               config.counts_per_setting, config.efficiencies,
                               next(table_seeds), modes=("a", "d"))
        bell_counts = simulate_counts(_chsh_probabilities(o.state),
                                      config.counts_per_setting, config.efficiencies,
                                      next(table_seeds), modes=("a", "d"))
        tables[f"{label}/tomo"] = tomo
        tables[f"{label}/chsh"] = bell_counts
        target = tilde_bell(label, ("a", "d"))
        variant = CHSH_VARIANT_FOR_BELL[label]

        def estimate(tabs: Mapping[str, CountTable], target=target, variant=variant,
                     label=label) -> dict[str, float]:
            rho_hat = mle_fit(tabs[f"{label}/tomo"])
            s_val = _chsh_from_counts(tabs[f"{label}/chsh"], variant)
            return {
                "fidelity": fidelity_pure(rho_hat, target),
                "log_negativity": log_negativity(rho_hat),
                "chsh": s_val,
                "chsh_abs": abs(s_val),
            }

        values, errors = _joint_bootstrap(
            {f"{label}/tomo": tomo, f"{label}/chsh": bell_counts},
            estimate, config.bootstrap_resamples, boot_seed.spawn(1)[0])
        boot_values[label], boot_errors[label] = values, errors
        rho_hat = mle_fit(tomo)
        outcome_results[label] = {
            "product_result": o.product_result,
            "probability": o.probability,
            "fidelity": values["fidelity"],
            "fidelity_err": errors["fidelity"],
            "log_negativity": values["log_negativity"],
            "log_negativity_err": errors["log_negativity"],
            "chsh_variant": variant,
            "chsh": values["chsh"],
            "chsh_err": errors["chsh"],
            "chsh_abs": values["chsh_abs"],
            "state": _matrix_payload(rho_hat.entries),
        }

    labels = [l for l in TILDE_LABELS if l in outcome_results]
    results = {
        "outcomes": outcome_results,
        "average_fidelity": float(np.mean([boot_values[l]["fidelity"] for l in labels])),
        "average_fidelity_err": float(np.sqrt(np.mean(
            [boot_errors[l]["fidelity"] ** 2 for l in labels]) / len(labels))),
        "average_chsh_abs": float(np.mean([boot_values[l]["chsh_abs"] for l in labels])),
        "average_chsh_abs_err": float(np.sqrt(np.mean(
            [boot_errors[l]["chsh"] ** 2 for l in labels]) / len(labels))),
        "average_log_negativity": float(np.mean(
            [boot_values[l]["log_negativity"] for l in labels])),
    }
    return Report("swap", __version__, config.seed, config.echo(), results, tables)


def _run_gate_only(config: ExperimentConfig, seed_seq: np.random.SeedSequence) -> Report:
    from .metrics import bootstrap_error

    channel = gate_channel(config.overlap)
    amps = np.kron(SINGLE_QUBIT_AMPLITUDES[config.gate_input[0]],
                   SINGLE_QUBIT_AMPLITUDES[config.gate_input[1]])
    per_outcome = np.zeros(4)
    for k in channel.kraus:
        per_outcome += np.abs(k @ amps) ** 2
    p_success = float(per_outcome.sum())
    outcomes = ("HH", "HV", "VH", "VV")
    dist = {o: float(p) for o, p in zip(outcomes, per_outcome)}
    dist["00"] = 1.0 - p_success  # no-coincidence remainder

    counts_seed = seed_seq.spawn(1)[0]
    table = simulate_counts({"coinc": dist}, config.counts_per_setting,
                            config.efficiencies, counts_seed, modes=("b", "c"),
                            normalized=True)

    n = config.counts_per_setting

    def success_estimate(t: CountTable) -> float:
        return sum(r.corrected for r in t.rows if r.outcome != "00") / n

    value, stderr = bootstrap_error(table, success_estimate,
                                    config.bootstrap_resamples, seed=config.seed)
    results = {
        "input": config.gate_input,
        "success_probability_exact": p_success,
        "success_probability": value,
        "success_probability_err": stderr,
        "output_distribution_exact": {o: dist[o] for o in outcomes},
        "output_counts": {r.outcome: r.raw for r in table.rows},
    }
    return Report("gate-only", __version__, config.seed, config.echo(), results,
                  {"gate/coinc": table})


def run_experiment(config: ExperimentConfig) -> Report:
    """Simulate a full run: sources, protocol, counts, reconstruction, metrics."""
    seed_seq = np.random.SeedSequence(config.seed)
    if config.protocol == "teleport":
        report = _run_teleport(config, seed_seq)
    elif config.protocol == "swap":
        report = _run_swap(config, seed_seq)
    else:
        report = _run_gate_only(config, seed_seq)
    if config.out:
        report.save(config.out)
    return report
