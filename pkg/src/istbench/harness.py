"""Experiment configuration, dispatch and table output.

A config is one YAML document::

    experiment: certify
    seed: 7
    runs: 10000
    format: csv
    out: results/certify.csv
    certify:
      iterations: 2
      loss_per_element: 0.001
      ist: {log2_N: 8, model: hard-cutoff}

Exactly one experiment block may be present and its name must match
``experiment``.  Random numbers come from one ``SeedSequence`` per run, split
into an independent child stream per table row (or per sampled hypothesis),
so results do not depend on evaluation order.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import yaml

from . import __version__
from .bmv import HYPOTHESES, BmvParams, entanglement_witness, evolve_bmv, sample_witness
from .ist import IstParams, max_entangled_qubits, max_iterations, survival_probability
from .optics import (CONVENTIONS, OpticalNetwork, build_w_network, certification_network,
                     detector_distribution, w4_detector_labels, return_probability, run_network)
from .quantum import fidelity_with_pure, purity, w_state
from .spdc import PHASE_MODELS, combine_apertures, correlation_score, make_double_w
from .stats import binomial_stderr, distinguish

EXPERIMENTS = ("wstate", "certify", "return-prob", "spdc", "bmv", "sweep")
FORMATS = ("csv", "json")
TOP_LEVEL = {"experiment", "seed", "runs", "format", "out"}

SIG_DIGITS = 12


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict
    runs: int = 0
    seed: int = 0
    format: str = "csv"
    out: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not isinstance(self.runs, int) or isinstance(self.runs, bool) or self.runs < 0:
            raise ConfigError(f"runs: must be a non-negative integer, got {self.runs!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed: must be a non-negative integer, got {self.seed!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format: must be one of {FORMATS}, got {self.format!r}")
        if not isinstance(self.params, dict):
            raise ConfigError(f"{self.experiment}: experiment block must be a mapping")

    @classmethod
    def from_dict(cls, doc: dict, experiment: Optional[str] = None) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config: top level must be a mapping")
        name = doc.get("experiment", experiment)
        if experiment is not None and name != experiment:
            raise ConfigError(f"experiment: config declares {name!r} but {experiment!r} was requested")
        if name is None:
            raise ConfigError("experiment: missing")
        blocks = [k for k in doc if k not in TOP_LEVEL]
        stray = [k for k in blocks if k not in EXPERIMENTS]
        if stray:
            raise ConfigError(f"{stray[0]}: unknown top-level field")
        if len(blocks) > 1:
            raise ConfigError(f"{blocks[1]}: exactly one experiment block allowed, found {blocks}")
        if blocks and blocks[0] != name:
            raise ConfigError(f"{blocks[0]}: block does not match experiment {name!r}")
        return cls(name, dict(doc.get(name) or {}), doc.get("runs", 0), doc.get("seed", 0),
                   doc.get("format", "csv"), doc.get("out"))

    def to_dict(self) -> dict:
        """Echo used in provenance headers (the output path is left out)."""
        return {"experiment": self.experiment, "seed": self.seed, "runs": self.runs,
                "format": self.format, self.experiment: self.params}


def load_config(path: Union[str, Path], experiment: Optional[str] = None) -> ExperimentConfig:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML ({exc})") from None
    return ExperimentConfig.from_dict(doc or {}, experiment)


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[dict]
    metadata: dict = field(default_factory=dict)


class _Block:
    """Typed access to an experiment block with field-named errors."""

    def __init__(self, name: str, d: dict):
        self.name, self.d, self.used = name, d, set()

    def get(self, key, default=None, kind=None, required=False):
        self.used.add(key)
        if key not in self.d or self.d[key] is None:
            if required:
                raise ConfigError(f"{self.name}.{key}: missing")
            return default
        val = self.d[key]
        if kind is None:
            return val
        try:
            if kind is int:
                if isinstance(val, bool) or float(val) != int(val):
                    raise ValueError
                return int(val)
            return kind(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{self.name}.{key}: expected {kind.__name__}, got {val!r}") from None

    def int_list(self, key, default=None, required=False):
        val = self.get(key, default, required=required)
        vals = val if isinstance(val, (list, tuple)) else [val]
        try:
            out = [int(v) for v in vals]
        except (TypeError, ValueError):
            raise ConfigError(f"{self.name}.{key}: expected integer(s), got {val!r}") from None
        return out

    def ist(self, required=False) -> Optional[IstParams]:
        raw = self.get("ist", required=required)
        if raw is None:
            return None
        try:
            return IstParams.from_dict(raw)
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"{self.name}.ist: {exc}") from None

    def finish(self):
        unknown = set(self.d) - self.used
        if unknown:
            raise ConfigError(f"{self.name}.{sorted(unknown)[0]}: unknown field")


def _check(cond: bool, where: str, msg: str):
    if not cond:
        raise ConfigError(f"{where}: {msg}")


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def _common_network_args(b: _Block):
    loss = b.get("loss_per_element", 0.0, float)
    _check(0.0 <= loss < 1.0, f"{b.name}.loss_per_element", "must lie in [0, 1)")
    conv = b.get("convention", "real-hadamard")
    _check(conv in CONVENTIONS, f"{b.name}.convention", f"must be one of {CONVENTIONS}")
    return loss, conv


def _iterations(b: _Block, default=None):
    its = b.int_list("iterations", default, required=default is None)
    for i in its:
        _check(0 <= i <= 24, f"{b.name}.iterations", f"{i} outside 0..24")
    return its


def _run_wstate(cfg: ExperimentConfig) -> ResultTable:
    b = _Block("wstate", cfg.params)
    loss, conv = _common_network_args(b)
    ist = b.ist()
    custom = b.get("network")
    its = _iterations(b, default=[0]) if custom is not None else _iterations(b)
    b.finish()
    rows = []
    for i in its:
        if custom is not None:
            try:
                net = OpticalNetwork.from_dict(custom)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"wstate.network: {exc}") from None
            i = math.nan
        else:
            net = build_w_network(i, loss, conv)
        M = net.mode_count
        target = w_state(M)
        qm = run_network(net, 0)
        row = {"I": i, "M": M, "loss_per_element": net.loss_per_element,
               "photon_trace": qm.photon_trace(), "fidelity_qm": fidelity_with_pure(qm, target),
               "purity_qm": purity(qm)}
        if ist is not None:
            st = run_network(net, 0, ist)
            row.update(fidelity_ist=fidelity_with_pure(st, target), purity_ist=purity(st))
        rows.append(row)
    cols = ["I", "M", "loss_per_element", "photon_trace", "fidelity_qm", "purity_qm"]
    meta = {}
    if ist is not None:
        cols += ["fidelity_ist", "purity_ist"]
        meta = _ist_meta(ist)
    return ResultTable(cols, rows, meta)


def _ist_meta(ist: IstParams) -> dict:
    meta = {"ist_model": ist.label, "ist_log2_N": ist.log2_N,
            "ist_max_entangled_qubits": max_entangled_qubits(ist)}
    if ist.log2_N >= 1:
        meta["ist_max_iterations"] = max_iterations(ist)
    return meta


def _run_certify(cfg: ExperimentConfig) -> ResultTable:
    b = _Block("certify", cfg.params)
    loss, conv = _common_network_args(b)
    i = b.get("iterations", required=True, kind=int)
    _check(0 <= i <= 12, "certify.iterations", "certification is dense; need 0..12")
    ist = b.ist()
    conf = b.get("confidence", 0.95, float)
    _check(0.0 < conf < 1.0, "certify.confidence", "must lie in (0, 1)")
    b.finish()
    M = 1 << i
    gen = build_w_network(i, loss, conv)
    cert = certification_network(M, loss, conv)
    dists = {"qm": detector_distribution(run_network(gen, 0), cert)}
    if ist is not None:
        dists["ist"] = detector_distribution(run_network(gen, 0, ist), cert)
    labels = {v: k for k, v in w4_detector_labels(conv).items()} if M == 4 else {}
    counts = {}
    if cfg.runs:
        for stream, (name, p) in enumerate(dists.items()):
            counts[name] = _rng(cfg.seed, stream).multinomial(cfg.runs, p)
    rows = []
    for k in range(M + 1):
        row: dict[str, Any] = {"detector": k,
                               "label": "no-click" if k == M else labels.get(k, "")}
        for name, p in dists.items():
            row[f"p_{name}"] = p[k]
            if cfg.runs:
                freq = counts[name][k] / cfg.runs
                row.update({f"count_{name}": int(counts[name][k]), f"freq_{name}": freq,
                            f"stderr_{name}": float(binomial_stderr(freq, cfg.runs))})
        rows.append(row)
    cols = list(rows[0])
    meta = {"M": M, "detector_labels": "natural Walsh order; row r of the Walsh-Hadamard "
                                       "matrix fires detector r"}
    if labels:
        meta["w4_state_detectors"] = w4_detector_labels(conv)
    if ist is not None:
        meta.update(_ist_meta(ist))
        meta["distinguishability"] = distinguish(dists["qm"], dists["ist"], conf).to_dict()
    return ResultTable(cols, rows, meta)


def _parse_channel(raw, where: str):
    if isinstance(raw, dict):
        if set(raw) == {"ist"}:
            raw = raw["ist"]
        try:
            return IstParams.from_dict(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
    if isinstance(raw, str):
        _check(raw in ("identity", "full-dephase"), where, f"unknown channel {raw!r}")
        return raw
    if isinstance(raw, (int, float)) and not isinstance(raw, bool) and 0.0 <= raw <= 1.0:
        return float(raw)
    raise ConfigError(f"{where}: unknown channel descriptor {raw!r}")


def _channel_label(ch) -> str:
    if isinstance(ch, IstParams):
        return f"ist:{ch.label}:log2_N={ch.log2_N:g}"
    if isinstance(ch, float):
        return f"dephase({ch:g})"
    return ch


def _run_return_prob(cfg: ExperimentConfig) -> ResultTable:
    b = _Block("return-prob", cfg.params)
    loss, conv = _common_network_args(b)
    its = _iterations(b)
    ch = _parse_channel(b.get("channel", "identity"), "return-prob.channel")
    b.finish()
    rows = []
    for stream, i in enumerate(its):
        p = return_probability(build_w_network(i, loss, conv), 0, ch)
        row = {"I": i, "M": 1 << i, "channel": _channel_label(ch), "return_probability": p}
        if cfg.runs:
            n = int(_rng(cfg.seed, stream).binomial(cfg.runs, min(max(p, 0.0), 1.0)))
            freq = n / cfg.runs
            row.update(returned=n, returned_freq=freq, stderr=float(binomial_stderr(freq, cfg.runs)))
        rows.append(row)
    cols = list(rows[0]) if rows else ["I", "M", "channel", "return_probability"]
    meta = _ist_meta(ch) if isinstance(ch, IstParams) else {}
    return ResultTable(cols, rows, meta)


def _run_spdc(cfg: ExperimentConfig) -> ResultTable:
    b = _Block("spdc", cfg.params)
    sectors = b.int_list("sectors", [4, 8])
    models = b.get("phase_models", list(PHASE_MODELS))
    models = [models] if isinstance(models, str) else list(models)
    rounds_cfg = b.get("rounds", None, int)
    b.finish()
    for m in models:
        _check(m in PHASE_MODELS, "spdc.phase_models", f"unknown model {m!r}")
    for M in sectors:
        _check(M >= 2 and not M & (M - 1), "spdc.sectors", f"{M} is not a power of two >= 2")
    draws = max(cfg.runs, 1)
    rows, stream = [], 0
    for M in sectors:
        rounds = M.bit_length() - 1 if rounds_cfg is None else rounds_cfg
        _check(0 <= rounds <= M.bit_length() - 1, "spdc.rounds", f"{rounds} exceeds log2({M})")
        for model in models:
            rng = _rng(cfg.seed, stream)
            stream += 1
            scores = np.array([correlation_score(combine_apertures(make_double_w(M, None, model, rng),
                                                                   rounds)[1])
                               for _ in range(draws)])
            se = float(scores.std(ddof=1) / np.sqrt(draws)) if draws > 1 else math.nan
            rows.append({"M": M, "rounds": rounds, "phase_model": model, "draws": draws,
                         "correlation": float(scores.mean()), "stderr": se, "baseline": 1.0 / M})
    return ResultTable(["M", "rounds", "phase_model", "draws", "correlation", "stderr", "baseline"],
                       rows, {})


def _bmv_params(b: _Block) -> BmvParams:
    raw = b.get("params", {}) or {}
    try:
        return BmvParams.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{b.name}.params: {exc}") from None


def _run_bmv(cfg: ExperimentConfig) -> ResultTable:
    b = _Block("bmv", cfg.params)
    params = _bmv_params(b)
    t0 = b.get("tau_min_s", 0.0, float)
    t1 = b.get("tau_max_s", 10.0, float)
    n = b.get("tau_points", 101, int)
    b.finish()
    _check(0.0 <= t0 <= t1, "bmv.tau_max_s", "need 0 <= tau_min_s <= tau_max_s")
    _check(n >= 1, "bmv.tau_points", "must be >= 1")
    short = {"coherent-gravity": "coherent", "decoherent-no-collapse": "no_collapse",
             "decoherent-collapse": "collapse"}
    rows = []
    for stream, tau in enumerate(np.linspace(t0, t1, n)):
        p = params.with_tau(float(tau))
        row = {"tau": float(tau)}
        states = {h: evolve_bmv(p, h) for h in HYPOTHESES}
        for h in HYPOTHESES:
            row[f"witness_{short[h]}"] = entanglement_witness(states[h])
        if cfg.runs:
            rng = _rng(cfg.seed, stream)
            for h in HYPOTHESES:
                est, se = sample_witness(states[h], cfg.runs, rng=rng)
                row[f"sampled_{short[h]}"] = est
                row[f"stderr_{short[h]}"] = se
        rows.append(row)
    cols = ["tau", "witness_coherent", "witness_no_collapse", "witness_collapse"]
    if cfg.runs:
        cols += [f"{k}_{short[h]}" for h in HYPOTHESES for k in ("sampled", "stderr")]
    w = np.array([r["witness_coherent"] for r in rows])
    meta = {"bmv_params": params.to_dict(),
            "parameter_note": "illustrative values, not measured data",
            "max_witness_coherent": float(w.max()),
            "argmax_tau": float(rows[int(w.argmax())]["tau"])}
    return ResultTable(cols, rows, meta)


def _run_sweep(cfg: ExperimentConfig) -> ResultTable:
    b = _Block("sweep", cfg.params)
    kind = b.get("kind", "survival")
    if kind == "survival":
        p = b.get("loss_per_element", 0.001, float)
        lo = b.get("M_min", 2, int)
        hi = b.get("M_max", 1024, int)
        b.finish()
        _check(0.0 <= p < 1.0, "sweep.loss_per_element", "must lie in [0, 1)")
        for key, v in (("M_min", lo), ("M_max", hi)):
            _check(v >= 1 and not v & (v - 1), f"sweep.{key}", f"{v} is not a power of two")
        rows = []
        M = lo
        while M <= hi:
            rows.append({"M": M, "I": M.bit_length() - 1,
                         "survival": survival_probability(p, M, False),
                         "survival_certify": survival_probability(p, M, True)})
            M <<= 1
        return ResultTable(["M", "I", "survival", "survival_certify"], rows,
                           {"loss_per_element": p})
    if kind == "return-gamma":
        its = _iterations(b)
        log2_N = b.get("log2_N", required=True, kind=float)
        gammas = b.get("gammas", [0.0, 0.25, 0.5, 0.75, 1.0])
        b.finish()
        rows = []
        for i in its:
            net = build_w_network(i)
            for g in gammas:
                try:
                    ch = IstParams(log2_N, "partial", float(g))
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"sweep.gammas: {exc}") from None
                rows.append({"I": i, "M": 1 << i, "gamma": float(g),
                             "return_probability": return_probability(net, 0, ch)})
        return ResultTable(["I", "M", "gamma", "return_probability"], rows, {"ist_log2_N": log2_N})
    raise ConfigError(f"sweep.kind: unknown sweep {kind!r}; expected 'survival' or 'return-gamma'")


_DISPATCH = {
    "wstate": _run_wstate,
    "certify": _run_certify,
    "return-prob": _run_return_prob,
    "spdc": _run_spdc,
    "bmv": _run_bmv,
    "sweep": _run_sweep,
}


def run_experiment(config: ExperimentConfig) -> ResultTable:
    table = _DISPATCH[config.experiment](config)
    table.metadata = {"tool": "istbench", "version": __version__, "experiment": config.experiment,
                      "seed": config.seed, "config": config.to_dict(), **table.metadata}
    return table


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, f".{SIG_DIGITS}g")
    if v is None:
        return ""
    return str(v)


def _json_value(v):
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return _fmt(v)
        return float(format(v, f".{SIG_DIGITS}g"))
    return v


def render_table(table: ResultTable, fmt: str) -> str:
    if fmt == "json":
        doc = {"provenance": _json_value(table.metadata),
               "rows": [{c: _json_value(r.get(c)) for c in table.columns} for r in table.rows]}
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    for key, val in table.metadata.items():
        text = json.dumps(_json_value(val), sort_keys=True) if isinstance(val, (dict, list)) else _fmt(val)
        buf.write(f"# {key}: {text}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_fmt(r.get(c)) for c in table.columns])
    return buf.getvalue()


def emit_table(table: ResultTable, fmt: str, path: Optional[Union[str, Path]]) -> str:
    """Render ``table`` and write it to ``path`` (``None`` or ``"-"`` returns it only)."""
    text = render_table(table, fmt)
    if path is not None and str(path) != "-":
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
