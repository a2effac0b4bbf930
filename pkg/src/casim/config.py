"""YAML run configuration and named presets.

A document is a mapping; every section is optional and unknown keys are
errors. ``preset`` picks the base that the remaining keys override::

    preset: paper-6cc            # or paper-6cc-shrunk
    horizon_ms: 180000
    seed: 0
    scheduler: QSCS              # JUS | SRUS | SBLS_CD | SBLS_LL | QSCS
    subcarrier_spacing_khz: 15
    carriers:                    # replaces the preset's carriers, ids follow list order
      - {freq_mhz: 900, bandwidth_mhz: 1.4, class: Shared}   # class: Shared | LteAOnly
    link_budget: {tx_power_per_prb_dbm: 29, noise_figure_db: 9, pathloss_exponent: 3.5,
                  snr_min_db: 0, spectral_efficiency_cap_bps_per_hz: 6, shadowing_sigma_db: 0}
    traffic: {n_users: 10, cell_radius_m: 1000, requests_per_user_mean: 25, ...}
    qos:
      table: [{qci: 1, resource_type: GBR, priority: 2, pdb_ms: 100}, ...]   # all nine rows
      gbr_metric_qcis: [2, 3, 4, 5]
    qscs: {migration_hysteresis_db: 0, reservation_qcis: [1, 2, 3, 4, 5, 6]}
    metrics: {best_cc_rule: snr_tie, beta_qos_bit_weighted: false}
"""

from __future__ import annotations

from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .engine import PAPER_6CC, ConfigError, SimConfig
from .qos import QciTable
from .radio import CcClass, ComponentCarrier, LinkBudget
from .traffic import TrafficConfig

SHRUNK_HORIZON_MS = 10_000


def _paper_6cc() -> SimConfig:
    return SimConfig(ccs=PAPER_6CC)


def _paper_6cc_shrunk() -> SimConfig:
    # a 10 s slice that keeps the full run's per-second offered load
    base = _paper_6cc()
    mean = base.traffic.requests_per_user_mean * SHRUNK_HORIZON_MS / base.horizon_ms
    return replace(
        base,
        horizon_ms=SHRUNK_HORIZON_MS,
        traffic=replace(base.traffic, requests_per_user_mean=mean),
    )


PRESETS = {"paper-6cc": _paper_6cc, "paper-6cc-shrunk": _paper_6cc_shrunk}

TOP_KEYS = {
    "preset",
    "horizon_ms",
    "frame_ms",
    "seed",
    "scheduler",
    "subcarrier_spacing_khz",
    "carriers",
    "link_budget",
    "traffic",
    "qos",
    "qscs",
    "metrics",
}


def preset(name: str) -> SimConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _mapping(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ConfigError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _check_keys(m: Mapping[str, Any], allowed, path: str) -> None:
    unknown = sorted(set(m) - set(allowed))
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(where + str(unknown[0]), f"unknown key (allowed: {sorted(allowed)})")


def _dataclass_section(cls, base, m: Mapping[str, Any], path: str):
    names = [f.name for f in fields(cls)]
    _check_keys(m, names, path)
    changes = dict(m)
    if "qci_weights" in changes:
        changes["qci_weights"] = tuple(float(w) for w in changes["qci_weights"])
    try:
        return replace(base, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def _carriers(items: Any) -> tuple[ComponentCarrier, ...]:
    if not isinstance(items, list) or not items:
        raise ConfigError("carriers", "expected a non-empty list")
    out = []
    for i, item in enumerate(items):
        path = f"carriers[{i}]"
        m = _mapping(item, path)
        _check_keys(m, {"freq_mhz", "bandwidth_mhz", "class"}, path)
        for key in ("freq_mhz", "bandwidth_mhz"):
            if key not in m:
                raise ConfigError(f"{path}.{key}", "required")
        try:
            cc_class = CcClass(m.get("class", CcClass.SHARED.value))
        except ValueError:
            raise ConfigError(f"{path}.class", f"expected one of {[c.value for c in CcClass]}") from None
        try:
            out.append(ComponentCarrier(i, float(m["freq_mhz"]), float(m["bandwidth_mhz"]), cc_class))
        except ValueError as exc:
            key = "bandwidth_mhz" if "bandwidth" in str(exc) else "freq_mhz"
            raise ConfigError(f"{path}.{key}", str(exc)) from None
    return tuple(out)


def config_from_mapping(doc: Mapping[str, Any] | None) -> SimConfig:
    doc = {} if doc is None else _mapping(doc, "<root>")
    _check_keys(doc, TOP_KEYS, "")
    cfg = preset(doc.get("preset", "paper-6cc"))
    top: dict[str, Any] = {}
    for key in ("horizon_ms", "frame_ms", "seed", "scheduler", "subcarrier_spacing_khz"):
        if key in doc:
            top[key] = doc[key]
    if "carriers" in doc:
        top["ccs"] = _carriers(doc["carriers"])
    if "link_budget" in doc:
        top["link_budget"] = _dataclass_section(LinkBudget, cfg.link_budget, _mapping(doc["link_budget"], "link_budget"), "link_budget")
    if "traffic" in doc:
        top["traffic"] = _dataclass_section(TrafficConfig, cfg.traffic, _mapping(doc["traffic"], "traffic"), "traffic")
    if "qos" in doc:
        q = _mapping(doc["qos"], "qos")
        _check_keys(q, {"table", "gbr_metric_qcis"}, "qos")
        if "table" in q:
            try:
                top["qci_table"] = QciTable.from_rows(q["table"])
            except (TypeError, ValueError, KeyError) as exc:
                raise ConfigError("qos.table", str(exc)) from None
        if "gbr_metric_qcis" in q:
            top["gbr_metric_qcis"] = frozenset(int(v) for v in q["gbr_metric_qcis"])
    if "qscs" in doc:
        q = _mapping(doc["qscs"], "qscs")
        _check_keys(q, {"migration_hysteresis_db", "reservation_qcis"}, "qscs")
        if "migration_hysteresis_db" in q:
            top["migration_hysteresis_db"] = float(q["migration_hysteresis_db"])
        if "reservation_qcis" in q:
            top["reservation_qcis"] = frozenset(int(v) for v in q["reservation_qcis"])
    if "metrics" in doc:
        m = _mapping(doc["metrics"], "metrics")
        _check_keys(m, {"best_cc_rule", "beta_qos_bit_weighted"}, "metrics")
        if "best_cc_rule" in m:
            top["best_cc_rule"] = m["best_cc_rule"]
        if "beta_qos_bit_weighted" in m:
            top["beta_qos_bit_weighted"] = bool(m["beta_qos_bit_weighted"])
    try:
        return replace(cfg, **top)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("<root>", str(exc)) from None


def parse_config(path: str | Path) -> SimConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(str(p), "configuration file not found")
    try:
        doc = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(str(p), f"malformed YAML: {exc}") from None
    return config_from_mapping(doc)
