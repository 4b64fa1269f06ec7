"""JSON documents for scenarios, generator configs and solve results."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .model import Assignment, Link, LinkKind, Scenario, SolveResult
from .scenario import db_to_linear


def scenario_to_dict(scenario: Scenario) -> dict:
    links = []
    for link in scenario.links:
        entry = {
            "id": link.id,
            "kind": link.kind.value,
            "weight": link.weight,
            "sinr_min": link.sinr_min,
            "power_cellular_w": link.power_cellular_w,
        }
        if link.kind is LinkKind.D2D:
            entry.update(tx_device=link.tx_device, rx_device=link.rx_device, power_d2d_w=link.power_d2d_w)
        else:
            entry["device"] = link.device
        links.append(entry)
    doc = {
        "counts": {"n_uc": scenario.n_uc, "n_dc": scenario.n_dc, "n_d": scenario.n_d,
                   "m_u": scenario.m_u, "m_d": scenario.m_d},
        "noise_w": scenario.noise_w,
        "bs_total_power_w": scenario.bs_total_power_w,
        "links": links,
        "gains": scenario.gains.tolist(),
    }
    if scenario.positions is not None:
        doc["positions"] = scenario.positions.tolist()
    return doc


def scenario_from_dict(doc: dict) -> Scenario:
    """Inverse of :func:`scenario_to_dict`; a link may give ``sinr_min_db`` instead of ``sinr_min``."""
    links = []
    for entry in doc["links"]:
        entry = dict(entry)
        if "sinr_min_db" in entry:
            entry["sinr_min"] = db_to_linear(entry.pop("sinr_min_db"))
        links.append(Link(**entry))
    counts = doc["counts"]
    scenario = Scenario(
        tuple(links), counts["m_u"], counts["m_d"], np.asarray(doc["gains"], dtype=float),
        float(doc["noise_w"]), float(doc["bs_total_power_w"]), doc.get("positions"),
    )
    if (scenario.n_uc, scenario.n_dc, scenario.n_d) != (counts["n_uc"], counts["n_dc"], counts["n_d"]):
        raise ValueError("link list does not match the declared counts")
    return scenario


def result_to_dict(result: SolveResult) -> dict:
    a = result.assignment
    stats = result.stats
    return {
        "algo": result.algo,
        "feasible": result.feasible,
        "objective": result.objective,
        "rho": [list(p) for p in sorted(a.rho)] if a is not None else None,
        "x": sorted(a.cell_mode) if a is not None else None,
        "per_link_rate": {str(j): r for j, r in sorted(result.per_link_rate.items())},
        "stats": {
            "states_visited": stats.states_visited,
            "decisions_enumerated": stats.decisions_enumerated,
            "wall_time": stats.wall_time,
            "bound_ok": stats.bound_ok,
            **stats.extra,
        },
    }


def assignment_from_dict(doc: dict) -> Assignment:
    return Assignment(frozenset(tuple(p) for p in doc["rho"]), frozenset(doc.get("x", ())))


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the same directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_json(path, doc) -> None:
    write_atomic(path, dumps(doc))


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def save_scenario(path, scenario: Scenario) -> None:
    save_json(path, scenario_to_dict(scenario))


def load_scenario(path) -> Scenario:
    return scenario_from_dict(load_json(path))
