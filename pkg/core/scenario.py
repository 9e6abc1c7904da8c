"""
Scenario Loading
Parse scenario documents (JSON or YAML), merge bundled defaults, validate
and build the network for a damping profile
"""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import ValidationError

from core.errors import ParseError, SchemaError
from core.network import Network
from models.coefficients import ConstantFn
from models.network import Arc, Node, NodeKind
from models.scenario import Scenario

logger = logging.getLogger(__name__)

DEFAULTS_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "resources", "defaults.yaml")


def load_defaults(path: str = DEFAULTS_PATH) -> Dict[str, Any]:
    """
    Bundled numeric defaults (time step, cell width, run count, horizon)
    """
    if not os.path.exists(path):
        return {}
    with open(path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def _merge(defaults: Dict[str, Any], doc: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(defaults)
    for key, value in doc.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _field_path(doc: Dict[str, Any], loc) -> str:
    """
    Render a pydantic error location, naming list entries by their id
    ("arcs[id=2].velocity" rather than "arcs.1.velocity")
    """
    parts = []
    node: Any = doc
    for item in loc:
        if isinstance(item, int) and isinstance(node, list):
            entry = node[item] if item < len(node) else None
            ident = None
            if isinstance(entry, dict):
                ident = entry.get("id", entry.get("node"))
            parts[-1] = f"{parts[-1]}[id={ident}]" if ident is not None else f"{parts[-1]}[{item}]"
            node = entry
        else:
            parts.append(str(item))
            node = node.get(item) if isinstance(node, dict) else None
    return ".".join(parts)


def parse_scenario(doc: Dict[str, Any], defaults: Optional[Dict[str, Any]] = None) -> Scenario:
    """
    Validate a scenario document

    Raises:
        SchemaError: with the dotted path of the first offending field
    """
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "scenario must be a mapping")
    merged = _merge(defaults if defaults is not None else load_defaults(), doc)
    try:
        scenario = Scenario.model_validate(merged)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise SchemaError(_field_path(merged, first["loc"]), first["msg"]) from exc
    _check_references(scenario)
    return scenario


def _check_references(scenario: Scenario):
    node_ids = {n.id for n in scenario.nodes}
    demand_nodes = {n.id for n in scenario.nodes if n.kind == NodeKind.DEMAND}
    for arc in scenario.arcs:
        for end in ("tail", "head"):
            if getattr(arc, end) not in node_ids:
                raise SchemaError(f"arcs[id={arc.id}].{end}", f"unknown node v{getattr(arc, end)}")
        if arc.damping:
            for profile in scenario.damping_profiles:
                if profile not in arc.damping:
                    raise SchemaError(f"arcs[id={arc.id}].damping.{profile}", "missing damping profile")
    given = set()
    for spec in scenario.demands:
        if spec.node not in demand_nodes:
            raise SchemaError(f"demands[id={spec.node}].node", f"v{spec.node} is not a demand node")
        if scenario.demand_model == "ou" and spec.kappa <= 0.0:
            raise SchemaError(f"demands[id={spec.node}].kappa", "OU demand needs kappa > 0")
        given.add(spec.node)
    for node in sorted(demand_nodes - given):
        raise SchemaError(f"demands[id={node}]", "demand node without demand parameters")


def load_scenario(path: str, defaults: Optional[Dict[str, Any]] = None) -> Scenario:
    """
    Read and validate a scenario file

    Args:
        path: .json, .yaml or .yml file
        defaults: overrides the bundled defaults (mainly for tests)

    Returns:
        validated Scenario

    Raises:
        ParseError: unreadable or malformed document
        SchemaError: schema violation
    """
    file = Path(path)
    try:
        text = file.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        if file.suffix.lower() in (".yaml", ".yml"):
            doc = yaml.safe_load(text)
        else:
            doc = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    scenario = parse_scenario(doc, defaults)
    if scenario.name == "scenario":
        scenario = scenario.model_copy(update={"name": file.stem})
    logger.info("scenario %s loaded: %d arcs, %d demand nodes", scenario.name, len(scenario.arcs), len(scenario.demands))
    return scenario


def build_network(scenario: Scenario, profile: Optional[str] = None) -> Network:
    """
    Validated network with the damping of one named profile
    (zero damping for arcs that define none)
    """
    profile = profile or scenario.damping_profiles[0]
    nodes = [Node(id=n.id, kind=n.kind) for n in scenario.nodes]
    arcs = [
        Arc(
            id=a.id,
            tail=a.tail,
            head=a.head,
            length=a.length,
            velocity=a.velocity,
            damping=a.damping.get(profile, ConstantFn(value=0.0)),
        )
        for a in scenario.arcs
    ]
    return Network(nodes, arcs).validate(scenario.horizon.t0, scenario.horizon.T)
