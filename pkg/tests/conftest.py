"""
공통 테스트 픽스처
네트워크와 시나리오 빌더
"""
import math
from typing import Dict, Optional

import numpy as np
import pytest

from core.network import Network
from core.scenario import parse_scenario
from core.timefuncs import TransitMap
from models.coefficients import ConstantFn, SinusoidFn
from models.demand import SamplePath
from models.network import Arc, Node, NodeKind

TWO_PI = 2.0 * math.pi


def one_one_network(velocity=14.0, damping=0.0) -> Network:
    """v0 -> v1 -> v2 chain"""
    nodes = [Node(id=0, kind=NodeKind.SOURCE), Node(id=1, kind=NodeKind.INNER), Node(id=2, kind=NodeKind.DEMAND)]
    arcs = [
        Arc(id=1, tail=0, head=1, velocity=ConstantFn(value=velocity), damping=ConstantFn(value=damping)),
        Arc(id=2, tail=1, head=2, velocity=ConstantFn(value=velocity), damping=ConstantFn(value=damping)),
    ]
    return Network(nodes, arcs).validate(0.0, 2.5)


def one_two_network(velocities=None, dampings=None, T: float = 2.5) -> Network:
    """v0 -> v1 -> {v2, v3}"""
    velocities = velocities or [ConstantFn(value=14.0)] * 3
    dampings = dampings or [ConstantFn(value=0.0)] * 3
    nodes = [
        Node(id=0, kind=NodeKind.SOURCE),
        Node(id=1, kind=NodeKind.INNER),
        Node(id=2, kind=NodeKind.DEMAND),
        Node(id=3, kind=NodeKind.DEMAND),
    ]
    arcs = [
        Arc(id=1, tail=0, head=1, velocity=velocities[0], damping=dampings[0]),
        Arc(id=2, tail=1, head=2, velocity=velocities[1], damping=dampings[1]),
        Arc(id=3, tail=1, head=3, velocity=velocities[2], damping=dampings[2]),
    ]
    return Network(nodes, arcs).validate(0.0, T)


def periodic_velocities():
    return [
        SinusoidFn(offset=14.0, amplitude=1.0, omega=TWO_PI),
        SinusoidFn(offset=12.0, amplitude=1.0, omega=TWO_PI),
        SinusoidFn(offset=12.0, amplitude=1.0, omega=2.0 * TWO_PI),
    ]


def periodic_dampings():
    return [
        SinusoidFn(offset=0.4, amplitude=0.2, omega=math.pi),
        SinusoidFn(offset=0.5, amplitude=0.2, omega=math.pi),
        SinusoidFn(offset=0.5, amplitude=0.3, omega=math.pi),
    ]


def constant_paths(values: Dict[int, object], t0: float = 0.0, T: float = 2.5) -> Dict[int, SamplePath]:
    """
    Demand paths frozen at the given values (scalar or per-run arrays)
    """
    paths = {}
    for node, value in values.items():
        arr = np.asarray(value, dtype=float)
        paths[node] = SamplePath(t0=t0, dt=T - t0, values=np.stack([arr, arr], axis=-1))
    return paths


def scenario_doc(
    sigma=(0.0, 0.0),
    kappa=(0.0, 0.0),
    T: float = 1.0,
    runs: int = 4,
    dx: float = 0.05,
    dt_sde: float = 1e-3,
    velocity: Optional[dict] = None,
    damping2: Optional[dict] = None,
    theta=None,
    updates: int = 3,
    chunk_size: int = 2,
) -> dict:
    """
    Small, fast 1-2 scenario document
    """
    velocity = velocity or {"kind": "const", "value": 14.0}
    damping2 = damping2 or {"kind": "const", "value": 0.4}
    theta = theta or (
        {"kind": "const", "value": 0.4},
        {"kind": "const", "value": 0.6},
    )
    arcs = []
    for arc_id, tail in ((1, 0), (2, 1), (3, 1)):
        arcs.append(
            {
                "id": arc_id,
                "tail": tail,
                "head": arc_id,
                "velocity": velocity,
                "damping": {"mu1": {"kind": "const", "value": 0.0}, "mu2": damping2},
            }
        )
    return {
        "name": "small",
        "horizon": {"t0": 0.0, "T": T},
        "nodes": [
            {"id": 0, "kind": "source"},
            {"id": 1, "kind": "inner"},
            {"id": 2, "kind": "demand"},
            {"id": 3, "kind": "demand"},
        ],
        "arcs": arcs,
        "demands": [
            {"node": 2, "kappa": kappa[0], "sigma": sigma[0], "d0": 0.4, "theta": theta[0], "ou_sigma": 0.8},
            {"node": 3, "kappa": kappa[1], "sigma": sigma[1], "d0": 0.6, "theta": theta[1], "ou_sigma": 0.8},
        ],
        "damping_profiles": ["mu1", "mu2"],
        "control": {"settings": ["MS1", "MS2", "MS3"], "updates": updates},
        "numerics": {"dt_sde": dt_sde, "dx": dx},
        "monte_carlo": {"runs": runs, "seed": 7, "chunk_size": chunk_size},
    }


@pytest.fixture
def net11():
    return one_one_network()


@pytest.fixture
def net12():
    return one_two_network()


@pytest.fixture
def net12_periodic():
    return one_two_network(periodic_velocities(), periodic_dampings())


@pytest.fixture
def transit12(net12):
    return TransitMap(net12, 0.0, 2.5)


@pytest.fixture
def transit12_periodic(net12_periodic):
    return TransitMap(net12_periodic, 0.0, 2.5)


@pytest.fixture
def deterministic_scenario():
    return parse_scenario(scenario_doc())


@pytest.fixture
def stochastic_scenario():
    return parse_scenario(scenario_doc(sigma=(1.0, 0.8), kappa=(2.0, 1.0)))
