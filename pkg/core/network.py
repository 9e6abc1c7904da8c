"""
Network Graph
Tree-structured transport network with one source, inner nodes and demand leaves
"""
import logging
from collections import deque
from typing import Dict, List, Optional, Sequence, Tuple

from core.errors import (
    CycleDetected,
    DisconnectedNode,
    MultipleIncoming,
    MultipleSources,
    NegativeDamping,
    NonPositiveVelocity,
    NoSuchPath,
    ValidationFailure,
)
from core.timefuncs import value_range_on
from models.network import Arc, Node, NodeKind

logger = logging.getLogger(__name__)


class Network:
    """
    Directed tree. Arc i ends at node v_i, so arc ids coincide with head node ids.
    Instances are read-only after validate().
    """

    def __init__(self, nodes: Sequence[Node], arcs: Sequence[Arc]):
        """
        Args:
            nodes: node list
            arcs: arc list
        """
        self.nodes: Dict[int, Node] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise ValidationFailure(f"duplicate node id {node.id}")
            self.nodes[node.id] = node
        self.arcs: Dict[int, Arc] = {}
        for arc in arcs:
            if arc.id in self.arcs:
                raise ValidationFailure(f"duplicate arc id {arc.id}")
            self.arcs[arc.id] = arc

        self._incoming: Dict[int, List[int]] = {v: [] for v in self.nodes}
        self._outgoing: Dict[int, List[int]] = {v: [] for v in self.nodes}
        for arc in self.arcs.values():
            for end in (arc.tail, arc.head):
                if end not in self.nodes:
                    raise DisconnectedNode(f"arc {arc.id} references unknown node v{end}")
            self._outgoing[arc.tail].append(arc.id)
            self._incoming[arc.head].append(arc.id)
        for v in self._outgoing:
            self._outgoing[v].sort()

        self.source: Optional[int] = None
        self._validated = False
        self._descendants: Dict[int, Tuple[int, ...]] = {}

    def validate(self, t0: float = 0.0, T: float = float("inf")) -> "Network":
        """
        Check the tree invariants and coefficient signs on [t0, T]

        Raises:
            MultipleSources, MultipleIncoming, CycleDetected, DisconnectedNode,
            NonPositiveVelocity, NegativeDamping, ValidationFailure

        Returns:
            self, for chaining
        """
        sources = [v for v, node in self.nodes.items() if node.kind == NodeKind.SOURCE]
        if len(sources) != 1:
            raise MultipleSources(f"expected exactly one source, found {len(sources)}")
        self.source = sources[0]

        for v, incoming in self._incoming.items():
            if len(incoming) > 1:
                raise MultipleIncoming(f"node v{v} has {len(incoming)} incoming arcs")
            if v == self.source and incoming:
                raise CycleDetected(f"source v{v} has an incoming arc")
            if v != self.source and not incoming:
                raise DisconnectedNode(f"node v{v} has no incoming arc")

        for arc in self.arcs.values():
            if arc.id != arc.head:
                raise ValidationFailure(f"arc {arc.id} must end at node v{arc.id}, not v{arc.head}")
            if arc.tail == arc.head:
                raise CycleDetected(f"arc {arc.id} is a self-loop")

        # every node must be reachable from the source exactly once
        seen = {self.source}
        queue = deque([self.source])
        while queue:
            v = queue.popleft()
            for arc_id in self._outgoing[v]:
                head = self.arcs[arc_id].head
                if head in seen:
                    raise CycleDetected(f"node v{head} reached twice")
                seen.add(head)
                queue.append(head)
        missing = set(self.nodes) - seen
        if missing:
            # one incoming arc per node but unreachable from the source means a cycle
            raise CycleDetected(f"nodes {sorted(missing)} lie on a cycle detached from the source")

        if len(self._outgoing[self.source]) != 1:
            raise ValidationFailure("the source must have exactly one outgoing arc")
        for v, node in self.nodes.items():
            if node.kind == NodeKind.DEMAND and self._outgoing[v]:
                raise ValidationFailure(f"demand node v{v} has outgoing arcs")
            if node.kind == NodeKind.INNER and not self._outgoing[v]:
                raise ValidationFailure(f"inner node v{v} has no outgoing arc")

        for arc in self.arcs.values():
            low, _ = value_range_on(arc.velocity, t0, T)
            if low <= 0.0:
                raise NonPositiveVelocity(f"arc {arc.id}: velocity not strictly positive (min {low:.6g})")
            low, _ = value_range_on(arc.damping, t0, T)
            if low < 0.0:
                raise NegativeDamping(f"arc {arc.id}: damping negative (min {low:.6g})")

        self._validated = True
        self._descendants.clear()
        logger.debug("network validated: %d nodes, %d arcs", len(self.nodes), len(self.arcs))
        return self

    # topology queries

    def arc(self, arc_id: int) -> Arc:
        return self.arcs[arc_id]

    def kind(self, v: int) -> NodeKind:
        return self.nodes[v].kind

    def demand_nodes(self) -> Tuple[int, ...]:
        return tuple(sorted(v for v, n in self.nodes.items() if n.kind == NodeKind.DEMAND))

    def inner_nodes(self) -> Tuple[int, ...]:
        return tuple(sorted(v for v, n in self.nodes.items() if n.kind == NodeKind.INNER))

    def source_arc(self) -> int:
        return self._outgoing[self.source][0]

    def predecessor_node(self, v: int) -> Optional[int]:
        """p̃(v): tail of the arc entering v; None for the source"""
        incoming = self._incoming[v]
        return self.arcs[incoming[0]].tail if incoming else None

    def preceding_arc(self, arc_id: int) -> Optional[int]:
        """q̃(i): arc entering the tail of arc i; None for the source arc"""
        incoming = self._incoming[self.arcs[arc_id].tail]
        return incoming[0] if incoming else None

    def outgoing_arcs(self, v: int) -> Tuple[int, ...]:
        """J^out_v"""
        return tuple(self._outgoing[v])

    def demand_descendants(self, v: int) -> Tuple[int, ...]:
        """c̃(v): demand nodes in the subtree rooted at v (v itself for a leaf)"""
        if v not in self._descendants:
            if self.nodes[v].kind == NodeKind.DEMAND:
                result = (v,)
            else:
                collected = []
                for arc_id in self._outgoing[v]:
                    collected.extend(self.demand_descendants(self.arcs[arc_id].head))
                result = tuple(sorted(collected))
            self._descendants[v] = result
        return self._descendants[v]

    def path_arcs(self, v_i: int, v_j: int) -> Tuple[int, ...]:
        """
        η(v_i, v_j): ordered arcs from v_i down to v_j

        Raises:
            NoSuchPath: v_j is not in the subtree of v_i
        """
        path = []
        v = v_j
        while v != v_i:
            incoming = self._incoming.get(v)
            if not incoming:
                raise NoSuchPath(f"v{v_j} is not below v{v_i}")
            path.append(incoming[0])
            v = self.arcs[incoming[0]].tail
        return tuple(reversed(path))

    def bfs_arcs(self) -> Tuple[int, ...]:
        """Arcs in breadth-first order from the source"""
        order = []
        queue = deque([self.source])
        while queue:
            v = queue.popleft()
            for arc_id in self._outgoing[v]:
                order.append(arc_id)
                queue.append(self.arcs[arc_id].head)
        return tuple(order)
