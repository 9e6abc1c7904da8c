"""
Network Graph 테스트
트리 불변식 검증과 위상 질의 동작을 Validate
"""
import pytest

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
from core.network import Network
from models.coefficients import ConstantFn, PiecewiseConstantFn, SinusoidFn
from models.network import Arc, Node, NodeKind
from tests.conftest import one_two_network


def _arc(arc_id, tail, head, velocity=None, damping=None):
    return Arc(
        id=arc_id,
        tail=tail,
        head=head,
        velocity=velocity or ConstantFn(value=14.0),
        damping=damping or ConstantFn(value=0.0),
    )


@pytest.fixture
def deep_tree():
    """
    v0 -> v1 -> {v2, v3}, v2 -> {v4, v5}, v3 -> v6
    """
    nodes = [
        Node(id=0, kind=NodeKind.SOURCE),
        Node(id=1, kind=NodeKind.INNER),
        Node(id=2, kind=NodeKind.INNER),
        Node(id=3, kind=NodeKind.INNER),
        Node(id=4, kind=NodeKind.DEMAND),
        Node(id=5, kind=NodeKind.DEMAND),
        Node(id=6, kind=NodeKind.DEMAND),
    ]
    arcs = [_arc(1, 0, 1), _arc(2, 1, 2), _arc(3, 1, 3), _arc(4, 2, 4), _arc(5, 2, 5), _arc(6, 3, 6)]
    return Network(nodes, arcs).validate(0.0, 2.5)


class TestValidation:
    """네트워크 검증 테스트"""

    def test_valid_network(self, net12):
        """정상 1-2 네트워크"""
        assert net12.source == 0

    def test_multiple_sources(self):
        """공급원이 두 개"""
        nodes = [Node(id=0, kind=NodeKind.SOURCE), Node(id=1, kind=NodeKind.SOURCE), Node(id=2, kind=NodeKind.DEMAND)]
        with pytest.raises(MultipleSources):
            Network(nodes, [_arc(2, 0, 2)]).validate()

    def test_multiple_incoming(self):
        """한 노드에 두 개의 유입 아크"""
        nodes = [
            Node(id=0, kind=NodeKind.SOURCE),
            Node(id=1, kind=NodeKind.INNER),
            Node(id=2, kind=NodeKind.DEMAND),
            Node(id=3, kind=NodeKind.DEMAND),
        ]
        arcs = [_arc(1, 0, 1), _arc(2, 1, 2), _arc(3, 1, 3), _arc(4, 2, 3)]
        with pytest.raises(MultipleIncoming):
            Network(nodes, arcs).validate()

    def test_cycle(self):
        """공급원과 분리된 순환"""
        nodes = [
            Node(id=0, kind=NodeKind.SOURCE),
            Node(id=1, kind=NodeKind.DEMAND),
            Node(id=2, kind=NodeKind.INNER),
            Node(id=3, kind=NodeKind.INNER),
        ]
        arcs = [_arc(1, 0, 1), _arc(2, 3, 2), _arc(3, 2, 3)]
        with pytest.raises(CycleDetected):
            Network(nodes, arcs).validate()

    def test_disconnected_node(self):
        """유입 아크가 없는 노드"""
        nodes = [
            Node(id=0, kind=NodeKind.SOURCE),
            Node(id=1, kind=NodeKind.DEMAND),
            Node(id=2, kind=NodeKind.DEMAND),
        ]
        with pytest.raises(DisconnectedNode):
            Network(nodes, [_arc(1, 0, 1)]).validate()

    def test_unknown_node_reference(self):
        """존재하지 않는 노드를 가리키는 아크"""
        nodes = [Node(id=0, kind=NodeKind.SOURCE), Node(id=1, kind=NodeKind.DEMAND)]
        with pytest.raises(DisconnectedNode):
            Network(nodes, [_arc(1, 0, 1), _arc(7, 1, 7)])

    def test_arc_id_must_match_head(self):
        """아크 번호는 도착 노드 번호와 같아야 함"""
        nodes = [Node(id=0, kind=NodeKind.SOURCE), Node(id=1, kind=NodeKind.DEMAND)]
        with pytest.raises(ValidationFailure):
            Network(nodes, [_arc(5, 0, 1)]).validate()

    def test_demand_node_with_outgoing_arc(self):
        """수요 노드는 잎이어야 함"""
        nodes = [Node(id=0, kind=NodeKind.SOURCE), Node(id=1, kind=NodeKind.DEMAND), Node(id=2, kind=NodeKind.DEMAND)]
        with pytest.raises(ValidationFailure):
            Network(nodes, [_arc(1, 0, 1), _arc(2, 1, 2)]).validate()

    def test_non_positive_sinusoid_velocity(self):
        """0 아래로 내려가는 사인 속도"""
        velocities = [ConstantFn(value=14.0), SinusoidFn(offset=0.5, amplitude=1.0, omega=1.0), ConstantFn(value=12.0)]
        with pytest.raises(NonPositiveVelocity):
            one_two_network(velocities)

    def test_non_positive_step_velocity(self):
        """지평선 안에서 0이 되는 구간 상수 속도"""
        velocities = [ConstantFn(value=14.0), PiecewiseConstantFn(breakpoints=[1.0], values=[12.0, 0.0]), ConstantFn(value=12.0)]
        with pytest.raises(NonPositiveVelocity):
            one_two_network(velocities)

    def test_step_velocity_after_horizon(self):
        """지평선 이후의 0 속도는 허용"""
        velocities = [ConstantFn(value=14.0), PiecewiseConstantFn(breakpoints=[3.0], values=[12.0, 0.0]), ConstantFn(value=12.0)]
        assert one_two_network(velocities, T=2.5).source == 0

    def test_negative_damping(self):
        """음수 감쇠"""
        dampings = [ConstantFn(value=0.0), SinusoidFn(offset=0.1, amplitude=0.3, omega=1.0), ConstantFn(value=0.0)]
        with pytest.raises(NegativeDamping):
            one_two_network(dampings=dampings)


class TestTopology:
    """위상 질의 테스트"""

    def test_demand_descendants(self, net12):
        """c̃(v) 테스트"""
        assert net12.demand_descendants(1) == (2, 3)
        assert net12.demand_descendants(0) == (2, 3)
        assert net12.demand_descendants(2) == (2,)

    def test_paths(self, net12):
        """η(v_i, v_j) 테스트"""
        assert net12.path_arcs(1, 3) == (3,)
        assert net12.path_arcs(0, 3) == (1, 3)
        assert net12.path_arcs(2, 2) == ()

    def test_no_path(self, net12):
        """형제 노드 사이에는 경로 없음"""
        with pytest.raises(NoSuchPath):
            net12.path_arcs(2, 3)

    def test_predecessors(self, net12):
        """p̃(v), q̃(i) 테스트"""
        assert net12.predecessor_node(2) == 1
        assert net12.predecessor_node(0) is None
        assert net12.preceding_arc(3) == 1
        assert net12.preceding_arc(1) is None

    def test_outgoing_and_kinds(self, net12):
        """유출 아크와 노드 종류"""
        assert net12.outgoing_arcs(1) == (2, 3)
        assert net12.source_arc() == 1
        assert net12.demand_nodes() == (2, 3)
        assert net12.inner_nodes() == (1,)
        assert net12.kind(0) == NodeKind.SOURCE

    def test_descendants_disjoint_union(self, deep_tree):
        """c̃(v)는 자식들의 c̃의 서로소 합집합"""
        for v in deep_tree.inner_nodes():
            children = [deep_tree.arc(k).head for k in deep_tree.outgoing_arcs(v)]
            union = [leaf for child in children for leaf in deep_tree.demand_descendants(child)]
            assert len(union) == len(set(union))
            assert tuple(sorted(union)) == deep_tree.demand_descendants(v)

    def test_path_suffix(self, deep_tree):
        """η(v_j, v_r)는 η(v_i, v_r)의 접미사"""
        whole = deep_tree.path_arcs(0, 5)
        assert whole == (1, 2, 5)
        assert whole[-len(deep_tree.path_arcs(2, 5)):] == deep_tree.path_arcs(2, 5)

    def test_bfs_order(self, deep_tree):
        """너비 우선 아크 순서"""
        assert deep_tree.bfs_arcs() == (1, 2, 3, 4, 5, 6)
