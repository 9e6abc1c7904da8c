"""
Network Models
Nodes and arcs of a tree-structured transport network
"""
from enum import Enum
from pydantic import BaseModel, Field
from models.coefficients import CoefFn, ConstantFn


class NodeKind(Enum):
    """
    Role of a node in the tree
    """
    SOURCE = "source"
    INNER = "inner"
    DEMAND = "demand"


class Node(BaseModel):
    """
    Network node v_i
    """
    id: int = Field(ge=0)
    kind: NodeKind


class Arc(BaseModel):
    """
    Network arc. The arc id equals its head node id (arc i ends at v_i).
    """
    id: int = Field(ge=1)
    tail: int = Field(ge=0)
    head: int = Field(ge=0)
    length: float = Field(default=1.0, gt=0.0)
    velocity: CoefFn
    damping: CoefFn = Field(default_factory=lambda: ConstantFn(value=0.0))
