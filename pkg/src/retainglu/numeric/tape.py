"""Define-by-run gradient tape.

A tape is opened as a context manager around one forward pass. While it is
active, every primitive operation whose inputs require gradients appends a
node to it. Replaying the nodes in reverse recording order is a reverse
topological order, because an operation can only consume values that were
produced before it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import (
    TYPE_CHECKING,
    Callable,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
    Type,
)
from types import TracebackType

import numpy as np

from ..errors import RetainContractError, assert_eq

if TYPE_CHECKING:  # pragma: no cover
    from .tensor import Tensor

LOG = logging.getLogger(__name__)

VectorJacobian = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_ACTIVE: List[GradientTape] = []


@dataclass
class Node:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    vjp: VectorJacobian


class GradientTape:
    """Single-owner record of the operations of one forward pass."""

    def __init__(self) -> None:
        self.nodes: List[Node] = []

    def __enter__(self) -> GradientTape:
        _ACTIVE.append(self)
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc: Optional[BaseException],
        traceback: Optional[TracebackType],
    ) -> None:
        popped = _ACTIVE.pop()
        assert popped is self, "gradient tapes must be closed in order"

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, node: Node) -> None:
        self.nodes.append(node)

    def backward(self, output: Tensor) -> Dict[int, np.ndarray]:
        """Propagate d(output)/d(output) = 1 back through the tape.

        Returns accumulated gradients keyed by ``id`` of every leaf tensor
        reached. Intermediate gradients are released as soon as their node
        has been visited.
        """
        assert_eq("output size", 1, output.data.size, "backward", RetainContractError)

        grads: Dict[int, np.ndarray] = {id(output): np.ones_like(output.data)}
        produced = {id(node.output) for node in self.nodes}
        LOG.debug("Replaying %d nodes", len(self.nodes))

        for node in reversed(self.nodes):
            grad = grads.pop(id(node.output), None)
            if grad is None:
                continue
            for tensor, partial in zip(node.inputs, node.vjp(grad)):
                if partial is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + partial
                else:
                    grads[key] = partial

        return {key: grad for key, grad in grads.items() if key not in produced}

    def gradient(self, output: Tensor, sources: Sequence[Tensor]) -> List[np.ndarray]:
        """Return d(output)/d(source) for every source leaf, in order.

        Sources the output does not depend on receive zero gradients.
        """
        grads = self.backward(output)
        return [
            grads.get(id(source), np.zeros_like(source.data)) for source in sources
        ]


def active_tape() -> Optional[GradientTape]:
    if not _ACTIVE:
        return None
    return _ACTIVE[-1]


def backward(tape: GradientTape, output: Tensor) -> Dict[int, np.ndarray]:
    return tape.backward(output)
