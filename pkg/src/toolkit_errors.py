from __future__ import annotations

from typing import Any, Optional

# All toolkit failures are ValueErrors, the same way definition checks in the
# pipeline loader raise ValueError. Reports surface the class name.


class ToolkitError(ValueError):
    """Base class for every error the toolkit raises on purpose."""

    @property
    def name(self) -> str:
        return type(self).__name__


class ParseError(ToolkitError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownSymbol(ToolkitError):
    def __init__(self, symbol: str, column: Optional[int] = None):
        where = f" at column {column}" if column is not None else ""
        super().__init__(f"Unknown symbol {symbol!r}{where}")
        self.symbol = symbol
        self.column = column


class GroupMismatch(ToolkitError):
    pass


class NotFreeGroup(ToolkitError):
    pass


class UnsupportedVertexGroup(ToolkitError):
    pass


class InjectionNotMono(ToolkitError):
    def __init__(self, edge: str, end: str, reason: str):
        super().__init__(f"Injection of edge {edge!r} at end {end!r} is not a monomorphism: {reason}")
        self.edge = edge
        self.end = end


class ContainerViolation(ToolkitError):
    def __init__(self, edge: str, end: str, reason: str):
        super().__init__(f"Edge {edge!r} at end {end!r} violates its declared container: {reason}")
        self.edge = edge
        self.end = end


class DisconnectedGraph(ToolkitError):
    pass


class IllegalPath(ToolkitError):
    pass


class UnknownVertex(ToolkitError):
    def __init__(self, vertex: str):
        super().__init__(f"Unknown vertex {vertex!r}")
        self.vertex = vertex


class WindowTooSmall(ToolkitError):
    pass


class NotInWindow(ToolkitError):
    pass


class SelectionOutsideWindow(ToolkitError):
    pass


class PeripheralNotMalnormal(ToolkitError):
    def __init__(self, vertex: str, witness: Any, first: str, second: str):
        super().__init__(
            f"Peripheral family of vertex {vertex!r} is not almost malnormal: "
            f"{first!r} meets a conjugate of {second!r} by {witness} in an infinite subgroup")
        self.vertex = vertex
        self.witness = witness


class DisconnectedSelection(ToolkitError):
    pass


class EmptySubgraph(ToolkitError):
    pass


class HypothesisFailure(ToolkitError):
    def __init__(self, edge: str, reason: str):
        super().__init__(f"Hypothesis fails at edge {edge!r}: {reason}")
        self.edge = edge


class MaximalityFailure(ToolkitError):
    def __init__(self, edge: str, end: str, reason: str = "edge image is a proper subgroup of its container"):
        super().__init__(f"Edge {edge!r} is not maximal parabolic at end {end!r}: {reason}")
        self.edge = edge
        self.end = end


class IsolationFailure(ToolkitError):
    def __init__(self, edges: tuple, witness: Any):
        super().__init__(f"Edge ends {edges} are not isolated: conjugator {witness} carries one into the other")
        self.edges = edges
        self.witness = witness


class NotAnExtension(ToolkitError):
    def __init__(self, peripheral: str):
        super().__init__(f"Peripheral {peripheral!r} is not contained in any member of the extension")
        self.peripheral = peripheral


class MissingIntersectionWitness(ToolkitError):
    def __init__(self, extension_member: str, coset: str):
        super().__init__(f"No quasiconvexity witness supplied for the intersection with {extension_member!r} at coset {coset!r}")
        self.extension_member = extension_member
        self.coset = coset


class IoError(ToolkitError):
    pass


class TruncationWarning(UserWarning):
    """A parabolic tree touches the window boundary; its generators may be incomplete."""
