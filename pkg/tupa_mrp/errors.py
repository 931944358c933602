"""Exceptions raised across the package. The CLI maps them to exit codes."""
from typing import Any, Optional


class TupaMrpError(Exception):
    """Base class for every error this package raises on purpose."""


class MrpParseError(TupaMrpError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MrpValidationError(TupaMrpError):
    def __init__(self, graph_id: Any, message: str):
        super().__init__(f"graph {graph_id}: {message}")
        self.graph_id = graph_id


class CompanionError(TupaMrpError):
    def __init__(self, node_id: Any, message: str):
        super().__init__(f"companion node {node_id}: {message}")
        self.node_id = node_id


class IntermediateError(TupaMrpError):
    def __init__(self, graph_id: Any, message: str):
        super().__init__(f"graph {graph_id}: {message}")
        self.graph_id = graph_id


class IllegalTransition(TupaMrpError):
    def __init__(self, reason: str, index: Optional[int] = None, transition: Any = None):
        where = f" at position {index}" if index is not None else ""
        super().__init__(f"illegal transition {transition}{where}: {reason}")
        self.reason = reason
        self.index = index
        self.transition = transition


class OracleError(TupaMrpError):
    def __init__(self, message: str, pending: Any = None):
        super().__init__(message if pending is None else f"{message}: {pending}")
        self.pending = pending


class UnknownFrameworkError(TupaMrpError):
    def __init__(self, tag: Any):
        super().__init__(f"unknown framework '{tag}'")
        self.tag = tag


class ModelFormatError(TupaMrpError):
    pass


class TrainingError(TupaMrpError):
    pass
