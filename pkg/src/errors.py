"""
Error Types
Exceptions raised across the dispatching engine
"""

from typing import Optional


class GraphParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class GraphValidationError(ValueError):
    pass


class UnreachableVertexError(ValueError):
    def __init__(self, vertex: int, label: Optional[str] = None):
        self.vertex = vertex
        name = f"{label} (id {vertex})" if label is not None else f"{vertex}"
        super().__init__(f"Vertex {name} is not reachable from any relocation center")


class EnumerationCapError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


class DataMismatchError(ValueError):
    pass
