"""
Partition Models
Relocation centers, their subareas and the activation functions that weight pickup-dropoff gaps
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.special import expit


class ActivationKind(Enum):
    IGNORE = "ignore"
    IDENTITY = "identity"
    SIGMOID = "sigmoid"
    SOFTPLUS = "softplus"
    RELU = "relu"

    @classmethod
    def parse(cls, value: Union[str, 'ActivationKind']) -> 'ActivationKind':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            options = ', '.join(k.value for k in cls)
            raise ValueError(f"Unknown activation {value!r}; expected one of {options}") from None

    def apply(self, gaps: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        g = np.asarray(gaps, dtype=float)
        if self is ActivationKind.IGNORE:
            out = np.ones_like(g)
        elif self is ActivationKind.IDENTITY:
            out = g.copy()
        elif self is ActivationKind.SIGMOID:
            out = expit(g)
        elif self is ActivationKind.SOFTPLUS:
            out = np.logaddexp(0.0, g)
        else:
            out = np.maximum(0.0, g)
        if np.ndim(gaps) == 0:
            return float(out)
        return out


def activation(kind: ActivationKind, g: float) -> float:
    return float(ActivationKind.parse(kind).apply(float(g)))


@dataclass
class Partition:
    centers: List[int]
    assignment: np.ndarray
    objective: float
    iterations: int = 0
    seed: Optional[int] = None
    activation: ActivationKind = ActivationKind.IGNORE
    method: str = "dfda"
    objective_trace: List[float] = field(default_factory=list)
    stats: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.centers = [int(c) for c in self.centers]
        self.assignment = np.asarray(self.assignment, dtype=np.int64)

    @property
    def k(self) -> int:
        return len(self.centers)

    @property
    def n_vertices(self) -> int:
        return int(len(self.assignment))

    @property
    def subareas(self) -> List[List[int]]:
        return [np.flatnonzero(self.assignment == j).tolist() for j in range(self.k)]

    def subarea_of(self, vertex: int) -> int:
        return int(self.assignment[vertex])

    def center_of(self, vertex: int) -> int:
        return self.centers[self.subarea_of(vertex)]

    def subarea_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def validate(self):
        if len(set(self.centers)) != self.k:
            raise ValueError(f"Duplicate relocation centers: {self.centers}")
        if self.k == 0:
            raise ValueError("Partition has no centers")
        if np.any(self.assignment < 0) or np.any(self.assignment >= self.k):
            raise ValueError("Vertex assigned outside the subarea range")
        for j, c in enumerate(self.centers):
            if not 0 <= c < self.n_vertices:
                raise ValueError(f"Center {c} is not a vertex")
            if self.assignment[c] != j:
                raise ValueError(f"Center {c} lies outside its own subarea {j}")

    def summary(self) -> dict:
        return {
            'objective': self.objective,
            'iterations': self.iterations,
            'seed': self.seed,
            'activation': self.activation.value
        }

    def to_rows(self, labels: Optional[Sequence[str]] = None) -> List[Dict[str, Any]]:
        name = (lambda v: labels[v]) if labels is not None else (lambda v: v)
        return [
            {
                'vertex_id': name(v),
                'subarea_index': int(j),
                'center_id': name(self.centers[j])
            }
            for v, j in enumerate(self.assignment)
        ]
