"""Basis-function family used to parameterize player utilities.

Each member is a scalar function of the player's own action ``x_i`` and the
actions of the other participating players ``x_{-i}``. Derivatives are taken
with respect to the own action; ``d_own_cross`` returns the derivative of
``D_i φ`` with respect to each other player's action.

``mean(x_{-i})`` is 0 when the player has no opponents.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..exceptions import DomainError


class BasisKind(str, enum.Enum):
    CONSTANT = "constant"
    OWN_LINEAR = "own_linear"
    OWN_QUADRATIC = "own_quadratic"
    OWN_LOG_SHIFTED = "own_log_shifted"
    CROSS_BILINEAR = "cross_bilinear"
    MEAN_OTHERS_LINEAR = "mean_others_linear"


# Number of parameters each kind expects
_PARAM_COUNT = {
    BasisKind.CONSTANT: 0,
    BasisKind.OWN_LINEAR: 0,
    BasisKind.OWN_QUADRATIC: 0,
    BasisKind.OWN_LOG_SHIFTED: 1,
    BasisKind.CROSS_BILINEAR: 0,
    BasisKind.MEAN_OTHERS_LINEAR: 0,
}


def _mean_others(others: np.ndarray) -> float:
    return float(np.mean(others)) if len(others) else 0.0


@dataclass(frozen=True)
class BasisFunction:
    kind: BasisKind
    params: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        kind = BasisKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != _PARAM_COUNT[kind]:
            raise DomainError(
                f"Basis '{kind.value}' expects {_PARAM_COUNT[kind]} parameter(s), "
                f"got {len(self.params)}"
            )

    @property
    def shift(self) -> float:
        return self.params[0]

    def _log_arg(self, own: float) -> float:
        arg = own + self.shift
        if arg <= 0:
            raise DomainError(
                f"log-shifted basis undefined at x_i={own!r} (shift {self.shift!r})"
            )
        return arg

    def value(self, own: float, others=()) -> float:
        others = np.asarray(others, dtype=float)
        kind = self.kind
        if kind is BasisKind.CONSTANT:
            return 1.0
        if kind is BasisKind.OWN_LINEAR:
            return own
        if kind is BasisKind.OWN_QUADRATIC:
            return own * own
        if kind is BasisKind.OWN_LOG_SHIFTED:
            return math.log(self._log_arg(own))
        if kind is BasisKind.CROSS_BILINEAR:
            return own * _mean_others(others)
        return _mean_others(others)

    def d_own(self, own: float, others=()) -> float:
        """First derivative with respect to the own action."""
        kind = self.kind
        if kind is BasisKind.OWN_LINEAR:
            return 1.0
        if kind is BasisKind.OWN_QUADRATIC:
            return 2.0 * own
        if kind is BasisKind.OWN_LOG_SHIFTED:
            return 1.0 / self._log_arg(own)
        if kind is BasisKind.CROSS_BILINEAR:
            return _mean_others(np.asarray(others, dtype=float))
        return 0.0

    def d2_own(self, own: float, others=()) -> float:
        """Second derivative with respect to the own action."""
        kind = self.kind
        if kind is BasisKind.OWN_QUADRATIC:
            return 2.0
        if kind is BasisKind.OWN_LOG_SHIFTED:
            return -1.0 / self._log_arg(own) ** 2
        return 0.0

    def d_own_cross(self, own: float, others=()) -> np.ndarray:
        """Derivative of ``d_own`` with respect to each opponent action."""
        others = np.asarray(others, dtype=float)
        if self.kind is BasisKind.CROSS_BILINEAR and len(others):
            return np.full(len(others), 1.0 / len(others))
        return np.zeros(len(others))

    def in_domain(self, own: float) -> bool:
        if self.kind is BasisKind.OWN_LOG_SHIFTED:
            return own + self.shift > 0
        return True

    @property
    def is_own_concave_with_negative_weight(self) -> bool:
        return self.kind is BasisKind.OWN_QUADRATIC

    @property
    def is_own_concave_with_positive_weight(self) -> bool:
        return self.kind is BasisKind.OWN_LOG_SHIFTED

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "params": list(self.params)}

    def __str__(self):
        if self.params:
            return f"{self.kind.value}({', '.join(f'{p:g}' for p in self.params)})"
        return self.kind.value


def concavity_bounds(basis: BasisFunction, margin: float = 1e-6) -> tuple:
    """Sign bounds that keep a weighted basis term concave in the own action."""
    if basis.is_own_concave_with_negative_weight:
        return (-math.inf, -margin)
    if basis.is_own_concave_with_positive_weight:
        return (margin, math.inf)
    return (-math.inf, math.inf)
