from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigError, DimensionError, InfeasibleError
from .basis import BasisFunction

# h_{i,j}(x_i) at or below this value counts as an active constraint
ACTIVE_TOL = 1e-8


class BoundKind(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class BoundConstraint:
    """Concave scalar constraint h(x_i) >= 0: ``x_i - a`` or ``b - x_i``."""

    kind: BoundKind
    value: float

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundKind(self.kind))
        object.__setattr__(self, "value", float(self.value))

    def h(self, x_i: float) -> float:
        if self.kind is BoundKind.LOWER:
            return x_i - self.value
        return self.value - x_i

    def dh(self, x_i: float = 0.0) -> float:
        return 1.0 if self.kind is BoundKind.LOWER else -1.0


@dataclass(frozen=True)
class ConstraintSet:
    constraints: Tuple[BoundConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.lower > self.upper:
            raise InfeasibleError(
                f"Empty constraint set: lower bound {self.lower} exceeds upper bound {self.upper}"
            )

    @classmethod
    def box(cls, lower: Optional[float] = None, upper: Optional[float] = None):
        items = []
        if lower is not None:
            items.append(BoundConstraint(BoundKind.LOWER, lower))
        if upper is not None:
            items.append(BoundConstraint(BoundKind.UPPER, upper))
        return cls(tuple(items))

    @property
    def count(self) -> int:
        return len(self.constraints)

    @property
    def lower(self) -> float:
        values = [c.value for c in self.constraints if c.kind is BoundKind.LOWER]
        return max(values) if values else -math.inf

    @property
    def upper(self) -> float:
        values = [c.value for c in self.constraints if c.kind is BoundKind.UPPER]
        return min(values) if values else math.inf

    def values(self, x_i: float) -> np.ndarray:
        return np.array([c.h(x_i) for c in self.constraints])

    def gradients(self, x_i: float = 0.0) -> np.ndarray:
        return np.array([c.dh(x_i) for c in self.constraints])

    def active(self, x_i: float, tol: float = ACTIVE_TOL) -> np.ndarray:
        return self.values(x_i) <= tol

    def contains(self, x_i: float, tol: float = 1e-12) -> bool:
        return bool(np.all(self.values(x_i) >= -tol))

    def project(self, x_i: float) -> float:
        return float(min(max(x_i, self.lower), self.upper))

    def midpoint(self) -> float:
        lo, hi = self.lower, self.upper
        if math.isfinite(lo) and math.isfinite(hi):
            return 0.5 * (lo + hi)
        return self.project(0.0)


@dataclass(frozen=True)
class KnownTerm:
    """One fixed-weight term of the known part f̄_i."""

    basis: BasisFunction
    weight: float
    incentive: bool = False
    weight_range: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True, eq=False)
class UtilitySpec:
    """f_i(x) = <φ_i(x), θ_i> + f̄_i(x).

    ``theta_lower``/``theta_upper`` encode Θ_i; equal bounds fix a component.
    A NaN entry of ``theta`` marks a structure-only utility awaiting estimation.
    ``known_scale`` multiplies the whole known part; incentive overrides keep it.
    """

    basis: Tuple[BasisFunction, ...]
    theta: np.ndarray
    known_part: Tuple[KnownTerm, ...] = ()
    theta_lower: Optional[np.ndarray] = None
    theta_upper: Optional[np.ndarray] = None
    known_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "known_part", tuple(self.known_part))
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if len(theta) != len(self.basis):
            raise DimensionError(
                f"theta has {len(theta)} entries but the basis has {len(self.basis)} functions"
            )
        object.__setattr__(self, "theta", theta)
        m = len(self.basis)
        lower = np.full(m, -np.inf) if self.theta_lower is None else np.asarray(self.theta_lower, dtype=float)
        upper = np.full(m, np.inf) if self.theta_upper is None else np.asarray(self.theta_upper, dtype=float)
        if lower.shape != (m,) or upper.shape != (m,):
            raise DimensionError("theta bounds must match the basis length")
        if np.any(lower > upper):
            raise InfeasibleError("Parameter set Θ is empty: a lower bound exceeds its upper bound")
        object.__setattr__(self, "theta_lower", lower)
        object.__setattr__(self, "theta_upper", upper)

    @property
    def m(self) -> int:
        return len(self.basis)

    @property
    def has_theta(self) -> bool:
        return bool(np.all(np.isfinite(self.theta)))

    def _require_theta(self):
        if not self.has_theta:
            raise ConfigError("Utility has no estimated weights; estimate the game first")

    def features(self, own: float, others=()) -> np.ndarray:
        return np.array([b.value(own, others) for b in self.basis])

    def d_features(self, own: float, others=()) -> np.ndarray:
        return np.array([b.d_own(own, others) for b in self.basis])

    def d2_features(self, own: float, others=()) -> np.ndarray:
        return np.array([b.d2_own(own, others) for b in self.basis])

    def known_value(self, own: float, others=()) -> float:
        return self.known_scale * sum(t.weight * t.basis.value(own, others) for t in self.known_part)

    def known_grad(self, own: float, others=()) -> float:
        return self.known_scale * sum(t.weight * t.basis.d_own(own, others) for t in self.known_part)

    def known_d2(self, own: float, others=()) -> float:
        return self.known_scale * sum(t.weight * t.basis.d2_own(own, others) for t in self.known_part)

    def value(self, own: float, others=()) -> float:
        self._require_theta()
        return float(self.features(own, others) @ self.theta) + self.known_value(own, others)

    def grad(self, own: float, others=()) -> float:
        self._require_theta()
        return float(self.d_features(own, others) @ self.theta) + self.known_grad(own, others)

    def d2(self, own: float, others=()) -> float:
        self._require_theta()
        return float(self.d2_features(own, others) @ self.theta) + self.known_d2(own, others)

    def cross(self, own: float, others=()) -> np.ndarray:
        """d(D_i f_i)/dx_j for every opponent j, in ``others`` order."""
        self._require_theta()
        out = np.zeros(len(others))
        for b, w in zip(self.basis, self.theta):
            out += w * b.d_own_cross(own, others)
        for t in self.known_part:
            out += self.known_scale * t.weight * t.basis.d_own_cross(own, others)
        return out

    @property
    def fixed_mask(self) -> np.ndarray:
        return self.theta_lower == self.theta_upper

    @property
    def incentive_indices(self) -> Tuple[int, ...]:
        return tuple(k for k, t in enumerate(self.known_part) if t.incentive)

    def with_theta(self, theta: Sequence[float]) -> "UtilitySpec":
        return replace(self, theta=np.asarray(theta, dtype=float))

    def with_incentives(self, weights: Sequence[float]) -> "UtilitySpec":
        idx = self.incentive_indices
        weights = tuple(weights)
        if not weights:
            return self
        if len(weights) != len(idx):
            raise DimensionError(
                f"Expected {len(idx)} incentive weight(s), got {len(weights)}"
            )
        terms = list(self.known_part)
        for k, w in zip(idx, weights):
            terms[k] = replace(terms[k], weight=w)
        return replace(self, known_part=tuple(terms))

    def scaled(self, factor: float) -> "UtilitySpec":
        """Positive rescaling of every term (same maximizers)."""
        return replace(self, theta=self.theta * factor, known_scale=self.known_scale * factor)


@dataclass(frozen=True, eq=False)
class PlayerSpec:
    player_id: int
    utility: UtilitySpec
    constraints: ConstraintSet = field(default_factory=ConstraintSet)


@dataclass(frozen=True, eq=False)
class GameSpec:
    """Ordered players of a continuous game on 𝒞 = 𝒞_1 × … × 𝒞_p."""

    players: Tuple[PlayerSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))
        if not self.players:
            raise ConfigError("A game needs at least one player")
        ids = [pl.player_id for pl in self.players]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"Duplicate player ids in game: {ids}")

    @property
    def p(self) -> int:
        return len(self.players)

    @property
    def player_ids(self) -> Tuple[int, ...]:
        return tuple(pl.player_id for pl in self.players)

    def index_of(self, player_id: int) -> int:
        for k, pl in enumerate(self.players):
            if pl.player_id == player_id:
                return k
        raise ConfigError(f"Unknown player id {player_id}")

    def player(self, player_id: int) -> PlayerSpec:
        return self.players[self.index_of(player_id)]

    @staticmethod
    def others(x: np.ndarray, i: int) -> np.ndarray:
        return np.delete(np.asarray(x, dtype=float), i)

    @property
    def lower(self) -> np.ndarray:
        return np.array([pl.constraints.lower for pl in self.players])

    @property
    def upper(self) -> np.ndarray:
        return np.array([pl.constraints.upper for pl in self.players])

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def midpoint(self) -> np.ndarray:
        return np.array([pl.constraints.midpoint() for pl in self.players])

    def contains(self, x: np.ndarray) -> bool:
        return all(pl.constraints.contains(v) for pl, v in zip(self.players, x))

    def restrict(self, player_ids: Iterable[int]) -> "GameSpec":
        """Sub-game among the given participants, in game order."""
        wanted = set(player_ids)
        unknown = wanted - set(self.player_ids)
        if unknown:
            raise ConfigError(f"Unknown player id(s) {sorted(unknown)}")
        return GameSpec(tuple(pl for pl in self.players if pl.player_id in wanted))

    def with_utilities(self, utilities: Mapping[int, UtilitySpec]) -> "GameSpec":
        return GameSpec(
            tuple(
                replace(pl, utility=utilities.get(pl.player_id, pl.utility))
                for pl in self.players
            )
        )

    def with_thetas(self, thetas: Mapping[int, Sequence[float]]) -> "GameSpec":
        return self.with_utilities(
            {pid: self.player(pid).utility.with_theta(t) for pid, t in thetas.items()}
        )

    def with_incentives(self, incentives: Mapping[int, Sequence[float]]) -> "GameSpec":
        updates: Dict[int, UtilitySpec] = {}
        for pid, weights in incentives.items():
            if pid in self.player_ids and len(weights):
                updates[pid] = self.player(pid).utility.with_incentives(weights)
        return self.with_utilities(updates) if updates else self

    @property
    def thetas(self) -> Dict[int, np.ndarray]:
        return {pl.player_id: pl.utility.theta.copy() for pl in self.players}
