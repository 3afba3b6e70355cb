"""Metapath role profiles and preparedness-category classification.

A bridge's role profile counts its building connections per category (shop,
hospital, residence) together with the number of trunk junctions reachable
within the neighbourhood radius.  Category metapaths only count when the
bridge is highway-connected: a bridge no trunk road reaches contributes zero
effective paths regardless of nearby buildings.  Classification compares the
dominant category's share of effective paths against fixed thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .graphbuild import BuildingCategory, HetGraph, RelationKind, compute_knn_edges


class Category(str, Enum):
    SUPPLY_CHAIN = "SupplyChain"
    MEDICAL_ACCESS = "MedicalAccess"
    RESIDENTIAL_PROTECTION = "ResidentialProtection"
    BALANCED_MULTI_USE = "BalancedMultiUse"
    MIXED = "Mixed"


# Marker colours shared by every rendering of the categories.
CATEGORY_COLORS = {
    Category.SUPPLY_CHAIN: "#1f77b4",
    Category.MEDICAL_ACCESS: "#d62728",
    Category.RESIDENTIAL_PROTECTION: "#2ca02c",
    Category.BALANCED_MULTI_USE: "#7f7f7f",
    Category.MIXED: "#ff7f0e",
}

# Argmax ties resolve in this order.
_DOMINANCE_ORDER = (BuildingCategory.SHOP, BuildingCategory.HOSPITAL, BuildingCategory.RESIDENCE)


class MetapathError(ValueError):
    """Invalid profile or threshold configuration."""


@dataclass(frozen=True)
class ClassifierThresholds:
    supply_min: float = 0.9
    medical_min: float = 0.7
    residential_min: float = 0.7
    balanced_max: float = 0.3

    def __post_init__(self) -> None:
        values = (self.supply_min, self.medical_min, self.residential_min, self.balanced_max)
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise MetapathError(f"thresholds must lie in [0, 1]: {values}")
        if not (self.balanced_max < self.medical_min <= self.supply_min):
            raise MetapathError(
                "required ordering: balanced_max < medical_min <= supply_min"
            )
        if not (self.balanced_max < self.residential_min):
            raise MetapathError("required ordering: balanced_max < residential_min")


@dataclass(frozen=True)
class MetapathProfile:
    """Raw per-category building edge counts plus trunk reachability."""

    bridge_id: int
    shop_paths: int
    hospital_paths: int
    residence_paths: int
    highway_count: int

    def __post_init__(self) -> None:
        for name in ("shop_paths", "hospital_paths", "residence_paths", "highway_count"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise MetapathError(f"{name} must be a non-negative integer, got {v!r}")

    @property
    def is_highway(self) -> bool:
        return self.highway_count > 0

    def raw_count(self, category: BuildingCategory) -> int:
        return {
            BuildingCategory.SHOP: self.shop_paths,
            BuildingCategory.HOSPITAL: self.hospital_paths,
            BuildingCategory.RESIDENCE: self.residence_paths,
        }[category]

    def effective_count(self, category: BuildingCategory) -> int:
        """Highway-gated metapath count: zero when no trunk road reaches."""
        return self.raw_count(category) if self.is_highway else 0

    @property
    def total_effective(self) -> int:
        return sum(self.effective_count(c) for c in BuildingCategory)

    @property
    def total_raw(self) -> int:
        return sum(self.raw_count(c) for c in BuildingCategory)


@dataclass(frozen=True)
class BridgeClassification:
    bridge_id: int
    category: Category
    confidence: float
    dominant: Optional[BuildingCategory]
    total_paths: int

    @property
    def label(self) -> str:
        """Export label; the mixed category names its dominant share."""
        if self.category == Category.MIXED:
            return f"Mixed({self.dominant.value})"
        return self.category.value


def confidence(profile: MetapathProfile, category: BuildingCategory) -> float:
    """Share of the bridge's effective metapaths belonging to one category."""
    total = profile.total_effective
    if total == 0:
        return 0.0
    return profile.effective_count(category) / total


def _dominant(profile: MetapathProfile) -> BuildingCategory:
    best = max(profile.effective_count(c) for c in _DOMINANCE_ORDER)
    for cat in _DOMINANCE_ORDER:
        if profile.effective_count(cat) == best:
            return cat
    raise AssertionError("unreachable")


def classify(
    profile: MetapathProfile, thresholds: ClassifierThresholds = ClassifierThresholds()
) -> BridgeClassification:
    """Assign a preparedness category from the effective metapath shares.

    No effective paths at all means the bridge serves no single purpose the
    data can see, which lands in the balanced category with confidence zero.
    """
    total = profile.total_effective
    if total == 0:
        return BridgeClassification(
            bridge_id=profile.bridge_id,
            category=Category.BALANCED_MULTI_USE,
            confidence=0.0,
            dominant=None,
            total_paths=0,
        )
    dominant = _dominant(profile)
    conf = profile.effective_count(dominant) / total

    if dominant == BuildingCategory.SHOP and conf >= thresholds.supply_min:
        category = Category.SUPPLY_CHAIN
    elif dominant == BuildingCategory.HOSPITAL and conf >= thresholds.medical_min:
        category = Category.MEDICAL_ACCESS
    elif dominant == BuildingCategory.RESIDENCE and conf >= thresholds.residential_min:
        category = Category.RESIDENTIAL_PROTECTION
    elif conf < thresholds.balanced_max:
        category = Category.BALANCED_MULTI_USE
    else:
        category = Category.MIXED
    return BridgeClassification(
        bridge_id=profile.bridge_id,
        category=category,
        confidence=conf,
        dominant=dominant,
        total_paths=total,
    )


def profiles_from_edges(
    bridge_ids: Sequence[int],
    edges: dict[RelationKind, list[tuple[int, int]]],
    highway_counts: dict[int, int],
) -> list[MetapathProfile]:
    """Pure profile assembly from explicit edge lists (used by what-if runs)."""
    counts = {bid: {c: 0 for c in BuildingCategory} for bid in bridge_ids}
    rel_cat = {
        RelationKind.TO_SHOP: BuildingCategory.SHOP,
        RelationKind.TO_HOSPITAL: BuildingCategory.HOSPITAL,
        RelationKind.TO_RESIDENCE: BuildingCategory.RESIDENCE,
    }
    for rel, cat in rel_cat.items():
        for bridge, _ in edges.get(rel, []):
            if bridge in counts:
                counts[bridge][cat] += 1
    return [
        MetapathProfile(
            bridge_id=bid,
            shop_paths=counts[bid][BuildingCategory.SHOP],
            hospital_paths=counts[bid][BuildingCategory.HOSPITAL],
            residence_paths=counts[bid][BuildingCategory.RESIDENCE],
            highway_count=int(highway_counts.get(bid, 0)),
        )
        for bid in bridge_ids
    ]


def profile(graph: HetGraph) -> list[MetapathProfile]:
    """Profiles for every bridge in the graph, ordered by bridge id.

    Requires building edges and trunk reachability counts to be installed.
    """
    return profiles_from_edges(graph.bridge_ids(), graph.edges, graph.highway_counts)


def classify_all(
    profiles: Sequence[MetapathProfile],
    thresholds: ClassifierThresholds = ClassifierThresholds(),
) -> list[BridgeClassification]:
    return [classify(p, thresholds) for p in profiles]


@dataclass(frozen=True)
class CoverageRow:
    k_shop: int
    k_hospital: int
    k_residence: int
    raw_edges: dict[str, int]
    effective_paths: dict[str, int]
    delta_effective: dict[str, int]  # versus the first configuration


def coverage_report(
    graph: HetGraph, k_values: Sequence[tuple[int, int, int]]
) -> list[CoverageRow]:
    """Total per-category coverage for each (k_shop, k_hospital, k_residence).

    Recomputes the nearest-building edges for every configuration without
    touching the graph, and reports raw edge totals, highway-gated effective
    path totals, and effective deltas against the first configuration.
    """
    if not k_values:
        raise MetapathError("at least one k configuration is required")
    rows: list[CoverageRow] = []
    baseline: Optional[dict[str, int]] = None
    for k_shop, k_hospital, k_residence in k_values:
        edges = compute_knn_edges(graph, k_shop=k_shop, k_hospital=k_hospital, k_residence=k_residence)
        profs = profiles_from_edges(graph.bridge_ids(), edges, graph.highway_counts)
        raw = {c.value: sum(p.raw_count(c) for p in profs) for c in BuildingCategory}
        eff = {c.value: sum(p.effective_count(c) for p in profs) for c in BuildingCategory}
        if baseline is None:
            baseline = eff
        rows.append(
            CoverageRow(
                k_shop=k_shop,
                k_hospital=k_hospital,
                k_residence=k_residence,
                raw_edges=raw,
                effective_paths=eff,
                delta_effective={c: eff[c] - baseline[c] for c in eff},
            )
        )
    return rows
