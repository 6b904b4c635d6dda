"""Rule-based damage grading (v1 and v2) and the final decision combinator.

v1 drops low-confidence detections, forces HEAVY on any surviving exposed
rebar, and otherwise thresholds a weighted count score. v2 adds scene-aware
confidence floors, a minimum box area, rebar co-evidence validation, and a
score discount when no structural component was seen with confidence.

All functions here are pure; the config carries every weight, threshold and
toggle, serialized as a strict JSON file (unknown keys rejected).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

from .dataset_io import (
    BoundingBox,
    ComponentDetection,
    DamageClass,
    DamageDetection,
    DamageLevel,
    SceneClass,
    SceneLabel,
)
from .errors import MissingFile, MissingMeta, SchemaViolation

# filter tags recorded on RuleDecision.applied_filters
TAG_CONF_FLOOR = "conf-floor"
TAG_INSIDE_FLOOR = "inside-conf-floor"
TAG_MIN_AREA = "min-box-area"
TAG_REBAR_DEMOTED = "rebar-demoted"
TAG_AMBIGUITY_BIAS = "ambiguity-bias"


class FusionVersion(Enum):
    V1 = "v1"
    V2 = "v2"


class DecisionMode(Enum):
    RULE_ONLY = "rule_only"
    META_ONLY = "meta_only"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class Weights:
    """Score contribution per surviving detection of each damage class."""

    w_crack: float = 1.0
    w_spall: float = 2.0
    w_rebar: float = 3.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be >= 0")


@dataclass(frozen=True)
class Thresholds:
    """Score cut points: ZERO below t_slight, MEDIUM at or above t_medium."""

    t_slight: float = 1.0
    t_medium: float = 4.0

    def __post_init__(self) -> None:
        if not 0 <= self.t_slight <= self.t_medium:
            raise ValueError("thresholds must satisfy 0 <= t_slight <= t_medium")


@dataclass(frozen=True)
class V2Params:
    inside_conf_floor: float = 0.40
    min_box_area: float = 0.0004
    rebar_conf_min: float = 0.5
    rebar_iou_min: float = 0.1
    rebar_containment_min: float = 0.5
    component_conf_min: float = 0.3
    no_component_score_factor: float = 0.5

    def __post_init__(self) -> None:
        for name in (
            "inside_conf_floor",
            "rebar_conf_min",
            "rebar_iou_min",
            "rebar_containment_min",
            "component_conf_min",
        ):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.min_box_area < 0:
            raise ValueError("min_box_area must be >= 0")
        if not 0.0 < self.no_component_score_factor <= 1.0:
            raise ValueError("no_component_score_factor must be in (0, 1]")


@dataclass(frozen=True)
class FusionConfig:
    version: FusionVersion = FusionVersion.V1
    weights: Weights = Weights()
    thresholds: Thresholds = Thresholds()
    conf_floor: float = 0.25
    v2: V2Params = V2Params()
    decision_mode: DecisionMode = DecisionMode.RULE_ONLY
    # meta probabilities override the rule level only at or above this gate;
    # a gate above 1 disables the override entirely
    hybrid_prob_gate: float = 0.6

    def __post_init__(self) -> None:
        if not 0.0 <= self.conf_floor <= 1.0:
            raise ValueError("conf_floor must be in [0, 1]")
        if self.hybrid_prob_gate < 0.0:
            raise ValueError("hybrid_prob_gate must be >= 0")

    def to_dict(self) -> dict:
        return {
            "version": self.version.value,
            "weights": {
                "w_crack": self.weights.w_crack,
                "w_spall": self.weights.w_spall,
                "w_rebar": self.weights.w_rebar,
            },
            "thresholds": {
                "t_slight": self.thresholds.t_slight,
                "t_medium": self.thresholds.t_medium,
            },
            "conf_floor": self.conf_floor,
            "v2": {
                "inside_conf_floor": self.v2.inside_conf_floor,
                "min_box_area": self.v2.min_box_area,
                "rebar_conf_min": self.v2.rebar_conf_min,
                "rebar_iou_min": self.v2.rebar_iou_min,
                "rebar_containment_min": self.v2.rebar_containment_min,
                "component_conf_min": self.v2.component_conf_min,
                "no_component_score_factor": self.v2.no_component_score_factor,
            },
            "decision_mode": self.decision_mode.value,
            "hybrid_prob_gate": self.hybrid_prob_gate,
        }

    @staticmethod
    def from_dict(raw: dict) -> "FusionConfig":
        """Build a config from a JSON object; absent keys keep their defaults,
        unknown keys raise SchemaViolation."""
        if not isinstance(raw, dict):
            raise SchemaViolation("$", "config must be an object")

        def section(key: str, allowed: set[str]) -> dict:
            sub = raw.get(key, {})
            if not isinstance(sub, dict):
                raise SchemaViolation(key, "expected an object")
            unknown = set(sub) - allowed
            if unknown:
                raise SchemaViolation(f"{key}.{sorted(unknown)[0]}", "unknown key")
            for k, v in sub.items():
                if not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise SchemaViolation(f"{key}.{k}", "must be a number")
            return sub

        top_allowed = {
            "version",
            "weights",
            "thresholds",
            "conf_floor",
            "v2",
            "decision_mode",
            "hybrid_prob_gate",
        }
        unknown = set(raw) - top_allowed
        if unknown:
            raise SchemaViolation(sorted(unknown)[0], "unknown key")

        kwargs: dict = {}
        if "version" in raw:
            try:
                kwargs["version"] = FusionVersion(raw["version"])
            except ValueError:
                raise SchemaViolation("version", "must be 'v1' or 'v2'") from None
        if "decision_mode" in raw:
            try:
                kwargs["decision_mode"] = DecisionMode(raw["decision_mode"])
            except ValueError:
                raise SchemaViolation(
                    "decision_mode", "must be 'rule_only', 'meta_only' or 'hybrid'"
                ) from None
        try:
            if "weights" in raw:
                kwargs["weights"] = Weights(**section("weights", {"w_crack", "w_spall", "w_rebar"}))
            if "thresholds" in raw:
                kwargs["thresholds"] = Thresholds(
                    **section("thresholds", {"t_slight", "t_medium"})
                )
            if "v2" in raw:
                kwargs["v2"] = V2Params(
                    **section(
                        "v2",
                        {
                            "inside_conf_floor",
                            "min_box_area",
                            "rebar_conf_min",
                            "rebar_iou_min",
                            "rebar_containment_min",
                            "component_conf_min",
                            "no_component_score_factor",
                        },
                    )
                )
            for key in ("conf_floor", "hybrid_prob_gate"):
                if key in raw:
                    v = raw[key]
                    if not isinstance(v, (int, float)) or isinstance(v, bool):
                        raise SchemaViolation(key, "must be a number")
                    kwargs[key] = float(v)
            return FusionConfig(**kwargs)
        except ValueError as exc:
            raise SchemaViolation("$", str(exc)) from None

    @staticmethod
    def from_file(path: str | Path) -> "FusionConfig":
        p = Path(path)
        if not p.is_file():
            raise MissingFile(str(p))
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaViolation("$", f"not valid JSON ({exc.msg})") from None
        return FusionConfig.from_dict(raw)

    def with_version(self, version: FusionVersion) -> "FusionConfig":
        return replace(self, version=version)


@dataclass(frozen=True)
class RuleCounts:
    """Detection counts after filtering; rebar split into raw and validated."""

    n_crack: int = 0
    n_spall: int = 0
    n_rebar_raw: int = 0
    n_rebar_valid: int = 0


@dataclass(frozen=True)
class RuleDecision:
    """Rule outcome plus its own explanation.

    `score` always equals
    weighted_score(n_crack, n_spall, n_rebar_raw - n_rebar_valid) times the
    no-component factor when (and only when) the "ambiguity-bias" tag is
    present, so the decision can be audited from its counts alone.
    """

    level: DamageLevel
    score: float
    counts: RuleCounts = RuleCounts()
    rebar_forced: bool = False
    applied_filters: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.rebar_forced and self.level is not DamageLevel.HEAVY:
            raise ValueError("rebar_forced implies level HEAVY")
        if self.score < 0:
            raise ValueError("score must be >= 0")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0.0 for disjoint or edge-touching boxes."""
    ax0, ay0, ax1, ay1 = a.corners()
    bx0, by0, bx1, by1 = b.corners()
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area() + b.area() - inter)


def containment_ratio(inner: BoundingBox, outer: BoundingBox) -> float:
    """Intersection area over the inner box's own area (1.0 when fully contained)."""
    ax0, ay0, ax1, ay1 = inner.corners()
    bx0, by0, bx1, by1 = outer.corners()
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return (iw * ih) / inner.area()


def _filter_with_tags(
    damages: Sequence[DamageDetection],
    scene: SceneLabel,
    config: FusionConfig,
) -> tuple[list[DamageDetection], list[str]]:
    floor = config.conf_floor
    inside_v2 = (
        config.version is FusionVersion.V2 and scene.cls is SceneClass.INSIDE
    )
    if inside_v2:
        floor = max(floor, config.v2.inside_conf_floor)
    kept: list[DamageDetection] = []
    tags: list[str] = []
    for det in damages:
        if det.confidence < floor:
            tag = (
                TAG_INSIDE_FLOOR
                if inside_v2 and det.confidence >= config.conf_floor
                else TAG_CONF_FLOOR
            )
            if tag not in tags:
                tags.append(tag)
            continue
        if config.version is FusionVersion.V2 and det.box.area() < config.v2.min_box_area:
            if TAG_MIN_AREA not in tags:
                tags.append(TAG_MIN_AREA)
            continue
        kept.append(det)
    return kept, tags


def filter_detections(
    damages: Sequence[DamageDetection],
    scene: SceneLabel,
    config: FusionConfig,
) -> list[DamageDetection]:
    """Confidence and (v2) area filtering; input order is preserved.

    v1 keeps detections with confidence >= conf_floor. v2 raises the floor to
    inside_conf_floor indoors and drops boxes smaller than min_box_area.
    """
    kept, _ = _filter_with_tags(damages, scene, config)
    return kept


def validate_rebar(
    rebar: DamageDetection,
    spalls: Sequence[DamageDetection],
    components: Sequence[ComponentDetection],
    config: FusionConfig,
) -> bool:
    """Decide whether an exposed-rebar detection is trustworthy.

    v1 only checks the confidence floor. v2 additionally demands co-evidence:
    an overlapping spall (exposed bars physically follow cover spalling) or a
    structural component containing most of the rebar box.
    """
    if rebar.cls is not DamageClass.EXPOSED_REBAR:
        raise ValueError("validate_rebar expects an EXPOSED_REBAR detection")
    if config.version is FusionVersion.V1:
        return rebar.confidence >= config.conf_floor
    if rebar.confidence < config.v2.rebar_conf_min:
        return False
    for spall in spalls:
        if iou(rebar.box, spall.box) >= config.v2.rebar_iou_min:
            return True
    for comp in components:
        if containment_ratio(rebar.box, comp.box) >= config.v2.rebar_containment_min:
            return True
    return False


def weighted_score(
    n_crack: int, n_spall: int, n_rebar_unvalidated: int, config: FusionConfig
) -> float:
    """Weighted count score over surviving detections.

    Only unvalidated rebar is counted here; validated rebar never reaches
    scoring because it forces HEAVY outright.
    """
    w = config.weights
    return (
        w.w_crack * n_crack + w.w_spall * n_spall + w.w_rebar * n_rebar_unvalidated
    )


def rule_fusion(out, config: FusionConfig) -> RuleDecision:
    """Assign a damage level to one image's cascade output.

    Order of operations: filter detections, force HEAVY if any surviving
    rebar validates, otherwise score the survivors (demoted rebar still
    counts), apply the v2 no-component discount, and threshold.
    """
    filtered, tags = _filter_with_tags(out.damages, out.scene, config)
    cracks = [d for d in filtered if d.cls is DamageClass.CRACK]
    spalls = [d for d in filtered if d.cls is DamageClass.SPALLING]
    rebars = [d for d in filtered if d.cls is DamageClass.EXPOSED_REBAR]
    valid_rebars = [
        r for r in rebars if validate_rebar(r, spalls, out.components, config)
    ]
    counts = RuleCounts(
        n_crack=len(cracks),
        n_spall=len(spalls),
        n_rebar_raw=len(rebars),
        n_rebar_valid=len(valid_rebars),
    )
    if rebars and len(valid_rebars) < len(rebars):
        tags.append(TAG_REBAR_DEMOTED)

    score = weighted_score(
        counts.n_crack, counts.n_spall, counts.n_rebar_raw - counts.n_rebar_valid, config
    )

    if valid_rebars:
        return RuleDecision(
            level=DamageLevel.HEAVY,
            score=score,
            counts=counts,
            rebar_forced=True,
            applied_filters=tuple(tags),
        )

    if config.version is FusionVersion.V2 and not any(
        c.confidence >= config.v2.component_conf_min for c in out.components
    ):
        score *= config.v2.no_component_score_factor
        tags.append(TAG_AMBIGUITY_BIAS)

    if score < config.thresholds.t_slight:
        level = DamageLevel.ZERO
    elif score < config.thresholds.t_medium:
        level = DamageLevel.SLIGHT
    else:
        level = DamageLevel.MEDIUM
    return RuleDecision(
        level=level,
        score=score,
        counts=counts,
        rebar_forced=False,
        applied_filters=tuple(tags),
    )


def recompute_score(decision: RuleDecision, config: FusionConfig) -> float:
    """Rebuild the score from the decision's own counts and tags (audit path)."""
    base = weighted_score(
        decision.counts.n_crack,
        decision.counts.n_spall,
        decision.counts.n_rebar_raw - decision.counts.n_rebar_valid,
        config,
    )
    if TAG_AMBIGUITY_BIAS in decision.applied_filters:
        base *= config.v2.no_component_score_factor
    return base


def meta_argmax(probs: Sequence[float]) -> DamageLevel:
    """Most probable level; ties resolve to the higher severity."""
    if len(probs) != 4:
        raise ValueError("expected 4 class probabilities")
    best = max(range(4), key=lambda i: (probs[i], i))
    return DamageLevel(best)


def final_decision(
    rule: RuleDecision,
    meta: Sequence[float] | None,
    config: FusionConfig,
) -> DamageLevel:
    """Combine the rule decision with optional meta-model probabilities.

    HYBRID takes the meta argmax when its confidence clears the gate, else
    the rule level; a rebar-forced HEAVY is never overridden downward.
    """
    mode = config.decision_mode
    if mode is DecisionMode.RULE_ONLY:
        return rule.level
    if meta is None:
        raise MissingMeta(mode.value)
    meta_level = meta_argmax(meta)
    if mode is DecisionMode.META_ONLY:
        return meta_level
    chosen = meta_level if max(meta) >= config.hybrid_prob_gate else rule.level
    if rule.rebar_forced and chosen < rule.level:
        chosen = rule.level
    return chosen


DEFAULT_CONFIG = FusionConfig()
