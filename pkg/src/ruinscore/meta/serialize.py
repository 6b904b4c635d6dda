"""Versioned JSON model files and the format dispatch loader."""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import IoFailure, SchemaViolation
from .features import FEATURE_LAYOUT
from .gbdt import GBDT_FORMAT, GbdtModel, gbdt_from_dict, gbdt_to_dict
from .logreg import LOGREG_FORMAT, LogRegModel, logreg_from_dict, logreg_to_dict


def model_to_json(model: LogRegModel | GbdtModel) -> str:
    if isinstance(model, LogRegModel):
        payload = logreg_to_dict(model)
    elif isinstance(model, GbdtModel):
        payload = gbdt_to_dict(model)
    else:
        raise TypeError(f"not a serializable model: {type(model)!r}")
    return json.dumps(payload, indent=2) + "\n"


def save_model(model: LogRegModel | GbdtModel, path: str | Path) -> None:
    try:
        Path(path).write_text(model_to_json(model), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write model file {path}: {exc}") from None


def load_model(path: str | Path) -> LogRegModel | GbdtModel:
    """Load either model kind; rejects unknown formats and layout mismatches."""
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read model file {p}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"model file is not valid JSON ({exc.msg})") from None
    fmt = raw.get("format")
    if fmt == LOGREG_FORMAT:
        model = logreg_from_dict(raw)
    elif fmt == GBDT_FORMAT:
        model = gbdt_from_dict(raw)
    else:
        raise SchemaViolation("format", f"unknown model format {fmt!r}")
    if model.feature_layout != FEATURE_LAYOUT:
        raise SchemaViolation(
            "feature_layout",
            f"model uses layout {model.feature_layout!r}, engine expects {FEATURE_LAYOUT!r}",
        )
    return model
