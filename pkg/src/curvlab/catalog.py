"""Manifold spec files: JSON documents describing a chart, loaded into MetricChart.

Layout of a spec (UTF-8 JSON)::

    {
      "name": "sphere2",
      "dim": 2,
      "signature": [1, 1],
      "coordinates": ["th", "ph"],
      "domain": [[0, 3.141592653589793], [0, 6.283185307179586]],
      "parameters": {"a": 1.0},                      (optional)
      "metric": [{"i": 1, "j": 1, "expr": "1"}, {"i": 2, "j": 2, "expr": "sin(th)^2"}],
      "boundary": ["lower"],                          (optional; true means ["lower"])
      "volume_weight": "sin(th)",                     (optional)
      "perturbation": [{"i": 1, "j": 1, "expr": "..."}],  (optional)
      "euler_characteristic": 2,                      (optional)
      "quadrature_order": 24                          (optional)
    }

Metric and perturbation entries use 1-based upper-triangle indices; omitted
entries are zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .errors import CurvlabError, DomainError
from .expr import parse_expression
from .geometry import MetricChart
from .tensor_core import Signature

CATALOG_PACKAGE = "curvlab.specs"


class SpecError(DomainError):
    """A spec document is malformed."""


@dataclass(frozen=True)
class ManifoldSpec:
    name: str
    dim: int
    signature: tuple[int, ...]
    coordinates: tuple[str, ...]
    domain: tuple[tuple[float, float], ...]
    metric: tuple[tuple[int, int, str], ...]
    boundary: tuple[str, ...] = ()
    parameters: Mapping[str, float] = field(default_factory=dict)
    volume_weight: str | None = None
    perturbation: tuple[tuple[int, int, str], ...] = ()
    euler_characteristic: int | None = None
    quadrature_order: int | None = None

    def __post_init__(self):
        m = self.dim
        if not isinstance(m, int) or m < 1:
            raise SpecError("dim must be a positive integer")
        if len(self.signature) != m or len(self.coordinates) != m or len(self.domain) != m:
            raise SpecError("signature, coordinates and domain must each have dim entries")
        for kind, entries in (("metric", self.metric), ("perturbation", self.perturbation)):
            seen = set()
            for i, j, _ in entries:
                if not (1 <= i <= j <= m):
                    raise SpecError(f"{kind} entry ({i},{j}) must satisfy 1 <= i <= j <= {m}")
                if (i, j) in seen:
                    raise SpecError(f"duplicate {kind} entry ({i},{j})")
                seen.add((i, j))
            if len(entries) > m * (m + 1) // 2:
                raise SpecError(f"too many {kind} entries")
        names = list(self.coordinates)
        for _, _, src in self.metric + self.perturbation:
            parse_expression(src, names, self.parameters)
        if self.volume_weight is not None:
            parse_expression(self.volume_weight, names, self.parameters)

    # -- conversion ------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ManifoldSpec":
        try:
            boundary = data.get("boundary", ())
            if boundary is True:
                boundary = ("lower",)
            elif boundary in (False, None):
                boundary = ()
            return cls(
                name=str(data["name"]),
                dim=int(data["dim"]),
                signature=tuple(int(s) for s in data["signature"]),
                coordinates=tuple(str(c) for c in data["coordinates"]),
                domain=tuple((float(a), float(b)) for a, b in data["domain"]),
                metric=_entries(data["metric"]),
                boundary=tuple(boundary),
                parameters={str(k): float(v) for k, v in data.get("parameters", {}).items()},
                volume_weight=data.get("volume_weight"),
                perturbation=_entries(data.get("perturbation", [])),
                euler_characteristic=data.get("euler_characteristic"),
                quadrature_order=data.get("quadrature_order"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, CurvlabError):
                raise
            raise SpecError(f"malformed spec: {exc!r}") from exc

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "name": self.name,
            "dim": self.dim,
            "signature": list(self.signature),
            "coordinates": list(self.coordinates),
            "domain": [list(d) for d in self.domain],
        }
        if self.parameters:
            out["parameters"] = dict(self.parameters)
        out["metric"] = [{"i": i, "j": j, "expr": e} for i, j, e in self.metric]
        if self.boundary:
            out["boundary"] = list(self.boundary)
        if self.volume_weight is not None:
            out["volume_weight"] = self.volume_weight
        if self.perturbation:
            out["perturbation"] = [{"i": i, "j": j, "expr": e} for i, j, e in self.perturbation]
        if self.euler_characteristic is not None:
            out["euler_characteristic"] = self.euler_characteristic
        if self.quadrature_order is not None:
            out["quadrature_order"] = self.quadrature_order
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ManifoldSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise SpecError("spec must be a JSON object")
        return cls.from_dict(data)

    def _parse(self, src: str):
        return parse_expression(src, list(self.coordinates), self.parameters)

    def to_chart(self) -> MetricChart:
        entries = {(i, j): self._parse(e) for i, j, e in self.metric}
        weight = None if self.volume_weight is None else self._parse(self.volume_weight)
        return MetricChart.from_entries(
            self.coordinates,
            self.domain,
            entries,
            Signature(self.signature),
            boundary=self.boundary,
            volume_weight=weight,
            name=self.name,
            euler_characteristic=self.euler_characteristic,
        )

    def perturbation_entries(self) -> dict[tuple[int, int], object]:
        if not self.perturbation:
            raise SpecError(f"spec {self.name} has no perturbation entries")
        return {(i, j): self._parse(e) for i, j, e in self.perturbation}


def _entries(raw) -> tuple[tuple[int, int, str], ...]:
    out = []
    for item in raw:
        out.append((int(item["i"]), int(item["j"]), str(item["expr"])))
    return tuple(out)


def catalog_names() -> list[str]:
    root = resources.files(CATALOG_PACKAGE)
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_spec(ref: str | Path) -> ManifoldSpec:
    """Load a spec from a file path, or from the packaged catalog by name (with or without .json)."""
    path = Path(ref)
    if path.is_file():
        return ManifoldSpec.loads(path.read_text(encoding="utf-8"))
    name = path.name[:-5] if path.name.endswith(".json") else path.name
    if str(path.parent) in ("", ".") and name in catalog_names():
        text = resources.files(CATALOG_PACKAGE).joinpath(name + ".json").read_text(encoding="utf-8")
        return ManifoldSpec.loads(text)
    raise SpecError(f"no spec file or catalog entry named {ref!s}")


def load_chart(ref: str | Path) -> MetricChart:
    return load_spec(ref).to_chart()
