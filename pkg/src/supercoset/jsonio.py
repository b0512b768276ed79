"""JSON encoding of scalars, superfunctions, morphisms and atlases.

Scalars are ``{"re": "p/q", "im": "p/q"}``; a term is
``{"even": [exponents], "odd": [1-based odd indices], "coeff": scalar}``
with terms in graded-lex order.  Even exponents refer to the variables
shifted by the chart center, which is stored with the chart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .geometry import Morphism
from .superalg import ChartSignature, Scalar, SuperPolynomial


def scalar_json(c: Scalar) -> dict[str, str]:
    re_, im_ = c.fraction_pair()
    return {"re": f"{re_.numerator}/{re_.denominator}", "im": f"{im_.numerator}/{im_.denominator}"}


def scalar_from_json(obj: dict[str, str]) -> Scalar:
    return Scalar(Fraction(obj["re"]), Fraction(obj["im"]))


def terms_json(f: SuperPolynomial) -> list[dict[str, Any]]:
    return [
        {"even": list(exps), "odd": [j + 1 for j in odd], "coeff": scalar_json(c)} for exps, odd, c in f.terms()
    ]


def terms_from_json(sig: ChartSignature, terms: list[dict[str, Any]]) -> SuperPolynomial:
    return SuperPolynomial.from_terms(
        sig, [(t["even"], [j - 1 for j in t["odd"]], scalar_from_json(t["coeff"])) for t in terms]
    )


def chart_json(sig: ChartSignature) -> dict[str, Any]:
    return {"even": list(sig.even), "odd": list(sig.odd), "center": [scalar_json(c) for c in sig.center]}


def chart_from_json(obj: dict[str, Any]) -> ChartSignature:
    return ChartSignature(tuple(obj["even"]), tuple(obj["odd"]), tuple(scalar_from_json(c) for c in obj["center"]))


def point_json(pt: dict[str, Scalar]) -> dict[str, dict[str, str]]:
    return {k: scalar_json(v) for k, v in pt.items()}


def point_from_json(obj: dict[str, Any]) -> dict[str, Scalar]:
    return {k: scalar_from_json(v) for k, v in obj.items()}


def morphism_json(phi: Morphism) -> dict[str, Any]:
    return {
        "source": chart_json(phi.source),
        "target": chart_json(phi.target),
        "order": phi.order,
        "pullback": {n: terms_json(phi.pullback[n]) for n in phi.target.names},
    }


def morphism_from_json(obj: dict[str, Any]) -> Morphism:
    src = chart_from_json(obj["source"])
    tgt = chart_from_json(obj["target"])
    pb = {n: terms_from_json(src, obj["pullback"][n]) for n in tgt.names}
    return Morphism(src, tgt, pb, obj["order"])


def residual_json(res: dict[str, SuperPolynomial]) -> dict[str, Any]:
    """Witness map: coordinate to chart-qualified terms."""
    return {n: {"chart": chart_json(f.signature), "terms": terms_json(f)} for n, f in res.items()}


@dataclass(frozen=True, eq=False)
class AtlasRecord:
    """Serializable content of a coset atlas."""

    group: str
    order: int
    slice_chart: ChartSignature
    representatives: tuple[dict[str, Scalar], ...]
    sections: tuple[Morphism, ...]
    projections: tuple[Morphism, ...]
    overlaps: tuple[tuple[int, int, Morphism], ...]

    @classmethod
    def of(cls, atlas) -> "AtlasRecord":
        return cls(
            atlas.group.name,
            atlas.order,
            atlas.slice.chart,
            tuple(c.representative for c in atlas.charts),
            tuple(c.section for c in atlas.charts),
            tuple(c.projection for c in atlas.charts),
            tuple((t.source_chart, t.target_chart, t.morphism) for t in atlas.overlaps),
        )

    def __eq__(self, other):
        if not isinstance(other, AtlasRecord):
            return NotImplemented
        return atlas_json(self) == atlas_json(other)

    __hash__ = None


def atlas_json(atlas) -> dict[str, Any]:
    rec = atlas if isinstance(atlas, AtlasRecord) else AtlasRecord.of(atlas)
    return {
        "group": rec.group,
        "order": rec.order,
        "slice": chart_json(rec.slice_chart),
        "charts": [
            {"representative": point_json(g), "section": morphism_json(s), "projection": morphism_json(p)}
            for g, s, p in zip(rec.representatives, rec.sections, rec.projections)
        ],
        "overlaps": [{"from": i, "to": j, "transition": morphism_json(m)} for i, j, m in rec.overlaps],
    }


def atlas_from_json(obj: dict[str, Any]) -> AtlasRecord:
    charts = obj["charts"]
    return AtlasRecord(
        obj["group"],
        obj["order"],
        chart_from_json(obj["slice"]),
        tuple(point_from_json(c["representative"]) for c in charts),
        tuple(morphism_from_json(c["section"]) for c in charts),
        tuple(morphism_from_json(c["projection"]) for c in charts),
        tuple((o["from"], o["to"], morphism_from_json(o["transition"])) for o in obj["overlaps"]),
    )


def to_jsonable(value) -> Any:
    from .coset import CosetAtlas

    if isinstance(value, Scalar):
        return scalar_json(value)
    if isinstance(value, SuperPolynomial):
        return {"chart": chart_json(value.signature), "terms": terms_json(value)}
    if isinstance(value, Morphism):
        return morphism_json(value)
    if isinstance(value, (CosetAtlas, AtlasRecord)):
        return atlas_json(value)
    if hasattr(value, "to_json"):
        return value.to_json()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def export_json(value) -> str:
    """Stable UTF-8 JSON text (two-space indent, trailing newline)."""
    return json.dumps(to_jsonable(value), indent=2, ensure_ascii=False) + "\n"


def import_morphism(text: str) -> Morphism:
    return morphism_from_json(json.loads(text))


def import_atlas(text: str) -> AtlasRecord:
    return atlas_from_json(json.loads(text))
