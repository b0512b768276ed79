"""Command-line front end: ``supercoset <command> <model> [entity] [options]``.

``<model>`` is a path to a model file or the stem of a bundled corpus file;
when it is neither, it is looked up as an entity name across the corpus.
Exit status is 0 when every residual vanishes, 1 on a residual failure and
2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import action as act
from . import coset, group
from .dsl import ModelError, ModelFile, TaskDecl, format_expression, iter_corpus, parse_model
from .geometry import DEFAULT_ORDER, Morphism, ReducedSolveError, SingularDifferentialError
from .jsonio import atlas_json, export_json, morphism_json, point_json, residual_json
from .superalg import Scalar, SuperPolynomial, sp_recenter

# mathematical failures become failing reports; everything else is a usage error
ENGINE_FAILURES = (
    group.NotInvariantError,
    group.DependentGeneratorsError,
    group.NotInvertibleError,
    act.NotTransitiveError,
    coset.OverlapError,
    coset.ConsistencyError,
    coset.TransversalityError,
    SingularDifferentialError,
    ReducedSolveError,
)

COMMANDS = ("check-group", "check-action", "stabilizer", "coset-atlas", "cocycle", "equivariance")


class UsageError(ValueError):
    """Bad command line or unknown entity."""


@dataclass
class Report:
    """Outcome of one command; passes iff every residual is zero and nothing failed."""

    task: str
    command: str
    order: int
    residuals: dict[str, dict[str, SuperPolynomial]] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)
    timing: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures and not any(self.residuals.values())

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def add(self, label: str, res: dict) -> None:
        self.residuals[label] = {str(k): v for k, v in res.items()}

    def to_json(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "command": self.command,
            "status": self.status,
            "order": self.order,
            "residuals": {k: residual_json(v) for k, v in self.residuals.items()},
            "failures": list(self.failures),
            "data": self.data,
            "timing": round(self.timing, 6),
        }

    def summary(self) -> str:
        lines = [f"{self.command} {self.task} (order {self.order})"]
        for k, v in self.residuals.items():
            if v:
                first = next(iter(v.items()))
                lines.append(f"  {k}: FAIL  witness {first[0]}: {first[1]}")
            else:
                lines.append(f"  {k}: ok")
        lines += [f"  FAIL {f}" for f in self.failures]
        lines.append(f"status: {self.status}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Model loading and entity construction


def load_model(target: str) -> tuple[ModelFile, str, str | None]:
    """``(model, source description, entity implied by target)``."""
    path = Path(target)
    if path.is_file():
        return parse_model(path.read_text(encoding="utf-8")), str(path), None
    corpus = dict(iter_corpus())
    if target in corpus:
        model = parse_model(corpus[target])
        return model, f"corpus:{target}", target if target in model.names() else None
    for stem, text in corpus.items():
        model = parse_model(text)
        if target in model.names():
            return model, f"corpus:{stem}", target
    raise UsageError(f"no model file or bundled entity named {target!r}")


class Builder:
    """Turns declarations into engine objects, caching by name."""

    def __init__(self, model: ModelFile):
        self.model = model
        self._groups: dict[str, group.LieSupergroup] = {}
        self._subgroups: dict[str, group.Subsupergroup] = {}

    def group(self, name: str) -> group.LieSupergroup:
        if name not in self._groups:
            d = self.model.groups.get(name)
            if d is None:
                raise UsageError(f"unknown supergroup {name!r}")
            self._groups[name] = group.LieSupergroup.from_laws(d.name, d.even, d.odd, dict(d.identity), dict(d.mul))
        return self._groups[name]

    def ideal(self, name: str) -> tuple[group.LieSupergroup, group.IdealPresentation]:
        d = self.model.subgroups.get(name)
        if d is None:
            raise UsageError(f"unknown subgroup {name!r}")
        G = self.group(d.group)
        gens = tuple(sp_recenter(g, G.identity_point) for g in d.ideal)
        return G, group.IdealPresentation(G.chart, gens)

    def subgroup(self, name: str, order: int) -> group.Subsupergroup:
        key = f"{name}@{order}"
        if key not in self._subgroups:
            G, ideal = self.ideal(name)
            self._subgroups[key] = group.check_subsupergroup(G, ideal, order)
        return self._subgroups[key]

    def action(self, name: str) -> act.Action:
        d = self.model.actions.get(name)
        if d is None:
            raise UsageError(f"unknown action {name!r}")
        G = self.group(d.group)
        space = d.space
        src = next(iter(dict(d.mu).values())).signature
        return act.Action(d.name, G, space, Morphism(src, space, dict(d.mu)))

    def point(self, name: str, G: group.LieSupergroup) -> dict[str, Scalar]:
        if name == "e":
            return G.identity_point
        d = self.model.points.get(name)
        if d is None:
            raise UsageError(f"unknown point {name!r}")
        if d.group != G.name:
            raise UsageError(f"point {name!r} belongs to {d.group}, not {G.name}")
        return G.chart.point(dict(d.values))


def parse_assignment(text: str) -> dict[str, Scalar]:
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise UsageError(f"expected name=value, got {part!r}")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = Scalar.parse(v)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad value {v!r} for {k.strip()!r}") from None
    return out


def _entity(model: ModelFile, given: str | None, kinds: Sequence[str], command: str) -> tuple[str, str]:
    """Resolve ``(kind, name)``; with no name pick the only candidate."""
    tables = {k: getattr(model, k) for k in kinds}
    if given is not None:
        for k, t in tables.items():
            if given in t:
                return k, given
        raise UsageError(f"{command}: no {' or '.join(kinds)} named {given!r}")
    # the first kind with any candidates decides
    found = next(([(k, n) for n in t] for k, t in tables.items() if t), [])
    if len(found) != 1:
        raise UsageError(f"{command}: name one of {sorted(n for _, n in found)}")
    return found[0]


# ---------------------------------------------------------------------------
# Commands


def _gens_text(gens) -> list[str]:
    out = []
    for g in gens:
        sig = g.signature
        out.append(format_expression(sp_recenter(g, {n: 0 for n in sig.even})))
    return out


def cmd_check_group(b: Builder, name: str, opts) -> Report:
    G = b.group(name)
    rep = Report(name, "check-group", opts.order)
    axioms = group.verify_group_axioms(G, opts.order)
    for k, v in axioms.residuals.items():
        rep.add(k, v)
    lie = group.lie_superalgebra(G)
    anti, jac = lie.antisymmetry_residuals(), lie.jacobi_residuals()
    if anti:
        rep.failures.append(f"bracket not super-antisymmetric at {anti[0]}")
    if jac:
        rep.failures.append(f"Jacobi identity fails at {jac[0]}")
    rep.data = {"dimension": list(G.dim), "brackets": lie.describe()}
    return rep


def cmd_check_action(b: Builder, name: str, opts) -> Report:
    A = b.action(name)
    rep = Report(name, "check-action", opts.order)
    for k, v in act.verify_action_axioms(A, opts.order).residuals.items():
        rep.add(k, v)
    if opts.point is not None:
        x = A.space.point(opts.point)
        tr = act.transitivity_criteria(A, x, opts.order)
        if not tr.agree:
            rep.failures.append("submersion test and fundamental fields disagree")
        if tr.field_residuals:
            rep.failures.append(f"fundamental field values differ from the orbit differential: {sorted(tr.field_residuals)}")
        rep.data["point"] = point_json(x)
        rep.data["transitive"] = tr.submersion
        for r in opts.reps or ["e"]:
            g = b.point(r, A.group)
            for k, v in act.translation_identities(A, x, g).items():
                rep.add(f"translation.{k}[{r}]", v)
    return rep


def cmd_stabilizer(b: Builder, name: str, opts) -> Report:
    A = b.action(name)
    if opts.point is None:
        raise UsageError("stabilizer needs --point")
    rep = Report(name, "stabilizer", opts.order)
    x = A.space.point(opts.point)
    try:
        st = act.stabilizer_subgroup(A, x, opts.order)
    except act.NotTransitiveError as exc:
        rep.failures.append(str(exc))
        return rep
    except group.NotInvariantError as exc:
        rep.failures.append(str(exc))
        return rep
    for k, v in st.residuals.items():
        rep.add(k, v)
    H = st.subgroup
    rep.data = {
        "point": point_json(x),
        "generators": _gens_text(st.generators),
        "dimension": list(H.dim),
        "chart": {"even": list(H.chart.even), "odd": list(H.chart.odd)},
        "embedding": morphism_json(H.embed),
        "adapted_normal_form": morphism_json(st.adapted.normal_form),
    }
    return rep


@dataclass
class _AtlasPlan:
    task: str
    subgroup: str | None
    action: str | None
    point: dict | None
    reps: list[str]
    overlaps: list
    triples: list
    samples: list


def _plan(model: ModelFile, kind: str, name: str, opts) -> _AtlasPlan:
    if kind == "tasks":
        t: TaskDecl = model.tasks[name]
        plan = _AtlasPlan(
            name,
            t.subgroup,
            t.action,
            dict(t.point) if t.point else None,
            list(t.reps) or ["e"],
            [(i, j, dict(p)) for i, j, p in t.overlaps],
            [(i, j, k, dict(p)) for i, j, k, p in t.triples],
            [(i, j, g, dict(p)) for i, j, g, p in t.samples],
        )
    elif kind == "subgroups":
        plan = _AtlasPlan(name, name, None, None, ["e"], [], [], [])
    else:
        plan = _AtlasPlan(name, None, name, None, ["e"], [], [], [])
    if opts.reps:
        plan.reps = list(opts.reps)
        n = len(plan.reps)
        plan.overlaps = [o for o in plan.overlaps if max(o[:2]) < n]
        plan.triples = [t for t in plan.triples if max(t[:3]) < n]
        plan.samples = [s for s in plan.samples if max(s[:2]) < n]
    if opts.point is not None:
        plan.point = opts.point
    return plan


def _build_atlas(b: Builder, plan: _AtlasPlan, H, opts) -> coset.CosetAtlas:
    G = H.parent
    reps = [b.point(r, G) for r in plan.reps]
    return coset.coset_atlas(G, H, reps, plan.overlaps, opts.order)


def _atlas_checks(rep: Report, atlas: coset.CosetAtlas) -> None:
    for i in range(len(atlas.charts)):
        rep.add(f"section_projection[{i}]", atlas.section_projection_residual(i))


def cmd_coset_atlas(b: Builder, kind: str, name: str, opts) -> Report:
    plan = _plan(b.model, kind, name, opts)
    if plan.subgroup is None:
        raise UsageError(f"{name}: coset-atlas needs a subgroup")
    rep = Report(name, "coset-atlas", opts.order)
    H = b.subgroup(plan.subgroup, opts.order)
    try:
        atlas = _build_atlas(b, plan, H, opts)
    except (coset.OverlapError, coset.ConsistencyError, group.NotInvertibleError) as exc:
        rep.failures.append(str(exc))
        return rep
    _atlas_checks(rep, atlas)
    T = atlas.trivialization
    for k, v in T.round_trip_residuals().items():
        rep.add(f"trivialization.{k}", v)
    rep.data = {
        "dimension": list(atlas.dim),
        "trivialization": morphism_json(T.forward),
        "atlas": atlas_json(atlas),
    }
    return rep


def cmd_cocycle(b: Builder, kind: str, name: str, opts) -> Report:
    plan = _plan(b.model, kind, name, opts)
    if plan.subgroup is None:
        raise UsageError(f"{name}: cocycle needs a subgroup")
    rep = Report(name, "cocycle", opts.order)
    H = b.subgroup(plan.subgroup, opts.order)
    try:
        atlas = _build_atlas(b, plan, H, opts)
        triples = plan.triples or [(i, i, i, {}) for i in range(len(atlas.charts))]
        cr = coset.verify_cocycle(atlas, triples)
    except (coset.OverlapError, coset.ConsistencyError, group.NotInvertibleError) as exc:
        rep.failures.append(str(exc))
        return rep
    for (ijk, s, r) in cr.residuals:
        rep.add(f"cocycle{list(ijk)}", r)
    rep.data = {"triples": [{"charts": list(ijk), "point": point_json(s)} for ijk, s, _ in cr.residuals]}
    return rep


def cmd_equivariance(b: Builder, kind: str, name: str, opts) -> Report:
    plan = _plan(b.model, kind, name, opts)
    if plan.action is None or plan.point is None:
        raise UsageError(f"{name}: equivariance needs an action and a point")
    rep = Report(name, "equivariance", opts.order)
    A = b.action(plan.action)
    G = A.group
    try:
        st = act.stabilizer_subgroup(A, plan.point, opts.order)
        atlas = _build_atlas(b, plan, st.subgroup, opts)
        samples = [(i, b.point(g, G), s, j) for i, j, g, s in plan.samples]
        alpha = coset.coset_action_alpha(atlas, samples)
        iso = act.equivariant_iso(A, plan.point, atlas, samples)
    except (act.NotTransitiveError, group.NotInvariantError, coset.OverlapError, coset.ConsistencyError) as exc:
        rep.failures.append(str(exc))
        return rep
    for k, v in alpha.residuals.items():
        rep.add(f"alpha.{k}", v)
    for k, v in iso.residuals.items():
        rep.add(k, v)
    for i, ok in enumerate(iso.invertible):
        if not ok:
            rep.failures.append(f"beta is not invertible on chart {i}")
    rep.data = {
        "stabilizer": _gens_text(st.generators),
        "beta": [morphism_json(m) for m in iso.charts],
    }
    return rep


def run_command(model: ModelFile, command: str, entity: str | None, opts) -> Report:
    """Dispatch one command; raises :class:`UsageError` for bad input."""
    b = Builder(model)
    start = time.perf_counter()
    try:
        rep = _dispatch(b, model, command, entity, opts)
    except ENGINE_FAILURES as exc:
        rep = Report(entity or "", command, opts.order, failures=[f"{type(exc).__name__}: {exc}"])
    rep.timing = time.perf_counter() - start
    return rep


def _dispatch(b: Builder, model: ModelFile, command: str, entity: str | None, opts) -> Report:
    if command == "check-group":
        _, name = _entity(model, entity, ["groups"], command)
        rep = cmd_check_group(b, name, opts)
    elif command == "check-action":
        _, name = _entity(model, entity, ["actions"], command)
        rep = cmd_check_action(b, name, opts)
    elif command == "stabilizer":
        _, name = _entity(model, entity, ["actions"], command)
        rep = cmd_stabilizer(b, name, opts)
    elif command in ("coset-atlas", "cocycle"):
        kind, name = _entity(model, entity, ["tasks", "subgroups"], command)
        fn = cmd_coset_atlas if command == "coset-atlas" else cmd_cocycle
        rep = fn(b, kind, name, opts)
    elif command == "equivariance":
        kind, name = _entity(model, entity, ["tasks", "actions"], command)
        rep = cmd_equivariance(b, kind, name, opts)
    else:
        raise UsageError(f"unknown command {command!r}")
    return rep


# ---------------------------------------------------------------------------
# Entry point


@dataclass
class Options:
    order: int = DEFAULT_ORDER
    reps: list[str] | None = None
    point: dict[str, Scalar] | None = None


def _arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="supercoset", description="Exact checks for Lie supergroups and coset superspaces.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("model", help="model file, bundled corpus stem, or bundled entity name")
    p.add_argument("entity", nargs="?", help="entity in the model (default: the only candidate)")
    p.add_argument("--order", type=int, help=f"jet order D (default {DEFAULT_ORDER} or the task's)")
    p.add_argument("--reps", help="comma-separated point names used as chart representatives")
    p.add_argument("--point", help="reduced point of the space, e.g. y=1,eta=0")
    p.add_argument("--json", metavar="FILE", help="write the report as JSON")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _arg_parser().parse_args(argv)
    try:
        model, _, implied = load_model(args.model)
        entity = args.entity or implied
        opts = Options()
        if args.reps:
            opts.reps = [r.strip() for r in args.reps.split(",") if r.strip()]
        if args.point:
            opts.point = parse_assignment(args.point)
        task = model.tasks.get(entity) if entity else None
        if args.order is not None:
            if args.order < 0:
                raise UsageError("--order must be non-negative")
            opts.order = args.order
        elif task is not None and task.order is not None:
            opts.order = task.order
        rep = run_command(model, args.command, entity, opts)
    except ModelError as exc:
        print(f"{args.model}: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError) as exc:
        print(f"supercoset: {exc}", file=sys.stderr)
        return 2
    print(rep.summary())
    if args.json:
        Path(args.json).write_text(export_json(rep), encoding="utf-8")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
