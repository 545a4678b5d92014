"""Predicate vocabulary and symbolic implication over conjunctions.

Conditions are conjunctions of positive atoms drawn from a closed vocabulary.
Each atom has entity arguments (bound symbols or ?variables) and optional
ordered numeric parameters. Implication between conjunctions is atom-wise
matching under one global substitution, with per-parameter strictness rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownPredicate

# Strictness of a numeric parameter position, used by `implies`:
#   TOLERANCE: smaller is stricter (achieved <= required)
#   MINIMUM:   larger is stricter (achieved >= required)
#   TARGET:    must match the required value within the atom's companion
#              tolerance parameter (the next TOLERANCE position)
TOLERANCE = "tolerance"
MINIMUM = "minimum"
TARGET = "target"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # TOLERANCE | MINIMUM | TARGET
    unit: str  # "m" | "deg"


@dataclass(frozen=True)
class PredicateDef:
    name: str
    slots: tuple[str, ...]
    params: tuple[ParamSpec, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.slots)


def _p(name, slots, params=()):
    return PredicateDef(name, tuple(slots), tuple(ParamSpec(*p) for p in params))


# Closed vocabulary. Slots name the entity kind each argument carries.
VOCABULARY: dict[str, PredicateDef] = {
    d.name: d
    for d in [
        _p("reachable", ["object"]),
        _p("in-hand", ["object"]),
        _p("grasp-stable", ["object"]),
        _p("contact-at", ["object", "part"]),
        _p("actuated", ["object", "part"]),
        _p("state-of", ["object", "part", "state"]),
        _p(
            "aligned",
            ["object", "reference"],
            [("eps_pos", TOLERANCE, "m"), ("eps_ang", TOLERANCE, "deg")],
        ),
        _p(
            "rotated-by",
            ["object", "axis"],
            [("angle", TARGET, "deg"), ("eps_axis", TOLERANCE, "deg")],
        ),
        _p(
            "displaced-along",
            ["object", "direction"],
            [("dist", MINIMUM, "m"), ("eps_dir", TOLERANCE, "deg")],
        ),
        _p("hinge-open", ["object", "part"], [("min_angle", MINIMUM, "deg")]),
        _p(
            "inserted",
            ["object", "reference"],
            [("depth", MINIMUM, "m"), ("eps_depth", TOLERANCE, "m")],
        ),
        # constraint-monitor predicates (checked per step during a stage)
        _p("axis-compliant", ["object", "axis"], [("eps_axis", TOLERANCE, "deg")]),
        _p("clear-of", ["object", "reference"], [("eps_clear", TOLERANCE, "m")]),
        _p("on-path", ["object", "direction"], [("eps_clear", TOLERANCE, "m")]),
    ]
}


def is_variable(arg: str) -> bool:
    return isinstance(arg, str) and arg.startswith("?")


@dataclass(frozen=True)
class Atom:
    """One vocabulary predicate applied to entity args and numeric params."""

    name: str
    args: tuple[str, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        defn = VOCABULARY.get(self.name)
        if defn is None:
            raise UnknownPredicate(self.name)
        if len(self.args) != defn.arity:
            raise UnknownPredicate(
                f"{self.name} expects {defn.arity} args, got {len(self.args)}"
            )
        if len(self.params) != len(defn.params):
            raise UnknownPredicate(
                f"{self.name} expects {len(defn.params)} params, got {len(self.params)}"
            )
        for spec, value in zip(defn.params, self.params):
            v = float(value)
            if not (v == v) or v in (float("inf"), float("-inf")):
                raise UnknownPredicate(f"{self.name}.{spec.name} must be finite")
            if spec.kind == TOLERANCE and v < 0:
                raise UnknownPredicate(f"{self.name}.{spec.name} tolerance must be >= 0")

    @property
    def definition(self) -> PredicateDef:
        return VOCABULARY[self.name]

    def substitute(self, binding: dict[str, str]) -> "Atom":
        return Atom(
            self.name,
            tuple(binding.get(a, a) for a in self.args),
            self.params,
        )

    def free_variables(self) -> set[str]:
        return {a for a in self.args if is_variable(a)}

    def to_json(self) -> dict:
        return {"name": self.name, "args": list(self.args), "params": list(self.params)}

    @staticmethod
    def from_json(doc: dict) -> "Atom":
        return Atom(doc["name"], tuple(doc["args"]), tuple(float(v) for v in doc.get("params", ())))


def atom(name: str, *args: str, params: tuple[float, ...] = ()) -> Atom:
    return Atom(name, tuple(args), tuple(params))


Conjunction = tuple[Atom, ...]


def conjunction(*atoms: Atom) -> Conjunction:
    return tuple(atoms)


def _params_at_least_as_strict(achieved: Atom, required: Atom) -> bool:
    """Achieved (q-side) params must satisfy the required (p-side) params."""
    specs = achieved.definition.params
    for i, spec in enumerate(specs):
        a, r = achieved.params[i], required.params[i]
        if spec.kind == TOLERANCE:
            if a > r:
                return False
        elif spec.kind == MINIMUM:
            if a < r:
                return False
        elif spec.kind == TARGET:
            # match within the companion tolerance of the required atom
            tol = None
            for j in range(i + 1, len(specs)):
                if specs[j].kind == TOLERANCE:
                    tol = required.params[j]
                    break
            if tol is None:
                tol = 0.0
            if abs(a - r) > tol:
                return False
    return True


def _unify_args(q_atom: Atom, p_atom: Atom, subst: dict[str, str]) -> dict[str, str] | None:
    """Extend subst so p's args map onto q's args, or None on clash.

    Variables on the p side bind to q terms; bound symbols must match exactly
    (a q-side variable counts as a distinct term).
    """
    out = dict(subst)
    for q_arg, p_arg in zip(q_atom.args, p_atom.args):
        if is_variable(p_arg):
            bound = out.get(p_arg)
            if bound is None:
                out[p_arg] = q_arg
            elif bound != q_arg:
                return None
        elif p_arg != q_arg:
            return None
    return out


def implies(q: Conjunction, p: Conjunction) -> tuple[bool, dict[str, str] | None]:
    """Does achieving every atom of q guarantee every atom of p?

    True iff there is a single substitution of p's variables under which
    every p atom is covered by some q atom with the same predicate name,
    matching entity args, and params at least as strict. Returns the
    substitution on success. Backtracking over candidate q atoms; inputs
    are skill-sized (a handful of atoms), so enumeration is cheap.
    """
    for a in list(q) + list(p):
        if a.name not in VOCABULARY:  # Atom construction already guards this
            raise UnknownPredicate(a.name)

    p_atoms = list(p)

    def search(i: int, subst: dict[str, str]) -> dict[str, str] | None:
        if i == len(p_atoms):
            return subst
        need = p_atoms[i]
        for have in q:
            if have.name != need.name:
                continue
            if not _params_at_least_as_strict(have, need):
                continue
            extended = _unify_args(have, need, subst)
            if extended is not None:
                found = search(i + 1, extended)
                if found is not None:
                    return found
        return None

    result = search(0, {})
    if result is None:
        return False, None
    return True, result


def conjunction_to_json(c: Conjunction) -> list[dict]:
    return [a.to_json() for a in c]


def conjunction_from_json(docs: list[dict]) -> Conjunction:
    return tuple(Atom.from_json(d) for d in docs)
