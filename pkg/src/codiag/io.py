"""Model files, DOT export and JSON reports.

Model grammar (one declaration per line, ``#`` starts a comment)::

    states 0 1 2
    init 0
    sites 2
    event a obs 1 2
    event f fail          # failure class defaults to F
    event g fail G
    event u               # unobservable everywhere
    trans 0 a 1 0.5
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .automaton import EventDecl, StochasticAutomaton, Transition
from .codiagnoser import EPS, Codiagnoser, CodiagState
from .observer import LogicalDiagnoser, label_str, ordered
from .stochastic import StochasticDiagnoser

DEFAULT_FAILURE_CLASS = "F"
KEYWORDS = ("states", "init", "sites", "event", "trans")


class ModelError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)


class ParseError(ModelError):
    pass


class SemanticError(ModelError):
    pass


def _tokens(line):
    """(column, token) pairs, columns 1-based."""
    out = []
    i = 0
    while i < len(line):
        if line[i].isspace():
            i += 1
            continue
        j = i
        while j < len(line) and not line[j].isspace():
            j += 1
        out.append((i + 1, line[i:j]))
        i = j
    return out


def parse_model(text: str) -> StochasticAutomaton:
    states = None
    initial = None
    sites = None
    events = {}
    event_pos = {}
    transitions = []
    trans_pos = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        col, key = toks[0]
        args = toks[1:]
        if key not in KEYWORDS:
            raise ParseError(f"unknown keyword {key!r}", lineno, col)

        if key == "states":
            if states is not None:
                raise SemanticError("states declared twice", lineno, col)
            if not args:
                raise ParseError("states needs at least one id", lineno, col)
            ids = [t for _, t in args]
            if len(set(ids)) != len(ids):
                raise SemanticError("duplicate state id", lineno, col)
            states = ids
        elif key == "init":
            if len(args) != 1:
                raise ParseError("init takes exactly one state id", lineno, col)
            if initial is not None:
                raise SemanticError("init declared twice", lineno, col)
            initial = (args[0][1], lineno, args[0][0])
        elif key == "sites":
            if len(args) != 1:
                raise ParseError("sites takes exactly one count", lineno, col)
            try:
                sites = int(args[0][1])
            except ValueError:
                raise ParseError(f"bad site count {args[0][1]!r}", lineno, args[0][0]) from None
            if sites < 1:
                raise SemanticError("sites must be >= 1", lineno, args[0][0])
        elif key == "event":
            events_arg = _parse_event(args, lineno, col)
            name = events_arg[0]
            if name in events:
                raise SemanticError(f"event {name!r} declared twice", lineno, args[0][0])
            events[name] = events_arg
            event_pos[name] = (lineno, args[0][0])
        else:
            if len(args) != 4:
                raise ParseError("trans takes: <src> <event> <dst> <prob>", lineno, col)
            (_, src), (_, ev), (_, dst), (pcol, ptxt) = args
            try:
                prob = float(ptxt)
            except ValueError:
                raise ParseError(f"bad probability {ptxt!r}", lineno, pcol) from None
            transitions.append(Transition(src, ev, dst, prob))
            trans_pos.append((lineno, [c for c, _ in args]))

    if states is None:
        raise SemanticError("missing 'states' declaration")
    if initial is None:
        raise SemanticError("missing 'init' declaration")
    if sites is None:
        sites = 1
    known = set(states)
    if initial[0] not in known:
        raise SemanticError(f"undeclared state {initial[0]!r}", initial[1], initial[2])

    decls = []
    for name, (_, obs, cls, obs_cols) in events.items():
        for s, c in zip(obs, obs_cols):
            if not 1 <= s <= sites:
                raise SemanticError(f"site {s} out of range 1..{sites}", event_pos[name][0], c)
        if cls is not None and obs:
            raise SemanticError(f"failure event {name!r} cannot be observable", *event_pos[name])
        decls.append(EventDecl(name, frozenset(obs), cls))

    seen = set()
    for t, (lineno, cols) in zip(transitions, trans_pos):
        for value, c in ((t.source, cols[0]), (t.target, cols[2])):
            if value not in known:
                raise SemanticError(f"undeclared state {value!r}", lineno, c)
        if t.event not in events:
            raise SemanticError(f"undeclared event {t.event!r}", lineno, cols[1])
        if not 0.0 < t.probability <= 1.0:
            raise SemanticError(f"probability {t.probability} outside (0, 1]", lineno, cols[3])
        if (t.source, t.event) in seen:
            raise SemanticError(
                f"second transition for ({t.source}, {t.event})", lineno, cols[0]
            )
        seen.add((t.source, t.event))

    return StochasticAutomaton(tuple(states), initial[0], tuple(decls), tuple(transitions), sites)


def _parse_event(args, lineno, col):
    if not args:
        raise ParseError("event needs an id", lineno, col)
    name = args[0][1]
    obs, obs_cols, cls = [], [], None
    mode = None
    for c, tok in args[1:]:
        if tok == "obs":
            mode = "obs"
        elif tok == "fail":
            mode = "fail"
            cls = DEFAULT_FAILURE_CLASS
        elif mode == "obs":
            try:
                obs.append(int(tok))
            except ValueError:
                raise ParseError(f"bad site id {tok!r}", lineno, c) from None
            obs_cols.append(c)
        elif mode == "fail" and cls == DEFAULT_FAILURE_CLASS:
            cls = tok
            mode = None
        else:
            raise ParseError(f"unexpected token {tok!r}", lineno, c)
    return name, obs, cls, obs_cols


def format_model(automaton: StochasticAutomaton) -> str:
    lines = [
        "states " + " ".join(automaton.states),
        f"init {automaton.initial}",
        f"sites {automaton.sites}",
    ]
    for e in automaton.events:
        parts = ["event", e.id]
        if e.observability:
            parts += ["obs"] + [str(s) for s in sorted(e.observability)]
        if e.failure_class is not None:
            parts += ["fail", e.failure_class]
        lines.append(" ".join(parts))
    for t in automaton.transitions:
        lines.append(f"trans {t.source} {t.event} {t.target} {t.probability!r}")
    return "\n".join(lines) + "\n"


# -- DOT ---------------------------------------------------------------------

def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dot_estimate(estimate) -> str:
    return "{" + ",".join(f"({q},{label_str(lab)})" for q, lab in ordered(estimate)) + "}"


def _digraph(name, nodes, edges, initial) -> str:
    """nodes: [(id, label)], edges: [(src id, dst id, label)]"""
    out = [f"digraph {_quote(name)} {{", "  rankdir=LR;", "  node [shape=box];"]
    out.append('  __start [shape=point, label=""];')
    for nid, label in nodes:
        out.append(f"  {nid} [label={_quote(label)}];")
    out.append(f"  __start -> {initial};")
    for a, b, label in edges:
        out.append(f"  {a} -> {b} [label={_quote(label)}];")
    out.append("}")
    return "\n".join(out) + "\n"


def _fmt_matrix(m) -> str:
    return "[" + "; ".join(" ".join(f"{v:.6g}" for v in row) for row in m) + "]"


def export_dot(machine, name: str | None = None) -> str:
    if isinstance(machine, StochasticAutomaton):
        ids = {q: f"s{i}" for i, q in enumerate(machine.states)}
        nodes = [(ids[q], q) for q in machine.states]
        edges = [
            (ids[t.source], ids[t.target], f"({t.event}, {t.probability:g})")
            for t in machine.transitions
        ]
        return _digraph(name or "plant", nodes, edges, ids[machine.initial])

    if isinstance(machine, StochasticDiagnoser):
        logical = machine.logical
        ids = {x: f"x{i}" for i, x in enumerate(logical.states)}
        nodes = [(ids[x], dot_estimate(x)) for x in logical.states]
        edges = [
            (ids[x], ids[y], f"{e} {_fmt_matrix(machine.matrices[(x, e)])}")
            for x, e, y in logical.edges()
        ]
        return _digraph(name or f"site{machine.site}", nodes, edges, ids[logical.initial])

    if isinstance(machine, LogicalDiagnoser):
        ids = {x: f"x{i}" for i, x in enumerate(machine.states)}
        nodes = [(ids[x], dot_estimate(x)) for x in machine.states]
        edges = [(ids[x], ids[y], e) for x, e, y in machine.edges()]
        return _digraph(name or "diagnoser", nodes, edges, ids[machine.initial])

    if isinstance(machine, Codiagnoser):
        ids = {s: f"t{i}" for i, s in enumerate(machine.states)}
        nodes = [(ids[s], codiag_state_label(s)) for s in machine.states]
        edges = [(ids[s], ids[t], e.render("ε")) for s, e, t in machine.edges()]
        return _digraph(name or "codiagnoser", nodes, edges, ids[machine.initial])

    raise TypeError(f"cannot render {type(machine).__name__}")


def codiag_state_label(state: CodiagState) -> str:
    parts = [state.global_estimate, *state.local_estimates]
    return "(" + ", ".join(dot_estimate(x) for x in parts) + ")"


# -- JSON report ---------------------------------------------------------------

def estimate_json(estimate) -> list:
    return [[q, label_str(lab)] for q, lab in ordered(estimate)]


def codiag_state_json(state: CodiagState) -> dict:
    return {
        "global": estimate_json(state.global_estimate),
        "local": [estimate_json(x) for x in state.local_estimates],
    }


def diagnoser_json(sd: StochasticDiagnoser) -> dict:
    logical = sd.logical
    index = {x: i for i, x in enumerate(logical.states)}
    return {
        "site": sd.site,
        "observable": sorted(sd.mask.observable),
        "states": [estimate_json(x) for x in logical.states],
        "transitions": [
            {
                "source": index[x],
                "event": e,
                "target": index[y],
                "matrix": sd.matrices[(x, e)].tolist(),
            }
            for x, e, y in logical.edges()
        ],
    }


def codiagnoser_json(codiag: Codiagnoser) -> dict:
    index = codiag.index
    glob = codiag.global_diagnoser
    gindex = {x: i for i, x in enumerate(glob.states)}
    return {
        "global_diagnoser": {
            "observable": sorted(glob.mask.observable),
            "states": [estimate_json(x) for x in glob.states],
            "transitions": [[gindex[x], e, gindex[y]] for x, e, y in glob.edges()],
        },
        "local_diagnosers": [diagnoser_json(sd) for sd in codiag.local],
        "codiagnoser": {
            "states": [codiag_state_json(s) for s in codiag.states],
            "transitions": [[index[s], e.render(EPS), index[t]] for s, e, t in codiag.edges()],
        },
    }


@dataclass
class Report:
    tool: str
    version: str
    model: str
    codiagnosable: bool
    verdicts: list = field(default_factory=list)
    machines: dict = field(default_factory=dict)
    decay: dict = field(default_factory=dict)
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, ensure_ascii=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls(**json.loads(text))


def verdict_json(verdict, codiag: Codiagnoser) -> dict:
    cycle = None
    if verdict.witness_cycle:
        cycle = [
            {"state": codiag.index[s], "event": e.render(EPS)} for s, e in verdict.witness_cycle
        ]
    return {
        "failure_class": verdict.failure_class,
        "codiagnosable": verdict.codiagnosable,
        "witness_cycle": cycle,
        "per_site_centralized": list(verdict.per_site_centralized),
        "qualifying_states": [codiag.index[s] for s in verdict.qualifying],
    }


def curves_json(curves: dict) -> dict:
    out = {}
    for seed, curve in curves.items():
        key = " ".join(seed)
        out[key] = {
            "per_site": {str(j): [[n, p] for n, p in pts] for j, pts in curve.per_site.items()},
            "min_envelope": [[n, p] for n, p in curve.min_envelope],
        }
        if curve.std_error:
            out[key]["std_error"] = {
                str(j): [[n, e] for n, e in pts] for j, pts in curve.std_error.items()
            }
    return out


def curves_csv(curves: dict, header: bool = True) -> str:
    rows = ["seed,site,n,probability"] if header else []
    for seed, curve in curves.items():
        for j, pts in curve.per_site.items():
            for n, p in pts:
                rows.append(f"{' '.join(seed)},{j},{n},{p!r}")
    return "".join(r + "\n" for r in rows)
