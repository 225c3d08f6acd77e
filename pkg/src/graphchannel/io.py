"""File formats: instance/kernel/graph JSON, DIMACS CNF, result CSV and manifests."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .engine import PlantedInstance
from .hypergraphs import Hypergraph
from .kernels import Kernel


class FormatError(ValueError):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def instance_to_dict(inst: PlantedInstance, kernel_spec: str | None = None) -> dict:
    kernel = inst.kernel.to_dict()
    if kernel_spec:
        kernel["spec"] = kernel_spec
    return {
        "graph": inst.graph.to_dict(),
        "kernel": kernel,
        "x": hex(inst.x),
        "y": [list(ys) for ys in inst.y],
    }


def instance_from_dict(data: Mapping) -> PlantedInstance:
    try:
        graph = Hypergraph.from_dict(data["graph"])
        kernel = Kernel.from_dict(data["kernel"])
        x = int(data["x"], 16)
        y = tuple(tuple(int(s) for s in ys) for ys in data["y"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed instance: {exc}") from exc
    return PlantedInstance(graph, kernel, x, y)


def read_json(path: str | Path):
    with open(path) as fh:
        return json.load(fh)


def write_text(path: str | Path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# DIMACS


def _literal(v: int, positive: bool) -> str:
    return str(v + 1) if positive else str(-(v + 1))


def to_dimacs(inst: PlantedInstance) -> str:
    """Export a planted CSP instance.

    k-SAT: one clause per edge copy; literal j is positive iff bit j of the
    observed pattern is 1, so the clause forbids exactly x[I] = complement(y).
    NAE-SAT: two clauses per copy forbidding x[I] = y and x[I] = complement(y).
    XOR-SAT: one ``x`` line per copy whose literals XOR to true iff
    parity(x[I]) = y.  The header records the planted assignment in hex.
    """
    tag = inst.kernel.tag
    if not inst.kernel.is_csp:
        raise FormatError(f"{tag} kernels have no DIMACS form")
    lines = []
    for (subset, _), ys in zip(inst.graph.edges, inst.y):
        for y in ys:
            if tag == "ksat":
                lits = [_literal(v, (y >> j) & 1) for j, v in enumerate(subset)]
                lines.append(" ".join(lits) + " 0")
            elif tag == "nae":
                lines.append(" ".join(_literal(v, not (y >> j) & 1) for j, v in enumerate(subset)) + " 0")
                lines.append(" ".join(_literal(v, (y >> j) & 1) for j, v in enumerate(subset)) + " 0")
            else:
                lits = [_literal(v, True) for v in subset]
                if y == 0:
                    lits[0] = _literal(subset[0], False)
                lines.append("x" + " ".join(lits) + " 0")
    header = [
        f"c planted {inst.x:x}",
        f"c kernel {tag}:{inst.kernel.k}",
        f"p cnf {inst.graph.n} {len(lines)}",
    ]
    return "\n".join(header + lines) + "\n"


def parse_dimacs(text: str) -> tuple[int, list[tuple[str, list[int]]], int | None]:
    """Return (num_vars, constraints, planted); each constraint is ("or" | "xor", literals)."""
    nvars, planted, out = None, None, []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) == 3 and parts[1] == "planted":
                planted = int(parts[2], 16)
            continue
        if line.startswith("p"):
            nvars = int(line.split()[2])
            continue
        kind = "xor" if line.startswith("x") else "or"
        lits = [int(t) for t in line.lstrip("x").split()]
        if not lits or lits[-1] != 0:
            raise FormatError(f"constraint line not terminated by 0: {raw!r}")
        out.append((kind, lits[:-1]))
    if nvars is None:
        raise FormatError("missing problem line")
    return nvars, out, planted


def check_assignment(text: str, assignment: int | None = None) -> bool:
    """True iff ``assignment`` (default: the planted one in the header) satisfies every line."""
    _, constraints, planted = parse_dimacs(text)
    x = planted if assignment is None else assignment
    if x is None:
        raise FormatError("no assignment given and no planted header")

    def value(lit):
        bit = (x >> (abs(lit) - 1)) & 1
        return bit if lit > 0 else 1 - bit

    for kind, lits in constraints:
        vals = [value(t) for t in lits]
        if kind == "or" and not any(vals):
            return False
        if kind == "xor" and sum(vals) % 2 != 1:
            return False
    return True


# ---------------------------------------------------------------------------
# results


def rows_to_csv(rows: Sequence[Mapping]) -> str:
    if not rows:
        return ""
    fields = list(rows[0].keys())
    for row in rows[1:]:
        fields += [f for f in row if f not in fields]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({f: _fmt(row.get(f, "")) for f in fields})
    return buf.getvalue()


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def content_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return "sha256:" + hashlib.sha256(blob.encode("utf-8")).hexdigest()


# settings that change where or how fast results appear, never their content
NON_RESULT_KEYS = ("out", "threads", "format")


def manifest(command: str, config: Mapping, seed: int | None, verdicts: Mapping | None = None,
             outputs: Iterable[str] = ()) -> dict:
    hashed = {k: v for k, v in config.items() if k not in NON_RESULT_KEYS}
    return {
        "command": command,
        "config": dict(config),
        "seed": seed,
        "input_hash": content_hash({"command": command, "config": hashed, "seed": seed}),
        "verdicts": dict(verdicts or {}),
        "outputs": list(outputs),
    }
