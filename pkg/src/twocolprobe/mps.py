"""Free-format MPS reading/writing and the flat metrics file."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, fields

from .errors import MpsParseError
from .model import EQ, GE, LE, build_instance
from .reductions import apply_reductions

log = logging.getLogger(__name__)

SECTIONS = ("NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA")
BOUND_TYPES = ("LO", "UP", "FX", "FR", "MI", "PL", "BV", "LI", "UI")
_NO_VALUE = ("FR", "MI", "PL", "BV")
_ROW_TYPES = {"N": None, "L": LE, "G": GE, "E": EQ}


def _parse_number(tok, lineno, path):
    try:
        val = float(tok)
    except ValueError:
        raise MpsParseError(f"malformed number {tok!r}", lineno, path) from None
    if math.isnan(val):
        raise MpsParseError(f"malformed number {tok!r}", lineno, path)
    return val


def read_mps(path):
    """Parse a free-format MPS file into a :class:`~twocolprobe.model.MipInstance`.

    Ranged rows are split in two: the original row keeps one side and a row
    named ``<row>_rng`` carrying the other side is appended after all
    original rows.  A maximization objective is negated.
    """
    path = str(path)
    name = ""
    obj_name = None
    maximize = False
    row_names, row_index, senses = [], {}, []
    free_rows = set()
    col_names, col_index, is_int = [], {}, []
    entries = []  # per column: dict row -> value
    objective = {}
    rhs = {}
    ranges = {}
    obj_offset = 0.0
    lower, upper = {}, {}
    lower_set = set()
    section = None
    in_int = False
    saw_end = False

    def column(tok):
        j = col_index.get(tok)
        if j is None:
            j = len(col_names)
            col_index[tok] = j
            col_names.append(tok)
            is_int.append(in_int)
            entries.append({})
        return j

    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            stripped = line.strip()
            if not stripped or stripped.startswith("*"):
                continue
            tokens = stripped.split()
            if not line[0].isspace():
                head = tokens[0].upper()
                if head not in SECTIONS:
                    raise MpsParseError(f"unknown section {tokens[0]!r}", lineno, path)
                section = head
                if head == "NAME":
                    name = " ".join(tokens[1:])
                elif head == "OBJSENSE" and len(tokens) > 1:
                    maximize = tokens[1].upper().startswith("MAX")
                elif head == "ENDATA":
                    saw_end = True
                    break
                elif len(tokens) > 1:
                    raise MpsParseError(f"unexpected text after {head}", lineno, path)
                continue

            if section == "OBJSENSE":
                maximize = tokens[0].upper().startswith("MAX")
            elif section == "ROWS":
                if len(tokens) != 2 or tokens[0].upper() not in _ROW_TYPES:
                    raise MpsParseError(f"bad ROWS entry {stripped!r}", lineno, path)
                kind, rname = tokens[0].upper(), tokens[1]
                if rname in row_index or rname in free_rows or rname == obj_name:
                    raise MpsParseError(f"duplicate row name {rname!r}", lineno, path)
                if kind == "N":
                    if obj_name is None:
                        obj_name = rname
                    else:
                        log.warning("%s:%d: extra free row %s ignored", path, lineno, rname)
                        free_rows.add(rname)
                    continue
                row_index[rname] = len(row_names)
                row_names.append(rname)
                senses.append(_ROW_TYPES[kind])
            elif section == "COLUMNS":
                if len(tokens) >= 3 and tokens[1].strip("'\"").upper() == "MARKER":
                    marker = tokens[2].strip("'\"").upper()
                    if marker == "INTORG":
                        in_int = True
                    elif marker == "INTEND":
                        in_int = False
                    else:
                        raise MpsParseError(f"unknown marker {tokens[2]!r}", lineno, path)
                    continue
                if len(tokens) not in (3, 5):
                    raise MpsParseError(f"bad COLUMNS entry {stripped!r}", lineno, path)
                j = column(tokens[0])
                for rname, tok in zip(tokens[1::2], tokens[2::2]):
                    val = _parse_number(tok, lineno, path)
                    if rname == obj_name:
                        objective[j] = val
                    elif rname in free_rows:
                        continue
                    elif rname in row_index:
                        i = row_index[rname]
                        if i in entries[j]:
                            raise MpsParseError(
                                f"duplicate entry for column {tokens[0]!r} in row {rname!r}",
                                lineno,
                                path,
                            )
                        entries[j][i] = val
                    else:
                        raise MpsParseError(f"unknown row {rname!r}", lineno, path)
            elif section in ("RHS", "RANGES"):
                pairs = tokens[1:] if len(tokens) % 2 else tokens
                if len(pairs) not in (2, 4):
                    raise MpsParseError(f"bad {section} entry {stripped!r}", lineno, path)
                for rname, tok in zip(pairs[0::2], pairs[1::2]):
                    val = _parse_number(tok, lineno, path)
                    if rname == obj_name and section == "RHS":
                        obj_offset = -val
                    elif rname in free_rows:
                        continue
                    elif rname in row_index:
                        (rhs if section == "RHS" else ranges)[row_index[rname]] = val
                    else:
                        raise MpsParseError(f"unknown row {rname!r}", lineno, path)
            elif section == "BOUNDS":
                btype = tokens[0].upper()
                if btype not in BOUND_TYPES:
                    raise MpsParseError(f"unknown bound type {tokens[0]!r}", lineno, path)
                rest = tokens[1:]
                if btype in _NO_VALUE:
                    # optional set name, optional (ignored) value
                    if len(rest) == 3 or (len(rest) == 2 and rest[0] not in col_index):
                        rest = rest[1:]
                    cname = rest[0] if rest else None
                    val = None
                else:
                    if len(rest) == 3:
                        rest = rest[1:]
                    if len(rest) != 2:
                        raise MpsParseError(f"bad BOUNDS entry {stripped!r}", lineno, path)
                    cname = rest[0]
                    val = _parse_number(rest[1], lineno, path)
                if cname not in col_index:
                    raise MpsParseError(f"unknown column {cname!r}", lineno, path)
                j = col_index[cname]
                if btype == "LO":
                    lower[j] = val
                    lower_set.add(j)
                elif btype == "UP":
                    if val < 0 and j not in lower_set and lower.get(j, 0.0) == 0.0:
                        log.warning(
                            "%s:%d: negative upper bound on %s with default lower bound; "
                            "lower bound set to -inf",
                            path,
                            lineno,
                            cname,
                        )
                        lower[j] = -math.inf
                    upper[j] = val
                elif btype == "FX":
                    lower[j] = upper[j] = val
                    lower_set.add(j)
                elif btype == "FR":
                    lower[j], upper[j] = -math.inf, math.inf
                    lower_set.add(j)
                elif btype == "MI":
                    lower[j] = -math.inf
                    lower_set.add(j)
                elif btype == "PL":
                    upper[j] = math.inf
                elif btype == "BV":
                    is_int[j] = True
                    lower[j], upper[j] = 0.0, 1.0
                    lower_set.add(j)
                elif btype == "LI":
                    is_int[j] = True
                    lower[j] = val
                    lower_set.add(j)
                elif btype == "UI":
                    is_int[j] = True
                    upper[j] = val
            elif section is None:
                raise MpsParseError("data line before any section", lineno, path)
            else:
                raise MpsParseError(f"unexpected data in {section} section", lineno, path)
    if not saw_end:
        log.warning("%s: missing ENDATA", path)

    m, n = len(row_names), len(col_names)
    rows = [dict() for _ in range(m)]
    for j, col in enumerate(entries):
        for i, val in col.items():
            rows[i][j] = val
    b = [rhs.get(i, 0.0) for i in range(m)]
    sense = list(senses)
    names = list(row_names)
    for i in sorted(ranges):
        r = ranges[i]
        if sense[i] == EQ and r == 0:
            continue
        if sense[i] == LE:
            other, other_rhs = GE, b[i] - abs(r)
        elif sense[i] == GE:
            other, other_rhs = LE, b[i] + abs(r)
        elif r > 0:
            sense[i], other, other_rhs = GE, LE, b[i] + r
        else:
            sense[i], other, other_rhs = LE, GE, b[i] + r
        rows.append(dict(rows[i]))
        sense.append(other)
        b.append(other_rhs)
        rname = f"{names[i]}_rng"
        while rname in row_index:
            rname += "_"
        row_index[rname] = len(names)
        names.append(rname)

    c = [objective.get(j, 0.0) for j in range(n)]
    if maximize:
        c = [-v for v in c]
        obj_offset = -obj_offset
    return build_instance(
        rows,
        sense,
        b,
        [lower.get(j, 0.0) for j in range(n)],
        [upper.get(j, math.inf) for j in range(n)],
        objective=c,
        is_integer=is_int,
        row_names=names,
        col_names=col_names,
        name=name,
        obj_offset=obj_offset,
        obj_name=obj_name or "OBJ",
    )


def _num(x):
    return format(float(x), ".17g")


def write_mps(instance, reductions, path):
    """Write ``instance`` with ``reductions`` applied (``None`` for none) as free MPS.

    Numbers carry 17 significant digits so reading the file back reproduces
    every value exactly.  Output is a pure function of its inputs.
    """
    inst = apply_reductions(instance, reductions)
    lines = [f"NAME {inst.name}" if inst.name else "NAME"]
    lines.append("ROWS")
    obj = inst.obj_name
    lines.append(f" N  {obj}")
    for i, rname in enumerate(inst.row_names):
        lines.append(f" {inst.sense[i]}  {rname}")
    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for j, cname in enumerate(inst.col_names):
        if bool(inst.is_integer[j]) != in_int:
            tag = "INTEND" if in_int else "INTORG"
            lines.append(f"    MARKER{marker}  'MARKER'  '{tag}'")
            marker += 1
            in_int = not in_int
        rows, vals = inst.matrix.cols[j]
        cj = float(inst.objective[j])
        if cj != 0.0 or not rows:
            lines.append(f"    {cname}  {obj}  {_num(cj)}")
        for i, a in zip(rows, vals):
            lines.append(f"    {cname}  {inst.row_names[i]}  {_num(a)}")
    if in_int:
        lines.append(f"    MARKER{marker}  'MARKER'  'INTEND'")
    lines.append("RHS")
    if inst.obj_offset != 0.0:
        lines.append(f"    RHS  {obj}  {_num(-inst.obj_offset)}")
    for i, rname in enumerate(inst.row_names):
        if inst.rhs[i] != 0.0:
            lines.append(f"    RHS  {rname}  {_num(inst.rhs[i])}")
    lines.append("BOUNDS")
    for j, cname in enumerate(inst.col_names):
        lo, up = float(inst.lower[j]), float(inst.upper[j])
        if lo == up:
            lines.append(f" FX BND  {cname}  {_num(lo)}")
            continue
        if lo == -math.inf and up == math.inf:
            lines.append(f" FR BND  {cname}")
            continue
        if lo == -math.inf:
            lines.append(f" MI BND  {cname}")
        elif lo != 0.0 or up < 0:
            lines.append(f" LO BND  {cname}  {_num(lo)}")
        if up != math.inf:
            lines.append(f" UP BND  {cname}  {_num(up)}")
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


TERMINATIONS = ("pair_limit", "time_limit", "effort", "exhausted")


@dataclass
class MetricsReport:
    """Counters for one probing run.

    File schema (``key=value`` per line, this order): ``status`` (ok,
    infeasible, no_pairs), ``pre_time_seconds``, ``pairs_probed``,
    ``fixings``, ``aggregations``, ``new_conflicts``, ``bound_changes``,
    ``threads``, ``terminated_by``, ``cm_truncated``, ``note``.
    """

    status: str = "ok"
    pre_time_seconds: float = 0.0
    pairs_probed: int = 0
    fixings: int = 0
    aggregations: int = 0
    new_conflicts: int = 0
    bound_changes: int = 0
    threads: int = 1
    terminated_by: str = "exhausted"
    cm_truncated: bool = False
    note: str = ""

    def __post_init__(self):
        if self.terminated_by not in TERMINATIONS:
            raise ValueError(f"terminated_by must be one of {TERMINATIONS}")
        counts = (self.pairs_probed, self.fixings, self.aggregations, self.new_conflicts,
                  self.bound_changes)
        if min(counts) < 0 or self.pre_time_seconds < 0:
            raise ValueError("metrics counts and time must be non-negative")


def write_metrics(report, path):
    with open(path, "w") as fh:
        for key, val in asdict(report).items():
            if isinstance(val, bool):
                val = str(val).lower()
            elif isinstance(val, float):
                val = repr(val)
            fh.write(f"{key}={val}\n")


def read_metrics(path):
    types = {f.name: f.type for f in fields(MetricsReport)}
    kw = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            key, _, val = line.partition("=")
            if key not in types:
                raise ValueError(f"unknown metrics key {key!r}")
            t = types[key]
            if t == "bool":
                kw[key] = val == "true"
            elif t == "int":
                kw[key] = int(val)
            elif t == "float":
                kw[key] = float(val)
            else:
                kw[key] = val
    return MetricsReport(**kw)


def write_infeasibility_report(path, reason):
    with open(path, "w") as fh:
        fh.write("INFEASIBLE\n")
        fh.write(f"reason: {reason}\n")
