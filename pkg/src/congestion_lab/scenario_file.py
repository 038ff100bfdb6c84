"""
Plain-text scenario files.

A file has the sections ``[topology]``, ``[connections]``, ``[run]`` and an
optional ``[sweep]``.  Tokens are whitespace separated and ``#`` starts a
comment.  Units are fixed: bandwidths and rates in bits/s, sizes in bits,
times in seconds, buffers and windows in packets.

::

    [topology]
    node S R D
    link S R bandwidth 1e7 delay 0.005
    link R D bandwidth 1e6 delay 0.005 buffer 20 service fifo drop tail mark 1 choke off

    [connections]
    conn c1 S D workload bulk size 8000 scheme cute window 1 param.choke_factor 0.5

    [run]
    name example
    description free text up to the end of the line
    duration 60

    [sweep]
    param run.load
    values 0.5,1.0,1.5

A ``link`` line creates a duplex link; queue settings apply to both
directions.  ``buffer`` takes ``inf``, ``mark`` takes ``off`` (never mark)
and flags take ``on``/``off``.  ``param.<name>`` passes a controller
parameter.  Every other key is a field of the link, connection or run and
unknown keys are errors.
"""

import math
import re
from dataclasses import MISSING, fields

from .scenario import (ConnSpec, LinkSpec, RunSpec, Scenario, ScenarioError, SweepSpec,
                       validate)

_DECIMAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\Z")
_INTEGER = re.compile(r"[+-]?\d+\Z")
SECTIONS = ("topology", "connections", "run", "sweep")


class ScenarioFileError(ScenarioError):
    """Parse or validation failure, located at ``line`` (1-based) when known."""

    def __init__(self, message, line=None, where=None):
        super().__init__(f"line {line}: {message}" if line else message, where)
        self.line = line
        self.reason = message


def _defaults(cls):
    out = {}
    for f in fields(cls):
        if f.default is not MISSING:
            out[f.name] = f.default
        elif f.default_factory is not MISSING:
            out[f.name] = f.default_factory()
        else:
            # required field: a zero value of its declared type
            out[f.name] = f.type()
    return out


_LINK_DEFAULTS = _defaults(LinkSpec)
_CONN_DEFAULTS = _defaults(ConnSpec)
_RUN_DEFAULTS = _defaults(RunSpec)


def _number(tok, line, key, allow_inf=False):
    if allow_inf and tok == "inf":
        return math.inf
    if not _DECIMAL.match(tok):
        raise ScenarioFileError(f"{key}: expected a decimal number, got {tok!r}", line)
    return int(tok) if _INTEGER.match(tok) else float(tok)


def _value(key, tok, default, line):
    """Convert ``tok`` to the type of the field's default value."""
    if isinstance(default, bool):
        if tok not in ("on", "off"):
            raise ScenarioFileError(f"{key}: expected on or off, got {tok!r}", line)
        return tok == "on"
    if isinstance(default, int):
        v = _number(tok, line, key)
        if not isinstance(v, int):
            raise ScenarioFileError(f"{key}: expected an integer, got {tok!r}", line)
        return v
    if isinstance(default, float):
        if key == "mark" and tok == "off":
            return math.inf
        return float(_number(tok, line, key, allow_inf=(key == "buffer")))
    return tok


def _pairs(tokens, line, what):
    if len(tokens) % 2:
        raise ScenarioFileError(f"{what}: key {tokens[-1]!r} has no value", line)
    seen = set()
    for k, v in zip(tokens[::2], tokens[1::2]):
        if k in seen:
            raise ScenarioFileError(f"{what}: key {k!r} given twice", line)
        seen.add(k)
        yield k, v


def _fields(defaults, tokens, line, what, fixed):
    kw, params = {}, {}
    for k, v in _pairs(tokens, line, what):
        if k.startswith("param.") and "params" in defaults:
            name = k[len("param."):]
            if not name:
                raise ScenarioFileError(f"{what}: empty parameter name", line)
            params[name] = _number(v, line, k)
        elif k in defaults and k not in fixed and k != "params":
            kw[k] = _value(k, v, defaults[k], line)
        else:
            raise ScenarioFileError(f"{what}: unknown key {k!r}", line)
    if "params" in defaults:
        kw["params"] = params
    return kw


class _Parsed:
    def __init__(self):
        self.nodes, self.node_lines = [], {}
        self.links, self.link_lines = [], []
        self.conns, self.conn_lines = [], []
        self.run, self.run_lines = {}, {}
        self.sweep, self.sweep_lines = {}, {}
        self.sections = {}


def _tokens(raw):
    return raw.split("#", 1)[0].split()


def _parse_lines(text):
    p = _Parsed()
    section = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        toks = _tokens(raw)
        if not toks:
            continue
        head = toks[0]
        if head.startswith("["):
            m = re.fullmatch(r"\[([a-z]+)\]", " ".join(toks))
            if not m or m.group(1) not in SECTIONS:
                raise ScenarioFileError(f"unknown section {' '.join(toks)}", ln)
            section = m.group(1)
            if section in p.sections:
                raise ScenarioFileError(f"section [{section}] given twice", ln)
            p.sections[section] = ln
            continue
        if section is None:
            raise ScenarioFileError("content before the first section", ln)
        if section == "topology":
            _topology_line(p, toks, ln)
        elif section == "connections":
            _connection_line(p, toks, ln)
        else:
            key = head
            store, lines = (p.run, p.run_lines) if section == "run" else (p.sweep, p.sweep_lines)
            if key in store:
                raise ScenarioFileError(f"key {key!r} given twice", ln)
            if section == "run" and key in ("name", "description"):
                # free text: everything after the key, comments stripped
                rest = raw.split("#", 1)[0].strip()[len(key):].strip()
                store[key] = rest
            elif len(toks) != 2:
                raise ScenarioFileError(f"{key}: expected exactly one value", ln)
            else:
                store[key] = toks[1]
            lines[key] = ln
    return p


def _topology_line(p, toks, ln):
    if toks[0] == "node":
        if len(toks) < 2:
            raise ScenarioFileError("node: expected at least one name", ln)
        for n in toks[1:]:
            p.nodes.append(n)
            p.node_lines.setdefault(n, ln)
    elif toks[0] == "link":
        if len(toks) < 3:
            raise ScenarioFileError("link: expected two node names", ln)
        kw = _fields(_LINK_DEFAULTS, toks[3:], ln, "link", fixed=("a", "b"))
        if "bandwidth" not in kw:
            raise ScenarioFileError("link: bandwidth is required", ln)
        p.links.append(LinkSpec(toks[1], toks[2], **kw))
        p.link_lines.append(ln)
    else:
        raise ScenarioFileError(f"unknown topology statement {toks[0]!r}", ln)


def _connection_line(p, toks, ln):
    if toks[0] != "conn":
        raise ScenarioFileError(f"unknown connection statement {toks[0]!r}", ln)
    if len(toks) < 4:
        raise ScenarioFileError("conn: expected an id and two node names", ln)
    kw = _fields(_CONN_DEFAULTS, toks[4:], ln, "conn", fixed=("id", "src", "dst"))
    p.conns.append(ConnSpec(toks[1], toks[2], toks[3], **kw))
    p.conn_lines.append(ln)


def _build(p):
    for sec in ("topology", "connections", "run"):
        if sec not in p.sections:
            raise ScenarioFileError(f"missing section [{sec}]")
    run_kw = {}
    name, description = None, ""
    for k, v in p.run.items():
        ln = p.run_lines[k]
        if k == "name":
            name = v
        elif k == "description":
            description = v
        elif k in _RUN_DEFAULTS:
            run_kw[k] = _value(k, v, _RUN_DEFAULTS[k], ln)
        else:
            raise ScenarioFileError(f"run: unknown key {k!r}", ln)
    if not name:
        raise ScenarioFileError("run: name is required", p.sections["run"])
    sweep = None
    if "sweep" in p.sections:
        for k in p.sweep:
            if k not in ("param", "values"):
                raise ScenarioFileError(f"sweep: unknown key {k!r}", p.sweep_lines[k])
        for k in ("param", "values"):
            if k not in p.sweep:
                raise ScenarioFileError(f"sweep: {k} is required", p.sections["sweep"])
        ln = p.sweep_lines["values"]
        raw = [v for v in p.sweep["values"].split(",")]
        if any(not v for v in raw):
            raise ScenarioFileError("values: empty entry in list", ln)
        sweep = SweepSpec(p.sweep["param"], [_number(v, ln, "values") for v in raw])
    return Scenario(name=name, nodes=p.nodes, links=p.links, conns=p.conns,
                    run=RunSpec(**run_kw), sweep=sweep, description=description)


def _locate(p, where):
    if where is None:
        return None
    kind, key = where
    if kind == "node":
        return p.node_lines.get(key)
    if kind == "link":
        return p.link_lines[key]
    if kind == "conn":
        return p.conn_lines[key]
    if kind == "run":
        return p.run_lines.get(key, p.sections.get("run"))
    if kind == "sweep":
        return p.sections.get("sweep")
    return None


def parse_scenario(text):
    """Parse and validate a scenario file; errors carry the offending line number."""
    p = _parse_lines(text)
    sc = _build(p)
    try:
        validate(sc)
    except ScenarioFileError:
        raise
    except ScenarioError as e:
        raise ScenarioFileError(str(e), _locate(p, e.where), e.where) from None
    return sc


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# -------------------------------------------------------------------- export

def _fmt(v):
    if isinstance(v, bool):
        return "on" if v else "off"
    if isinstance(v, float):
        return "inf" if v == math.inf else repr(v)
    return str(v)


def _kv(obj, skip):
    out = []
    for f in fields(obj):
        if f.name in skip:
            continue
        v = getattr(obj, f.name)
        if f.name == "mark" and v == math.inf:
            out.append("mark off")
        else:
            out.append(f"{f.name} {_fmt(v)}")
    return out


def export_scenario(sc):
    """Render ``sc`` as a scenario file that parses back to an equal scenario."""
    for text in (sc.name, sc.description):
        if "\n" in text or "#" in text:
            raise ValueError("name and description must be single-line and free of '#'")
    out = [f"# {sc.name}: {sc.description}" if sc.description else f"# {sc.name}",
           "# units: bits/s, bits, seconds; buffer, window and packets count packets", "",
           "[topology]"]
    for n in sc.nodes:
        out.append(f"node {n}")
    for ln in sc.links:
        out.append(" ".join([f"link {ln.a} {ln.b}"] + _kv(ln, ("a", "b"))))
    out += ["", "[connections]"]
    for c in sc.conns:
        parts = [f"conn {c.id} {c.src} {c.dst}"] + _kv(c, ("id", "src", "dst", "params"))
        parts += [f"param.{k} {_fmt(v)}" for k, v in sorted(c.params.items())]
        out.append(" ".join(parts))
    out += ["", "[run]", f"name {sc.name}"]
    if sc.description:
        out.append(f"description {sc.description}")
    out += _kv(sc.run, ())
    if sc.sweep is not None:
        out += ["", "[sweep]", f"param {sc.sweep.param}",
                "values " + ",".join(_fmt(v) for v in sc.sweep.values)]
    return "\n".join(out) + "\n"
