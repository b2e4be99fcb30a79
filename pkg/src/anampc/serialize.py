"""Versioned plain-text format for controllers and reduced policies.

Floats are written with ``repr`` so a dump/load round trip is exact.  One
record per line, whitespace separated::

    anampc-policy 1
    kind final
    dims 4 1
    domain 8
    <a_1 .. a_n b>
    ...
    regions 2
    region 0 3 active 0 2
    <a_1 .. a_n b>            (3 rows)
    K <row-major n_u x n_p>
    l <n_u values>
    separator qp 1.0 <a_1 .. a_n b>
    bounds 0.0 1.0
    end
"""
from __future__ import annotations

import numpy as np

from .empc import PwaController, Region
from .polykit import Polytope
from .reduce import FinalPolicy, Separator

MAGIC = "anampc-policy"
VERSION = 1


class FormatError(ValueError):
    pass


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def _poly_lines(P: Polytope) -> list[str]:
    return [_fmt(np.append(a, b)) for a, b in zip(P.A, P.b)]


def dumps(obj) -> str:
    if isinstance(obj, FinalPolicy):
        kind, n_u = "final", obj.n_u
    elif isinstance(obj, PwaController):
        kind, n_u = "pwa", obj.n_u
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    n_p = obj.domain.dim
    out = [f"{MAGIC} {VERSION}", f"kind {kind}", f"dims {n_p} {n_u}",
           f"domain {obj.domain.nrows}", *_poly_lines(obj.domain),
           f"regions {len(obj.regions)}"]
    for i, r in enumerate(obj.regions):
        act = " ".join(str(a) for a in r.active)
        out.append(f"region {i} {r.poly.nrows} active {act}".rstrip())
        out.extend(_poly_lines(r.poly))
        out.append("K " + _fmt(r.K))
        out.append("l " + _fmt(r.l))
    if kind == "final":
        sep = obj.separator
        if sep is not None:
            out.append(f"separator {sep.kind} {sep.eps!r} " + _fmt(np.append(sep.a, sep.b_off)))
        if obj.u_lower is not None:
            out.append(f"bounds {float(obj.u_lower)!r} {float(obj.u_upper)!r}")
    out.append("end")
    return "\n".join(out) + "\n"


class _Reader:
    def __init__(self, text: str):
        self.lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        self.i = 0

    def next(self) -> list[str]:
        if self.i >= len(self.lines):
            raise FormatError("unexpected end of input")
        tok = self.lines[self.i].split()
        self.i += 1
        return tok

    def expect(self, key: str) -> list[str]:
        tok = self.next()
        if tok[0] != key:
            raise FormatError(f"expected '{key}', found '{tok[0]}' on record {self.i}")
        return tok[1:]

    def floats(self, count: int) -> np.ndarray:
        tok = self.next()
        if len(tok) != count:
            raise FormatError(f"record {self.i}: expected {count} numbers, found {len(tok)}")
        return np.array([float(t) for t in tok])

    def poly(self, rows: int, n: int) -> Polytope:
        data = np.array([self.floats(n + 1) for _ in range(rows)]).reshape(rows, n + 1)
        return Polytope(data[:, :n], data[:, n])


def loads(text: str):
    rd = _Reader(text)
    head = rd.next()
    if len(head) != 2 or head[0] != MAGIC:
        raise FormatError("not a policy file")
    if int(head[1]) != VERSION:
        raise FormatError(f"unsupported version {head[1]}")
    (kind,) = rd.expect("kind")
    n_p, n_u = (int(v) for v in rd.expect("dims"))
    domain = rd.poly(int(rd.expect("domain")[0]), n_p)
    regions = []
    for _ in range(int(rd.expect("regions")[0])):
        tok = rd.expect("region")
        rows = int(tok[1])
        active = tuple(int(v) for v in tok[3:])
        poly = rd.poly(rows, n_p)
        K = np.array([float(v) for v in rd.expect("K")]).reshape(n_u, n_p)
        l = np.array([float(v) for v in rd.expect("l")])
        regions.append(Region(poly, K, l, active))
    sep, bounds = None, (None, None)
    while True:
        tok = rd.next()
        if tok[0] == "end":
            break
        if tok[0] == "separator":
            vals = np.array([float(v) for v in tok[3:]])
            sep = Separator(vals[:n_p], float(vals[n_p]), float(tok[2]), tok[1])
        elif tok[0] == "bounds":
            bounds = (float(tok[1]), float(tok[2]))
        else:
            raise FormatError(f"unknown record '{tok[0]}'")
    if kind == "pwa":
        return PwaController(tuple(regions), domain, n_u, n_p)
    if kind == "final":
        return FinalPolicy(tuple(regions), sep, bounds[0], bounds[1], domain, n_u)
    raise FormatError(f"unknown kind '{kind}'")


def dump(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def load(path):
    with open(path) as fh:
        return loads(fh.read())
