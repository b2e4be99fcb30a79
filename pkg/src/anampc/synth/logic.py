"""Two-level logic minimization (Quine-McCluskey) for the MUX select lines.

The inputs are ``s`` (separator sign, when both bounds are reachable) and the
region flags ``r_1 .. r_n``.  Channel ``i < n`` carries region ``i``'s law;
the bound channels follow, lower first.  More than one active region flag
cannot happen away from shared facets, so those rows are don't-cares.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

MAX_INPUTS = 12

# an implicant is a tuple over inputs: 1, 0 or None (input absent)
Implicant = tuple


def _combine(a: Implicant, b: Implicant) -> Implicant | None:
    diff = -1
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            if x is None or y is None or diff >= 0:
                return None
            diff = i
    if diff < 0:
        return None
    return a[:diff] + (None,) + a[diff + 1:]


def _covers(imp: Implicant, m: tuple[int, ...]) -> bool:
    return all(x is None or x == v for x, v in zip(imp, m))


def prime_implicants(n: int, terms) -> list[Implicant]:
    current = {tuple(t) for t in terms}
    primes: set[Implicant] = set()
    while current:
        nxt, used = set(), set()
        cur = sorted(current, key=_order)
        for a, b in combinations(cur, 2):
            c = _combine(a, b)
            if c is not None:
                nxt.add(c)
                used.update((a, b))
        primes.update(current - used)
        current = nxt
    return sorted(primes, key=_order)


def _order(imp: Implicant):
    return tuple(2 if x is None else x for x in imp)


def _literals(imp: Implicant) -> int:
    return sum(x is not None for x in imp)


def minimum_cover(primes: list[Implicant], minterms) -> list[Implicant]:
    """Fewest implicants (then fewest literals) covering every minterm."""
    minterms = [tuple(m) for m in minterms]
    if not minterms:
        return []
    cover_sets = [frozenset(j for j, m in enumerate(minterms) if _covers(p, m)) for p in primes]
    chosen: list[int] = []
    left = set(range(len(minterms)))
    # essential primes first
    for j in range(len(minterms)):
        owners = [i for i, cs in enumerate(cover_sets) if j in cs]
        if len(owners) == 1 and owners[0] not in chosen:
            chosen.append(owners[0])
    for i in chosen:
        left -= cover_sets[i]
    rest = [i for i in range(len(primes)) if i not in chosen and cover_sets[i] & left]
    best = None
    if left:
        for k in range(1, len(rest) + 1):
            cands = []
            for combo in combinations(rest, k):
                if set().union(*(cover_sets[i] for i in combo)) >= left:
                    cands.append((sum(_literals(primes[i]) for i in combo), combo))
            if cands:
                best = min(cands)[1]
                break
            if k >= 6:  # give up on exactness; greedy completes the cover
                break
        if best is None:
            best, todo = [], set(left)
            while todo:
                i = max(rest, key=lambda i: (len(cover_sets[i] & todo), -_literals(primes[i]), -i))
                best.append(i)
                todo -= cover_sets[i]
        chosen.extend(best)
    return sorted((primes[i] for i in chosen), key=_order)


def minimize(n: int, on, dc=()) -> list[Implicant]:
    """Minimal sum of products for the on-set ``on`` with don't-cares ``dc``.

    An empty on-set gives the constant 0 (an empty sum).
    """
    if n > MAX_INPUTS:
        raise ValueError(f"at most {MAX_INPUTS} inputs")
    on = [tuple(m) for m in on]
    if not on:
        return []
    primes = prime_implicants(n, on + [tuple(m) for m in dc])
    return minimum_cover(primes, on)


def eval_sop(sop, values) -> bool:
    return any(_covers(imp, values) for imp in sop)


def render(sop, names) -> str:
    if not sop:
        return "0"
    terms = []
    for imp in sop:
        lits = [(n if x else "~" + n) for n, x in zip(names, imp) if x is not None]
        terms.append(" & ".join(lits) if lits else "1")
    if len(terms) == 1:
        return terms[0]
    return " | ".join(f"({t})" if "&" in t else t for t in terms)


@dataclass(frozen=True)
class LogicNetwork:
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    channels: tuple[str, ...]
    expressions: tuple[tuple[Implicant, ...], ...]  # one SOP per output
    table: tuple[tuple[tuple[int, ...], int | None], ...]  # (input row, channel or None = don't care)

    def select(self, values) -> int:
        code = 0
        for b, sop in enumerate(self.expressions):
            if eval_sop(sop, tuple(values)):
                code |= 1 << b
        return code

    def text(self) -> list[str]:
        return [f"{q} = {render(sop, self.inputs)}" for q, sop in zip(self.outputs, self.expressions)]

    def check(self) -> int:
        """Number of care rows where the minimized network picks the wrong channel."""
        return sum(1 for row, ch in self.table if ch is not None and self.select(row) != ch)


def select_bits(n_channels: int) -> int:
    return max(1, (n_channels - 1).bit_length())


def channel_table(n_regions: int, lower: bool, upper: bool):
    """Inputs, channel names and the select truth table for a reduced policy."""
    use_s = lower and upper
    inputs = (("s",) if use_s else ()) + tuple(f"r{i + 1}" for i in range(n_regions))
    channels = tuple(f"region{i}" for i in range(n_regions))
    if lower:
        channels += ("u_lower",)
    if upper:
        channels += ("u_upper",)
    rows = []
    for row in product((0, 1), repeat=len(inputs)):
        r = row[1:] if use_s else row
        act = [i for i, v in enumerate(r) if v]
        if len(act) == 1:
            ch = act[0]
        elif len(act) > 1:
            ch = None
        elif use_s:
            ch = n_regions + (1 if row[0] else 0)
        elif lower or upper:
            ch = n_regions
        else:
            ch = None  # outside every region with no bound channel: unreachable on the domain
        rows.append((row, ch))
    return inputs, channels, tuple(rows)


def minimize_logic(n_regions: int, lower: bool, upper: bool) -> LogicNetwork:
    inputs, channels, table = channel_table(n_regions, lower, upper)
    if len(inputs) > MAX_INPUTS:
        raise ValueError(f"at most {MAX_INPUTS} logic inputs")
    nbits = select_bits(len(channels))
    exprs = []
    for b in range(nbits):
        on = [row for row, ch in table if ch is not None and (ch >> b) & 1]
        dc = [row for row, ch in table if ch is None]
        exprs.append(tuple(minimize(len(inputs), on, dc)))
    net = LogicNetwork(inputs, tuple(f"q{b}" for b in range(nbits)), channels, tuple(exprs), table)
    if net.check():
        raise AssertionError("minimized logic disagrees with its truth table")
    return net


def logic_for_policy(policy) -> LogicNetwork:
    lower, upper = bound_channels(policy)
    return minimize_logic(len(policy.regions), lower, upper)


def bound_channels(policy) -> tuple[bool, bool]:
    """Which saturation values the policy can output."""
    sep = policy.separator
    if sep is None:
        return False, False
    if sep.kind == "constant":
        return (sep.b_off <= 0, sep.b_off > 0)
    return True, True
