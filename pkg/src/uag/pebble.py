"""Exact pebble-game solver for bounded-variable elementary equivalence.

Two players move gamma shared pebble indices on a pair of graphs: each round
Spoiler picks a pebble and a vertex in either graph, Duplicator must answer
by placing the same pebble index in the other graph. Duplicator survives a
round when the paired placements still form a partial isomorphism (equalities
and adjacencies agree). Duplicator winning the R-round game from the empty
position is exactly "no sentence with gamma variables and quantifier depth
at most R tells the two graphs apart".

The solver is exact: alpha-beta style search over canonical configurations
(pebble indices are interchangeable, so a position is the sorted multiset of
placed pairs plus the spare-pebble count), memoized per (position, rounds).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graphs import Graph

SPOILER = "spoiler"
DUPLICATOR = "duplicator"

DEFAULT_BUDGET = 10**8


class BudgetExceeded(RuntimeError):
    """Raised when a solve explores more positions than its node budget."""


@dataclass(frozen=True)
class GameParams:
    gamma: int
    rounds: int

    def __post_init__(self):
        if self.gamma < 1:
            raise ValueError("need at least one pebble")
        if self.rounds < 0:
            raise ValueError("rounds must be nonnegative")


@dataclass(frozen=True)
class GameConfig:
    """Indexed partial placement: entry 0 means the pebble is off the board."""

    placement_g: tuple
    placement_h: tuple
    rounds_left: int

    def __post_init__(self):
        if len(self.placement_g) != len(self.placement_h):
            raise ValueError("placements must cover the same pebbles")
        for x, y in zip(self.placement_g, self.placement_h):
            if (x == 0) != (y == 0):
                raise ValueError("a pebble must be placed in both graphs or neither")
        if self.rounds_left < 0:
            raise ValueError("rounds_left must be nonnegative")

    @property
    def gamma(self) -> int:
        return len(self.placement_g)

    def pairs(self) -> tuple:
        """Placed (x, y) pairs in canonical (sorted) order."""
        return tuple(
            sorted(
                (x, y)
                for x, y in zip(self.placement_g, self.placement_h)
                if x != 0
            )
        )

    def place(self, pebble: int, x: int, y: int) -> "GameConfig":
        """New config with the 1-based pebble moved to (x, y), one round used."""
        if not 1 <= pebble <= self.gamma:
            raise ValueError(f"pebble {pebble} out of range 1..{self.gamma}")
        pg = list(self.placement_g)
        ph = list(self.placement_h)
        pg[pebble - 1] = x
        ph[pebble - 1] = y
        return GameConfig(tuple(pg), tuple(ph), max(self.rounds_left - 1, 0))


def empty_config(params: GameParams) -> GameConfig:
    return GameConfig((0,) * params.gamma, (0,) * params.gamma, params.rounds)


def partial_iso(cfg: GameConfig, g: Graph, h: Graph) -> bool:
    """True when the placed pairs respect equality and adjacency both ways."""
    pairs = cfg.pairs()
    for i, (x1, y1) in enumerate(pairs):
        for x2, y2 in pairs[i + 1 :]:
            if (x1 == x2) != (y1 == y2):
                return False
            if g.adjacent(x1, x2) != h.adjacent(y1, y2):
                return False
    return True


@dataclass(frozen=True)
class WitnessNode:
    """One Spoiler move of a winning strategy: replies map each Duplicator
    answer to either "dead" or the follow-up node."""

    side: int  # 1 = move made in g, 2 = in h
    vertex: int
    replaced: tuple | None  # the (x, y) pair picked up, None for a spare pebble
    replies: dict = field(hash=False, compare=False, default_factory=dict)


@dataclass(frozen=True)
class GameOutcome:
    winner: str
    nodes: int
    witness: WitnessNode | None = None


class _Solver:
    def __init__(self, g: Graph, h: Graph, budget: int):
        self.g = g
        self.h = h
        self.budget = budget
        self.memo: dict = {}
        self.nodes = 0

    def _alive_with(self, pairs: tuple, x: int, y: int) -> bool:
        """Do the already-consistent pairs stay consistent with (x, y) added?"""
        for px, py in pairs:
            if (x == px) != (y == py):
                return False
            if self.g.adjacent(x, px) != self.h.adjacent(y, py):
                return False
        return True

    def _moves(self, pairs: tuple, free: int):
        """Distinct Spoiler options: (base pairs, spare left) after lifting."""
        seen = set()
        if free > 0:
            seen.add(pairs)
            yield pairs, free - 1
        for i in range(len(pairs)):
            if i > 0 and pairs[i] == pairs[i - 1]:
                continue
            base = pairs[:i] + pairs[i + 1 :]
            if base not in seen:
                seen.add(base)
                yield base, free

    def spoiler_wins(self, pairs: tuple, free: int, rounds: int) -> bool:
        """Exact value from an alive canonical position, Spoiler to move."""
        if rounds == 0:
            return False
        key = (pairs, free, rounds)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[0]
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceeded(f"solver exceeded {self.budget} positions")
        for base, nfree in self._moves(pairs, free):
            for side, mine, other in ((1, self.g, self.h), (2, self.h, self.g)):
                for v in range(1, mine.n + 1):
                    refuted = False
                    for w in range(1, other.n + 1):
                        pair = (v, w) if side == 1 else (w, v)
                        if not self._alive_ordered(base, pair):
                            continue
                        nxt = tuple(sorted(base + (pair,)))
                        if not self.spoiler_wins(nxt, nfree, rounds - 1):
                            refuted = True
                            break
                    if not refuted:
                        replaced = None
                        if nfree == free:  # a pair was lifted, not a spare used
                            replaced = self._lifted(pairs, base)
                        self.memo[key] = (True, (side, v, replaced, base, nfree))
                        return True
        self.memo[key] = (False, None)
        return False

    def _alive_ordered(self, base: tuple, pair: tuple) -> bool:
        return self._alive_with(base, pair[0], pair[1])

    @staticmethod
    def _lifted(pairs: tuple, base: tuple) -> tuple:
        rest = list(base)
        for p in pairs:
            if p in rest:
                rest.remove(p)
            else:
                return p
        raise AssertionError("base is not pairs minus one")

    def survival(self, pairs: tuple, free: int, rounds: int) -> int:
        """Largest k <= rounds such that Spoiler cannot win within k."""
        lo = 0
        for k in range(1, rounds + 1):
            if self.spoiler_wins(pairs, free, k):
                return lo
            lo = k
        return lo

    def build_witness(self, pairs: tuple, free: int, rounds: int) -> WitnessNode:
        entry = self.memo.get((pairs, free, rounds))
        if entry is None or not entry[0]:
            raise ValueError("no winning strategy recorded here")
        side, v, replaced, base, nfree = entry[1]
        other = self.h if side == 1 else self.g
        replies: dict = {}
        for w in range(1, other.n + 1):
            pair = (v, w) if side == 1 else (w, v)
            if not self._alive_ordered(base, pair):
                replies[w] = "dead"
                continue
            nxt = tuple(sorted(base + (pair,)))
            replies[w] = self.build_witness(nxt, nfree, rounds - 1)
        return WitnessNode(side=side, vertex=v, replaced=replaced, replies=replies)


def solve(
    g: Graph,
    h: Graph,
    params: GameParams,
    start: GameConfig | None = None,
    budget: int = DEFAULT_BUDGET,
    witness: bool = False,
) -> GameOutcome:
    """Exact outcome under optimal play from the start configuration."""
    if start is None:
        start = empty_config(params)
    if start.gamma != params.gamma:
        raise ValueError("start configuration has the wrong pebble count")
    solver = _Solver(g, h, budget)
    pairs = start.pairs()
    if not partial_iso(start, g, h):
        return GameOutcome(winner=SPOILER, nodes=0, witness=None)
    free = params.gamma - len(pairs)
    rounds = start.rounds_left
    if solver.spoiler_wins(pairs, free, rounds):
        node = solver.build_witness(pairs, free, rounds) if witness else None
        return GameOutcome(winner=SPOILER, nodes=solver.nodes, witness=node)
    return GameOutcome(winner=DUPLICATOR, nodes=solver.nodes, witness=None)


def equivalence_check(
    g: Graph, h: Graph, gamma: int, rounds: int, budget: int = DEFAULT_BUDGET
) -> bool:
    """True iff no gamma-variable sentence of quantifier depth <= rounds
    distinguishes g from h (Duplicator wins from the empty position)."""
    params = GameParams(gamma, rounds)
    return solve(g, h, params, budget=budget).winner == DUPLICATOR


def duplicator_best_reply(
    g: Graph,
    h: Graph,
    params: GameParams,
    cfg: GameConfig,
    move: tuple,
    budget: int = DEFAULT_BUDGET,
) -> int:
    """Best reply vertex to a Spoiler move (side, pebble, vertex).

    Picks a reply preserving Duplicator's win when one exists, otherwise one
    maximizing the number of rounds survived; ties prefer the mirror vertex,
    then the smallest label.
    """
    side, pebble, v = move
    if side not in (1, 2):
        raise ValueError("side must be 1 (first graph) or 2 (second)")
    mine = g if side == 1 else h
    other = h if side == 1 else g
    mine._check_vertex(v)
    if not 1 <= pebble <= cfg.gamma:
        raise ValueError(f"pebble {pebble} out of range")
    solver = _Solver(g, h, budget)
    idx = pebble - 1
    base_pairs = [
        (x, y)
        for i, (x, y) in enumerate(zip(cfg.placement_g, cfg.placement_h))
        if x != 0 and i != idx
    ]
    base = tuple(sorted(base_pairs))
    free_after = cfg.gamma - len(base) - 1
    rounds_after = max(cfg.rounds_left - 1, 0)
    best = None
    for w in range(1, other.n + 1):
        pair = (v, w) if side == 1 else (w, v)
        if not solver._alive_ordered(base, pair):
            score = (-1,)
        else:
            nxt = tuple(sorted(base + (pair,)))
            surv = solver.survival(nxt, free_after, rounds_after)
            full = surv == rounds_after
            score = (1 if full else 0, surv)
        mirror = w == v
        key = (score, mirror, -w)
        if best is None or key > best[0]:
            best = (key, w)
    return best[1]


def interactive_session(
    g: Graph,
    h: Graph,
    params: GameParams,
    human_side: str,
    get_line,
    put_line,
    budget: int = DEFAULT_BUDGET,
) -> list:
    """Run a full game, the human playing one side via get_line/put_line.

    Human Spoiler moves are lines "side pebble vertex"; human Duplicator
    replies are lines "vertex". Returns the transcript: one line per move,
    "round side pebble vertex", then the result line.
    """
    if human_side not in (SPOILER, DUPLICATOR):
        raise ValueError("human_side must be 'spoiler' or 'duplicator'")
    cfg = empty_config(params)
    transcript: list = []

    def read_move(prompt, parser):
        while True:
            put_line(prompt)
            line = get_line()
            if line is None:
                raise EOFError("input ended mid-game")
            try:
                return parser(line)
            except ValueError as exc:
                put_line(f"illegal move: {exc}")

    def parse_spoiler(line: str):
        parts = line.split()
        if len(parts) != 3:
            raise ValueError("expected: side pebble vertex")
        side, pebble, v = (int(p) for p in parts)
        if side not in (1, 2):
            raise ValueError("side must be 1 or 2")
        if not 1 <= pebble <= params.gamma:
            raise ValueError(f"pebble must be in 1..{params.gamma}")
        (g if side == 1 else h)._check_vertex(v)
        return side, pebble, v

    for rnd in range(1, params.rounds + 1):
        if human_side == SPOILER:
            side, pebble, v = read_move(
                f"round {rnd}: your move (side pebble vertex)", parse_spoiler
            )
        else:
            side, pebble, v = _machine_spoiler_move(g, h, params, cfg, budget)
        transcript.append(f"{rnd} {side} {pebble} {v}")
        put_line(f"round {rnd}: spoiler puts pebble {pebble} on {v} (graph {side})")

        if human_side == DUPLICATOR:
            other = h if side == 1 else g

            def parse_reply(line: str):
                w = int(line)
                other._check_vertex(w)
                return w

            w = read_move(f"round {rnd}: your reply (vertex)", parse_reply)
        else:
            w = duplicator_best_reply(g, h, params, cfg, (side, pebble, v), budget)
        x, y = (v, w) if side == 1 else (w, v)
        cfg = cfg.place(pebble, x, y)
        transcript.append(f"{rnd} {3 - side} {pebble} {w}")
        put_line(f"round {rnd}: duplicator answers {w} (graph {3 - side})")

        if not partial_iso(cfg, g, h):
            transcript.append(f"result spoiler round {rnd}")
            put_line(f"spoiler wins in round {rnd}: the placement is not a partial isomorphism")
            return transcript
    transcript.append(f"result duplicator rounds {params.rounds}")
    put_line(f"duplicator survives all {params.rounds} rounds")
    return transcript


def _machine_spoiler_move(g, h, params, cfg, budget) -> tuple:
    """Winning move when one exists, else the move hardest to answer."""
    solver = _Solver(g, h, budget)
    pairs = cfg.pairs()
    free = params.gamma - len(pairs)
    rounds = cfg.rounds_left
    if rounds > 0 and solver.spoiler_wins(pairs, free, rounds):
        side, v, replaced, base, nfree = solver.memo[(pairs, free, rounds)][1]
        pebble = _pebble_for(cfg, replaced)
        return side, pebble, v
    # no win available: minimize Duplicator's best survival
    best = None
    for base, nfree in solver._moves(pairs, free):
        replaced = None if nfree < free else solver._lifted(pairs, base)
        for side, mine, other in ((1, g, h), (2, h, g)):
            for v in range(1, mine.n + 1):
                worst = -1
                for w in range(1, other.n + 1):
                    pair = (v, w) if side == 1 else (w, v)
                    if not solver._alive_ordered(base, pair):
                        continue
                    nxt = tuple(sorted(base + (pair,)))
                    surv = solver.survival(nxt, nfree, max(rounds - 1, 0))
                    worst = max(worst, surv)
                key = (worst, side, v)
                if best is None or key < best[0]:
                    best = (key, (side, _pebble_for(cfg, replaced), v))
    return best[1]


def _pebble_for(cfg: GameConfig, replaced: tuple | None) -> int:
    """A concrete pebble index realizing a canonical move."""
    if replaced is None:
        for i, x in enumerate(cfg.placement_g):
            if x == 0:
                return i + 1
        raise AssertionError("no spare pebble")
    for i, (x, y) in enumerate(zip(cfg.placement_g, cfg.placement_h)):
        if (x, y) == replaced:
            return i + 1
    raise AssertionError("replaced pair not on the board")
