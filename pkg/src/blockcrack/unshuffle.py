"""Keyless recovery of the shared sub-block pixel shuffle.

Every block of the ciphertext consists of four sub-blocks shuffled with
the same position permutation.  Summed over all blocks, squared
differences between candidate positions of neighbouring sub-blocks reveal
which shuffled positions sit on the sub-block borders; the interior is
then filled greedily from within-sub-block statistics.

Positions are 0-based row-major indices into an ``h x h`` sub-block.  A
placement maps restored cell ``r = y*h + x`` (0-based) to the shuffled
position whose pixel belongs there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pixels import (
    BlockGeometry,
    GeometryError,
    as_image,
    from_subblock_pixels,
    invert_permutation,
    subblock_pixels,
)

UL, UR, LL, LR = range(4)
_BIG = np.iinfo(np.int64).max // 8


class InsufficientPositionsError(ValueError):
    pass


class PairingExhaustedError(ValueError):
    pass


@dataclass(frozen=True)
class AdjacencyTables:
    """Cross-sub-block costs.

    ``fw[p1, p2]`` sums squared differences between position ``p1`` of the
    left sub-blocks (UL, LL) and ``p2`` of the right ones (UR, LR);
    ``fh[p3, p4]`` does the same for upper (UL, UR) against lower (LL, LR).
    """

    fw: np.ndarray
    fh: np.ndarray

    @property
    def side(self) -> int:
        return int(round(self.fw.shape[0] ** 0.5))


@dataclass(frozen=True)
class WithinTables:
    """Within-sub-block costs summed over every sub-block and channel.

    The raw sums are symmetric, so ``gh`` (q right of p) and ``gv``
    (q below p) hold the same values; they are kept apart so the fill
    rules read the way they are used.
    """

    gh: np.ndarray
    gv: np.ndarray


@dataclass(frozen=True)
class CornerAssignment:
    ul: int
    ur: int
    ll: int
    lr: int
    ties: int = 0

    def __post_init__(self):
        if len({self.ul, self.ur, self.ll, self.lr}) != 4:
            raise ValueError("corner positions must be distinct")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return self.ul, self.ur, self.ll, self.lr


@dataclass(frozen=True)
class EdgePairing:
    """Greedy seam pairs.

    ``right[k]`` is a right-column position and ``left[k]`` the left-column
    position in the same row; ``up[k]`` is a top-row position and
    ``down[k]`` the bottom-row position in the same column.
    """

    right: tuple[int, ...]
    left: tuple[int, ...]
    up: tuple[int, ...]
    down: tuple[int, ...]
    ties: int = 0

    def __post_init__(self):
        n = len(self.right)
        if not (len(self.left) == len(self.up) == len(self.down) == n):
            raise ValueError("all edge families must have the same length")
        used = self.right + self.left + self.up + self.down
        if len(set(used)) != len(used):
            raise ValueError("edge positions must be distinct")

    def positions(self) -> set[int]:
        return set(self.right + self.left + self.up + self.down)


@dataclass
class SubBlockPlacement:
    side: int
    cells: np.ndarray = None
    ties: int = 0
    chain_disagreements: int = 0
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cells is None:
            self.cells = np.full(self.side * self.side, -1, dtype=np.int64)

    def put(self, x: int, y: int, pos: int) -> None:
        """Assign shuffled ``pos`` to restored cell (x, y), 0-based."""
        r = y * self.side + x
        if self.cells[r] != -1:
            raise ValueError(f"cell ({x},{y}) already assigned")
        if pos in self.assigned:
            raise ValueError(f"position {pos} already placed")
        self.cells[r] = pos

    def at(self, x: int, y: int) -> int:
        return int(self.cells[y * self.side + x])

    @property
    def assigned(self) -> set[int]:
        return {int(p) for p in self.cells if p >= 0}

    @property
    def complete(self) -> bool:
        return bool(np.all(self.cells >= 0))

    def permutation(self) -> np.ndarray:
        """Unshuffle permutation: shuffled position -> restored cell."""
        if not self.complete:
            raise ValueError("placement is incomplete")
        return invert_permutation(self.cells)

    def dump(self) -> str:
        """Text report, one ``x,y -> p`` line per cell (1-based coords)."""
        lines = [f"# side: {self.side}", f"# complete: {self.complete}",
                 f"# ties: {self.ties}",
                 f"# chain_disagreements: {self.chain_disagreements}"]
        lines += [f"# {k}: {v}" for k, v in sorted(self.notes.items())]
        h = self.side
        for r, p in enumerate(self.cells):
            lines.append(f"{r % h + 1},{r // h + 1} -> {int(p)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "SubBlockPlacement":
        side = None
        entries = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                if key.strip() == "side":
                    side = int(val)
                continue
            coord, _, pos = line.partition("->")
            x, y = (int(v) for v in coord.split(","))
            entries.append((x - 1, y - 1, int(pos)))
        if side is None:
            raise ValueError("missing side header")
        out = cls(side=side)
        for x, y, p in entries:
            if p >= 0:
                out.put(x, y, p)
        return out


# -- tables -----------------------------------------------------------------


def _features(img, block_size: int) -> np.ndarray:
    """``(4, h*h, n*3)`` int64: per quadrant, per position, all samples."""
    img = as_image(img)
    geom = BlockGeometry.of(img, block_size)
    geom.require_exact()
    sub = subblock_pixels(img, block_size).astype(np.int64)  # (n, 4, h*h, 3)
    return sub.transpose(1, 2, 0, 3).reshape(4, sub.shape[2], -1)


def _sq_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact ``sum_k (a[p,k] - b[q,k])**2`` for every (p, q)."""
    na = np.einsum("pk,pk->p", a, a)
    nb = np.einsum("qk,qk->q", b, b)
    return na[:, None] + nb[None, :] - 2 * (a @ b.T)


def build_cross_tables(img, block_size: int) -> AdjacencyTables:
    f = _features(img, block_size)
    fw = _sq_dist(f[UL], f[UR]) + _sq_dist(f[LL], f[LR])
    fh = _sq_dist(f[UL], f[LL]) + _sq_dist(f[UR], f[LR])
    return AdjacencyTables(fw=fw, fh=fh)


def build_within_tables(img, block_size: int) -> WithinTables:
    f = _features(img, block_size)
    s = f.transpose(1, 0, 2).reshape(f.shape[1], -1)
    g = _sq_dist(s, s)
    return WithinTables(gh=g, gv=g.copy())


# -- corners and edges ------------------------------------------------------


def corner_objective(tables: AdjacencyTables, p1, p2, p3, p4):
    fw, fh = tables.fw, tables.fh
    return fw[p1, p2] + fh[p1, p3] + fw[p3, p4] + fh[p2, p4]


def solve_corners(tables: AdjacencyTables) -> CornerAssignment:
    """Exhaustive minimum of the four-corner seam cost.

    ``p1`` is the lower-right corner, ``p2`` lower-left, ``p3`` upper-right
    and ``p4`` upper-left.  Ties go to the lexicographically smallest
    ``(p1, p2, p3, p4)``.
    """
    fw, fh = tables.fw, tables.fh
    L = fw.shape[0]
    if L < 4:
        raise InsufficientPositionsError(f"need at least 4 positions, got {L}")
    idx = np.arange(L)
    distinct = (
        (idx[:, None, None] != idx[None, :, None])
        & (idx[:, None, None] != idx[None, None, :])
        & (idx[None, :, None] != idx[None, None, :])
    )  # over (p2, p3, p4)
    best_val, best, n_best = None, None, 0
    for p1 in range(L):
        cost = (
            fw[p1, :][:, None, None]
            + fh[p1, :][None, :, None]
            + fw[None, :, :]  # fw[p3, p4]
            + fh[:, None, :]  # fh[p2, p4]
        )
        mask = distinct.copy()
        mask[p1, :, :] = False
        mask[:, p1, :] = False
        mask[:, :, p1] = False
        cost = np.where(mask, cost, _BIG)
        k = int(np.argmin(cost))
        val = int(cost.flat[k])
        if val >= _BIG:
            continue
        hits = int(np.count_nonzero(cost == val))
        if best_val is None or val < best_val:
            p2, p3, p4 = np.unravel_index(k, cost.shape)
            best_val, best, n_best = val, (p1, int(p2), int(p3), int(p4)), hits
        elif val == best_val:
            n_best += hits
    p1, p2, p3, p4 = best
    return CornerAssignment(ul=p4, ur=p3, ll=p2, lr=p1, ties=n_best - 1)


def _greedy_pairs(table: np.ndarray, used: set[int], count: int):
    L = table.shape[0]
    free = np.ones(L, dtype=bool)
    free[list(used)] = False
    firsts, seconds, ties = [], [], 0
    for _ in range(count):
        ok = free[:, None] & free[None, :]
        np.fill_diagonal(ok, False)
        masked = np.where(ok, table, _BIG)
        k = int(np.argmin(masked))
        val = masked.flat[k]
        if val >= _BIG:
            raise PairingExhaustedError("no free position pair left")
        ties += int(np.count_nonzero(masked == val)) - 1
        a, b = divmod(k, L)
        firsts.append(a)
        seconds.append(b)
        free[a] = free[b] = False
    return firsts, seconds, ties


def pair_edges(tables: AdjacencyTables, corners: CornerAssignment) -> EdgePairing:
    """Greedy seam pairs without replacement, horizontal seam first."""
    L = tables.fw.shape[0]
    h = tables.side
    k = h - 2
    used = set(corners.as_tuple())
    if L - len(used) < 2 * k:
        raise PairingExhaustedError("not enough free positions for horizontal pairs")
    right, left, t1 = _greedy_pairs(tables.fw, used, k)
    used |= set(right) | set(left)
    if L - len(used) < 2 * k:
        raise PairingExhaustedError("not enough free positions for vertical pairs")
    # first index of fh belongs to the upper sub-block, i.e. the bottom row
    down, up, t2 = _greedy_pairs(tables.fh, used, k)
    return EdgePairing(tuple(right), tuple(left), tuple(up), tuple(down), ties=t1 + t2)


def _chain(start: int, members: list[int], cost: np.ndarray):
    """Order ``members`` by repeatedly stepping to the cheapest unvisited one."""
    order, ties = [], 0
    remaining = list(members)
    cur = start
    while remaining:
        vals = cost[cur, remaining]
        j = int(np.argmin(vals))  # remaining is sorted, so ties -> smallest
        ties += int(np.count_nonzero(vals == vals[j])) - 1
        cur = remaining.pop(j)
        order.append(cur)
    return order, ties


def order_and_fill(
    tables: WithinTables, corners: CornerAssignment, pairs: EdgePairing
) -> SubBlockPlacement:
    h = len(pairs.left) + 2
    out = SubBlockPlacement(side=h)
    out.put(0, 0, corners.ul)
    out.put(h - 1, 0, corners.ur)
    out.put(0, h - 1, corners.ll)
    out.put(h - 1, h - 1, corners.lr)
    ties = 0

    partner_r = dict(zip(pairs.left, pairs.right))
    col, t = _chain(corners.ul, sorted(pairs.left), tables.gv)
    ties += t
    for y, p in enumerate(col, start=1):
        out.put(0, y, p)
        out.put(h - 1, y, partner_r[p])

    partner_d = dict(zip(pairs.up, pairs.down))
    row, t = _chain(corners.ul, sorted(pairs.up), tables.gh)
    ties += t
    for x, p in enumerate(row, start=1):
        out.put(x, 0, p)
        out.put(x, h - 1, partner_d[p])

    # independent right-column chain, reported only
    rcol, _ = _chain(corners.ur, sorted(pairs.right), tables.gv)
    out.chain_disagreements = sum(
        1 for y, p in enumerate(rcol, start=1) if out.at(h - 1, y) != p
    )

    free = sorted(set(range(h * h)) - out.assigned)
    for y in range(1, h - 1):
        for x in range(1, h - 1):
            vals = tables.gh[out.at(x - 1, y), free] + tables.gv[out.at(x, y - 1), free]
            j = int(np.argmin(vals))
            ties += int(np.count_nonzero(vals == vals[j])) - 1
            out.put(x, y, free.pop(j))

    out.ties = corners.ties + pairs.ties + ties
    return out


def recover_placement(img, block_size: int) -> SubBlockPlacement:
    """Run the full restoration pipeline on one encrypted image."""
    cross = build_cross_tables(img, block_size)
    corners = solve_corners(cross)
    pairs = pair_edges(cross, corners)
    placement = order_and_fill(build_within_tables(img, block_size), corners, pairs)
    placement.notes.update(
        fw_min=int(cross.fw.min()), fw_max=int(cross.fw.max()),
        fh_min=int(cross.fh.min()), fh_max=int(cross.fh.max()),
        corner_ties=corners.ties, edge_ties=pairs.ties,
    )
    return placement


def restore_subblocks(img, placement: SubBlockPlacement, block_size: int) -> np.ndarray:
    img = as_image(img)
    geom = BlockGeometry.of(img, block_size)
    geom.require_exact()
    if placement.side != geom.half:
        raise GeometryError(
            f"placement side {placement.side} does not match sub-block side {geom.half}"
        )
    if not placement.complete:
        raise ValueError("placement is incomplete")
    sub = subblock_pixels(img, block_size)
    return from_subblock_pixels(np.take(sub, placement.cells, axis=2), geom)


def placement_from_permutation(cells) -> SubBlockPlacement:
    """Wrap a full cell -> position array (e.g. the true pixel key)."""
    cells = np.asarray(cells, dtype=np.int64)
    side = int(round(cells.size ** 0.5))
    out = SubBlockPlacement(side=side)
    for r, p in enumerate(cells):
        out.put(r % side, r // side, int(p))
    return out
