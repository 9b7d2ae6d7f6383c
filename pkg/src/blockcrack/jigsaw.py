"""Genetic-algorithm solver for type-1 square jigsaw puzzles.

Pieces are the M x M blocks of an image; an assembly lists, for every
board cell in raster order, the index of the piece placed there.
Crossover grows a child from a single piece, preferring pieces both
parents agree on, then best buddies found in a parent, then the most
compatible free piece.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .pixels import BlockGeometry, as_image, check_permutation, merge_blocks, split_blocks

# relation r: piece b sits RIGHT / LEFT / BELOW / ABOVE piece a
RIGHT, LEFT, DOWN, UP = range(4)
OPPOSITE = (LEFT, RIGHT, UP, DOWN)
_DR = np.array([0, 0, 1, -1], dtype=np.int64)
_DC = np.array([1, -1, 0, 0], dtype=np.int64)


@dataclass(frozen=True)
class PieceSet:
    pieces: np.ndarray  # (n, M, M, 3) uint8
    cols: int
    rows: int

    def __post_init__(self):
        if self.pieces.shape[0] != self.cols * self.rows:
            raise ValueError("piece count does not match board")

    @property
    def n(self) -> int:
        return self.pieces.shape[0]

    @property
    def size(self) -> int:
        return self.pieces.shape[1]


@dataclass(frozen=True)
class CompatibilityTable:
    dissim: np.ndarray  # (4, n, n) float64; inf on the diagonal
    ranked: np.ndarray  # (4, n, n-1) int64, candidates by increasing dissimilarity
    buddy: np.ndarray  # (4, n) int64, best buddy or -1


@dataclass(frozen=True)
class GAParams:
    population: int = 1000
    generations: int = 100
    elites: int = 4
    mutation_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.elites < 1 or self.population < self.elites:
            raise ValueError("need population >= elites >= 1")
        if self.generations < 1:
            raise ValueError("need generations >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation rate must lie in [0, 1]")


@dataclass
class SolveResult:
    assembly: np.ndarray
    fitness: float
    history: list = field(default_factory=list)  # best-so-far per generation


def cut_pieces(img, block_size: int) -> PieceSet:
    img = as_image(img)
    geom = BlockGeometry.of(img, block_size)
    geom.require_exact()
    return PieceSet(split_blocks(img, geom), cols=geom.cols, rows=geom.rows)


def assemble(pieces: PieceSet, assembly) -> np.ndarray:
    a = np.asarray(assembly)
    if a.shape != (pieces.n,) or np.any(a < 0):
        raise ValueError("assembly must place a piece on every cell")
    a = check_permutation(a)
    M = pieces.size
    geom = BlockGeometry(width=pieces.cols * M, height=pieces.rows * M, block_size=M)
    return merge_blocks(pieces.pieces[a], geom)


def _to_lab(pieces: np.ndarray) -> np.ndarray:
    from skimage.color import rgb2lab

    n, M = pieces.shape[:2]
    flat = pieces.reshape(n * M, M, 3).astype(np.float64) / 255.0
    return rgb2lab(flat).reshape(n, M, M, 3)


def _border_ssd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None] - b[None, :]
    return np.einsum("abkc,abkc->ab", diff, diff)


def build_compatibility(pieces: PieceSet, color_space: str = "lab") -> CompatibilityTable:
    """Border sum of squared differences between every ordered piece pair."""
    if pieces.n < 2:
        raise ValueError("need at least two pieces")
    if color_space == "lab":
        px = _to_lab(pieces.pieces)
    elif color_space == "rgb":
        px = pieces.pieces.astype(np.float64)
    else:
        raise ValueError(f"unknown color space {color_space!r}")
    right = _border_ssd(px[:, :, -1, :], px[:, :, 0, :])
    down = _border_ssd(px[:, -1, :, :], px[:, 0, :, :])
    dissim = np.stack([right, right.T, down, down.T])
    n = pieces.n
    idx = np.arange(n)
    dissim[:, idx, idx] = np.inf

    ranked = np.argsort(dissim, axis=2, kind="stable")[:, :, : n - 1]
    best = ranked[:, :, 0]
    buddy = np.full((4, n), -1, dtype=np.int64)
    for rel in range(4):
        back = best[OPPOSITE[rel]]
        mutual = back[best[rel]] == idx
        buddy[rel, mutual] = best[rel, mutual]
    return CompatibilityTable(dissim=dissim, ranked=ranked.astype(np.int64), buddy=buddy)


def fitness(table: CompatibilityTable, assembly, cols: int, rows: int) -> float:
    """Total dissimilarity over all adjacent placed pairs (lower is better)."""
    a = check_permutation(np.asarray(assembly)).reshape(1, rows * cols)
    # same accumulation order as the solver, so values compare exactly
    return float(_fitness_all(a, np.ascontiguousarray(table.dissim[RIGHT]),
                              np.ascontiguousarray(table.dissim[DOWN]), rows, cols)[0])


# -- numba kernels ----------------------------------------------------------


@numba.njit(cache=True)
def _fitness_all(pop, right, down, rows, cols):
    out = np.empty(pop.shape[0])
    for k in range(pop.shape[0]):
        s = 0.0
        for r in range(rows):
            for c in range(cols):
                a = pop[k, r * cols + c]
                if c + 1 < cols:
                    s += right[a, pop[k, r * cols + c + 1]]
                if r + 1 < rows:
                    s += down[a, pop[k, (r + 1) * cols + c]]
        out[k] = s
    return out


@numba.njit(cache=True)
def _neighbours(chrom, rows, cols, dr, dc):
    n = rows * cols
    nb = np.full((n, 4), -1, dtype=np.int64)
    for cell in range(n):
        r, c = cell // cols, cell % cols
        a = chrom[cell]
        for d in range(4):
            rr, cc = r + dr[d], c + dc[d]
            if 0 <= rr < rows and 0 <= cc < cols:
                nb[a, d] = chrom[rr * cols + cc]
    return nb


@numba.njit(cache=True)
def _slot_score(cell, q, canvas, W, H, dissim, dr, dc):
    """Mean dissimilarity of piece ``q`` against the placed neighbours of ``cell``."""
    r, c = cell // W, cell % W
    s, m = 0.0, 0
    for e in range(4):
        r2, c2 = r + dr[e], c + dc[e]
        if 0 <= r2 < H and 0 <= c2 < W:
            a2 = canvas[r2 * W + c2]
            if a2 >= 0:
                s += dissim[e ^ 1, a2, q]
                m += 1
    return s / m


@numba.njit(cache=True)
def _evaluate_slot(cell, canvas, W, H, placed, nb1, nb2, dissim, ranked, cursor,
                   buddy, dr, dc):
    """Best (priority, score, piece) for an empty canvas cell.

    Priority 0: both parents agree; 1: best buddy present in a parent;
    2: most compatible free piece.
    """
    r, c = cell // W, cell % W
    best_prio, best_score, best_piece = 3, np.inf, -1
    for d in range(4):
        rr, cc = r + dr[d], c + dc[d]
        if rr < 0 or rr >= H or cc < 0 or cc >= W:
            continue
        a = canvas[rr * W + cc]
        if a < 0:
            continue
        rel = d ^ 1  # where the empty cell lies as seen from a
        for prio in range(3):
            if prio > best_prio:
                break
            q = -1
            if prio == 0:
                p1 = nb1[a, rel]
                if p1 >= 0 and p1 == nb2[a, rel] and not placed[p1]:
                    q = p1
            elif prio == 1:
                b = buddy[rel, a]
                if b >= 0 and not placed[b] and (nb1[a, rel] == b or nb2[a, rel] == b):
                    q = b
            else:
                # pieces are never unplaced, so the cursor only moves forward
                j = cursor[rel, a]
                while j < ranked.shape[2] and placed[ranked[rel, a, j]]:
                    j += 1
                cursor[rel, a] = j
                if j < ranked.shape[2]:
                    q = ranked[rel, a, j]
            if q < 0:
                continue
            s = _slot_score(cell, q, canvas, W, H, dissim, dr, dc)
            if prio < best_prio or s < best_score or (s == best_score and q < best_piece):
                best_prio, best_score, best_piece = prio, s, q
    return best_prio, best_score, best_piece


@numba.njit(cache=True)
def _crossover(par1, par2, start, coin, pick_piece, pick_cell, rate,
               rows, cols, dissim, ranked, buddy, dr, dc):
    n = rows * cols
    H, W = 2 * rows - 1, 2 * cols - 1
    canvas = np.full(H * W, -1, dtype=np.int64)
    placed = np.zeros(n, dtype=np.bool_)
    nb1 = _neighbours(par1, rows, cols, dr, dc)
    nb2 = _neighbours(par2, rows, cols, dr, dc)

    in_front = np.zeros(H * W, dtype=np.bool_)
    front = np.empty(H * W, dtype=np.int64)
    nfront = 0
    dirty = np.ones(H * W, dtype=np.bool_)
    c_prio = np.full(H * W, 3, dtype=np.int64)
    c_score = np.full(H * W, np.inf)
    c_piece = np.full(H * W, -1, dtype=np.int64)
    cursor = np.zeros((4, n), dtype=np.int64)

    minr, maxr, minc, maxc = rows - 1, rows - 1, cols - 1, cols - 1
    cell = (rows - 1) * W + (cols - 1)
    piece = start
    free = np.arange(n)  # free[0:nfree] are unplaced pieces
    where = np.arange(n)
    nfree = n

    for step in range(n):
        # place `piece` at `cell`
        canvas[cell] = piece
        placed[piece] = True
        i = where[piece]
        last = free[nfree - 1]
        free[i] = last
        where[last] = i
        nfree -= 1
        r, c = cell // W, cell % W
        minr, maxr = min(minr, r), max(maxr, r)
        minc, maxc = min(minc, c), max(maxc, c)
        if in_front[cell]:
            in_front[cell] = False
        for d in range(4):
            rr, cc = r + dr[d], c + dc[d]
            if 0 <= rr < H and 0 <= cc < W:
                nc = rr * W + cc
                if canvas[nc] < 0:
                    dirty[nc] = True
                    if not in_front[nc]:
                        in_front[nc] = True
                        front[nfront] = nc
                        nfront += 1
        if nfree == 0:
            break

        # compact frontier: drop filled or out-of-bounds cells
        k = 0
        for j in range(nfront):
            fc = front[j]
            if not in_front[fc]:
                continue
            fr, fcc = fc // W, fc % W
            if (max(maxr, fr) - min(minr, fr) >= rows
                    or max(maxc, fcc) - min(minc, fcc) >= cols):
                in_front[fc] = False
                continue
            if c_piece[fc] == piece:
                dirty[fc] = True
            front[k] = fc
            k += 1
        nfront = k

        if coin[step] < rate:
            j = int(pick_cell[step] * nfront)
            cell = front[min(j, nfront - 1)]
            piece = free[min(int(pick_piece[step] * nfree), nfree - 1)]
            # a mutation only overrides choices of the weakest kind
            best_prio = 3
            for j in range(nfront):
                fc = front[j]
                if dirty[fc]:
                    c_prio[fc], c_score[fc], c_piece[fc] = _evaluate_slot(
                        fc, canvas, W, H, placed, nb1, nb2, dissim, ranked, cursor, buddy, dr, dc)
                    dirty[fc] = False
                if c_prio[fc] < best_prio:
                    best_prio = c_prio[fc]
            if best_prio >= 2:
                continue

        best_cell, best_prio, best_score, best_piece = -1, 4, np.inf, -1
        for j in range(nfront):
            fc = front[j]
            if dirty[fc]:
                c_prio[fc], c_score[fc], c_piece[fc] = _evaluate_slot(
                    fc, canvas, W, H, placed, nb1, nb2, dissim, ranked, cursor, buddy, dr, dc)
                dirty[fc] = False
            p, s, q = c_prio[fc], c_score[fc], c_piece[fc]
            if p < best_prio or (p == best_prio and (
                    s < best_score or (s == best_score and fc < best_cell))):
                best_cell, best_prio, best_score, best_piece = fc, p, s, q
        cell, piece = best_cell, best_piece

    child = np.empty(n, dtype=np.int64)
    for r in range(rows):
        for c in range(cols):
            child[r * cols + c] = canvas[(minr + r) * W + (minc + c)]
    return child


@numba.njit(cache=True)
def _breed(pop, pairs, starts, coin, pick_piece, pick_cell, rate,
           rows, cols, dissim, ranked, buddy, dr, dc):
    out = np.empty((pairs.shape[0], rows * cols), dtype=np.int64)
    for k in range(pairs.shape[0]):
        out[k] = _crossover(pop[pairs[k, 0]], pop[pairs[k, 1]], starts[k],
                            coin[k], pick_piece[k], pick_cell[k], rate,
                            rows, cols, dissim, ranked, buddy, dr, dc)
    return out


# -- driver -----------------------------------------------------------------


def ga_solve(pieces: PieceSet, table: CompatibilityTable, params: GAParams = GAParams(),
             initial=None) -> SolveResult:
    """Generational GA with elitism; returns the best assembly ever seen.

    ``initial`` optionally seeds the first population with given assemblies.
    """
    n, rows, cols = pieces.n, pieces.rows, pieces.cols
    if table.dissim.shape != (4, n, n):
        raise ValueError("compatibility table does not match pieces")
    if n == 1:
        return SolveResult(np.zeros(1, dtype=np.int64), 0.0, [0.0] * params.generations)
    rng = np.random.Generator(np.random.PCG64(params.seed))
    right = np.ascontiguousarray(table.dissim[RIGHT])
    down = np.ascontiguousarray(table.dissim[DOWN])

    pop = np.stack([rng.permutation(n) for _ in range(params.population)]).astype(np.int64)
    if initial is not None:
        for k, a in enumerate(initial):
            pop[k] = check_permutation(a)
    born = np.arange(params.population)  # creation order, breaks fitness ties
    next_id = params.population
    fit = _fitness_all(pop, right, down, rows, cols)

    order = np.lexsort((born, fit))
    best = pop[order[0]].copy()
    best_fit = float(fit[order[0]])
    history = []
    n_children = params.population - params.elites
    for _ in range(params.generations):
        elite = order[: params.elites]
        # roulette wheel on inverse dissimilarity
        weights = 1.0 / np.maximum(fit, 1e-12)
        weights /= weights.sum()
        pairs = rng.choice(params.population, size=(n_children, 2), p=weights)
        starts = rng.integers(0, n, size=n_children)
        coin = rng.random((n_children, n))
        pick_piece = rng.random((n_children, n))
        pick_cell = rng.random((n_children, n))
        children = _breed(pop, pairs, starts, coin, pick_piece, pick_cell,
                          params.mutation_rate, rows, cols,
                          table.dissim, table.ranked, table.buddy, _DR, _DC)
        child_fit = _fitness_all(children, right, down, rows, cols)
        pop = np.concatenate([pop[elite], children])
        fit = np.concatenate([fit[elite], child_fit])
        born = np.concatenate([born[elite], np.arange(next_id, next_id + n_children)])
        next_id += n_children
        order = np.lexsort((born, fit))
        if fit[order[0]] < best_fit:
            best_fit = float(fit[order[0]])
            best = pop[order[0]].copy()
        history.append(best_fit)
    return SolveResult(best, best_fit, history)


def solve_image(img, block_size: int, params: GAParams = GAParams(),
                color_space: str = "lab") -> tuple[np.ndarray, SolveResult]:
    """Cut, solve and reassemble a block-scrambled image."""
    pieces = cut_pieces(img, block_size)
    if pieces.n == 1:
        res = SolveResult(np.zeros(1, dtype=np.int64), 0.0, [])
        return as_image(img).copy(), res
    table = build_compatibility(pieces, color_space)
    res = ga_solve(pieces, table, params)
    return assemble(pieces, res.assembly), res


def format_assembly(assembly, cols: int) -> str:
    lines = [f"{i % cols},{i // cols} -> {int(p)}" for i, p in enumerate(assembly)]
    return "\n".join(lines) + "\n"


def parse_assembly(text: str, cols: int, rows: int) -> np.ndarray:
    out = np.full(cols * rows, -1, dtype=np.int64)
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        coord, _, piece = line.partition("->")
        c, r = (int(v) for v in coord.split(","))
        if not (0 <= c < cols and 0 <= r < rows):
            raise ValueError(f"cell {c},{r} outside the {cols}x{rows} board")
        out[r * cols + c] = int(piece)
    return check_permutation(out)
