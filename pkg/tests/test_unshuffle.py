import itertools

import numpy as np
import pytest

from blockcrack.cipher import permute_blocks, shuffle_subblocks
from blockcrack.pixels import BlockGeometry, compose, invert_permutation, make_permutation
from blockcrack.unshuffle import (
    CornerAssignment,
    EdgePairing,
    InsufficientPositionsError,
    SubBlockPlacement,
    build_cross_tables,
    build_within_tables,
    corner_objective,
    order_and_fill,
    pair_edges,
    placement_from_permutation,
    recover_placement,
    restore_subblocks,
    solve_corners,
)

from conftest import gradient_image, textured_image


def quadrants(img, M):
    """Per block: the four (h, h, 3) quadrants as int64, raster block order."""
    h = M // 2
    out = []
    for by in range(0, img.shape[0], M):
        for bx in range(0, img.shape[1], M):
            b = img[by:by + M, bx:bx + M].astype(np.int64)
            out.append((b[:h, :h], b[:h, h:], b[h:, :h], b[h:, h:]))
    return out


def naive_tables(img, M):
    h = M // 2
    L = h * h
    fw = np.zeros((L, L), dtype=np.int64)
    fh = np.zeros((L, L), dtype=np.int64)
    quads = quadrants(img, M)
    for p in range(L):
        for q in range(L):
            py, px, qy, qx = p // h, p % h, q // h, q % h
            for ul, ur, ll, lr in quads:
                for c in range(3):
                    fw[p, q] += (ul[py, px, c] - ur[qy, qx, c]) ** 2
                    fw[p, q] += (ll[py, px, c] - lr[qy, qx, c]) ** 2
                    fh[p, q] += (ul[py, px, c] - ll[qy, qx, c]) ** 2
                    fh[p, q] += (ur[py, px, c] - lr[qy, qx, c]) ** 2
    return fw, fh


def seam_cost(img, M, cells):
    """Squared differences across the internal sub-block seams of every block,
    after un-shuffling with ``cells`` (cell -> shuffled position)."""
    h = M // 2
    total = 0
    for quad in quadrants(img, M):
        ul, ur, ll, lr = (q.reshape(-1, 3)[cells].reshape(h, h, 3) for q in quad)
        total += ((ul[:, -1] - ur[:, 0]) ** 2).sum() + ((ll[:, -1] - lr[:, 0]) ** 2).sum()
        total += ((ul[-1] - ll[0]) ** 2).sum() + ((ur[-1] - lr[0]) ** 2).sum()
    return int(total)


def test_constructed_two_block_table():
    img = np.zeros((16, 32, 3), np.uint8)
    for bx in (0, 16):
        img[:8, bx:bx + 8] = 10   # UL
        img[:8, bx + 8:bx + 16] = 12  # UR
        img[8:, bx:bx + 16] = 50  # LL == LR
    t = build_cross_tables(img, 16)
    # (10 - 12)^2 * 3 channels * 2 blocks
    assert np.all(t.fw == 24)


def test_constant_image_tables_vanish():
    t = build_cross_tables(np.full((32, 32, 3), 200, np.uint8), 8)
    assert not t.fw.any() and not t.fh.any()


@pytest.mark.parametrize("seed", range(5))
def test_tables_match_naive_oracle(seed):
    img = textured_image(24, 16, seed)
    fw, fh = naive_tables(img, 8)
    t = build_cross_tables(img, 8)
    assert np.array_equal(t.fw, fw)
    assert np.array_equal(t.fh, fh)


def test_within_tables_symmetric_zero_diagonal():
    w = build_within_tables(textured_image(32, 32, 1), 8)
    assert np.array_equal(w.gh, w.gh.T)
    assert not np.diag(w.gh).any()
    assert np.array_equal(w.gh, w.gv)


def test_corners_h2_identity_gradient():
    img = gradient_image(32, 32, seed=1)
    # oracle: all 24 ordered tuples evaluated from pixels
    best = min(itertools.permutations(range(4)), key=lambda c: (seam_cost(img, 4, np.array(c)), c))
    c = solve_corners(build_cross_tables(img, 4))
    assert best == (0, 1, 2, 3)
    assert (c.ul, c.ur, c.ll, c.lr) == (0, 1, 2, 3)


def test_corners_equivariant_under_known_shuffle():
    img = gradient_image(64, 64, seed=2)
    base = solve_corners(build_cross_tables(img, 8))
    pi = make_permutation(5, 16)
    shuffled = shuffle_subblocks(img, 8, pi)
    c = solve_corners(build_cross_tables(shuffled, 8))
    assert c.as_tuple() == tuple(int(pi[p]) for p in base.as_tuple())


@pytest.mark.parametrize("M", [4, 6, 8])
def test_corner_argmin_by_enumeration(M):
    img = textured_image(3 * M, 2 * M, seed=M)
    t = build_cross_tables(img, M)
    L = (M // 2) ** 2
    values = {tup: corner_objective(t, *tup) for tup in itertools.permutations(range(L), 4)}
    c = solve_corners(t)
    got = corner_objective(t, c.lr, c.ll, c.ur, c.ul)
    assert got == min(values.values())
    assert (c.lr, c.ll, c.ur, c.ul) == min(k for k, v in values.items() if v == got)


def test_corners_need_four_positions():
    with pytest.raises(InsufficientPositionsError):
        solve_corners(build_cross_tables(textured_image(4, 4), 2))


def test_pair_edges_h3_gradient():
    img = gradient_image(36, 36, seed=3)
    t = build_cross_tables(img, 6)
    c = solve_corners(t)
    assert c.as_tuple() == (0, 2, 6, 8)
    # oracle: cheapest seam pair among non-corner positions, from pixels
    quads = quadrants(img, 6)
    free = [p for p in range(9) if p not in c.as_tuple()]

    def cost(p, q):
        s = 0
        for ul, ur, ll, lr in quads:
            s += ((ul.reshape(-1, 3)[p] - ur.reshape(-1, 3)[q]) ** 2).sum()
            s += ((ll.reshape(-1, 3)[p] - lr.reshape(-1, 3)[q]) ** 2).sum()
        return s

    expect = min((cost(p, q), p, q) for p in free for q in free if p != q)[1:]
    pairs = pair_edges(t, c)
    assert expect == (5, 3)  # (3,2) and (1,2) in 1-based (x, y)
    assert (pairs.right, pairs.left) == ((5,), (3,))
    assert (pairs.up, pairs.down) == ((1,), (7,))


def test_pair_edges_constant_image_tiebreak():
    t = build_cross_tables(np.full((32, 32, 3), 9, np.uint8), 8)
    c = solve_corners(t)
    assert c.as_tuple() == (3, 2, 1, 0)  # lexicographic (p1..p4) = (0, 1, 2, 3)
    pairs = pair_edges(t, c)
    assert len(pairs.right) == 2 and len(pairs.up) == 2
    assert pairs.right == (4, 6) and pairs.left == (5, 7)


def test_pairs_disjoint_on_natural_image(cifar224):
    t = build_cross_tables(cifar224[3], 16)
    c = solve_corners(t)
    pairs = pair_edges(t, c)
    used = list(c.as_tuple()) + list(pairs.right + pairs.left + pairs.up + pairs.down)
    assert len(used) == len(set(used)) == 4 + 4 * 6


def test_h2_placement_is_corners_only():
    img = gradient_image(16, 16, seed=4)
    p = recover_placement(img, 4)
    assert p.complete
    assert p.cells.tolist() == [0, 1, 2, 3]


def test_identity_gradient_h8():
    img = gradient_image(128, 128, seed=5, sinus=True)
    p = recover_placement(img, 16)
    assert np.array_equal(p.cells, np.arange(64))


def test_known_shuffle_h8_recovers_inverse():
    img = gradient_image(128, 128, seed=6)
    pi = make_permutation(99, 64)
    p = recover_placement(shuffle_subblocks(img, 16, pi), 16)
    assert np.array_equal(p.permutation(), invert_permutation(pi))


def test_restore_with_true_key():
    img = textured_image(64, 64, seed=7)
    p1, p2 = make_permutation(1, 16), make_permutation(2, 64)
    scrambled = permute_blocks(img, 16, p1)
    enc = shuffle_subblocks(scrambled, 16, p2)
    assert np.array_equal(restore_subblocks(enc, placement_from_permutation(p2), 16), scrambled)
    ident = placement_from_permutation(np.arange(64))
    assert np.array_equal(restore_subblocks(enc, ident, 16), enc)


def test_restore_end_to_end_smooth():
    x = gradient_image(96, 96, seed=8, sinus=True)
    enc = shuffle_subblocks(x, 16, make_permutation(3, 64))
    assert np.array_equal(restore_subblocks(enc, recover_placement(enc, 16), 16), x)


def test_restore_rejects_incomplete():
    with pytest.raises(ValueError):
        restore_subblocks(textured_image(16, 16), SubBlockPlacement(side=8), 16)


def test_order_and_fill_is_bijection(cifar224):
    for img in cifar224[:3]:
        enc = shuffle_subblocks(img, 16, make_permutation(4, 64))
        p = recover_placement(enc, 16)
        assert sorted(p.cells.tolist()) == list(range(64))


def test_order_and_fill_places_corners_and_partners():
    img = gradient_image(80, 80, seed=9)
    t = build_cross_tables(img, 10)
    c = solve_corners(t)
    pairs = pair_edges(t, c)
    p = order_and_fill(build_within_tables(img, 10), c, pairs)
    h = 5
    assert (p.at(0, 0), p.at(h - 1, 0), p.at(0, h - 1), p.at(h - 1, h - 1)) == c.as_tuple()
    for y in range(1, h - 1):
        k = pairs.left.index(p.at(0, y))
        assert p.at(h - 1, y) == pairs.right[k]
    for x in range(1, h - 1):
        k = pairs.up.index(p.at(x, 0))
        assert p.at(x, h - 1) == pairs.down[k]


def test_rejects_invalid_structures():
    with pytest.raises(ValueError):
        CornerAssignment(1, 1, 2, 3)
    with pytest.raises(ValueError):
        EdgePairing((4,), (4,), (5,), (6,))


def test_dump_round_trip():
    img = gradient_image(64, 64, seed=10)
    p = recover_placement(shuffle_subblocks(img, 16, make_permutation(8, 64)), 16)
    text = p.dump()
    assert "1,1 -> " in text and text.count("->") == 64
    assert np.array_equal(SubBlockPlacement.parse(text).cells, p.cells)


def test_tables_deterministic():
    img = textured_image(64, 64, seed=11)
    a, b = build_cross_tables(img, 16), build_cross_tables(img.copy(), 16)
    assert a.fw.tobytes() == b.fw.tobytes() and a.fh.tobytes() == b.fh.tobytes()


def test_placement_geometry_mismatch():
    from blockcrack.pixels import GeometryError

    with pytest.raises(GeometryError):
        restore_subblocks(textured_image(32, 32), placement_from_permutation(np.arange(4)), 16)


def test_equivariance_random_sigma():
    checked = 0
    for seed in range(6):
        img = gradient_image(96, 96, seed=seed, sinus=True)
        base = recover_placement(img, 16)
        sigma = make_permutation(100 + seed, 64)
        moved = recover_placement(shuffle_subblocks(img, 16, sigma), 16)
        assert moved.ties == base.ties
        if base.ties:
            continue
        checked += 1
        assert np.array_equal(moved.cells, sigma[base.cells])
        assert np.array_equal(compose(moved.permutation(), sigma), base.permutation())
    assert checked >= 3
