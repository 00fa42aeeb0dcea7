"""Compiled game loops for penalty (relative) rules.

Cards are integer ids in ``DeckSpec.cards`` order and each deck is a ring
buffer of capacity ``n``.  Random draws mirror the pure-Python engine call
for call, so both paths produce identical games from the same generator.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TAKEN = 0
GAME_OVER = 1

TERMINATED = 0
CYCLE = 1


@njit(cache=True)
def _shuffle(a, m, rng):
    for i in range(m - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        t = a[i]
        a[i] = a[j]
        a[j] = t


@njit(cache=True)
def _deal(n, left_size, rng, buf, head, cnt):
    perm = np.arange(n)
    _shuffle(perm, n, rng)
    for k in range(left_size):
        buf[0, k] = perm[k]
    for k in range(n - left_size):
        buf[1, k] = perm[left_size + k]
    head[0] = 0
    head[1] = 0
    cnt[0] = left_size
    cnt[1] = n - left_size


@njit(cache=True)
def _trick(penalties, buf, head, cnt, starter, table):
    """Play one trick; players are 0 and 1.  Returns (outcome, player, cards placed)."""
    n = buf.shape[1]
    m = 0
    player = starter
    debt = 0
    owner = -1
    while True:
        if cnt[player] == 0:
            return GAME_OVER, player, m
        c = buf[player, head[player]]
        head[player] = (head[player] + 1) % n
        cnt[player] -= 1
        table[m] = c
        m += 1
        pen = penalties[c]
        if pen > 0:
            debt = pen
            owner = player
            player = 1 - player
        elif debt == 0:
            player = 1 - player
        else:
            debt -= 1
            if debt == 0:
                return TAKEN, owner, m


@njit(cache=True)
def _push_bottom(buf, head, cnt, player, c):
    n = buf.shape[1]
    buf[player, (head[player] + cnt[player]) % n] = c
    cnt[player] += 1


@njit(cache=True)
def play_random(penalties, left_size, p, rng, move_cap):
    """Deal uniformly, then play the Bernoulli-starter, shuffled-pickup game.

    Returns ``(winner, moves, tricks, capped)`` with winner 1 or 2 (0 if capped).
    """
    n = penalties.shape[0]
    buf = np.empty((2, n), dtype=np.int64)
    head = np.zeros(2, dtype=np.int64)
    cnt = np.zeros(2, dtype=np.int64)
    table = np.empty(n, dtype=np.int64)
    pile = np.empty(n, dtype=np.int64)
    _deal(n, left_size, rng, buf, head, cnt)
    moves = 0
    tricks = 0
    while cnt[0] > 0 and cnt[1] > 0:
        starter = 0 if rng.random() < p else 1
        outcome, player, m = _trick(penalties, buf, head, cnt, starter, table)
        if outcome == TAKEN:
            for k in range(m):
                pile[k] = table[m - 1 - k]
            _shuffle(pile, m, rng)
            for k in range(m):
                _push_bottom(buf, head, cnt, player, pile[k])
        moves += m
        tricks += 1
        if moves > move_cap:
            return 0, move_cap, tricks, True
        if outcome == GAME_OVER:
            return 2 - player, moves, tricks, False
    return (1 if cnt[0] > 0 else 2), moves, tricks, False


@njit(cache=True)
def _det_step(penalties, buf, head, cnt, leader, table, reverse):
    """One deterministic trick; returns (outcome, player, cards placed)."""
    outcome, player, m = _trick(penalties, buf, head, cnt, leader, table)
    if outcome == TAKEN:
        if reverse:
            for k in range(m):
                _push_bottom(buf, head, cnt, player, table[m - 1 - k])
        else:
            for k in range(m):
                _push_bottom(buf, head, cnt, player, table[k])
    return outcome, player, m


@njit(cache=True)
def _same(buf_a, head_a, cnt_a, lead_a, buf_b, head_b, cnt_b, lead_b):
    if lead_a != lead_b or cnt_a[0] != cnt_b[0] or cnt_a[1] != cnt_b[1]:
        return False
    n = buf_a.shape[1]
    for q in range(2):
        for k in range(cnt_a[q]):
            if buf_a[q, (head_a[q] + k) % n] != buf_b[q, (head_b[q] + k) % n]:
                return False
    return True


@njit(cache=True)
def _copy(buf_src, head_src, cnt_src, buf_dst, head_dst, cnt_dst):
    buf_dst[:, :] = buf_src
    head_dst[:] = head_src
    cnt_dst[:] = cnt_src


@njit(cache=True)
def _finished(cnt):
    return cnt[0] == 0 or cnt[1] == 0


@njit(cache=True)
def play_deterministic(penalties, buf0, cnt0, first_leader, reverse):
    """Classical game from a given deal, with Brent cycle detection at trick boundaries.

    ``buf0[q, :cnt0[q]]`` holds player ``q``'s deck top-first; leaders are 0/1.
    Returns ``(kind, winner, moves, preperiod, period)``.  For a terminated
    game ``moves`` is the total placed; for a cycle it is the cards placed
    over the pre-period plus one period.
    """
    n = penalties.shape[0]
    table = np.empty(n, dtype=np.int64)
    buf = buf0.copy()
    head = np.zeros(2, dtype=np.int64)
    cnt = cnt0.copy()
    tbuf = buf0.copy()
    thead = np.zeros(2, dtype=np.int64)
    tcnt = cnt0.copy()
    tlead = first_leader
    lead = first_leader
    moves = 0
    power = 1
    lam = 1
    if _finished(cnt):
        return TERMINATED, (1 if cnt[0] > 0 else 2), 0, 0, 0
    outcome, player, m = _det_step(penalties, buf, head, cnt, lead, table, reverse)
    moves += m
    while True:
        if outcome == GAME_OVER:
            return TERMINATED, 2 - player, moves, 0, 0
        lead = player
        if _finished(cnt):
            return TERMINATED, (1 if cnt[0] > 0 else 2), moves, 0, 0
        if _same(buf, head, cnt, lead, tbuf, thead, tcnt, tlead):
            break
        if power == lam:
            _copy(buf, head, cnt, tbuf, thead, tcnt)
            tlead = lead
            power *= 2
            lam = 0
        outcome, player, m = _det_step(penalties, buf, head, cnt, lead, table, reverse)
        moves += m
        lam += 1

    # Pre-period: restart both runners, put the second one a period ahead.
    _copy(buf0, np.zeros(2, dtype=np.int64), cnt0, buf, head, cnt)
    _copy(buf0, np.zeros(2, dtype=np.int64), cnt0, tbuf, thead, tcnt)
    lead = first_leader
    tlead = first_leader
    for _ in range(lam):
        outcome, player, m = _det_step(penalties, buf, head, cnt, lead, table, reverse)
        lead = player
    mu = 0
    placed = 0
    while not _same(buf, head, cnt, lead, tbuf, thead, tcnt, tlead):
        outcome, player, m = _det_step(penalties, buf, head, cnt, lead, table, reverse)
        lead = player
        outcome, player, m = _det_step(penalties, tbuf, thead, tcnt, tlead, table, reverse)
        tlead = player
        placed += m
        mu += 1
    for _ in range(lam):
        outcome, player, m = _det_step(penalties, tbuf, thead, tcnt, tlead, table, reverse)
        tlead = player
        placed += m
    return CYCLE, 0, placed, mu, lam


@njit(cache=True)
def deal_and_play_deterministic(penalties, left_size, rng, first_leader, reverse, deal_out):
    """Uniform deal from ``rng`` followed by :func:`play_deterministic`.

    The dealt order (player 1's cards then player 2's) is written to ``deal_out``.
    """
    n = penalties.shape[0]
    buf = np.empty((2, n), dtype=np.int64)
    head = np.zeros(2, dtype=np.int64)
    cnt = np.zeros(2, dtype=np.int64)
    _deal(n, left_size, rng, buf, head, cnt)
    for k in range(left_size):
        deal_out[k] = buf[0, k]
    for k in range(n - left_size):
        deal_out[left_size + k] = buf[1, k]
    return play_deterministic(penalties, buf, cnt, first_leader, reverse)
