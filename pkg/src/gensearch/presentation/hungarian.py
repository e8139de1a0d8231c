"""Minimum-cost assignment on a square matrix (Hungarian algorithm,
O(n^3) potentials formulation) plus rectangular padding helpers."""

from __future__ import annotations

import math


def solve_min_cost(cost: list[list[float]]) -> list[int]:
    """Assignment minimizing total cost over a square matrix.

    Returns ``assignment`` with assignment[row] = column.
    """
    n = len(cost)
    if n == 0:
        return []
    if any(len(row) != n for row in cost):
        raise ValueError("cost matrix must be square")
    if any(not math.isfinite(v) for row in cost for v in row):
        raise ValueError("cost matrix must be finite")

    INF = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)  # match[col] = row currently assigned (1-based)
    way = [0] * (n + 1)

    for row in range(1, n + 1):
        match[0] = row
        j0 = 0
        min_delta = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = INF
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                reduced = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if reduced < min_delta[j]:
                    min_delta[j] = reduced
                    way[j] = j0
                if min_delta[j] < delta:
                    delta = min_delta[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    min_delta[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    assignment = [-1] * n
    for col in range(1, n + 1):
        if match[col]:
            assignment[match[col] - 1] = col - 1
    return assignment


def pad_square(matrix: list[list[float]], pad_value: float) -> list[list[float]]:
    """Pad a rectangular matrix with dummy rows/columns of pad_value."""
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    n = max(rows, cols)
    padded = [[pad_value] * n for _ in range(n)]
    for i in range(rows):
        for j in range(cols):
            padded[i][j] = matrix[i][j]
    return padded


def max_weight_assignment(scores: list[list[float]]) -> list[tuple[int, int]]:
    """Maximum-total-weight one-to-one assignment on a possibly rectangular
    score matrix: solved as min-cost on the padded square matrix with
    cost = max_entry - score and dummy cells at max_entry (score 0).
    Dummy-matched pairs are dropped from the result."""
    rows = len(scores)
    if rows == 0 or len(scores[0]) == 0:
        return []
    cols = len(scores[0])
    top = max(max(row) for row in scores)
    cost = [[top - v for v in row] for row in scores]
    padded = pad_square(cost, pad_value=top)
    assignment = solve_min_cost(padded)
    return [
        (i, j)
        for i, j in enumerate(assignment[:rows])
        if 0 <= j < cols
    ]
