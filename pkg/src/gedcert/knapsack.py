"""Knapsack problems with one global and per-row cost budgets.

Two solver families back every deterministic certificate:

* an exact two-cost dynamic program (per-row precomputation of the best
  exactly-(i, j) selections, then a global combination keyed on integer
  insert/delete counts), and
* a greedy fractional solver for arbitrary nonnegative cost matrices whose
  optimal duals have a closed form extracted from the allocation itself.

Entries with infinite cost are treated as forbidden. Values are allowed to
be negative in the exact path (the policy-iteration certificate feeds raw
edge scores through it); the fractional solver requires nonnegative values.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

INF = math.inf

_FEAS_SLACK = 0.0  # budget comparisons are exact float comparisons


@dataclass
class KnapsackInstance:
    """Value/cost matrices with a global budget and per-row budgets.

    The general form only needs `values`, `costs`, `epsilon`, `rho`.
    The two-cost form additionally carries `cost_add`, `cost_del` and the
    boolean `insert_mask` marking which entries cost `cost_add`; entries
    with infinite cost in `costs` can never be selected.
    """

    values: np.ndarray
    costs: np.ndarray
    epsilon: float
    rho: np.ndarray
    cost_add: Optional[float] = None
    cost_del: Optional[float] = None
    insert_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.costs = np.atleast_2d(np.asarray(self.costs, dtype=float))
        if self.values.shape != self.costs.shape:
            raise ValueError("values and costs must share shape")
        if (self.costs < 0).any():
            raise ValueError("costs must be nonnegative")
        self.rho = np.broadcast_to(
            np.asarray(self.rho, dtype=float), (self.values.shape[0],)
        ).copy()
        self.epsilon = float(self.epsilon)
        if self.insert_mask is not None:
            self.insert_mask = np.atleast_2d(np.asarray(self.insert_mask, dtype=bool))

    @classmethod
    def two_cost(cls, values, insert_mask, cost_add, cost_del, epsilon, rho,
                 forbidden=None):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        insert_mask = np.atleast_2d(np.asarray(insert_mask, dtype=bool))
        costs = np.where(insert_mask, float(cost_add), float(cost_del))
        if forbidden is not None:
            costs = np.where(np.atleast_2d(forbidden), INF, costs)
        return cls(values, costs, epsilon, rho,
                   cost_add=float(cost_add), cost_del=float(cost_del),
                   insert_mask=insert_mask)

    @property
    def is_two_cost(self) -> bool:
        return self.insert_mask is not None


@dataclass
class LocalTables:
    """Per-row exactly-(i, j) optima: alpha holds values, beta the columns."""

    alpha: list  # list of dict (i, j) -> float
    beta: list   # list of dict (i, j) -> tuple of column indices
    cost_add: float
    cost_del: float


@dataclass
class RelaxedSolution:
    value: float
    Q: np.ndarray
    lambda_star: float
    kappa_star: np.ndarray
    # row-wise allocation before the global pass; kept for KKT verification
    L: np.ndarray = field(repr=False, default=None)


def _ordered_desc(values, cols):
    """Columns sorted by (value desc, column asc); deterministic ties."""
    return sorted(cols, key=lambda m: (-values[m], m))


def precompute_local(instance: KnapsackInstance) -> LocalTables:
    """Best per-row selections using exactly i insert and j delete slots.

    For every row r and every (i, j) with cost_add*i + cost_del*j <= rho_r
    (and enough eligible entries), alpha_r[(i, j)] is the sum of the i
    largest insertion values plus the j largest deletion values; beta_r
    stores the selected columns. Zero-cost sides are taken upfront: every
    positive-value entry on a zero-cost side is folded into all table
    entries and its count axis collapses to 0.
    """
    if not instance.is_two_cost:
        raise ValueError("precompute_local needs the two-cost form")
    c_add, c_del = instance.cost_add, instance.cost_del
    n_rows = instance.values.shape[0]
    alpha, beta = [], []
    for r in range(n_rows):
        vals = instance.values[r]
        finite = np.isfinite(instance.costs[r])
        add_cols = [int(m) for m in np.flatnonzero(instance.insert_mask[r] & finite)]
        del_cols = [int(m) for m in np.flatnonzero(~instance.insert_mask[r] & finite)]
        add_cols = _ordered_desc(vals, add_cols)
        del_cols = _ordered_desc(vals, del_cols)
        rho = instance.rho[r]

        free_value = 0.0
        free_cols: tuple = ()
        if c_add == 0:
            take = tuple(m for m in add_cols if vals[m] > 0)
            free_value += float(sum(vals[m] for m in take))
            free_cols += take
            add_cols = []
        if c_del == 0:
            take = tuple(m for m in del_cols if vals[m] > 0)
            free_value += float(sum(vals[m] for m in take))
            free_cols += take
            del_cols = []

        add_prefix = np.concatenate([[0.0], np.cumsum([vals[m] for m in add_cols])]) \
            if add_cols else np.array([0.0])
        del_prefix = np.concatenate([[0.0], np.cumsum([vals[m] for m in del_cols])]) \
            if del_cols else np.array([0.0])

        a_r, b_r = {}, {}
        max_add = len(add_cols)
        if c_add > 0:
            max_add = min(max_add, int(rho // c_add)) if math.isfinite(rho) else max_add
        for i in range(max_add + 1):
            left = rho - (c_add * i if i else 0.0)
            if left < 0:
                break
            max_del = len(del_cols)
            if c_del > 0:
                max_del = min(max_del, int(left // c_del)) if math.isfinite(left) else max_del
            for j in range(max_del + 1):
                a_r[(i, j)] = free_value + float(add_prefix[i] + del_prefix[j])
                b_r[(i, j)] = free_cols + tuple(add_cols[:i]) + tuple(del_cols[:j])
        alpha.append(a_r)
        beta.append(b_r)
    return LocalTables(alpha, beta, c_add, c_del)


def combine_global(tables: LocalTables, epsilon: float, rho: np.ndarray):
    """Merge per-row tables under the global budget via dynamic programming.

    State is keyed on exact accumulated (insert, delete) counts, never on
    float costs. Returns (optimal value, per-row column selections).
    """
    c_add, c_del = tables.cost_add, tables.cost_del
    rho = np.asarray(rho, dtype=float)
    n_rows = len(tables.alpha)

    def cost_of(i: int, j: int) -> float:
        return (c_add * i if i else 0.0) + (c_del * j if j else 0.0)

    state = {(0, 0): (0.0, [])}
    for r in range(n_rows):
        nxt: dict = {}
        row_alpha = tables.alpha[r]
        row_beta = tables.beta[r]
        row_keys = sorted(row_alpha)
        for prev_key in sorted(state):
            prev_val, prev_sel = state[prev_key]
            prev_cost = cost_of(*prev_key)
            budget = min(rho[r], epsilon - prev_cost)
            for (i, j) in row_keys:
                step = cost_of(i, j)
                if step > budget:
                    continue
                key = (prev_key[0] + i, prev_key[1] + j)
                val = prev_val + row_alpha[(i, j)]
                if key not in nxt or val > nxt[key][0]:
                    nxt[key] = (val, prev_sel + [row_beta[(i, j)]])
        state = nxt

    best_key = max(sorted(state), key=lambda k: state[k][0])
    value, selection = state[best_key]
    return value, [tuple(s) for s in selection]


def solve_two_cost(instance: KnapsackInstance):
    """Exact optimum of a two-cost instance; returns (value, selections)."""
    return combine_global(precompute_local(instance), instance.epsilon, instance.rho)


def _effective_budgets(instance: KnapsackInstance):
    """Budgets clipped to what can actually be spent.

    Excess budget is slack in the original problem and never changes the
    allocation; clipping makes the extracted duals KKT-consistent.
    """
    finite = np.isfinite(instance.costs)
    row_cap = np.where(finite, instance.costs, 0.0).sum(axis=1)
    rho_eff = np.minimum(instance.rho, row_cap)
    eps_eff = min(instance.epsilon, float(rho_eff.sum()))
    return eps_eff, rho_eff


def solve_relaxed(instance: KnapsackInstance) -> RelaxedSolution:
    """Greedy fractional optimum over Q in [0,1]^(N x M), plus optimal duals.

    Entries are filled in order of decreasing value-to-cost ratio, first per
    row under rho_n, then globally under epsilon clipped by the per-row
    allocation. Division by zero cost counts as infinite ratio, so zero-cost
    entries are taken in full before any budget is spent. The duals are
    lambda* = smallest ratio receiving global budget and
    kappa*_n = max(0, o_n - lambda*) with o_n the smallest ratio receiving
    local budget in row n; degenerate rows/instances fall back to the
    largest ratio so the Karush-Kuhn-Tucker conditions keep holding.
    """
    V = instance.values
    C = instance.costs
    if (V < 0).any():
        raise ValueError("relaxed solver requires nonnegative values")
    n_rows, n_cols = V.shape
    eps_eff, rho_eff = _effective_budgets(instance)

    finite = np.isfinite(C)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(C > 0, V / C, INF)
    ratio = np.where(finite, ratio, -INF)  # forbidden entries sort last

    L = np.zeros_like(V)
    for r in range(n_rows):
        order = sorted(range(n_cols), key=lambda m: (-ratio[r, m], m))
        b = rho_eff[r]
        for m in order:
            if not finite[r, m]:
                continue
            if C[r, m] == 0:
                L[r, m] = 1.0
                continue
            take = min(1.0, b / C[r, m])
            if take <= 0:
                break
            L[r, m] = take
            b -= C[r, m] * take

    Q = np.zeros_like(V)
    flat = [(r, m) for r in range(n_rows) for m in range(n_cols) if finite[r, m]]
    flat.sort(key=lambda rm: (-ratio[rm], rm[0], rm[1]))
    b = eps_eff
    for r, m in flat:
        if C[r, m] == 0:
            Q[r, m] = L[r, m]
            continue
        take = min(L[r, m], b / C[r, m])
        if take > 0:
            Q[r, m] = take
            b -= C[r, m] * take

    value = float((V * Q).sum())

    budgeted = finite & (C > 0)
    alloc = budgeted & (Q > 0)
    if alloc.any():
        lambda_star = float(ratio[alloc].min())
    else:
        # nothing buyable: any multiplier above the best ratio is optimal,
        # the largest ratio is the smallest such choice
        lambda_star = float(ratio[budgeted].max()) if budgeted.any() else 0.0

    kappa = np.zeros(n_rows)
    for r in range(n_rows):
        row_alloc = budgeted[r] & (L[r] > 0)
        if row_alloc.any():
            o_r = float(ratio[r, row_alloc].min())
        elif budgeted[r].any():
            o_r = float(ratio[r, budgeted[r]].max())
        else:
            o_r = 0.0
        kappa[r] = max(0.0, o_r - lambda_star)

    return RelaxedSolution(value, Q, lambda_star, kappa, L=L)


def verify_kkt(instance: KnapsackInstance, sol: RelaxedSolution) -> float:
    """Max absolute residual of the Karush-Kuhn-Tucker conditions.

    Checks stationarity, primal and dual feasibility, and complementary
    slackness with the multipliers U* = max(V - C (lambda* + kappa*_n), 0)
    and T* = max(0, -V + C (lambda* + kappa*_n)). Budgets are clipped to the
    reachable spend, matching the dual extraction in `solve_relaxed`.
    """
    V, C, Q = instance.values, instance.costs, sol.Q
    eps_eff, rho_eff = _effective_budgets(instance)
    finite = np.isfinite(C)

    lam = sol.lambda_star
    kap = sol.kappa_star[:, None]
    price = np.where(finite, C * (lam + kap), 0.0)
    U = np.where(finite, np.maximum(V - price, 0.0), 0.0)
    T = np.where(finite, np.maximum(0.0, -V + price), 0.0)

    res = 0.0
    # stationarity (zero by construction of T*, U*; evaluated anyway)
    stat = np.where(finite, -V + price - T + U, 0.0)
    res = max(res, float(np.abs(stat).max(initial=0.0)))
    # primal feasibility
    spend = float((np.where(finite, C * Q, 0.0)).sum())
    row_spend = np.where(finite, C * Q, 0.0).sum(axis=1)
    res = max(res, max(0.0, spend - eps_eff))
    res = max(res, float(np.maximum(row_spend - rho_eff, 0.0).max(initial=0.0)))
    res = max(res, float(np.maximum(-Q, 0.0).max(initial=0.0)))
    res = max(res, float(np.maximum(Q - 1.0, 0.0).max(initial=0.0)))
    # dual feasibility
    res = max(res, max(0.0, -lam))
    res = max(res, float(np.maximum(-sol.kappa_star, 0.0).max(initial=0.0)))
    # complementary slackness
    res = max(res, abs(lam * (spend - eps_eff)))
    res = max(res, float(np.abs(sol.kappa_star * (row_spend - rho_eff)).max(initial=0.0)))
    res = max(res, float(np.abs(T * Q).max(initial=0.0)))
    res = max(res, float(np.abs(U * (Q - 1.0)).max(initial=0.0)))
    return res
