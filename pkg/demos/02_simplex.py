# ---
# jupyter:
#   jupytext:
#     formats: py:percent
# ---

# %% [markdown]
# # The linear-programming core
#
# `klbounds.lpcore` is a dense two-phase revised simplex solver. It handles
# `<=`, `>=` and `=` rows over nonnegative variables and reports one of
# three verdicts. The bounds and bootstraps only ever need these three
# entry points: `solve`, `check_feasible` and the `LinearProgram` container.

# %%
import numpy as np

from klbounds.lpcore import LinearProgram, Sense, check_feasible, solve

# %% [markdown]
# A textbook instance: maximise `3x + 5y` subject to `x <= 4`,
# `2y <= 12`, `3x + 2y <= 18`. The optimum is 36 at `(2, 6)`.

# %%
lp = LinearProgram.from_rows(
    [3, 5],
    [([1, 0], "<=", 4), ([0, 2], "<=", 12), ([3, 2], "<=", 18)],
    Sense.MAX,
)
res = solve(lp)
print(res.status, res.objective_value, res.solution)
print("reduced costs:", res.reduced_costs)

# %% [markdown]
# Infeasible and unbounded programs are reported, not raised.

# %%
print(solve(LinearProgram.from_rows([1], [([1], "<=", 1), ([1], ">=", 2)])).status)
print(solve(LinearProgram.from_rows([1], [([1], ">=", 1)], Sense.MAX)).status)

# %% [markdown]
# Phase 1 alone answers "is there any nonnegative point?". This is what the
# slack and mass bisections call.

# %%
f = check_feasible(LinearProgram.from_rows([0, 0], [([1, 1], "=", 1), ([1, -1], ">=", 0.5)]))
print(bool(f), f.infeasibility_measure, f.point)

# %% [markdown]
# The same machinery on a larger random program. Adding a constraint can
# only lower a maximum.

# %%
rng = np.random.default_rng(0)
A = rng.uniform(0, 1, (30, 60))
c = rng.uniform(0, 1, 60)
rows = [(a, "<=", 1.0) for a in A]
base = solve(LinearProgram.from_rows(c, rows, Sense.MAX))
tighter = solve(LinearProgram.from_rows(c, rows + [(np.ones(60), "<=", 0.5)], Sense.MAX))
print(base.objective_value, ">=", tighter.objective_value, f"({base.iterations} pivots)")
