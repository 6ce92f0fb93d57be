# %% [markdown]
# # A sieve run, step by step
#
# How often is Kl_2(x) over F_{5^6} a cube modulo every prime ideal of norm
# at most 700? Build the plan, the residue tables, then fold the conditions.

# %%
import json

import numpy as np

from cyclosieve.sieve_engine import (
    MthPowers,
    SieveConfig,
    build_sieve_plan,
    build_tables,
    equidistribution_tv,
    survivor_count,
)
from cyclosieve.trace_functions import Kloosterman, normalize

cfg = SieveConfig(Kloosterman(2), p=5, e=6, target=MthPowers(3), L=700)

# %% the plan: ideals, local densities, P(L)
plan = build_sieve_plan(cfg)
for d in plan.local:
    print(f"l = {d.ideal.ell:3d}  |A|/l = {float(d.local_density):.3f}  "
          f"Omega/|G| = {float(d.omega_ratio):.3f}  exact = {d.omega_exact}")
print("P(L) =", float(plan.PL), " B =", plan.B)
for note in plan.annotations:
    print(" -", note)

# %% tables and survivors
tables = build_tables(plan, jobs=4)
report = survivor_count(plan, tables)
print("running survivors:", report.running_survivors)
print(f"density {report.density:.5f}, min single-ideal prediction {float(report.min_prediction):.5f}")
print(f"bound {report.bound:.3e}  (it is loose at this size)")

# %% do the values look like SL_2 traces?
tv = [equidistribution_tv(normalize(t), "SL", 2) for t in tables[:2]]
print("TV to SL_2 trace law:", np.round(tv, 4))

# %% the JSON report
rec = json.loads(report.to_json())
print({k: rec[k] for k in ("q", "L", "survivors", "density", "PL")})
