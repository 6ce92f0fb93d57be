# %% [markdown]
# # Trace distributions of small classical groups
#
# Enumerate a few groups, look at their trace histograms, and see how fast
# the Gaussian sums sum_g psi(tr g) / |G| decay.

# %%
from cyclosieve.matrix_groups import (
    GroupSpec,
    alpha_exponent,
    enumerate_group,
    fitted_exponent,
    gauss_sum_max,
    prob_trace_in,
)
from cyclosieve.ring_formulas import mth_power_set

# %% SL_2 over small primes
for ell in (3, 5, 7, 11, 13):
    spec = GroupSpec("SL", 2, ell)
    value, c = gauss_sum_max(spec)
    print(f"SL_2(F_{ell}): max |S_c|/|G| = {value:.5f} at c = {c}, "
          f"x l^1.5 = {value * ell**1.5:.3f}, fitted exponent {fitted_exponent(value, ell):.3f}")
print("alpha(SL_2) =", alpha_exponent("SL", 2))

# %% one histogram in full
order, hist = enumerate_group(GroupSpec("SL", 2, 7))
print(order, dict(hist.as_dict()))

# %% larger groups
for fam, n, ell in [("Sp", 4, 3), ("SOplus", 4, 5), ("SOminus", 4, 5), ("SOodd", 5, 3)]:
    spec = GroupSpec(fam, n, ell)
    value, _ = gauss_sum_max(spec)
    print(f"{spec.label}: |G| = {enumerate_group(spec)[0]}, max |S_c|/|G| = {value:.5f}")

# %% probability that the trace is a square
for ell in (5, 7, 11, 13):
    A = mth_power_set(ell, 2)
    P = prob_trace_in(GroupSpec("SL", 2, ell), A)
    print(f"l = {ell}: P(tr in squares) = {P} = {float(P):.4f}, |A|/l = {float(A.density):.4f}")
