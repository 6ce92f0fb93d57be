# %% [markdown]
# # Kloosterman sums, three ways
#
# The same table of Kl_2 over F_{5^3}, read in C, modulo a prime ideal above
# l = 41, and as exact cyclotomic integers.

# %%
import numpy as np

from cyclosieve.cyclotomic import complex_embed, ideal_above, reduce_mod
from cyclosieve.field_core import make_field
from cyclosieve.trace_functions import Embedding, kloosterman_exact, kloosterman_table, normalize

p, e = 5, 3
F = make_field(p, e)
print(F)

# %% complex values
t = kloosterman_table(2, F, Embedding.complex(p))
print("max |Im Kl_2| =", np.abs(t.values.imag).max())
print("first values:", np.round(t.values.real[:6], 4))

# %% normalized values stay in [-2, 2]
tn = normalize(t)
print("max |Kl_2| / sqrt(q) =", np.abs(tn.values).max())

# %% residues modulo the ideal above 41
lam = ideal_above(41, 4 * p)
tr = kloosterman_table(2, F, Embedding.residue(p, lam))
print(lam, "->", tr.values[:6])

# %% the exact value at a = 7 reduces to both
z = kloosterman_exact(2, F, 7)
print("exact:", z)
print("mod lambda:", reduce_mod(z, lam), "==", tr.at(7))
print("in C:", complex_embed(z), "~", t.at(7))

# %% Frobenius invariance: Kl(x^p) = Kl(x)
x = F.units()
dense = tr.dense()
print("Frobenius-invariant:", bool(np.array_equal(dense[F.frobenius(x)], dense[x])))
