# %% [markdown]
# # Densities of definable sets
#
# phi(F_l) for a few first-order ring formulas, scanned over primes. Image
# densities of polynomials cluster around sum (-1)^{n+1}/n!.

# %%
from cyclosieve.ring_formulas import (
    cdm_scan,
    definable_subset,
    format_formula,
    image_density_expected,
    mth_power_density,
    parse_formula,
    polynomial_image_formula,
)
from cyclosieve.cyclotomic import primes_up_to

# %% parse, print and evaluate
phi = parse_formula("exists y: x = y^2 and not x = 0")
print(format_formula(phi), "->", definable_subset(phi, 13).elements().tolist())

# %% cubes: the density depends on gcd(3, l - 1)
for ell in (7, 11, 13, 17, 19):
    print(ell, mth_power_density(ell, 3))

# %% polynomial images
primes = [int(p) for p in primes_up_to(1000) if p >= 100]
for coeffs in ([1, 1, 0, 1], [0, 1, 0, 0, 1]):
    text = polynomial_image_formula(coeffs)
    d = len(coeffs) - 1
    scan = cdm_scan(text, primes, centers=[float(image_density_expected(d))])
    print(f"{text}: expected {image_density_expected(d)}, "
          f"max |density - c| sqrt(l) = {scan.max_scaled_deviation:.3f}")

# %% automatic clustering: x is a square or a cube
scan = cdm_scan("(exists y: x = y^2) or (exists z: x = z^3)", primes)
print("clusters:", [round(c, 4) for c in scan.clusters])
