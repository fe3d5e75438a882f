# %% [markdown]
# # Spectral flow along S + A + tB
#
# A random flow instance, its crossing profile, and the two quantities that
# should agree: the trindex of the Xi pair and the Cauchy average of n(t).

# %%
import numpy as np

from xishift.generate import random_flow_instance
from xishift.spectralflow import birman_krein, cauchy_average, crossing_profile, trindex_xi_pair

inst = random_flow_instance(6, seed=1)
prof = crossing_profile(inst)
for (t, m) in prof.crossings:
    print(f"crossing at t = {t:+.6f}  multiplicity {m}")
print("plateaus:", prof.plateaus)

# %% [markdown]
# n(t) drops by the multiplicity at each crossing. Its Cauchy average is a
# finite sum of arctan differences.

# %%
lhs = trindex_xi_pair(inst)
rhs = cauchy_average(prof)
print(f"trindex = {lhs:.15f}")
print(f"average = {rhs:.15f}")
print(f"residual {abs(lhs - rhs):.2e}")

# %% [markdown]
# The scattering matrix built from the same data is unitary and its
# determinant is exp(-2 pi i trindex).

# %%
r = birman_krein(inst)
print("det S       =", np.round(r.det, 12))
print("exp(-2pi i) =", np.round(np.exp(-2j * np.pi * r.trindex), 12))
print(f"unitarity defect {r.unitarity_defect:.1e}")
