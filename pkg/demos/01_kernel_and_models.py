# ---
# jupyter:
#   jupytext:
#     formats: py:percent
# ---

# %% [markdown]
# # Kernel, models and why the inversion is hard
#
# A two-point function in 1+1 dimensions is a positive superposition of
# free propagators, `C(x) = ∫ ρ(s) G_E(x; s) ds` with
# `G_E(x; s) = K0(sqrt(s)|x|) / 2π`. This script builds a pole-plus-continuum
# density, synthesises its correlator, and then shows two densities whose
# correlators agree to a few parts in 10⁵ although the densities themselves
# look nothing alike.

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from klbounds import SpectralModel, euclid_propagator, log_spaced, smear, synth_correlator

OUT = Path("demo_output")
OUT.mkdir(exist_ok=True)

# %% [markdown]
# The propagator decays like `exp(-sqrt(s) x)` at large distance and grows
# logarithmically at short distance.

# %%
x = np.logspace(-3, 1, 200)
for s in (0.25, 1.0, 9.0):
    plt.loglog(x, euclid_propagator(x, s), label=f"s = {s:g}")
plt.xlabel("x")
plt.ylabel("G_E(x; s)")
plt.legend()
plt.savefig(OUT / "propagator.png", dpi=100)
plt.close()
print("G_E(1; 1) =", euclid_propagator(1.0, 1.0))


# %% [markdown]
# ## Two models with almost the same correlator
#
# Both have a pole of weight 0.9 at `M² = 1` and a continuum of mass 0.1
# above the three-particle threshold `9M²`. One continuum is a broad bump
# on `[9, 40]`, the other a narrow bump on `[22.5, 24.5]`.

# %%
def bump_model(lo, hi, n=200):
    s = np.linspace(lo, hi, n)
    return SpectralModel.from_shape(0.9, 1.0, 9.0, s, ((s - lo) * (hi - s)) ** 2)


broad, narrow = bump_model(9.0, 40.0), bump_model(22.5, 24.5)
xs = np.linspace(0.1, 3.0, 300)
dc = synth_correlator(broad, xs).values - synth_correlator(narrow, xs).values
mu2 = np.linspace(5.0, 45.0, 801)
rb, rn = smear(broad, mu2, 0.1), smear(narrow, mu2, 0.1)
print(f"max |ΔC| on [0.1, 3]        = {np.abs(dc).max():.2e}")
print(f"max |Δρ^σ| (σ² = 0.01)       = {np.abs(rb - rn).max():.3f}")

# %%
fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.5))
a1.plot(xs, dc)
a1.set_xlabel("x")
a1.set_ylabel("ΔC(x)")
a2.plot(mu2, rb, label="broad")
a2.plot(mu2, rn, label="narrow")
a2.set_xlabel("μ²")
a2.set_ylabel("ρ^σ(μ²)")
a2.legend()
fig.tight_layout()
fig.savefig(OUT / "ill_posed.png", dpi=100)
plt.close(fig)

# %% [markdown]
# Any method that turns correlator data into a single density has to pick
# one of these. The bounds in the next demos instead report the whole range
# of values compatible with the data.

# %%
corr = synth_correlator(broad, log_spaced(1e-5, 3.0, 100))
print(len(corr), "points, C(1e-5) =", corr.values[0], ", C(3) =", corr.values[-1])
