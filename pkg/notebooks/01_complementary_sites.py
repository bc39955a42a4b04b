# %% [markdown]
# # Two sites that cover each other
#
# Neither site can diagnose the failure on its own: site 1 misses the run
# through `d` and site 2 misses the direct one.  Together they always catch it.

# %%
from codiag import (
    build_codiagnoser,
    build_stochastic_diagnoser,
    check_codiagnosability,
    decay_curve,
    export_dot,
)
from codiag.models import complementary_sites_plant
from codiag.observer import estimate_str

plant = complementary_sites_plant()
for t in plant.transitions:
    print(t.source, t.event, t.target, t.probability)

# %% [markdown]
# ## Local diagnosers and their matrices

# %%
for site in (1, 2):
    sd = build_stochastic_diagnoser(plant, site)
    print(f"site {site}")
    for (x, e), m in sorted(sd.matrices.items(), key=lambda kv: (estimate_str(kv[0][0]), kv[0][1])):
        print(f"  {estimate_str(x)} --{e}-->\n{m}")

# %% [markdown]
# ## Verdict

# %%
v = check_codiagnosability(plant)
print("codiagnosable:", v.codiagnosable)
print("diagnosable at one site:", v.per_site_centralized)

g = build_codiagnoser(plant)
print(export_dot(g, "codiagnoser"))

# %% [markdown]
# ## Non-detection decays geometrically

# %%
for seed, curve in decay_curve(plant, max_n=12).items():
    print(" ".join(seed), [round(p, 4) for _, p in curve.min_envelope])
