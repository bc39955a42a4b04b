# %% [markdown]
# # A blind spot shared by both sites
#
# After `d f` the plant loops on `a`, which both sites see, and the event
# that would reveal the failure is visible to nobody.

# %%
from codiag import check_codiagnosability, decay_curve, limit_nondetection
from codiag.io import codiag_state_label
from codiag.models import blind_spot_plant

plant = blind_spot_plant()
v = check_codiagnosability(plant)
print("codiagnosable:", v.codiagnosable)
for state, event in v.witness_cycle:
    print(codiag_state_label(state), event.render("ε"))

# %% [markdown]
# The exact limit of non-detection confirms the verdict behaviourally.

# %%
for site in (1, 2):
    print(f"site {site}: limit {limit_nondetection(plant, ('d', 'f'), site):.4f}")

exact = decay_curve(plant, max_n=25)
sampled = decay_curve(plant, max_n=25, mode="sampled", trials=10000, seed_rng=1)
for seed in exact:
    print(" ".join(seed), exact[seed].final(), sampled[seed].final())
