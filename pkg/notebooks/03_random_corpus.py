# %% [markdown]
# # Structural verdict against exact behaviour on random plants
#
# Each rejected plant should leave some failure undetected forever at every
# site.  A few accepted plants do too, when the sites' estimates drift out of
# phase.

# %%
from collections import Counter

from codiag import check_codiagnosability, limit_nondetection
from codiag.automaton import failure_seeds
from codiag.generate import random_corpus

corpus = random_corpus(200, sites=2, seed=202)
tally = Counter()
for i, a in enumerate(corpus):
    verdict = check_codiagnosability(a).codiagnosable
    stuck = any(
        all(limit_nondetection(a, s, j) > 1e-9 for j in (1, 2))
        for s in failure_seeds(a, "F", 6)
    )
    tally[verdict, stuck] += 1
    if verdict and stuck:
        print("accepted but never detected:", i)
print(tally)
