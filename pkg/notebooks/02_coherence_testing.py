# coding: utf-8

# # Testing against incoherent states
#
# For the maximally coherent qubit the relative entropy of coherence is 1 bit
# and it is additive, so every level of the regularisation gives the same
# number. The composite hypothesis-testing rate approaches it from above at
# small n.

# In[1]:

import numpy as np

from qresource.free_sets import coherence_family
from qresource.linalg import projector
from qresource.monotones import coherence_ree_exact, regularization_trace
from qresource.stein import coherence_stein_check

plus = projector(np.ones(2) / np.sqrt(2))
fam = coherence_family(2)


# In[2]:

tr = regularization_trace(plus, fam, 3)
print("d_n:", tr.d_n, "closed form:", coherence_ree_exact(plus))


# Rates for two error levels. A larger type-I allowance can only raise the
# rate at fixed n.

# In[3]:

table = coherence_stein_check(plus, [0.05, 0.3], 4)
for row in table.rows:
    print(row["n"], row["eps"], round(row["rate_bits"], 6), round(row["deviation"], 6), row["converse_ok"])
print("nondecreasing in eps:", table.eps_monotone())


# The one-shot rate at n = 1 is exactly 1 - log2(1 - eps) here, because the
# optimal free state is I/2 and the optimal test is the |+> projector scaled
# down to type-I error eps.

# In[4]:

print(1 - np.log2(0.95))
