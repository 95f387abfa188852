# coding: utf-8

# # Varentropy growth along i.i.d. products
#
# The weighted varentropy of an i.i.d. product grows linearly in the number of
# factors, so the per-copy quantity g(n) tends to the single-letter varentropy
# V(Q) rather than to zero. Whether it exceeds 1 depends on the alphabet.

# In[1]:

import numpy as np

from qresource.counterexample import counterexample_report, iid_power, max_varentropy_search, varentropy, weighted_varentropy


# Largest varentropy on d symbols, in bits².

# In[2]:

for d in (2, 3, 4, 5):
    q, v, _ = max_varentropy_search(d, restarts=8, seed=0)
    print(d, round(v, 6), np.round(q, 4))


# Additivity on explicit products: V(Q^{⊗k}) = k V(Q).

# In[3]:

q = np.array([0.7, 0.1, 0.1, 0.1])
for k in range(1, 6):
    qk = iid_power(q, k)
    print(k, weighted_varentropy(qk, qk), k * varentropy(q))


# The table for d = 4 with one symbol reserved at each end.

# In[4]:

rep = counterexample_report(4, 1, 1, (8, 16, 32, 64, 128), seed=0)
for row in rep.rows:
    print(row["n"], round(row["g"], 6))
print("exceeds one:", rep.exceeds_one)
