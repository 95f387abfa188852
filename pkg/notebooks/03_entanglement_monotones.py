# coding: utf-8

# # Monotones of two-qubit states
#
# Relative entropy of entanglement, both robustnesses and the log-robustness
# on Werner states p Φ + (1 - p) I/4. The state is entangled for p > 1/3.

# In[1]:

import numpy as np

from qresource.free_sets import separable_two_qubit_family
from qresource.linalg import ebit
from qresource.monotones import generalized_robustness, log_robustness, relative_entropy_of_resource, standard_robustness

sep = separable_two_qubit_family()


# In[2]:

for p in (0.2, 0.4, 0.6, 0.8, 1.0):
    rho = p * ebit() + (1 - p) * np.eye(4) / 4
    ree = relative_entropy_of_resource(rho, sep).value
    r = generalized_robustness(rho, sep).value
    rs = standard_robustness(rho, sep).value
    print(f"p={p:.1f}  REE={ree:.5f}  R={r:.5f}  Rs={rs:.5f}")


# log2(1 + R) agrees with the direct minimisation of the max-relative entropy.

# In[3]:

res = log_robustness(ebit(), sep)
print(res.value, res.details["direct"])
