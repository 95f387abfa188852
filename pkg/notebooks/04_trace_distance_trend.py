# coding: utf-8

# # Distance of many ebits to fully product states
#
# t_n is the trace distance from Φ^{⊗n} to the convex hull of states that are
# product across every qubit. It is nondecreasing in n; for the ebit the
# numbers sit on 1 - 2^{-n}.

# In[1]:

from qresource.free_sets import pseudo_entanglement_family
from qresource.linalg import ebit
from qresource.stein import ebit_distance_reference, trace_distance_to_free_trend

fam = pseudo_entanglement_family(2, 2)


# In[2]:

trend = trace_distance_to_free_trend(ebit(), fam, 3, seed=0)
for n, t, lo in zip(trend.levels, trend.values, trend.lower):
    print(n, round(t, 8), round(lo, 8), ebit_distance_reference(n))
print("nondecreasing:", trend.nondecreasing())
