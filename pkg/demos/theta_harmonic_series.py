# The ThetaHarmonic sequence: summable increments, divergent angle sum.

import numpy as np

from cuntzlab.invariants import angle_partial_sums, harmonic_crossing, increment_partial_sums
from cuntzlab.sequences import Constant, Geometric, ThetaHarmonic
from cuntzlab.states import ProductState, conjugacy_test, equivalence_test, in_P_test

seq = ThetaHarmonic()
print("first angles:", seq.angles(0, 10))

horizons = (10, 100, 1000, 10000, 100000)
print("sum |h_k - h_(k+1)|:", np.round(increment_partial_sums(seq, horizons), 6))

# at the end of block q the angle sum is exactly H_q
Q = 83
ends = tuple(q * (q + 1) // 2 for q in range(1, Q + 1))
sums = angle_partial_sums(seq, ends)
print("H_82, H_83 from the angle sums:", sums[-2], sums[-1])
print("crossing of 5:", harmonic_crossing(5.0))

theta = ProductState(seq)
e0 = ProductState(Constant(np.array([1.0, 0.0])))
print("in P:", in_P_test(theta).verdict)
res = equivalence_test(theta, e0)
print("equivalent to the e_0 product state:", res.verdict, "forms agree:", res.details["agree"])
print("overlap products:", np.round(res.details["overlap_products"], 4))
rep = conjugacy_test(theta, e0)
print("conjugate:", rep["verdict"], "heuristic:", rep["heuristic"])

# the geometric ladder, by contrast, is absorbed
print("Geometric vs e_0:", equivalence_test(ProductState(Geometric()), e0).verdict)
