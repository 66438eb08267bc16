# Clustering curves <xi, alpha^k(A) xi> and Cesaro means for three shifts.

import numpy as np

from cuntzlab.cuntz_rep import haar_family
from cuntzlab.endo import MatrixObservable, cesaro_mean, clustering_curve, vacuum_expectation
from cuntzlab.experiments import VARIANTS, build_family, geometric_clustering, theta_clustering
from cuntzlab.lattice import CylinderVector

rng = np.random.default_rng(0)

# Haar: exactly constant once the observable has moved past xi
fam = haar_family(2)
H = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
A = MatrixObservable(H + H.conj().T, 2)
xi = CylinderVector(rng.normal(size=8) + 0j, fam.measure)
curve = clustering_curve(fam, A, xi, 8)
print("Haar curve:", np.round(curve.real, 6))
print("limit:", (vacuum_expectation(A, fam.measure) * xi.norm() ** 2).real)

# ThetaHarmonic gauge: the curve is a product of overlaps and keeps falling
curve, oracle = theta_clustering(2, 4, 20)
print("ThetaHarmonic c_k:", np.round(curve.real[::4], 4))
print("product oracle:  ", np.round(oracle[::4], 4))

# Geometric gauge: converges to the absorbed value
curve, target = geometric_clustering(2, 3, 12)
print("Geometric error at K = 12:", abs(curve[-1] - target))

# Cesaro defects against 2|A|/N
for v in VARIANTS:
    f = build_family(v, 2, np.random.default_rng(1))
    d = [cesaro_mean(f, A, N).defect for N in (2, 4, 8, 16)]
    print(f"{v:18s}", np.round(d, 4), "bound", np.round([2 * A.norm() / N for N in (2, 4, 8, 16)], 4))
