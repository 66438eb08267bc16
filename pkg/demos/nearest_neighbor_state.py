# Nearest-neighbour shift: the state, its transfer unitary, and why no
# joint eigenvector exists.

import itertools

import numpy as np

from cuntzlab.cuntz_rep import NearestNeighbor, haar_family, transfer_unitary, vacuum_word_expectation
from cuntzlab.invariants import eigen_residual_curve, wold_decompose, us_isometry
from cuntzlab.states import NearestNeighborState, density_matrix, eval_state

n = 2
fam = NearestNeighbor(n)
spec = NearestNeighborState(n)

# The transfer unitary from the Haar family is the character multiplier <x_0, x_1>.
U = transfer_unitary(haar_family(n), fam, 2)
print("transfer unitary diagonal:", np.round(np.diag(U).real, 12))

# State values on word pairs: closed form against <1, T_i T_j^* 1>.
worst = 0.0
for k in (1, 2, 3):
    for i in itertools.product(range(n), repeat=k):
        for j in itertools.product(range(n), repeat=k):
            worst = max(worst, abs(eval_state(spec, i, j) - vacuum_word_expectation(fam, i, j)))
print("closed form vs brute force, k <= 3:", worst)

# The two-site density matrix at the origin and one site further out.
rho0 = density_matrix(spec, 2, 0).block
rho1 = density_matrix(spec, 2, 1).block
rho2 = density_matrix(spec, 2, 2).block
print("rho at the origin:\n", np.round(rho0, 3))
print("rho one site out:\n", np.round(rho1, 3))
print("shift changes the window at the origin:", np.abs(rho1 - rho0).max())
print("but not beyond it:", np.abs(rho2 - rho1).max())

# Residuals of T_j^* xi = lambda_j xi stay away from zero.
c = eigen_residual_curve(fam, np.full(n, n**-0.5), range(1, 6))
print("eigen residuals, uniform lambda:", np.round(c.residuals, 4))

# US is a pure isometry: no unitary part survives five adjoint steps.
print("Wold ranks:", wold_decompose(us_isometry(n), 5, 2).unitary_rank)
