"""Library tour: apply an operator, compose, check the remainder, estimate a norm."""
import numpy as np

from sgfio.calculus import compose_mixed
from sgfio.grid import make_grid, test_function as sample
from sgfio.operators import apply, chain, fio1, pdo
from sgfio.presets import make_phase, make_symbol
from sgfio.verify import operator_norm

grid = make_grid(1, 256, 20.0)
u = sample(grid, "modulated_gaussian", frequency=3.0)
phase = make_phase("perturbed", eps=0.3)
p = make_symbol("japanese_xi")
a = make_symbol("sg00")

# identity phase with unit amplitude reproduces the input
v = apply(fio1(make_phase("identity"), make_symbol("one")), u)
print("identity defect", np.linalg.norm(v.values - u.values) / np.linalg.norm(u.values))

# Op(p) Op_phi(a) against Op_phi(c_M); c_M sums the terms with |alpha| < M, so M = 0 is zero
direct = apply(chain(pdo(p), fio1(phase, a)), u)
for M in range(4):
    c = compose_mixed("pdo_fio1", p, a, phase, M=M).symbol
    w = apply(fio1(phase, c), u)
    err = np.linalg.norm(w.values - direct.values) / np.linalg.norm(direct.values)
    print(f"M={M} relative defect {err:.3e}")

est = operator_norm(fio1(phase, make_symbol("xi_decay")), make_grid(1, 128, 10.0), seed=0)
print("L2 norm estimate", est.estimate, "converged", est.converged)
