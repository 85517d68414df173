"""Which states minimize the output entropy of the noisy heterodyne measurement?

Squeezed coherent states with the noise-matched squeeze sit on the lower
bound; squeezing them away from it, exciting them or randomizing them only
adds entropy.
"""
import numpy as np

from hetcap.measurement import (NoiseCovariance, build_model, min_wehrl_bound,
                                outcome_grid, wehrl_entropy)
from hetcap.states import (fock_extent, random_state, squeezed_coherent, squeezed_fock,
                           state_grid)

noise = NoiseCovariance(0.5, 8.0)
model = build_model(noise)
d0 = noise.minimizer_delta
bound = min_wehrl_bound(noise)
print(f"beta = (0.5, 8): optimal squeeze {d0}, bound {bound:.6f} nats")


def excess(psi):
    return wehrl_entropy(model, psi, outcome_grid(noise, psi, 256)) - bound


grid = state_grid(fock_extent(12, 4 * d0), 2048)
print("\ncoherent letters, displacement is irrelevant:")
for x, y in [(0, 0), (1.5, -0.5), (-3, 2)]:
    print(f"  |{x}, {y}>  excess {excess(squeezed_coherent(d0, x, y, grid)):+.2e}")

print("\nmismatched squeeze:")
for f in (0.5, 2.0, 4.0):
    print(f"  delta = {f} * d0  excess {excess(squeezed_coherent(f * d0, 0, 0, grid)):.4f}")

print("\nexcited and random states:")
for n in (1, 2, 5):
    print(f"  Fock {n}  excess {excess(squeezed_fock(n, d0, grid)):.4f}")
ex = [excess(random_state(s, 6, d0, grid)) for s in range(10)]
print(f"  10 random 6-mode states: min excess {np.min(ex):.4f}, mean {np.mean(ex):.4f}")
