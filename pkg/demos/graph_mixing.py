"""
Random communication graphs and consensus.

Each round draws an undirected random graph, adds the path 0-1-...-(n-1) so
every round is connected, and uses weight 1/n per edge. The script checks
the resulting sequence (double stochasticity, weight floor, connectivity)
and compares how fast products of mixing matrices approach the averaging
matrix with the geometric bound tau * lambda^k.
"""

import numpy as np

from distoco.network import er_path_sequence, mix_states, validate_mixing_sequence

n, rho, T = 10, 0.3, 200
seq = er_path_sequence(n, rho, T, seed=0)

#%% validate the sequence
print(validate_mixing_sequence(seq).summary())
tau, lam = seq.constants
print(f"tau = {tau:.6f}, lambda = {lam:.8f}")

#%% product contraction against the bound
P = np.eye(n)
print(f"\n{'k':>4} {'max |Psi - 1/n|':>16} {'tau lambda^k':>14}")
for k in range(1, 51):
    P = seq[k].W @ P
    if k in (1, 2, 5, 10, 20, 50):
        print(f"{k:4d} {np.max(np.abs(P - 1 / n)):16.3e} {tau * lam ** k:14.6f}")

#%% the bound is loose: consensus on a random state is reached in a handful of rounds
X = np.random.default_rng(1).uniform(-5, 5, (n, 4))
for k in range(1, 11):
    X = mix_states(seq[k], X)
print("\nspread after 10 mixing rounds:", np.max(np.linalg.norm(X - X.mean(axis=0), axis=1)))
