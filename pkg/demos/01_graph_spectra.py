"""Tour of the graph-theoretic quantities behind the protocol guarantees.

Builds a few follower topologies, inspects reachability, the Laplacian
partition, the positive diagonal certificate for leader-rooted graphs and
the left null vector / algebraic connectivity for strongly connected ones.

Run:  python3 demos/01_graph_spectra.py
"""

import numpy as np

from formctl import (build_topology, diag_G_for_M_matrix,
                     has_spanning_tree_from_leader, is_strongly_connected,
                     lambda2_symmetrized, laplacian, left_null_vector,
                     partition_followers, simple_zero_eigenvalue)

np.set_printoptions(precision=3, suppress=True)

# A directed chain pinned at the first follower: leader -> 1 -> 2 -> 3.
chain = build_topology(
    adjacency=[[0, 0, 0], [1, 0, 0], [0, 1, 0]],
    pinning=[1.0, 0.0, 0.0])
print("chain Laplacian:\n", laplacian(chain))
print("leader roots a spanning tree:", has_spanning_tree_from_leader(chain))
print("zero eigenvalue simple:      ", simple_zero_eigenvalue(chain))

l1, l2 = partition_followers(chain)
print("\nleader-rooted partition")
print("L1 =\n", l1)
print("L2 =", l2.ravel(), " (and L1 @ 1 =", l1 @ np.ones(3), ")")

# L1 is a nonsingular M-matrix, so a positive diagonal G certifies
# G L1 + L1' G > 0; the protocols use its smallest eigenvalue.
g, lam0 = diag_G_for_M_matrix(l1)
print("G =", np.diag(g), " lambda_min(G L1 + L1' G) =", round(lam0, 4))

# A strongly connected cycle (leaderless): the stabilization regimes live
# here.  The positive left null vector r reweights the graph symmetrically.
cycle = build_topology(
    adjacency=[[0, 0, 1], [1, 0, 0], [0, 1, 0]],
    pinning=[0.0, 0.0, 0.0])
print("\ncycle strongly connected:", is_strongly_connected(cycle))
r = left_null_vector(cycle)
print("left null vector r =", r, "  r' L =", r @ laplacian(cycle))
print("algebraic connectivity of R L + L' R:",
      round(lambda2_symmetrized(cycle, r), 4))

# Losing an edge breaks strong connectivity and the certificate with it.
broken = build_topology(
    adjacency=[[0, 0, 0], [1, 0, 0], [0, 1, 0]],
    pinning=[0.0, 0.0, 0.0])
print("\nbroken cycle strongly connected:", is_strongly_connected(broken))
