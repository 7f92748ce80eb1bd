"""
Geometry of SPD matrices
========================

A tour of the manifold primitives: the affine-invariant distance, the
Frechet mean, tangent-space maps, and the weighted half-vectorization.
Run from the repository root:

    python3 demos/01_spd_geometry.py
"""

import numpy as np

import tssf

rng = np.random.default_rng(42)


def random_spd(c, spread=1.0):
    q, r = np.linalg.qr(rng.standard_normal((c, c)))
    q = q * np.sign(np.diag(r))
    return (q * np.exp(spread * rng.uniform(-1, 1, c))) @ q.T


######################################################################
# Distances: Euclidean vs affine-invariant
# ----------------------------------------
# The affine-invariant distance is unchanged when both matrices are
# transformed by the same invertible matrix -- re-referencing or linearly
# mixing the channels of a recording does not move its covariance
# geometry.

a, b = random_spd(4), random_spd(4)
w = rng.standard_normal((4, 4)) + 2 * np.eye(4)

print("=" * 60)
print("Affine invariance")
print("=" * 60)
print(f"d(A, B)               = {tssf.airm_distance(a, b):.6f}")
print(f"d(W'AW, W'BW)         = {tssf.airm_distance(w.T @ a @ w, w.T @ b @ w):.6f}")
euclid = np.linalg.norm(a - b)
euclid_t = np.linalg.norm(w.T @ (a - b) @ w)
print(f"Euclidean counterpart = {euclid:.4f} vs {euclid_t:.4f}  (not invariant)")

######################################################################
# The Frechet mean
# ----------------
# The arithmetic mean of SPD matrices systematically inflates the
# determinant ("swelling"); the Frechet mean under the affine-invariant
# metric does not. For commuting matrices it reduces to the geometric
# mean of the eigenvalues.

pair = [np.diag([1.0, 4.0]), np.diag([4.0, 1.0])]
mean = tssf.frechet_mean(pair)
arith = (pair[0] + pair[1]) / 2

print()
print("=" * 60)
print("Frechet vs arithmetic mean of diag(1,4) and diag(4,1)")
print("=" * 60)
print("Frechet mean:\n", np.round(mean, 6))
print("arithmetic mean:\n", arith)
print(f"det: inputs {np.linalg.det(pair[0]):.1f}, frechet {np.linalg.det(mean):.3f}, "
      f"arithmetic {np.linalg.det(arith):.3f}")

points = [random_spd(5) for _ in range(12)]
center = tssf.frechet_mean(points)
residual = np.linalg.norm(np.mean([tssf.log_map_at(center, p) for p in points], axis=0))
print(f"\n12 random 5x5 matrices: fixed-point residual {residual:.2e}")

######################################################################
# Tangent space
# -------------
# The log map flattens a neighborhood of the mean into a vector space;
# the exp map folds it back. Vectorization with sqrt(2)-weighted
# off-diagonals turns the trace inner product into a plain dot product.

x = random_spd(5)
tangent = tssf.log_map_at(center, x)
back = tssf.exp_map_at(center, tangent)
print()
print("=" * 60)
print("Tangent round trip and vectorization")
print("=" * 60)
print(f"|| exp_map(log_map(X)) - X ||_F = {np.linalg.norm(back - x):.2e}")

s1 = tangent
s2 = tssf.log_map_at(center, random_spd(5))
lhs = np.dot(tssf.vec(s1), tssf.vec(s2))
print(f"vec(S1) . vec(S2) = {lhs:.6f}")
print(f"Tr(S1 S2)         = {np.trace(s1 @ s2):.6f}")

######################################################################
# Generalized eigendecomposition
# ------------------------------
# ged(A, B) whitens B and diagonalizes A in the whitened basis: the
# returned filters F satisfy F'BF = I and F'AF = diag(d). Taking the
# matrix logarithm of A keeps the eigenvectors and takes the log of the
# eigenvalues -- the identity behind one-step classification.

cw = tssf.exp_map_at(center, 0.5 * s1)
res_cov = tssf.ged(cw, center)
res_tan = tssf.ged(tssf.log_map_at(center, cw), center)
print()
print("=" * 60)
print("Eigenvector invariance under the logarithm")
print("=" * 60)
print("eigenvalues of ged(Cw, Cm):      ", np.round(res_cov.eigenvalues, 4))
print("log of those:                    ", np.round(np.log(res_cov.eigenvalues), 4))
print("eigenvalues of ged(log Cw, Cm):  ", np.round(res_tan.eigenvalues, 4))
angle = tssf.subspace_angle_by_cluster(
    res_cov.eigenvectors, res_tan.eigenvectors, res_cov.eigenvalues
)
print(f"largest principal angle between the eigenvector sets: {angle:.2e}")
