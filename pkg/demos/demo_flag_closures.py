"""Parabolic closures over the flag of C^n and the Hopf isotropy algebra,
plus the rank computations behind the spanning property.

Adjoining a subdiagonal matrix unit to the upper triangulars and closing
under brackets and conjugation lands exactly on a block parabolic; a brute
force over all 2^(n-1) standard parabolics confirms minimality.  On the
Grassmannian the pivot-conjugated tangents reach full rank pq over the formal
field Q(i)(K); on the full flag the same construction for X_21 stays pinned
inside the first coordinate block.
"""

from robinlab import (SquareMatrix, extract_composition, flag_base,
                      grassmann_spanning_rank, hopf_closure_report,
                      minimal_parabolic_oracle, parabolic_closure)

E = SquareMatrix.elementary

print("== closures over the flag base, n = 4 ==")
base = flag_base(4)
for gens, label in (
        ([E(4, 2, 1)], "E21"),
        ([E(4, 3, 2)], "E32"),
        ([E(4, 2, 1), E(4, 4, 3)], "E21, E43"),
        ([E(4, 4, 1)], "E41")):
    P = parabolic_closure(gens, base)
    comp = extract_composition(P)
    oracle = minimal_parabolic_oracle(4, gens)
    print(f"  gens {label:10s} -> composition {comp.parts}  "
          f"(dim_C {P.dim_complex}, oracle {oracle.parts})")

print("\n== Hopf isotropy closures ==")
for n in (2, 3, 4):
    rep = hopf_closure_report(n)
    print(f"  n={n}: dim X0 = {rep.x0.dim_complex} = 1 + n(n-1); "
          f"escape -> dim {rep.escape.dim_complex} = n^2")
print(" ", hopf_closure_report(3).verdict)

print("\n== spanning ranks ==")
for (p, q) in ((1, 1), (2, 1), (2, 2), (3, 2)):
    rows = [[0] * (p + q) for _ in range(p + q)]
    rows[p][0] = 1
    if q > 1:
        rows[p + 1][min(1, p - 1)] = 2
    X = SquareMatrix(rows)
    r = grassmann_spanning_rank(p, q, X)
    print(f"  Grassmannian G({p},{p + q}): rank {r} of a maximum {p * q}")
print("  (full rank pq: the pair satisfies the spanning property)")
