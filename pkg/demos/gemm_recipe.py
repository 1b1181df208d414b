"""A matrix-multiply optimization recipe written entirely as pragmas.

The zero-initialization is split off, the compute nest is tiled, the tiles
are permuted, and the result is checked against the untouched program.

Run: python3 demos/gemm_recipe.py
"""
import looppragma as lp

SOURCE = """\
param int M, N, K;
array double A[M][K];
array double B[K][N];
array double C[M][N];
for (int i = 0; i < M; i += 1)
  for (int j = 0; j < N; j += 1) {
    #pragma omp id(zero)
    { C[i][j] = 0; }
    for (int k = 0; k < K; k += 1)
      C[i][j] += A[i][k] * B[k][j];
  }
#pragma omp loop(i, j) distribute sections(zero, k)
#pragma omp loop(i, j, k) tile sizes(2, 3, 2) pit_ids(i1, j1, k1) tile_ids(i2, j2, k2)
#pragma omp loop(i1, ..., j2) interchange permutation(j1, k1, i1, j2, i2)
#pragma omp loop(i2) simd
"""

original = lp.load(SOURCE, file="gemm.ll.c")
result = lp.apply_all(original)

print("== what each directive did")
for report in result.reports:
    print(report.line_text())

print("\n== dependences of the original nest")
print(lp.analyze(original).report())

print("\n== transformed program")
print(lp.emit(result.tree))

print("== same program as plain C")
print(lp.emit(result.tree, style="pretty-c"))

sizes = {"M": 6, "N": 6, "K": 6}
before = lp.run(original, sizes, lp.InitSpec.seeded(1))
after = lp.run(result.tree, sizes, lp.InitSpec.seeded(1))
print("== check at M=N=K=6:", lp.equivalent(before, after, "memory+trace-multiset"))
