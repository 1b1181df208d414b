array double A[128][128];
#pragma omp interchange permutation(outer_i,outer_j,inner_i,inner_j)
#pragma omp stripmine strip_size(4) pit_id(outer_i) strip_id(inner_i)
for (int i = 0; i < 128; i += 1)
  #pragma omp stripmine strip_size(4) pit_id(outer_j) strip_id(inner_j)
  for (int j = 0; j < 128; j += 1)
    S: A[i][j] = A[i][j] + 1.0;
