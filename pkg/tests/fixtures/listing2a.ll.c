param int n;
array int A[n];
#pragma omp unroll factor(2)
#pragma omp reverse
for (int i = 0; i < n; i += 1)
  S: A[i] = i;
