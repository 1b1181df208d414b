param int n;
array double A[n];
array double B[n];
#pragma omp loop(i,j) fuse
for (int i = 0; i < n; i += 1) { SA: A[i] = A[i] + 1.0; }
for (int j = 0; j < n; j += 1) { SB: B[j] = A[j]*2.0; }
