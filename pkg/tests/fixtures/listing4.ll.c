param int n;
array double A[n];
array double B[n];
#pragma omp section(A,B) distribute distributed_ids(loopA, loopB)
for (int i = 0; i < n; i += 1) {
  #pragma omp id(A)
  { SA: A[i] = A[i] + 1.0; }
  #pragma omp id(B)
  { SB: B[i] = B[i]*2.0; }
}
