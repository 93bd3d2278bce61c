// assume(true)
void abs_val(int A[], int B[], int N) {
  for (int i = 0; i < N; i++) {
    if (A[i] > 0) B[i] = A[i];
    else B[i] = 0 - A[i];
  }
}
// assert(forall i in [0,N) :: B[i] >= 0)
