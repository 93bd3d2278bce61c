// assume(true)
void max(int A[], int N) {
  int Max;
  Max = A[0];
  for (int i = 0; i < N; i = i + 1) {
    if (Max < A[i]) Max = A[i];
  }
}
// assert(exists i in [0,N) :: Max == A[i])
