// assume(true)
void sign_check(int A[], int B[], int N) {
  int S, F;
  S = 0;
  F = 1;
  for (int i = 0; i < N; i++) {
    S = S + 1;
    if (A[i] >= 0) B[i] = 1;
    else B[i] = 0;
  }
  for (int j = 0; j < N; j++) {
    if (S == N) {
      if (A[j] >= 0 && !B[j]) F = 0;
      if (A[j] < 0 && B[j]) F = 0;
    }
  }
}
// assert(F == 1)
