// assume(true)
void fill_count(int A[], int N) {
  int S;
  S = 0;
  for (int i = 0; i < N; i++) A[i] = 0;
  for (int j = 0; j < N; j++) S = S + 1;
  for (int k = 0; k < N; k++) {
    for (int l = 0; l < N; l++) A[l] = A[l] + 1;
    A[k] = A[k] + S;
  }
}
// assert(forall x in [0,N) :: A[x] == 2*N)
