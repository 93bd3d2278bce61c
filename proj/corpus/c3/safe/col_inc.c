// assume(true)
void col_inc(int C[], int N) {
  for (int i = 0; i < N; i++) C[i] = 0;
  for (int k = 0; k < N; k++)
    for (int j = 0; j < N; j++)
      C[j] = C[j] + 1;
}
// assert(forall x in [0,N) :: C[x] == N)
