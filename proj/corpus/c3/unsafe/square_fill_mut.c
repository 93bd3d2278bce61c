// assume(true)
void square_fill_mut(int N) {
  int A[N][N];
  for (int i = 0; i < N; i++)
    for (int j = 0; j < N; j++)
      A[i][j] = N;
}
// assert(forall i in [0,N) :: forall j in [0,N) :: A[i][j] == N + i)
