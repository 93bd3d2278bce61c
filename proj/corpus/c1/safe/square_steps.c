// assume(true)
void square_steps(int N) {
  int x;
  int a[N];
  int b[N];
  x = 0;
  for (int i = 0; i < N; i++) {
    x = x + N * N;
    a[i] = a[i] + N;
  }
  for (int j = 0; j < N; j++) {
    b[j] = x + j;
  }
}
// assert(forall j in [0,N) :: b[j] == j + N*N*N)
