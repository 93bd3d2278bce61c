// assume(true)
void cube_mut(int N) {
  int x;
  x = 0;
  for (int i = 0; i < N; i++) x = x + N*N;
}
// assert(x == N*N*N + 1)
