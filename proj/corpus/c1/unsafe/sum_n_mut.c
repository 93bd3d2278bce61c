// assume(true)
void sum_n_mut(int N) {
  int s;
  s = 0;
  for (int i = 0; i < N; i++) s = s + i;
}
// assert(s == N*N)
