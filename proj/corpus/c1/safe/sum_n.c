// assume(true)
void sum_n(int N) {
  int s;
  s = 0;
  for (int i = 0; i < N; i++) s = s + N;
}
// assert(s == N*N)
