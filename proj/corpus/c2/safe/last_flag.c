// assume(true)
void last_flag(int N) {
  int f;
  f = 0;
  for (int i = 0; i < N; i++) {
    if (i == N - 1) f = 1;
  }
}
// assert(f == 1)
