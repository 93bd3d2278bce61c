// assume(true)
void mod_count(int N) {
  int s;
  s = 0;
  for (int i = 0; i < N; i++) {
    if (i % 2 == 0) s = s + 1;
  }
}
// assert(s == (N + 1) / 2)
