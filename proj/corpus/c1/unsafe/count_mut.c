// assume(true)
void count_mut(int N) {
  int c;
  c = 1;
  for (int i = 0; i < N; i++) c = c + 1;
}
// assert(c == N)
