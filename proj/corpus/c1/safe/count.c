// assume(true)
void count(int N) {
  int c;
  c = 0;
  for (int i = 0; i < N; i++) c = c + 1;
}
// assert(c == N)
