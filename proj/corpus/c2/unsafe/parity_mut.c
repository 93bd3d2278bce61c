// assume(true)
void parity_mut(int N) {
  int f;
  f = 0;
  for (int i = 0; i < N; i++) f = 1 - f;
}
// assert(f == (N + 1) % 2)
