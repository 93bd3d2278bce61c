// assume(true)
void sum_const(int N) {
  int s;
  s = 0;
  for (int i = 0; i < N; i++) s = s + 3;
}
// assert(s == 3*N)
