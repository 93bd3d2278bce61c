// assume(true)
void nested_sum_mut(int N) {
  int s;
  s = 0;
  for (int i = 0; i < N; i++)
    for (int j = 0; j < N; j++)
      s = s + 1;
}
// assert(s == N*N + 1)
