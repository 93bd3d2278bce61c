// assume(true)
void triangle(int N) {
  int s;
  s = 0;
  for (int i = 0; i < N; i++)
    for (int j = 0; j < i; j++)
      s = s + 1;
}
// assert(2*s == N*N - N)
