// assume(true)
void count_pos(int A[], int N) {
  int c;
  c = 0;
  for (int i = 0; i < N; i++) {
    if (A[i] > 0) c = c + 1;
  }
}
// assert(c >= 0 && c <= N)
