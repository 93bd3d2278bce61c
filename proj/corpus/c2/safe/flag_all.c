// assume(true)
void flag_all(int A[], int N) {
  int s;
  s = 0;
  for (int i = 0; i < N; i++) s = s + 1;
  for (int j = 0; j < N; j++) {
    if (s == N) A[j] = 1;
    else A[j] = 0;
  }
}
// assert(forall j in [0,N) :: A[j] == 1)
