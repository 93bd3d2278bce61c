// assume(N > 1)
void even_odd_exists(int A[], int N) {
  for (int i = 0; i < N; i = i + 1) {
    if (i % 2 == 0) A[i] = 0;
    else A[i] = 1;
  }
}
// assert((exists i in [0,N) :: A[i] == 1) && (exists j in [0,N) :: A[j] == 0))
