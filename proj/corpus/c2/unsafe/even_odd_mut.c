// assume(true)
void even_odd_mut(int A[], int N) {
  for (int i = 0; i < N; i++) {
    if (i % 2 == 0) A[i] = 0;
    else A[i] = 1;
  }
}
// assert(forall i in [0,N) :: A[i] == (i + 1) % 2)
