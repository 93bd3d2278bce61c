// assume(N > 1)
void index_fill(int A[], int N) {
  for (int i = 0; i < N; i = i + 1) A[i] = i;
}
// assert((exists i in [0,N) :: A[i] > 0) && (exists j in [0,N) :: A[j] >= N - 1))
