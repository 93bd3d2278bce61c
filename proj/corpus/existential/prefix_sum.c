// assume(forall i in [0,N) :: A[i] == 1)
void prefix_sum(int A[], int B[], int N) {
  int sum;
  sum = 0;
  for (int i = 0; i < N; i = i + 1) {
    sum = sum + A[i];
    B[i] = sum;
  }
}
// assert(exists i in [0,N) :: B[i] == N)
