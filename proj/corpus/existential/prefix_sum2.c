// assume(forall i in [0,N) :: A[i] == N)
void prefix_sum2(int A[], int B[], int N) {
  int sum;
  sum = 0;
  for (int i = 0; i < N; i = i + 1) {
    sum = sum + A[i];
    B[i] = sum + i;
  }
}
// assert(exists i in [0,N) :: B[i] == i + N*N)
