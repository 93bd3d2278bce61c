// assume(true)
void index_twice_mut(int A[], int B[], int N) {
  for (int i = 0; i < N; i++) A[i] = i;
  for (int j = 0; j < N; j++) B[j] = A[j] + j;
}
// assert(forall j in [0,N) :: B[j] == 2*j + 1)
