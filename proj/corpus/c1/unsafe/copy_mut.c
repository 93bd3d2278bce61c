// assume(true)
void copy_mut(int A[], int B[], int N) {
  for (int i = 0; i < N; i++) B[i] = A[i] + 1;
}
// assert(forall i in [0,N) :: B[i] == A[i])
