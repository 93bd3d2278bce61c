// assume(forall i in [0,N) :: A[i] == N)
void pre_shift_mut(int A[], int B[], int N) {
  for (int i = 0; i < N; i++) B[i] = A[i];
}
// assert(forall i in [0,N) :: B[i] == N + 1)
