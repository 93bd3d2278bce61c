// assume(true)
void init_const_mut(int A[], int N) {
  for (int i = 0; i < N; i++) A[i] = 5;
}
// assert(forall i in [0,N) :: A[i] == 4)
