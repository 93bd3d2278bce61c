// assume(true)
void init_inc_mut(int A[], int N) {
  for (int i = 0; i < N; i++) A[i] = 0;
  for (int j = 0; j < N; j++) A[j] = A[j] + 1;
}
// assert(forall x in [0,N) :: A[x] == 2)
