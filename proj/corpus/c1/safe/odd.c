// assume(true)
void odd(int A[], int N) {
  for (int i = 0; i < N; i++) A[i] = 2*i + 1;
}
// assert(forall i in [0,N) :: A[i] == 2*i + 1)
