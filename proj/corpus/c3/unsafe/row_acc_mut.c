// assume(true)
void row_acc_mut(int B[], int N) {
  for (int i = 0; i < N; i++) B[i] = 0;
  for (int k = 0; k < N; k++)
    for (int j = 0; j < N; j++)
      B[k] = B[k] + 1;
}
// assert(forall x in [0,N) :: B[x] == N + 1)
