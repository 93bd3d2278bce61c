// assume(true)
void average(int A[], int N) {
  float avg;
  int sum;
  sum = 0;
  for (int i = 0; i < N; i = i + 1) sum = sum + A[i];
  avg = sum / N;
}
// assert(exists i in [0,N) :: A[i] <= avg)
