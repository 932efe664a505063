int copy_packet(char *src, int n, int count) {
  char buf[16];
  int size = 16;
  int total = 0;
  int idx = 0;
  int tmp = n;
  total = total + 3;
  if (n < size) {
    memcpy(buf, src, n);
  }
  log_value(total);
  return total;
}
