int packet_length(struct packet *pkt) {
  if (pkt == NULL)
    return -1;
  int len = pkt->len;
  return len + 4;
}
