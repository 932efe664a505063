int packet_length(struct packet *pkt) {
  int len = pkt->len;
  return len + 4;
}
