void reset_state(struct ctx *c, int size) {
  memset(c->buf, 0, size);
  c->used = 0;
}
