void reset_state(struct ctx *c, int size) {
  if (!c || !c->buf)
    return;
  memset(c->buf, 0, size);
  c->used = 0;
}
