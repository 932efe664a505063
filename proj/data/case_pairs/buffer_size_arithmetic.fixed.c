char *dup_name(const char *name) {
  int len = strlen(name);
  char *copy = malloc(len + 1);
  if (copy == NULL)
    return NULL;
  strcpy(copy, name);
  return copy;
}
