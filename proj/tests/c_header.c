/* The public header must compile as C. */
#include "cqn/cqn.h"

#include <stdio.h>
#include <string.h>

int main(void) {
  cqn_config* config = NULL;
  char* names = NULL;
  if (cqn_config_bundled("critical", &config) != CQN_OK) return 1;
  if (cqn_validate(config, NULL) != CQN_OK) return 1;
  cqn_config_free(config);
  if (cqn_bundled_names(&names) != CQN_OK) return 1;
  if (strstr(names, "critical") == NULL) return 1;
  cqn_string_free(names);
  printf("cqn %s\n", cqn_version());
  return 0;
}
