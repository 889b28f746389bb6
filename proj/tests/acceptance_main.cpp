// One line per acceptance criterion; exit status 0 only if every one passes.
#include <cstdio>
#include <cstdlib>
#include <string>

#include "cqn/cqn.h"

namespace {

void print(const cqn_criterion* c, void*) {
  std::printf("%s criterion %2d  %-40s value=%.6g threshold=%.6g  %s\n", c->pass ? "PASS" : "FAIL", c->id, c->name,
              c->value, c->threshold, c->detail);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  cqn_verify_options opt{};
  opt.threads = 4;
  if (argc > 1) opt.reps = std::strtoull(argv[1], nullptr, 10);
  const cqn_status s = cqn_verify(&opt, print, nullptr, nullptr, nullptr);
  if (s != CQN_OK) std::printf("%s\n", cqn_last_error());
  return s == CQN_OK ? 0 : 1;
}
