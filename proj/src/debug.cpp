#include "kotrie/debug.hpp"

#include <cstdlib>
#include <cstring>

namespace kotrie::debug {

bool poison_from_environment() noexcept {
  const char *v = std::getenv("KOTRIE_DEBUG_POISON");
  return v != nullptr && *v != '\0' && std::strcmp(v, "0") != 0;
}

Counters &counters() noexcept {
  static Counters c;
  return c;
}

void reset_counters() noexcept {
  auto &c = counters();
  c.poison_reads = 0;
  c.double_bagging = 0;
  c.early_drains = 0;
  c.drained = 0;
  c.dcount_underflow = 0;
  c.shadow_violations = 0;
  c.shadow_increments = 0;
}

}  // namespace kotrie::debug
