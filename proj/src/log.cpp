#include "projner/log.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

namespace projner::log {

Level threshold() {
  const char* env = std::getenv("PROJNER_LOG");
  const std::string v = env ? env : "";
  if (v == "error") return Level::Error;
  if (v == "info") return Level::Info;
  if (v == "debug") return Level::Debug;
  return Level::Warn;
}

void emit(Level level, std::string_view event, const ojson& fields) {
  if (level > threshold()) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  ojson line;
  line["level"] = kNames[static_cast<int>(level)];
  line["event"] = event;
  for (const auto& [k, v] : fields.items()) line[k] = v;
  std::cerr << line.dump() << '\n';
}

}  // namespace projner::log
