#pragma once

#include <string_view>

#include "projner/io.hpp"

namespace projner::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Threshold from PROJNER_LOG (error, warn, info, debug; default warn).
Level threshold();

// One JSON object per line on stderr: {"level", "event", ...fields}.
void emit(Level level, std::string_view event, const ojson& fields = ojson::object());

inline void info(std::string_view event, const ojson& fields = ojson::object()) { emit(Level::Info, event, fields); }
inline void debug(std::string_view event, const ojson& fields = ojson::object()) { emit(Level::Debug, event, fields); }
inline void warn(std::string_view event, const ojson& fields = ojson::object()) { emit(Level::Warn, event, fields); }
inline void error(std::string_view event, const ojson& fields = ojson::object()) { emit(Level::Error, event, fields); }

}  // namespace projner::log
