#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <utility>

namespace sphcoint {

using WarningSink = std::function<void(const std::string&)>;

inline WarningSink& warning_sink() {
  static WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}

/// Replaces the warning sink; returns the previous one.
inline WarningSink set_warning_sink(WarningSink sink) { return std::exchange(warning_sink(), std::move(sink)); }

inline void warn(const std::string& msg) {
  if (warning_sink()) warning_sink()(msg);
}

}  // namespace sphcoint
