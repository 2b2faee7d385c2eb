#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace elabqud::util {

using WarningSink = std::function<void(std::string_view)>;

inline WarningSink& warning_sink() {
  static WarningSink sink = [](std::string_view msg) { std::cerr << "warning: " << msg << "\n"; };
  return sink;
}

inline void warn(std::string_view msg) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  if (warning_sink()) warning_sink()(msg);
}

}  // namespace elabqud::util
