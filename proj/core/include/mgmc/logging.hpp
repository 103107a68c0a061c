#pragma once

#include <string>
#include <vector>

namespace mgmc::log {

enum class Level { Debug, Info, Warn, Error, Off };

void set_level(Level level);
void debug(const std::string& message);
void info(const std::string& message);
void warn(const std::string& message);
void error(const std::string& message);

// Collects every warning emitted while alive (all threads). Not nestable.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  std::vector<std::string> messages() const;
  bool contains(const std::string& needle) const;
};

}  // namespace mgmc::log
