#include "mgmc/logging.hpp"

#include <algorithm>
#include <atomic>
#include <memory>
#include <mutex>

#include <spdlog/sinks/base_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace mgmc::log {

namespace {

class CaptureSink final : public spdlog::sinks::base_sink<std::mutex> {
 public:
  std::vector<std::string> snapshot() {
    std::lock_guard<std::mutex> lock(mutex_);
    return messages_;
  }
  void clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    messages_.clear();
  }
  std::atomic<bool> enabled{false};

 protected:
  void sink_it_(const spdlog::details::log_msg& msg) override {
    if (enabled && msg.level == spdlog::level::warn) {
      messages_.emplace_back(msg.payload.data(), msg.payload.size());
    }
  }
  void flush_() override {}

 private:
  std::vector<std::string> messages_;
};

struct State {
  std::shared_ptr<CaptureSink> capture = std::make_shared<CaptureSink>();
  std::shared_ptr<spdlog::logger> logger;

  State() {
    auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
    logger = std::make_shared<spdlog::logger>("mgmc", spdlog::sinks_init_list{console, capture});
    logger->set_pattern("[%l] %v");
    logger->set_level(spdlog::level::warn);
  }
};

State& state() {
  static State s;
  return s;
}

}  // namespace

void set_level(Level level) {
  auto& lg = *state().logger;
  switch (level) {
    case Level::Debug: lg.set_level(spdlog::level::debug); break;
    case Level::Info: lg.set_level(spdlog::level::info); break;
    case Level::Warn: lg.set_level(spdlog::level::warn); break;
    case Level::Error: lg.set_level(spdlog::level::err); break;
    case Level::Off: lg.set_level(spdlog::level::off); break;
  }
}

void debug(const std::string& message) { state().logger->debug(message); }
void info(const std::string& message) { state().logger->info(message); }
void error(const std::string& message) { state().logger->error(message); }

void warn(const std::string& message) {
  auto& s = state();
  if (s.capture->enabled && !s.logger->should_log(spdlog::level::warn)) {
    // Capture still sees warnings when console output is silenced.
    spdlog::details::log_msg msg("mgmc", spdlog::level::warn, message);
    s.capture->log(msg);
    return;
  }
  s.logger->warn(message);
}

WarningCapture::WarningCapture() {
  state().capture->clear();
  state().capture->enabled = true;
}

WarningCapture::~WarningCapture() {
  state().capture->enabled = false;
  state().capture->clear();
}

std::vector<std::string> WarningCapture::messages() const { return state().capture->snapshot(); }

bool WarningCapture::contains(const std::string& needle) const {
  const auto msgs = messages();
  return std::any_of(msgs.begin(), msgs.end(),
                     [&](const std::string& m) { return m.find(needle) != std::string::npos; });
}

}  // namespace mgmc::log
