#pragma once

#include <fstream>
#include <string>

namespace sfda {

/// Newline-delimited JSON metrics log: {"step":..,"phase":..,"metric":..,
/// "value":..} per record.
class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(const std::string& path);

  void record(long step, const std::string& phase, const std::string& metric,
              double value);
  bool open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
};

}  // namespace sfda
