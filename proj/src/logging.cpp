#include "sfda/logging.hpp"

#include "json.hpp"
#include "sfda/errors.hpp"

namespace sfda {

MetricsLog::MetricsLog(const std::string& path) : out_(path) {
  if (!out_) throw ConfigError("cannot open metrics log: " + path);
}

void MetricsLog::record(long step, const std::string& phase,
                        const std::string& metric, double value) {
  if (!out_.is_open()) return;
  nlohmann::json j{
      {"step", step}, {"phase", phase}, {"metric", metric}, {"value", value}};
  out_ << j.dump() << "\n";
  out_.flush();
}

}  // namespace sfda
