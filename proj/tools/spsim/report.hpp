#pragma once

// Key-value run reports. Runtimes are kept apart from the body so two runs
// with the same config and seed produce identical bodies.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace spsim::app {

struct Check {
  std::string name;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool pass = false;
};

class Report {
 public:
  void add(const std::string& key, double value);
  void add(const std::string& key, const std::string& value);
  void add_runtime(const std::string& stage, double seconds);
  /// Records value in [lo, hi] as a named check.
  const Check& check(const std::string& name, double value, double lo, double hi);
  const Check& check(const std::string& name, bool pass, double value = 0.0);

  bool all_pass() const;
  const std::vector<Check>& checks() const { return checks_; }

  std::string body() const;
  std::string runtimes() const;
  std::string text() const { return body() + runtimes(); }
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::pair<std::string, double>> runtimes_;
  std::vector<Check> checks_;
};

}  // namespace spsim::app
