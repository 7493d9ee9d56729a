#include "report.hpp"

#include "spsim/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>

namespace spsim::app {

void Report::add(const std::string& key, double value) { entries_.emplace_back(key, io::format_number(value)); }

void Report::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

void Report::add_runtime(const std::string& stage, double seconds) { runtimes_.emplace_back(stage, seconds); }

const Check& Report::check(const std::string& name, double value, double lo, double hi) {
  checks_.push_back({name, value, lo, hi, value >= lo && value <= hi});
  return checks_.back();
}

const Check& Report::check(const std::string& name, bool pass, double value) {
  checks_.push_back({name, value, 0.0, 0.0, pass});
  return checks_.back();
}

bool Report::all_pass() const {
  return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.pass; });
}

std::string Report::body() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += fmt::format("{} = {}\n", k, v);
  for (const auto& c : checks_) {
    if (c.lo == 0.0 && c.hi == 0.0)
      out += fmt::format("check.{} = {} value={}\n", c.name, c.pass ? "PASS" : "FAIL", io::format_number(c.value));
    else
      out += fmt::format("check.{} = {} value={} expected=[{}, {}]\n", c.name, c.pass ? "PASS" : "FAIL",
                         io::format_number(c.value), io::format_number(c.lo), io::format_number(c.hi));
  }
  return out;
}

std::string Report::runtimes() const {
  std::string out;
  for (const auto& [k, s] : runtimes_) out += fmt::format("runtime.{}_s = {:.3f}\n", k, s);
  return out;
}

void Report::write(const std::filesystem::path& path) const {
  auto os = io::open_output(path);
  os << text();
}

}  // namespace spsim::app
