#include "spsim/io.hpp"

#include "spsim/error.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace spsim::io {

static_assert(std::endian::native == std::endian::little, "binary framing assumes a little-endian host");

std::string format_number(double value) { return fmt::format("{}", value); }

namespace {

// Header line followed by rows of comma-separated numbers.
std::vector<std::vector<double>> read_numeric_csv(std::istream& is, std::size_t columns, const char* what) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::Io, std::string(what) + " CSV is empty");
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        fail(ErrorKind::Io, std::string(what) + " CSV line " + std::to_string(line_no) + ": bad number '" +
                                cell + "'");
      }
    }
    if (row.size() != columns)
      fail(ErrorKind::Io, std::string(what) + " CSV line " + std::to_string(line_no) + ": expected " +
                              std::to_string(columns) + " columns");
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
void put(std::ostream& os, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}

template <typename T>
bool get(std::istream& is, T& v) {
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T))) return false;
  std::memcpy(&v, buf, sizeof(T));
  return true;
}

}  // namespace

void write_spectrum_csv(std::ostream& os, const optics::ReflectanceSpectrum& s) {
  os << "wavelength_nm,reflectance\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    os << format_number(s.wavelength_nm[i]) << ',' << format_number(s.reflectance[i]) << '\n';
}

optics::ReflectanceSpectrum read_spectrum_csv(std::istream& is) {
  optics::ReflectanceSpectrum s;
  for (const auto& row : read_numeric_csv(is, 2, "spectrum")) {
    s.wavelength_nm.push_back(row[0]);
    s.reflectance.push_back(row[1]);
  }
  return s;
}

void write_ringdown_csv(std::ostream& os, const fdtd::RingdownRecord& r) {
  os << "time_ns,field\n";
  for (std::size_t i = 0; i < r.times_ns.size(); ++i)
    os << format_number(r.times_ns[i]) << ',' << format_number(r.field[i]) << '\n';
}

void write_decay_curve_csv(std::ostream& os, const std::vector<DecayCurveRow>& rows) {
  os << "detuning_nm,gamma_per_ns\n";
  for (const auto& r : rows) os << format_number(r.detuning_nm) << ',' << format_number(r.gamma_per_ns) << '\n';
}

std::vector<DecayCurveRow> read_decay_curve_csv(std::istream& is) {
  std::vector<DecayCurveRow> out;
  for (const auto& row : read_numeric_csv(is, 2, "decay curve")) out.push_back({row[0], row[1]});
  return out;
}

void write_histogram_csv(std::ostream& os, const hbt::CorrelationHistogram& h) {
  os << "tau_ns_bin_center,counts\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) os << format_number(h.bin_center(i)) << ',' << h.counts[i] << '\n';
}

hbt::CorrelationHistogram read_histogram_csv(std::istream& is) {
  const auto rows = read_numeric_csv(is, 2, "histogram");
  if (rows.size() < 2) fail(ErrorKind::Io, "histogram CSV needs at least 2 bins");
  hbt::CorrelationHistogram h;
  const double first = rows.front()[0], last = rows.back()[0];
  h.bin_width_ns = (last - first) / static_cast<double>(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double step = rows[i][0] - rows[i - 1][0];
    if (std::abs(step - h.bin_width_ns) > 1e-6 * h.bin_width_ns)
      fail(ErrorKind::Io, "histogram bin centres are not uniformly spaced");
  }
  const double lo = first - 0.5 * h.bin_width_ns;
  const double hi = last + 0.5 * h.bin_width_ns;
  if (std::abs(lo + hi) > 1e-6 * h.bin_width_ns)
    fail(ErrorKind::Io, "histogram must be symmetric about tau = 0");
  h.range_ns = 0.5 * (hi - lo);
  for (const auto& row : rows) {
    if (row[1] < 0.0 || row[1] != std::floor(row[1])) fail(ErrorKind::Io, "histogram counts must be whole numbers");
    h.counts.push_back(static_cast<std::uint64_t>(row[1]));
  }
  return h;
}

void write_streak_csv(std::ostream& os, const hbt::StreakHistogram& h) {
  os << "time_ns_bin_center,counts\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) os << format_number(h.bin_center(i)) << ',' << h.counts[i] << '\n';
}

void write_events_csv(std::ostream& os, const source::EmissionStream& stream) {
  os << "pulse_index,time_ns\n";
  for (const auto& p : stream.photons) os << p.pulse_index << ',' << format_number(p.time_ns) << '\n';
}

void write_events_binary(std::ostream& os, const source::EmissionStream& stream) {
  for (const auto& p : stream.photons) {
    put<std::uint64_t>(os, p.pulse_index);
    put<double>(os, p.time_ns);
  }
}

std::vector<source::Photon> read_events_binary(std::istream& is) {
  std::vector<source::Photon> out;
  std::uint64_t idx = 0;
  double t = 0.0;
  while (get(is, idx)) {
    if (!get(is, t)) fail(ErrorKind::Io, "truncated event record");
    out.push_back({idx, t});
  }
  return out;
}

void write_clicks_binary(std::ostream& os, const hbt::ClickStreams& clicks) {
  for (const auto& c : clicks.merged()) {
    put<std::uint64_t>(os, static_cast<std::uint64_t>(c.detector));
    put<double>(os, c.time_ns);
  }
}

hbt::ClickStreams read_clicks_binary(std::istream& is) {
  hbt::ClickStreams out;
  std::uint64_t det = 0;
  double t = 0.0;
  while (get(is, det)) {
    if (!get(is, t)) fail(ErrorKind::Io, "truncated click record");
    if (det == 1)
      out.detector1.push_back(t);
    else if (det == 2)
      out.detector2.push_back(t);
    else
      fail(ErrorKind::Io, "click record has detector id " + std::to_string(det));
  }
  return out;
}

std::vector<purcell::SpectrumPoint> read_background_csv(std::istream& is) {
  std::vector<purcell::SpectrumPoint> out;
  for (const auto& row : read_numeric_csv(is, 2, "background spectrum")) out.push_back({row[0], row[1]});
  return out;
}

std::ofstream open_output(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory " + path.parent_path().string());
  }
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  return is;
}

}  // namespace spsim::io
