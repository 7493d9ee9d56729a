#include <doctest.h>

#include "spsim/error.hpp"
#include "spsim/io.hpp"

#include <filesystem>
#include <sstream>

using namespace spsim;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("numbers round-trip exactly") {
  for (double v : {0.1, 1.0 / 3.0, 953.748123456789, -2.5e-17, 1e300})
    CHECK(std::stod(io::format_number(v)) == v);
  CHECK(io::format_number(2.0) == "2");
}

TEST_CASE("spectrum CSV round trip") {
  optics::ReflectanceSpectrum s;
  s.wavelength_nm = {900.0, 900.1, 953.748123};
  s.reflectance = {0.3, 0.999999123, 1.0 / 7.0};
  std::stringstream ss;
  io::write_spectrum_csv(ss, s);
  CHECK(ss.str().rfind("wavelength_nm,reflectance\n", 0) == 0);
  const auto back = io::read_spectrum_csv(ss);
  CHECK(back.wavelength_nm == s.wavelength_nm);
  CHECK(back.reflectance == s.reflectance);
}

TEST_CASE("decay curve CSV round trip") {
  const std::vector<io::DecayCurveRow> rows{{0.0, 5.0}, {0.35, 1.0 / 0.37}, {-1.2, 1.0001}};
  std::stringstream ss;
  io::write_decay_curve_csv(ss, rows);
  const auto back = io::read_decay_curve_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].detuning_nm == rows[i].detuning_nm);
    CHECK(back[i].gamma_per_ns == rows[i].gamma_per_ns);
  }
}

TEST_CASE("CSV reader rejects malformed input") {
  std::stringstream empty;
  CHECK(kind_of([&] { io::read_spectrum_csv(empty); }) == ErrorKind::Io);
  std::stringstream bad("wavelength_nm,reflectance\n900,abc\n");
  CHECK(kind_of([&] { io::read_spectrum_csv(bad); }) == ErrorKind::Io);
  std::stringstream short_row("wavelength_nm,reflectance\n900\n");
  CHECK(kind_of([&] { io::read_spectrum_csv(short_row); }) == ErrorKind::Io);
  std::stringstream crlf("detuning_nm,gamma_per_ns\r\n0.1,2.0\r\n# note\n\n");
  CHECK(io::read_decay_curve_csv(crlf).size() == 1);
}

TEST_CASE("histogram CSV recovers its binning") {
  auto h = hbt::CorrelationHistogram::empty({0.05, 65.0});
  for (std::size_t i = 0; i < h.counts.size(); ++i) h.counts[i] = (i * 7919) % 13;
  std::stringstream ss;
  io::write_histogram_csv(ss, h);
  const auto back = io::read_histogram_csv(ss);
  CHECK(back.bin_width_ns == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(back.range_ns == doctest::Approx(65.0).epsilon(1e-12));
  CHECK(back.counts == h.counts);

  std::stringstream fractional("tau_ns_bin_center,counts\n-0.5,1\n0.5,2.5\n");
  CHECK(kind_of([&] { io::read_histogram_csv(fractional); }) == ErrorKind::Io);
  std::stringstream uneven("tau_ns_bin_center,counts\n-1.5,1\n-0.5,1\n0.7,1\n1.5,1\n");
  CHECK(kind_of([&] { io::read_histogram_csv(uneven); }) == ErrorKind::Io);
  std::stringstream shifted("tau_ns_bin_center,counts\n0.5,1\n1.5,1\n");
  CHECK(kind_of([&] { io::read_histogram_csv(shifted); }) == ErrorKind::Io);
}

TEST_CASE("binary event framing") {
  source::EmissionStream s;
  s.photons = {{0, 0.21}, {3, 39.6}, {3, 39.9}, {1ull << 40, 1e13}};
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  io::write_events_binary(ss, s);
  CHECK(ss.str().size() == 16 * s.photons.size());
  // Little-endian u64 followed by the f64 bit pattern.
  const std::string bytes = ss.str();
  CHECK(static_cast<unsigned char>(bytes[16]) == 3);
  CHECK(bytes[17] == 0);
  const auto back = io::read_events_binary(ss);
  REQUIRE(back.size() == s.photons.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].pulse_index == s.photons[i].pulse_index);
    CHECK(back[i].time_ns == s.photons[i].time_ns);
  }
  std::stringstream cut(bytes.substr(0, 24));
  CHECK(kind_of([&] { io::read_events_binary(cut); }) == ErrorKind::Io);
}

TEST_CASE("binary click framing") {
  hbt::ClickStreams c;
  c.detector1 = {1.0, 5.0, 9.5};
  c.detector2 = {2.0, 5.0};
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  io::write_clicks_binary(ss, c);
  CHECK(ss.str().size() == 16 * 5);
  const auto back = io::read_clicks_binary(ss);
  CHECK(back.detector1 == c.detector1);
  CHECK(back.detector2 == c.detector2);

  std::string bogus(16, '\0');
  bogus[0] = 7;
  std::stringstream bad(bogus);
  CHECK(kind_of([&] { io::read_clicks_binary(bad); }) == ErrorKind::Io);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "spsim_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  {
    auto os = io::open_output(dir / "a.csv");
    os << "wavelength_nm,intensity\n880,1.5\n";
  }
  auto is = io::open_input(dir / "a.csv");
  const auto pts = io::read_background_csv(is);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].intensity == 1.5);
  CHECK(kind_of([&] { io::open_input(dir / "missing.csv"); }) == ErrorKind::Io);
  std::filesystem::remove_all(dir.parent_path());
}
