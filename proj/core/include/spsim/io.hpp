#pragma once

// File formats shared by the library and the command-line tool.
//
// CSV files carry a single header line followed by one record per line,
// numbers in shortest round-trip decimal form:
//   spectrum      wavelength_nm,reflectance
//   ringdown      time_ns,field
//   decay curve   detuning_nm,gamma_per_ns
//   histogram     tau_ns_bin_center,counts
//   streak        time_ns_bin_center,counts
//   events        pulse_index,time_ns
//   background    wavelength_nm,intensity
//
// Binary streams are headerless sequences of 16-byte little-endian records:
//   events        u64 pulse_index, f64 time_ns
//   clicks        u64 detector (1 or 2), f64 time_ns

#include "spsim/analysis.hpp"
#include "spsim/cavity_optics.hpp"
#include "spsim/fdtd1d.hpp"
#include "spsim/hbt.hpp"
#include "spsim/photon_source.hpp"
#include "spsim/purcell.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace spsim::io {

std::string format_number(double value);

void write_spectrum_csv(std::ostream& os, const optics::ReflectanceSpectrum& spectrum);
optics::ReflectanceSpectrum read_spectrum_csv(std::istream& is);

void write_ringdown_csv(std::ostream& os, const fdtd::RingdownRecord& record);

struct DecayCurveRow {
  double detuning_nm;
  double gamma_per_ns;
};
void write_decay_curve_csv(std::ostream& os, const std::vector<DecayCurveRow>& rows);
std::vector<DecayCurveRow> read_decay_curve_csv(std::istream& is);

void write_histogram_csv(std::ostream& os, const hbt::CorrelationHistogram& hist);
/// Bin width and range are recovered from the uniformly spaced centres.
hbt::CorrelationHistogram read_histogram_csv(std::istream& is);

void write_streak_csv(std::ostream& os, const hbt::StreakHistogram& hist);

void write_events_csv(std::ostream& os, const source::EmissionStream& stream);

void write_events_binary(std::ostream& os, const source::EmissionStream& stream);
std::vector<source::Photon> read_events_binary(std::istream& is);

void write_clicks_binary(std::ostream& os, const hbt::ClickStreams& clicks);
hbt::ClickStreams read_clicks_binary(std::istream& is);

std::vector<purcell::SpectrumPoint> read_background_csv(std::istream& is);

/// Opens for writing, creating parent directories; throws Io on failure.
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);
std::ifstream open_input(const std::filesystem::path& path, bool binary = false);

}  // namespace spsim::io
