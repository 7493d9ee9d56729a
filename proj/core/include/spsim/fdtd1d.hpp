#pragma once

// One-dimensional Yee-scheme time-domain solver used as an independent
// check on the transfer-matrix results: broadband reflectance from pulse
// excitation and cavity Q from the stored-energy ringdown.

#include "spsim/cavity_optics.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace spsim::fdtd {

inline constexpr double kSpeedOfLightNmPerFs = 299.792458;
inline constexpr double kCourantNumber = 0.99;

struct Grid1D {
  double dx_nm = 2.0;
  /// Relative permittivity per E-field cell (cell centre at (i + 1/2) dx).
  std::vector<double> permittivity;
  /// Graded absorbing cells at each end (0 = perfectly reflecting ends).
  int absorber_cells = 64;
  /// Cell range occupied by the layer stack.
  std::size_t stack_begin = 0;
  std::size_t stack_end = 0;

  std::size_t size() const { return permittivity.size(); }
  double optical_path_nm(std::size_t begin, std::size_t end) const;
};

struct DiscretizeOptions {
  int absorber_cells = 64;
  int ambient_padding_cells = 60;
  int substrate_padding_cells = 60;
  /// Shortest wavelength the grid must resolve with >= 20 cells.
  double min_wavelength_nm = 850.0;
  /// Index used in the resolution rule; the stack's highest index if larger.
  double reference_index = 3.5;
  /// Volume-average the permittivity of cells cut by an interface instead of
  /// snapping each interface to the nearest cell edge.
  bool subcell_averaging = false;
};

/// Layout: absorber | ambient padding | stack | substrate padding | absorber.
/// Interfaces snap to the nearest cell edge; throws ResolutionTooCoarse if
/// dx exceeds lambda_min / (20 n).
Grid1D discretize_stack(const optics::LayerStack& stack, double dx_nm,
                        const DiscretizeOptions& options = {});

/// Cell containing the point `depth_nm` below the top of the stack.
std::size_t cell_at_depth(const Grid1D& grid, double depth_nm);

/// Uniform homogeneous grid (no stack) of the given length, e.g. for tests.
Grid1D uniform_grid(std::size_t cells, double dx_nm, double permittivity, int absorber_cells);

/// Leapfrog E/H state on a Grid1D. Time step is kCourantNumber * dx / c.
class Solver {
 public:
  explicit Solver(const Grid1D& grid);

  void step();
  /// Soft source: adds to E at `cell` before the next step.
  void inject(std::size_t cell, double value) { e_[cell] += value; }

  double dt_fs() const { return dt_fs_; }
  double time_fs() const { return static_cast<double>(steps_) * dt_fs_; }
  std::size_t steps() const { return steps_; }
  std::span<const double> e() const { return e_; }
  std::span<const double> h() const { return h_; }

  /// Discrete electromagnetic energy sum(eps E^2 + H^2) over [begin, end).
  double energy(std::size_t begin, std::size_t end) const;
  double energy() const { return energy(0, e_.size()); }

 private:
  std::vector<double> e_, h_;
  std::vector<double> ca_, cb_, da_, db_;
  std::vector<double> eps_;
  std::size_t absorber_ = 0;
  double dt_fs_;
  std::size_t steps_ = 0;
};

struct ReflectanceRunOptions {
  double min_nm = 850.0;
  double max_nm = 1050.0;
  int n_samples = 2001;
  /// Stop once grid energy falls below this fraction of its peak.
  double energy_floor = 1e-8;
  double max_time_ps = 200.0;
};

/// R(lambda) from the Fourier transforms of incident and reflected field
/// records at a probe in the ambient region. A second run on a homogeneous
/// ambient grid of identical length supplies the incident record.
optics::ReflectanceSpectrum run_reflectance(const Grid1D& grid, double pulse_center_nm,
                                            double pulse_bandwidth_nm,
                                            const ReflectanceRunOptions& options = {});

struct RingdownRecord {
  std::vector<double> times_ns;
  std::vector<double> field;
  double omega0_rad_per_ns = 0.0;
};

struct RingdownOptions {
  /// Spectral FWHM of the Gaussian source pulse.
  double source_bandwidth_nm = 2.0;
  /// Wait after source turn-off before fitting.
  double settle_fs = 500.0;
  /// Fit until the envelope has dropped by this many e-folds, or max time.
  double fit_efolds = 3.0;
  double max_record_ps = 40.0;
  /// Decay smaller than this (in e-folds) over the record means no
  /// measurable loss; reported as an infinite Q.
  double min_detectable_efolds = 1e-3;
  /// Residual-to-peak energy ratio below which nothing was stored.
  double min_stored_fraction = 1e-6;
};

struct RingdownResult {
  double q_factor = 0.0;
  /// Q beyond measurable (closed, lossless system); q_factor is +inf.
  bool beyond_measurable = false;
  RingdownRecord record;
  std::vector<double> envelope_times_ns;
  std::vector<double> envelope;
};

/// Narrowband excitation at lambda0 from `source_cell`; Q from the decay of
/// the stored energy, U(t) ~ exp(-omega0 t / Q). Throws NoDecayDetected when
/// the excitation is not stored (non-resonant lambda0).
RingdownResult run_ringdown(const Grid1D& grid, std::size_t source_cell, double lambda0_nm,
                            const RingdownOptions& options = {});

/// Q from a recorded field trace: per-period mean of E^2 fitted to
/// exp(-omega0 t / Q).
double extract_q(const RingdownRecord& record);

/// Fits log(envelope) against time; returns omega0 / decay rate.
double q_from_envelope(std::span<const double> times_ns, std::span<const double> envelope,
                       double omega0_rad_per_ns);

}  // namespace spsim::fdtd
