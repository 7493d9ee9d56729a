#include "spsim/fdtd1d.hpp"

#include "spsim/error.hpp"
#include "spsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace spsim::fdtd {

namespace {

constexpr double kPi = std::numbers::pi;
// Peak loss per half step in the graded absorber; cubic grading over the
// absorber depth keeps the reflection from the profile itself negligible.
constexpr double kAbsorberPeakLoss = 0.35;
// Decimated record spacing; far below the Nyquist limit of the 850 nm edge.
constexpr double kRecordSpacingFs = 0.25;

double gaussian_tau_fs(double center_nm, double bandwidth_nm) {
  const double c = kSpeedOfLightNmPerFs;
  const double d_omega = 2.0 * kPi * c * bandwidth_nm / (center_nm * center_nm);
  return 2.0 * std::sqrt(2.0 * std::log(2.0)) / d_omega;
}

double omega_rad_per_fs(double lambda_nm) { return 2.0 * kPi * kSpeedOfLightNmPerFs / lambda_nm; }

std::size_t record_stride(double dt_fs) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(kRecordSpacingFs / dt_fs));
}

}  // namespace

double Grid1D::optical_path_nm(std::size_t begin, std::size_t end) const {
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += std::sqrt(permittivity[i]) * dx_nm;
  return sum;
}

std::size_t cell_at_depth(const Grid1D& grid, double depth_nm) {
  require(depth_nm >= 0.0, "depth must be >= 0");
  const auto cell = grid.stack_begin + static_cast<std::size_t>(std::llround(depth_nm / grid.dx_nm));
  require(cell < grid.stack_end, "depth lies below the stack");
  return cell;
}

Grid1D discretize_stack(const optics::LayerStack& stack, double dx_nm,
                        const DiscretizeOptions& options) {
  optics::validate(stack);
  require(dx_nm > 0.0 && std::isfinite(dx_nm), "dx must be > 0");
  require(options.absorber_cells >= 0 && options.ambient_padding_cells >= 4 &&
              options.substrate_padding_cells >= 1,
          "grid padding too small");
  double n_max = std::max({options.reference_index, stack.ambient_index, stack.substrate_index});
  for (const auto& l : stack.layers) n_max = std::max(n_max, l.index);
  const double dx_limit = options.min_wavelength_nm / (20.0 * n_max);
  if (dx_nm > dx_limit)
    fail(ErrorKind::ResolutionTooCoarse,
         "dx = " + std::to_string(dx_nm) + " nm exceeds lambda/(20 n) = " + std::to_string(dx_limit) +
             " nm");

  Grid1D g;
  g.dx_nm = dx_nm;
  g.absorber_cells = options.absorber_cells;
  const double eps_amb = stack.ambient_index * stack.ambient_index;
  const double eps_sub = stack.substrate_index * stack.substrate_index;

  const std::size_t lead = static_cast<std::size_t>(options.absorber_cells + options.ambient_padding_cells);
  g.permittivity.assign(lead, eps_amb);
  g.stack_begin = lead;

  // Interface positions in units of cells from the stack start.
  std::vector<double> edges{0.0};
  for (const auto& l : stack.layers) edges.push_back(edges.back() + l.thickness_nm / dx_nm);

  if (!options.subcell_averaging) {
    for (std::size_t k = 0; k < stack.layers.size(); ++k) {
      const auto b0 = static_cast<std::size_t>(std::llround(edges[k]));
      const auto b1 = static_cast<std::size_t>(std::llround(edges[k + 1]));
      const double eps = stack.layers[k].index * stack.layers[k].index;
      for (std::size_t i = b0; i < b1; ++i) g.permittivity.push_back(eps);
    }
  } else {
    const double total = edges.back();
    const std::size_t cells = static_cast<std::size_t>(std::ceil(total - 1e-9));
    std::size_t k = 0;
    for (std::size_t i = 0; i < cells; ++i) {
      const double lo = static_cast<double>(i), hi = lo + 1.0;
      double acc = 0.0;
      while (k < stack.layers.size() && edges[k + 1] <= lo) ++k;
      for (std::size_t j = k; j < stack.layers.size() && edges[j] < hi; ++j) {
        const double overlap = std::min(hi, edges[j + 1]) - std::max(lo, edges[j]);
        if (overlap > 0) acc += overlap * stack.layers[j].index * stack.layers[j].index;
      }
      const double covered = std::min(hi, total) - lo;
      acc += (1.0 - covered) * eps_sub;
      g.permittivity.push_back(acc);
    }
  }
  g.stack_end = g.permittivity.size();
  const std::size_t tail = static_cast<std::size_t>(options.substrate_padding_cells + options.absorber_cells);
  g.permittivity.insert(g.permittivity.end(), tail, eps_sub);
  return g;
}

Grid1D uniform_grid(std::size_t cells, double dx_nm, double permittivity, int absorber_cells) {
  require(dx_nm > 0.0 && permittivity >= 1.0, "invalid uniform grid");
  require(cells > 2 * static_cast<std::size_t>(absorber_cells) + 2, "grid too short for absorbers");
  Grid1D g;
  g.dx_nm = dx_nm;
  g.absorber_cells = absorber_cells;
  g.permittivity.assign(cells, permittivity);
  g.stack_begin = g.stack_end = cells / 2;
  return g;
}

Solver::Solver(const Grid1D& grid)
    : eps_(grid.permittivity), absorber_(static_cast<std::size_t>(std::max(grid.absorber_cells, 0))) {
  const std::size_t n = grid.size();
  require(n >= 3, "grid must have at least 3 cells");
  dt_fs_ = kCourantNumber * grid.dx_nm / kSpeedOfLightNmPerFs;
  e_.assign(n, 0.0);
  h_.assign(n, 0.0);
  ca_.resize(n);
  cb_.resize(n);
  da_.resize(n);
  db_.resize(n);
  const double depth = grid.absorber_cells;
  auto loss_at = [&](double x) {
    if (depth <= 0) return 0.0;
    double d = 0.0;
    if (x < depth) d = (depth - x) / depth;
    const double right = static_cast<double>(n) - depth;
    if (x > right) d = (x - right) / depth;
    d = std::clamp(d, 0.0, 1.0);
    return kAbsorberPeakLoss * d * d * d;
  };
  const double s = kCourantNumber;
  for (std::size_t i = 0; i < n; ++i) {
    const double le = loss_at(static_cast<double>(i) + 0.5);
    ca_[i] = (1.0 - le) / (1.0 + le);
    cb_[i] = s / eps_[i] / (1.0 + le);
    const double lh = loss_at(static_cast<double>(i) + 1.0);
    da_[i] = (1.0 - lh) / (1.0 + lh);
    db_[i] = s / (1.0 + lh);
  }
}

void Solver::step() {
  const std::size_t n = e_.size();
  double* __restrict e = e_.data();
  double* __restrict h = h_.data();
  const double* __restrict cb = cb_.data();
  const double s = kCourantNumber;
  const std::size_t lo = std::min(absorber_, n);
  const std::size_t hi = n > absorber_ ? n - absorber_ : 0;
  // E at the outer cell stays zero (conducting wall); H at the last node
  // stays zero (magnetic wall). Both are lossless. Lossy coefficients are
  // only read inside the absorbers.
  for (std::size_t i = 1; i < lo; ++i) e[i] = ca_[i] * e[i] + cb[i] * (h[i - 1] - h[i]);
  for (std::size_t i = std::max<std::size_t>(lo, 1); i < hi; ++i) e[i] += cb[i] * (h[i - 1] - h[i]);
  for (std::size_t i = std::max<std::size_t>(hi, 1); i < n; ++i) e[i] = ca_[i] * e[i] + cb[i] * (h[i - 1] - h[i]);
  const std::size_t hlo = lo > 0 ? lo - 1 : 0;
  for (std::size_t i = 0; i < hlo; ++i) h[i] = da_[i] * h[i] + db_[i] * (e[i] - e[i + 1]);
  for (std::size_t i = hlo; i < hi && i + 1 < n; ++i) h[i] += s * (e[i] - e[i + 1]);
  for (std::size_t i = hi; i + 1 < n; ++i) h[i] = da_[i] * h[i] + db_[i] * (e[i] - e[i + 1]);
  ++steps_;
}

double Solver::energy(std::size_t begin, std::size_t end) const {
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += eps_[i] * e_[i] * e_[i] + h_[i] * h_[i];
  return sum;
}

namespace {

struct ProbeRun {
  std::vector<double> samples;
  double sample_dt_fs = 0.0;
};

ProbeRun record_pulse(const Grid1D& grid, std::size_t source, std::size_t probe, double center_nm,
                      double bandwidth_nm, const ReflectanceRunOptions& opt) {
  Solver solver(grid);
  const double tau = gaussian_tau_fs(center_nm, bandwidth_nm);
  const double t0 = 4.0 * tau;
  const double w0 = omega_rad_per_fs(center_nm);
  const std::size_t stride = record_stride(solver.dt_fs());
  const std::size_t max_steps = static_cast<std::size_t>(opt.max_time_ps * 1000.0 / solver.dt_fs());
  ProbeRun run;
  run.sample_dt_fs = static_cast<double>(stride) * solver.dt_fs();
  double peak_energy = 0.0;
  for (std::size_t n = 0; n < max_steps; ++n) {
    const double t = solver.time_fs();
    if (t < 2.0 * t0) {
      const double x = (t - t0) / tau;
      solver.inject(source, std::exp(-x * x) * std::sin(w0 * (t - t0)));
    }
    solver.step();
    if (n % stride == 0) run.samples.push_back(solver.e()[probe]);
    if (n % 200 == 0) {
      const double u = solver.energy();
      peak_energy = std::max(peak_energy, u);
      if (t > 2.0 * t0 && u < opt.energy_floor * peak_energy) break;
    }
  }
  return run;
}

std::vector<std::complex<double>> dft(const ProbeRun& run, const std::vector<double>& omegas) {
  std::vector<std::complex<double>> out(omegas.size());
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    const std::complex<double> rot = std::polar(1.0, -omegas[k] * run.sample_dt_fs);
    std::complex<double> phase = 1.0, acc = 0.0;
    for (std::size_t n = 0; n < run.samples.size(); ++n) {
      acc += run.samples[n] * phase;
      phase *= rot;
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace

optics::ReflectanceSpectrum run_reflectance(const Grid1D& grid, double pulse_center_nm,
                                            double pulse_bandwidth_nm,
                                            const ReflectanceRunOptions& options) {
  require(pulse_center_nm > 0.0 && pulse_bandwidth_nm > 0.0, "pulse parameters must be > 0");
  require(options.min_nm > 0.0 && options.min_nm < options.max_nm && options.n_samples >= 2,
          "invalid reflectance sampling");
  const double min_resolved = 20.0 * grid.dx_nm * std::sqrt(*std::max_element(
                                                      grid.permittivity.begin(), grid.permittivity.end()));
  if (options.min_nm < min_resolved)
    fail(ErrorKind::ResolutionTooCoarse, "requested band is below the grid's resolved wavelength");
  const std::size_t pad = grid.stack_begin - static_cast<std::size_t>(grid.absorber_cells);
  require(grid.stack_begin > static_cast<std::size_t>(grid.absorber_cells) + 4,
          "grid needs ambient padding in front of the stack");
  const std::size_t source = grid.absorber_cells + pad / 4;
  const std::size_t probe = grid.absorber_cells + (3 * pad) / 4;

  Grid1D reference = grid;
  std::fill(reference.permittivity.begin(), reference.permittivity.end(), grid.permittivity[source]);

  const ProbeRun incident = record_pulse(reference, source, probe, pulse_center_nm, pulse_bandwidth_nm, options);
  ProbeRun total = record_pulse(grid, source, probe, pulse_center_nm, pulse_bandwidth_nm, options);
  // Reflected = total - incident over the common record.
  ProbeRun reflected = total;
  for (std::size_t n = 0; n < reflected.samples.size(); ++n)
    reflected.samples[n] -= n < incident.samples.size() ? incident.samples[n] : 0.0;

  optics::ReflectanceSpectrum out;
  std::vector<double> omegas;
  const double step = (options.max_nm - options.min_nm) / (options.n_samples - 1);
  for (int i = 0; i < options.n_samples; ++i) {
    const double lambda = options.min_nm + step * i;
    out.wavelength_nm.push_back(lambda);
    omegas.push_back(omega_rad_per_fs(lambda));
  }
  const auto inc = dft(incident, omegas);
  const auto ref = dft(reflected, omegas);
  out.reflectance.resize(omegas.size());
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    const double denom = std::norm(inc[k]);
    out.reflectance[k] = denom > 0 ? std::norm(ref[k]) / denom : 0.0;
  }
  return out;
}

double q_from_envelope(std::span<const double> times_ns, std::span<const double> envelope,
                       double omega0_rad_per_ns) {
  require(times_ns.size() == envelope.size() && envelope.size() >= 3, "envelope needs >= 3 samples");
  std::vector<double> log_u(envelope.size());
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    if (!(envelope[i] > 0.0)) fail(ErrorKind::FitDiverged, "non-positive energy envelope");
    log_u[i] = std::log(envelope[i]);
  }
  const auto line = fit::fit_line(times_ns, log_u);
  if (!(line.slope < 0.0)) return std::numeric_limits<double>::infinity();
  return omega0_rad_per_ns / -line.slope;
}

double extract_q(const RingdownRecord& record) {
  require(record.times_ns.size() == record.field.size() && record.field.size() >= 8,
          "ringdown record too short");
  require(record.omega0_rad_per_ns > 0.0, "ringdown record needs omega0 > 0");
  const double period = 2.0 * kPi / record.omega0_rad_per_ns;
  std::vector<double> t, u;
  std::size_t begin = 0;
  const double t_start = record.times_ns.front();
  int window = 1;
  double sum = 0.0, tsum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < record.field.size(); ++i) {
    if (record.times_ns[i] >= t_start + window * period) {
      if (count > 0) {
        t.push_back(tsum / count);
        u.push_back(sum / count);
      }
      sum = tsum = 0.0;
      count = 0;
      ++window;
      begin = i;
    }
    sum += record.field[i] * record.field[i];
    tsum += record.times_ns[i];
    ++count;
  }
  (void)begin;
  if (t.size() < 3) fail(ErrorKind::NoDecayDetected, "record shorter than three optical periods");
  return q_from_envelope(t, u, record.omega0_rad_per_ns);
}

RingdownResult run_ringdown(const Grid1D& grid, std::size_t source_cell, double lambda0_nm,
                            const RingdownOptions& opt) {
  require(source_cell > 0 && source_cell + 1 < grid.size(), "source cell outside grid");
  require(lambda0_nm > 0.0, "lambda0 must be > 0");
  Solver solver(grid);
  const double tau = gaussian_tau_fs(lambda0_nm, opt.source_bandwidth_nm);
  const double t0 = 4.0 * tau;
  const double t_off = 2.0 * t0;
  const double w0 = omega_rad_per_fs(lambda0_nm);
  const double t_fit = t_off + opt.settle_fs;
  const double t_max = t_fit + opt.max_record_ps * 1000.0;
  const std::size_t stride = record_stride(solver.dt_fs());
  // Envelope windows span ~20 optical periods.
  const double window_fs = 20.0 * 2.0 * kPi / w0;

  RingdownResult out;
  double peak_energy = 0.0;
  double win_sum = 0.0, win_tsum = 0.0;
  std::size_t win_count = 0;
  double win_start = t_fit;
  for (std::size_t n = 0;; ++n) {
    const double t = solver.time_fs();
    if (t >= t_max) break;
    if (t < t_off) {
      const double x = (t - t0) / tau;
      solver.inject(source_cell, std::exp(-x * x) * std::sin(w0 * (t - t0)));
    }
    solver.step();
    if (n % stride != 0) continue;
    const double tn = solver.time_fs();
    if (tn < t_off) {
      peak_energy = std::max(peak_energy, solver.energy());
      continue;
    }
    if (tn < t_fit) continue;
    out.record.times_ns.push_back(tn * 1e-6);
    out.record.field.push_back(solver.e()[source_cell]);
    win_sum += solver.energy();
    win_tsum += tn;
    ++win_count;
    if (tn - win_start >= window_fs) {
      out.envelope_times_ns.push_back(win_tsum / win_count * 1e-6);
      out.envelope.push_back(win_sum / win_count);
      win_sum = win_tsum = 0.0;
      win_count = 0;
      win_start = tn;
      if (out.envelope.size() == 1 && out.envelope.front() < opt.min_stored_fraction * peak_energy)
        fail(ErrorKind::NoDecayDetected,
             "excitation at " + std::to_string(lambda0_nm) + " nm is not stored (non-resonant)");
      if (out.envelope.size() >= 3 &&
          out.envelope.back() < out.envelope.front() * std::exp(-opt.fit_efolds))
        break;
    }
  }
  if (out.envelope.size() < 3) fail(ErrorKind::NoDecayDetected, "ringdown record too short");

  // Carrier frequency from zero crossings of the probe field.
  const auto& f = out.record.field;
  const auto& ts = out.record.times_ns;
  double first = -1.0, last = -1.0;
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if ((f[i - 1] < 0.0) != (f[i] < 0.0) && f[i] != f[i - 1]) {
      const double tc = ts[i - 1] + (ts[i] - ts[i - 1]) * f[i - 1] / (f[i - 1] - f[i]);
      if (first < 0) first = tc;
      last = tc;
      ++crossings;
    }
  }
  double omega0 = w0 * 1e6;
  if (crossings > 10 && last > first) omega0 = kPi * static_cast<double>(crossings - 1) / (last - first);
  out.record.omega0_rad_per_ns = omega0;

  const double decay_efolds = std::log(out.envelope.front() / out.envelope.back());
  if (decay_efolds < opt.min_detectable_efolds) {
    out.beyond_measurable = true;
    out.q_factor = std::numeric_limits<double>::infinity();
    return out;
  }
  out.q_factor = q_from_envelope(out.envelope_times_ns, out.envelope, omega0);
  if (!std::isfinite(out.q_factor)) out.beyond_measurable = true;
  return out;
}

}  // namespace spsim::fdtd
