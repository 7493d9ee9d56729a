#include "spsim/cavity_optics.hpp"

#include "spsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spsim::optics {

using cd = std::complex<double>;

LayerStack LayerStack::reversed() const {
  LayerStack out;
  out.ambient_index = substrate_index;
  out.substrate_index = ambient_index;
  out.layers.assign(layers.rbegin(), layers.rend());
  return out;
}

double LayerStack::total_thickness_nm() const {
  double sum = 0.0;
  for (const auto& l : layers) sum += l.thickness_nm;
  return sum;
}

std::optional<double> LayerStack::center_depth_nm(std::string_view label) const {
  double depth = 0.0;
  for (const auto& l : layers) {
    if (l.label == label) return depth + 0.5 * l.thickness_nm;
    depth += l.thickness_nm;
  }
  return std::nullopt;
}

double LayerStack::optical_thickness_nm() const {
  double sum = 0.0;
  for (const auto& l : layers) sum += l.thickness_nm * l.index;
  return sum;
}

void validate(const Layer& layer) {
  if (!(layer.thickness_nm >= 0.0) || !std::isfinite(layer.thickness_nm))
    fail(ErrorKind::InvalidArgument, "layer '" + layer.label + "' has negative thickness");
  if (!(layer.index >= 1.0) || !std::isfinite(layer.index))
    fail(ErrorKind::InvalidArgument, "layer '" + layer.label + "' has refractive index < 1");
}

void validate(const LayerStack& stack) {
  require(stack.ambient_index >= 1.0 && std::isfinite(stack.ambient_index),
          "ambient index must be >= 1");
  require(stack.substrate_index >= 1.0 && std::isfinite(stack.substrate_index),
          "substrate index must be >= 1");
  for (const auto& l : stack.layers) validate(l);
}

LayerStack build_micropost_stack(const MicropostRecipe& r) {
  require(r.top_pairs >= 0 && r.bottom_pairs >= 0, "DBR pair counts must be >= 0");
  for (double t : {r.spacer_nm, r.gaas_nm, r.alas_nm})
    require(t > 0.0 && std::isfinite(t), "layer thicknesses must be > 0");
  require(r.n_gaas >= 1.0 && r.n_alas >= 1.0, "refractive indices must be >= 1");

  LayerStack stack;
  stack.ambient_index = r.ambient_index;
  stack.substrate_index = r.substrate_index;
  if (r.cap) {
    require(r.cap->thickness_nm > 0.0, "cap thickness must be > 0");
    validate(*r.cap);
    stack.layers.push_back(*r.cap);
  }
  const Layer gaas{r.gaas_nm, r.n_gaas, "GaAs"};
  const Layer alas{r.alas_nm, r.n_alas, "AlAs"};
  for (int i = 0; i < r.top_pairs; ++i) {
    stack.layers.push_back(gaas);
    stack.layers.push_back(alas);
  }
  stack.layers.push_back({r.spacer_nm, r.n_gaas, "spacer"});
  for (int i = 0; i < r.bottom_pairs; ++i) {
    stack.layers.push_back(alas);
    stack.layers.push_back(gaas);
  }
  validate(stack);
  return stack;
}

Eigen::Matrix2cd layer_matrix(const Layer& layer, double wavelength_nm) {
  require(wavelength_nm > 0.0, "wavelength must be > 0");
  const double delta = 2.0 * std::numbers::pi * layer.index * layer.thickness_nm / wavelength_nm;
  const double c = std::cos(delta);
  const double s = std::sin(delta);
  Eigen::Matrix2cd m;
  m << cd(c, 0.0), cd(0.0, s / layer.index), cd(0.0, layer.index * s), cd(c, 0.0);
  return m;
}

cd reflection_coefficient(const LayerStack& stack, double wavelength_nm) {
  require(wavelength_nm > 0.0, "wavelength must be > 0");
  // Running product kept as scalars; this is the hot loop of every spectrum.
  cd m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;
  const double k0 = 2.0 * std::numbers::pi / wavelength_nm;
  for (const auto& l : stack.layers) {
    const double delta = k0 * l.index * l.thickness_nm;
    const double c = std::cos(delta);
    const double s = std::sin(delta);
    const cd a01(0.0, s / l.index);
    const cd a10(0.0, l.index * s);
    const cd n00 = m00 * c + m01 * a10;
    const cd n01 = m00 * a01 + m01 * c;
    const cd n10 = m10 * c + m11 * a10;
    const cd n11 = m10 * a01 + m11 * c;
    m00 = n00;
    m01 = n01;
    m10 = n10;
    m11 = n11;
  }
  const double ns = stack.substrate_index;
  const double n0 = stack.ambient_index;
  const cd b = m00 + m01 * ns;
  const cd c = m10 + m11 * ns;
  return (n0 * b - c) / (n0 * b + c);
}

double reflectance(const LayerStack& stack, double wavelength_nm) {
  return std::norm(reflection_coefficient(stack, wavelength_nm));
}

ReflectanceSpectrum reflectance_spectrum(const LayerStack& stack, double min_nm, double max_nm,
                                         int n_samples) {
  require(min_nm > 0.0 && min_nm < max_nm, "spectrum range must satisfy 0 < min < max");
  require(n_samples >= 2, "spectrum needs at least 2 samples");
  validate(stack);
  ReflectanceSpectrum out;
  out.wavelength_nm.resize(static_cast<std::size_t>(n_samples));
  out.reflectance.resize(static_cast<std::size_t>(n_samples));
  const double step = (max_nm - min_nm) / (n_samples - 1);
  for (int i = 0; i < n_samples; ++i) {
    const double lambda = (i == n_samples - 1) ? max_nm : min_nm + step * i;
    out.wavelength_nm[i] = lambda;
    out.reflectance[i] = reflectance(stack, lambda);
  }
  return out;
}

namespace {

struct Run {
  std::size_t begin;  // first index above threshold
  std::size_t end;    // one past last index above threshold
};

double crossing(const ReflectanceSpectrum& s, std::size_t i, std::size_t j, double level) {
  const double r0 = s.reflectance[i], r1 = s.reflectance[j];
  if (r1 == r0) return s.wavelength_nm[i];
  const double f = (level - r0) / (r1 - r0);
  return s.wavelength_nm[i] + f * (s.wavelength_nm[j] - s.wavelength_nm[i]);
}

}  // namespace

ResonanceResult find_resonance(const ReflectanceSpectrum& s, const ResonanceOptions& options) {
  const std::size_t n = s.size();
  require(n >= 3 && s.reflectance.size() == n, "spectrum needs >= 3 paired samples");
  for (std::size_t i = 1; i < n; ++i)
    require(s.wavelength_nm[i] > s.wavelength_nm[i - 1], "wavelengths must increase strictly");
  const double thr = options.stopband_threshold;

  std::vector<Run> runs;
  for (std::size_t i = 0; i < n;) {
    if (s.reflectance[i] > thr) {
      std::size_t j = i;
      while (j < n && s.reflectance[j] > thr) ++j;
      runs.push_back({i, j});
      i = j;
    } else {
      ++i;
    }
  }
  if (runs.empty())
    fail(ErrorKind::NoStopband, "no sample exceeds the stopband threshold " + std::to_string(thr));

  // A deep cavity dip splits the stopband into two runs; rejoin them when the
  // gap is small against both neighbours, or when the neighbours are of
  // comparable width (a low-Q dip in a short stack). Sidelobes outside the
  // stopband are narrow next to it and stay separate.
  std::vector<Run> merged{runs.front()};
  for (std::size_t k = 1; k < runs.size(); ++k) {
    Run& last = merged.back();
    const std::size_t gap = runs[k].begin - last.end;
    const std::size_t left = last.end - last.begin;
    const std::size_t right = runs[k].end - runs[k].begin;
    const std::size_t narrow = std::min(left, right), wide = std::max(left, right);
    if (10 * gap < narrow || (gap < narrow && 10 * narrow >= wide)) {
      last.end = runs[k].end;
    } else {
      merged.push_back(runs[k]);
    }
  }
  const Run band = *std::max_element(merged.begin(), merged.end(), [](const Run& a, const Run& b) {
    return (a.end - a.begin) < (b.end - b.begin);
  });
  if (band.end - band.begin < 3)
    fail(ErrorKind::NoStopband, "high-reflectance region is narrower than 3 samples");

  // Deepest strict interior local minimum.
  std::size_t dip = n;
  for (std::size_t i = band.begin + 1; i + 1 < band.end; ++i) {
    const double r = s.reflectance[i];
    if (r < s.reflectance[i - 1] && r <= s.reflectance[i + 1]) {
      if (dip == n || r < s.reflectance[dip]) dip = i;
    }
  }
  if (dip == n) fail(ErrorKind::NoDip, "stopband contains no interior reflectance minimum");

  // Shoulders: climb outwards while reflectance keeps rising.
  std::size_t lo = dip, hi = dip;
  while (lo > band.begin && s.reflectance[lo - 1] >= s.reflectance[lo]) --lo;
  while (hi + 1 < band.end && s.reflectance[hi + 1] >= s.reflectance[hi]) ++hi;
  const double background = std::min(s.reflectance[lo], s.reflectance[hi]);
  const double r_min = s.reflectance[dip];
  if (!(background > r_min)) fail(ErrorKind::NoDip, "dip has no measurable depth");
  const double half = 0.5 * (background + r_min);

  std::size_t a = dip;
  while (a > lo && s.reflectance[a] < half) --a;
  std::size_t b = dip;
  while (b < hi && s.reflectance[b] < half) ++b;
  if (s.reflectance[a] < half || s.reflectance[b] < half)
    fail(ErrorKind::NoDip, "dip half-depth crossings fall outside the stopband");
  const double left_cross = crossing(s, a, a + 1, half);
  const double right_cross = crossing(s, b - 1, b, half);

  // Parabolic vertex through the three samples around the minimum.
  const double x0 = s.wavelength_nm[dip - 1], x1 = s.wavelength_nm[dip], x2 = s.wavelength_nm[dip + 1];
  const double y0 = s.reflectance[dip - 1], y1 = s.reflectance[dip], y2 = s.reflectance[dip + 1];
  const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
  const double pa = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
  const double pb = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
  double lambda_c = x1;
  double r_vertex = y1;
  if (pa > 0.0) {
    lambda_c = std::clamp(-pb / (2.0 * pa), x0, x2);
    const double pc = y1 - pa * x1 * x1 - pb * x1;
    r_vertex = pa * lambda_c * lambda_c + pb * lambda_c + pc;
  }

  ResonanceResult out;
  out.lambda_c_nm = lambda_c;
  out.fwhm_nm = right_cross - left_cross;
  if (!(out.fwhm_nm > 0.0)) fail(ErrorKind::NoDip, "non-positive dip width");
  out.q_factor = out.lambda_c_nm / out.fwhm_nm;
  out.dip_reflectance = r_vertex;
  out.background_reflectance = background;
  out.stopband_lo_nm =
      band.begin > 0 ? crossing(s, band.begin - 1, band.begin, thr) : s.wavelength_nm.front();
  out.stopband_hi_nm = band.end < n ? crossing(s, band.end - 1, band.end, thr) : s.wavelength_nm.back();
  return out;
}

}  // namespace spsim::optics
