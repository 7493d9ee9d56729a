#pragma once

// Normal-incidence transfer-matrix optics for planar dielectric stacks:
// reflectance spectra, DBR stopband and cavity resonance extraction.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spsim::optics {

/// Homogeneous, lossless dielectric layer.
struct Layer {
  double thickness_nm = 0.0;
  double index = 1.0;
  std::string label;
};

/// Layers listed in the order light meets them, between a semi-infinite
/// ambient (incidence side) and a semi-infinite substrate.
struct LayerStack {
  double ambient_index = 1.0;
  std::vector<Layer> layers;
  double substrate_index = 3.5;

  /// The same structure illuminated from the substrate side.
  LayerStack reversed() const;
  double total_thickness_nm() const;
  double optical_thickness_nm() const;
  /// Depth below the top surface of the middle of the first layer with this label.
  std::optional<double> center_depth_nm(std::string_view label) const;
};

struct MicropostRecipe {
  int top_pairs = 12;
  int bottom_pairs = 30;
  double spacer_nm = 274.0;
  double gaas_nm = 68.6;
  double alas_nm = 81.4;
  double n_gaas = 3.5;
  double n_alas = 2.9;
  /// Optional layer on top of the post (e.g. a sapphire etch-mask residue).
  std::optional<Layer> cap;
  double ambient_index = 1.0;
  double substrate_index = 3.5;
};

inline constexpr double kSapphireIndex = 1.75;

/// cap | (GaAs/AlAs) x top | GaAs spacer | (AlAs/GaAs) x bottom, on substrate.
LayerStack build_micropost_stack(const MicropostRecipe& recipe);

void validate(const Layer& layer);
void validate(const LayerStack& stack);

/// Characteristic matrix [[cos d, i sin d / n], [i n sin d, cos d]] with
/// phase thickness d = 2 pi n t / lambda.
Eigen::Matrix2cd layer_matrix(const Layer& layer, double wavelength_nm);

/// Amplitude reflection coefficient seen from the ambient side.
std::complex<double> reflection_coefficient(const LayerStack& stack, double wavelength_nm);

/// |r|^2 at normal incidence.
double reflectance(const LayerStack& stack, double wavelength_nm);

struct ReflectanceSpectrum {
  std::vector<double> wavelength_nm;
  std::vector<double> reflectance;

  std::size_t size() const { return wavelength_nm.size(); }
};

inline constexpr double kDefaultSpectrumMinNm = 850.0;
inline constexpr double kDefaultSpectrumMaxNm = 1050.0;
inline constexpr int kDefaultSpectrumSamples = 20001;

/// Uniformly sampled reflectance over [min_nm, max_nm] (both ends included).
ReflectanceSpectrum reflectance_spectrum(const LayerStack& stack, double min_nm = kDefaultSpectrumMinNm,
                                         double max_nm = kDefaultSpectrumMaxNm,
                                         int n_samples = kDefaultSpectrumSamples);

struct ResonanceOptions {
  double stopband_threshold = 0.95;
};

struct ResonanceResult {
  double lambda_c_nm = 0.0;
  double fwhm_nm = 0.0;
  double q_factor = 0.0;
  double stopband_lo_nm = 0.0;
  double stopband_hi_nm = 0.0;
  double dip_reflectance = 0.0;
  double background_reflectance = 0.0;
};

/// Locates the cavity dip inside the high-reflectance stopband.
/// Throws NoStopband if no sample exceeds the threshold, NoDip if the
/// stopband has no interior local minimum.
ResonanceResult find_resonance(const ReflectanceSpectrum& spectrum,
                               const ResonanceOptions& options = {});

}  // namespace spsim::optics
