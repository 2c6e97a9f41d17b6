#pragma once

// Synthetic scenes with known endmembers and abundances.
//
// The image is z^2 x z^2 pixels split into z x z square regions, each filled
// with one ground cover. A (z+1) x (z+1) box filter mixes the region borders,
// and every pixel whose largest abundance exceeds 0.8 is replaced by an equal
// mixture of its two dominant endmembers. Noise is added at a prescribed SNR.

#include "hsu/kv.hpp"
#include "hsu/model.hpp"

#include <cstdint>
#include <limits>

namespace hsu {

inline constexpr Index kLibrarySize = 15;
inline constexpr std::uint64_t kDefaultLibrarySeed = 20170813;
inline constexpr double kMaxAbundance = 0.8;

enum class NoiseKind { gaussian, uniform };

struct SceneConfig {
  Index z = 8;
  Index k = 5;
  Index bands = 480;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  int filter_passes = 1;
  NoiseKind noise = NoiseKind::gaussian;
  bool clamp = false;  // clamp noisy X at zero
  // Permits K > z^2 (then not every cover can own a region).
  bool allow_missing_covers = false;
  std::uint64_t library_seed = kDefaultLibrarySeed;

  // Throws InvalidArgument.
  void validate() const;

  KvDocument to_kv() const;
  // Missing keys keep their defaults; unknown keys are ignored.
  static SceneConfig from_kv(const KvDocument& doc);
};

struct SyntheticScene {
  HyperCube x;
  EndmemberMatrix m_true;
  AbundanceMatrix a_true;
  double noise_power = 0.0;       // per-entry noise variance actually added
  double achieved_snr_db = 0.0;   // inf for a noise-free scene
  SceneConfig config;
};

// Smooth positive spectra in (0, 1]: 4-8 Gaussian bumps over the band axis on
// a positive baseline, peak-normalised. Pairwise spectral angles are at least
// 0.1 rad. Throws GenerationError after 100 failed resamples.
EndmemberMatrix generate_library(Index count, Index bands, std::uint64_t seed);

// Side length of the low-pass window.
inline Index filter_window(Index z) { return z + 1; }

// One cover label (0..K-1) per region, row-major over the z x z region grid.
std::vector<Index> sample_region_labels(Index z, Index k, std::uint64_t seed, bool allow_missing = false);

// Mean over a w x w window with symmetric (mirror) boundary padding, applied
// to every row of a K x (side*side) abundance image.
Matrix box_filter(const Matrix& image, Index side, Index window);

// Replaces every column whose largest entry exceeds 0.8 by 0.5/0.5 on its two
// largest entries (ties to the lower index).
void cap_pure_pixels(Matrix& a);

AbundanceMatrix generate_abundances(Index z, Index k, std::uint64_t seed, int filter_passes = 1,
                                    bool allow_missing = false);

// 10 log10(mean(clean^2) / mean((noisy - clean)^2)); inf when noisy == clean.
double measure_snr(const Matrix& clean, const Matrix& noisy);

struct NoisyData {
  Matrix x;
  double noise_power = 0.0;
  double achieved_snr_db = 0.0;
};

// Adds zero-mean noise rescaled so the empirical SNR equals snr_db. snr_db = inf
// returns the input unchanged. Throws InvalidArgument unless snr_db > 0.
NoisyData add_noise(const Matrix& y, double snr_db, std::uint64_t seed, NoiseKind kind = NoiseKind::gaussian);

// M_true is the first K spectra of the library (generated from
// config.library_seed unless one is supplied).
SyntheticScene generate_scene(const SceneConfig& config, const EndmemberMatrix* library = nullptr);

}  // namespace hsu
