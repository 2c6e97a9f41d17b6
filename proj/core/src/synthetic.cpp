#include "hsu/synthetic.hpp"

#include "hsu/error.hpp"
#include "hsu/random.hpp"

#include <algorithm>
#include <cmath>

namespace hsu {
namespace {

constexpr std::uint64_t kLibraryStream = 0x11B;
constexpr std::uint64_t kRegionStream = 0x2E6;
constexpr std::uint64_t kNoiseStream = 0x4015E;
constexpr double kMinSeparation = 0.1;
constexpr int kLibraryResamples = 100;
constexpr int kRegionAttempts = 1000;

Vector draw_spectrum(Rng& rng, Index bands) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int bumps = 4 + static_cast<int>(rng() % 5);
  const double span = static_cast<double>(bands - 1);
  Vector s = Vector::Constant(bands, 0.05 + 0.25 * u(rng));
  for (int b = 0; b < bumps; ++b) {
    const double center = u(rng) * span;
    const double width = span * (0.02 + 0.1 * u(rng));
    const double amp = 0.2 + 0.8 * u(rng);
    for (Index l = 0; l < bands; ++l) {
      const double t = (static_cast<double>(l) - center) / width;
      s(l) += amp * std::exp(-0.5 * t * t);
    }
  }
  return s / s.maxCoeff();
}

double angle(const Vector& a, const Vector& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Index mirror(Index i, Index side) {
  if (i < 0) return -i - 1;
  if (i >= side) return 2 * side - i - 1;
  return i;
}

const char* noise_name(NoiseKind k) { return k == NoiseKind::gaussian ? "gaussian" : "uniform"; }

}  // namespace

void SceneConfig::validate() const {
  if (z < 2) throw InvalidArgument("scene: z must be >= 2");
  if (k < 2 || k > kLibrarySize) throw InvalidArgument("scene: K must be in [2, 15]");
  if (k > z * z && !allow_missing_covers) {
    throw InvalidArgument("scene: K = " + std::to_string(k) + " exceeds the " + std::to_string(z * z) +
                          " regions; set allow_missing_covers to permit it");
  }
  if (bands < 16) throw InvalidArgument("scene: need at least 16 bands");
  if (!(snr_db > 0.0)) throw InvalidArgument("scene: snr_db must be > 0 or inf");
  if (filter_passes < 1) throw InvalidArgument("scene: filter_passes must be >= 1");
}

KvDocument SceneConfig::to_kv() const {
  KvDocument doc;
  doc.set("z", static_cast<std::int64_t>(z));
  doc.set("K", static_cast<std::int64_t>(k));
  doc.set("bands", static_cast<std::int64_t>(bands));
  doc.set("snr_db", snr_db);
  doc.set("seed", seed);
  doc.set("filter_passes", filter_passes);
  doc.set("noise", std::string(noise_name(noise)));
  doc.set("clamp", clamp);
  doc.set("allow_missing_covers", allow_missing_covers);
  doc.set("library_seed", library_seed);
  return doc;
}

SceneConfig SceneConfig::from_kv(const KvDocument& doc) {
  SceneConfig c;
  c.z = doc.get_int("z", c.z);
  c.k = doc.get_int("K", c.k);
  c.bands = doc.get_int("bands", c.bands);
  c.snr_db = doc.get_double("snr_db", c.snr_db);
  c.seed = doc.get_uint("seed", c.seed);
  c.filter_passes = static_cast<int>(doc.get_int("filter_passes", c.filter_passes));
  const std::string noise = doc.get_string("noise", noise_name(c.noise));
  if (noise == "gaussian") {
    c.noise = NoiseKind::gaussian;
  } else if (noise == "uniform") {
    c.noise = NoiseKind::uniform;
  } else {
    throw ParseError("unknown noise kind '" + noise + "'");
  }
  c.clamp = doc.get_bool("clamp", c.clamp);
  c.allow_missing_covers = doc.get_bool("allow_missing_covers", c.allow_missing_covers);
  c.library_seed = doc.get_uint("library_seed", c.library_seed);
  return c;
}

EndmemberMatrix generate_library(Index count, Index bands, std::uint64_t seed) {
  if (count < 1 || count > kLibrarySize) throw InvalidArgument("library: count must be in [1, 15]");
  if (bands < 16) throw InvalidArgument("library: need at least 16 bands");
  Rng rng = make_rng(seed, kLibraryStream);
  Matrix lib(bands, count);
  int resamples = 0;
  for (Index j = 0; j < count;) {
    const Vector s = draw_spectrum(rng, bands);
    bool separated = true;
    for (Index i = 0; i < j && separated; ++i) separated = angle(lib.col(i), s) >= kMinSeparation;
    if (separated) {
      lib.col(j++) = s;
    } else if (++resamples > kLibraryResamples) {
      throw GenerationError("library: could not reach the minimum spectral angle after 100 resamples");
    }
  }
  return EndmemberMatrix(std::move(lib));
}

std::vector<Index> sample_region_labels(Index z, Index k, std::uint64_t seed, bool allow_missing) {
  const Index regions = z * z;
  if (z < 1 || k < 1) throw InvalidArgument("regions: z and K must be positive");
  if (k > regions && !allow_missing) throw InvalidArgument("regions: K exceeds z^2");
  Rng rng = make_rng(seed, kRegionStream);
  const auto uk = static_cast<std::uint64_t>(k);
  std::vector<Index> labels(static_cast<std::size_t>(regions));
  auto draw = [&] {
    for (auto& l : labels) l = static_cast<Index>(rng() % uk);
  };
  if (allow_missing) {
    draw();
    return labels;
  }
  std::vector<char> seen(static_cast<std::size_t>(k));
  for (int attempt = 0; attempt < kRegionAttempts; ++attempt) {
    draw();
    std::fill(seen.begin(), seen.end(), 0);
    for (Index l : labels) seen[static_cast<std::size_t>(l)] = 1;
    if (std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; })) return labels;
  }
  // Every cover once, the rest uniform, then a Fisher-Yates shuffle.
  for (Index r = 0; r < regions; ++r) {
    labels[static_cast<std::size_t>(r)] = r < k ? r : static_cast<Index>(rng() % uk);
  }
  for (Index r = regions - 1; r > 0; --r) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(r + 1));
    std::swap(labels[static_cast<std::size_t>(r)], labels[static_cast<std::size_t>(j)]);
  }
  return labels;
}

Matrix box_filter(const Matrix& image, Index side, Index window) {
  if (image.cols() != side * side) throw ShapeError("box_filter: image is not side x side");
  if (window < 1 || window > side) throw InvalidArgument("box_filter: window must be in [1, side]");
  const Index lo = (window - 1) / 2;
  const Index hi = window - 1 - lo;
  const double scale = 1.0 / static_cast<double>(window);
  Matrix tmp = Matrix::Zero(image.rows(), image.cols());
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      for (Index d = -lo; d <= hi; ++d) tmp.col(r * side + c) += image.col(r * side + mirror(c + d, side));
    }
  }
  Matrix out = Matrix::Zero(image.rows(), image.cols());
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      for (Index d = -lo; d <= hi; ++d) out.col(r * side + c) += tmp.col(mirror(r + d, side) * side + c);
    }
  }
  return out * (scale * scale);
}

void cap_pure_pixels(Matrix& a) {
  const Index k = a.rows();
  if (k < 2) throw InvalidArgument("cap_pure_pixels: need at least two endmembers");
  for (Index n = 0; n < a.cols(); ++n) {
    Index first = 0;
    for (Index i = 1; i < k; ++i) {
      if (a(i, n) > a(first, n)) first = i;
    }
    if (!(a(first, n) > kMaxAbundance)) continue;
    Index second = first == 0 ? 1 : 0;
    for (Index i = 0; i < k; ++i) {
      if (i != first && a(i, n) > a(second, n)) second = i;
    }
    a.col(n).setZero();
    a(first, n) = 0.5;
    a(second, n) = 0.5;
  }
}

AbundanceMatrix generate_abundances(Index z, Index k, std::uint64_t seed, int filter_passes, bool allow_missing) {
  if (z < 2) throw InvalidArgument("abundances: z must be >= 2");
  if (k < 2) throw InvalidArgument("abundances: K must be >= 2");
  if (filter_passes < 1) throw InvalidArgument("abundances: filter_passes must be >= 1");
  const std::vector<Index> labels = sample_region_labels(z, k, seed, allow_missing);
  const Index side = z * z;
  Matrix a = Matrix::Zero(k, side * side);
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      a(labels[static_cast<std::size_t>((r / z) * z + c / z)], r * side + c) = 1.0;
    }
  }
  for (int p = 0; p < filter_passes; ++p) a = box_filter(a, side, filter_window(z));
  cap_pure_pixels(a);
  return AbundanceMatrix(std::move(a));
}

double measure_snr(const Matrix& clean, const Matrix& noisy) {
  if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols()) throw ShapeError("measure_snr: shapes differ");
  const double noise = (noisy - clean).squaredNorm();
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(clean.squaredNorm() / noise);
}

NoisyData add_noise(const Matrix& y, double snr_db, std::uint64_t seed, NoiseKind kind) {
  if (!(snr_db > 0.0)) throw InvalidArgument("add_noise: snr_db must be > 0 or inf");
  NoisyData out;
  if (std::isinf(snr_db)) {
    out.x = y;
    out.achieved_snr_db = snr_db;
    return out;
  }
  const double count = static_cast<double>(y.size());
  const double signal_power = y.squaredNorm() / count;
  if (!(signal_power > 0.0)) throw InvalidArgument("add_noise: signal has zero power");

  Rng rng = make_rng(seed, kNoiseStream);
  Matrix noise(y.rows(), y.cols());
  if (kind == NoiseKind::gaussian) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (Index i = 0; i < noise.size(); ++i) noise.data()[i] = dist(rng);
  } else {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (Index i = 0; i < noise.size(); ++i) noise.data()[i] = dist(rng);
  }
  noise.array() -= noise.mean();
  const double target = signal_power / std::pow(10.0, snr_db / 10.0);
  noise *= std::sqrt(target / (noise.squaredNorm() / count));

  out.x = y + noise;
  out.noise_power = target;
  out.achieved_snr_db = measure_snr(y, out.x);
  return out;
}

SyntheticScene generate_scene(const SceneConfig& config, const EndmemberMatrix* library) {
  config.validate();
  SyntheticScene scene;
  scene.config = config;

  EndmemberMatrix lib = library ? *library : generate_library(kLibrarySize, config.bands, config.library_seed);
  if (lib.bands() != config.bands) throw ShapeError("scene: library band count differs from config");
  if (lib.count() < config.k) throw ShapeError("scene: library has fewer than K spectra");
  std::vector<std::string> names(lib.names.begin(), lib.names.begin() + config.k);
  scene.m_true = EndmemberMatrix(lib.data.leftCols(config.k), std::move(names));

  scene.a_true =
      generate_abundances(config.z, config.k, config.seed, config.filter_passes, config.allow_missing_covers);
  const Matrix y = scene.m_true.data * scene.a_true.data;
  NoisyData noisy = add_noise(y, config.snr_db, config.seed, config.noise);
  if (config.clamp) noisy.x = noisy.x.cwiseMax(0.0);
  scene.noise_power = noisy.noise_power;
  scene.achieved_snr_db = noisy.achieved_snr_db;
  const Index side = config.z * config.z;
  scene.x = HyperCube(std::move(noisy.x), side, side);
  return scene;
}

}  // namespace hsu
