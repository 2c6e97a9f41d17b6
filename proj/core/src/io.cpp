#include "hsu/io.hpp"

#include "hsu/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hsu {
namespace {

const char* dtype_name(SampleType t) { return t == SampleType::f32 ? "f32" : "f64"; }

std::string escape_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '%') {
      out += "%25";
    } else if (c == ',') {
      out += "%2C";
    } else if (c == '\n') {
      out += "%0A";
    } else {
      out += c;
    }
  }
  return out;
}

std::string unescape_name(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const std::string code = s.substr(i + 1, 2);
      if (code == "25") {
        out += '%';
      } else if (code == "2C") {
        out += ',';
      } else if (code == "0A") {
        out += '\n';
      } else {
        throw ParseError("bad escape '%" + code + "' in name");
      }
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

template <typename T>
void put_le(std::vector<char>& buf, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf.push_back(static_cast<char>(bits & 0xFF));
    bits >>= 8;
  }
}

template <typename T>
T get_le(const char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = sizeof(U); i-- > 0;) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<T>(bits);
}

Index header_index(const KvDocument& doc, const std::string& key) {
  const std::int64_t v = doc.get_int(key);
  if (v < 0) throw ParseError("header: " + key + " must be nonnegative");
  return static_cast<Index>(v);
}

std::string join_numbers(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

Index parse_pixel(const std::string& token, Index grid_cols) {
  try {
    const auto colon = token.find(':');
    if (colon == std::string::npos) return static_cast<Index>(std::stoll(token));
    const Index r = std::stoll(token.substr(0, colon));
    const Index c = std::stoll(token.substr(colon + 1));
    if (c < 0 || c >= grid_cols) throw ParseError("seed pixel column out of range: '" + token + "'");
    return r * grid_cols + c;
  } catch (const std::logic_error&) {
    throw ParseError("bad pixel reference '" + token + "'");
  }
}

}  // namespace

std::string header_path(const std::string& base) { return base + ".hdr"; }
std::string payload_path(const std::string& base) { return base + ".raw"; }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_cube(const HyperCube& cube, const std::string& base, SampleType dtype,
               const std::vector<std::string>& names) {
  cube.validate();
  if (!names.empty() && static_cast<Index>(names.size()) != cube.bands()) {
    throw ShapeError("save_cube: one name per band required");
  }
  KvDocument h;
  h.set("rows", static_cast<std::int64_t>(cube.rows));
  h.set("cols", static_cast<std::int64_t>(cube.cols));
  h.set("bands", static_cast<std::int64_t>(cube.bands()));
  h.set("pixels", static_cast<std::int64_t>(cube.pixels()));
  h.set("dtype", std::string(dtype_name(dtype)));
  h.set("byte_order", std::string("little"));
  h.set("interleave", std::string("band-sequential"));
  h.set("band_ids", join_numbers(cube.band_ids));
  if (!cube.wavelengths.empty()) {
    std::string w;
    for (std::size_t i = 0; i < cube.wavelengths.size(); ++i) w += (i ? "," : "") + format_double(cube.wavelengths[i]);
    h.set("wavelengths", w);
  }
  if (!names.empty()) {
    std::string n;
    for (std::size_t i = 0; i < names.size(); ++i) n += (i ? "," : "") + escape_name(names[i]);
    h.set("names", n);
  }

  std::vector<char> buf;
  const std::size_t width = dtype == SampleType::f32 ? 4 : 8;
  buf.reserve(static_cast<std::size_t>(cube.data.size()) * width);
  for (Index l = 0; l < cube.bands(); ++l) {
    for (Index n = 0; n < cube.pixels(); ++n) {
      if (dtype == SampleType::f32) {
        put_le(buf, static_cast<float>(cube.data(l, n)));
      } else {
        put_le(buf, cube.data(l, n));
      }
    }
  }
  h.write_file(header_path(base));
  std::ofstream out(payload_path(base), std::ios::binary);
  if (!out) throw IoError("cannot write '" + payload_path(base) + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for '" + payload_path(base) + "'");
}

CubeFile read_cube(const std::string& base) {
  const KvDocument h = KvDocument::read_file(header_path(base));
  const Index rows = header_index(h, "rows");
  const Index cols = header_index(h, "cols");
  const Index bands = header_index(h, "bands");
  if (h.contains("pixels") && header_index(h, "pixels") != rows * cols) {
    throw ParseError("header: rows x cols does not equal the declared pixel count");
  }
  const std::string order = h.get_string("byte_order");
  if (order != "little") throw UnsupportedFormat("byte order '" + order + "' is not supported");
  const std::string interleave = h.get_string("interleave");
  if (interleave != "band-sequential") throw UnsupportedFormat("interleave '" + interleave + "' is not supported");
  const std::string dt = h.get_string("dtype");
  CubeFile out;
  if (dt == "f32") {
    out.dtype = SampleType::f32;
  } else if (dt == "f64") {
    out.dtype = SampleType::f64;
  } else {
    throw UnsupportedFormat("dtype '" + dt + "' is not supported");
  }

  std::vector<int> band_ids;
  if (h.contains("band_ids")) {
    for (const auto& t : split_list(h.get_string("band_ids"))) {
      try {
        band_ids.push_back(std::stoi(t));
      } catch (const std::logic_error&) {
        throw ParseError("header: bad band id '" + t + "'");
      }
    }
    if (static_cast<Index>(band_ids.size()) != bands) throw ParseError("header: band_ids length differs from bands");
  }
  std::vector<double> wavelengths;
  if (h.contains("wavelengths")) {
    for (const auto& t : split_list(h.get_string("wavelengths"))) wavelengths.push_back(parse_double(t));
    if (static_cast<Index>(wavelengths.size()) != bands) {
      throw ParseError("header: wavelengths length differs from bands");
    }
  }
  if (h.contains("names")) {
    const std::string raw = h.get_string("names");
    std::string item;
    std::istringstream in(raw);
    while (std::getline(in, item, ',')) out.names.push_back(unescape_name(item));
    if (static_cast<Index>(out.names.size()) != bands) throw ParseError("header: names length differs from bands");
  }

  const std::string bytes = read_text_file(payload_path(base));
  const std::size_t width = out.dtype == SampleType::f32 ? 4 : 8;
  const auto expected = static_cast<std::size_t>(rows * cols * bands) * width;
  if (bytes.size() < expected) {
    throw IoError("payload truncated: " + std::to_string(bytes.size()) + " of " + std::to_string(expected) + " bytes");
  }
  if (bytes.size() > expected) throw ParseError("payload longer than the header declares");

  Matrix data(bands, rows * cols);
  const char* p = bytes.data();
  for (Index l = 0; l < bands; ++l) {
    for (Index n = 0; n < rows * cols; ++n, p += width) {
      data(l, n) = out.dtype == SampleType::f32 ? static_cast<double>(get_le<float>(p)) : get_le<double>(p);
    }
  }
  out.cube = HyperCube(std::move(data), rows, cols);
  if (!band_ids.empty()) out.cube.band_ids = std::move(band_ids);
  out.cube.wavelengths = std::move(wavelengths);
  out.cube.validate();
  return out;
}

HyperCube load_cube(const std::string& base) { return read_cube(base).cube; }

void save_ground_truth(const GroundTruth& gt, const std::string& base, Index rows, Index cols, SampleType dtype) {
  if (gt.m.count() != gt.a.count()) throw ShapeError("ground truth: M and A disagree on K");
  if (rows == 0) {
    rows = 1;
    cols = gt.a.pixels();
  }
  if (rows * cols != gt.a.pixels()) throw ShapeError("ground truth: grid does not match the pixel count");
  // Endmember names travel on the abundance file, whose bands are the endmembers.
  save_cube(HyperCube(gt.m.data, 1, gt.m.count()), base + ".endmembers", dtype);
  save_cube(HyperCube(gt.a.data, rows, cols), base + ".abundances", dtype, gt.m.names);
}

GroundTruth load_ground_truth(const std::string& base) {
  const CubeFile mf = read_cube(base + ".endmembers");
  const CubeFile af = read_cube(base + ".abundances");
  if (mf.cube.pixels() != af.cube.bands()) {
    throw ShapeError("ground truth: endmember file has K = " + std::to_string(mf.cube.pixels()) +
                     ", abundance file has K = " + std::to_string(af.cube.bands()));
  }
  GroundTruth gt;
  gt.m = EndmemberMatrix(mf.cube.data, af.names);
  gt.a = AbundanceMatrix(af.cube.data);
  const double dev = gt.a.max_sum_deviation();
  const bool negative = gt.a.data.size() > 0 && gt.a.data.minCoeff() < -1e-6;
  if (dev > 1e-6 || negative) {
    gt.notes.push_back("warning: abundances are off the simplex (max |1 - sum| = " + format_double(dev) + ")");
  }
  return gt;
}

int BandRemovalList::remaining() const {
  int removed_count = 0;
  for (const auto& [a, b] : removed) removed_count += b - a + 1;
  return original_bands - removed_count;
}

void BandRemovalList::validate() const {
  std::vector<std::pair<int, int>> sorted = removed;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto [a, b] = sorted[i];
    if (a < 1 || b < a || b > original_bands) throw InvalidArgument("band list '" + name + "': bad range");
    if (i > 0 && a <= sorted[i - 1].second) throw InvalidArgument("band list '" + name + "': overlapping ranges");
  }
}

const std::vector<BandRemovalList>& band_removal_presets() {
  static const std::vector<BandRemovalList> presets = {
      {"samson", 156, {}},
      {"jasper", 224, {{1, 3}, {108, 112}, {154, 166}, {220, 224}}},
      {"urban", 210, {{1, 4}, {76, 76}, {87, 87}, {101, 111}, {136, 153}, {198, 210}}},
      {"cuprite", 224, {{1, 2}, {104, 113}, {148, 167}, {221, 224}}},
      {"san_diego", 224, {{1, 6}, {33, 35}, {97, 97}, {107, 113}, {153, 166}, {221, 224}}},
      {"washington_dc", 210, {{103, 106}, {138, 148}, {207, 210}}},
  };
  return presets;
}

const BandRemovalList& band_removal_preset(const std::string& name) {
  for (const auto& p : band_removal_presets()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : band_removal_presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw InvalidArgument("unknown band-removal preset '" + name + "' (known: " + known + ")");
}

HyperCube apply_band_removal(const HyperCube& cube, const BandRemovalList& list) {
  list.validate();
  if (cube.bands() != list.original_bands) {
    throw ShapeError("band removal '" + list.name + "' expects " + std::to_string(list.original_bands) +
                     " bands, cube has " + std::to_string(cube.bands()));
  }
  std::vector<Index> keep;
  for (Index l = 0; l < cube.bands(); ++l) {
    const int id = static_cast<int>(l) + 1;
    const bool drop = std::any_of(list.removed.begin(), list.removed.end(),
                                  [&](const auto& r) { return id >= r.first && id <= r.second; });
    if (!drop) keep.push_back(l);
  }
  Matrix data(static_cast<Index>(keep.size()), cube.pixels());
  std::vector<int> ids;
  std::vector<double> wl;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    data.row(static_cast<Index>(i)) = cube.data.row(keep[i]);
    ids.push_back(cube.band_ids[static_cast<std::size_t>(keep[i])]);
    if (!cube.wavelengths.empty()) wl.push_back(cube.wavelengths[static_cast<std::size_t>(keep[i])]);
  }
  HyperCube out(std::move(data), cube.rows, cube.cols);
  out.band_ids = std::move(ids);
  out.wavelengths = std::move(wl);
  return out;
}

LabelGrid read_label_grid(const std::string& path) {
  std::istringstream in(read_text_file(path));
  LabelGrid g;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<int> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stoi(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::logic_error&) {
        throw ParseError("label grid: bad label '" + tok + "' on row " + std::to_string(g.rows + 1));
      }
    }
    if (row.empty()) continue;
    if (g.rows == 0) {
      g.cols = static_cast<Index>(row.size());
    } else if (static_cast<Index>(row.size()) != g.cols) {
      throw ParseError("label grid: row " + std::to_string(g.rows + 1) + " has a different length");
    }
    g.values.insert(g.values.end(), row.begin(), row.end());
    ++g.rows;
  }
  return g;
}

EndmemberSeeds read_seeds(const std::string& path, Index grid_cols) {
  const KvDocument doc = KvDocument::read_file(path);
  EndmemberSeeds seeds;
  for (const auto& [name, value] : doc.entries()) {
    EndmemberSeed s;
    s.name = name;
    for (const auto& tok : split_list(value)) s.pixels.push_back(parse_pixel(tok, grid_cols));
    seeds.push_back(std::move(s));
  }
  return seeds;
}

std::string format_report_csv(const std::vector<std::string>& endmember_names,
                              const std::vector<ReportColumn>& columns, const KvDocument& provenance) {
  const auto k = static_cast<Index>(endmember_names.size());
  for (const auto& c : columns) {
    if (c.sad.size() != k || c.rmse.size() != k) throw ShapeError("report: column '" + c.method + "' has wrong length");
  }
  std::ostringstream out;
  for (const auto& [key, value] : provenance.entries()) out << "# " << key << " = " << value << "\n";
  out << "metric,endmember";
  for (const auto& c : columns) out << "," << c.method;
  out << "\n";
  auto block = [&](const char* metric, auto&& pick) {
    for (Index i = 0; i < k; ++i) {
      out << metric << "," << endmember_names[static_cast<std::size_t>(i)];
      for (const auto& c : columns) out << "," << format_double(pick(c)(i));
      out << "\n";
    }
    out << metric << ",Avg.";
    for (const auto& c : columns) out << "," << format_double(k > 0 ? pick(c).mean() : 0.0);
    out << "\n";
  };
  block("SAD", [](const ReportColumn& c) -> const Vector& { return c.sad; });
  block("RMSE", [](const ReportColumn& c) -> const Vector& { return c.rmse; });
  out << "runs,";
  for (const auto& c : columns) out << "," << c.runs;
  out << "\nfailures,";
  for (const auto& c : columns) out << "," << c.failures;
  out << "\n";
  return out.str();
}

}  // namespace hsu
