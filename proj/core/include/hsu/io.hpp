#pragma once

// Cube and ground-truth files, band-removal presets, seed and label files,
// and CSV report tables.
//
// A cube is stored as two files: `<base>.hdr`, a key-value header, and
// `<base>.raw`, the samples as little-endian IEEE floats in band-sequential
// order (band by band, pixels row-major inside a band).

#include "hsu/kv.hpp"
#include "hsu/labeling.hpp"
#include "hsu/model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace hsu {

enum class SampleType { f32, f64 };

std::string header_path(const std::string& base);
std::string payload_path(const std::string& base);

// f32 rounds every sample to single precision; f64 is lossless.
void save_cube(const HyperCube& cube, const std::string& base, SampleType dtype = SampleType::f32,
               const std::vector<std::string>& names = {});

struct CubeFile {
  HyperCube cube;
  SampleType dtype = SampleType::f32;
  std::vector<std::string> names;  // optional per-band labels (endmember names)
};

// Throws ParseError on a malformed header, UnsupportedFormat for a byte order,
// interleave or dtype other than the ones written here, IoError on a missing
// or truncated payload.
CubeFile read_cube(const std::string& base);
HyperCube load_cube(const std::string& base);

// M goes to `<base>.endmembers` (1 x K grid, L bands), A to `<base>.abundances`
// (rows x cols grid, K bands). rows = 0 stores A as a single row.
void save_ground_truth(const GroundTruth& gt, const std::string& base, Index rows = 0, Index cols = 0,
                       SampleType dtype = SampleType::f64);
// A column off the simplex by more than 1e-6 adds a warning to notes.
GroundTruth load_ground_truth(const std::string& base);

struct BandRemovalList {
  std::string name;
  int original_bands = 0;
  std::vector<std::pair<int, int>> removed;  // inclusive 1-based ranges

  int remaining() const;
  // Throws InvalidArgument on ranges outside the band count or overlapping.
  void validate() const;
};

const std::vector<BandRemovalList>& band_removal_presets();
// Throws InvalidArgument for an unknown name.
const BandRemovalList& band_removal_preset(const std::string& name);

// Drops the listed bands. band_ids and wavelengths keep the survivors.
// Throws ShapeError unless the cube has list.original_bands bands.
HyperCube apply_band_removal(const HyperCube& cube, const BandRemovalList& list);

struct LabelGrid {
  Index rows = 0;
  Index cols = 0;
  std::vector<int> values;  // row-major
};

// Whitespace-separated integers, one image row per line.
LabelGrid read_label_grid(const std::string& path);

// Key-value file: `name = p, p, ...` where p is a pixel index or `row:col`.
EndmemberSeeds read_seeds(const std::string& path, Index grid_cols);

struct ReportColumn {
  std::string method;
  Vector sad;   // per reference endmember
  Vector rmse;
  int runs = 1;
  int failures = 0;
};

// Endmember rows and method columns, SAD block then RMSE block, each closed
// by an Avg. row. Provenance entries are emitted as leading `# key = value`
// comment lines.
std::string format_report_csv(const std::vector<std::string>& endmember_names,
                              const std::vector<ReportColumn>& columns, const KvDocument& provenance);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace hsu
