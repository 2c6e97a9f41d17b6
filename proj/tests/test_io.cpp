#include "hsu/error.hpp"
#include "hsu/io.hpp"
#include "hsu/kv.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

namespace hsu {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("hsu_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST(Kv, ParseSkipsCommentsAndTrims) {
  const KvDocument d = KvDocument::parse("# header\n  a = 1 \n\nname = #1, #2\n  # indented comment\nb=x=y\n");
  EXPECT_EQ(d.entries().size(), 3u);
  EXPECT_EQ(d.get_int("a"), 1);
  EXPECT_EQ(d.get_string("name"), "#1, #2");
  EXPECT_EQ(d.get_string("b"), "x=y");
  EXPECT_THROW(KvDocument::parse("novalue\n"), ParseError);
  EXPECT_THROW(d.get_string("missing"), ParseError);
  EXPECT_EQ(d.get_int("missing", 7), 7);
}

TEST(Kv, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_TRUE(std::isinf(parse_double(format_double(std::numeric_limits<double>::infinity()))));
  EXPECT_TRUE(std::isnan(parse_double(format_double(std::numeric_limits<double>::quiet_NaN()))));
  EXPECT_THROW(parse_double("1.5x"), ParseError);
}

TEST(Kv, TypedSettersRoundTrip) {
  KvDocument d;
  d.set("x", 0.1);
  d.set("n", std::int64_t{-4});
  d.set("u", std::uint64_t{18446744073709551615ULL});
  d.set("flag", true);
  d.set("s", std::string("hello world"));
  d.set("x", 0.2);
  const KvDocument back = KvDocument::parse(d.to_string());
  EXPECT_EQ(back.entries().size(), 5u);
  EXPECT_EQ(back.get_double("x"), 0.2);
  EXPECT_EQ(back.get_int("n"), -4);
  EXPECT_EQ(back.get_uint("u"), 18446744073709551615ULL);
  EXPECT_TRUE(back.get_bool("flag"));
  EXPECT_EQ(back.get_string("s"), "hello world");
  EXPECT_THROW(back.get_bool("s"), ParseError);
}

TEST(Kv, SplitList) {
  EXPECT_EQ(split_list(" a, b ,c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_list("").empty());
}

TEST_F(IoTest, CubeRoundTripF64IsLossless) {
  Rng rng(1);
  HyperCube c(test::uniform_matrix(5, 12, rng), 3, 4);
  c.band_ids = {2, 3, 5, 7, 11};
  c.wavelengths = {400.5, 410, 420, 430, 440.25};
  save_cube(c, path("cube"), SampleType::f64);
  const CubeFile f = read_cube(path("cube"));
  EXPECT_EQ(f.dtype, SampleType::f64);
  EXPECT_EQ(f.cube.data, c.data);
  EXPECT_EQ(f.cube.rows, 3);
  EXPECT_EQ(f.cube.cols, 4);
  EXPECT_EQ(f.cube.band_ids, c.band_ids);
  EXPECT_EQ(f.cube.wavelengths, c.wavelengths);
}

TEST_F(IoTest, CubeRoundTripF32WithinFloatPrecision) {
  Rng rng(2);
  const HyperCube c(test::uniform_matrix(4, 6, rng), 2, 3);
  save_cube(c, path("cube"));
  EXPECT_EQ(fs::file_size(payload_path(path("cube"))), 4u * 6u * 4u);
  const HyperCube back = load_cube(path("cube"));
  EXPECT_LT(test::max_abs_diff(back.data, c.data), 1e-7);
  EXPECT_EQ(back.data, c.data.cast<float>().cast<double>());
}

TEST_F(IoTest, PayloadIsBandSequentialLittleEndian) {
  Matrix d(2, 2);
  d << 1, 2, 3, 4;
  save_cube(HyperCube(d, 1, 2), path("bsq"), SampleType::f32);
  const std::string bytes = read_text_file(payload_path(path("bsq")));
  ASSERT_EQ(bytes.size(), 16u);
  // 2.0f = 0x40000000, stored as 00 00 00 40 at offset 4.
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 0x40);
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 0x00);
  // 3.0f = 0x40400000 starts band 2.
  EXPECT_EQ(static_cast<unsigned char>(bytes[10]), 0x40);
  EXPECT_EQ(static_cast<unsigned char>(bytes[11]), 0x40);
}

TEST_F(IoTest, MalformedFilesAreRejected) {
  const HyperCube c(Matrix::Ones(2, 4), 2, 2);
  save_cube(c, path("c"));
  std::string hdr = read_text_file(header_path(path("c")));

  write_text_file(payload_path(path("c")), std::string(20, '\0'));
  EXPECT_THROW(load_cube(path("c")), IoError);
  write_text_file(payload_path(path("c")), std::string(40, '\0'));
  EXPECT_THROW(load_cube(path("c")), ParseError);
  write_text_file(payload_path(path("c")), std::string(32, '\0'));
  EXPECT_NO_THROW(load_cube(path("c")));

  auto with = [&](const std::string& from, const std::string& to) {
    std::string h = hdr;
    h.replace(h.find(from), from.size(), to);
    write_text_file(header_path(path("c")), h);
  };
  with("dtype = f32", "dtype = i16");
  EXPECT_THROW(load_cube(path("c")), UnsupportedFormat);
  with("byte_order = little", "byte_order = big");
  EXPECT_THROW(load_cube(path("c")), UnsupportedFormat);
  with("interleave = band-sequential", "interleave = bip");
  EXPECT_THROW(load_cube(path("c")), UnsupportedFormat);
  with("pixels = 4", "pixels = 5");
  EXPECT_THROW(load_cube(path("c")), ParseError);
  with("band_ids = 1,2", "band_ids = 1");
  EXPECT_THROW(load_cube(path("c")), ParseError);
  EXPECT_THROW(load_cube(path("absent")), IoError);
}

TEST_F(IoTest, GroundTruthRoundTripKeepsNames) {
  Rng rng(3);
  GroundTruth gt;
  gt.m = EndmemberMatrix(test::uniform_matrix(6, 3, rng), {"Soil, dry", "50% tree", "#3"});
  gt.a = AbundanceMatrix(test::simplex_columns(3, 8, rng));
  save_ground_truth(gt, path("gt"), 2, 4);
  const GroundTruth back = load_ground_truth(path("gt"));
  EXPECT_EQ(back.m.data, gt.m.data);
  EXPECT_EQ(back.a.data, gt.a.data);
  EXPECT_EQ(back.m.names, gt.m.names);
  EXPECT_TRUE(back.notes.empty());
  EXPECT_EQ(load_cube(path("gt") + ".abundances").rows, 2);
  EXPECT_THROW(save_ground_truth(gt, path("bad"), 3, 3), ShapeError);
}

TEST_F(IoTest, OffSimplexGroundTruthWarns) {
  GroundTruth gt;
  gt.m = EndmemberMatrix(Matrix::Ones(3, 2));
  gt.a = AbundanceMatrix(Matrix::Constant(2, 4, 0.7));
  save_ground_truth(gt, path("gt"));
  EXPECT_EQ(load_ground_truth(path("gt")).notes.size(), 1u);
}

TEST(BandRemoval, PresetCounts) {
  const std::vector<std::pair<std::string, int>> want = {{"samson", 156},  {"jasper", 198},    {"urban", 162},
                                                         {"cuprite", 188}, {"san_diego", 189}, {"washington_dc", 191}};
  for (const auto& [name, count] : want) {
    const BandRemovalList& p = band_removal_preset(name);
    EXPECT_NO_THROW(p.validate());
    EXPECT_EQ(p.remaining(), count) << name;
  }
  EXPECT_THROW(band_removal_preset("moffett"), InvalidArgument);
}

TEST(BandRemoval, KeepsOriginalBandIds) {
  const BandRemovalList list{"t", 6, {{2, 3}, {6, 6}}};
  Matrix d(6, 1);
  d << 10, 20, 30, 40, 50, 60;
  HyperCube c(d, 1, 1);
  c.wavelengths = {1, 2, 3, 4, 5, 6};
  const HyperCube out = apply_band_removal(c, list);
  EXPECT_EQ(out.band_ids, (std::vector<int>{1, 4, 5}));
  EXPECT_EQ(out.data(1, 0), 40.0);
  EXPECT_EQ(out.wavelengths, (std::vector<double>{1, 4, 5}));
  EXPECT_THROW(apply_band_removal(HyperCube(Matrix::Ones(5, 1), 1, 1), list), ShapeError);
  EXPECT_THROW((BandRemovalList{"o", 6, {{1, 3}, {3, 4}}}.validate()), InvalidArgument);
}

TEST_F(IoTest, LabelGridAndSeeds) {
  write_text_file(path("grid.txt"), "1 2 2\n3 1 1\n\n");
  const LabelGrid g = read_label_grid(path("grid.txt"));
  EXPECT_EQ(g.rows, 2);
  EXPECT_EQ(g.cols, 3);
  EXPECT_EQ(g.values, (std::vector<int>{1, 2, 2, 3, 1, 1}));
  write_text_file(path("ragged.txt"), "1 2\n3\n");
  EXPECT_THROW(read_label_grid(path("ragged.txt")), ParseError);
  write_text_file(path("bad.txt"), "1 x\n");
  EXPECT_THROW(read_label_grid(path("bad.txt")), ParseError);

  write_text_file(path("seeds.cfg"), "# seeds\nwater = 0, 1:2\nsoil = 7\n");
  const EndmemberSeeds s = read_seeds(path("seeds.cfg"), 4);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].name, "water");
  EXPECT_EQ(s[0].pixels, (std::vector<Index>{0, 6}));
  EXPECT_EQ(s[1].pixels, (std::vector<Index>{7}));
  write_text_file(path("bad.cfg"), "x = 0:9\n");
  EXPECT_THROW(read_seeds(path("bad.cfg"), 4), ParseError);
}

TEST(ReportCsv, Layout) {
  ReportColumn a{"nmf", Vector::Constant(2, 0.5), Vector::Constant(2, 0.25), 3, 1};
  ReportColumn b{"l1", Vector::Zero(2), Vector::Ones(2), 3, 0};
  a.sad(1) = 0.1;
  KvDocument prov;
  prov.set("seed", 7);
  const std::string csv = format_report_csv({"#1", "#2"}, {a, b}, prov);
  EXPECT_EQ(csv,
            "# seed = 7\n"
            "metric,endmember,nmf,l1\n"
            "SAD,#1,0.5,0\n"
            "SAD,#2,0.1,0\n"
            "SAD,Avg.,0.3,0\n"
            "RMSE,#1,0.25,1\n"
            "RMSE,#2,0.25,1\n"
            "RMSE,Avg.,0.25,1\n"
            "runs,,3,3\n"
            "failures,,1,0\n");
  b.sad = Vector::Zero(3);
  EXPECT_THROW(format_report_csv({"#1", "#2"}, {a, b}, prov), ShapeError);
}

}  // namespace
}  // namespace hsu
