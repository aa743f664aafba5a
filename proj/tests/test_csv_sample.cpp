#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "hevt/csv.hpp"
#include "hevt/sample.hpp"

namespace {

TEST(Csv, SplitsQuotedCells) {
  const auto cells = hevt::split_csv_line(R"( a ,"b,c","say ""hi""",)");
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0], "a");
  EXPECT_EQ(cells[1], "b,c");
  EXPECT_EQ(cells[2], "say \"hi\"");
  EXPECT_EQ(cells[3], "");
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 37.735849056603776, 1e-300, 2.5}) {
    EXPECT_EQ(std::stod(hevt::format_double(v)), v);
  }
  EXPECT_EQ(hevt::format_double(2.0), "2");
  EXPECT_EQ(hevt::format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(hevt::format_double(std::nan("")), "nan");
}

TEST(Csv, RowQuotesWhenNeeded) {
  EXPECT_EQ(hevt::csv_row({"a", "b,c", "d\"e"}), "a,\"b,c\",\"d\"\"e\"");
}

TEST(SpeedSample, FromGroupsBuildsBlocks) {
  const auto s = hevt::SpeedSample::from_groups({{1.0, 2.0}, {3.0, 4.0}});
  EXPECT_EQ(s.n(), 4u);
  EXPECT_EQ(s.p(), 2u);
  EXPECT_EQ(s.group_offsets, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(s.group(1)[0], 3.0);
  EXPECT_EQ(s.min_group_size(), 2u);
}

TEST(SpeedSample, ValidateRejectsBrokenPartitions) {
  hevt::SpeedSample s;
  s.values = {1.0, 2.0, 3.0};
  s.group_offsets = {0, 1};
  s.group_sizes = {1, 1};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.group_sizes = {1, 2};
  EXPECT_NO_THROW(s.validate());
  s.values[0] = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.values[0] = std::nan("");
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(SpeedSample, JsonRoundTrip) {
  auto s = hevt::SpeedSample::from_groups({{36.1, 35.2}, {37.0}});
  s.athlete_ids = {"x", "y"};
  const nlohmann::json j = s;
  EXPECT_EQ(j.get<hevt::SpeedSample>(), s);
  EXPECT_EQ(nlohmann::json::parse(hevt::sample_json_text(s)).get<hevt::SpeedSample>(), s);
}

TEST(SpeedSample, FileFormsRoundTrip) {
  auto s = hevt::SpeedSample::from_groups({{36.1, 35.2}, {37.000000000000007}, {34.5, 34.4, 34.3}});
  s.athlete_ids = {"a,1", "b", "c"};
  const auto dir = std::filesystem::temp_directory_path() / "hevt_sample_io";
  std::filesystem::create_directories(dir);
  hevt::write_sample_json(s, dir / "s.json");
  EXPECT_EQ(hevt::read_sample_json(dir / "s.json"), s);
  hevt::write_sample_csv_pair(s, dir / "v.csv", dir / "g.csv");
  EXPECT_EQ(hevt::read_sample_csv_pair(dir / "v.csv", dir / "g.csv"), s);
  std::filesystem::remove_all(dir);
}

}  // namespace
