#include <gtest/gtest.h>

#include "bfl/data.hpp"
#include "bfl/error.hpp"
#include "bfl/hashing.hpp"
#include "bfl/io.hpp"
#include "support/test_support.hpp"

namespace bfl {
namespace {

using testing::make_causes;
using testing::make_dict;
using testing::xs;

TEST(IdList, RejectsDuplicatesAndEmpty) {
  EXPECT_BFL_ERROR(CauseList({"a", "a"}), ErrorCode::MalformedFile);
  EXPECT_BFL_ERROR(CauseList({"a", ""}), ErrorCode::MalformedFile);
  EXPECT_BFL_ERROR(CauseList({"only"}), ErrorCode::MalformedFile);
  EXPECT_BFL_ERROR(SymptomDictionary(std::vector<std::string>{}), ErrorCode::MalformedFile);
}

TEST(IdList, FingerprintIsDeterministicAndOrderSensitive) {
  const CauseList a({"x", "y", "z"});
  const CauseList b({"x", "y", "z"});
  const CauseList c({"y", "x", "z"});
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  EXPECT_EQ(a.fingerprint(), sha256_hex("x\ny\nz\n"));
  EXPECT_EQ(*a.index_of("z"), 2u);
  EXPECT_FALSE(a.index_of("w").has_value());
}

TEST(IdList, FileLoadSkipsBlankLines) {
  testing::TempDir dir;
  write_file_atomic(dir / "c.txt", "a\n\nb\r\nc\n");
  const CauseList c = load_cause_list(dir / "c.txt");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[1], "b");
  write_id_list(c, dir / "out.txt");
  EXPECT_EQ(load_cause_list(dir / "out.txt"), c);
}

TEST(LoadDataset, ParsesThreeStates) {
  const auto causes = make_causes(2);
  const auto dict = make_dict(3);
  const std::string csv =
      "death_id,cause,s0,s1,s2\n"
      "a,cause0,Y,N,.\n"
      "b,cause1, N , Y ,Y\n"
      "c,,.,.,N\n";
  const Dataset d = parse_dataset(csv, causes, dict, "dom");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.records[0].x, xs("YN."));
  EXPECT_EQ(d.records[1].x, xs("NYY"));
  EXPECT_EQ(d.records[0].y, 0u);
  EXPECT_EQ(d.records[1].y, 1u);
  EXPECT_FALSE(d.records[2].y.has_value());
  EXPECT_EQ(d.num_labeled(), 2u);
}

TEST(LoadDataset, AllUnlabeledTarget) {
  const auto causes = make_causes(2);
  const auto dict = make_dict(1);
  const Dataset d = parse_dataset("death_id,cause,s0\na,,Y\nb,,N\n", causes, dict, "t");
  EXPECT_EQ(d.num_labeled(), 0u);
  EXPECT_FALSE(d.fully_labeled());
}

TEST(LoadDataset, Errors) {
  const auto causes = make_causes(2);
  const auto dict = make_dict(2);
  const auto parse = [&](const std::string& csv) { parse_dataset(csv, causes, dict, "d"); };
  EXPECT_BFL_ERROR(parse("death_id,cause,s0,s1\na,causeX,Y,N\n"), ErrorCode::UnknownCause);
  EXPECT_BFL_ERROR(parse("death_id,cause,s1,s0\na,cause0,Y,N\n"), ErrorCode::UnknownSymptomColumn);
  EXPECT_BFL_ERROR(parse("death_id,cause,s0\na,cause0,Y\n"), ErrorCode::UnknownSymptomColumn);
  EXPECT_BFL_ERROR(parse("death_id,cause,s0,s1\na,cause0,Y,N\na,cause1,N,N\n"), ErrorCode::DuplicateDeathId);
  EXPECT_BFL_ERROR(parse("death_id,cause,s0,s1\na,cause0,Y,1\n"), ErrorCode::MalformedCell);
  EXPECT_BFL_ERROR(parse("death_id,cause,s0,s1\na,cause0,Y\n"), ErrorCode::MalformedFile);
}

TEST(LoadDataset, DomainIdDefaultsToFileStem) {
  testing::TempDir dir;
  const auto causes = make_causes(2);
  const auto dict = make_dict(1);
  write_file_atomic(dir / "site_x.csv", "death_id,cause,s0\na,cause0,Y\n");
  EXPECT_EQ(load_dataset(dir / "site_x.csv", causes, dict).domain_id, "site_x");
  EXPECT_EQ(load_dataset(dir / "site_x.csv", causes, dict, "other").domain_id, "other");
}

TEST(Dataset, CsvRoundTripIsExact) {
  Rng rng(11);
  const auto causes = make_causes(3);
  const auto dict = make_dict(6);
  for (int rep = 0; rep < 20; ++rep) {
    Dataset d;
    d.domain_id = "rt";
    d.causes = causes;
    d.dict = dict;
    const std::size_t n = 1 + rng.uniform_index(30);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<SymptomValue> x(6);
      for (auto& v : x) v = static_cast<SymptomValue>(rng.uniform_index(3));
      std::optional<std::size_t> y;
      if (rng.bernoulli(0.7)) y = rng.uniform_index(3);
      d.records.push_back({"id" + std::to_string(n - i), x, y});
    }
    testing::TempDir dir;
    write_dataset(d, dir / "rt.csv");
    EXPECT_EQ(load_dataset(dir / "rt.csv", causes, dict), d);
  }
}

TEST(PartitionByLabel, SplitsAndPreservesOrder) {
  const auto causes = make_causes(2);
  const auto dict = make_dict(1);
  std::vector<std::pair<std::string, std::optional<std::size_t>>> rows;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({"Y", (i % 5 == 1 || i % 5 == 3) ? std::optional<std::size_t>(i % 2) : std::nullopt});
  }
  const Dataset d = testing::make_dataset("p", causes, dict, rows);
  const auto [lab, unl] = partition_by_label(d);
  EXPECT_EQ(lab.size(), 4u);
  EXPECT_EQ(unl.size(), 6u);
  std::vector<std::string> merged;
  for (const auto& r : lab.records) merged.push_back(r.death_id);
  for (const auto& r : unl.records) merged.push_back(r.death_id);
  std::sort(merged.begin(), merged.end());
  std::vector<std::string> all;
  for (const auto& r : d.records) all.push_back(r.death_id);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(merged, all);
  EXPECT_EQ(lab.records[0].death_id, "p_1");
  EXPECT_EQ(lab.records[1].death_id, "p_3");

  const auto [all_lab, none] = partition_by_label(testing::make_dataset(
      "q", causes, dict, {{"Y", 0}, {"N", 1}}));
  EXPECT_EQ(all_lab.size(), 2u);
  EXPECT_EQ(none.size(), 0u);
  const auto [no_lab, every] = partition_by_label(strip_labels(all_lab));
  EXPECT_EQ(no_lab.size(), 0u);
  EXPECT_EQ(every.size(), 2u);
}

TEST(CauseCounts, Examples) {
  const auto causes = make_causes(3);
  const auto dict = make_dict(1);
  EXPECT_EQ(cause_counts(testing::make_dataset("a", causes, dict, {{"Y", 0}, {"Y", 0}, {"Y", 1}})),
            (std::vector<std::size_t>{2, 1, 0}));
  EXPECT_EQ(cause_counts(testing::make_dataset("b", causes, dict, {{"Y", std::nullopt}})),
            (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(cause_counts(testing::make_dataset("c", causes, dict, {{"Y", 2}, {"Y", 2}, {"Y", 2}, {"N", 2}})),
            (std::vector<std::size_t>{0, 0, 4}));
}

TEST(Subset, KeepsRequestedOrder) {
  const auto causes = make_causes(2);
  const auto dict = make_dict(1);
  const Dataset d = testing::make_dataset("s", causes, dict, {{"Y", 0}, {"N", 1}, {".", 0}});
  const Dataset s = subset(d, {2, 0});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.records[0].death_id, "s_2");
  EXPECT_EQ(s.records[1].death_id, "s_0");
}

}  // namespace
}  // namespace bfl
