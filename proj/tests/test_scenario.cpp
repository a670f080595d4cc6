#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "bfl/scenario.hpp"
#include "support/test_support.hpp"

namespace bfl {
namespace {

// n records per cause, symptom pattern irrelevant.
Dataset uniform_target(std::size_t C, std::size_t per_cause, const std::string& id = "tgt") {
  Dataset d;
  d.domain_id = id;
  d.causes = testing::make_causes(C);
  d.dict = testing::make_dict(2);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < per_cause; ++k) {
      d.records.push_back({id + "_" + std::to_string(c) + "_" + std::to_string(k),
                           testing::xs(k % 2 ? "YN" : "NY"), c});
    }
  }
  return d;
}

Dataset skewed_target(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d = uniform_target(4, 0);
  for (std::size_t i = 0; i < n; ++i) {
    d.records.push_back({"r" + std::to_string(i), testing::xs("YY"),
                         rng.categorical(std::vector<double>{0.5, 0.3, 0.15, 0.05})});
  }
  return d;
}

TEST(ScenarioKind, Names) {
  for (auto k : {ScenarioKind::RandomSample, ScenarioKind::MildShift, ScenarioKind::SevereShift}) {
    EXPECT_EQ(scenario_from_string(to_string(k)), k);
  }
  EXPECT_BFL_ERROR(scenario_from_string("other"), ErrorCode::InvalidConfig);
}

TEST(RandomSample, ExactSizesAndDisjoint) {
  const Dataset t = skewed_target(100, 1);
  const auto r = make_scenario(t, ScenarioKind::RandomSample, 5);
  EXPECT_EQ(r.scenario.labeled_ids.size(), 20u);
  EXPECT_EQ(r.scenario.unlabeled_ids.size(), 80u);
  std::set<std::string> all(r.scenario.labeled_ids.begin(), r.scenario.labeled_ids.end());
  all.insert(r.scenario.unlabeled_ids.begin(), r.scenario.unlabeled_ids.end());
  EXPECT_EQ(all.size(), 100u);
  EXPECT_EQ(r.masked.size(), 100u);
  EXPECT_EQ(r.masked.num_labeled(), 20u);
  EXPECT_EQ(r.truth.unlabeled_positions().size(), 80u);
  for (std::size_t i = 0; i < r.masked.size(); ++i) {
    if (r.masked.records[i].y) {
      EXPECT_EQ(*r.masked.records[i].y, r.truth.labels[i]);
    }
  }
  EXPECT_EQ(make_scenario(skewed_target(101, 1), ScenarioKind::RandomSample, 5).masked.num_labeled(), 21u);
  ScenarioParams half;
  half.label_fraction = 0.5;
  EXPECT_EQ(make_scenario(t, ScenarioKind::RandomSample, 5, half).masked.num_labeled(), 50u);
}

TEST(RandomSample, GroundTruthCsmfs) {
  const Dataset t = skewed_target(300, 2);
  const auto r = make_scenario(t, ScenarioKind::RandomSample, 3);
  std::vector<double> full(4, 0.0), unl(4, 0.0);
  std::size_t nu = 0;
  for (std::size_t i = 0; i < r.masked.size(); ++i) {
    full[r.truth.labels[i]] += 1.0 / 300.0;
    if (!r.truth.is_labeled[i]) {
      unl[r.truth.labels[i]] += 1.0;
      ++nu;
    }
  }
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(r.truth.full_csmf[c], full[c], 1e-12);
    EXPECT_NEAR(r.truth.unlabeled_csmf[c], unl[c] / static_cast<double>(nu), 1e-12);
  }
}

TEST(Scenario, DeterministicUnderSeed) {
  const Dataset t = skewed_target(200, 3);
  for (auto k : {ScenarioKind::RandomSample, ScenarioKind::MildShift, ScenarioKind::SevereShift}) {
    const auto a = make_scenario(t, k, 11);
    const auto b = make_scenario(t, k, 11);
    EXPECT_EQ(a.masked, b.masked);
    EXPECT_EQ(a.scenario.labeled_ids, b.scenario.labeled_ids);
    EXPECT_EQ(a.truth.labels, b.truth.labels);
    EXPECT_NE(make_scenario(t, k, 12).scenario.labeled_ids, a.scenario.labeled_ids);
  }
}

TEST(MildShift, CountsWithinRoundingOfDrawnPrevalences) {
  const Dataset t = skewed_target(1000, 4);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = make_scenario(t, ScenarioKind::MildShift, seed);
    ASSERT_EQ(r.scenario.labeled_ids.size(), 200u);
    ASSERT_EQ(r.scenario.unlabeled_ids.size(), 800u);
    EXPECT_EQ(r.masked.size(), 1000u);
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_LT(std::abs(r.truth.labeled_csmf[c] - r.scenario.realized_pi_tilde[c]), 1.0 / 200.0);
      EXPECT_LT(std::abs(r.truth.unlabeled_csmf[c] - r.scenario.realized_pi[c]), 1.0 / 800.0);
    }
    // every resampled record is a copy of a target record with the same cause
    std::map<std::string, std::size_t> source;
    for (const auto& rec : t.records) source[rec.death_id] = *rec.y;
    for (std::size_t i = 0; i < r.masked.size(); ++i) {
      const auto& id = r.masked.records[i].death_id;
      const auto base = id.substr(0, id.rfind('#'));
      ASSERT_TRUE(source.count(base)) << id;
      EXPECT_EQ(source[base], r.truth.labels[i]);
    }
  }
}

TEST(MildShift, EmptyCauseCannotBeResampled) {
  Dataset t = uniform_target(3, 10);
  t.records.erase(t.records.begin() + 10, t.records.begin() + 20);
  bool saw = false;
  for (std::uint64_t seed = 1; seed < 5 && !saw; ++seed) {
    saw = testing::error_of([&] { make_scenario(t, ScenarioKind::MildShift, seed); }) ==
          ErrorCode::EmptyCauseForResample;
  }
  EXPECT_TRUE(saw);
}

TEST(SevereShift, LabeledCountsFollowRealizedQ) {
  const Dataset t = uniform_target(5, 40);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto r = make_scenario(t, ScenarioKind::SevereShift, seed);
    ASSERT_EQ(r.scenario.realized_q.size(), 5u);
    std::vector<std::size_t> labeled(5, 0);
    for (std::size_t i = 0; i < r.masked.size(); ++i) labeled[r.truth.labels[i]] += r.truth.is_labeled[i];
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_EQ(labeled[c], static_cast<std::size_t>(std::llround(r.scenario.realized_q[c] * 40.0)));
    }
  }
}

TEST(SevereShift, QOfOneLabelsWholeCause) {
  const Dataset t = uniform_target(3, 30);
  ScenarioParams p;
  p.severe_beta_shape = 0.01;
  bool hit = false;
  for (std::uint64_t seed = 1; seed < 50 && !hit; ++seed) {
    const auto r = make_scenario(t, ScenarioKind::SevereShift, seed, p);
    for (std::size_t c = 0; c < 3; ++c) {
      if (std::llround(r.scenario.realized_q[c] * 30.0) != 30) continue;
      hit = true;
      for (std::size_t i = 0; i < r.masked.size(); ++i) {
        if (r.truth.labels[i] == c) {
          EXPECT_TRUE(r.truth.is_labeled[i]);
        }
      }
      EXPECT_DOUBLE_EQ(r.truth.unlabeled_csmf[c], 0.0);
    }
  }
  EXPECT_TRUE(hit);
}

TEST(SevereShift, LabeledShareAndUnlabeledPrevalenceAreNegativelyCorrelated) {
  const Dataset t = uniform_target(6, 50);
  double total = 0;
  int counted = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto r = make_scenario(t, ScenarioKind::SevereShift, seed);
    const auto& q = r.scenario.realized_q;
    const auto& u = r.truth.unlabeled_csmf;
    if (u.empty() || r.truth.unlabeled_positions().empty()) continue;
    double mq = 0, mu = 0;
    for (std::size_t c = 0; c < 6; ++c) {
      mq += q[c] / 6;
      mu += u[c] / 6;
    }
    double squ = 0, sqq = 0, suu = 0;
    for (std::size_t c = 0; c < 6; ++c) {
      squ += (q[c] - mq) * (u[c] - mu);
      sqq += (q[c] - mq) * (q[c] - mq);
      suu += (u[c] - mu) * (u[c] - mu);
    }
    if (sqq == 0 || suu == 0) continue;
    total += squ / std::sqrt(sqq * suu);
    ++counted;
  }
  ASSERT_GT(counted, 150);
  EXPECT_LT(total / counted, 0.0);
}

TEST(Scenario, Errors) {
  Dataset t = uniform_target(2, 5);
  t.records[3].y.reset();
  EXPECT_BFL_ERROR(make_scenario(t, ScenarioKind::RandomSample, 1), ErrorCode::NotFullyLabeled);
  EXPECT_BFL_ERROR(make_scenario(uniform_target(2, 0), ScenarioKind::RandomSample, 1), ErrorCode::EmptyDataset);
  ScenarioParams bad;
  bad.label_fraction = 1.0;
  EXPECT_BFL_ERROR(make_scenario(uniform_target(2, 5), ScenarioKind::RandomSample, 1, bad), ErrorCode::InvalidConfig);
}

TEST(LargestRemainder, SumsAndStaysWithinOne) {
  EXPECT_EQ(largest_remainder({0.5, 0.5}, 3), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(largest_remainder({0.2, 0.3, 0.5}, 10), (std::vector<std::size_t>{2, 3, 5}));
  Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t C = 2 + rng.uniform_index(10), total = rng.uniform_index(1000);
    const auto s = rng.dirichlet(std::vector<double>(C, 1.0));
    const auto out = largest_remainder(s, total);
    std::size_t sum = 0;
    for (std::size_t c = 0; c < C; ++c) {
      sum += out[c];
      EXPECT_LT(std::abs(static_cast<double>(out[c]) - s[c] * static_cast<double>(total)), 1.0);
    }
    EXPECT_EQ(sum, total);
  }
}

}  // namespace
}  // namespace bfl
