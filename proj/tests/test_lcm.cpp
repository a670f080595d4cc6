#include <gtest/gtest.h>

#include <cmath>

#include "bfl/lcm.hpp"
#include "support/test_support.hpp"

namespace bfl {
namespace {

using testing::make_causes;
using testing::make_dataset;
using testing::make_dict;
using testing::xs;

GibbsConfig quick(std::uint64_t seed = 3, std::size_t iterations = 2000) {
  GibbsConfig g;
  g.iterations = iterations;
  g.burn_in = iterations / 2;
  g.seed = seed;
  return g;
}

LcmHyper k_one() {
  LcmHyper h;
  h.K = 1;
  return h;
}

TEST(TrainLcm, ConjugateExample) {
  const auto causes = make_causes(2);
  const auto dict = make_dict(1);
  const Dataset d = make_dataset("d", causes, dict,
                                 {{"Y", 0}, {"Y", 0}, {"Y", 0}, {"N", 0}, {"N", 1}, {"N", 1}, {"N", 1}, {"N", 1}});
  const auto s = train_lcm(d, k_one(), quick());
  EXPECT_NEAR(s.theta(0, 0, 0), 4.0 / 6.0, 0.05);
  EXPECT_NEAR(s.theta(1, 0, 0), 1.0 / 6.0, 0.05);
  EXPECT_DOUBLE_EQ(s.nu(0, 0), 1.0);
}

// With K = 1 every kept theta draw is an exact Beta posterior draw, so the
// exported mean has standard error sd / sqrt(draws).
TEST(TrainLcm, ConjugateOracleWithinThreeStandardErrors) {
  Rng rng(101);
  for (int inst = 0; inst < 5; ++inst) {
    const std::size_t C = 2 + rng.uniform_index(2), p = 1 + rng.uniform_index(4);
    const auto causes = make_causes(C);
    const auto dict = make_dict(p);
    Dataset d;
    d.domain_id = "o";
    d.causes = causes;
    d.dict = dict;
    const std::size_t n = 5 + rng.uniform_index(40);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<SymptomValue> x(p);
      for (auto& v : x) v = rng.bernoulli(0.4) ? SymptomValue::Yes : SymptomValue::No;
      d.records.push_back({"r" + std::to_string(i), x, i < C ? i : rng.uniform_index(C)});
    }
    LcmHyper h = k_one();
    h.theta_prior = {0.5 + rng.uniform() * 2.0, 0.5 + rng.uniform() * 2.0};
    const GibbsConfig g = quick(500 + inst, 3000);
    const auto s = train_lcm(d, h, g);
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t j = 0; j < p; ++j) {
        double yes = 0, tot = 0;
        for (const auto& r : d.records) {
          if (*r.y != c) continue;
          tot += 1;
          yes += r.x[j] == SymptomValue::Yes ? 1 : 0;
        }
        const double a = h.theta_prior.a + yes, b = h.theta_prior.b + tot - yes;
        const double mean = a / (a + b);
        const double sd = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1)));
        const double se = sd / std::sqrt(static_cast<double>(g.kept_draws()));
        EXPECT_NEAR(s.theta(c, 0, j), mean, 3 * se) << "instance " << inst;
      }
    }
  }
}

TEST(TrainLcm, AbsentCauseIsFlagged) {
  const auto causes = make_causes(3);
  const auto dict = make_dict(2);
  const auto s = train_lcm(make_dataset("d", causes, dict, {{"YN", 0}, {"NN", 1}}), LcmHyper{}, quick());
  EXPECT_EQ(s.present, (std::vector<std::uint8_t>{1, 1, 0}));
  EXPECT_EQ(s.n_by_cause[2], 0u);
  EXPECT_BFL_ERROR(cond_loglik(s, xs("YN"), 2), ErrorCode::AbsentCause);
}

TEST(TrainLcm, MissingCellLeavesPrior) {
  const auto causes = make_causes(2);
  const auto dict = make_dict(1);
  const auto s = train_lcm(make_dataset("d", causes, dict, {{".", 0}}), k_one(), quick(5, 4000));
  EXPECT_NEAR(s.theta(0, 0, 0), 0.5, 0.02);
}

TEST(TrainLcm, PresenceThreshold) {
  const auto causes = make_causes(2);
  const auto dict = make_dict(1);
  LcmHyper h;
  h.presence_min_count = 2;
  const auto s = train_lcm(make_dataset("d", causes, dict, {{"Y", 0}, {"Y", 0}, {"N", 1}}), h, quick());
  EXPECT_EQ(s.present, (std::vector<std::uint8_t>{1, 0}));
}

TEST(TrainLcm, Errors) {
  const auto causes = make_causes(2);
  const auto dict = make_dict(1);
  const Dataset unlabeled = make_dataset("u", causes, dict, {{"Y", std::nullopt}});
  EXPECT_BFL_ERROR(train_lcm(unlabeled, LcmHyper{}, quick()), ErrorCode::EmptyDataset);
  LcmHyper bad;
  bad.K = 0;
  const Dataset d = make_dataset("d", causes, dict, {{"Y", 0}});
  EXPECT_BFL_ERROR(train_lcm(d, bad, quick()), ErrorCode::InvalidHyper);
  bad = LcmHyper{};
  bad.alpha_sb = 0;
  EXPECT_BFL_ERROR(train_lcm(d, bad, quick()), ErrorCode::InvalidHyper);
  GibbsConfig g = quick();
  g.burn_in = g.iterations;
  EXPECT_BFL_ERROR(train_lcm(d, LcmHyper{}, g), ErrorCode::InvalidHyper);
}

TEST(TrainLcm, DeterministicAndOrderInvariant) {
  Rng rng(7);
  const auto causes = make_causes(3);
  const auto dict = make_dict(5);
  const auto truth = testing::random_summary(rng, "t", causes, dict, 2);
  Dataset d = testing::sample_dataset(rng, truth, causes, dict, {0.5, 0.3, 0.2}, 80, "d");
  const auto a = train_lcm(d, LcmHyper{}, quick(9, 400));
  const auto b = train_lcm(d, LcmHyper{}, quick(9, 400));
  EXPECT_EQ(a, b);
  std::reverse(d.records.begin(), d.records.end());
  std::swap(d.records[3], d.records[40]);
  EXPECT_EQ(train_lcm(d, LcmHyper{}, quick(9, 400)), a);
  EXPECT_NE(train_lcm(d, LcmHyper{}, quick(10, 400)), a);
}

TEST(TrainLcm, MonotoneInAllYesCopies) {
  const auto causes = make_causes(2);
  const auto dict = make_dict(3);
  std::vector<std::pair<std::string, std::optional<std::size_t>>> base{
      {"YNN", 0}, {"NNY", 0}, {"NYN", 0}, {"NNN", 0}, {"YYN", 1}, {"NNN", 1}};
  std::vector<double> prev(3, 0.0);
  for (std::size_t r : {0u, 10u, 100u}) {
    auto rows = base;
    for (std::size_t k = 0; k < r; ++k) rows.push_back({"YYY", 0});
    const auto s = train_lcm(make_dataset("m", causes, dict, rows), k_one(), quick(21, 2000));
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_GE(s.theta(0, 0, j), prev[j]) << "r=" << r << " j=" << j;
      prev[j] = s.theta(0, 0, j);
    }
  }
}

TEST(TrainLcm, ExportedParametersAreValidAndNormalized) {
  Rng rng(17);
  for (int inst = 0; inst < 6; ++inst) {
    const std::size_t C = 2 + rng.uniform_index(3), p = 1 + rng.uniform_index(6);
    const auto causes = make_causes(C);
    const auto dict = make_dict(p);
    const auto truth = testing::random_summary(rng, "t", causes, dict, 2);
    std::vector<double> pi(C, 1.0 / static_cast<double>(C));
    Dataset d = testing::sample_dataset(rng, truth, causes, dict, pi, 40, "d");
    for (auto& r : d.records) {
      if (rng.bernoulli(0.1)) r.x[0] = SymptomValue::Missing;
    }
    LcmHyper h;
    h.K = 1 + rng.uniform_index(4);
    h.sparse = inst % 2 == 1;
    const auto s = train_lcm(d, h, quick(inst, 300));
    EXPECT_NO_THROW(s.validate(1e-10));
    for (std::size_t c = 0; c < C; ++c) {
      if (!s.is_present(c)) continue;
      EXPECT_NEAR(enumerate_mass(s, c), 1.0, 1e-8);
    }
  }
}

TEST(CondLoglik, Examples) {
  const auto causes = make_causes(2);
  const auto dict1 = make_dict(1);
  const auto s1 = testing::make_summary("a", causes, dict1, 1, {1.0, 1.0}, {0.7, 0.3});
  EXPECT_NEAR(cond_loglik(s1, xs("Y"), 0), std::log(0.7), 1e-15);
  EXPECT_NEAR(cond_loglik(s1, xs("N"), 0), std::log(0.3), 1e-15);
  EXPECT_DOUBLE_EQ(cond_loglik(s1, xs("."), 0), 0.0);
  EXPECT_NEAR(enumerate_mass(s1, 0), 1.0, 1e-15);

  const auto s2 = testing::make_summary("b", causes, dict1, 2, {0.5, 0.5, 0.5, 0.5}, {0.2, 0.8, 0.5, 0.5});
  EXPECT_NEAR(cond_loglik(s2, xs("Y"), 0), std::log(0.5), 1e-15);
  EXPECT_BFL_ERROR(cond_loglik(s2, xs("YY"), 0), ErrorCode::DimensionMismatch);
  EXPECT_BFL_ERROR(cond_loglik(s2, xs("Y"), 2), ErrorCode::DimensionMismatch);

  Rng rng(3);
  const auto s3 = testing::random_summary(rng, "c", causes, make_dict(4), 3);
  EXPECT_DOUBLE_EQ(cond_loglik(s3, xs("...."), 1), 0.0);
  EXPECT_NEAR(enumerate_mass(s3, 1), 1.0, 1e-12);
}

TEST(CondLoglik, MissingEntriesMarginalize) {
  Rng rng(4);
  const auto causes = make_causes(2);
  const auto s = testing::random_summary(rng, "m", causes, make_dict(3), 3);
  const double sum = std::exp(cond_loglik(s, xs("Y.N"), 0));
  const double yes = std::exp(cond_loglik(s, xs("YYN"), 0));
  const double no = std::exp(cond_loglik(s, xs("YNN"), 0));
  EXPECT_NEAR(sum, yes + no, 1e-14);
}

TEST(EnumerateMass, GuardsLargeDictionaries) {
  Rng rng(5);
  const auto s = testing::random_summary(rng, "big", make_causes(2), make_dict(21), 1);
  EXPECT_BFL_ERROR(enumerate_mass(s, 0), ErrorCode::TooManySymptoms);
}

}  // namespace
}  // namespace bfl
