#include "bfl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bfl/error.hpp"
#include "bfl/metrics.hpp"
#include "bfl/random.hpp"

namespace bfl {
namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  // Fisher-Yates with our own index draw so the order is library independent.
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

void fill_truth(ScenarioRealization& out, std::vector<std::size_t> labels,
                std::vector<std::uint8_t> is_labeled, std::size_t C) {
  std::vector<std::size_t> lab, unl;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (is_labeled[i] ? lab : unl).push_back(labels[i]);
    (is_labeled[i] ? out.scenario.labeled_ids : out.scenario.unlabeled_ids)
        .push_back(out.masked.records[i].death_id);
  }
  out.truth.full_csmf = empirical_csmf(labels, C);
  out.truth.labeled_csmf = empirical_csmf(lab, C);
  out.truth.unlabeled_csmf = empirical_csmf(unl, C);
  out.truth.labels = std::move(labels);
  out.truth.is_labeled = std::move(is_labeled);
}

}  // namespace

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::RandomSample: return "random_sample";
    case ScenarioKind::MildShift: return "mild_shift";
    case ScenarioKind::SevereShift: return "severe_shift";
  }
  return "?";
}

ScenarioKind scenario_from_string(const std::string& s) {
  if (s == "random_sample") return ScenarioKind::RandomSample;
  if (s == "mild_shift") return ScenarioKind::MildShift;
  if (s == "severe_shift") return ScenarioKind::SevereShift;
  fail(ErrorCode::InvalidConfig, "unknown scenario '" + s + "'");
}

std::vector<std::size_t> GroundTruth::unlabeled_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < is_labeled.size(); ++i) {
    if (!is_labeled[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> largest_remainder(const std::vector<double>& shares, std::size_t total) {
  std::vector<std::size_t> out(shares.size());
  std::vector<double> rem(shares.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < shares.size(); ++c) {
    const double exact = shares[c] * static_cast<double>(total);
    out[c] = static_cast<std::size_t>(std::floor(exact));
    rem[c] = exact - static_cast<double>(out[c]);
    assigned += out[c];
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
    ++out[order[k]];
    ++assigned;
  }
  return out;
}

ScenarioRealization make_scenario(const Dataset& target, ScenarioKind kind, std::uint64_t seed,
                                  const ScenarioParams& params) {
  if (!target.fully_labeled()) {
    fail(ErrorCode::NotFullyLabeled, "scenario target '" + target.domain_id + "' has unlabeled deaths");
  }
  if (target.size() == 0) fail(ErrorCode::EmptyDataset, "scenario target is empty");
  if (!(params.label_fraction > 0.0 && params.label_fraction < 1.0)) {
    fail(ErrorCode::InvalidConfig, "label_fraction must lie in (0,1)");
  }
  const std::size_t C = target.num_causes();
  const std::size_t n0 = target.size();
  Rng rng(seed);

  ScenarioRealization out;
  out.scenario.kind = kind;
  out.scenario.label_fraction = params.label_fraction;
  out.scenario.seed = seed;

  std::vector<std::size_t> labels(n0);
  for (std::size_t i = 0; i < n0; ++i) labels[i] = *target.records[i].y;
  std::vector<std::uint8_t> is_labeled(n0, 0);

  switch (kind) {
    case ScenarioKind::RandomSample: {
      const auto want = static_cast<std::size_t>(
          std::ceil(params.label_fraction * static_cast<double>(n0) - 1e-9));
      std::vector<std::size_t> order(n0);
      std::iota(order.begin(), order.end(), 0);
      shuffle(order, rng);
      for (std::size_t k = 0; k < want; ++k) is_labeled[order[k]] = 1;
      out.masked = target;
      break;
    }
    case ScenarioKind::SevereShift: {
      std::vector<std::vector<std::size_t>> by_cause(C);
      for (std::size_t i = 0; i < n0; ++i) by_cause[labels[i]].push_back(i);
      out.scenario.realized_q.resize(C);
      for (std::size_t c = 0; c < C; ++c) {
        const double q = rng.beta(params.severe_beta_shape, params.severe_beta_shape);
        out.scenario.realized_q[c] = q;
        auto& pool = by_cause[c];
        const auto want = static_cast<std::size_t>(std::llround(q * static_cast<double>(pool.size())));
        shuffle(pool, rng);
        for (std::size_t k = 0; k < want; ++k) is_labeled[pool[k]] = 1;
      }
      out.masked = target;
      break;
    }
    case ScenarioKind::MildShift: {
      const std::vector<double> ones(C, 1.0);
      out.scenario.realized_pi_tilde = rng.dirichlet(ones);
      out.scenario.realized_pi = rng.dirichlet(ones);
      const double share = params.mild_labeled_share;
      const auto n_lab = static_cast<std::size_t>(std::llround(share * static_cast<double>(n0)));
      const auto n_unl =
          static_cast<std::size_t>(std::llround((1.0 - share) * static_cast<double>(n0)));
      const auto lab_counts = largest_remainder(out.scenario.realized_pi_tilde, n_lab);
      const auto unl_counts = largest_remainder(out.scenario.realized_pi, n_unl);

      std::vector<std::vector<std::size_t>> by_cause(C);
      for (std::size_t i = 0; i < n0; ++i) by_cause[labels[i]].push_back(i);
      for (std::size_t c = 0; c < C; ++c) {
        if ((lab_counts[c] > 0 || unl_counts[c] > 0) && by_cause[c].empty()) {
          fail(ErrorCode::EmptyCauseForResample,
               "cause '" + target.causes[c] + "' has no exemplar to resample");
        }
      }
      out.masked.domain_id = target.domain_id;
      out.masked.causes = target.causes;
      out.masked.dict = target.dict;
      labels.clear();
      is_labeled.clear();
      const auto draw_part = [&](const std::vector<std::size_t>& counts, bool lab) {
        std::size_t serial = 0;
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t k = 0; k < counts[c]; ++k) {
            const std::size_t src = by_cause[c][rng.uniform_index(by_cause[c].size())];
            Record r = target.records[src];
            r.death_id += (lab ? "#L" : "#U") + std::to_string(serial++);
            out.masked.records.push_back(std::move(r));
            labels.push_back(c);
            is_labeled.push_back(lab ? 1 : 0);
          }
        }
      };
      draw_part(lab_counts, true);
      draw_part(unl_counts, false);
      break;
    }
  }
  for (std::size_t i = 0; i < out.masked.records.size(); ++i) {
    if (!is_labeled[i]) out.masked.records[i].y.reset();
  }
  fill_truth(out, std::move(labels), std::move(is_labeled), C);
  return out;
}

}  // namespace bfl
