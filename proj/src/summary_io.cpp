#include "bfl/summary_io.hpp"

#include <set>

#include <json.hpp>

#include "bfl/error.hpp"
#include "bfl/hashing.hpp"
#include "bfl/io.hpp"

namespace bfl {
namespace {

using nlohmann::json;

json hyper_to_json(const LcmHyper& h) {
  return json{{"K", h.K},
              {"alpha_sb", h.alpha_sb},
              {"theta_prior", {h.theta_prior.a, h.theta_prior.b}},
              {"pi_prior", h.pi_prior},
              {"sparse", h.sparse},
              {"spike_omega_prior", {h.spike_omega_prior.a, h.spike_omega_prior.b}},
              {"presence_min_count", h.presence_min_count}};
}

LcmHyper hyper_from_json(const json& j) {
  LcmHyper h;
  h.K = j.at("K").get<std::size_t>();
  h.alpha_sb = j.at("alpha_sb").get<double>();
  h.theta_prior = {j.at("theta_prior").at(0).get<double>(),
                   j.at("theta_prior").at(1).get<double>()};
  h.pi_prior = j.at("pi_prior").get<double>();
  h.sparse = j.at("sparse").get<bool>();
  h.spike_omega_prior = {j.at("spike_omega_prior").at(0).get<double>(),
                         j.at("spike_omega_prior").at(1).get<double>()};
  h.presence_min_count = j.at("presence_min_count").get<std::size_t>();
  return h;
}

json payload_to_json(const BaseModelSummary& s) {
  json nu = json::array();
  json theta = json::array();
  for (std::size_t c = 0; c < s.C; ++c) {
    if (!s.is_present(c)) {
      nu.push_back(nullptr);
      theta.push_back(nullptr);
      continue;
    }
    json nu_row = json::array();
    json theta_block = json::array();
    for (std::size_t k = 0; k < s.K; ++k) {
      nu_row.push_back(s.nu(c, k));
      json profile = json::array();
      for (std::size_t j = 0; j < s.p; ++j) profile.push_back(s.theta(c, k, j));
      theta_block.push_back(std::move(profile));
    }
    nu.push_back(std::move(nu_row));
    theta.push_back(std::move(theta_block));
  }
  json present = json::array();
  for (auto v : s.present) present.push_back(static_cast<int>(v));
  return json{{"format_version", kSummaryFormatVersion},
              {"domain_id", s.domain_id},
              {"C", s.C},
              {"K", s.K},
              {"p", s.p},
              {"cause_list_fingerprint", s.cause_list_fingerprint},
              {"dict_fingerprint", s.dict_fingerprint},
              {"present", present},
              {"n_by_cause", s.n_by_cause},
              {"nu_bar", nu},
              {"theta_bar", theta},
              {"hyper", hyper_to_json(s.hyper)},
              {"provenance",
               {{"tool_version", s.provenance.tool_version},
                {"seed", s.provenance.seed},
                {"iterations", s.provenance.iterations},
                {"burn_in", s.provenance.burn_in}}}};
}

BaseModelSummary payload_from_json(const json& j) {
  BaseModelSummary s;
  s.domain_id = j.at("domain_id").get<std::string>();
  s.C = j.at("C").get<std::size_t>();
  s.K = j.at("K").get<std::size_t>();
  s.p = j.at("p").get<std::size_t>();
  s.cause_list_fingerprint = j.at("cause_list_fingerprint").get<std::string>();
  s.dict_fingerprint = j.at("dict_fingerprint").get<std::string>();
  for (const auto& v : j.at("present")) s.present.push_back(v.get<int>() != 0 ? 1 : 0);
  s.n_by_cause = j.at("n_by_cause").get<std::vector<std::size_t>>();
  s.hyper = hyper_from_json(j.at("hyper"));
  const auto& prov = j.at("provenance");
  s.provenance = {prov.at("tool_version").get<std::string>(),
                  prov.at("seed").get<std::uint64_t>(),
                  prov.at("iterations").get<std::size_t>(),
                  prov.at("burn_in").get<std::size_t>()};

  const auto& nu = j.at("nu_bar");
  const auto& theta = j.at("theta_bar");
  if (nu.size() != s.C || theta.size() != s.C || s.present.size() != s.C) {
    fail(ErrorCode::InvalidSummary, "per-cause arrays do not have C rows");
  }
  s.nu_bar.assign(s.C * s.K, 0.0);
  s.theta_bar.assign(s.C * s.K * s.p, 0.0);
  for (std::size_t c = 0; c < s.C; ++c) {
    if (nu[c].is_null() || theta[c].is_null()) {
      if (s.present[c]) fail(ErrorCode::InvalidSummary, "present cause has null parameters");
      continue;
    }
    if (!s.present[c]) fail(ErrorCode::InvalidSummary, "absent cause has parameters");
    if (nu[c].size() != s.K || theta[c].size() != s.K) {
      fail(ErrorCode::InvalidSummary, "parameter block of cause " + std::to_string(c) +
                                          " does not have K rows");
    }
    for (std::size_t k = 0; k < s.K; ++k) {
      s.nu_bar[c * s.K + k] = nu[c][k].get<double>();
      if (theta[c][k].size() != s.p) {
        fail(ErrorCode::InvalidSummary, "theta profile does not have p entries");
      }
      for (std::size_t jj = 0; jj < s.p; ++jj) {
        s.theta_bar[(c * s.K + k) * s.p + jj] = theta[c][k][jj].get<double>();
      }
    }
  }
  return s;
}

}  // namespace

std::string serialize_summary(const BaseModelSummary& s) {
  s.validate(1e-10);
  json doc = payload_to_json(s);
  const std::string checksum = sha256_hex(doc.dump());
  doc["checksum"] = checksum;
  return doc.dump(1) + "\n";
}

BaseModelSummary parse_summary(const std::string& text, const CauseList& causes,
                               const SymptomDictionary& dict) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidSummary, std::string("not a summary document: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::InvalidSummary, "summary must be an object");

  BaseModelSummary s;
  try {
    const std::string version = doc.at("format_version").get<std::string>();
    if (version.rfind("1.", 0) != 0) {
      fail(ErrorCode::SchemaVersionUnsupported, "format_version " + version);
    }
    const std::string stored = doc.at("checksum").get<std::string>();
    json payload = doc;
    payload.erase("checksum");
    if (sha256_hex(payload.dump()) != stored) {
      fail(ErrorCode::ChecksumMismatch, "payload digest does not match stored checksum");
    }
    s = payload_from_json(payload);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidSummary, std::string("malformed summary field: ") + e.what());
  }

  if (s.cause_list_fingerprint != causes.fingerprint() || s.C != causes.size()) {
    fail(ErrorCode::FingerprintMismatch,
         "summary '" + s.domain_id + "' was built against a different cause list");
  }
  if (s.dict_fingerprint != dict.fingerprint() || s.p != dict.size()) {
    fail(ErrorCode::FingerprintMismatch,
         "summary '" + s.domain_id + "' was built against a different symptom dictionary");
  }
  s.validate(1e-6);
  return s;
}

void export_summary(const BaseModelSummary& s, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_summary(s));
}

BaseModelSummary import_summary(const std::filesystem::path& path, const CauseList& causes,
                                const SymptomDictionary& dict) {
  return parse_summary(read_file(path), causes, dict);
}

bool FederationRegistry::complete() const { return uncovered().empty(); }

std::vector<std::size_t> FederationRegistry::uncovered() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < coverage.size(); ++c) {
    if (coverage[c] == 0) out.push_back(c);
  }
  return out;
}

std::vector<std::string> FederationRegistry::domain_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : summaries) ids.push_back(s.domain_id);
  return ids;
}

FederationRegistry make_registry(std::vector<BaseModelSummary> summaries) {
  if (summaries.empty()) fail(ErrorCode::EmptyRegistry, "no summaries supplied");
  FederationRegistry reg;
  reg.cause_list_fingerprint = summaries.front().cause_list_fingerprint;
  reg.dict_fingerprint = summaries.front().dict_fingerprint;
  const std::size_t C = summaries.front().C;
  const std::size_t p = summaries.front().p;
  std::set<std::string> ids;
  reg.coverage.assign(C, 0);
  for (const auto& s : summaries) {
    if (s.cause_list_fingerprint != reg.cause_list_fingerprint || s.C != C) {
      fail(ErrorCode::FingerprintMismatch, "cause list differs for '" + s.domain_id + "'");
    }
    if (s.dict_fingerprint != reg.dict_fingerprint || s.p != p) {
      fail(ErrorCode::FingerprintMismatch, "symptom dictionary differs for '" + s.domain_id + "'");
    }
    if (!ids.insert(s.domain_id).second) fail(ErrorCode::DuplicateDomainId, s.domain_id);
    for (std::size_t c = 0; c < C; ++c) reg.coverage[c] += s.present[c] ? 1 : 0;
  }
  reg.summaries = std::move(summaries);
  return reg;
}

FederationRegistry build_registry(const std::vector<std::filesystem::path>& paths,
                                  const CauseList& causes, const SymptomDictionary& dict) {
  if (paths.empty()) fail(ErrorCode::EmptyRegistry, "no summary paths supplied");
  std::vector<BaseModelSummary> summaries;
  summaries.reserve(paths.size());
  for (const auto& path : paths) summaries.push_back(import_summary(path, causes, dict));
  return make_registry(std::move(summaries));
}

}  // namespace bfl
