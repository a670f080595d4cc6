// bfl: command-line driver. Every subcommand loads one JSON config, applies
// flag overrides, validates, computes all outputs in memory and then commits
// them to --out in one step together with a manifest.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bfl/calibration.hpp"
#include "bfl/config.hpp"
#include "bfl/ensemble.hpp"
#include "bfl/error.hpp"
#include "bfl/io.hpp"
#include "bfl/lodo.hpp"
#include "bfl/report.hpp"
#include "bfl/simulate.hpp"
#include "bfl/summary_io.hpp"
#include "bfl/version.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out = "out";
  std::vector<std::string> overrides;
};

struct CommandOptions {
  std::string domain;
  std::string summary;
  std::string variant;
  std::string posterior;
  std::string input;
  std::optional<double> beta_rate;
};

bfl::RunConfig make_config(const GlobalOptions& g) {
  std::optional<fs::path> path;
  if (!g.config.empty()) {
    path = g.config;
    if (!fs::exists(*path)) bfl::fail(bfl::ErrorCode::InvalidConfig, "config file not found: " + g.config);
  }
  bfl::RunConfig cfg = bfl::load_run_config(path);
  for (const auto& o : g.overrides) cfg.set(o);
  if (g.seed) {
    cfg.set("seed=" + std::to_string(*g.seed));
    cfg.set("seeds=[" + std::to_string(*g.seed) + "]");
  }
  if (g.workers) cfg.set("workers=" + std::to_string(*g.workers));
  return cfg;
}

std::string ids_text(const bfl::IdList& ids) {
  std::string out;
  for (const auto& id : ids.ids()) out += id + "\n";
  return out;
}

// Stages the manifest last so it can list every other file.
void finish(bfl::OutputTransaction& tx, const std::string& command, const bfl::RunConfig& cfg,
            json arguments) {
  json files = json::object();
  for (const auto& [name, sum] : tx.checksums()) files[name] = sum;
  json manifest{{"command", command},
                {"tool_version", bfl::kToolVersion},
                {"arguments", std::move(arguments)},
                {"config", cfg.echo()},
                {"files", files}};
  tx.stage("manifest.json", manifest.dump(1) + "\n");
  tx.commit();
  for (const auto& [name, sum] : tx.checksums()) {
    std::cout << "wrote " << (tx.out_dir() / name).string() << "\n";
  }
}

void cmd_train(const GlobalOptions& g, const CommandOptions& o) {
  bfl::RunConfig cfg = make_config(g);
  cfg.validate();
  const auto hyper = cfg.base_hyper();
  const auto gibbs = cfg.base_gibbs();
  const auto datasets = cfg.datasets();
  std::vector<bfl::BaseModelSummary> trained;
  bool matched = false;
  for (const auto& d : datasets) {
    if (!o.domain.empty() && d.domain_id != o.domain) continue;
    matched = true;
    trained.push_back(bfl::train_lcm(d, hyper, gibbs));
  }
  if (!matched) bfl::fail(bfl::ErrorCode::InvalidConfig, "no dataset with domain id '" + o.domain + "'");
  bfl::OutputTransaction tx(g.out);
  for (const auto& s : trained) tx.stage(s.domain_id + ".summary.json", bfl::serialize_summary(s));
  finish(tx, "train", cfg, {{"domain", o.domain}});
}

void cmd_export(const GlobalOptions& g, const CommandOptions& o) {
  bfl::RunConfig cfg = make_config(g);
  cfg.validate();
  if (o.summary.empty()) bfl::fail(bfl::ErrorCode::InvalidConfig, "--summary is required");
  const auto s = bfl::import_summary(o.summary, cfg.causes(), cfg.dict());
  bfl::OutputTransaction tx(g.out);
  tx.stage(s.domain_id + ".summary.json", bfl::serialize_summary(s));
  finish(tx, "export", cfg, {{"summary", fs::path(o.summary).filename().string()}});
}

void cmd_ensemble(const GlobalOptions& g, const CommandOptions& o) {
  bfl::RunConfig cfg = make_config(g);
  if (!o.variant.empty()) cfg.set("ensemble.variant=\"" + o.variant + "\"");
  cfg.validate();
  bfl::VariantConfig vc;
  vc.ensemble = cfg.ensemble();
  vc.local_hyper = cfg.base_hyper();
  vc.local_gibbs = cfg.base_gibbs();
  vc.estimand = cfg.estimand();
  const auto causes = cfg.causes();
  const auto dict = cfg.dict();
  const auto target = cfg.target();
  const auto reg = bfl::build_registry(cfg.summary_paths(), causes, dict);
  const bfl::VariantResult r = bfl::run_variant(reg, target, vc);
  for (const auto& w : r.posterior.warnings) std::cerr << "warning: " << w << "\n";

  bfl::OutputTransaction tx(g.out);
  tx.stage("pi.csv", bfl::pi_table_csv(causes, r));
  tx.stage("lambda.csv", bfl::lambda_csv(causes, r.posterior));
  tx.stage("deaths.csv", bfl::deaths_csv(causes, r.classification));
  tx.stage("posterior.json", bfl::serialize_posterior(r.posterior));
  tx.stage("diagnostics.json", bfl::diagnostics_json(r.posterior).dump(1) + "\n");
  if (r.local_model) tx.stage("local_model.summary.json", bfl::serialize_summary(*r.local_model));
  finish(tx, "ensemble", cfg, {{"variant", bfl::to_string(vc.ensemble.variant)}});
}

void cmd_classify(const GlobalOptions& g, const CommandOptions& o) {
  bfl::RunConfig cfg = make_config(g);
  cfg.validate();
  if (o.posterior.empty()) bfl::fail(bfl::ErrorCode::InvalidConfig, "--posterior is required");
  const auto causes = cfg.causes();
  const auto dict = cfg.dict();
  const auto post = bfl::parse_posterior(bfl::read_file(o.posterior));
  auto paths = cfg.summary_paths();
  const fs::path local = fs::path(o.posterior).parent_path() / "local_model.summary.json";
  if (post.M == paths.size() + 1 && fs::exists(local)) paths.push_back(local);
  const auto reg = bfl::build_registry(paths, causes, dict);
  if (reg.domain_ids() != post.model_ids) {
    bfl::fail(bfl::ErrorCode::DimensionMismatch, "posterior models differ from the configured summaries");
  }
  const auto target = bfl::strip_labels(cfg.target());
  const auto phi = bfl::build_phi(reg, target, !cfg.ensemble().allow_uncovered_causes);
  const auto cls = bfl::classify(phi, post);
  bfl::OutputTransaction tx(g.out);
  tx.stage("deaths.csv", bfl::deaths_csv(causes, cls));
  finish(tx, "classify", cfg, {{"posterior", fs::path(o.posterior).filename().string()}});
}

void cmd_calibrate(const GlobalOptions& g, const CommandOptions& o) {
  bfl::RunConfig cfg = make_config(g);
  if (o.beta_rate) cfg.set("calibration.beta_rate=" + std::to_string(*o.beta_rate));
  cfg.validate();
  const auto causes = cfg.causes();
  const auto dict = cfg.dict();
  const auto target = cfg.target();
  const auto reg = bfl::build_registry(cfg.summary_paths(), causes, dict);
  const auto pred = bfl::build_predictions(reg, target, cfg.ensemble());
  bfl::LabelVector labels;
  for (const auto& r : target.records) labels.push_back(r.y);
  const auto post = bfl::fit_calibration(pred, labels, cfg.calibration());
  bfl::OutputTransaction tx(g.out);
  tx.stage("calibration.json", bfl::calibration_report(causes, post).dump(1) + "\n");
  tx.stage("pi.csv", bfl::calibration_pi_csv(causes, post));
  finish(tx, "calibrate", cfg, json::object());
}

void cmd_simulate(const GlobalOptions& g, const CommandOptions&) {
  bfl::RunConfig cfg = make_config(g);
  cfg.validate();
  const auto spec = cfg.generator();
  const auto sim = bfl::simulate(spec);
  bfl::OutputTransaction tx(g.out);
  tx.stage("causes.txt", ids_text(sim.causes));
  tx.stage("symptoms.txt", ids_text(sim.dict));
  for (const auto& d : sim.domains) tx.stage(d.domain_id + ".csv", bfl::dataset_to_csv(d));
  if (sim.target) tx.stage(sim.target->domain_id + ".csv", bfl::dataset_to_csv(*sim.target));
  json ledger = sim.ledger();
  ledger["generator"] = bfl::to_json(spec);
  tx.stage("ledger.json", ledger.dump(1) + "\n");
  finish(tx, "simulate", cfg, json::object());
}

void cmd_lodo(const GlobalOptions& g, const CommandOptions&) {
  bfl::RunConfig cfg = make_config(g);
  cfg.validate();
  const auto lcfg = cfg.lodo();
  const auto domains = cfg.datasets();
  const auto report = bfl::run_lodo(domains, lcfg);
  for (const auto& i : report.issues) {
    std::cerr << "warning: fold " << i.target_domain << " seed " << i.seed
              << (i.method ? " method " + bfl::to_string(*i.method) : std::string(" skipped"))
              << ": " << i.reason << "\n";
  }
  bfl::OutputTransaction tx(g.out);
  tx.stage("report.csv", report.to_csv());
  tx.stage("summary.json", report.summary().dump(1) + "\n");
  finish(tx, "lodo", cfg, json::object());
}

void cmd_report(const GlobalOptions& g, const CommandOptions& o) {
  bfl::RunConfig cfg = make_config(g);
  cfg.validate();
  if (o.input.empty()) bfl::fail(bfl::ErrorCode::InvalidConfig, "--input is required");
  const auto report = bfl::parse_report_csv(bfl::read_file(o.input));
  bfl::OutputTransaction tx(g.out);
  tx.stage("summary.json", report.summary().dump(1) + "\n");
  finish(tx, "report", cfg, {{"input", fs::path(o.input).filename().string()}});
}

int exit_code(bfl::ErrorCode code) {
  switch (code) {
    case bfl::ErrorCode::InvalidConfig:
    case bfl::ErrorCode::InvalidHyper:
    case bfl::ErrorCode::InvalidGenerator:
      return 1;
    default:
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian federated cause-of-death assignment"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  CommandOptions o;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--seed", g.seed, "Base random seed");
  app.add_option("--workers", g.workers, "Worker threads (default: hardware)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.overrides, "Override a config leaf, e.g. ensemble.chains=2");
  app.set_version_flag("--version", bfl::kToolVersion);

  auto* train = app.add_subcommand("train", "Train base models on labeled domains");
  train->add_option("--domain", o.domain, "Train only this domain");
  auto* exp = app.add_subcommand("export", "Validate and re-export a model summary");
  exp->add_option("--summary", o.summary, "Summary file")->required();
  auto* ens = app.add_subcommand("ensemble", "Fit the global model on the target");
  ens->add_option("--variant", o.variant, "plain, partial, domain or mix");
  auto* cls = app.add_subcommand("classify", "Assign causes with a saved posterior");
  cls->add_option("--posterior", o.posterior, "posterior.json from ensemble")->required();
  auto* cal = app.add_subcommand("calibrate", "Confusion-matrix calibration baseline");
  cal->add_option("--beta-rate", o.beta_rate, "Gamma rate of the shrinkage weight");
  auto* sim = app.add_subcommand("simulate", "Generate synthetic domains");
  auto* lodo = app.add_subcommand("lodo", "Leave-one-domain-out experiment");
  auto* rep = app.add_subcommand("report", "Summarize a leave-one-domain-out CSV");
  rep->add_option("--input", o.input, "report.csv from lodo")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*train) cmd_train(g, o);
    else if (*exp) cmd_export(g, o);
    else if (*ens) cmd_ensemble(g, o);
    else if (*cls) cmd_classify(g, o);
    else if (*cal) cmd_calibrate(g, o);
    else if (*sim) cmd_simulate(g, o);
    else if (*lodo) cmd_lodo(g, o);
    else if (*rep) cmd_report(g, o);
  } catch (const bfl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
