#include "rfkpca/cli.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <chrono>
#include <functional>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfkpca/bounds_lab.hpp"
#include "rfkpca/discrete_oracle.hpp"
#include "rfkpca/error.hpp"
#include "rfkpca/kernels.hpp"
#include "rfkpca/ratebench.hpp"
#include "rfkpca/rng.hpp"
#include "rfkpca/simd.hpp"
#include "rfkpca/task_pool.hpp"

namespace rfkpca {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void config_error(const std::string& what) { fail(ErrorKind::config, what); }

struct Criterion {
  std::string name;
  std::optional<bool> pass;  // unset: reported, not asserted
  std::string detail;
};

struct SuiteOutput {
  std::string csv;
  json result;
  std::optional<json> snapshot;
  std::vector<Criterion> criteria;
};

// Configs are parsed and validated completely before any suite runs, so a bad
// file never produces output.
struct Prepared {
  json raw;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::function<SuiteOutput()> execute;
};

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) config_error(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("key '") + key + "': " + e.what());
  }
}

void apply_overrides(json& j, std::uint64_t seed, unsigned threads) {
  j["seed"] = seed;
  j["threads"] = threads;
}

// --- spectrum --------------------------------------------------------------

Prepared prepare_spectrum(json raw, std::uint64_t seed) {
  reject_unknown(raw, {"decay", "alpha", "gamma", "atoms", "rank", "ell_max", "seed", "threads"},
                 "spectrum config");
  const std::string decay = get_or<std::string>(raw, "decay", "poly");
  if (decay != "poly" && decay != "expo") config_error("decay must be 'poly' or 'expo'");
  const double alpha = get_or<double>(raw, "alpha", 2.0);
  const double gamma = get_or<double>(raw, "gamma", 0.5);
  const std::size_t atoms = get_or<std::size_t>(raw, "atoms", 128);
  const std::size_t rank = get_or<std::size_t>(raw, "rank", 40);
  const std::size_t ell_max = get_or<std::size_t>(raw, "ell_max", rank - 1);
  if (decay == "poly" && !(alpha > 1.0)) config_error("alpha must be > 1");
  if (decay == "expo" && !(gamma > 0.0)) config_error("gamma must be > 0");
  if (rank < 2 || atoms < rank + 1) config_error("need 2 <= rank and rank + 1 <= atoms");
  if (ell_max < 1 || ell_max > rank) config_error("ell_max must lie in [1, rank]");

  Prepared p;
  p.raw = raw;
  p.execute = [=]() {
    const DiscreteMeasure measure = DiscreteMeasure::uniform(atoms);
    const std::vector<double> lambdas =
        decay == "poly" ? poly_spectrum(alpha, rank) : expo_spectrum(gamma, rank);
    const Kernel k = make_finite_rank_kernel(measure, lambdas, derive_seed(seed, "kernel"));
    const PopOperator s_j = op_jj(k, measure);

    SuiteOutput out;
    std::ostringstream csv;
    csv << "ell,lambda,tail_energy,recon_pop,rel_err\n";
    double worst_recon = 0.0;
    for (std::size_t ell = 1; ell <= ell_max; ++ell) {
      const double tail = tail_energy(s_j.spectrum, ell);
      const double recon = recon_error(ReconVariant::pop, s_j, proj_pop(s_j, ell));
      const double rel = tail > 0.0 ? std::abs(recon - tail) / tail : std::abs(recon);
      worst_recon = std::max(worst_recon, rel);
      csv << ell << ',' << fmt17(s_j.spectrum.eigenvalues[ell - 1]) << ',' << fmt17(tail) << ','
          << fmt17(recon) << ',' << fmt17(rel) << '\n';
    }
    double worst_eig = 0.0;
    for (std::size_t i = 0; i < rank; ++i) {
      worst_eig = std::max(worst_eig, std::abs(s_j.spectrum.eigenvalues[i] - lambdas[i]) / lambdas[i]);
    }
    out.csv = csv.str();
    out.result = {{"max_rel_err_recon", worst_recon}, {"max_rel_err_spectrum", worst_eig}};
    out.criteria.push_back({"population_recon_equals_tail", worst_recon <= 1e-10,
                            "max relative error " + fmt17(worst_recon)});
    out.criteria.push_back({"oracle_spectrum_matches_target", worst_eig <= 1e-10,
                            "max relative error " + fmt17(worst_eig)});
    out.snapshot = oracle_snapshot(k, measure, s_j);
    return out;
  };
  return p;
}

// --- rates / transition -----------------------------------------------------

void add_rate_criteria(const RateReport& r, const std::string& prefix,
                       std::vector<Criterion>& out) {
  std::string detail = "slope " + (r.fit ? fmt17(r.fit->slope) : std::string("n/a"));
  if (r.predicted) detail += ", predicted " + fmt17(*r.predicted);
  detail += ", tolerance " + fmt17(r.config.tolerance);
  if (!r.prediction_note.empty()) detail += " (" + r.prediction_note + ")";
  out.push_back({prefix + "slope", r.verdict, detail});
  const char* names[3] = {"prop8_hat", "prop8_rf_pop", "prop8_rf_hat"};
  for (std::size_t i = 0; i < 3; ++i) {
    if (r.prop8[i].checked == 0) continue;
    out.push_back({prefix + names[i], r.prop8[i].violations == 0,
                   std::to_string(r.prop8[i].violations) + " violations in " +
                       std::to_string(r.prop8[i].checked) + " cells"});
  }
  out.push_back({prefix + "monotone_bias", std::nullopt,
                 std::to_string(r.monotone_bias.violations) + " increases in " +
                     std::to_string(r.monotone_bias.checked) + " steps"});
}

json oracle_snapshot_for(const ExperimentConfig& c) {
  const DiscreteMeasure measure = DiscreteMeasure::uniform(c.atoms);
  const std::vector<double> lambdas =
      c.decay == Decay::poly ? poly_spectrum(c.alpha, c.rank) : expo_spectrum(c.gamma, c.rank);
  const Kernel k = make_finite_rank_kernel(measure, lambdas, derive_seed(c.seed, "kernel"));
  return oracle_snapshot(k, measure, op_jj(k, measure));
}

Prepared prepare_rates(json raw, std::uint64_t seed, unsigned threads) {
  apply_overrides(raw, seed, threads);
  ExperimentConfig c = experiment_from_json(raw);
  Prepared p;
  p.raw = raw;
  p.execute = [c]() {
    const RateReport r = run_grid(c);
    SuiteOutput out;
    out.csv = to_csv(r);
    out.result = summary_json(r);
    out.snapshot = oracle_snapshot_for(c);
    add_rate_criteria(r, "", out.criteria);
    return out;
  };
  return p;
}

Prepared prepare_transition(json raw, std::uint64_t seed, unsigned threads) {
  if (!raw.is_object()) config_error("transition config must be a JSON object");
  if (!raw.contains("taus")) config_error("transition config needs 'taus'");
  std::vector<double> taus;
  try {
    taus = raw["taus"].get<std::vector<double>>();
  } catch (const json::exception& e) {
    config_error(std::string("key 'taus': ") + e.what());
  }
  for (double t : taus) {
    if (!(t > 0.0 && t <= 1.0)) config_error("every tau must lie in (0, 1]");
  }
  json base = raw;
  base.erase("taus");
  if (!base.contains("metric")) base["metric"] = "proj_rf_hat";
  // Each row sets its own tau; validation only needs one to be present.
  if (!base.contains("tau")) base["tau"] = taus.empty() ? 1.0 : taus.front();
  apply_overrides(base, seed, threads);
  ExperimentConfig c = experiment_from_json(base);
  if (c.metric != Metric::proj_rf_hat) config_error("transition metric must be proj_rf_hat");
  Prepared p;
  p.raw = raw;
  p.execute = [c, taus]() {
    const TransitionTable t = transition_study(c, taus);
    SuiteOutput out;
    std::ostringstream csv;
    csv << "tau,n,m,ell,rep,metric,value\n";
    for (const TransitionRow& row : t.rows) {
      std::istringstream lines(to_csv(row.report));
      std::string line;
      std::getline(lines, line);  // header
      while (std::getline(lines, line)) csv << fmt17(row.tau) << ',' << line << '\n';
    }
    out.csv = csv.str();
    out.result = summary_json(t);
    out.snapshot = oracle_snapshot_for(c);
    for (const TransitionRow& row : t.rows) {
      out.criteria.push_back(
          {"tau=" + fmt17(row.tau) + " " +
               (row.matching_regime ? "matches_reference" : "feature_limited"),
           row.pass,
           "slope " + fmt17(row.slope) + ", target " + fmt17(row.target) + ", tolerance " +
               fmt17(c.tolerance)});
      const char* names[3] = {"prop8_hat", "prop8_rf_pop", "prop8_rf_hat"};
      for (std::size_t i = 0; i < 3; ++i) {
        const auto& tl = row.report.prop8[i];
        out.criteria.push_back({"tau=" + fmt17(row.tau) + " " + names[i], tl.violations == 0,
                                std::to_string(tl.violations) + " violations in " +
                                    std::to_string(tl.checked) + " cells"});
      }
    }
    return out;
  };
  return p;
}

// --- bounds ------------------------------------------------------------------

Prepared prepare_bounds(json raw, std::uint64_t seed) {
  reject_unknown(raw, {"suites", "seed", "threads"}, "bounds config");
  static const std::vector<std::string> all = {"perturbation", "operator_inequality",
                                               "tensor_lemma", "rank_one"};
  json suites = raw.contains("suites") ? raw["suites"] : json::object();
  if (!suites.is_object()) config_error("'suites' must be an object keyed by suite name");
  if (suites.empty()) {
    for (const auto& s : all) suites[s] = json::object();
  }
  struct Plan {
    std::string name;
    std::size_t cases;
    std::size_t a;
    std::size_t b;
  };
  std::vector<Plan> plans;
  for (const auto& name : all) {
    if (!suites.contains(name)) continue;
    const json& s = suites[name];
    if (name == "perturbation") {
      reject_unknown(s, {"cases", "min_dim", "max_dim"}, name);
      plans.push_back({name, get_or<std::size_t>(s, "cases", 1000),
                       get_or<std::size_t>(s, "min_dim", 4), get_or<std::size_t>(s, "max_dim", 20)});
    } else if (name == "tensor_lemma" || name == "rank_one") {
      reject_unknown(s, {"trials", "dim"}, name);
      plans.push_back({name, get_or<std::size_t>(s, "trials", 1000),
                       get_or<std::size_t>(s, "dim", name == "rank_one" ? 50 : 10), 0});
    } else {
      reject_unknown(s, {"trials"}, name);
      plans.push_back({name, get_or<std::size_t>(s, "trials", 1000), 0, 0});
    }
  }
  for (const auto& [key, _] : suites.items()) {
    if (std::find(all.begin(), all.end(), key) == all.end()) {
      config_error("unknown bounds suite '" + key + "'");
    }
  }
  for (const Plan& pl : plans) {
    if (pl.cases == 0) config_error(pl.name + ": case count must be >= 1");
    if (pl.name == "perturbation" && (pl.a < 2 || pl.b < pl.a)) {
      config_error("perturbation: need 2 <= min_dim <= max_dim");
    }
    if ((pl.name == "tensor_lemma" || pl.name == "rank_one") && pl.a < 1) {
      config_error(pl.name + ": dim must be >= 1");
    }
  }
  Prepared p;
  p.raw = raw;
  p.execute = [plans, seed]() {
    SuiteOutput out;
    std::ostringstream csv;
    csv << "suite,cases,violations,min_margin\n";
    json reports = json::array();
    for (const Plan& pl : plans) {
      const std::uint64_t s = derive_seed(seed, pl.name);
      SuiteReport r;
      if (pl.name == "perturbation") {
        r = perturbation_suite(pl.cases, s, pl.a, pl.b);
      } else if (pl.name == "operator_inequality") {
        r = operator_inequality_suite(pl.cases, s);
      } else if (pl.name == "tensor_lemma") {
        r = tensor_lemma_suite(pl.cases, s, pl.a);
      } else {
        r = rank_one_suite(pl.cases, s, pl.a);
      }
      csv << r.name << ',' << r.cases << ',' << r.violations << ',' << fmt17(r.min_margin) << '\n';
      reports.push_back(to_json(r));
      out.criteria.push_back({r.name, r.violations == 0,
                              std::to_string(r.violations) + " violations in " +
                                  std::to_string(r.cases) + " cases"});
    }
    std::size_t total = 0;
    for (const auto& r : reports) total += r["violations"].get<std::size_t>();
    out.csv = csv.str();
    out.result = {{"suites", reports}, {"violations", total}};
    return out;
  };
  return p;
}

// --- concentration -------------------------------------------------------------

Prepared prepare_concentration(json raw, std::uint64_t seed, unsigned threads) {
  reject_unknown(raw,
                 {"experiments", "tau", "sample_size", "replications", "atoms", "rank", "alpha",
                  "seed", "threads"},
                 "concentration config");
  McTailConfig cfg;
  cfg.tau = get_or<double>(raw, "tau", cfg.tau);
  cfg.sample_size = get_or<std::size_t>(raw, "sample_size", cfg.sample_size);
  cfg.replications = get_or<std::size_t>(raw, "replications", cfg.replications);
  cfg.atoms = get_or<std::size_t>(raw, "atoms", cfg.atoms);
  cfg.rank = get_or<std::size_t>(raw, "rank", cfg.rank);
  cfg.alpha = get_or<double>(raw, "alpha", cfg.alpha);
  cfg.seed = seed;
  cfg.threads = threads;
  std::vector<std::string> names =
      get_or<std::vector<std::string>>(raw, "experiments", {"cov_deviation", "feature_op_deviation"});
  std::vector<TailExperiment> exps;
  for (const auto& n : names) {
    if (n == "cov_deviation") {
      exps.push_back(TailExperiment::cov_deviation);
    } else if (n == "feature_op_deviation") {
      exps.push_back(TailExperiment::feature_op_deviation);
    } else {
      config_error("unknown concentration experiment '" + n + "'");
    }
  }
  if (!(cfg.tau > 0.0)) config_error("tau must be > 0");
  if (cfg.replications < 50) config_error("replications must be >= 50");
  if (static_cast<double>(cfg.sample_size) < 8.0 * cfg.tau) config_error("sample_size must be >= 8 tau");
  if (!(cfg.alpha > 1.0)) config_error("alpha must be > 1");
  if (cfg.rank < 2 || cfg.atoms < cfg.rank + 1) config_error("need 2 <= rank and rank + 1 <= atoms");

  Prepared p;
  p.raw = raw;
  p.execute = [cfg, exps, names]() {
    SuiteOutput out;
    std::ostringstream csv;
    csv << "experiment,replication,deviation,bound\n";
    json results = json::array();
    for (std::size_t e = 0; e < exps.size(); ++e) {
      const McTailResult r = mc_tail(exps[e], cfg);
      for (std::size_t i = 0; i < r.deviations.size(); ++i) {
        csv << names[e] << ',' << i << ',' << fmt17(r.deviations[i]) << ',' << fmt17(r.bound)
            << '\n';
      }
      results.push_back({{"experiment", names[e]},
                         {"bound", r.bound},
                         {"exceed_fraction", r.exceed_fraction},
                         {"probability_cap", r.prob_bound},
                         {"max_deviation", r.max_deviation},
                         {"median_deviation", r.median_deviation}});
      out.criteria.push_back({names[e], r.exceed_fraction <= r.prob_bound,
                              "exceedance " + fmt17(r.exceed_fraction) + " vs cap " +
                                  fmt17(r.prob_bound)});
    }
    out.csv = csv.str();
    out.result = {{"experiments", results}, {"tau", cfg.tau}};
    return out;
  };
  return p;
}

std::string_view command_name(Command c) {
  switch (c) {
    case Command::spectrum: return "spectrum";
    case Command::rates: return "rates";
    case Command::transition: return "transition";
    case Command::bounds: return "bounds";
    case Command::concentration: return "concentration";
  }
  return "?";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::config, "cannot write " + path.string());
  f << content;
  if (!f) fail(ErrorKind::config, "failed writing " + path.string());
}

}  // namespace

Command command_from_string(std::string_view s) {
  for (Command c : {Command::spectrum, Command::rates, Command::transition, Command::bounds,
                    Command::concentration}) {
    if (command_name(c) == s) return c;
  }
  config_error("unknown command '" + std::string(s) + "'");
}

std::string git_blob_sha1(std::string_view content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob.append(content);
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 15]);
  }
  return out;
}

int run(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const std::string cmd(command_name(rc.command));
  const auto t0 = std::chrono::steady_clock::now();

  // Stage 1: read and validate everything.
  std::string text;
  Prepared prepared;
  try {
    std::ifstream f(rc.config_path, std::ios::binary);
    if (!f) config_error("cannot read config '" + rc.config_path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    text = ss.str();
    json raw;
    try {
      raw = json::parse(text);
    } catch (const json::parse_error& e) {
      config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!raw.is_object()) config_error("config must be a JSON object");
    std::uint64_t seed = rc.seed ? *rc.seed : get_or<std::uint64_t>(raw, "seed", 0);
    unsigned threads = rc.threads ? *rc.threads : get_or<unsigned>(raw, "threads", 0);
    threads = resolve_threads(threads);
    switch (rc.command) {
      case Command::spectrum: prepared = prepare_spectrum(raw, seed); break;
      case Command::rates: prepared = prepare_rates(raw, seed, threads); break;
      case Command::transition: prepared = prepare_transition(raw, seed, threads); break;
      case Command::bounds: prepared = prepare_bounds(raw, seed); break;
      case Command::concentration: prepared = prepare_concentration(raw, seed, threads); break;
    }
    prepared.seed = seed;
    prepared.threads = threads;
    if (fs::exists(rc.output_dir) && !fs::is_directory(rc.output_dir)) {
      config_error("output path '" + rc.output_dir + "' is not a directory");
    }
  } catch (const Error& e) {
    err << cmd << ": " << e.what() << '\n';
    return kExitConfig;
  }

  // Stage 2: compute.
  SuiteOutput result;
  try {
    result = prepared.execute();
  } catch (const Error& e) {
    err << cmd << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::config ? kExitConfig : kExitNumeric;
  } catch (const std::exception& e) {
    err << cmd << ": internal error: " << e.what() << '\n';
    return kExitNumeric;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Stage 3: write.
  bool all_pass = true;
  json criteria = json::array();
  for (const Criterion& c : result.criteria) {
    const char* v = !c.pass ? "n/a" : (*c.pass ? "pass" : "fail");
    if (c.pass && !*c.pass) all_pass = false;
    criteria.push_back({{"name", c.name}, {"verdict", v}, {"detail", c.detail}});
  }
  json summary;
  summary["command"] = cmd;
  summary["config"] = prepared.raw;
  summary["config_hash"] = git_blob_sha1(text);
  summary["seed"] = prepared.seed;
  summary["threads"] = prepared.threads;
  summary["isa"] = std::string(simd::isa_name(simd::active().isa));
  summary["wall_time_s"] = wall;
  summary["criteria"] = criteria;
  summary["verdict"] = all_pass ? "pass" : "fail";
  summary["result"] = result.result;
  try {
    const fs::path dir(rc.output_dir);
    fs::create_directories(dir);
    write_file(dir / "results.csv", result.csv);
    if (result.snapshot && (rc.command == Command::rates || rc.command == Command::transition)) {
      write_file(dir / "oracle_snapshot.json", result.snapshot->dump(2) + "\n");
    }
    write_file(dir / "summary.json", summary.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << cmd << ": " << e.what() << '\n';
    return kExitConfig;
  }

  char secs[32];
  std::snprintf(secs, sizeof secs, "%.2f", wall);
  out << cmd << " (seed " << prepared.seed << ", " << prepared.threads << " threads, " << secs
      << " s)\n";
  for (const Criterion& c : result.criteria) {
    const char* v = !c.pass ? "N/A " : (*c.pass ? "PASS" : "FAIL");
    out << "  " << v << "  " << c.name << "  " << c.detail << '\n';
  }
  out << (all_pass ? "PASS" : "FAIL") << '\n';
  return all_pass ? kExitOk : kExitAssertion;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Random-feature kernel PCA experiments"};
  app.require_subcommand(0);
  std::string command;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string threads_text;
  app.add_option("command", command, "spectrum | rates | transition | bounds | concentration")
      ->required()
      ->check(CLI::IsMember({"spectrum", "rates", "transition", "bounds", "concentration"}));
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--threads", threads_text, "worker count or 'auto'");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  RunConfig rc;
  rc.command = command_from_string(command);
  rc.config_path = config_path;
  rc.output_dir = out_dir;
  rc.seed = seed;
  if (!threads_text.empty()) {
    if (threads_text == "auto") {
      rc.threads = 0u;
    } else {
      try {
        std::size_t used = 0;
        const long v = std::stol(threads_text, &used);
        if (used != threads_text.size() || v < 1) throw std::invalid_argument("threads");
        rc.threads = static_cast<unsigned>(v);
      } catch (const std::exception&) {
        std::cerr << "--threads must be a positive integer or 'auto'\n";
        return kExitConfig;
      }
    }
  }
  return run(rc, std::cout, std::cerr);
}

}  // namespace rfkpca
