#pragma once

// Command-line front end. run_cli is the whole program; main() only forwards.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "realstrata/detector.hpp"
#include "realstrata/oracle.hpp"
#include "realstrata/report.hpp"

namespace realstrata::cli {

enum ExitCode : int { kWitness = 0, kUsage = 2, kNone = 3, kInconclusive = 4 };

inline int exit_code_for(Verdict v) {
  switch (v) {
    case Verdict::WitnessFound: return kWitness;
    case Verdict::NoneExists: return kNone;
    case Verdict::Inconclusive: return kInconclusive;
    case Verdict::NeedsTGram: return kUsage;
  }
  return kUsage;
}

inline BinaryLattice parse_tgram(const std::string& text) {
  std::vector<Int> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument("bad --tgram entry '" + item + "' (expected a,b,d)");
    }
  }
  if (v.size() != 3) throw std::invalid_argument("--tgram needs exactly three integers a,b,d");
  return BinaryLattice(v[0], v[1], v[2]);
}

inline ModelKind resolve_model(const std::string& model_text, std::optional<Int> h2) {
  if (!h2) return ModelKind::parse(model_text);
  if (*h2 == 4) return ModelKind::quartic();
  if (*h2 == 2) return ModelKind::sextic();
  return ModelKind::parse("h2=" + std::to_string(*h2));
}

struct JobConfig {
  ModelKind model = ModelKind::quartic();
  std::string spec_text;
  std::optional<BinaryLattice> tgram;
  std::optional<std::string> json_path;
  std::optional<std::string> cache_dir;
  unsigned threads = 1;
  bool oracle = false;
  bool read_cache = true;
  bool write_cache = true;
};

/// Oracle cross-check of a report: witnesses are re-validated element by element;
/// exhaustive traces are compared with the brute-force candidate set.
inline nlohmann::json oracle_check(const nlohmann::json& report, const PolarizedForm& pf) {
  nlohmann::json o;
  o["checked"] = false;
  try {
    if (!report["witness"].is_null()) {
      const auto& w = report["witness"];
      IntMatrix phi;
      for (const auto& row : w["phi"]) phi.push_back(row.get<IntVector>());
      const auto r = oracle::brute_check_witness(pf.form, pf.rank_S(), w["a2"].get<Int>(), w["n"].get<Int>(),
                                                 w["kappa"].get<IntVector>(), phi);
      o["checked"] = true;
      o["agrees"] = r.all();
      o["detail"] = nlohmann::json{{"kappa", r.kappa_ok}, {"isotropic", r.isotropic}, {"cond2", r.cond2},
                                   {"cond3", r.cond3}, {"genus", r.genus}};
    } else if (!report["trace"].empty()) {
      std::set<std::tuple<Int, Int, IntVector>> traced;
      for (const auto& t : report["trace"])
        if (!t["kappa"].is_null()) traced.insert({t["a2"].get<Int>(), t["n"].get<Int>(), t["kappa"].get<IntVector>()});
      std::set<std::tuple<Int, Int, IntVector>> brute;
      for (const auto& c : oracle::brute_all_candidates(pf.form)) brute.insert({c.a_square, c.n, c.kappa});
      o["checked"] = true;
      o["agrees"] = traced == brute;
      o["detail"] = nlohmann::json{{"traced", traced.size()}, {"brute", brute.size()}};
    } else {
      o["detail"] = "nothing to check";
    }
  } catch (const oracle::cutoff_exceeded& e) {
    o["detail"] = std::string("skipped: ") + e.what();
  }
  return o;
}

struct DetectOutcome {
  nlohmann::json report;
  Verdict verdict;
  bool cache_hit;
};

inline Verdict verdict_from_string(const std::string& s) {
  if (s == "witness_found") return Verdict::WitnessFound;
  if (s == "none_exists") return Verdict::NoneExists;
  if (s == "needs_T_gram") return Verdict::NeedsTGram;
  return Verdict::Inconclusive;
}

inline DetectOutcome run_detect_job(const JobConfig& cfg) {
  const RootSpec spec = RootSpec::parse(cfg.spec_text);
  const std::string key = cache_key(cfg.model, spec, cfg.tgram);
  const ReportCache cache(resolve_cache_dir(cfg.cache_dir));
  nlohmann::json j;
  bool hit = false;
  if (cfg.read_cache) {
    if (auto cached = cache.load(key)) {
      j = std::move(*cached);
      j["cache_hit"] = true;
      hit = true;
    }
  }
  if (!hit) {
    DetectOptions opts;
    opts.t_gram = cfg.tgram;
    opts.threads = cfg.threads;
    const DetectionReport rep = detect(cfg.model, spec, opts);
    j = report_to_json(rep, utc_timestamp(), false);
    if (cfg.write_cache) cache.store(key, j);
  }
  if (cfg.oracle) j["oracle"] = oracle_check(j, polarized_disc(spec, cfg.model.h2));
  return {j, verdict_from_string(j["verdict"].get<std::string>()), hit};
}

inline void print_report_text(const nlohmann::json& j, std::ostream& out) {
  out << "model:    " << j["model"].get<std::string>() << " (h^2 = " << j["h2"].get<Int>() << ")\n";
  out << "spec:     " << (j["spec"].get<std::string>().empty() ? "(smooth)" : j["spec"].get<std::string>())
      << "   rank S = " << j["rank_S"].get<int>() << ", rank T = " << j["rank_T"].get<int>() << "\n";
  out << "disc S_h: " << form_from_json(j["disc"]).describe() << "\n";
  out << "verdict:  " << j["verdict"].get<std::string>() << " (basis: " << j["conclusiveness_basis"].get<std::string>()
      << ")\n";
  std::map<std::string, int> counts;
  for (const auto& t : j["trace"]) counts[t["reason"].get<std::string>()]++;
  out << "trace:    " << j["trace"].size() << " entries";
  for (const auto& [r, c] : counts) out << ", " << r << " " << c;
  out << "\n";
  if (!j["witness"].is_null()) {
    const auto& w = j["witness"];
    out << "witness:  a^2 = " << w["a2"].get<Int>() << ", n = " << w["n"].get<Int>() << ", kappa = " << w["kappa"].dump()
        << ", phi = " << w["phi"].dump() << "\n";
  }
  if (!j["skew_witness"].is_null())
    out << "witness:  reflection " << j["skew_witness"]["reflection"].dump() << ", phi = "
        << j["skew_witness"]["phi"].dump() << "\n";
  if (j.contains("oracle")) out << "oracle:   " << j["oracle"].dump() << "\n";
  out << "cache:    " << (j["cache_hit"].get<bool>() ? "hit" : "miss") << " (computed " << j["computed_at"].get<std::string>()
      << ", " << j["wall_time_ms"].get<double>() << " ms)\n";
  out << "note:     " << j["scope_note"].get<std::string>() << "\n";
}

inline void write_json_file(const std::string& path, const nlohmann::json& j, std::ostream& out) {
  if (path == "-") {
    out << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

// ---------------------------------------------------------------- commands

// JSON on stdout replaces the text report
inline bool json_on_stdout(const std::optional<std::string>& path) { return path && *path == "-"; }

inline int cmd_disc(const ModelKind& model, const std::string& spec_text, const std::optional<std::string>& json_path,
                    std::ostream& out) {
  std::ostringstream discard;
  std::ostream& txt = json_on_stdout(json_path) ? discard : out;
  const RootSpec spec = RootSpec::parse(spec_text);
  const PolarizedForm pf = polarized_disc(spec, model.h2);
  nlohmann::json tags = nlohmann::json::array();
  for (const auto& t : pf.tags)
    tags.push_back({{"component", t.component}, {"label", t.label}, {"prime", t.prime}});
  const nlohmann::json j{{"spec", spec.canonical()}, {"h2", model.h2}, {"form", form_to_json(pf.form)}, {"tags", tags}};
  txt << "disc(S + Zh) for " << (spec.canonical().empty() ? "(smooth)" : spec.canonical()) << ", h^2 = " << model.h2
      << ":\n  ";
  for (std::size_t i = 0; i < pf.form.rank(); ++i) {
    if (i) txt << " + ";
    txt << "[" << to_string(pf.form.signed_q(i)) << "]";
  }
  txt << "\n";
  for (std::size_t i = 0; i < pf.form.rank(); ++i) {
    const auto& t = pf.tags[i];
    txt << "  g" << i << ": order " << pf.form.orders()[i] << ", q = " << to_string(pf.form.signed_q(i)) << "  <- "
        << t.label;
    if (t.prime) txt << " (" << t.prime << "-part)";
    txt << "\n";
  }
  if (json_path) write_json_file(*json_path, j, out);
  return 0;
}

inline int cmd_detect(const JobConfig& cfg, std::ostream& out, std::ostream& err) {
  std::ostringstream discard;
  std::ostream& txt = json_on_stdout(cfg.json_path) ? discard : out;
  const RootSpec spec = RootSpec::parse(cfg.spec_text);
  if (spec.rank() == 19 && !cfg.tgram) {
    err << "error: rank S = 19 needs the transcendental lattice; pass --tgram a,b,d\n";
    return kUsage;
  }
  const DetectOutcome o = run_detect_job(cfg);
  print_report_text(o.report, txt);
  if (cfg.json_path) write_json_file(*cfg.json_path, o.report, out);
  if (cfg.oracle && o.report["oracle"].value("checked", false) && !o.report["oracle"].value("agrees", false)) {
    err << "error: oracle disagrees with the detector\n";
    return kUsage;
  }
  return exit_code_for(o.verdict);
}

inline int cmd_batch(const std::string& path, JobConfig base, std::ostream& out, std::ostream& err) {
  std::ostringstream discard;
  std::ostream& txt = json_on_stdout(base.json_path) ? discard : out;
  std::ifstream in(path);
  if (!in) {
    err << "error: cannot read " << path << "\n";
    return kUsage;
  }
  std::map<std::string, int> summary{{"found", 0}, {"none", 0}, {"inconclusive", 0}, {"needs_T_gram", 0}, {"errors", 0}};
  bool parse_failure = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    JobConfig cfg = base;
    cfg.spec_text = line;
    cfg.json_path.reset();
    cfg.write_cache = true;  // per-stratum reports always land in the cache directory
    try {
      (void)RootSpec::parse(line);
    } catch (const std::exception& e) {
      err << path << ":" << lineno << ": " << e.what() << "\n";
      parse_failure = true;
      summary["errors"]++;
      continue;
    }
    try {
      const RootSpec spec = RootSpec::parse(line);
      std::string verdict;
      if (spec.rank() == 19 && !cfg.tgram) {
        verdict = "needs_T_gram";
        summary["needs_T_gram"]++;
      } else {
        const DetectOutcome o = run_detect_job(cfg);
        verdict = o.report["verdict"].get<std::string>();
        if (o.verdict == Verdict::WitnessFound) summary["found"]++;
        else if (o.verdict == Verdict::NoneExists) summary["none"]++;
        else summary["inconclusive"]++;
      }
      txt << std::left << std::setw(28) << spec.canonical() << " " << verdict << "\n";
    } catch (const std::exception& e) {
      err << path << ":" << lineno << ": " << e.what() << "\n";
      summary["errors"]++;
    }
  }
  txt << "summary: found " << summary["found"] << ", none " << summary["none"] << ", inconclusive "
      << summary["inconclusive"] << ", needs_T_gram " << summary["needs_T_gram"] << ", errors " << summary["errors"]
      << "\n";
  if (base.json_path) write_json_file(*base.json_path, nlohmann::json(summary), out);
  return parse_failure ? 1 : 0;
}

inline int cmd_embed(int sigma_plus, int sigma_minus, const std::string& form_arg, std::ostream& out) {
  nlohmann::json fj;
  if (!form_arg.empty() && form_arg.front() == '{') {
    fj = nlohmann::json::parse(form_arg);
  } else {
    std::ifstream in(form_arg);
    if (!in) throw std::runtime_error("cannot read form file " + form_arg);
    fj = nlohmann::json::parse(in);
  }
  const FiniteQuadraticForm f = form_from_json(fj);
  const EmbedResult r = embeds_into_big_L({sigma_plus, sigma_minus, f});
  out << "form: " << f.describe() << "\n";
  out << "signature (" << sigma_plus << ", " << sigma_minus << "): " << (r.embeds ? "embeds" : "does not embed")
      << " (" << r.reason() << ")\n";
  return r.embeds ? 0 : kNone;
}

inline int cmd_autos(const BinaryLattice& t, const std::optional<std::string>& json_path, std::ostream& out) {
  std::ostringstream discard;
  std::ostream& txt = json_on_stdout(json_path) ? discard : out;
  const auto autos = binary_autos(t);
  txt << "O(T) for T = [[" << t.a << "," << t.b << "],[" << t.b << "," << t.d << "]]: order " << autos.size() << "\n";
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : autos) {
    txt << "  " << matrix_to_json(a.matrix).dump() << "  det " << (a.det > 0 ? "+1" : "-1")
        << (a.reflection ? "  reflection" : "  rotation") << "\n";
    arr.push_back({{"matrix", matrix_to_json(a.matrix)}, {"det", a.det}, {"reflection", a.reflection}});
  }
  if (json_path) write_json_file(*json_path, nlohmann::json{{"order", autos.size()}, {"elements", arr}}, out);
  return 0;
}

// ------------------------------------------------------------------ parser

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"realstrata: real representatives of equisingular strata of polarized K3 models"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string model_text = "quartic";
  std::optional<Int> h2;
  std::string spec_text;
  std::optional<std::string> tgram_text, json_path, cache_dir, form_arg, batch_file;
  unsigned threads = 1;
  bool oracle_flag = false, no_cache = false;
  int sigma_plus = 0, sigma_minus = 0;

  auto add_model = [&](CLI::App* sc) {
    sc->add_option("--model", model_text, "quartic | sextic | h2=<even>");
    sc->add_option("--h2", h2, "h^2 (overrides --model)");
  };
  auto add_run = [&](CLI::App* sc) {
    sc->add_option("--tgram", tgram_text, "transcendental lattice a,b,d (rank S = 19)");
    sc->add_option("--cache-dir", cache_dir, "report cache directory");
    sc->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 256u));
    sc->add_flag("--oracle", oracle_flag, "cross-check against brute force");
    sc->add_flag("--no-cache", no_cache, "neither read nor write the cache");
  };

  CLI::App* disc = app.add_subcommand("disc", "discriminant form of S + Zh with generator tags");
  add_model(disc);
  disc->add_option("--spec", spec_text, "singularities, e.g. D7+A6+A3+A2")->required();
  disc->add_option("--json", json_path, "write JSON to this path ('-' for stdout)");

  CLI::App* det = app.add_subcommand("detect", "search for a real representative");
  add_model(det);
  add_run(det);
  det->add_option("--spec", spec_text, "singularities, e.g. A7+A6+A3+A2")->required();
  det->add_option("--json", json_path, "write the JSON report to this path ('-' for stdout)");

  CLI::App* batch = app.add_subcommand("batch", "run detect over a file of specs");
  add_model(batch);
  add_run(batch);
  batch->add_option("file", batch_file, "newline-delimited specs, '#' comments")->required();
  batch->add_option("--json", json_path, "write the summary JSON here");

  CLI::App* emb = app.add_subcommand("embed", "primitive embedding criterion into 2E8 + 3U");
  emb->add_option("--sigma-plus", sigma_plus)->required()->check(CLI::NonNegativeNumber);
  emb->add_option("--sigma-minus", sigma_minus)->required()->check(CLI::NonNegativeNumber);
  emb->add_option("--form", form_arg, "form JSON (inline or file path)")->required();

  CLI::App* aut = app.add_subcommand("autos", "isometry group of a positive definite binary lattice");
  aut->add_option("--tgram", tgram_text, "a,b,d")->required();
  aut->add_option("--json", json_path, "write JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*disc) return cmd_disc(resolve_model(model_text, h2), spec_text, json_path, out);
    if (*emb) return cmd_embed(sigma_plus, sigma_minus, *form_arg, out);
    if (*aut) return cmd_autos(parse_tgram(*tgram_text), json_path, out);
    JobConfig cfg;
    cfg.model = resolve_model(model_text, h2);
    cfg.spec_text = spec_text;
    if (tgram_text) cfg.tgram = parse_tgram(*tgram_text);
    cfg.json_path = json_path;
    cfg.cache_dir = cache_dir;
    cfg.threads = threads;
    cfg.oracle = oracle_flag;
    cfg.read_cache = cfg.write_cache = !no_cache;
    if (*det) return cmd_detect(cfg, out, err);
    if (*batch) return cmd_batch(*batch_file, cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace realstrata::cli
