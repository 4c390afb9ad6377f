#pragma once

// JSON rendering of detection reports and the on-disk report cache.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"
#include "realstrata/detector.hpp"

#ifndef REALSTRATA_VERSION
#define REALSTRATA_VERSION "1.0.0"
#endif

namespace realstrata {

inline constexpr const char* kVersion = REALSTRATA_VERSION;
inline constexpr int kSchemaVersion = 1;

inline nlohmann::json matrix_to_json(const IntMatrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& row : m) j.push_back(row);
  return j;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return os.str();
}

/// Deterministic part of a report (no timings, timestamps or cache flags).
inline nlohmann::json report_core_json(const DetectionReport& r) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["schema_version"] = kSchemaVersion;
  j["model"] = r.model.label();
  j["h2"] = r.model.h2;
  j["spec"] = r.spec.canonical();
  j["rank_S"] = r.rank_S;
  j["rank_T"] = r.rank_T;
  j["disc"] = form_to_json(r.disc);
  j["verdict"] = to_string(r.verdict);
  j["conclusiveness_basis"] = to_string(r.basis);
  j["scope_note"] = r.scope_note;
  if (r.witness) {
    j["witness"] = {{"a2", r.witness->candidate.a_square},
                    {"n", r.witness->candidate.n},
                    {"kappa", r.witness->candidate.kappa},
                    {"phi", matrix_to_json(r.witness->phi.matrix())}};
  } else {
    j["witness"] = nullptr;
  }
  if (r.skew_witness) {
    j["skew_witness"] = {{"reflection", matrix_to_json(r.skew_witness->reflection)},
                         {"phi", matrix_to_json(r.skew_witness->phi.matrix())}};
  } else {
    j["skew_witness"] = nullptr;
  }
  j["t_gram"] = r.t_gram ? matrix_to_json(*r.t_gram) : nlohmann::json(nullptr);
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : r.trace) {
    trace.push_back({{"a2", t.a_square},
                     {"n", t.n},
                     {"kappa", t.kappa ? nlohmann::json(*t.kappa) : nlohmann::json(nullptr)},
                     {"reason", to_string(t.reason)}});
  }
  j["trace"] = std::move(trace);
  return j;
}

inline nlohmann::json report_to_json(const DetectionReport& r, const std::string& computed_at, bool cache_hit) {
  nlohmann::json j = report_core_json(r);
  j["wall_time_ms"] = r.wall_time_ms;
  j["computed_at"] = computed_at;
  j["cache_hit"] = cache_hit;
  return j;
}

/// Strips the fields that legitimately differ between runs.
inline nlohmann::json stable_part(nlohmann::json j) {
  for (const char* k : {"wall_time_ms", "computed_at", "cache_hit", "oracle"}) j.erase(k);
  return j;
}

// ------------------------------------------------------------------ cache

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string cache_key(const ModelKind& model, const RootSpec& spec, const std::optional<BinaryLattice>& t) {
  std::ostringstream os;
  os << model.label() << '|' << spec.canonical() << '|';
  if (t) os << t->a << ',' << t->b << ',' << t->d;
  os << '|' << kVersion;
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(os.str());
  return hex.str();
}

/// Flag beats the REALSTRATA_CACHE environment variable, which beats the default.
inline std::filesystem::path resolve_cache_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("REALSTRATA_CACHE"); env && *env) return env;
  return ".realstrata-cache";
}

class ReportCache {
 public:
  explicit ReportCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(const std::string& key) const { return dir_ / (key + ".json"); }

  std::optional<nlohmann::json> load(const std::string& key) const {
    const auto p = path_for(key);
    std::ifstream in(p);
    if (!in) return std::nullopt;
    try {
      nlohmann::json j = nlohmann::json::parse(in);
      if (!j.contains("version") || j["version"] != kVersion) return std::nullopt;
      return j;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
  }

  void store(const std::string& key, const nlohmann::json& j) const {
    std::filesystem::create_directories(dir_);
    const auto p = path_for(key);
    const auto tmp = p.string() + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw std::runtime_error("cannot write cache file " + tmp);
      out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, p);
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace realstrata
