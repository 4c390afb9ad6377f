#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "realstrata/cli.hpp"

namespace fs = std::filesystem;
using namespace realstrata;

namespace {

const fs::path kSamples = fs::path(REALSTRATA_SOURCE_DIR) / "samples";

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "realstrata");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("realstrata-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json detect_json(std::vector<std::string> args) {
  args.insert(args.begin(), "detect");
  args.insert(args.end(), {"--json", "-"});
  const CliRun r = run(args);
  EXPECT_TRUE(r.code == 0 || r.code == 3) << r.err;
  return nlohmann::json::parse(r.out);
}

}  // namespace

// ---------------------------------------------------------------- exit codes

TEST(CliExit, VerdictMapping) {
  EXPECT_EQ(cli::exit_code_for(Verdict::WitnessFound), 0);
  EXPECT_EQ(cli::exit_code_for(Verdict::NoneExists), 3);
  EXPECT_EQ(cli::exit_code_for(Verdict::Inconclusive), 4);
  EXPECT_EQ(cli::exit_code_for(Verdict::NeedsTGram), 2);
}

TEST(CliExit, Detect) {
  EXPECT_EQ(run({"detect", "--model", "quartic", "--spec", "A7+A6+A3+A2", "--no-cache"}).code, 3);
  EXPECT_EQ(run({"detect", "--model", "quartic", "--spec", "D7+A6+A3+A2", "--no-cache"}).code, 3);
  EXPECT_EQ(run({"detect", "--model", "sextic", "--spec", "A7+A6+A5", "--no-cache"}).code, 3);
  EXPECT_EQ(run({"detect", "--model", "quartic", "--spec", "A1", "--no-cache"}).code, 0);
  EXPECT_EQ(run({"detect", "--h2", "6", "--spec", "A3", "--no-cache"}).code, 0);
}

TEST(CliExit, RankNineteen) {
  const CliRun missing = run({"detect", "--spec", "E8+E7+A4", "--no-cache"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("--tgram"), std::string::npos);
  EXPECT_EQ(run({"detect", "--spec", "E8+E7+A4", "--tgram", "2,0,20", "--no-cache"}).code, 0);
  // wrong discriminant and odd lattices are usage errors
  EXPECT_EQ(run({"detect", "--spec", "E8+E7+A4", "--tgram", "4,0,10", "--no-cache"}).code, 2);
  EXPECT_EQ(run({"detect", "--spec", "E8+E7+A4", "--tgram", "4,2,11", "--no-cache"}).code, 2);
}

TEST(CliExit, UsageErrors) {
  EXPECT_EQ(run({"detect", "--spec", "A1+Q3", "--no-cache"}).code, 2);
  EXPECT_EQ(run({"detect", "--spec", "A20", "--no-cache"}).code, 2);
  EXPECT_EQ(run({"detect", "--model", "cubic", "--spec", "A1", "--no-cache"}).code, 2);
  EXPECT_NE(run({"detect"}).code, 0);
  EXPECT_NE(run({}).code, 0);
}

TEST(CliExit, Version) {
  const CliRun r = run({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("1.0.0"), std::string::npos);
}

// ---------------------------------------------------------------- cache

TEST(CliCache, SecondRunHits) {
  TempDir dir;
  const auto first = detect_json({"--spec", "D4+A3", "--cache-dir", dir.str()});
  const auto second = detect_json({"--spec", "D4+A3", "--cache-dir", dir.str()});
  EXPECT_FALSE(first["cache_hit"].get<bool>());
  EXPECT_TRUE(second["cache_hit"].get<bool>());
  EXPECT_EQ(first["computed_at"], second["computed_at"]);
  EXPECT_EQ(stable_part(first), stable_part(second));
  const CliRun text = run({"detect", "--spec", "D4+A3", "--cache-dir", dir.str()});
  EXPECT_NE(text.out.find("cache:    hit"), std::string::npos);
}

TEST(CliCache, HitMatchesFreshComputation) {
  TempDir dir;
  for (const char* spec : {"A7+A6+A3+A2", "E6+A2", "2*A1"}) {
    (void)detect_json({"--spec", spec, "--cache-dir", dir.str()});
    const auto hit = detect_json({"--spec", spec, "--cache-dir", dir.str()});
    const auto fresh = detect_json({"--spec", spec, "--no-cache"});
    ASSERT_TRUE(hit["cache_hit"].get<bool>()) << spec;
    EXPECT_FALSE(fresh["cache_hit"].get<bool>());
    EXPECT_EQ(stable_part(hit), stable_part(fresh)) << spec;
  }
}

TEST(CliCache, NoCacheWritesNothing) {
  TempDir dir;
  (void)detect_json({"--spec", "A2", "--cache-dir", dir.str(), "--no-cache"});
  EXPECT_TRUE(fs::is_empty(dir.path()));
}

TEST(CliCache, KeyDistinguishesModelAndT) {
  TempDir dir;
  (void)detect_json({"--spec", "A1", "--cache-dir", dir.str()});
  const auto sextic = detect_json({"--model", "sextic", "--spec", "A1", "--cache-dir", dir.str()});
  EXPECT_FALSE(sextic["cache_hit"].get<bool>());
  (void)detect_json({"--spec", "E8+E7+A4", "--tgram", "2,0,20", "--cache-dir", dir.str()});
  const auto other = detect_json({"--spec", "E8+E7+A4", "--tgram", "2,2,22", "--cache-dir", dir.str()});
  EXPECT_FALSE(other["cache_hit"].get<bool>());
}

TEST(CliCache, StaleVersionIsIgnored) {
  TempDir dir;
  (void)detect_json({"--spec", "A2", "--cache-dir", dir.str()});
  for (const auto& e : fs::directory_iterator(dir.path())) {
    auto j = read_json(e.path());
    j["version"] = "0.0.1";
    std::ofstream(e.path()) << j.dump();
  }
  EXPECT_FALSE(detect_json({"--spec", "A2", "--cache-dir", dir.str()})["cache_hit"].get<bool>());
}

TEST(CliCache, DirectoryPrecedence) {
  const char* saved = std::getenv("REALSTRATA_CACHE");
  const std::string keep = saved ? saved : "";
  ::unsetenv("REALSTRATA_CACHE");
  EXPECT_EQ(resolve_cache_dir(std::nullopt), fs::path(".realstrata-cache"));
  ::setenv("REALSTRATA_CACHE", "/tmp/from-env", 1);
  EXPECT_EQ(resolve_cache_dir(std::nullopt), fs::path("/tmp/from-env"));
  EXPECT_EQ(resolve_cache_dir(std::string("/tmp/from-flag")), fs::path("/tmp/from-flag"));
  if (saved) ::setenv("REALSTRATA_CACHE", keep.c_str(), 1);
  else ::unsetenv("REALSTRATA_CACHE");
}

// ---------------------------------------------------------------- batch

TEST(CliBatch, ExceptionalQuartics) {
  TempDir dir;
  const CliRun r = run({"batch", (kSamples / "exceptional_quartics.txt").string(), "--cache-dir", dir.str()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("summary: found 0, none 2, inconclusive 0, needs_T_gram 0, errors 0"), std::string::npos)
      << r.out;
}

TEST(CliBatch, SmallStrataAllFound) {
  TempDir dir;
  const CliRun r = run({"batch", (kSamples / "small_strata.txt").string(), "--cache-dir", dir.str()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("summary: found 3, none 0"), std::string::npos) << r.out;
  // every stratum lands in the cache
  EXPECT_EQ(std::distance(fs::directory_iterator(dir.path()), fs::directory_iterator{}), 3);
}

TEST(CliBatch, MixedWithRankNineteenAndJsonSummary) {
  TempDir dir;
  const fs::path summary = dir.path() / "summary.json";
  const CliRun r = run({"batch", (kSamples / "mixed.txt").string(), "--cache-dir", (dir.path() / "c").string(), "--json",
                     summary.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = read_json(summary);
  EXPECT_EQ(j["needs_T_gram"], 1);
  EXPECT_EQ(j["none"], 1);
  EXPECT_EQ(j["errors"], 0);
  EXPECT_EQ(j["found"].get<int>() + j["inconclusive"].get<int>(), 3);
}

TEST(CliBatch, EmptyFile) {
  TempDir dir;
  const auto file = dir.write("empty.txt", "# nothing here\n\n   \n");
  const CliRun r = run({"batch", file.string(), "--cache-dir", dir.str()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("summary: found 0, none 0, inconclusive 0, needs_T_gram 0, errors 0"), std::string::npos);
}

TEST(CliBatch, BadLineIsCountedAndContinues) {
  TempDir dir;
  const auto file = dir.write("bad.txt", "A1\nA1+X9\nA2\n");
  const CliRun r = run({"batch", file.string(), "--cache-dir", (dir.path() / "c").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("found 2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("errors 1"), std::string::npos);
  EXPECT_NE(r.err.find(":2:"), std::string::npos) << r.err;
}

TEST(CliBatch, MissingFile) { EXPECT_EQ(run({"batch", "/nonexistent/specs.txt", "--no-cache"}).code, 2); }

// ---------------------------------------------------------------- embed, autos, disc

TEST(CliEmbed, SampleForms) {
  const CliRun yes = run({"embed", "--sigma-plus", "3", "--sigma-minus", "17", "--form",
                       (kSamples / "forms" / "one_node_quartic.json").string()});
  EXPECT_EQ(yes.code, 0);
  EXPECT_NE(yes.out.find(": embeds"), std::string::npos) << yes.out;
  const CliRun no = run({"embed", "--sigma-plus", "2", "--sigma-minus", "18", "--form",
                      (kSamples / "forms" / "four_halves.json").string()});
  EXPECT_EQ(no.code, 3);
  EXPECT_NE(no.out.find("does not embed"), std::string::npos);
}

TEST(CliEmbed, InlineForm) {
  const CliRun r = run({"embed", "--sigma-plus", "1", "--sigma-minus", "1", "--form",
                     R"({"orders": [], "q": [], "b": []})"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(run({"embed", "--sigma-plus", "1", "--sigma-minus", "1", "--form", "{not json"}).code, 2);
}

TEST(CliAutos, Orders) {
  auto order_of = [](const std::string& t) {
    const CliRun r = run({"autos", "--tgram", t});
    EXPECT_EQ(r.code, 0);
    const auto pos = r.out.find("order ");
    return std::stoi(r.out.substr(pos + 6));
  };
  EXPECT_EQ(order_of("2,0,2"), 8);
  EXPECT_EQ(order_of("2,1,2"), 12);
  EXPECT_EQ(order_of("4,2,6"), 4);
  EXPECT_EQ(order_of("6,2,10"), 2);
  EXPECT_EQ(order_of("2,0,20"), 4);
  EXPECT_EQ(run({"autos", "--tgram", "1,2,1"}).code, 2);  // not positive definite
}

TEST(CliAutos, JsonListsElements) {
  const CliRun r = run({"autos", "--tgram", "2,1,2", "--json", "-"});
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["order"], 12);
  int reflections = 0;
  for (const auto& e : j["elements"]) reflections += e["reflection"].get<bool>();
  EXPECT_EQ(reflections, 6);
}

TEST(CliDisc, TextShowsSignedValues) {
  const CliRun r = run({"disc", "--model", "quartic", "--spec", "D7+A6+A3+A2"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("[1/4] + [-6/7] + [-3/4] + [-2/3] + [1/4]"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("<- h"), std::string::npos);
}

TEST(CliDisc, JsonTagsCoverEveryGenerator) {
  for (const char* spec : {"D7+A6+A3+A2", "A7+A6+A3+A2", "E6+A2", "2*A1", ""}) {
    const CliRun r = run({"disc", "--spec", spec, "--json", "-"});
    ASSERT_EQ(r.code, 0) << spec;
    const auto j = nlohmann::json::parse(r.out);
    const auto f = form_from_json(j["form"]);
    const PolarizedForm pf = polarized_disc(RootSpec::parse(spec), 4);
    EXPECT_EQ(f, pf.form) << spec;
    ASSERT_EQ(j["tags"].size(), f.rank());
    bool has_h = false;
    for (const auto& t : j["tags"]) has_h |= t["label"].get<std::string>().find('h') != std::string::npos;
    EXPECT_TRUE(has_h) << spec;
  }
}

// ---------------------------------------------------------------- golden reports and oracle

class CliGolden : public ::testing::TestWithParam<std::tuple<std::string, std::string, std::string>> {};

TEST_P(CliGolden, StablePartMatchesSample) {
  const auto& [model, spec, file] = GetParam();
  const fs::path golden = kSamples / "golden" / file;
  const auto expected = read_json(golden);
  for (const char* threads : {"1", "4"}) {
    const auto got = stable_part(detect_json({"--model", model, "--spec", spec, "--no-cache", "--threads", threads}));
    EXPECT_EQ(got, expected) << spec << " threads " << threads;
    EXPECT_EQ(got.dump(2) + "\n", read_text(golden)) << "byte drift in " << file;
  }
}

INSTANTIATE_TEST_SUITE_P(
    Samples, CliGolden,
    ::testing::Values(std::make_tuple("quartic", "A7+A6+A3+A2", "quartic_A7+A6+A3+A2.json"),
                      std::make_tuple("quartic", "D7+A6+A3+A2", "quartic_D7+A6+A3+A2.json"),
                      std::make_tuple("sextic", "A7+A6+A5", "sextic_A7+A6+A5.json"),
                      std::make_tuple("quartic", "A1", "quartic_A1.json")),
    [](const auto& info) {
      std::string n = std::get<0>(info.param) + "_" + std::get<1>(info.param);
      for (char& c : n)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
      return n;
    });

TEST(CliOracle, AgreesOnWitnessAndExhaustiveTraces) {
  for (const char* spec : {"A1", "2*A1", "A7+A6+A3+A2", "D7+A6+A3+A2"}) {
    const CliRun r = run({"detect", "--spec", spec, "--no-cache", "--oracle", "--json", "-"});
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_TRUE(j.contains("oracle")) << spec;
    EXPECT_TRUE(j["oracle"]["checked"].get<bool>()) << spec;
    EXPECT_TRUE(j["oracle"]["agrees"].get<bool>()) << spec;
    EXPECT_TRUE(r.code == 0 || r.code == 3);
  }
}

TEST(CliOracle, TextMentionsOracle) {
  const CliRun r = run({"detect", "--model", "sextic", "--spec", "A7+A6+A5", "--no-cache", "--oracle"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("oracle:"), std::string::npos);
  EXPECT_NE(r.out.find("\"agrees\":true"), std::string::npos) << r.out;
}
