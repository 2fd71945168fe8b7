#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpl/experiments.hpp"

using namespace fpl;
using namespace fpl::experiments;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("fpl_unit_" + name);
  fs::remove_all(d);
  return d;
}

std::string value_of(const std::string& summary, const std::string& key) {
  std::istringstream in(summary);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
  return {};
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no throw");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("config parsing") {
  auto c = Config::parse("# header\nf = 8\n  samples=  1000   # trailing\n\ntimes = 0.1, 1 ,7.3\n");
  CHECK(c.values.size() == 3);
  CHECK(c.values.at("f") == "8");
  CHECK(c.values.at("samples") == "1000");
  CHECK(c.values.at("times") == "0.1, 1 ,7.3");
  CHECK(code_of([] { Config::parse("f = 1\nf = 2\n"); }) == Errc::InvalidArgument);
  CHECK(code_of([] { Config::parse("just a line\n"); }) == Errc::InvalidArgument);
}

TEST_CASE("schema validation") {
  CHECK(schemas().size() == 9);
  CHECK(code_of([] { schema("no-such-thing"); }) == Errc::UnknownExperiment);
  CHECK(code_of([] { run_experiment("haar-moments", Config{}, 1); }) == Errc::MissingParameter);
  CHECK(code_of([] { run_experiment("haar-moments", Config::parse("f = 4\nbogus = 1\n"), 1); }) ==
        Errc::InvalidArgument);
  CHECK(code_of([] { run_experiment("haar-moments", Config::parse("f = four\n"), 1); }) == Errc::InvalidArgument);

  Params p(schema("trajectory-approx"), Config::parse("sides = 4, 8\n"));
  CHECK(p.get_int_list("sides") == std::vector<long>{4, 8});
  CHECK(p.get_real("omega") == 1.0);
  CHECK(p.resolved().front().first == "omega");
}

TEST_CASE("summary format") {
  Report r;
  r.experiment = "demo";
  r.seed = 7;
  r.add("x", 0.1);
  r.add("n", 3);
  r.add("ok", true);
  r.criterion("c", false);
  CHECK(render_summary(r) ==
        "schema_version = 1\nexperiment = demo\nseed = 7\nx = 0.10000000000000001\nn = 3\nok = true\n"
        "criterion.c = fail\nall_pass = false\n");
  Table t{"demo", {"a", "b"}, {{"1", "2"}}};
  CHECK(render_table(t) == "a,b\n1,2\n");
}

TEST_CASE("empty table list writes the summary only") {
  Report r;
  r.experiment = "demo";
  auto dir = scratch("summary_only");
  auto files = write_report(r, dir, false);
  CHECK(files.size() == 1);
  CHECK(files[0].filename() == "summary.txt");
  fs::remove_all(dir);
}

TEST_CASE("runs are deterministic and protected against overwrite") {
  auto cfg = Config::parse("f = 4\nsamples = 2000\nkernel_samples = 1000\n");
  auto a = run_experiment("haar-moments", cfg, 42);
  auto b = run_experiment("haar-moments", cfg, 42);
  CHECK(render_summary(a) == render_summary(b));
  CHECK(value_of(render_summary(a), "param.samples") == "2000");
  CHECK(value_of(render_summary(a), "param.f") == "4");

  auto dir = scratch("overwrite");
  write_report(a, dir, false);
  std::string first = slurp(dir / "summary.txt");
  CHECK(code_of([&] { write_report(b, dir, false); }) == Errc::WriteFailure);
  CHECK_NOTHROW(write_report(b, dir, true));
  CHECK(slurp(dir / "summary.txt") == first);
  CHECK(slurp(dir / "moments.csv").rfind("quantity,mean_re,mean_im,se_re,se_im,target,deviation_se,pass\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("mixing-singlet table schema") {
  auto r = run_experiment("mixing-singlet", Config::parse("grid = 1024\nbump_width = 128\nepsilons = 16, 8\n"), 1);
  REQUIRE(r.tables.size() == 1);
  CHECK(r.tables[0].header == std::vector<std::string>{"epsilon_cells", "observable", "value", "target", "abs_error"});
  CHECK(r.tables[0].rows.size() == 10);
}

TEST_CASE("small runs of every experiment pass") {
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"det-moments", "f = 4\nsamples = 20000\nextraction_samples = 2000\n"},
      {"subsystem-density", "systems = 5\nminor_matrices = 10\n"},
      {"nogo-singlet", "samples = 500\n"},
      {"action-minimize", "restarts = 2\nmax_iterations = 100\nrandom_samples = 30\nspectrum_trials = 5\n"},
      {"oscillator-intertwine", ""},
      {"trajectory-approx", "sides = 4, 8, 16\n"},
      {"holographic-coherence", ""},
  };
  for (const auto& [name, text] : runs) {
    CAPTURE(name);
    auto r = run_experiment(name, Config::parse(text), 5);
    CHECK(!r.criteria.empty());
    CHECK(r.all_pass());
  }
}
