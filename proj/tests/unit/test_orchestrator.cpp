#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sgl/errors.hpp"
#include "sgl/orchestrator.hpp"

using namespace sgl;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kSmall = R"(
[model]
alpha = 0.5
beta = 0.5
d = 1

[grid]
box_length = 40.0
points = 64

[forcing]
modes = [ { wave_vector = [0.3141592653589793], amplitude = 0.5, phase = 0.0, group = 0 } ]

[solver]
dt = 0.05
t_end = 2.0
record_stride = 4
checkpoint_times = [1.0]

[[observables]]
name = "sup_w"
kind = "sup_norm_window"
side = 10.0

[ensemble]
size = 4
base_seed = 5

[pair]
pairs = 3
eps_list = [1e-6]
side = 20.0
shrink = 0.5
t_burn = 1.0
t_end = 2.0
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sgl_orch_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::string& command, const fs::path& config, const fs::path& out_dir, int threads = 1) {
  CommandOptions o;
  o.out = out_dir;
  o.threads = threads;
  std::ostringstream out, err;
  const int code = run_command(command, config, o, out, err);
  return {code, out.str(), err.str()};
}

std::string error_code(const Run& r) { return json::parse(r.err)["error"]["code"].get<std::string>(); }

}  // namespace

TEST_CASE("FNV-1a test vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(kSmall);
  CHECK(c.model.alpha == 0.5);
  CHECK(c.grid.points_per_dim == 64);
  CHECK(c.ensemble_size == 4);
  CHECK(c.source == kSmall);
  CHECK_NOTHROW(c.validate());

  auto code_of = [](const std::string& text) {
    try {
      parse_config(text).validate();
    } catch (const ValidationError& e) {
      return e.code();
    }
    return std::string("none");
  };
  CHECK(code_of(kSmall + "\n[bogus]\nx = 1\n") == "config_invalid");
  CHECK(code_of("[model]\nalpha = 0.5\nbeta = 0.5\nunknown_key = 2\n") == "config_invalid");
  CHECK(code_of("[model]\nalpha = \"half\"\n") == "config_invalid");
  CHECK(code_of("[model\nalpha = 0.5\n") == "config_invalid");
  CHECK(code_of("[model]\nalpha = 0.5\nbeta = 0.5\nd = 3\n") == "dimension_unsupported");
}

TEST_CASE("exit codes and JSON errors") {
  const fs::path dir = scratch("codes");
  const fs::path good = write_file(dir / "good.toml", kSmall);

  const Run ok = run("check", good, dir / "check");
  CHECK(ok.code == 0);
  CHECK(json::parse(ok.out).contains("margin"));

  const Run missing = run("check", dir / "absent.toml", dir / "x");
  CHECK(missing.code == 3);
  CHECK(json::parse(missing.err)["error"]["kind"] == "io");

  const Run invalid = run("check", write_file(dir / "bad.toml", "[model]\nalpha = 0.5\nwat = 1\n"), dir / "x");
  CHECK(invalid.code == 1);
  CHECK(error_code(invalid) == "config_invalid");

  const Run unsat = run("check", write_file(dir / "unsat.toml", "[model]\nalpha = 2.0\nbeta = -2.0\n"), dir / "u");
  CHECK(unsat.code == 1);
  CHECK(error_code(unsat) == "hypothesis_unsatisfied");

  const std::string huge = kSmall + "\n[initial]\nkind = \"constant\"\nvalue = [1e150, 0.0]\n";
  const Run blow = run("simulate", write_file(dir / "blow.toml", huge), dir / "b");
  CHECK(blow.code == 2);
  CHECK(json::parse(blow.err)["error"]["kind"] == "runtime");

  // The output directory would have to live below a regular file.
  write_file(dir / "plain", "x");
  const Run io = run("check", good, dir / "plain" / "sub");
  CHECK(io.code == 3);

  CHECK(run("frobnicate", good, dir / "f").code == 1);
}

TEST_CASE("manifest lists every artifact once") {
  const fs::path dir = scratch("manifest");
  const fs::path cfg = write_file(dir / "c.toml", kSmall);
  REQUIRE(run("simulate", cfg, dir / "out").code == 0);
  const json m = json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(m["command"] == "simulate");
  CHECK(m["base_seed"] == 5);
  CHECK(m["realization_seeds"].size() == 4);
  CHECK(m["config_hash"] == "fnv1a64:" + fnv1a_hex(slurp(dir / "out" / "config.toml")));
  CHECK(slurp(dir / "out" / "config.toml") == kSmall);

  std::set<std::string> listed;
  for (const auto& a : m["artifacts"]) {
    CHECK(listed.insert(a.get<std::string>()).second);
    CHECK(fs::exists(dir / "out" / a.get<std::string>()));
  }
  for (const auto& [rel, _] : artifacts(dir / "out")) CHECK(listed.count(rel) == 1);
  CHECK(m["timings_seconds"].contains("total"));
}

TEST_CASE("seed override") {
  const fs::path dir = scratch("seed");
  const fs::path cfg = write_file(dir / "c.toml", kSmall);
  CommandOptions o;
  o.out = dir / "a";
  o.seed = 99;
  std::ostringstream out, err;
  REQUIRE(run_command("simulate", cfg, o, out, err) == 0);
  CHECK(json::parse(slurp(dir / "a" / "manifest.json"))["base_seed"] == 99);
}

TEST_CASE("outputs do not depend on the thread count") {
  const fs::path dir = scratch("threads");
  const fs::path cfg = write_file(dir / "c.toml", kSmall);
  for (const std::string cmd : {"simulate", "pair"}) {
    REQUIRE(run(cmd, cfg, dir / (cmd + "1"), 1).code == 0);
    const auto ref = artifacts(dir / (cmd + "1"));
    CHECK(ref.size() > 2);
    for (int t : {4, 8}) {
      const fs::path o = dir / (cmd + std::to_string(t));
      REQUIRE(run(cmd, cfg, o, t).code == 0);
      CHECK(artifacts(o) == ref);
    }
  }
}

TEST_CASE("thread resolution") {
  CHECK(resolve_threads(3) == 3);
  setenv("SGL_THREADS", "5", 1);
  CHECK(resolve_threads(std::nullopt) == 5);
  setenv("SGL_THREADS", "junk", 1);
  CHECK(resolve_threads(std::nullopt) == 1);
  unsetenv("SGL_THREADS");
  CHECK(resolve_threads(std::nullopt) == 1);
}

TEST_CASE("command-line front end") {
  const fs::path dir = scratch("cli");
  const std::string cli = SGL_CLI_PATH;
  const std::string check = std::string(SGL_SOURCE_DIR) + "/configs/check.toml";
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  CHECK(status(cli + " check --config " + check + " --out " + (dir / "c").string()) == 0);
  CHECK(fs::exists(dir / "c" / "manifest.json"));
  CHECK(status(cli + " --version") == 0);
  CHECK(status(cli) == 1);
  CHECK(status(cli + " check") == 1);
  CHECK(status(cli + " check --config " + (dir / "nope.toml").string()) == 1);
  CHECK(status(cli + " check --config " + check + " --threads 0") == 1);
}
