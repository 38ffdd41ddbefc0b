#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdm/cli.hpp"
#include "fdm/io.hpp"

using namespace fdm;
namespace fs = std::filesystem;

namespace {

const fs::path kData = FDM_TEST_DATA_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "fdm");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("fdm_cli_test_" + std::to_string(::getpid()));
  Scratch() { fs::create_directories(dir); }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += line.rfind(prefix, 0) == 0;
  return n;
}

}  // namespace

TEST_CASE("solve writes results and obj") {
  Scratch tmp;
  const auto r = run({"solve", (kData / "chain.json").string(), "--out", tmp / "r.json", "--obj", tmp / "chain.obj"});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  const auto obj = read_text(tmp / "chain.obj");
  CHECK(count_lines(obj, "v ") == 3);
  CHECK(count_lines(obj, "l ") == 2);
  const auto results = io::parse_json_text(read_text(tmp / "r.json"), "results");
  CHECK(results["vertices"][1]["xyz"] == io::Json::array({1.0, 0.0, -0.5}));
}

TEST_CASE("solve prints results to stdout without --out") {
  const auto r = run({"solve", (kData / "chain.json").string()});
  CHECK(r.code == 0);
  const auto results = io::parse_json_text(r.out, "stdout");
  CHECK(results["edges"].size() == 2);
}

TEST_CASE("input errors exit with 1 and one structured line") {
  const auto r = run({"optimize", (kData / "no_supports_job.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("NoSupports") != std::string::npos);
  CHECK(r.err.rfind("error: code=", 0) == 0);
  CHECK(count_lines(r.err, "error:") == 1);

  CHECK(run({"solve", (kData / "unknown_vertex.json").string()}).code == 1);
  CHECK(run({"solve", (kData / "missing.json").string()}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"optimize", (kData / "chain_job.json").string(), "--method", "newton"}).code == 1);
  CHECK(run({}).code == 1);
}

TEST_CASE("help exits cleanly") {
  const auto r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("solve") != std::string::npos);
}

TEST_CASE("gradcheck on the chain job") {
  const auto r = run({"gradcheck", (kData / "chain_job.json").string()});
  CHECK(r.code == 0);
  const auto pos = r.out.find("max_relative_error=");
  REQUIRE(pos != std::string::npos);
  CHECK(std::strtod(r.out.c_str() + pos + 19, nullptr) < 1e-5);

  CHECK(run({"gradcheck", (kData / "mixed_job.json").string(), "--h", "1e-6"}).code == 0);
}

TEST_CASE("optimize reaches the chain optimum") {
  Scratch tmp;
  const auto r = run({"optimize", (kData / "chain_job.json").string(), "--out", tmp / "opt.json", "--obj",
                      tmp / "opt.obj"});
  CHECK(r.code == 0);
  const auto results = io::parse_json_text(read_text(tmp / "opt.json"), "results");
  CHECK(results["optimization"]["best_loss"].get<double>() < 1e-10);
  CHECK(results["edges"][0]["q"].get<double>() == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(results["optimization"]["loss_history"].size() == results["optimization"]["iterations"].get<std::size_t>());
  CHECK(fs::exists(tmp / "opt.obj"));
}

TEST_CASE("command line flags override the job file") {
  Scratch tmp;
  const auto r = run({"optimize", (kData / "chain_job.json").string(), "--out", tmp / "o.json", "--max-iter", "3",
                      "--method", "sgd", "--lr", "0.001"});
  CHECK(r.code == 0);
  const auto opt = io::parse_json_text(read_text(tmp / "o.json"), "results")["optimization"];
  CHECK(opt["iterations"] == 4);
  // dL/dq = 2 (z + 0.25) / (q1 + q2)^2 = -0.125 at q = 1, so three sgd steps of
  // lr 0.001 add about 3.75e-4. Adam at the job's lr would move q by about 0.03.
  const auto q = io::parse_json_text(read_text(tmp / "o.json"), "results")["network"]["edges"][0]["q"];
  CHECK(q.get<double>() == doctest::Approx(1.000375).epsilon(1e-6));
}

TEST_CASE("numerical failure mid-run exits with 2 and still writes the best parameters") {
  Scratch tmp;
  const auto r = run({"optimize", (kData / "singular_job.json").string(), "--out", tmp / "s.json"});
  CHECK(r.code == 2);
  CHECK(r.err.find("SingularMatrix") != std::string::npos);
  const auto results = io::parse_json_text(read_text(tmp / "s.json"), "results");
  CHECK(results["optimization"]["termination"] == "SingularMatrix");
  CHECK(results["edges"][0]["q"].get<double>() == 1.0);
}

TEST_CASE("output files are deterministic") {
  Scratch tmp;
  for (const char* name : {"a.json", "b.json"})
    REQUIRE(run({"optimize", (kData / "mixed_job.json").string(), "--out", tmp / name}).code == 0);
  CHECK(read_text(tmp / "a.json") == read_text(tmp / "b.json"));
}

TEST_CASE("verbose progress goes to stderr") {
  Scratch tmp;
  const auto r = run({"optimize", (kData / "chain_job.json").string(), "--out", tmp / "v.json", "--max-iter", "150",
                      "--verbose"});
  CHECK(r.code == 0);
  CHECK(count_lines(r.err, "iter") == 2);
  CHECK(r.err.find("done:") != std::string::npos);
}
