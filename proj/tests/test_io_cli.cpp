#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "klap/eot.hpp"
#include "klap/io.hpp"
#include "klap/rng.hpp"
#include "klap/scenario.hpp"
#include "klap/scenarios.hpp"
#include "klap/solver.hpp"

using namespace klap;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("klap_test_" + tag + "_" + std::to_string(++counter));
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

#ifdef KLAP_CLI_PATH
int run_cli(const std::string& args) {
  const std::string command = std::string("\"") + KLAP_CLI_PATH + "\" " +
                              args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}
#endif

const char* kTwoStateConfig = R"({
  "klap_config": 1,
  "kernel": {"type": "file", "path": "kernel.txt"},
  "p_data": {"vector": [0.3, 0.7]},
  "solver": {"lambda": 0.0, "gamma": 1.0, "max_iterations": 100000,
             "fixed_point_tolerance": 1e-11, "record_every": 1, "seed": 3}
})";

}  // namespace

TEST_CASE("g17 formatting round-trips doubles exactly") {
  RngStream rng(31, "format");
  for (int i = 0; i < 500; ++i) {
    double v = (rng.next_unit() - 0.5) * std::pow(10.0, (i % 61) - 30);
    const double parsed = std::strtod(format_g17(v).c_str(), nullptr);
    CHECK(parsed == v);
  }
  CHECK(format_g17(0.0) == "0");
  CHECK(format_g17(0.5) == "0.5");
}

TEST_CASE("kernel text format round trip") {
  RngStream rng(32, "kernel_io");
  const auto kernel = random_kernel(rng, 5, 3);
  const std::string text = kernel_to_text(kernel);
  CHECK(text.rfind("klap-kernel v1 5 3\n", 0) == 0);
  const auto restored = kernel_from_text(text, "restored");
  CHECK(restored.entries() == kernel.entries());  // bitwise
  CHECK(restored.output_size() == 5);
  CHECK(restored.input_size() == 3);

  CHECK_THROWS_AS(kernel_from_text("klap-coupling v1 2 2\n1 0\n0 1\n", "x"),
                  DomainError);
  CHECK_THROWS_AS(kernel_from_text("klap-kernel v1 2 2\n1 0\n", "x"),
                  DomainError);
}

TEST_CASE("coupling text format round trip") {
  RngStream rng(33, "coupling_io");
  const auto kernel = support_floor(random_kernel(rng, 4, 3), 1e-2);
  const auto p = random_distribution(rng, 3);
  const auto q = random_distribution(rng, 4);
  const Coupling pi = inner_coupling(p, q, cost_matrix(kernel));
  const std::string text = coupling_to_text(pi);
  CHECK(text.rfind("klap-coupling v1 3 4\n", 0) == 0);
  const Coupling restored = coupling_from_text(text);
  CHECK(restored.joint == pi.joint);
}

TEST_CASE("trajectory csv renders absent probes as empty fields") {
  const auto two = two_state_instance();
  const auto q = apply(two.kernel, two.p_data);
  SolverConfig config;
  config.max_iterations = 50;
  config.fixed_point_tolerance = 1e-9;
  config.record_every = 10;
  const Trajectory t =
      solve(two.kernel, q, nullptr, config, FiniteDistribution::uniform(2));
  const std::string csv = trajectory_to_csv(t);
  CHECK(csv.rfind("k,J_lambda,kl_q_Trp,kl_hdagger_p,residual,tv_to_reference\n",
                  0) == 0);
  // No probes supplied: the kl_hdagger_p and tv_to_reference columns stay
  // empty, e.g. ",,", and each data row ends with ','.
  const std::size_t first_row = csv.find('\n') + 1;
  const std::string row = csv.substr(first_row, csv.find('\n', first_row) -
                                                    first_row);
  CHECK(row.find(",,") != std::string::npos);
  CHECK(row.back() == ',');
}

TEST_CASE("atomic writer creates parents and replaces content") {
  const fs::path dir = make_temp_dir("atomic");
  const fs::path file = dir / "nested" / "out.txt";
  write_text_file_atomic(file.string(), "one");
  CHECK(read_text_file(file.string()) == "one");
  write_text_file_atomic(file.string(), "two");
  CHECK(read_text_file(file.string()) == "two");
  CHECK_FALSE(fs::exists(file.string() + ".tmp"));
}

TEST_CASE("scenario parsing accepts a full document") {
  const std::string text = R"({
    "klap_config": 1,
    "kernel": {"type": "additive_noise", "alphabet_size": 4,
               "noise": [0.7, 0.1, 0.1, 0.1], "boundary": "cyclic"},
    "support_floor": 1e-6,
    "p_data": {"family": "geometric", "alphabet_size": 4, "rho": 0.5},
    "prior": {"sample_count": 50, "smoothing": 0.5},
    "noisy_samples": {"count": 1000, "smoothing": 0},
    "solver": {"weight": 0.2, "gamma": 0.5, "max_iterations": 100,
               "fixed_point_tolerance": 1e-9, "record_every": 5, "seed": 11},
    "sweep": {"weights": [0, 0.2], "gammas": [1.0], "clean_counts": [10, 50]},
    "sample": {"count": 100},
    "outputs": {"trajectory": "t.csv", "report": "r.csv"}
  })";
  const ScenarioConfig config = parse_scenario(text, ".");
  CHECK(config.kernel.input_size() == 4);
  CHECK(config.support_floor_eps == 1e-6);
  CHECK(config.solver.lambda == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(config.solver.gamma == 0.5);
  CHECK(config.prior_sample_count.value() == 50);
  CHECK(config.noisy_count.value() == 1000);
  CHECK(config.sweep_weights.size() == 2);
  CHECK(config.sweep_clean_counts.size() == 2);
  CHECK(config.sample_count.value() == 100);
  CHECK(config.trajectory_path == "t.csv");
  CHECK(config.solver_kernel().label() == "additive_noise+floor");
}

TEST_CASE("scenario parsing is strict") {
  CHECK_THROWS_AS(parse_scenario("{\"kernel\": {\"type\": \"identity\", "
                                 "\"alphabet_size\": 2}}",
                                 "."),
                  ConfigError);  // missing klap_config
  CHECK_THROWS_AS(
      parse_scenario(R"({"klap_config": 1,
                     "kernel": {"type": "identity", "alphabet_size": 2},
                     "typo_key": 3})",
                     "."),
      ConfigError);
  CHECK_THROWS_AS(
      parse_scenario(R"({"klap_config": 1,
                     "kernel": {"type": "identity", "alphabet_size": 2},
                     "solver": {"lambda": 0.1, "weight": 0.2}})",
                     "."),
      ConfigError);
  CHECK_THROWS_AS(
      parse_scenario(R"({"klap_config": 2,
                     "kernel": {"type": "identity", "alphabet_size": 2}})",
                     "."),
      ConfigError);

  // Parse errors carry the line number of the offending token.
  try {
    parse_scenario("{\n  \"klap_config\": 1,\n  broken\n}", ".");
    CHECK(false);
  } catch (const ConfigError& err) {
    CHECK(std::string(err.what()).find("line 3") != std::string::npos);
  }
}

#ifdef KLAP_CLI_PATH

TEST_CASE("cli solve writes deterministic artifacts and exit codes") {
  const fs::path dir = make_temp_dir("cli_solve");
  const auto two = two_state_instance();
  write_file(dir / "kernel.txt", kernel_to_text(two.kernel));
  write_file(dir / "config.json", kTwoStateConfig);

  const std::string args = "solve --config " + (dir / "config.json").string() +
                           " --out " + dir.string();
  CHECK(run_cli(args) == 0);
  const std::string first = read_text_file((dir / "trajectory.csv").string());
  const std::string summary = read_text_file((dir / "summary.json").string());
  CHECK(summary.find("\"converged\": true") != std::string::npos);
  CHECK(summary.find("\"injective\": true") != std::string::npos);
  const auto parsed = nlohmann::json::parse(summary);
  CHECK(parsed["final_tv_to_pdata"].get<double>() <= 1e-7);

  CHECK(run_cli(args) == 0);
  CHECK(read_text_file((dir / "trajectory.csv").string()) == first);

  // Exit 2 when the iteration cap preempts convergence.
  std::string capped = kTwoStateConfig;
  const auto pos = capped.find("\"max_iterations\": 100000");
  capped.replace(pos, std::string("\"max_iterations\": 100000").size(),
                 "\"max_iterations\": 2");
  write_file(dir / "capped.json", capped);
  CHECK(run_cli("solve --config " + (dir / "capped.json").string() +
                " --out " + dir.string()) == 2);

  // A degenerate kernel is stationary at p0: immediate success, with the
  // summary flagging non-injectivity.
  write_file(dir / "constant.json", R"({
    "klap_config": 1,
    "kernel": {"type": "deterministic_map", "map": [0, 0], "output_size": 2},
    "p_data": {"vector": [0.3, 0.7]},
    "outputs": {"trajectory": "const_t.csv", "summary": "const_s.json"}
  })");
  CHECK(run_cli("solve --config " + (dir / "constant.json").string() +
                " --out " + dir.string()) == 0);
  const std::string const_summary =
      read_text_file((dir / "const_s.json").string());
  CHECK(const_summary.find("\"iterations\": 0") != std::string::npos);
  CHECK(const_summary.find("\"injective\": false") != std::string::npos);
}

TEST_CASE("cli identify distinguishes kernels by exit code") {
  const fs::path dir = make_temp_dir("cli_identify");
  write_file(dir / "id.json", R"({"klap_config": 1,
    "kernel": {"type": "identity", "alphabet_size": 3}})");
  CHECK(run_cli("identify --config " + (dir / "id.json").string()) == 0);

  write_file(dir / "gray.json", R"({"klap_config": 1,
    "kernel": {"type": "deterministic_map", "map": [0, 0, 1, 1],
               "output_size": 2}})");
  CHECK(run_cli("identify --config " + (dir / "gray.json").string()) == 3);

  write_file(dir / "masked.json", R"({"klap_config": 1,
    "kernel": {"type": "dropout", "num_coordinates": 1, "levels": 2,
               "alpha": 1.0}})");
  CHECK(run_cli("identify --config " + (dir / "masked.json").string()) == 3);

  write_file(dir / "broken.json", "{\"klap_config\": 1");
  CHECK(run_cli("identify --config " + (dir / "broken.json").string()) == 1);
  CHECK(run_cli("identify --config " + (dir / "missing.json").string()) == 1);
  CHECK(run_cli("no_such_subcommand") == 1);
}

TEST_CASE("cli sample and sweep write their reports") {
  const fs::path dir = make_temp_dir("cli_sample");
  write_file(dir / "config.json", R"({
    "klap_config": 1,
    "kernel": {"type": "blur", "alphabet_size": 8,
               "stencil": [0.125, 0.375, 0.375, 0.125], "boundary": "cyclic"},
    "p_data": {"family": "random", "alphabet_size": 8, "seed": 4},
    "noisy_samples": {"count": 500},
    "solver": {"weight": 0.2, "max_iterations": 300, "seed": 4},
    "sweep": {"weights": [0, 0.2], "clean_counts": [10, 50]},
    "sample": {"count": 200}
  })");
  CHECK(run_cli("sample --config " + (dir / "config.json").string() +
                " --out " + dir.string()) == 0);
  const std::string samples = read_text_file((dir / "samples.csv").string());
  CHECK(samples.rfind("outcome\n", 0) == 0);
  const std::string histogram =
      read_text_file((dir / "empirical.csv").string());
  CHECK(histogram.rfind("symbol,weight\n", 0) == 0);

  CHECK(run_cli("sweep --config " + (dir / "config.json").string() +
                " --out " + dir.string()) == 0);
  const std::string report = read_text_file((dir / "report.csv").string());
  CHECK(report.rfind("clean_count,noisy_count,lambda_weight,gamma,", 0) == 0);
  // 2 clean counts x 2 weights.
  CHECK(std::count(report.begin(), report.end(), '\n') == 5);

  // Repeat run is byte-identical.
  CHECK(run_cli("sweep --config " + (dir / "config.json").string() +
                " --out " + dir.string()) == 0);
  CHECK(read_text_file((dir / "report.csv").string()) == report);

  // Without sweep axes the sweep degenerates to the solver's own
  // configuration: exactly one report row.
  write_file(dir / "single.json", R"({
    "klap_config": 1,
    "kernel": {"type": "blur", "alphabet_size": 8,
               "stencil": [0.125, 0.375, 0.375, 0.125], "boundary": "cyclic"},
    "p_data": {"family": "random", "alphabet_size": 8, "seed": 4},
    "noisy_samples": {"count": 500},
    "prior": {"sample_count": 25},
    "solver": {"weight": 0.2, "max_iterations": 300, "seed": 4},
    "outputs": {"report": "single_report.csv"}
  })");
  CHECK(run_cli("sweep --config " + (dir / "single.json").string() +
                " --out " + dir.string()) == 0);
  const std::string single =
      read_text_file((dir / "single_report.csv").string());
  CHECK(std::count(single.begin(), single.end(), '\n') == 2);
  CHECK(single.find("\n25,500,0.2") != std::string::npos);
}

#endif  // KLAP_CLI_PATH
