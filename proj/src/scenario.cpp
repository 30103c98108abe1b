#include "klap/scenario.hpp"

#include <filesystem>

#include <json.hpp>

#include "klap/io.hpp"
#include "klap/rng.hpp"

namespace klap {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) known = true;
    }
    if (!known) fail(path, "unknown key '" + it.key() + "'");
  }
}

double get_number(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(path, std::string("missing key '") + key + "'");
  if (!obj[key].is_number()) fail(path + "." + key, "expected a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(path, std::string("missing key '") + key + "'");
  if (!obj[key].is_number_integer()) fail(path + "." + key, "expected an integer");
  return obj[key].get<int>();
}

std::string get_string(const json& obj, const std::string& path,
                       const char* key) {
  if (!obj.contains(key)) fail(path, std::string("missing key '") + key + "'");
  if (!obj[key].is_string()) fail(path + "." + key, "expected a string");
  return obj[key].get<std::string>();
}

std::vector<double> get_vector(const json& obj, const std::string& path,
                               const char* key) {
  if (!obj.contains(key)) fail(path, std::string("missing key '") + key + "'");
  if (!obj[key].is_array()) fail(path + "." + key, "expected an array");
  std::vector<double> v;
  for (const json& item : obj[key]) {
    if (!item.is_number()) fail(path + "." + key, "expected numeric entries");
    v.push_back(item.get<double>());
  }
  return v;
}

Boundary parse_boundary(const json& obj, const std::string& path) {
  const std::string b =
      obj.contains("boundary") ? obj["boundary"].get<std::string>() : "cyclic";
  if (b == "cyclic") return Boundary::cyclic;
  if (b == "clipped") return Boundary::clipped;
  fail(path + ".boundary", "expected 'cyclic' or 'clipped'");
}

CorruptionKernel parse_kernel(const json& spec, const std::string& base_dir) {
  const std::string path = "kernel";
  if (!spec.is_object()) fail(path, "expected an object");
  const std::string type = get_string(spec, path, "type");
  if (type == "identity") {
    reject_unknown_keys(spec, path, {"type", "alphabet_size"});
    return identity_kernel(get_int(spec, path, "alphabet_size"));
  }
  if (type == "additive_noise") {
    reject_unknown_keys(spec, path,
                        {"type", "alphabet_size", "noise", "boundary"});
    return additive_noise_kernel(get_int(spec, path, "alphabet_size"),
                                 normalize(get_vector(spec, path, "noise")),
                                 parse_boundary(spec, path));
  }
  if (type == "blur") {
    reject_unknown_keys(spec, path,
                        {"type", "alphabet_size", "stencil", "boundary"});
    return blur_kernel(get_int(spec, path, "alphabet_size"),
                       normalize(get_vector(spec, path, "stencil")),
                       parse_boundary(spec, path));
  }
  if (type == "dropout") {
    reject_unknown_keys(spec, path,
                        {"type", "num_coordinates", "levels", "alpha"});
    return dropout_kernel(get_int(spec, path, "num_coordinates"),
                          get_int(spec, path, "levels"),
                          get_number(spec, path, "alpha"));
  }
  if (type == "deterministic_map") {
    reject_unknown_keys(spec, path, {"type", "map", "output_size"});
    std::vector<int> map;
    for (double v : get_vector(spec, path, "map")) {
      map.push_back(static_cast<int>(v));
    }
    return deterministic_map_kernel(map, get_int(spec, path, "output_size"));
  }
  if (type == "poisson") {
    reject_unknown_keys(
        spec, path, {"type", "intensity_levels", "alpha", "truncation"});
    const double alpha = get_number(spec, path, "alpha");
    const int truncation = spec.contains("truncation")
                               ? get_int(spec, path, "truncation")
                               : poisson_default_truncation(alpha);
    return poisson_kernel(get_int(spec, path, "intensity_levels"), alpha,
                          truncation);
  }
  if (type == "file") {
    reject_unknown_keys(spec, path, {"type", "path"});
    const std::filesystem::path file =
        std::filesystem::path(base_dir) / get_string(spec, path, "path");
    return kernel_from_text(read_text_file(file.string()),
                            "file:" + file.string());
  }
  fail(path + ".type", "unknown kernel type '" + type + "'");
}

FiniteDistribution parse_distribution(const json& spec,
                                      const std::string& path) {
  if (!spec.is_object()) fail(path, "expected an object");
  if (spec.contains("vector")) {
    reject_unknown_keys(spec, path, {"vector"});
    return normalize(get_vector(spec, path, "vector"));
  }
  const std::string family = get_string(spec, path, "family");
  if (family == "uniform") {
    reject_unknown_keys(spec, path, {"family", "alphabet_size"});
    return FiniteDistribution::uniform(get_int(spec, path, "alphabet_size"));
  }
  if (family == "random") {
    reject_unknown_keys(spec, path, {"family", "alphabet_size", "seed"});
    const std::uint64_t seed =
        spec.contains("seed") ? spec["seed"].get<std::uint64_t>() : 0;
    RngStream rng(seed, "p_data");
    return FiniteDistribution::from_weights_repaired(
        random_simplex_point(rng, get_int(spec, path, "alphabet_size")));
  }
  if (family == "geometric") {
    reject_unknown_keys(spec, path, {"family", "alphabet_size", "rho"});
    const int n = get_int(spec, path, "alphabet_size");
    const double rho = get_number(spec, path, "rho");
    if (!(rho > 0.0)) fail(path + ".rho", "must be > 0");
    std::vector<double> w(n);
    double v = 1.0;
    for (int i = 0; i < n; ++i, v *= rho) w[i] = v;
    return normalize(w);
  }
  fail(path + ".family", "unknown family '" + family + "'");
}

}  // namespace

CorruptionKernel ScenarioConfig::solver_kernel() const {
  return support_floor_eps > 0.0 ? support_floor(kernel, support_floor_eps)
                                 : kernel;
}

ScenarioConfig parse_scenario(const std::string& json_text,
                              const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& err) {
    // Recover the line number from the byte offset for the message.
    std::size_t line = 1;
    for (std::size_t i = 0; i < err.byte && i < json_text.size(); ++i) {
      if (json_text[i] == '\n') ++line;
    }
    throw ConfigError("line " + std::to_string(line) + ": " + err.what());
  }
  if (!doc.is_object()) throw ConfigError("top level: expected an object");
  reject_unknown_keys(doc, "top level",
                      {"klap_config", "kernel", "support_floor", "p_data",
                       "prior", "noisy_samples", "solver", "sweep", "sample",
                       "outputs"});
  if (!doc.contains("klap_config") || !doc["klap_config"].is_number_integer() ||
      doc["klap_config"].get<int>() != 1) {
    throw ConfigError("top level: requires \"klap_config\": 1");
  }
  if (!doc.contains("kernel")) throw ConfigError("top level: missing kernel");

  ScenarioConfig config{parse_kernel(doc["kernel"], base_dir)};

  if (doc.contains("support_floor")) {
    if (!doc["support_floor"].is_number()) {
      throw ConfigError("support_floor: expected a number");
    }
    config.support_floor_eps = doc["support_floor"].get<double>();
    if (config.support_floor_eps < 0.0 || config.support_floor_eps >= 1.0) {
      throw ConfigError("support_floor: outside [0, 1)");
    }
  }
  if (doc.contains("p_data")) {
    config.p_data = parse_distribution(doc["p_data"], "p_data");
    if (config.p_data->size() != config.kernel.input_size()) {
      throw ConfigError("p_data: size does not match the kernel input");
    }
  }
  if (doc.contains("prior")) {
    const json& prior = doc["prior"];
    if (!prior.is_object()) throw ConfigError("prior: expected an object");
    if (prior.contains("vector")) {
      config.prior_vector = parse_distribution(prior, "prior");
      if (config.prior_vector->size() != config.kernel.input_size()) {
        throw ConfigError("prior: size does not match the kernel input");
      }
    } else {
      reject_unknown_keys(prior, "prior", {"sample_count", "smoothing"});
      config.prior_sample_count = get_int(prior, "prior", "sample_count");
      if (*config.prior_sample_count < 1) {
        throw ConfigError("prior.sample_count: must be >= 1");
      }
      if (prior.contains("smoothing")) {
        config.prior_smoothing = get_number(prior, "prior", "smoothing");
      }
    }
  }
  if (doc.contains("noisy_samples")) {
    const json& noisy = doc["noisy_samples"];
    if (!noisy.is_object()) {
      throw ConfigError("noisy_samples: expected an object");
    }
    reject_unknown_keys(noisy, "noisy_samples", {"count", "smoothing"});
    config.noisy_count = get_int(noisy, "noisy_samples", "count");
    if (*config.noisy_count < 1) {
      throw ConfigError("noisy_samples.count: must be >= 1");
    }
    if (noisy.contains("smoothing")) {
      config.noisy_smoothing = get_number(noisy, "noisy_samples", "smoothing");
    }
  }
  if (doc.contains("solver")) {
    const json& solver = doc["solver"];
    if (!solver.is_object()) throw ConfigError("solver: expected an object");
    reject_unknown_keys(solver, "solver",
                        {"lambda", "weight", "gamma", "max_iterations",
                         "fixed_point_tolerance", "record_every", "seed"});
    if (solver.contains("lambda") && solver.contains("weight")) {
      throw ConfigError("solver: supply exactly one of lambda or weight");
    }
    if (solver.contains("lambda")) {
      config.solver.lambda = get_number(solver, "solver", "lambda");
    } else if (solver.contains("weight")) {
      config.solver.lambda =
          lambda_from_clean_weight(get_number(solver, "solver", "weight"));
    }
    if (solver.contains("gamma")) {
      config.solver.gamma = get_number(solver, "solver", "gamma");
    }
    if (solver.contains("max_iterations")) {
      config.solver.max_iterations = get_int(solver, "solver", "max_iterations");
    }
    if (solver.contains("fixed_point_tolerance")) {
      config.solver.fixed_point_tolerance =
          get_number(solver, "solver", "fixed_point_tolerance");
    }
    if (solver.contains("record_every")) {
      config.solver.record_every = get_int(solver, "solver", "record_every");
    }
    if (solver.contains("seed")) {
      config.solver.seed = solver["seed"].get<std::uint64_t>();
    }
    try {
      config.solver.validate();
    } catch (const Error& err) {
      throw ConfigError(std::string("solver: ") + err.what());
    }
  }
  if (doc.contains("sweep")) {
    const json& sweep = doc["sweep"];
    if (!sweep.is_object()) throw ConfigError("sweep: expected an object");
    reject_unknown_keys(sweep, "sweep", {"weights", "gammas", "clean_counts"});
    if (sweep.contains("weights")) {
      config.sweep_weights = get_vector(sweep, "sweep", "weights");
    }
    if (sweep.contains("gammas")) {
      config.sweep_gammas = get_vector(sweep, "sweep", "gammas");
    }
    if (sweep.contains("clean_counts")) {
      for (double v : get_vector(sweep, "sweep", "clean_counts")) {
        config.sweep_clean_counts.push_back(static_cast<int>(v));
      }
    }
  }
  if (doc.contains("sample")) {
    const json& sample = doc["sample"];
    if (!sample.is_object()) throw ConfigError("sample: expected an object");
    reject_unknown_keys(sample, "sample", {"count", "smoothing"});
    config.sample_count = get_int(sample, "sample", "count");
    if (*config.sample_count < 1) {
      throw ConfigError("sample.count: must be >= 1");
    }
    if (sample.contains("smoothing")) {
      config.sample_smoothing = get_number(sample, "sample", "smoothing");
    }
  }
  if (doc.contains("outputs")) {
    const json& outputs = doc["outputs"];
    if (!outputs.is_object()) throw ConfigError("outputs: expected an object");
    reject_unknown_keys(
        outputs, "outputs",
        {"trajectory", "report", "summary", "samples", "empirical"});
    if (outputs.contains("trajectory")) {
      config.trajectory_path = get_string(outputs, "outputs", "trajectory");
    }
    if (outputs.contains("report")) {
      config.report_path = get_string(outputs, "outputs", "report");
    }
    if (outputs.contains("summary")) {
      config.summary_path = get_string(outputs, "outputs", "summary");
    }
    if (outputs.contains("samples")) {
      config.samples_path = get_string(outputs, "outputs", "samples");
    }
    if (outputs.contains("empirical")) {
      config.empirical_path = get_string(outputs, "outputs", "empirical");
    }
  }
  return config;
}

}  // namespace klap
