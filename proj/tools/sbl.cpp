#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sbl/cli/commands.hpp"
#include "sbl/error.hpp"
#include "sbl/numerics/kernels.hpp"

namespace {

int exit_code(sbl::ErrorKind kind) {
  switch (kind) {
    case sbl::ErrorKind::dependency: return 3;
    case sbl::ErrorKind::numeric:
    case sbl::ErrorKind::degenerate: return 4;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape-biased low-shot image recognition: data, training, evaluation, analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 0;
  sbl::cli::Options options;
  std::vector<std::string> methods;
  std::uint64_t gradcheck_seed = 0;

  const auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run config (flat JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "output directory, overriding output_dir in the config");
    cmd->add_option("--threads", threads, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  };
  auto* gen = app.add_subcommand("gen", "generate shapes, render views and write the dataset");
  common(gen);
  gen->add_flag("--force", options.force, "replace an existing dataset directory");

  auto* train = app.add_subcommand("train", "train one model");
  common(train);
  std::string method;
  train->add_option("method", method, "shape, image, align, align-l1only, triplet or oracle")->required();
  train->add_flag("--oracle-ack", options.oracle_ack, "allow the oracle to train on test classes");
  train->add_flag("--force", options.force, "accepted for symmetry; checkpoints are always overwritten");

  auto* eval = app.add_subcommand("eval", "evaluate methods on paired test episodes");
  common(eval);
  eval->add_option("--methods", methods, "evaluation methods (default: eval_methods in the config)");

  auto* analyze = app.add_subcommand("analyze", "correlations, overlaps and distance histograms");
  common(analyze);

  auto* gradcheck = app.add_subcommand("gradcheck", "check every gradient against central differences");
  gradcheck->add_option("--seed", gradcheck_seed, "seed for the random instantiations");
  gradcheck->add_option("--threads", threads, "worker threads (0: OpenMP default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads > 0) sbl::kernels::set_thread_count(threads);
    if (gradcheck->parsed()) {
      if (const char* env = std::getenv("SBL_SEED_OVERRIDE"); env && *env) gradcheck_seed = std::stoull(env);
      return sbl::cli::cmd_gradcheck(gradcheck_seed, std::cout) ? 0 : 4;
    }
    auto config = sbl::cli::load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (gen->parsed()) {
      sbl::cli::cmd_gen(config, options);
      std::cout << "dataset written to " << (config.output_dir / "data").string() << "\n";
    } else if (train->parsed()) {
      sbl::cli::cmd_train(config, method, options);
      std::cout << "checkpoint written to " << sbl::cli::RunPaths{config.output_dir}.model(method).string() << "\n";
    } else if (eval->parsed()) {
      const auto summary = sbl::cli::cmd_eval(config, methods);
      for (const auto& r : summary.at("results")) {
        std::printf("%-18s %d-way %d-shot  %6.2f +- %.2f  (%s)\n", r.at("method").get<std::string>().c_str(),
                    r.at("n_way").get<int>(), r.at("m_shot").get<int>(), 100 * r.at("mean").get<double>(),
                    100 * r.at("ci95").get<double>(), r.at("best_variant").get<std::string>().c_str());
      }
    } else if (analyze->parsed()) {
      const auto summary = sbl::cli::cmd_analyze(config);
      std::cout << summary.at("analysis").dump(2) << "\n";
    }
  } catch (const sbl::Error& e) {
    std::cerr << "error (" << sbl::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
