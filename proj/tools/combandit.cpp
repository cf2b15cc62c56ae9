// combandit: run regret experiments, inspect presets, and print NTK
// diagnostics for a configuration.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "combandit/config.hpp"
#include "combandit/errors.hpp"
#include "combandit/experiment.hpp"
#include "combandit/ntk.hpp"
#include "combandit/random.hpp"

namespace fs = std::filesystem;
using namespace combandit;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  ConfigMap map = ConfigMap::load(path);
  for (const auto& o : overrides) map.apply_override(o);
  return ExperimentConfig::from_map(std::move(map));
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& out_dir) {
  const ExperimentConfig cfg = load_config(config_path, overrides);
  const auto traces = run_experiment(cfg);
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "traces.csv");
    if (!out) throw std::runtime_error("cannot write " + (fs::path(out_dir) / "traces.csv").string());
    write_traces(out, traces, cfg.metadata_line());
  }
  const Summary s = summarize(traces);
  {
    std::ofstream out(fs::path(out_dir) / "summary.csv");
    if (!out) throw std::runtime_error("cannot write summary.csv");
    write_summary(out, s);
  }
  std::cout << "runs=" << traces.size() << " T=" << cfg.horizon
            << " mean_final_regret=" << s.mean.back() << " std_final_regret=" << s.std.back()
            << " first_quarter_avg=" << s.first_quarter << " last_quarter_avg=" << s.last_quarter
            << "\n";
  return 0;
}

int cmd_ntk(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& csv_path) {
  const ExperimentConfig cfg = load_config(config_path, overrides);
  // Draw the context stream of run 0; subsample rounds when T*N exceeds the cap.
  Environment env(cfg.env, derive_seed(cfg.base_seed, 100));
  const long long total = static_cast<long long>(cfg.horizon) * cfg.env.num_arms;
  const long long n = std::min<long long>(total, cfg.ntk_cap);
  const long long stride = (total + n - 1) / n;
  Matrix contexts(cfg.env.d, n);
  long long taken = 0;
  long long index = 0;
  for (int t = 0; t < cfg.horizon && taken < n; ++t) {
    const Matrix& x = env.next_round();
    for (int i = 0; i < cfg.env.num_arms && taken < n; ++i, ++index) {
      if (index % stride == 0) contexts.col(taken++) = x.col(i);
    }
  }
  contexts.conservativeResize(Eigen::NoChange, taken);
  const Matrix h = ntk_matrix(contexts, cfg.depth);
  const EffDimReport eff = effective_dimension(h, cfg.lambda, cfg.horizon, cfg.env.num_arms);
  const double lambda0 = std::max(eff.min_eigenvalue, 1e-12);
  const WidthReport wr = width_report(cfg.horizon, cfg.env.num_arms, cfg.env.super_arm_size,
                                      cfg.depth, cfg.lambda, lambda0, cfg.delta, cfg.width);

  std::cout << "contexts=" << taken << "\n";
  std::cout << "subsampled=" << (taken < total ? "true" : "false") << "\n";
  std::cout << "effective_dim=" << eff.effective_dim << "\n";
  std::cout << "log_det=" << eff.log_det << "\n";
  std::cout << "lambda_min=" << eff.min_eigenvalue << "\n";
  std::cout << "width=" << cfg.width << "\n";
  std::cout << "width_constant_C=" << wr.constant << " (advisory; unit constant)\n";
  for (std::size_t i = 0; i < wr.clauses.size(); ++i) {
    const auto& c = wr.clauses[i];
    std::cout << "width_clause_" << (i + 1) << "=" << (c.passed ? "pass" : "fail")
              << " log_required=" << c.log_required << " log_actual=" << c.log_actual << "  # "
              << c.name << "\n";
  }
  std::cout << "width_binding=" << wr.binding << "\n";
  std::cout << "width_condition=" << (wr.passed() ? "pass" : "fail") << "\n";

  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    out.precision(17);
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      for (Eigen::Index j = 0; j < h.cols(); ++j) out << (j ? "," : "") << h(i, j);
      out << "\n";
    }
  }
  return 0;
}

int cmd_presets() {
  for (const auto& name : preset_names()) std::cout << describe_preset(preset(name)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combinatorial neural bandit experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string csv_path;

  auto* run = app.add_subcommand("run", "Run an experiment and write traces.csv and summary.csv");
  run->add_option("--config", config_path, "Config file (key = value lines)")->required();
  run->add_option("--override", overrides, "key=value overrides applied after the file");
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* ntk = app.add_subcommand("ntk", "Print effective dimension and width diagnostics");
  ntk->add_option("--config", config_path, "Config file")->required();
  ntk->add_option("--override", overrides, "key=value overrides");
  ntk->add_option("--csv", csv_path, "Write the NTK matrix as CSV");

  app.add_subcommand("presets", "List the built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, overrides, out_dir);
    if (ntk->parsed()) return cmd_ntk(config_path, overrides, csv_path);
    return cmd_presets();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
