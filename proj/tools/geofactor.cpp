#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

#include "geofactor/common.hpp"
#include "geofactor/inference.hpp"
#include "geofactor/io.hpp"
#include "geofactor/sampler.hpp"
#include "geofactor/simulate.hpp"

namespace gf = geofactor;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

gf::GridSpec parse_grid_option(const std::string& grid,
                               const std::string& mask_path) {
  gf::GridSpec spec;
  const auto parts = [&] {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : grid) {
      if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    out.push_back(cur);
    return out;
  }();
  if (parts.size() != 5)
    throw gf::ValidationError(
        "--grid expects xmin,ymin,xmax,ymax,cell");
  spec.xmin = std::stod(parts[0]);
  spec.ymin = std::stod(parts[1]);
  spec.xmax = std::stod(parts[2]);
  spec.ymax = std::stod(parts[3]);
  spec.cell = std::stod(parts[4]);
  if (!mask_path.empty()) {
    const gf::ScoresFile mask = gf::load_scores(mask_path, "y");
    spec.mask_polygon = mask.coords;
  }
  spec.validate();
  return spec;
}

std::vector<gf::ChainOutput> run_chains(const gf::Dataset& data,
                                        const gf::ModelSpec& spec,
                                        const gf::SamplerConfig& config) {
  std::vector<gf::ChainOutput> chains(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  std::vector<std::thread> workers;
  for (int id = 0; id < config.chains; ++id)
    workers.emplace_back([&, id] {
      try {
        chains[id] = gf::run_chain(data, spec, config, id);
      } catch (...) {
        errors[id] = std::current_exception();
      }
    });
  for (auto& w : workers) w.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return chains;
}

int cmd_fit(const std::string& data_path, const std::string& config_path,
            const std::string& out_dir, int chains_override,
            long seed_override, bool lonlat) {
  const gf::Dataset data = gf::load_dataset(data_path, lonlat);
  const std::string config_text = gf::read_text_file(config_path);
  gf::ParsedConfig parsed = gf::parse_config_text(
      config_text, data.item_names, data.p(), config_path);
  if (chains_override > 0) parsed.sampler.chains = chains_override;
  if (seed_override >= 0)
    parsed.sampler.seed = static_cast<std::uint64_t>(seed_override);
  parsed.sampler.validate();

  const gf::IdentifiabilityReport rep =
      gf::validate_identifiability(parsed.spec);
  if (!rep.ok) {
    for (const auto& msg : rep.messages)
      std::cerr << "identifiability: " << msg << "\n";
    throw gf::ValidationError("model failed the identifiability checks");
  }

  const auto start = std::chrono::steady_clock::now();
  const std::vector<gf::ChainOutput> chains =
      run_chains(data, parsed.spec, parsed.sampler);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  gf::write_chain(chains, out_dir, data, config_text, secs);
  for (const auto& chain : chains)
    std::cout << "chain " << chain.chain_id << ": " << chain.samples()
              << " stored samples, acceptance "
              << (chain.accept_prob.size() ? chain.accept_prob.mean() : 0.0)
              << ", hash " << gf::hash_hex(chain.hash()) << "\n";
  std::cout << "run written to " << out_dir << " (" << secs << " s)\n";
  return kExitOk;
}

int cmd_predict(const std::string& run_dir, const std::string& grid,
                const std::string& grid_file, const std::string& mask,
                const std::string& covariates_path, double threshold,
                const std::string& out_path, const std::string& format,
                bool allow_coincident, long seed_override) {
  const gf::LoadedRun run = gf::load_chain(run_dir);
  const gf::ChainOutput pooled =
      gf::rescale_samples(gf::pool_chains(run.chains));

  Eigen::MatrixXd points;
  if (!grid_file.empty()) {
    points = gf::load_scores(grid_file, "y").coords;
  } else if (!grid.empty()) {
    points = parse_grid_option(grid, mask).cell_centers();
  } else {
    throw gf::ValidationError("predict: pass --grid or --grid-file");
  }

  Eigen::MatrixXd new_x(points.rows(), 0);
  if (run.data.p() > 0) {
    if (covariates_path.empty())
      throw gf::ValidationError(
          "predict: the model uses covariates; pass --covariates with one "
          "row per grid cell");
    // Covariate file: header cov_* columns, one row per prediction point.
    const std::string text = gf::read_text_file(covariates_path);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> names;
    {
      std::string cur;
      for (char ch : line + ",") {
        if (ch == ',') {
          if (!cur.empty()) names.push_back(cur);
          cur.clear();
        } else if (ch != '\r') {
          cur.push_back(ch);
        }
      }
    }
    if (static_cast<int>(names.size()) != run.data.p())
      throw gf::ValidationError(
          covariates_path + ": expected " + std::to_string(run.data.p()) +
          " covariate columns");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::string cur;
      for (char ch : line + ",") {
        if (ch == ',') {
          row.push_back(std::stod(cur));
          cur.clear();
        } else if (ch != '\r') {
          cur.push_back(ch);
        }
      }
      rows.push_back(row);
    }
    if (static_cast<Eigen::Index>(rows.size()) != points.rows())
      throw gf::ValidationError(covariates_path +
                                ": row count differs from grid cells");
    Eigen::MatrixXd raw(rows.size(), run.data.p());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int k = 0; k < run.data.p(); ++k) raw(i, k) = rows[i][k];
    new_x = gf::apply_standardization(raw, run.data.x_mean, run.data.x_sd);
  }

  gf::PredictOptions opt;
  opt.allow_coincident = allow_coincident;
  opt.seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                                : run.manifest.seed;
  const gf::PredictionResult pred =
      gf::predict_factors(pooled, run.data, points, new_x, opt);

  const std::string base =
      out_path.empty() ? run_dir + "/prediction" : out_path;
  if (format == "csv" || format == "both")
    gf::export_prediction(pred, gf::ExportFormat::csv, base + ".csv");
  if (format == "geojson" || format == "both")
    gf::export_prediction(pred, gf::ExportFormat::geojson, base + ".geojson");

  if (threshold != 0.0) {
    const Eigen::MatrixXd exc = gf::exceedance_prob(pred, threshold);
    std::ostringstream out;
    out << "x,y";
    for (int k = 0; k < pred.m; ++k)
      out << ",factor_" << (k + 1) << "_exceed";
    out << "\n";
    for (int i = 0; i < pred.n_new(); ++i) {
      out << pred.new_coords(i, 0) << ',' << pred.new_coords(i, 1);
      for (int k = 0; k < pred.m; ++k) out << ',' << exc(i, k);
      out << "\n";
    }
    gf::write_text_file(base + "_exceedance.csv", out.str());
  }
  std::cout << "predicted " << pred.n_new() << " locations from "
            << pred.draws.rows() << " posterior draws -> " << base << ".*\n";
  return kExitOk;
}

int cmd_dic(const std::string& run_dir, const std::string& data_path) {
  const gf::LoadedRun run = gf::load_chain(run_dir);
  const gf::Dataset data =
      data_path.empty() ? run.data : gf::load_dataset(data_path);
  const gf::DicReport rep = gf::dic(gf::pool_chains(run.chains), data);
  std::printf("mean_deviance,%.6f\n", rep.mean_deviance);
  std::printf("effective_parameters,%.6f\n", rep.p_d);
  std::printf("dic,%.6f\n", rep.dic);
  return kExitOk;
}

int cmd_variogram(const std::string& scores_path, int bins, double max_dist,
                  const std::string& value_col, const std::string& out_path) {
  const gf::ScoresFile scores = gf::load_scores(scores_path, value_col);
  const gf::Variogram v =
      gf::empirical_variogram(scores.values, scores.coords, bins, max_dist);
  if (out_path.empty()) {
    std::printf("center,gamma,pairs\n");
    for (Eigen::Index b = 0; b < v.centers.size(); ++b)
      if (v.pair_count(b) > 0)
        std::printf("%.10g,%.10g,%d\n", v.centers(b), v.gamma(b),
                    v.pair_count(b));
      else
        std::printf("%.10g,NA,0\n", v.centers(b));
  } else {
    gf::write_variogram(v, out_path);
  }
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
  const gf::SimConfig sim = gf::parse_sim_config(config_path);
  gf::RngStream rng(sim.seed, "simulate");
  Eigen::MatrixXd coords(sim.n, 2);
  for (int i = 0; i < sim.n; ++i) {
    coords(i, 0) = sim.xmin + (sim.xmax - sim.xmin) * rng.uniform();
    coords(i, 1) = sim.ymin + (sim.ymax - sim.ymin) * rng.uniform();
  }
  Eigen::MatrixXd x(sim.n, 0);
  if (sim.p > 0) {
    Eigen::MatrixXd raw(sim.n, sim.p);
    for (int i = 0; i < sim.n; ++i)
      for (int k = 0; k < sim.p; ++k) raw(i, k) = rng.normal();
    x = gf::standardize_covariates(raw).X;
  }
  const gf::SimulationResult res =
      gf::simulate_dataset(sim.truth, coords, x, rng, sim.missing);
  gf::write_dataset(res.data, out_path);

  // Sidecar with the generating values for recovery studies.
  std::ostringstream truth;
  truth << "name,value\n";
  for (int j = 0; j < sim.truth.q(); ++j)
    truth << "c_" << (j + 1) << ',' << sim.truth.c(j) << "\n";
  for (int k = 0; k < sim.truth.m(); ++k)
    for (int j = 0; j < sim.truth.q(); ++j)
      truth << "a_" << (j + 1) << "_" << (k + 1) << ',' << sim.truth.a(j, k)
            << "\n";
  for (int k = 0; k < sim.truth.g(); ++k)
    truth << "phi_" << (k + 1) << ',' << sim.truth.phi(k) << "\n";
  for (int k = 0; k < sim.truth.m(); ++k)
    for (int i = 0; i < sim.n; ++i)
      truth << "theta_" << (k + 1) << "_" << (i + 1) << ','
            << res.theta(i, k) << "\n";
  gf::write_text_file(out_path + ".truth.csv", truth.str());
  std::cout << "simulated " << sim.n << " locations x " << sim.truth.q()
            << " items -> " << out_path << "\n";
  return kExitOk;
}

int cmd_summary(const std::string& run_dir, const std::string& out_path) {
  const gf::LoadedRun run = gf::load_chain(run_dir);
  const auto rows = gf::trace_summary(gf::pool_chains(run.chains));
  std::ostringstream out;
  out << "name,mean,sd,q025,median,q975,ess,lag1\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.stats.mean << ',' << r.stats.sd << ','
        << r.stats.q025 << ',' << r.stats.median << ',' << r.stats.q975 << ','
        << r.stats.ess << ','
        << (r.stats.autocorr.size() > 0 ? r.stats.autocorr(0) : 0.0) << "\n";
  }
  if (out_path.empty())
    std::cout << out.str();
  else
    gf::write_text_file(out_path, out.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatial item factor analysis for binary survey data"};
  app.set_version_flag("--version", gf::kVersion);
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit the model by MCMC");
  std::string fit_data, fit_config, fit_out;
  int fit_chains = 0;
  long fit_seed = -1;
  bool fit_lonlat = false;
  fit->add_option("--data", fit_data, "Dataset CSV")->required();
  fit->add_option("--config", fit_config, "Model configuration")->required();
  fit->add_option("--out", fit_out, "Output run directory")->required();
  fit->add_option("--chains", fit_chains, "Number of chains");
  fit->add_option("--seed", fit_seed, "Seed override");
  fit->add_flag("--lonlat", fit_lonlat,
                "Coordinates are lon/lat degrees; project to meters");

  // predict
  auto* predict = app.add_subcommand("predict", "Predict factors on a grid");
  std::string pr_run, pr_grid, pr_grid_file, pr_mask, pr_cov, pr_out;
  std::string pr_format = "csv";
  double pr_threshold = 0.0;
  bool pr_allow = false;
  long pr_seed = -1;
  predict->add_option("--run", pr_run, "Run directory")->required();
  predict->add_option("--grid", pr_grid, "xmin,ymin,xmax,ymax,cell");
  predict->add_option("--grid-file", pr_grid_file,
                      "CSV with x,y prediction points");
  predict->add_option("--mask", pr_mask, "CSV polygon (x,y ring)");
  predict->add_option("--covariates", pr_cov,
                      "CSV of covariate values per grid cell");
  predict->add_option("--threshold", pr_threshold,
                      "Extra exceedance threshold");
  predict->add_option("--out", pr_out, "Output path stem");
  predict->add_option("--format", pr_format, "csv, geojson or both");
  predict->add_flag("--allow-coincident", pr_allow,
                    "Allow prediction at training locations");
  predict->add_option("--seed", pr_seed, "Seed for predictive draws");

  // dic
  auto* dic_cmd = app.add_subcommand("dic", "Deviance information criterion");
  std::string dic_run, dic_data;
  dic_cmd->add_option("--run", dic_run, "Run directory")->required();
  dic_cmd->add_option("--data", dic_data, "Dataset CSV (defaults to run's)");

  // variogram
  auto* vg = app.add_subcommand("variogram", "Empirical variogram of scores");
  std::string vg_scores, vg_value = "value", vg_out;
  int vg_bins = 15;
  double vg_max = 0.0;
  vg->add_option("--scores", vg_scores, "CSV with x,y,value")->required();
  vg->add_option("--bins", vg_bins, "Number of distance bins");
  vg->add_option("--max-dist", vg_max, "Maximum distance");
  vg->add_option("--value-col", vg_value, "Value column name");
  vg->add_option("--out", vg_out, "Output CSV (stdout otherwise)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw a synthetic dataset");
  std::string sim_config, sim_out;
  sim->add_option("--config", sim_config, "Simulation configuration")
      ->required();
  sim->add_option("--out", sim_out, "Output dataset CSV")->required();

  // summary
  auto* sum = app.add_subcommand("summary", "Per-parameter trace summaries");
  std::string sum_run, sum_out;
  sum->add_option("--run", sum_run, "Run directory")->required();
  sum->add_option("--out", sum_out, "Output CSV (stdout otherwise)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*fit)
      return cmd_fit(fit_data, fit_config, fit_out, fit_chains, fit_seed,
                     fit_lonlat);
    if (*predict)
      return cmd_predict(pr_run, pr_grid, pr_grid_file, pr_mask, pr_cov,
                         pr_threshold, pr_out, pr_format, pr_allow, pr_seed);
    if (*dic_cmd) return cmd_dic(dic_run, dic_data);
    if (*vg) return cmd_variogram(vg_scores, vg_bins, vg_max, vg_value, vg_out);
    if (*sim) return cmd_simulate(sim_config, sim_out);
    if (*sum) return cmd_summary(sum_run, sum_out);
  } catch (const gf::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const gf::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
