#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "geofactor/common.hpp"
#include "geofactor/inference.hpp"
#include "geofactor/io.hpp"
#include "geofactor/sampler.hpp"
#include "helpers.hpp"

using namespace geofactor;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("geofactor_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string str(const std::string& name) const {
    return (path / name).string();
  }
};

const char* kTinyCsv =
    "id,x,y,item_a,item_b,cov_age\n"
    "1,0.0,0.0,1,NA,10\n"
    "2,1.0,0.0,0,1,20\n"
    "3,0.0,1.0,1,0,30\n"
    "4,1.0,1.0,,1,40\n";

}  // namespace

TEST_CASE("dataset loading, missing cells, and round trip") {
  TempDir tmp;
  write_text_file(tmp.str("d.csv"), kTinyCsv);
  const Dataset d = load_dataset(tmp.str("d.csv"));
  CHECK(d.n() == 4);
  CHECK(d.q() == 2);
  CHECK(d.p() == 1);
  CHECK(d.item_names[0] == "item_a");
  CHECK(d.obs_mask(0, 1) == 0);  // NA
  CHECK(d.obs_mask(3, 0) == 0);  // empty cell
  CHECK(d.y(0, 0) == 1);
  CHECK(d.y(1, 0) == 0);
  // Covariates standardized on load.
  CHECK(std::abs(d.X.col(0).mean()) < 1e-12);

  write_dataset(d, tmp.str("d2.csv"));
  const Dataset d2 = load_dataset(tmp.str("d2.csv"));
  CHECK(d2.y == d.y);
  CHECK(d2.obs_mask == d.obs_mask);
  CHECK(d2.coords == d.coords);  // bit-exact
  CHECK(d2.X == d.X);
}

TEST_CASE("dataset errors carry row and column context") {
  TempDir tmp;
  write_text_file(tmp.str("bad_item.csv"),
                  "id,x,y,item_a\n1,0,0,1\n2,1,1,2\n");
  CHECK_THROWS_WITH_AS(load_dataset(tmp.str("bad_item.csv")),
                       doctest::Contains("row 3"), ValidationError);

  write_text_file(tmp.str("unknown.csv"), "id,x,y,item_a,weight\n1,0,0,1,2\n");
  CHECK_THROWS_WITH_AS(load_dataset(tmp.str("unknown.csv")),
                       doctest::Contains("weight"), ValidationError);

  write_text_file(tmp.str("short_row.csv"), "id,x,y,item_a\n1,0,0\n");
  CHECK_THROWS_WITH_AS(load_dataset(tmp.str("short_row.csv")),
                       doctest::Contains("row 2"), ValidationError);

  write_text_file(tmp.str("missing_cov.csv"),
                  "id,x,y,item_a,cov_w\n1,0,0,1,NA\n2,1,1,0,2\n");
  CHECK_THROWS_WITH_AS(load_dataset(tmp.str("missing_cov.csv")),
                       doctest::Contains("cov_w"), ValidationError);
}

TEST_CASE("lonlat projection recovers metric distances") {
  Eigen::MatrixXd lonlat(2, 2);
  lonlat << -71.69, -7.045, -71.69, -7.035;  // ~1.11 km apart in latitude
  const Eigen::MatrixXd xy = lonlat_to_meters(lonlat);
  const double dist = (xy.row(0) - xy.row(1)).norm();
  CHECK(dist == doctest::Approx(1111.95).epsilon(0.01));
}

TEST_CASE("config parsing with defaults and typo rejection") {
  const std::vector<std::string> items = {"item_a", "item_b"};
  SUBCASE("defaults mirror the published run settings") {
    const ParsedConfig parsed = parse_config_text(
        "[model]\nfactors = 1\nconstraint_item_a = pos\n[sampler]\n", items,
        0);
    CHECK(parsed.sampler.adapt_C == 0.7);
    CHECK(parsed.sampler.adapt_alpha == 0.8);
    CHECK(parsed.sampler.target_accept == 0.234);
    CHECK(parsed.spec.priors.lkj_eta == 1.5);
    CHECK(parsed.spec.priors.c_sd(0) == 1.0);
    // Sign-constrained entries get the mean-1, sd-0.45 prior.
    CHECK(parsed.spec.priors.a_mean(0, 0) == 1.0);
    CHECK(parsed.spec.priors.a_sd(0, 0) == 0.45);
    CHECK(parsed.spec.priors.a_sd(1, 0) == 1.0);
  }

  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("[model]\nfactrs = 2\n", items, 0),
        doctest::Contains("factrs"), ValidationError);
    CHECK_THROWS_WITH_AS(
        parse_config_text("[model]\nfactors = 1\n[sampler]\nthinn = 2\n",
                          items, 0),
        doctest::Contains("thinn"), ValidationError);
  }

  SUBCASE("invalid values are rejected") {
    CHECK_THROWS_AS(parse_config_text(
                        "[model]\nfactors = 1\n[sampler]\nthin = -3\n", items,
                        0),
                    ValidationError);
    CHECK_THROWS_AS(
        parse_config_text("[model]\nfactors = 1\n[sampler]\nalpha = 0.2\n",
                          items, 0),
        ValidationError);
    CHECK_THROWS_WITH_AS(
        parse_config_text("[model]\nconstraint_item_z = pos\n", items, 0),
        doctest::Contains("item_z"), ValidationError);
  }

  SUBCASE("full model section round trips through format_config") {
    const std::string text =
        "[model]\n"
        "factors = 2\n"
        "loading_pattern = 1 0 ; 0 1\n"
        "constraint_item_a = pos 0\n"
        "constraint_item_b = 0 pos\n"
        "[priors]\n"
        "eta = 2.5\n"
        "[sampler]\n"
        "iterations = 500\n"
        "burn_in = 100\n"
        "seed = 42\n";
    const ParsedConfig parsed = parse_config_text(text, items, 0);
    CHECK(parsed.spec.m == 2);
    CHECK(parsed.spec.g() == 2);
    CHECK(parsed.spec.constraints[0].active(1) == 0);
    CHECK(parsed.spec.priors.lkj_eta == 2.5);
    const std::string echoed =
        format_config(parsed.spec, parsed.sampler, items);
    const ParsedConfig reparsed = parse_config_text(echoed, items, 0);
    CHECK(reparsed.spec.m == 2);
    CHECK(reparsed.spec.priors.lkj_eta == 2.5);
    CHECK(reparsed.sampler.iterations == 500);
    CHECK(reparsed.sampler.seed == 42);
  }
}

TEST_CASE("chain persistence round trips and detects tampering") {
  TempDir tmp;
  RngStream setup(31, "test");
  Dataset d = testutil::tiny_dataset(6, 2, setup);
  ModelSpec spec = testutil::simple_spec(2, 1);
  spec.priors = default_priors(spec, 0);
  SamplerConfig config;
  config.iterations = 40;
  config.burn_in = 20;
  config.thin = 2;
  config.seed = 99;
  config.chains = 2;
  const ChainOutput c0 = run_chain(d, spec, config, 0);
  const ChainOutput c1 = run_chain(d, spec, config, 1);

  const std::string cfg_text = format_config(spec, config, d.item_names);
  write_chain({c0, c1}, tmp.str("run"), d, cfg_text, 1.5);

  const LoadedRun run = load_chain(tmp.str("run"));
  CHECK(run.chains.size() == 2);
  CHECK(run.manifest.seed == 99);
  CHECK(run.chains[0].hash() == c0.hash());
  CHECK(run.chains[1].hash() == c1.hash());
  CHECK(run.chains[0].c == c0.c);
  CHECK(run.chains[0].theta == c0.theta);
  CHECK(run.chains[0].phi == c0.phi);
  CHECK(run.config.iterations == 40);

  // Tampering with a stored file trips the manifest hash check.
  {
    std::ofstream f(tmp.str("run") + "/chain_0/c.csv", std::ios::app);
    f << "999,0.1,0.2\n";
  }
  CHECK_THROWS_WITH_AS(load_chain(tmp.str("run")),
                       doctest::Contains("hash"), ValidationError);
}

TEST_CASE("grid generation and prediction export") {
  GridSpec grid;
  grid.xmin = 0.0;
  grid.ymin = 0.0;
  grid.xmax = 2.0;
  grid.ymax = 2.0;
  grid.cell = 1.0;
  const Eigen::MatrixXd centers = grid.cell_centers();
  CHECK(centers.rows() == 4);
  CHECK(centers(0, 0) == 0.5);
  CHECK(centers(0, 1) == 0.5);
  CHECK(centers(3, 0) == 1.5);
  CHECK(centers(3, 1) == 1.5);

  GridSpec bad = grid;
  bad.cell = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  // Triangular mask keeps only the lower-left cell.
  GridSpec masked = grid;
  masked.mask_polygon.resize(3, 2);
  masked.mask_polygon << 0, 0, 1.2, 0, 0, 1.2;
  CHECK(masked.cell_centers().rows() == 1);

  // Export a small prediction: 4 rows, per-factor summary columns.
  PredictionResult pred;
  pred.m = 1;
  pred.new_coords = centers;
  pred.draws = Eigen::MatrixXd::Random(50, 4);
  pred.median.resize(4, 1);
  pred.q05.resize(4, 1);
  pred.q95.resize(4, 1);
  for (int i = 0; i < 4; ++i) {
    pred.median(i, 0) = quantile(pred.draws.col(i), 0.5);
    pred.q05(i, 0) = quantile(pred.draws.col(i), 0.05);
    pred.q95(i, 0) = quantile(pred.draws.col(i), 0.95);
  }
  pred.exceed0 = exceedance_prob(pred, 0.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(pred.exceed0(i, 0) >= 0.0);
    CHECK(pred.exceed0(i, 0) <= 1.0);
  }

  TempDir tmp;
  export_prediction(pred, ExportFormat::csv, tmp.str("p.csv"));
  const std::string text = read_text_file(tmp.str("p.csv"));
  CHECK(text.rfind("x,y,factor_1_median,factor_1_q05,factor_1_q95,"
                   "factor_1_exceed0\n", 0) == 0);
  int lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  CHECK(lines == 5);  // header + 4 rows

  export_prediction(pred, ExportFormat::geojson, tmp.str("p.geojson"));
  const auto issues = check_geojson(tmp.str("p.geojson"));
  for (const auto& issue : issues) INFO(issue);
  CHECK(issues.empty());

  // The checker rejects a broken document.
  write_text_file(tmp.str("broken.geojson"), "{\"type\": \"Banana\"}");
  CHECK_FALSE(check_geojson(tmp.str("broken.geojson")).empty());
}

TEST_CASE("scores files and variogram output") {
  TempDir tmp;
  write_text_file(tmp.str("s.csv"),
                  "x,y,value\n0,0,1.0\n1,0,2.0\n0,1,3.0\n");
  const ScoresFile s = load_scores(tmp.str("s.csv"));
  CHECK(s.values.size() == 3);
  CHECK(s.values(2) == 3.0);
  const Variogram v = empirical_variogram(s.values, s.coords, 2, 2.0);
  write_variogram(v, tmp.str("v.csv"));
  const std::string text = read_text_file(tmp.str("v.csv"));
  CHECK(text.rfind("center,gamma,pairs\n", 0) == 0);
}

TEST_CASE("simulation config parsing") {
  TempDir tmp;
  write_text_file(tmp.str("sim.cfg"),
                  "[simulate]\n"
                  "n = 50\n"
                  "seed = 9\n"
                  "xmax = 2\n"
                  "ymax = 2\n"
                  "missing_items = 2\n"
                  "missing_fraction = 0.1\n"
                  "[truth]\n"
                  "c = 0.2 -0.3\n"
                  "a = 1.2 ; 0.8\n"
                  "t = 0.5\n"
                  "phi = 0.4\n");
  const SimConfig sim = parse_sim_config(tmp.str("sim.cfg"));
  CHECK(sim.n == 50);
  CHECK(sim.truth.q() == 2);
  CHECK(sim.truth.m() == 1);
  CHECK(sim.truth.g() == 1);
  CHECK(sim.missing.items == std::vector<int>{1});
  CHECK(sim.truth.d(0) == 1.0);

  write_text_file(tmp.str("bad.cfg"), "[simulate]\nn = 10\nbogus = 1\n");
  CHECK_THROWS_WITH_AS(parse_sim_config(tmp.str("bad.cfg")),
                       doctest::Contains("bogus"), ValidationError);
}
