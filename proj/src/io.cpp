#include "geofactor/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <sstream>

#include "geofactor/common.hpp"

namespace geofactor {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const std::string t = trim(s);
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw ValidationError(where + ": cannot parse number '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& where) {
  const double v = parse_double(s, where);
  if (v != std::floor(v))
    throw ValidationError(where + ": expected an integer, got '" + s + "'");
  return static_cast<long>(v);
}

bool is_missing_token(const std::string& s) {
  const std::string t = lower(trim(s));
  return t.empty() || t == "na" || t == "nan";
}

// Key/value file with [section] headers, '#' comments, '=' assignment.
struct ConfigFile {
  // section -> ordered (key, value); duplicate keys rejected.
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> data;
  std::string origin;

  static ConfigFile parse(const std::string& text, const std::string& origin) {
    ConfigFile out;
    out.origin = origin;
    std::string section;
    int lineno = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw ValidationError(origin + ":" + std::to_string(lineno) +
                                ": malformed section header");
        section = lower(trim(t.substr(1, t.size() - 2)));
        out.data[section];
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ValidationError(origin + ":" + std::to_string(lineno) +
                              ": expected key = value");
      const std::string key = lower(trim(t.substr(0, eq)));
      const std::string value = trim(t.substr(eq + 1));
      if (section.empty())
        throw ValidationError(origin + ":" + std::to_string(lineno) +
                              ": key outside any [section]");
      for (const auto& [k, v] : out.data[section])
        if (k == key)
          throw ValidationError(origin + ": duplicate key '" + key +
                                "' in [" + section + "]");
      out.data[section].emplace_back(key, value);
    }
    return out;
  }
};

// Tracks which keys were consumed so typos are rejected.
class SectionReader {
 public:
  SectionReader(const ConfigFile& file, const std::string& section)
      : file_(file), section_(section) {
    const auto it = file.data.find(section);
    if (it != file.data.end())
      for (const auto& [k, v] : it->second) pending_[k] = v;
  }

  bool has(const std::string& key) const { return pending_.count(key) > 0; }

  std::string take(const std::string& key, const std::string& fallback) {
    const auto it = pending_.find(key);
    if (it == pending_.end()) return fallback;
    const std::string v = it->second;
    pending_.erase(it);
    return v;
  }

  std::string where(const std::string& key) const {
    return file_.origin + " [" + section_ + "] " + key;
  }

  void finish() const {
    if (!pending_.empty())
      throw ValidationError(file_.origin + ": unknown key '" +
                            pending_.begin()->first + "' in [" + section_ +
                            "]");
  }

  std::map<std::string, std::string>& pending() { return pending_; }

 private:
  const ConfigFile& file_;
  std::string section_;
  std::map<std::string, std::string> pending_;
};

Eigen::VectorXd parse_vector(const std::string& s, const std::string& where) {
  const auto toks = tokens(s);
  Eigen::VectorXd out(toks.size());
  for (std::size_t i = 0; i < toks.size(); ++i)
    out(i) = parse_double(toks[i], where);
  return out;
}

// Scalar values broadcast to the requested length.
Eigen::VectorXd parse_vector_bcast(const std::string& s, Eigen::Index len,
                                   const std::string& where) {
  Eigen::VectorXd v = parse_vector(s, where);
  if (v.size() == 1) return Eigen::VectorXd::Constant(len, v(0));
  if (v.size() != len)
    throw ValidationError(where + ": expected 1 or " + std::to_string(len) +
                          " values, got " + std::to_string(v.size()));
  return v;
}

Eigen::MatrixXd parse_matrix(const std::string& s, const std::string& where) {
  const auto rows = split(s, ';');
  std::vector<Eigen::VectorXd> parsed;
  for (const auto& r : rows)
    if (!trim(r).empty()) parsed.push_back(parse_vector(r, where));
  if (parsed.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd out(parsed.size(), parsed.front().size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].size() != out.cols())
      throw ValidationError(where + ": ragged matrix rows");
    out.row(i) = parsed[i].transpose();
  }
  return out;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << text;
}

std::string file_hash(const std::string& path) {
  const std::string bytes = read_text_file(path);
  return hash_hex(fnv1a64(bytes.data(), bytes.size()));
}

Eigen::MatrixXd lonlat_to_meters(const Eigen::MatrixXd& lonlat) {
  constexpr double kEarthRadius = 6371000.0;
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  const double lon0 = lonlat.col(0).mean();
  const double lat0 = lonlat.col(1).mean();
  Eigen::MatrixXd out(lonlat.rows(), 2);
  for (int i = 0; i < lonlat.rows(); ++i) {
    out(i, 0) =
        kEarthRadius * std::cos(lat0 * kDeg) * (lonlat(i, 0) - lon0) * kDeg;
    out(i, 1) = kEarthRadius * (lonlat(i, 1) - lat0) * kDeg;
  }
  return out;
}

Dataset load_dataset(const std::string& path, bool lonlat) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(path + ": empty file");
  const auto header = split(trim(line), ',');

  int col_id = -1, col_x = -1, col_y = -1;
  std::vector<int> item_cols, cov_cols;
  Dataset out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    const std::string lname = lower(name);
    if (lname == "id")
      col_id = static_cast<int>(c);
    else if (lname == "x")
      col_x = static_cast<int>(c);
    else if (lname == "y")
      col_y = static_cast<int>(c);
    else if (lname.rfind("item_", 0) == 0) {
      item_cols.push_back(static_cast<int>(c));
      out.item_names.push_back(name);
    } else if (lname.rfind("cov_", 0) == 0) {
      cov_cols.push_back(static_cast<int>(c));
      out.covariate_names.push_back(name);
    } else {
      throw ValidationError(path + ": unknown column '" + name + "'");
    }
  }
  if (col_id < 0 || col_x < 0 || col_y < 0)
    throw ValidationError(path + ": columns id, x, y are required");
  if (item_cols.empty())
    throw ValidationError(path + ": no item_* columns found");

  std::vector<std::vector<std::string>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size())
      throw ValidationError(path + ": row " + std::to_string(lineno) +
                            " has " + std::to_string(cells.size()) +
                            " cells, header has " +
                            std::to_string(header.size()));
    rows.push_back(std::move(cells));
  }
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw ValidationError(path + ": no data rows");

  const int q = static_cast<int>(item_cols.size());
  const int p = static_cast<int>(cov_cols.size());
  out.y.resize(n, q);
  out.obs_mask.resize(n, q);
  out.coords.resize(n, 2);
  Eigen::MatrixXd raw_x(n, p);
  for (int i = 0; i < n; ++i) {
    const auto& cells = rows[i];
    const std::string where = path + ": row " + std::to_string(i + 2);
    out.coords(i, 0) = parse_double(cells[col_x], where + " column x");
    out.coords(i, 1) = parse_double(cells[col_y], where + " column y");
    for (int j = 0; j < q; ++j) {
      const std::string& cell = cells[item_cols[j]];
      if (is_missing_token(cell)) {
        out.y(i, j) = 0;
        out.obs_mask(i, j) = 0;
      } else {
        const std::string t = trim(cell);
        if (t != "0" && t != "1")
          throw ValidationError(where + " column " + out.item_names[j] +
                                ": item value '" + cell +
                                "' is not 0, 1 or NA");
        out.y(i, j) = t == "1" ? 1 : 0;
        out.obs_mask(i, j) = 1;
      }
    }
    for (int k = 0; k < p; ++k) {
      const std::string& cell = cells[cov_cols[k]];
      if (is_missing_token(cell))
        throw ValidationError(where + " column " + out.covariate_names[k] +
                              ": missing covariate values are not supported");
      raw_x(i, k) = parse_double(cell, where + " column " +
                                           out.covariate_names[k]);
    }
  }
  if (lonlat) out.coords = lonlat_to_meters(out.coords);

  if (p > 0) {
    // Keep already-standardized columns bit-exact (identity transform);
    // otherwise standardize and record the transform for prediction.
    bool standardized = true;
    for (int k = 0; k < p && standardized; ++k) {
      const double mu = raw_x.col(k).mean();
      const double sd =
          std::sqrt((raw_x.col(k).array() - mu).square().sum() / (n - 1));
      if (std::abs(mu) >= 1e-8 || std::abs(sd - 1.0) >= 1e-8)
        standardized = false;
    }
    if (standardized) {
      out.X = raw_x;
      out.x_mean = Eigen::VectorXd::Zero(p);
      out.x_sd = Eigen::VectorXd::Ones(p);
    } else {
      const Standardized st = standardize_covariates(raw_x, out.covariate_names);
      out.X = st.X;
      out.x_mean = st.mean;
      out.x_sd = st.sd;
    }
  } else {
    out.X.resize(n, 0);
    out.x_mean.resize(0);
    out.x_sd.resize(0);
  }
  out.validate();
  return out;
}

void write_dataset(const Dataset& data, const std::string& path) {
  std::ostringstream out;
  out << "id,x,y";
  for (const auto& name : data.item_names) out << ',' << name;
  for (const auto& name : data.covariate_names) out << ',' << name;
  out << '\n';
  for (int i = 0; i < data.n(); ++i) {
    out << (i + 1) << ',' << fmt(data.coords(i, 0)) << ','
        << fmt(data.coords(i, 1));
    for (int j = 0; j < data.q(); ++j)
      out << ',' << (data.obs_mask(i, j) ? std::to_string(data.y(i, j)) : "NA");
    for (int k = 0; k < data.p(); ++k) out << ',' << fmt(data.X(i, k));
    out << '\n';
  }
  write_text_file(path, out.str());
}

namespace {

ModelSpec parse_model_section(const ConfigFile& file,
                              const std::vector<std::string>& item_names,
                              int p) {
  SectionReader model(file, "model");
  ModelSpec spec;
  spec.m = static_cast<int>(
      parse_long(model.take("factors", "1"), model.where("factors")));
  if (spec.m < 1)
    throw ValidationError(model.where("factors") + ": must be >= 1");

  const std::string pat = model.take("loading_pattern", "");
  if (lower(trim(pat)) == "none") {
    spec.loading_pattern.resize(spec.m, 0);
  } else if (pat.empty()) {
    spec.loading_pattern = Eigen::MatrixXi::Identity(spec.m, spec.m);
  } else {
    const Eigen::MatrixXd raw =
        parse_matrix(pat, model.where("loading_pattern"));
    if (raw.rows() != spec.m)
      throw ValidationError(model.where("loading_pattern") +
                            ": needs one row per factor");
    spec.loading_pattern.resize(raw.rows(), raw.cols());
    for (int r = 0; r < raw.rows(); ++r)
      for (int c = 0; c < raw.cols(); ++c) {
        if (raw(r, c) != 0.0 && raw(r, c) != 1.0)
          throw ValidationError(model.where("loading_pattern") +
                                ": entries must be 0/1");
        spec.loading_pattern(r, c) = static_cast<int>(raw(r, c));
      }
  }

  const std::string mode = lower(model.take("sign_mode", "soft"));
  if (mode == "soft")
    spec.sign_mode = SignMode::soft;
  else if (mode == "hard")
    spec.sign_mode = SignMode::hard;
  else
    throw ValidationError(model.where("sign_mode") +
                          ": expected soft or hard");

  spec.residual_sd = parse_vector_bcast(model.take("residual_sd", "1"),
                                        spec.m, model.where("residual_sd"));

  spec.constraints.assign(item_names.size(),
                          ItemConstraint::all_free(spec.m));
  // Remaining keys must all be constraint_<item>.
  auto pending = model.pending();
  for (const auto& [key, value] : pending) {
    if (key.rfind("constraint_", 0) != 0) continue;
    const std::string item = key.substr(std::string("constraint_").size());
    int idx = -1;
    for (std::size_t j = 0; j < item_names.size(); ++j)
      if (lower(item_names[j]) == item) idx = static_cast<int>(j);
    if (idx < 0)
      throw ValidationError(model.where(key) + ": no item named '" + item +
                            "' in the dataset");
    const auto toks = tokens(value);
    if (static_cast<int>(toks.size()) != spec.m)
      throw ValidationError(model.where(key) + ": expected " +
                            std::to_string(spec.m) + " entries");
    ItemConstraint con = ItemConstraint::all_free(spec.m);
    for (int k = 0; k < spec.m; ++k) {
      const std::string t = lower(toks[k]);
      if (t == "free") {
        continue;
      } else if (t == "pos") {
        con.signs[k] = Sign::positive;
      } else if (t == "neg") {
        con.signs[k] = Sign::negative;
      } else {
        con.active(k) = 0;
        con.fixed(k) = parse_double(toks[k], model.where(key));
        con.signs[k] = Sign::free;
      }
    }
    spec.constraints[idx] = con;
    model.take(key, "");
  }
  model.finish();
  (void)p;
  return spec;
}

void parse_priors_section(const ConfigFile& file, ModelSpec& spec, int p) {
  SectionReader pr(file, "priors");
  const int q = spec.q();
  PriorSpec priors = default_priors(spec, p);

  priors.c_sd =
      parse_vector_bcast(pr.take("c_sd", "1"), q, pr.where("c_sd"));
  const double a_sd = parse_double(pr.take("a_sd", "1"), pr.where("a_sd"));
  const double a_mean =
      parse_double(pr.take("a_mean", "0"), pr.where("a_mean"));
  const double sign_mean =
      parse_double(pr.take("a_sign_mean", "1"), pr.where("a_sign_mean"));
  const double sign_sd =
      parse_double(pr.take("a_sign_sd", "0.45"), pr.where("a_sign_sd"));
  for (int j = 0; j < q; ++j)
    for (int k = 0; k < spec.m; ++k) {
      if (spec.constraints[j].signs[k] == Sign::free) {
        priors.a_mean(j, k) = a_mean;
        priors.a_sd(j, k) = a_sd;
      } else {
        const double s =
            spec.constraints[j].signs[k] == Sign::positive ? 1.0 : -1.0;
        priors.a_mean(j, k) = s * sign_mean;
        priors.a_sd(j, k) = sign_sd;
      }
    }

  priors.beta_sd = parse_vector_bcast(pr.take("beta_sd", "1"), spec.m * p,
                                      pr.where("beta_sd"));
  priors.t_log_mean =
      parse_vector_bcast(pr.take("t_log_mean", fmt(std::log(0.4))),
                         spec.free_t_count(), pr.where("t_log_mean"));
  priors.t_log_sd = parse_vector_bcast(pr.take("t_log_sd", "0.4"),
                                       spec.free_t_count(),
                                       pr.where("t_log_sd"));
  priors.phi_log_mean =
      parse_vector_bcast(pr.take("phi_log_mean", fmt(std::log(160.0))),
                         spec.g(), pr.where("phi_log_mean"));
  priors.phi_log_sd = parse_vector_bcast(pr.take("phi_log_sd", "0.3"),
                                         spec.g(), pr.where("phi_log_sd"));
  priors.lkj_eta = parse_double(pr.take("eta", "1.5"), pr.where("eta"));
  pr.finish();
  spec.priors = priors;
}

SamplerConfig parse_sampler_section(const ConfigFile& file) {
  SectionReader sa(file, "sampler");
  SamplerConfig config;
  config.iterations =
      parse_long(sa.take("iterations", "2000"), sa.where("iterations"));
  config.burn_in = parse_long(sa.take("burn_in", "1000"), sa.where("burn_in"));
  config.thin = parse_long(sa.take("thin", "1"), sa.where("thin"));
  config.adapt_C = parse_double(sa.take("c", "0.7"), sa.where("c"));
  config.adapt_alpha =
      parse_double(sa.take("alpha", "0.8"), sa.where("alpha"));
  config.target_accept = parse_double(sa.take("target_accept", "0.234"),
                                      sa.where("target_accept"));
  config.seed = static_cast<std::uint64_t>(
      parse_long(sa.take("seed", "0"), sa.where("seed")));
  config.chains =
      static_cast<int>(parse_long(sa.take("chains", "1"), sa.where("chains")));
  sa.finish();
  config.validate();
  return config;
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text,
                               const std::vector<std::string>& item_names,
                               int p, const std::string& origin) {
  const ConfigFile file = ConfigFile::parse(text, origin);
  for (const auto& [section, kv] : file.data)
    if (section != "model" && section != "priors" && section != "sampler")
      throw ValidationError(origin + ": unknown section [" + section + "]");
  ParsedConfig out;
  out.spec = parse_model_section(file, item_names, p);
  parse_priors_section(file, out.spec, p);
  out.sampler = parse_sampler_section(file);
  out.spec.validate();
  return out;
}

ParsedConfig parse_config(const std::string& path,
                          const std::vector<std::string>& item_names, int p) {
  return parse_config_text(read_text_file(path), item_names, p, path);
}

SimConfig parse_sim_config(const std::string& path) {
  const ConfigFile file = ConfigFile::parse(read_text_file(path), path);
  for (const auto& [section, kv] : file.data)
    if (section != "simulate" && section != "truth")
      throw ValidationError(path + ": unknown section [" + section + "]");

  SimConfig out;
  SectionReader sim(file, "simulate");
  out.n = static_cast<int>(parse_long(sim.take("n", "100"), sim.where("n")));
  out.p = static_cast<int>(
      parse_long(sim.take("covariates", "0"), sim.where("covariates")));
  out.seed = static_cast<std::uint64_t>(
      parse_long(sim.take("seed", "1"), sim.where("seed")));
  out.xmin = parse_double(sim.take("xmin", "0"), sim.where("xmin"));
  out.xmax = parse_double(sim.take("xmax", "1"), sim.where("xmax"));
  out.ymin = parse_double(sim.take("ymin", "0"), sim.where("ymin"));
  out.ymax = parse_double(sim.take("ymax", "1"), sim.where("ymax"));
  out.missing.fraction = parse_double(sim.take("missing_fraction", "0"),
                                      sim.where("missing_fraction"));
  const std::string mi = sim.take("missing_items", "");
  for (const auto& t : tokens(mi))
    out.missing.items.push_back(
        static_cast<int>(parse_long(t, sim.where("missing_items"))) - 1);
  sim.finish();

  SectionReader truth(file, "truth");
  out.truth.c = parse_vector(truth.take("c", "0"), truth.where("c"));
  out.truth.a = parse_matrix(truth.take("a", "1"), truth.where("a"));
  const int m = static_cast<int>(out.truth.a.cols());
  const std::string b = truth.take("b", "");
  out.truth.b = b.empty() ? Eigen::MatrixXd(0, m)
                          : parse_matrix(b, truth.where("b"));
  const std::string t = truth.take("t", "");
  out.truth.t =
      t.empty() ? Eigen::MatrixXd(m, 0) : parse_matrix(t, truth.where("t"));
  const std::string phi = truth.take("phi", "");
  out.truth.phi = phi.empty() ? Eigen::VectorXd(0)
                              : parse_vector(phi, truth.where("phi"));
  const std::string r = truth.take("r", "");
  if (r.empty()) {
    out.truth.r_v = Eigen::MatrixXd::Identity(m, m);
  } else {
    const Eigen::VectorXd vals = parse_vector(r, truth.where("r"));
    if (vals.size() != m * (m - 1) / 2)
      throw ValidationError(truth.where("r") + ": expected m(m-1)/2 entries");
    Eigen::MatrixXd rv = Eigen::MatrixXd::Identity(m, m);
    int next = 0;
    for (int col = 0; col < m; ++col)
      for (int row = col + 1; row < m; ++row) {
        rv(row, col) = vals(next);
        rv(col, row) = vals(next);
        ++next;
      }
    Eigen::LLT<Eigen::MatrixXd> llt(rv);
    if (llt.info() != Eigen::Success)
      throw ValidationError(truth.where("r") +
                            ": not a positive definite correlation matrix");
    out.truth.r_v = rv;
  }
  out.truth.d = parse_vector_bcast(truth.take("d", "1"), m, truth.where("d"));
  truth.finish();

  if (out.truth.t.cols() != out.truth.phi.size())
    throw ValidationError(path +
                          ": [truth] t columns must match phi length");
  if (out.truth.b.rows() != out.p)
    throw ValidationError(path +
                          ": [truth] b rows must match covariate count");
  return out;
}

void GridSpec::validate() const {
  if (!(cell > 0.0)) throw ValidationError("grid: cell size must be > 0");
  if (!(xmax > xmin) || !(ymax > ymin))
    throw ValidationError("grid: empty bounding box");
  if (mask_polygon.rows() > 0 && mask_polygon.rows() < 3)
    throw ValidationError("grid: mask polygon needs at least 3 vertices");
}

namespace {

bool point_in_polygon(double x, double y, const Eigen::MatrixXd& poly) {
  bool inside = false;
  const int k = static_cast<int>(poly.rows());
  for (int i = 0, j = k - 1; i < k; j = i++) {
    const double xi = poly(i, 0), yi = poly(i, 1);
    const double xj = poly(j, 0), yj = poly(j, 1);
    if (((yi > y) != (yj > y)) &&
        (x < (xj - xi) * (y - yi) / (yj - yi) + xi))
      inside = !inside;
  }
  return inside;
}

}  // namespace

Eigen::MatrixXd GridSpec::cell_centers() const {
  validate();
  const int nx = std::max(1, static_cast<int>((xmax - xmin) / cell + 1e-9));
  const int ny = std::max(1, static_cast<int>((ymax - ymin) / cell + 1e-9));
  std::vector<std::pair<double, double>> pts;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const double x = xmin + (ix + 0.5) * cell;
      const double y = ymin + (iy + 0.5) * cell;
      if (mask_polygon.rows() >= 3 && !point_in_polygon(x, y, mask_polygon))
        continue;
      pts.emplace_back(x, y);
    }
  if (pts.empty()) throw ValidationError("grid: no cells inside the mask");
  Eigen::MatrixXd out(pts.size(), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out(i, 0) = pts[i].first;
    out(i, 1) = pts[i].second;
  }
  return out;
}

namespace {

void write_block_csv(const std::string& path, const Eigen::VectorXd& iter,
                     const Eigen::MatrixXd& block,
                     const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "iteration";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    out << fmt(iter(i));
    for (Eigen::Index j = 0; j < block.cols(); ++j)
      out << ',' << fmt(block(i, j));
    out << '\n';
  }
  write_text_file(path, out.str());
}

Eigen::MatrixXd read_block_csv(const std::string& path,
                               Eigen::VectorXd* iter = nullptr) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(path + ": empty chain file");
  const int cols = static_cast<int>(split(trim(line), ',').size());
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != cols)
      throw ValidationError(path + ": truncated row " +
                            std::to_string(lineno));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row[c] = parse_double(cells[c], path + ": row " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd out(rows.size(), cols - 1);
  if (iter) iter->resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (iter) (*iter)(i) = rows[i][0];
    for (int c = 1; c < cols; ++c) out(i, c - 1) = rows[i][c];
  }
  return out;
}

std::vector<std::string> block_names(const std::string& stem, int count) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i)
    out.push_back(stem + "_" + std::to_string(i + 1));
  return out;
}

const std::vector<std::string> kChainFiles = {
    "c.csv", "a.csv", "theta.csv", "beta.csv", "t.csv", "phi.csv", "nu.csv",
    "accept.csv"};

}  // namespace

void write_chain(const std::vector<ChainOutput>& chains,
                 const std::string& dir, const Dataset& data,
                 const std::string& config_text, double timing_seconds) {
  if (chains.empty()) throw ValidationError("write_chain: no chains");
  fs::create_directories(dir);
  write_dataset(data, dir + "/dataset.csv");
  write_text_file(dir + "/config.cfg", config_text);

  json files = json::object();
  json chain_hashes = json::array();
  json acceptance = json::array();
  for (const auto& chain : chains) {
    const std::string sub = "chain_" + std::to_string(chain.chain_id);
    fs::create_directories(dir + "/" + sub);
    const int q = chain.spec.q();
    const int m = chain.m();
    write_block_csv(dir + "/" + sub + "/c.csv", chain.stored_iteration,
                    chain.c, chain.spec.q() > 0 ? block_names("c", q)
                                                : std::vector<std::string>{});
    std::vector<std::string> a_names;
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < q; ++j)
        a_names.push_back("a_" + std::to_string(j + 1) + "_" +
                          std::to_string(k + 1));
    write_block_csv(dir + "/" + sub + "/a.csv", chain.stored_iteration,
                    chain.a_star, a_names);
    std::vector<std::string> theta_names;
    for (int k = 0; k < m; ++k)
      for (int i = 0; i < chain.n; ++i)
        theta_names.push_back("theta_" + std::to_string(k + 1) + "_" +
                              std::to_string(i + 1));
    write_block_csv(dir + "/" + sub + "/theta.csv", chain.stored_iteration,
                    chain.theta, theta_names);
    std::vector<std::string> beta_names;
    for (int k = 0; k < m; ++k)
      for (int r = 0; r < chain.p; ++r)
        beta_names.push_back("beta_" + std::to_string(r + 1) + "_" +
                             std::to_string(k + 1));
    write_block_csv(dir + "/" + sub + "/beta.csv", chain.stored_iteration,
                    chain.beta, beta_names);
    write_block_csv(dir + "/" + sub + "/t.csv", chain.stored_iteration,
                    chain.t_free,
                    block_names("t", chain.spec.free_t_count()));
    write_block_csv(dir + "/" + sub + "/phi.csv", chain.stored_iteration,
                    chain.phi, block_names("phi", chain.spec.g()));
    write_block_csv(dir + "/" + sub + "/nu.csv", chain.stored_iteration,
                    chain.nu, block_names("nu", chain.spec.nu_count()));
    Eigen::VectorXd sweep_index(chain.accept_prob.size());
    for (Eigen::Index i = 0; i < sweep_index.size(); ++i)
      sweep_index(i) = static_cast<double>(i + 1);
    Eigen::MatrixXd accept(chain.accept_prob.size(), 2);
    accept.col(0) = chain.accept_prob;
    accept.col(1) = chain.adapt_log_scale;
    write_block_csv(dir + "/" + sub + "/accept.csv", sweep_index, accept,
                    {"accept_prob", "adapt_log_scale"});

    for (const auto& f : kChainFiles)
      files[sub + "/" + f] = file_hash(dir + "/" + sub + "/" + f);
    chain_hashes.push_back(hash_hex(chain.hash()));
    acceptance.push_back(chain.accept_prob.size() > 0
                             ? chain.accept_prob.mean()
                             : 0.0);
  }
  files["dataset.csv"] = file_hash(dir + "/dataset.csv");
  files["config.cfg"] = file_hash(dir + "/config.cfg");

  json manifest;
  manifest["tool_version"] = kVersion;
  manifest["spec_hash"] = file_hash(dir + "/config.cfg");
  manifest["dataset_hash"] = file_hash(dir + "/dataset.csv");
  manifest["seed"] = chains.front().config.seed;
  manifest["chains"] = static_cast<int>(chains.size());
  manifest["timing_seconds"] = timing_seconds;
  manifest["acceptance_rate"] = acceptance;
  manifest["chain_hashes"] = chain_hashes;
  manifest["files"] = files;
  json echo;
  echo["iterations"] = chains.front().config.iterations;
  echo["burn_in"] = chains.front().config.burn_in;
  echo["thin"] = chains.front().config.thin;
  echo["adapt_C"] = chains.front().config.adapt_C;
  echo["adapt_alpha"] = chains.front().config.adapt_alpha;
  echo["target_accept"] = chains.front().config.target_accept;
  manifest["config"] = echo;
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

LoadedRun load_chain(const std::string& dir) {
  const std::string manifest_text = read_text_file(dir + "/manifest.json");
  json manifest;
  try {
    manifest = json::parse(manifest_text);
  } catch (const std::exception& e) {
    throw ValidationError(dir + "/manifest.json: " + e.what());
  }

  LoadedRun out;
  out.manifest.tool_version = manifest.at("tool_version").get<std::string>();
  out.manifest.spec_hash = manifest.at("spec_hash").get<std::string>();
  out.manifest.dataset_hash = manifest.at("dataset_hash").get<std::string>();
  out.manifest.seed = manifest.at("seed").get<std::uint64_t>();
  out.manifest.chains = manifest.at("chains").get<int>();
  out.manifest.timing_seconds = manifest.at("timing_seconds").get<double>();
  for (const auto& v : manifest.at("acceptance_rate"))
    out.manifest.acceptance_rate.push_back(v.get<double>());
  for (const auto& v : manifest.at("chain_hashes"))
    out.manifest.chain_hashes.push_back(v.get<std::string>());

  for (const auto& [name, stored] : manifest.at("files").items()) {
    const std::string actual = file_hash(dir + "/" + name);
    if (actual != stored.get<std::string>())
      throw ValidationError(dir + "/" + name +
                            ": content hash mismatch (file was modified "
                            "after the run)");
  }

  out.data = load_dataset(dir + "/dataset.csv");
  const std::string config_text = read_text_file(dir + "/config.cfg");
  ParsedConfig parsed = parse_config_text(config_text, out.data.item_names,
                                          out.data.p(), dir + "/config.cfg");
  out.spec = parsed.spec;
  out.config = parsed.sampler;
  out.config.seed = out.manifest.seed;
  out.config.chains = out.manifest.chains;

  for (int id = 0; id < out.manifest.chains; ++id) {
    const std::string sub = dir + "/chain_" + std::to_string(id);
    ChainOutput chain;
    chain.spec = out.spec;
    chain.config = out.config;
    chain.chain_id = id;
    chain.n = out.data.n();
    chain.p = out.data.p();
    chain.residual_sd = out.spec.residual_sd;
    chain.c = read_block_csv(sub + "/c.csv", &chain.stored_iteration);
    chain.a_star = read_block_csv(sub + "/a.csv");
    chain.theta = read_block_csv(sub + "/theta.csv");
    chain.beta = read_block_csv(sub + "/beta.csv");
    chain.t_free = read_block_csv(sub + "/t.csv");
    chain.phi = read_block_csv(sub + "/phi.csv");
    chain.nu = read_block_csv(sub + "/nu.csv");
    const Eigen::MatrixXd accept = read_block_csv(sub + "/accept.csv");
    chain.accept_prob = accept.col(0);
    chain.adapt_log_scale = accept.col(1);
    if (hash_hex(chain.hash()) != out.manifest.chain_hashes.at(id))
      throw ValidationError(sub + ": chain hash mismatch after reload");
    out.chains.push_back(std::move(chain));
  }
  return out;
}

void export_prediction(const PredictionResult& pred, ExportFormat format,
                       const std::string& path) {
  if (format == ExportFormat::csv) {
    std::ostringstream out;
    out << "x,y";
    for (int k = 0; k < pred.m; ++k) {
      const std::string f = "factor_" + std::to_string(k + 1);
      out << ',' << f << "_median," << f << "_q05," << f << "_q95," << f
          << "_exceed0";
    }
    out << '\n';
    for (int i = 0; i < pred.n_new(); ++i) {
      out << fmt(pred.new_coords(i, 0)) << ',' << fmt(pred.new_coords(i, 1));
      for (int k = 0; k < pred.m; ++k)
        out << ',' << fmt(pred.median(i, k)) << ',' << fmt(pred.q05(i, k))
            << ',' << fmt(pred.q95(i, k)) << ',' << fmt(pred.exceed0(i, k));
      out << '\n';
    }
    write_text_file(path, out.str());
    return;
  }
  json features = json::array();
  for (int i = 0; i < pred.n_new(); ++i) {
    json props;
    for (int k = 0; k < pred.m; ++k) {
      const std::string f = "factor_" + std::to_string(k + 1);
      props[f + "_median"] = pred.median(i, k);
      props[f + "_q05"] = pred.q05(i, k);
      props[f + "_q95"] = pred.q95(i, k);
      props[f + "_exceed0"] = pred.exceed0(i, k);
    }
    features.push_back({{"type", "Feature"},
                        {"geometry",
                         {{"type", "Point"},
                          {"coordinates",
                           {pred.new_coords(i, 0), pred.new_coords(i, 1)}}}},
                        {"properties", props}});
  }
  json fc = {{"type", "FeatureCollection"}, {"features", features}};
  write_text_file(path, fc.dump(2) + "\n");
}

std::vector<std::string> check_geojson(const std::string& path) {
  std::vector<std::string> issues;
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const std::exception& e) {
    issues.push_back(std::string("parse error: ") + e.what());
    return issues;
  }
  if (doc.value("type", "") != "FeatureCollection")
    issues.push_back("root type is not FeatureCollection");
  if (!doc.contains("features") || !doc["features"].is_array()) {
    issues.push_back("missing features array");
    return issues;
  }
  int idx = 0;
  for (const auto& f : doc["features"]) {
    const std::string where = "feature " + std::to_string(idx++);
    if (f.value("type", "") != "Feature")
      issues.push_back(where + ": type is not Feature");
    if (!f.contains("geometry") ||
        f["geometry"].value("type", "") != "Point")
      issues.push_back(where + ": geometry is not a Point");
    else {
      const auto& coords = f["geometry"]["coordinates"];
      if (!coords.is_array() || coords.size() != 2 ||
          !coords[0].is_number() || !coords[1].is_number())
        issues.push_back(where + ": coordinates are not [x, y]");
    }
    if (!f.contains("properties") || !f["properties"].is_object())
      issues.push_back(where + ": missing properties object");
    else
      for (const auto& [key, value] : f["properties"].items())
        if (!value.is_number() ||
            !std::isfinite(value.get<double>()))
          issues.push_back(where + ": property " + key + " is not finite");
  }
  return issues;
}

ScoresFile load_scores(const std::string& path,
                       const std::string& value_column) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  const auto header = split(trim(line), ',');
  int cx = -1, cy = -1, cv = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = lower(trim(header[c]));
    if (name == "x") cx = static_cast<int>(c);
    if (name == "y") cy = static_cast<int>(c);
    if (name == lower(value_column)) cv = static_cast<int>(c);
  }
  if (cx < 0 || cy < 0 || cv < 0)
    throw ValidationError(path + ": needs columns x, y and " + value_column);
  std::vector<std::array<double, 3>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::string where = path + ": row " + std::to_string(lineno);
    if (cells.size() != header.size())
      throw ValidationError(where + ": wrong cell count");
    rows.push_back({parse_double(cells[cx], where),
                    parse_double(cells[cy], where),
                    parse_double(cells[cv], where)});
  }
  ScoresFile out;
  out.coords.resize(rows.size(), 2);
  out.values.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.coords(i, 0) = rows[i][0];
    out.coords(i, 1) = rows[i][1];
    out.values(i) = rows[i][2];
  }
  return out;
}

void write_variogram(const Variogram& v, const std::string& path) {
  std::ostringstream out;
  out << "center,gamma,pairs\n";
  for (Eigen::Index b = 0; b < v.centers.size(); ++b) {
    out << fmt(v.centers(b)) << ',';
    if (v.pair_count(b) > 0)
      out << fmt(v.gamma(b));
    else
      out << "NA";
    out << ',' << v.pair_count(b) << '\n';
  }
  write_text_file(path, out.str());
}

std::string format_config(const ModelSpec& spec, const SamplerConfig& config,
                          const std::vector<std::string>& item_names) {
  std::ostringstream out;
  out << "[model]\n";
  out << "factors = " << spec.m << "\n";
  out << "loading_pattern = ";
  if (spec.g() == 0) {
    out << "none";
  } else {
    for (int r = 0; r < spec.m; ++r) {
      if (r) out << " ; ";
      for (int c = 0; c < spec.g(); ++c) {
        if (c) out << ' ';
        out << spec.loading_pattern(r, c);
      }
    }
  }
  out << "\n";
  out << "sign_mode = "
      << (spec.sign_mode == SignMode::soft ? "soft" : "hard") << "\n";
  out << "residual_sd =";
  for (int k = 0; k < spec.m; ++k) out << ' ' << fmt(spec.residual_sd(k));
  out << "\n";
  for (int j = 0; j < spec.q(); ++j) {
    const auto& con = spec.constraints[j];
    bool all_free = true;
    for (int k = 0; k < spec.m; ++k)
      if (!con.active(k) || con.signs[k] != Sign::free) all_free = false;
    if (all_free) continue;
    out << "constraint_" << item_names.at(j) << " =";
    for (int k = 0; k < spec.m; ++k) {
      if (!con.active(k))
        out << ' ' << fmt(con.fixed(k));
      else if (con.signs[k] == Sign::positive)
        out << " pos";
      else if (con.signs[k] == Sign::negative)
        out << " neg";
      else
        out << " free";
    }
    out << "\n";
  }
  out << "\n[priors]\n";
  out << "c_sd = " << fmt(spec.priors.c_sd(0)) << "\n";
  out << "eta = " << fmt(spec.priors.lkj_eta) << "\n";
  if (spec.free_t_count() > 0) {
    out << "t_log_mean = " << fmt(spec.priors.t_log_mean(0)) << "\n";
    out << "t_log_sd = " << fmt(spec.priors.t_log_sd(0)) << "\n";
  }
  if (spec.g() > 0) {
    out << "phi_log_mean = " << fmt(spec.priors.phi_log_mean(0)) << "\n";
    out << "phi_log_sd = " << fmt(spec.priors.phi_log_sd(0)) << "\n";
  }
  out << "\n[sampler]\n";
  out << "iterations = " << config.iterations << "\n";
  out << "burn_in = " << config.burn_in << "\n";
  out << "thin = " << config.thin << "\n";
  out << "c = " << fmt(config.adapt_C) << "\n";
  out << "alpha = " << fmt(config.adapt_alpha) << "\n";
  out << "target_accept = " << fmt(config.target_accept) << "\n";
  out << "seed = " << config.seed << "\n";
  out << "chains = " << config.chains << "\n";
  return out.str();
}

}  // namespace geofactor
