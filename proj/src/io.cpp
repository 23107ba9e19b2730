#include "bspcop/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bspcop/error.hpp"

namespace bspcop {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

template <class T>
std::vector<T> get_vector(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(Errc::parse_error, std::string("model JSON is missing '") + key + "'");
  try {
    return j.at(key).get<std::vector<T>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("model JSON field '") + key + "': " + e.what());
  }
}

json tensor_json(const ParamTensor& t) {
  return json{{"dims", std::vector<int>(t.dims().begin(), t.dims().end())},
              {"entries", std::vector<double>(t.entries().begin(), t.entries().end())}};
}

json nan_safe(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json model_to_json(const CopulaModel& model) {
  json j;
  std::vector<int> degrees, counts, interior;
  for (const auto& b : model.bases()) {
    degrees.push_back(b.degree());
    counts.push_back(b.count());
    interior.push_back(b.interior_knots());
  }
  j["degrees"] = degrees;
  j["counts"] = counts;
  j["interior_knot_counts"] = interior;
  const auto e = model.params().entries();
  j["entries"] = std::vector<double>(e.begin(), e.end());
  j["targets"] = model.params().targets();
  return j;
}

CopulaModel model_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::parse_error, "model JSON must be an object");
  auto degrees = get_vector<int>(j, "degrees");
  auto counts = get_vector<int>(j, "counts");
  auto entries = get_vector<double>(j, "entries");
  auto targets = get_vector<std::vector<double>>(j, "targets");
  if (degrees.size() != counts.size() || targets.size() != counts.size() || counts.size() < 2)
    throw Error(Errc::parse_error, "model JSON axes disagree: degrees, counts and targets need equal length >= 2");
  if (j.contains("interior_knot_counts")) {
    auto interior = get_vector<int>(j, "interior_knot_counts");
    if (interior.size() != counts.size()) throw Error(Errc::parse_error, "interior_knot_counts has the wrong length");
    for (std::size_t a = 0; a < counts.size(); ++a)
      if (interior[a] != counts[a] - degrees[a] - 1)
        throw Error(Errc::parse_error, "interior_knot_counts[" + std::to_string(a) + "] does not equal count - degree - 1");
  }
  std::vector<BasisSystem> bases;
  std::size_t cells = 1;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    try {
      bases.push_back(BasisSystem::uniform(degrees[a], counts[a]));
    } catch (const Error& e) {
      throw Error(Errc::parse_error, std::string("axis ") + std::to_string(a) + ": " + e.what());
    }
    cells *= static_cast<std::size_t>(counts[a]);
    const auto w = bases.back().weights();
    if (targets[a].size() != w.size()) throw Error(Errc::parse_error, "targets[" + std::to_string(a) + "] has the wrong length");
    for (std::size_t k = 0; k < w.size(); ++k)
      if (std::abs(targets[a][k] - w[k]) > 1e-12)
        throw Error(Errc::parse_error, "targets[" + std::to_string(a) + "] disagree with the basis weights");
  }
  if (entries.size() != cells)
    throw Error(Errc::parse_error, "expected " + std::to_string(cells) + " entries, got " + std::to_string(entries.size()));
  ParamTensor params(counts, std::move(entries), std::move(targets));
  return CopulaModel(std::move(bases), std::move(params));
}

json fit_report_to_json(const FitReport& rep) {
  json j;
  j["params"] = tensor_json(rep.params);
  if (rep.multipliers.values.size() == 2) {
    j["mu"] = rep.multipliers.values[0];
    j["lambda"] = rep.multipliers.values[1];
  }
  j["multipliers"] = rep.multipliers.values;
  j["lp_trajectory"] = rep.lp_trajectory;
  j["lpstar_trajectory"] = rep.lpstar_trajectory;
  j["iterations"] = rep.iterations;
  j["converged"] = rep.converged;
  j["final_change"] = rep.final_change;
  j["kkt_residual"] = rep.kkt_residual;
  j["max_constraint_residual"] = rep.max_constraint_residual;
  j["max_tau_mass_error"] = rep.max_tau_mass_error;
  j["max_inner_sweeps"] = rep.max_inner_sweeps;
  j["config"] = {{"alpha", rep.scad.alpha},
                 {"beta", rep.scad.beta},
                 {"outer_tol", rep.config.outer_tol},
                 {"max_outer_iters", rep.config.max_outer_iters},
                 {"inner_tol", rep.config.inner_tol},
                 {"max_inner_iters", rep.config.max_inner_iters},
                 {"root_tol", rep.config.root_tol},
                 {"mu0", rep.config.mu0},
                 {"kkt_threshold", rep.config.kkt_threshold},
                 {"kkt_tol", rep.config.kkt_tol},
                 {"warm_start", rep.config.warm_start}};
  return j;
}

json selection_to_json(const SelectionReport& rep) {
  json j;
  json cv = json::array();
  for (const auto& c : rep.cv) {
    json fold_scores = json::array();
    for (double s : c.fold_scores) fold_scores.push_back(nan_safe(s));
    json errors = json::array();
    for (const auto& e : c.fold_errors) errors.push_back(e);
    cv.push_back({{"size", c.size},
                  {"alpha", c.alpha},
                  {"beta", c.beta},
                  {"score", nan_safe(c.score)},
                  {"valid", c.valid},
                  {"converged", c.converged},
                  {"fold_scores", fold_scores},
                  {"fold_errors", errors}});
  }
  json aic = json::array();
  for (const auto& c : rep.aic)
    aic.push_back({{"size", c.size},
                   {"alpha", c.alpha},
                   {"beta", c.beta},
                   {"score", nan_safe(c.score)},
                   {"mean_loglik", nan_safe(c.mean_loglik)},
                   {"valid", c.valid},
                   {"converged", c.converged},
                   {"error", c.error}});
  if (!rep.cv.empty()) j["cv"] = cv;
  if (!rep.aic.empty()) j["aic"] = aic;
  auto cell_ref = [](const auto& c) { return json{{"size", c.size}, {"alpha", c.alpha}, {"beta", c.beta}, {"score", c.score}}; };
  j["best_cv"] = rep.best_cv ? cell_ref(rep.cv[*rep.best_cv]) : json(nullptr);
  j["best_aic"] = rep.best_aic ? cell_ref(rep.aic[*rep.best_aic]) : json(nullptr);
  return j;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_selection_csv(std::ostream& os, const SelectionReport& rep) {
  std::size_t D = 0;
  if (!rep.cv.empty()) D = rep.cv.front().size.size();
  else if (!rep.aic.empty()) D = rep.aic.front().size.size();
  static const char* axis_names[] = {"m", "n", "k"};
  for (std::size_t a = 0; a < D; ++a) os << (a < 3 ? axis_names[a] : ("size" + std::to_string(a)).c_str()) << ',';
  os << "alpha,beta,fold,score,converged\n";
  auto prefix = [&](const auto& c) {
    for (int s : c.size) os << s << ',';
    os << format_double(c.alpha) << ',' << format_double(c.beta) << ',';
  };
  for (const auto& c : rep.cv) {
    for (std::size_t i = 0; i < c.fold_scores.size(); ++i) {
      prefix(c);
      os << i << ',' << format_double(c.fold_scores[i]) << ',' << int(c.fold_converged[i]) << '\n';
    }
    prefix(c);
    os << "all," << format_double(c.score) << ',' << int(c.converged) << '\n';
  }
  for (const auto& c : rep.aic) {
    prefix(c);
    os << "aic," << format_double(c.score) << ',' << int(c.converged) << '\n';
  }
}

void write_csv(std::ostream& os, const std::vector<std::string>& header, const Matrix& m) {
  for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
  os << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) os << (c ? "," : "") << format_double(m(r, c));
    os << '\n';
  }
}

Matrix read_csv(std::istream& is, const std::vector<std::string>& columns) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split_commas(line);
      break;
    }
  }
  if (header.empty()) throw Error(Errc::parse_error, "CSV input is empty; a header row is required");
  for (auto& h : header) h = unquote(h);

  std::vector<std::size_t> pick;
  if (columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) pick.push_back(j);
  } else {
    for (const auto& name : columns) {
      auto it = std::find(header.begin(), header.end(), name);
      if (it != header.end()) {
        pick.push_back(static_cast<std::size_t>(it - header.begin()));
      } else if (all_digits(name) && std::stoul(name) < header.size()) {
        pick.push_back(std::stoul(name));
      } else {
        throw Error(Errc::parse_error, "column '" + name + "' not found in the CSV header");
      }
    }
  }

  Matrix out;
  out.cols = pick.size();
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_commas(line);
    if (cells.size() != header.size())
      throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                                         " cells, found " + std::to_string(cells.size()));
    for (std::size_t j : pick) {
      const std::string cell = unquote(cells[j]);
      if (cell.empty())
        throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": missing value in column '" + header[j] + "'");
      double v;
      if (!parse_number(cell, v) || !std::isfinite(v))
        throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": non-numeric value '" + cell +
                                           "' in column '" + header[j] + "'");
      out.data.push_back(v);
    }
    ++out.rows;
  }
  return out;
}

Matrix read_csv_file(const std::string& path, const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open '" + path + "'");
  return read_csv(in, columns);
}

std::map<std::string, std::string> read_config(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::parse_error, "config line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(Errc::parse_error, "config line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second)
      throw Error(Errc::parse_error, "config line " + std::to_string(lineno) + ": repeated key '" + key + "'");
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open config '" + path + "'");
  return read_config(in);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::invalid_argument, "cannot write '" + path + "'");
  out << text;
}

}  // namespace bspcop
