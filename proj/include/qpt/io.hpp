#pragma once

#include <array>
#include <charconv>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "qpt/analytic.hpp"
#include "qpt/errors.hpp"
#include "qpt/integrate.hpp"
#include "qpt/stability.hpp"

namespace qpt {

// --- number formatting --------------------------------------------------------

/// Shortest decimal representation that parses back to the identical double.
[[nodiscard]] inline std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

[[nodiscard]] inline double parse_double(std::string_view text, const std::string& field) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError(field + ": not a number: '" + std::string(text) + "'");
  }
  return value;
}

[[nodiscard]] inline int parse_int(std::string_view text, const std::string& field) {
  int value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError(field + ": not an integer: '" + std::string(text) + "'");
  }
  return value;
}

[[nodiscard]] inline std::string utc_timestamp_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Write via a temp file in the same directory plus rename, so readers never
/// observe a partial file.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot open for writing: " + tmp.string());
    }
    out << content;
    if (!out.flush()) {
      throw Error("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

// --- grid CSV -------------------------------------------------------------------

[[nodiscard]] inline std::string policy_comment(const ClassifierPolicy& p) {
  return "divergence_threshold:" + format_double(p.divergence_threshold) +
         ";stable_threshold:" + format_double(p.stable_threshold) +
         ";initial_value:" + format_double(p.initial_value) +
         ";horizon:" + format_double(p.horizon) + ";step:" + format_double(p.step) +
         ";bailout:" + format_double(p.bailout);
}

[[nodiscard]] inline ClassifierPolicy parse_policy_comment(std::string_view text) {
  ClassifierPolicy p;
  std::map<std::string, double, std::less<>> fields;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t semi = text.find(';', pos);
    const std::string_view item =
        text.substr(pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos);
    const std::size_t colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("policy comment: malformed item '" + std::string(item) + "'");
    }
    fields.emplace(std::string(item.substr(0, colon)),
                   parse_double(item.substr(colon + 1), "policy"));
    if (semi == std::string_view::npos) {
      break;
    }
    pos = semi + 1;
  }
  const auto get = [&](const char* key) {
    const auto it = fields.find(key);
    if (it == fields.end()) {
      throw ConfigError(std::string("policy comment: missing field ") + key);
    }
    return it->second;
  };
  p.divergence_threshold = get("divergence_threshold");
  p.stable_threshold = get("stable_threshold");
  p.initial_value = get("initial_value");
  p.horizon = get("horizon");
  p.step = get("step");
  p.bailout = get("bailout");
  return p;
}

/// Deterministic CSV image of a grid: parameters and policy in '#' comments,
/// then one `x,y,verdict,max_abs,growth_rate` row per cell in row-major
/// (iy, ix) order. Timestamps stay out of the CSV so identical sweeps give
/// byte-identical files.
[[nodiscard]] inline std::string grid_csv_string(const GridResult& grid) {
  const GridSpec& s = grid.spec;
  std::string out;
  out.reserve(static_cast<std::size_t>(s.nx) * s.ny * 32 + 512);
  out += "# qp-tongues grid\n";
  out += "# version=" + grid.code_version + "\n";
  out += "# plane=" + std::string(plane_name(s.plane)) + "\n";
  out += "# model=" + std::string(model_name(s.model)) + "\n";
  out += "# mu=" + format_double(s.fixed.mu) + "\n";
  out += "# omega_drive=" + format_double(s.fixed.omega_drive) + "\n";
  if (s.fixed.epsilon) {
    out += "# epsilon=" + format_double(*s.fixed.epsilon) + "\n";
  }
  if (s.fixed.delta_cap) {
    out += "# delta_cap=" + format_double(*s.fixed.delta_cap) + "\n";
  }
  if (s.fixed.alpha) {
    out += "# alpha=" + format_double(*s.fixed.alpha) + "\n";
  }
  out += "# x_min=" + format_double(s.x_min) + "\n";
  out += "# x_max=" + format_double(s.x_max) + "\n";
  out += "# nx=" + std::to_string(s.nx) + "\n";
  out += "# y_min=" + format_double(s.y_min) + "\n";
  out += "# y_max=" + format_double(s.y_max) + "\n";
  out += "# ny=" + std::to_string(s.ny) + "\n";
  out += "# policy=" + policy_comment(grid.policy) + "\n";
  out += "x,y,verdict,max_abs,growth_rate\n";
  for (int iy = 0; iy < s.ny; ++iy) {
    for (int ix = 0; ix < s.nx; ++ix) {
      const StabilityVerdict& v = grid.at(ix, iy);
      out += format_double(s.x_at(ix));
      out += ',';
      out += format_double(s.y_at(iy));
      out += ',';
      out += verdict_name(v.kind);
      out += ',';
      out += format_double(v.max_abs);
      out += ',';
      if (v.growth_rate) {
        out += format_double(*v.growth_rate);
      }
      out += '\n';
    }
  }
  return out;
}

[[nodiscard]] inline GridResult parse_grid_csv(const std::string& text) {
  GridResult grid;
  std::map<std::string, std::string, std::less<>> meta;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  std::vector<std::array<std::string, 5>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    if (line[0] == '#') {
      const std::size_t eq = line.find('=');
      if (eq != std::string::npos) {
        std::size_t key_start = 1;
        while (key_start < line.size() && line[key_start] == ' ') {
          ++key_start;
        }
        meta.emplace(line.substr(key_start, eq - key_start), line.substr(eq + 1));
      }
      continue;
    }
    if (!header_seen) {
      if (line != "x,y,verdict,max_abs,growth_rate") {
        throw ConfigError("grid csv: unexpected header '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    std::array<std::string, 5> cells;
    std::size_t pos = 0;
    for (int c = 0; c < 5; ++c) {
      const std::size_t comma = line.find(',', pos);
      if (c < 4 && comma == std::string::npos) {
        throw ConfigError("grid csv: malformed row '" + line + "'");
      }
      cells[c] = c < 4 ? line.substr(pos, comma - pos) : line.substr(pos);
      pos = comma + 1;
    }
    rows.push_back(std::move(cells));
  }

  const auto get = [&](const char* key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) {
      throw ConfigError(std::string("grid csv: missing comment field ") + key);
    }
    return it->second;
  };
  GridSpec& s = grid.spec;
  s.plane = plane_from_name(get("plane"));
  s.model = model_from_name(get("model"));
  s.fixed.mu = parse_double(get("mu"), "mu");
  s.fixed.omega_drive = parse_double(get("omega_drive"), "omega_drive");
  if (const auto it = meta.find("epsilon"); it != meta.end()) {
    s.fixed.epsilon = parse_double(it->second, "epsilon");
  }
  if (const auto it = meta.find("delta_cap"); it != meta.end()) {
    s.fixed.delta_cap = parse_double(it->second, "delta_cap");
  }
  if (const auto it = meta.find("alpha"); it != meta.end()) {
    s.fixed.alpha = parse_double(it->second, "alpha");
  }
  s.x_min = parse_double(get("x_min"), "x_min");
  s.x_max = parse_double(get("x_max"), "x_max");
  s.nx = parse_int(get("nx"), "nx");
  s.y_min = parse_double(get("y_min"), "y_min");
  s.y_max = parse_double(get("y_max"), "y_max");
  s.ny = parse_int(get("ny"), "ny");
  grid.policy = parse_policy_comment(get("policy"));
  if (const auto it = meta.find("version"); it != meta.end()) {
    grid.code_version = it->second;
  }
  s.validate();

  const std::size_t expected = static_cast<std::size_t>(s.nx) * s.ny;
  if (rows.size() != expected) {
    throw ConfigError("grid csv: expected " + std::to_string(expected) + " rows, found " +
                      std::to_string(rows.size()));
  }
  grid.verdicts.reserve(expected);
  for (const auto& cells : rows) {
    StabilityVerdict v;
    v.kind = verdict_from_name(cells[2]);
    v.max_abs = parse_double(cells[3], "max_abs");
    if (!cells[4].empty()) {
      v.growth_rate = parse_double(cells[4], "growth_rate");
    }
    grid.verdicts.push_back(std::move(v));
  }
  return grid;
}

// --- grid JSON sidecar -----------------------------------------------------------

[[nodiscard]] inline std::string grid_meta_json_string(const GridResult& grid) {
  nlohmann::json j;
  j["version"] = grid.code_version;
  j["created_at"] = grid.created_at;
  j["workers"] = grid.workers;
  nlohmann::json g;
  g["plane"] = std::string(plane_name(grid.spec.plane));
  g["model"] = std::string(model_name(grid.spec.model));
  g["mu"] = grid.spec.fixed.mu;
  g["omega_drive"] = grid.spec.fixed.omega_drive;
  if (grid.spec.fixed.epsilon) {
    g["epsilon"] = *grid.spec.fixed.epsilon;
  }
  if (grid.spec.fixed.delta_cap) {
    g["delta_cap"] = *grid.spec.fixed.delta_cap;
  }
  if (grid.spec.fixed.alpha) {
    g["alpha"] = *grid.spec.fixed.alpha;
  }
  g["x_min"] = grid.spec.x_min;
  g["x_max"] = grid.spec.x_max;
  g["nx"] = grid.spec.nx;
  g["y_min"] = grid.spec.y_min;
  g["y_max"] = grid.spec.y_max;
  g["ny"] = grid.spec.ny;
  j["grid"] = std::move(g);
  nlohmann::json p;
  p["divergence_threshold"] = grid.policy.divergence_threshold;
  p["stable_threshold"] = grid.policy.stable_threshold;
  p["initial_value"] = grid.policy.initial_value;
  p["horizon"] = grid.policy.horizon;
  p["step"] = grid.policy.step;
  p["bailout"] = grid.policy.bailout;
  j["policy"] = std::move(p);
  nlohmann::json notes = nlohmann::json::array();
  for (int iy = 0; iy < grid.spec.ny; ++iy) {
    for (int ix = 0; ix < grid.spec.nx; ++ix) {
      const auto& note = grid.at(ix, iy).note;
      if (!note.empty()) {
        notes.push_back({{"ix", ix}, {"iy", iy}, {"note", note}});
      }
    }
  }
  j["notes"] = std::move(notes);
  return j.dump(2) + "\n";
}

/// Merge sidecar metadata (timestamp, workers, per-cell notes) into a grid
/// parsed from CSV.
inline void apply_grid_meta_json(GridResult& grid, const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid meta json: ") + e.what());
  }
  if (j.contains("created_at")) {
    grid.created_at = j["created_at"].get<std::string>();
  }
  if (j.contains("workers")) {
    grid.workers = j["workers"].get<int>();
  }
  if (j.contains("version")) {
    grid.code_version = j["version"].get<std::string>();
  }
  if (j.contains("notes")) {
    for (const auto& item : j["notes"]) {
      const int ix = item.at("ix").get<int>();
      const int iy = item.at("iy").get<int>();
      if (ix < 0 || ix >= grid.spec.nx || iy < 0 || iy >= grid.spec.ny) {
        throw ConfigError("grid meta json: note index out of range");
      }
      grid.verdicts[static_cast<std::size_t>(iy) * grid.spec.nx + ix].note =
          item.at("note").get<std::string>();
    }
  }
}

[[nodiscard]] inline GridResult read_grid(const std::filesystem::path& csv_path,
                                          const std::optional<std::filesystem::path>&
                                              json_path = {}) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open grid csv: " + csv_path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  GridResult grid = parse_grid_csv(buf.str());
  if (json_path) {
    std::ifstream jin(*json_path, std::ios::binary);
    if (!jin) {
      throw ConfigError("cannot open grid meta json: " + json_path->string());
    }
    std::stringstream jbuf;
    jbuf << jin.rdbuf();
    apply_grid_meta_json(grid, jbuf.str());
  }
  return grid;
}

// --- gnuplot -------------------------------------------------------------------

/// A self-contained gnuplot script that renders the verdict chart from the
/// CSV (divergent cells as filled points over the white stable background).
[[nodiscard]] inline std::string gnuplot_script(const std::string& csv_filename,
                                                const GridSpec& spec) {
  const bool eo = spec.plane == GridPlane::EpsilonOmega;
  // epsilon-omega charts go omega-horizontal / eps-vertical
  const std::string xcol = eo ? "2" : "1";
  const std::string ycol = eo ? "$1" : "$2";
  std::string title = std::string(model_name(spec.model)) + "  mu=" +
                      format_double(spec.fixed.mu);
  if (spec.fixed.epsilon) {
    title += " eps=" + format_double(*spec.fixed.epsilon);
  }
  if (spec.fixed.delta_cap) {
    title += " Delta=" + format_double(*spec.fixed.delta_cap);
  }
  if (spec.fixed.alpha) {
    title += " alpha=" + format_double(*spec.fixed.alpha);
  }
  std::string s;
  s += "# render with: gnuplot -p " + csv_filename + ".gp\n";
  s += "set datafile separator comma\n";
  s += "set datafile commentschars '#'\n";
  s += "set title '" + title + "'\n";
  s += std::string("set xlabel '") + (eo ? "omega" : "delta1") + "'\n";
  s += std::string("set ylabel '") + (eo ? "epsilon" : "Delta") + "'\n";
  s += "plot '" + csv_filename + "' using " + xcol +
       ":((strcol(3) eq 'divergent') ? " + ycol +
       " : NaN) with points pt 5 ps 0.4 lc rgb 'dark-blue' title 'divergent', \\\n";
  s += "     '" + csv_filename + "' using " + xcol +
       ":((strcol(3) eq 'ambiguous') ? " + ycol +
       " : NaN) with points pt 6 ps 0.3 lc rgb 'orange' title 'ambiguous'\n";
  return s;
}

// --- boundary CSV ----------------------------------------------------------------

/// The four perturbative boundary branches sampled over a Delta range
/// (delta1/Omega units). Valid for small mu.
[[nodiscard]] inline std::string boundary_csv_string(double mu, double delta_min,
                                                     double delta_max, int samples) {
  detail::require(std::isfinite(delta_min) && std::isfinite(delta_max) &&
                      delta_min <= delta_max,
                  "boundary: need delta_min <= delta_max");
  detail::require(samples >= 1, "boundary: samples must be >= 1");
  std::string out;
  out += "# qp-tongues boundary (perturbative, valid small mu)\n";
  out += "# mu=" + format_double(mu) + "\n";
  out += "# columns are delta1/Omega\n";
  out += "delta_cap,branch1,branch2,branch3,branch4\n";
  const int rows = delta_min == delta_max ? 1 : samples;
  for (int i = 0; i < rows; ++i) {
    const double d = rows == 1 ? delta_min
                               : delta_min + (delta_max - delta_min) * i / (rows - 1);
    const BoundaryBranch b = mean_boundaries(mu, d);
    out += format_double(d) + ',' + format_double(b.branch1) + ',' +
           format_double(b.branch2) + ',' + format_double(b.branch3) + ',' +
           format_double(b.branch4) + '\n';
  }
  return out;
}

// --- timeseries CSV ---------------------------------------------------------------

template <std::size_t N>
[[nodiscard]] std::string timeseries_csv_string(const Trajectory<N>& traj,
                                                const std::array<const char*, N>& components,
                                                const std::vector<std::string>& comments) {
  std::string out;
  out += "# qp-tongues timeseries\n";
  for (const auto& c : comments) {
    out += "# " + c + "\n";
  }
  out += "t";
  for (const char* name : components) {
    out += ',';
    out += name;
  }
  out += ",envelope\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out += format_double(traj.times[k]);
    for (std::size_t j = 0; j < N; ++j) {
      out += ',';
      out += format_double(traj.states[k][j]);
    }
    out += ',';
    out += format_double(traj.running_max[k]);
    out += '\n';
  }
  return out;
}

// --- run configuration --------------------------------------------------------------

struct RunConfig {
  GridSpec spec;
  ClassifierPolicy policy;
  std::string basename = "grid";
};

namespace detail {

[[nodiscard]] inline const nlohmann::json& cfg_get(const nlohmann::json& j,
                                                   const std::string& key,
                                                   const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(path + key + ": missing required field");
  }
  return j.at(key);
}

[[nodiscard]] inline double cfg_num(const nlohmann::json& j, const std::string& key,
                                    const std::string& path) {
  const auto& v = cfg_get(j, key, path);
  if (!v.is_number()) {
    throw ConfigError(path + key + ": expected a number");
  }
  return v.get<double>();
}

[[nodiscard]] inline int cfg_int(const nlohmann::json& j, const std::string& key,
                                 const std::string& path) {
  const auto& v = cfg_get(j, key, path);
  if (!v.is_number_integer()) {
    throw ConfigError(path + key + ": expected an integer");
  }
  return v.get<int>();
}

[[nodiscard]] inline std::string cfg_str(const nlohmann::json& j, const std::string& key,
                                         const std::string& path) {
  const auto& v = cfg_get(j, key, path);
  if (!v.is_string()) {
    throw ConfigError(path + key + ": expected a string");
  }
  return v.get<std::string>();
}

}  // namespace detail

/**
 * @brief Parse the sweep configuration document (JSON; key paths mirror the
 * grid/policy fields). Policy fields are optional and default to the
 * desk-scale protocol. Errors carry the offending field path.
 */
[[nodiscard]] inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  const auto& grid = detail::cfg_get(j, "grid", "");
  cfg.spec.plane = plane_from_name(detail::cfg_str(grid, "plane", "grid."));
  cfg.spec.model = model_from_name(detail::cfg_str(grid, "model", "grid."));
  const auto& gx = detail::cfg_get(grid, "x", "grid.");
  cfg.spec.x_min = detail::cfg_num(gx, "min", "grid.x.");
  cfg.spec.x_max = detail::cfg_num(gx, "max", "grid.x.");
  cfg.spec.nx = detail::cfg_int(gx, "n", "grid.x.");
  const auto& gy = detail::cfg_get(grid, "y", "grid.");
  cfg.spec.y_min = detail::cfg_num(gy, "min", "grid.y.");
  cfg.spec.y_max = detail::cfg_num(gy, "max", "grid.y.");
  cfg.spec.ny = detail::cfg_int(gy, "n", "grid.y.");

  const auto& fixed = detail::cfg_get(j, "fixed", "");
  cfg.spec.fixed.mu = detail::cfg_num(fixed, "mu", "fixed.");
  cfg.spec.fixed.omega_drive = detail::cfg_num(fixed, "omega_drive", "fixed.");
  if (fixed.contains("epsilon") && !fixed.at("epsilon").is_null()) {
    cfg.spec.fixed.epsilon = detail::cfg_num(fixed, "epsilon", "fixed.");
  }
  if (fixed.contains("delta_cap") && !fixed.at("delta_cap").is_null()) {
    cfg.spec.fixed.delta_cap = detail::cfg_num(fixed, "delta_cap", "fixed.");
  }
  if (fixed.contains("alpha") && !fixed.at("alpha").is_null()) {
    cfg.spec.fixed.alpha = detail::cfg_num(fixed, "alpha", "fixed.");
  }

  cfg.policy = ClassifierPolicy::desk_scale(cfg.spec.model);
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    if (!p.is_object()) {
      throw ConfigError("policy: expected an object");
    }
    const auto maybe = [&](const char* key, double& target) {
      if (p.contains(key)) {
        if (!p.at(key).is_number()) {
          throw ConfigError(std::string("policy.") + key + ": expected a number");
        }
        target = p.at(key).get<double>();
      }
    };
    maybe("divergence_threshold", cfg.policy.divergence_threshold);
    maybe("stable_threshold", cfg.policy.stable_threshold);
    maybe("initial_value", cfg.policy.initial_value);
    maybe("horizon", cfg.policy.horizon);
    maybe("step", cfg.policy.step);
    maybe("bailout", cfg.policy.bailout);
  }
  if (j.contains("output")) {
    cfg.basename = detail::cfg_str(j.at("output"), "basename", "output.");
  }
  try {
    cfg.spec.validate();
    cfg.policy.validate();
  } catch (const InvalidSpec& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

}  // namespace qpt
