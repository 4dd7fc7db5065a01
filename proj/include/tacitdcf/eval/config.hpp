#pragma once

// Flat key=value config files mirroring TrackerConfig. Blank lines and
// '#' comments are ignored; unknown keys and bad values are format errors
// naming the line.

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "tacitdcf/error.hpp"
#include "tacitdcf/tracker.hpp"

namespace tacitdcf::eval {

inline std::string to_string(WeightMode m) {
  switch (m) {
    case WeightMode::kUniform: return "uniform";
    case WeightMode::kRandom: return "random";
    case WeightMode::kAdaptive: return "adaptive";
  }
  return "adaptive";
}

inline std::optional<WeightMode> parse_weight_mode(const std::string& s) {
  if (s == "uniform") return WeightMode::kUniform;
  if (s == "random") return WeightMode::kRandom;
  if (s == "adaptive") return WeightMode::kAdaptive;
  return std::nullopt;
}

inline std::string to_string(SolverMode m) { return m == SolverMode::kGaussSeidel ? "gauss-seidel" : "closed-form"; }

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& v) {
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument(v);
  return d;
}

inline std::uint64_t to_unsigned(const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument(v);
  return out;
}

inline bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument(v);
}

using Setter = std::function<void(TrackerConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  auto dbl = [](double TrackerConfig::*m) { return Setter([m](TrackerConfig& c, const std::string& v) { c.*m = to_double(v); }); };
  auto sz = [](std::size_t TrackerConfig::*m) {
    return Setter([m](TrackerConfig& c, const std::string& v) { c.*m = static_cast<std::size_t>(to_unsigned(v)); });
  };
  auto flag = [](bool TrackerConfig::*m) { return Setter([m](TrackerConfig& c, const std::string& v) { c.*m = to_bool(v); }); };
  static const std::map<std::string, Setter> table = {
      {"levels", [](TrackerConfig& c, const std::string& v) { c.bank.levels = static_cast<std::size_t>(to_unsigned(v)); }},
      {"orientations",
       [](TrackerConfig& c, const std::string& v) { c.bank.orientations = static_cast<std::size_t>(to_unsigned(v)); }},
      {"include_input", [](TrackerConfig& c, const std::string& v) { c.bank.include_input = to_bool(v); }},
      {"learning_rate", dbl(&TrackerConfig::learning_rate)},
      {"lambda", dbl(&TrackerConfig::lambda)},
      {"lambda_msk", [](TrackerConfig& c, const std::string& v) { c.reg.lambda_msk = to_double(v); }},
      {"lambda_sty", [](TrackerConfig& c, const std::string& v) { c.reg.lambda_sty = to_double(v); }},
      {"lambda_tmp", [](TrackerConfig& c, const std::string& v) { c.reg.lambda_tmp = to_double(v); }},
      {"lambda_sts", [](TrackerConfig& c, const std::string& v) { c.reg.lambda_sts = to_double(v); }},
      {"eta", dbl(&TrackerConfig::eta)},
      {"scale_count", sz(&TrackerConfig::scale_count)},
      {"scale_step", dbl(&TrackerConfig::scale_step)},
      {"sigma_ratio", dbl(&TrackerConfig::sigma_ratio)},
      {"patch_size", sz(&TrackerConfig::patch_size)},
      {"padding", dbl(&TrackerConfig::padding)},
      {"weight_mode",
       [](TrackerConfig& c, const std::string& v) {
         const auto m = parse_weight_mode(v);
         if (!m) throw std::invalid_argument(v);
         c.weight_mode = *m;
       }},
      {"solver",
       [](TrackerConfig& c, const std::string& v) {
         if (v == "closed-form") c.solver = SolverMode::kClosedForm;
         else if (v == "gauss-seidel") c.solver = SolverMode::kGaussSeidel;
         else throw std::invalid_argument(v);
       }},
      {"history_length", sz(&TrackerConfig::history_length)},
      {"cosine_window", flag(&TrackerConfig::cosine_window)},
      {"normalize_features", flag(&TrackerConfig::normalize_features)},
      {"penalty_min", dbl(&TrackerConfig::penalty_min)},
      {"penalty_max", dbl(&TrackerConfig::penalty_max)},
      {"penalty_coeffs", sz(&TrackerConfig::penalty_coeffs)},
      {"solver_sweeps", sz(&TrackerConfig::solver_sweeps)},
      {"solver_initial_sweeps", sz(&TrackerConfig::solver_initial_sweeps)},
      {"solver_tol", dbl(&TrackerConfig::solver_tol)},
      {"seed", [](TrackerConfig& c, const std::string& v) { c.seed = to_unsigned(v); }},
      {"workers", sz(&TrackerConfig::workers)},
  };
  return table;
}

}  // namespace detail

/// Applies the key=value lines of `text` on top of `base`.
inline TrackerConfig parse_config(const std::string& text, TrackerConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(n) + ": expected key=value", std::nullopt, n);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto& table = detail::setters();
    const auto it = table.find(key);
    if (it == table.end()) throw FormatError("config line " + std::to_string(n) + ": unknown key '" + key + "'", std::nullopt, n);
    try {
      it->second(base, value);
    } catch (const std::exception&) {
      throw FormatError("config line " + std::to_string(n) + ": bad value '" + value + "' for " + key, std::nullopt, n);
    }
  }
  try {
    base.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("config: ") + e.what(), std::nullopt);
  }
  return base;
}

inline TrackerConfig load_config(const std::string& path, TrackerConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path, std::nullopt);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

/// Serializes every field; parse_config(format_config(c)) reproduces c.
inline std::string format_config(const TrackerConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "levels=" << c.bank.levels << "\norientations=" << c.bank.orientations
      << "\ninclude_input=" << (c.bank.include_input ? "true" : "false") << "\nlearning_rate=" << c.learning_rate
      << "\nlambda=" << c.lambda << "\nlambda_msk=" << c.reg.lambda_msk << "\nlambda_sty=" << c.reg.lambda_sty
      << "\nlambda_tmp=" << c.reg.lambda_tmp << "\nlambda_sts=" << c.reg.lambda_sts << "\neta=" << c.eta
      << "\nscale_count=" << c.scale_count << "\nscale_step=" << c.scale_step << "\nsigma_ratio=" << c.sigma_ratio
      << "\npatch_size=" << c.patch_size << "\npadding=" << c.padding << "\nweight_mode=" << to_string(c.weight_mode)
      << "\nsolver=" << to_string(c.solver) << "\nhistory_length=" << c.history_length
      << "\ncosine_window=" << (c.cosine_window ? "true" : "false")
      << "\nnormalize_features=" << (c.normalize_features ? "true" : "false") << "\npenalty_min=" << c.penalty_min
      << "\npenalty_max=" << c.penalty_max << "\npenalty_coeffs=" << c.penalty_coeffs
      << "\nsolver_sweeps=" << c.solver_sweeps << "\nsolver_initial_sweeps=" << c.solver_initial_sweeps
      << "\nsolver_tol=" << c.solver_tol << "\nseed=" << c.seed << "\nworkers=" << c.workers << '\n';
  return out.str();
}

}  // namespace tacitdcf::eval
