#pragma once

// Text files: trajectory, reward-curve and transfer-report CSVs and the
// checkpoint format. Numbers are written in shortest round-trip form, so a
// value read back is bit-identical to the one written.

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "biped/config.hpp"
#include "biped/env.hpp"
#include "biped/errors.hpp"
#include "biped/learning.hpp"
#include "biped/policy.hpp"
#include "biped/transfer.hpp"

namespace biped {

inline const std::vector<std::string>& trajectory_header() {
  static const std::vector<std::string> h{"t",           "x",           "z",           "dx",           "dz",
                                          "pitch",       "pitch_rate",  "stance_leg",  "left_angle",   "left_length",
                                          "right_angle", "right_length", "Fx_cmd",     "Fz_cmd",       "xp_cmd",
                                          "axial_force", "hip_torque",  "reward",      "fell"};
  return h;
}

inline const std::vector<std::string>& reward_curve_header() {
  static const std::vector<std::string> h{"iteration", "mean_reward", "std_reward", "mean_episode_steps",
                                          "fall_fraction"};
  return h;
}

inline const std::vector<std::string>& transfer_report_header() {
  static const std::vector<std::string> h{"policy_id",    "kind",        "env",       "n_episodes",
                                          "n_success",    "success_rate", "mean_reward", "mean_steps"};
  return h;
}

inline const char* stance_name(StanceLeg s) {
  switch (s) {
    case StanceLeg::Left: return "left";
    case StanceLeg::Right: return "right";
    default: return "flight";
  }
}

namespace detail {

inline void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
  out << '\n';
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline void check_written(const std::ostream& out, const std::filesystem::path& path) {
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace detail

// Streams one trajectory row per simulated step.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out) : out_(out) { detail::write_row(out_, trajectory_header()); }

  void operator()(const StepView& v) {
    const RobotState& s = v.after;
    auto f = format_double;
    detail::write_row(out_, {f(s.t), f(s.x), f(s.z), f(s.dx), f(s.dz), f(s.pitch), f(s.pitch_rate),
                             stance_name(s.stance_leg), f(s.left.angle), f(s.left.length), f(s.right.angle),
                             f(s.right.length), f(v.action.F_x), f(v.action.F_z), f(v.action.x_p),
                             f(s.axial_force), f(s.applied_torque), f(v.reward), v.fell ? "1" : "0"});
    ++rows_;
  }
  int rows() const { return rows_; }

 private:
  std::ostream& out_;
  int rows_ = 0;
};

inline void write_reward_curve(std::ostream& out, const std::vector<CurveRow>& curve) {
  detail::write_row(out, reward_curve_header());
  for (const auto& r : curve)
    detail::write_row(out, {std::to_string(r.iteration), format_double(r.mean_reward), format_double(r.std_reward),
                            format_double(r.mean_episode_steps), format_double(r.fall_fraction)});
}

inline void write_reward_curve(const std::filesystem::path& path, const std::vector<CurveRow>& curve) {
  auto out = detail::open_out(path);
  write_reward_curve(out, curve);
  detail::check_written(out, path);
}

inline void write_transfer_report(std::ostream& out, const TransferReport& rep) {
  detail::write_row(out, transfer_report_header());
  for (const auto& r : rep.rows)
    detail::write_row(out, {r.policy_id, to_string(r.kind), r.env, std::to_string(r.n_episodes),
                            std::to_string(r.n_success), format_double(r.success_rate), format_double(r.mean_reward),
                            format_double(r.mean_steps)});
}

inline void write_transfer_report(const std::filesystem::path& path, const TransferReport& rep) {
  auto out = detail::open_out(path);
  write_transfer_report(out, rep);
  detail::check_written(out, path);
}

// ---------------------------------------------------------------------------
// CSV reading (for plot-data)

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) throw ParseError(n, "row has " + std::to_string(cells.size()) + " cells");
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError(n, "missing header row");
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_csv(in);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace detail {

inline void write_numbers(std::ostream& out, const char* key, std::span<const double> v) {
  out << key << ' ' << v.size();
  for (double x : v) out << ' ' << format_double(x);
  out << '\n';
}

inline void write_mlp(std::ostream& out, const char* prefix, const MlpParams& p) {
  out << prefix << "_layers " << p.layer_sizes.size();
  for (int s : p.layer_sizes) out << ' ' << s;
  out << '\n';
  write_numbers(out, (std::string(prefix) + "_values").c_str(), p.values);
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line split into tokens; the first must equal `key`.
  std::vector<std::string> expect(const std::string& key) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      auto toks = split_ws(line);
      if (toks.empty()) continue;
      if (toks[0] != key) throw ParseError(line_, "expected '" + key + "', found '" + toks[0] + "'");
      return toks;
    }
    throw ParseError(line_, "unexpected end of file, expected '" + key + "'");
  }

  std::vector<double> numbers(const std::string& key) {
    auto toks = expect(key);
    if (toks.size() < 2) throw ParseError(line_, key + ": missing count");
    std::size_t n = to<std::size_t>(toks[1]);
    if (toks.size() != n + 2) throw ParseError(line_, key + ": expected " + std::to_string(n) + " values");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = to<double>(toks[i + 2]);
    return v;
  }

  MlpParams mlp(const std::string& prefix) {
    auto toks = expect(prefix + "_layers");
    if (toks.size() < 2) throw ParseError(line_, "missing layer count");
    std::size_t n = to<std::size_t>(toks[1]);
    if (toks.size() != n + 2 || n < 2) throw ParseError(line_, "bad layer list");
    for (std::size_t i = 0; i < n; ++i)
      if (to<int>(toks[i + 2]) <= 0) throw ParseError(line_, "layer sizes must be positive");
    MlpParams p;
    for (std::size_t i = 0; i < n; ++i) p.layer_sizes.push_back(to<int>(toks[i + 2]));
    p.values = numbers(prefix + "_values");
    if (p.values.size() != MlpParams::count(p.layer_sizes)) throw ParseError(line_, "parameter count does not match the layer sizes");
    return p;
  }

  template <class T>
  T to(const std::string& s) {
    try {
      return parse_number<T>(s);
    } catch (const InvalidArgument& e) {
      throw ParseError(line_, e.what());
    }
  }

  int line() const { return line_; }

 private:
  std::istream& in_;
  int line_ = 0;
};

inline constexpr const char* kGainOrder[] = {"K_pt", "K_dt", "K_pz", "K_dz", "theta_des",
                                             "z_des", "k", "v_tgt", "T", "clearance"};

}  // namespace detail

inline void write_policy(std::ostream& out, const GaussianMlpPolicy& p) {
  out << "biped-policy 1\n";
  out << "kind " << to_string(p.kind) << '\n';
  GainSet g = p.gains;
  std::vector<double> gains;
  for (const char* name : detail::kGainOrder) gains.push_back(gain_field(g, name));
  detail::write_numbers(out, "gains", gains);
  std::vector<double> ranges;
  for (const auto& r : p.output_ranges) {
    ranges.push_back(r.low);
    ranges.push_back(r.high);
  }
  detail::write_numbers(out, "ranges", ranges);
  detail::write_numbers(out, "log_std", p.log_std);
  detail::write_mlp(out, "mean", p.mean_net);
  out << "end\n";
}

inline GaussianMlpPolicy read_policy(std::istream& in) {
  detail::LineReader r(in);
  auto magic = r.expect("biped-policy");
  if (magic.size() != 2 || magic[1] != "1") throw ParseError(r.line(), "unsupported checkpoint version");
  GaussianMlpPolicy p;
  auto kind = r.expect("kind");
  if (kind.size() != 2) throw ParseError(r.line(), "kind needs one value");
  try {
    p.kind = policy_kind_from_string(kind[1]);
  } catch (const InvalidArgument& e) {
    throw ParseError(r.line(), e.what());
  }
  auto gains = r.numbers("gains");
  if (gains.size() != std::size(detail::kGainOrder)) throw ParseError(r.line(), "gains: wrong count");
  for (std::size_t i = 0; i < gains.size(); ++i) gain_field(p.gains, detail::kGainOrder[i]) = gains[i];
  auto ranges = r.numbers("ranges");
  if (ranges.size() % 2 != 0) throw ParseError(r.line(), "ranges: odd count");
  for (std::size_t i = 0; i < ranges.size(); i += 2) p.output_ranges.push_back({ranges[i], ranges[i + 1]});
  p.log_std = r.numbers("log_std");
  p.mean_net = r.mlp("mean");
  r.expect("end");
  try {
    validate(p);
  } catch (const Error& e) {
    throw ParseError(r.line(), e.what());
  }
  return p;
}

inline void write_value_net(std::ostream& out, const ValueNet& v) {
  out << "biped-value 1\n";
  out << "scale " << format_double(v.scale) << '\n';
  detail::write_mlp(out, "value", v.net);
  out << "end\n";
}

inline ValueNet read_value_net(std::istream& in) {
  detail::LineReader r(in);
  auto magic = r.expect("biped-value");
  if (magic.size() != 2 || magic[1] != "1") throw ParseError(r.line(), "unsupported checkpoint version");
  auto scale = r.expect("scale");
  if (scale.size() != 2) throw ParseError(r.line(), "scale needs one value");
  double sc = r.to<double>(scale[1]);
  if (!(sc > 0.0)) throw ParseError(r.line(), "scale must be positive");
  ValueNet v{r.mlp("value"), sc};
  if (v.net.in_dim() != kObsDim || v.net.out_dim() != 1) throw ParseError(r.line(), "value network shape");
  r.expect("end");
  return v;
}

inline void save_policy(const std::filesystem::path& path, const GaussianMlpPolicy& p) {
  auto out = detail::open_out(path);
  write_policy(out, p);
  detail::check_written(out, path);
}

inline GaussianMlpPolicy load_policy(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_policy(in);
}

inline void save_value_net(const std::filesystem::path& path, const ValueNet& v) {
  auto out = detail::open_out(path);
  write_value_net(out, v);
  detail::check_written(out, path);
}

inline ValueNet load_value_net(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_value_net(in);
}

inline void save_config(const std::filesystem::path& path, const ExperimentConfig& c) {
  auto out = detail::open_out(path);
  out << serialize_config(c);
  detail::check_written(out, path);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace biped
