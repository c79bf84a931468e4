#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "solid/core/types.hpp"
#include "solid/descriptor/binning.hpp"
#include "solid/eval/benchmark.hpp"

namespace solid {

namespace detail {

// Shortest round-trip decimal form of a double, stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Everything a batch run needs, round-trippable through a flat
/// `key=value` text file so outputs can embed their exact configuration.
struct RunConfig {
  std::string scans;        // directory of .bin scans
  std::string poses;        // pose file (optional)
  std::string fov = "0-360";
  double voxel = 0.5;
  int nr = 40;
  int na = 60;
  int ne = 64;
  double lmax = 80.0;
  double fup = 2.0;
  double fdown = -25.0;
  std::int64_t exclude_recent = 100;
  double gt_dist = 10.0;
  double sample_spacing = 0.0;  // 0 disables distance sampling
  std::string backend = "bf";
  std::string variant = "standard";
  std::string up_axis = "z";  // vertical axis of the pose frame, for RE
  std::string out = "out";
  int jobs = 1;
  std::uint64_t seed = 42;

  bool operator==(const RunConfig&) const = default;

  BinningConfig binning() const {
    BinningConfig cfg;
    cfg.n_r = nr;
    cfg.n_a = na;
    cfg.n_e = ne;
    cfg.l_max = lmax;
    cfg.f_up = fup;
    cfg.f_down = fdown;
    cfg.voxel = voxel;
    cfg.variant = parse_variant(variant);
    cfg.validate();
    return cfg;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "scans=" << scans << "\n"
       << "poses=" << poses << "\n"
       << "fov=" << fov << "\n"
       << "voxel=" << detail::format_double(voxel) << "\n"
       << "nr=" << nr << "\n"
       << "na=" << na << "\n"
       << "ne=" << ne << "\n"
       << "lmax=" << detail::format_double(lmax) << "\n"
       << "fup=" << detail::format_double(fup) << "\n"
       << "fdown=" << detail::format_double(fdown) << "\n"
       << "exclude_recent=" << exclude_recent << "\n"
       << "gt_dist=" << detail::format_double(gt_dist) << "\n"
       << "sample_spacing=" << detail::format_double(sample_spacing) << "\n"
       << "backend=" << backend << "\n"
       << "variant=" << variant << "\n"
       << "up_axis=" << up_axis << "\n"
       << "out=" << out << "\n"
       << "jobs=" << jobs << "\n"
       << "seed=" << seed << "\n";
    return os.str();
  }

  static RunConfig from_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw FormatError("config line " + std::to_string(line_no) + ": expected key=value");
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (!cfg.set(key, value))
        throw FormatError("config line " + std::to_string(line_no) + ": unknown key '" + key +
                          "'");
    }
    return cfg;
  }

  void save(const std::string& path) const {
    std::ofstream out_file(path, std::ios::trunc);
    if (!out_file) throw IoError("cannot write config file: " + path);
    out_file << to_text();
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return from_text(os.str());
  }

 private:
  bool set(const std::string& key, const std::string& value) {
    const auto as_double = [&](double& target) {
      try {
        target = std::stod(value);
      } catch (const std::exception&) {
        throw FormatError("config key '" + key + "': bad number '" + value + "'");
      }
    };
    const auto as_int = [&](auto& target) {
      try {
        target = static_cast<std::remove_reference_t<decltype(target)>>(std::stoll(value));
      } catch (const std::exception&) {
        throw FormatError("config key '" + key + "': bad integer '" + value + "'");
      }
    };

    if (key == "scans") scans = value;
    else if (key == "poses") poses = value;
    else if (key == "fov") fov = value;
    else if (key == "voxel") as_double(voxel);
    else if (key == "nr") as_int(nr);
    else if (key == "na") as_int(na);
    else if (key == "ne") as_int(ne);
    else if (key == "lmax") as_double(lmax);
    else if (key == "fup") as_double(fup);
    else if (key == "fdown") as_double(fdown);
    else if (key == "exclude_recent") as_int(exclude_recent);
    else if (key == "gt_dist") as_double(gt_dist);
    else if (key == "sample_spacing") as_double(sample_spacing);
    else if (key == "backend") backend = value;
    else if (key == "variant") variant = value;
    else if (key == "up_axis") up_axis = value;
    else if (key == "out") out = value;
    else if (key == "jobs") as_int(jobs);
    else if (key == "seed") as_int(seed);
    else return false;
    return true;
  }
};

/// FNV-1a of the config text; embedded in outputs as a provenance tag.
inline std::string config_fingerprint(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char c : cfg.to_text()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace solid
