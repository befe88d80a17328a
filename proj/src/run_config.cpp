#include "flatflow/run_config.hpp"

#include "flatflow/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace flatflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("config: key '" + key + "' has value '" + value + "', expected " + expected);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    bad_value(key, v, "a finite number");
  }
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    bad_value(key, v, "an integer");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (v.empty()) {
    return out;
  }
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_double(key, trim(item)));
  }
  return out;
}

// One entry per key, in file order: how to read it and how to write it.
struct ConfigKey {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> read;
  std::function<std::string(const RunConfig&)> write;
};

template <typename T>
ConfigKey number(const char* key, T RunConfig::*member) {
  return {key,
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) {
              c.*member = parse_double(k, v);
            } else {
              c.*member = parse_int<T>(k, v);
            }
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

template <typename E>
ConfigKey choice(const char* key, E RunConfig::*member, std::vector<std::pair<std::string, E>> names) {
  return {key,
          [member, names](RunConfig& c, const std::string& k, const std::string& v) {
            for (const auto& [n, e] : names) {
              if (n == v) {
                c.*member = e;
                return;
              }
            }
            std::string expected = "one of";
            for (const auto& [n, e] : names) expected += " " + n;
            bad_value(k, v, expected.c_str());
          },
          [member, names](const RunConfig& c) {
            for (const auto& [n, e] : names) {
              if (e == c.*member) return n;
            }
            return std::string("?");
          }};
}

const std::vector<ConfigKey>& fields() {
  static const std::vector<ConfigKey> table = {
      number("nx_cells", &RunConfig::nx_cells),
      number("ny_cells", &RunConfig::ny_cells),
      number("dx_length", &RunConfig::dx_length),
      choice("boundary", &RunConfig::boundary, {{"neumann", Boundary::Neumann}, {"periodic", Boundary::Periodic}}),
      choice("preset", &RunConfig::preset,
             {{"ball", Preset::Ball},
              {"ellipse", Preset::Ellipse},
              {"two-balls", Preset::TwoBalls},
              {"perturbed-circle", Preset::PerturbedCircle},
              {"from-file", Preset::FromFile}}),
      number("radius_box_fraction", &RunConfig::radius_box_fraction),
      {"axis_ratio",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto colon = v.find(':');
         if (colon == std::string::npos) bad_value(k, v, "a:b");
         c.axis_ratio_a = parse_double(k, trim(v.substr(0, colon)));
         c.axis_ratio_b = parse_double(k, trim(v.substr(colon + 1)));
       },
       [](const RunConfig& c) { return fmt(c.axis_ratio_a) + ":" + fmt(c.axis_ratio_b); }},
      number("gap_box_fraction", &RunConfig::gap_box_fraction),
      number("amplitude_relative", &RunConfig::amplitude_relative),
      number("wavenumber", &RunConfig::wavenumber),
      {"mask_path", [](RunConfig& c, const std::string&, const std::string& v) { c.mask_path = v; },
       [](const RunConfig& c) { return c.mask_path; }},
      number("h_time", &RunConfig::h_time),
      number("t_end_time", &RunConfig::t_end_time),
      number("snapshot_early_steps", &RunConfig::snapshot_early_steps),
      number("snapshot_growth_factor", &RunConfig::snapshot_growth_factor),
      number("containment_margin_cells", &RunConfig::containment_margin_cells),
      choice("perimeter_kind", &RunConfig::perimeter_kind,
             {{"isotropic", PerimeterKind::Isotropic}, {"anisotropic4", PerimeterKind::Anisotropic4}}),
      choice("mode", &RunConfig::mode,
             {{"volume-constrained", StepMode::VolumeConstrained}, {"unconstrained", StepMode::Unconstrained}}),
      number("inner_tol_length", &RunConfig::inner_tol_length),
      number("inner_max_iters", &RunConfig::inner_max_iters),
      number("lambda_tol_cells", &RunConfig::lambda_tol_cells),
      number("lambda_bracket_scale", &RunConfig::lambda_bracket_scale),
      {"ladder_h_time", [](RunConfig& c, const std::string& k, const std::string& v) { c.ladder_h_time = parse_list(k, v); },
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.ladder_h_time.size(); ++i) {
           out += (i ? "," : "") + fmt(c.ladder_h_time[i]);
         }
         return out;
       }},
      {"output_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
       [](const RunConfig& c) { return c.output_dir; }},
      {"write_pgm", [](RunConfig& c, const std::string& k, const std::string& v) { c.write_pgm = parse_bool(k, v); },
       [](const RunConfig& c) { return std::string(c.write_pgm ? "true" : "false"); }},
      number("seed", &RunConfig::seed),
      {"override_resolution_guard",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.override_resolution_guard = parse_bool(k, v); },
       [](const RunConfig& c) { return std::string(c.override_resolution_guard ? "true" : "false"); }},
  };
  return table;
}

}  // namespace

bool resolution_ok(double h, double dx) { return std::sqrt(h) >= 3.0 * dx * (1.0 - 1e-12); }

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
  if (nx_cells < 4 || ny_cells < 4) fail("nx_cells and ny_cells must be at least 4");
  if (!(dx_length > 0.0)) fail("dx_length must be positive");
  if (!(radius_box_fraction > 0.0) || radius_box_fraction >= 0.5) fail("radius_box_fraction must lie in (0, 0.5)");
  if (!(axis_ratio_a > 0.0) || !(axis_ratio_b > 0.0)) fail("axis_ratio entries must be positive");
  if (gap_box_fraction < 0.0) fail("gap_box_fraction must be non-negative");
  if (amplitude_relative < 0.0 || amplitude_relative >= 1.0) fail("amplitude_relative must lie in [0, 1)");
  if (wavenumber < 0) fail("wavenumber must be non-negative");
  if (preset == Preset::FromFile && mask_path.empty()) fail("preset from-file needs mask_path");
  if (!(h_time > 0.0)) fail("h_time must be positive");
  if (!(t_end_time >= h_time)) fail("t_end_time must be at least h_time");
  if (snapshot_early_steps < 0) fail("snapshot_early_steps must be non-negative");
  if (!(snapshot_growth_factor > 1.0)) fail("snapshot_growth_factor must exceed 1");
  if (containment_margin_cells < 0) fail("containment_margin_cells must be non-negative");
  if (!(inner_tol_length > 0.0)) fail("inner_tol_length must be positive");
  if (inner_max_iters < 1) fail("inner_max_iters must be positive");
  if (lambda_tol_cells < 0) fail("lambda_tol_cells must be non-negative");
  if (!(lambda_bracket_scale > 0.0)) fail("lambda_bracket_scale must be positive");
  for (double h : ladder_h_time) {
    if (!(h > 0.0)) fail("ladder_h_time entries must be positive");
  }
  if (output_dir.empty()) fail("output_dir must not be empty");
  if (!override_resolution_guard) {
    std::vector<double> hs = ladder_h_time;
    hs.push_back(h_time);
    for (double h : hs) {
      if (!resolution_ok(h, dx_length)) {
        std::ostringstream msg;
        msg << "sqrt(h) = " << std::sqrt(h) << " for h_time = " << h << " is below 3 dx_length = " << 3.0 * dx_length
            << "; refine the grid, enlarge h, or pass --override-resolution-guard";
        fail(msg.str());
      }
    }
  }
}

GridDomain RunConfig::domain() const { return GridDomain(nx_cells, ny_cells, dx_length, boundary); }

FlowConfig RunConfig::flow_config(double h) const {
  FlowConfig f;
  f.step.h = h;
  f.step.kind = perimeter_kind;
  f.step.inner_tol = inner_tol_length;
  f.step.inner_max_iters = inner_max_iters;
  f.step.lambda_tol = lambda_tol_cells;
  f.step.mode = mode;
  f.step.bracket_scale = lambda_bracket_scale;
  f.t_end = t_end_time;
  f.containment_margin = containment_margin_cells;
  f.early_snapshots = snapshot_early_steps;
  f.snapshot_growth = snapshot_growth_factor;
  return f;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  std::map<std::string, const ConfigKey*> byname;
  for (const ConfigKey& f : fields()) byname[f.key] = &f;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = byname.find(key);
    if (it == byname.end()) {
      throw ConfigError("config: unknown key '" + key + "' on line " + std::to_string(lineno));
    }
    if (!seen.insert(key).second) {
      throw ConfigError("config: key '" + key + "' given twice");
    }
    it->second->read(c, key, value);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string serialize(const RunConfig& c) {
  std::string out;
  for (const ConfigKey& f : fields()) {
    out += std::string(f.key) + " = " + f.write(c) + "\n";
  }
  return out;
}

bool operator==(const RunConfig& a, const RunConfig& b) { return serialize(a) == serialize(b); }

const char* preset_name(Preset p) {
  switch (p) {
    case Preset::Ball: return "ball";
    case Preset::Ellipse: return "ellipse";
    case Preset::TwoBalls: return "two-balls";
    case Preset::PerturbedCircle: return "perturbed-circle";
    case Preset::FromFile: return "from-file";
  }
  return "?";
}

const char* kind_name(PerimeterKind k) { return k == PerimeterKind::Isotropic ? "isotropic" : "anisotropic4"; }
const char* mode_name(StepMode m) { return m == StepMode::VolumeConstrained ? "volume-constrained" : "unconstrained"; }
const char* boundary_name(Boundary b) { return b == Boundary::Neumann ? "neumann" : "periodic"; }

BinarySet make_initial_set(const RunConfig& c) {
  const GridDomain d = c.domain();
  if (c.preset == Preset::FromFile) {
    BinarySet s = load_mask(c.mask_path);
    if (s.domain() != d) {
      throw ConfigError("config: mask file " + c.mask_path + " does not match the configured grid");
    }
    return s;
  }
  const double side = std::min(d.width(), d.height());
  const double r = c.radius_box_fraction * side;
  const double cx = 0.5 * d.width();
  const double cy = 0.5 * d.height();
  std::function<bool(double, double)> inside;
  switch (c.preset) {
    case Preset::Ball:
      inside = [=](double x, double y) { return std::hypot(x - cx, y - cy) <= r; };
      break;
    case Preset::Ellipse: {
      const double a = r;
      const double b = r * c.axis_ratio_b / c.axis_ratio_a;
      inside = [=](double x, double y) {
        const double u = (x - cx) / a;
        const double v = (y - cy) / b;
        return u * u + v * v <= 1.0;
      };
      break;
    }
    case Preset::TwoBalls: {
      const double off = r + 0.5 * c.gap_box_fraction * side;
      inside = [=](double x, double y) {
        return std::hypot(x - cx + off, y - cy) <= r || std::hypot(x - cx - off, y - cy) <= r;
      };
      break;
    }
    case Preset::PerturbedCircle: {
      const double amp = c.amplitude_relative;
      const int k = c.wavenumber;
      inside = [=](double x, double y) {
        const double theta = std::atan2(y - cy, x - cx);
        return std::hypot(x - cx, y - cy) <= r * (1.0 + amp * std::cos(k * theta));
      };
      break;
    }
    case Preset::FromFile:
      break;
  }
  MaskArray m = MaskArray::Zero(d.ny(), d.nx());
  for (Index iy = 0; iy < d.ny(); ++iy) {
    for (Index ix = 0; ix < d.nx(); ++ix) {
      m(iy, ix) = inside(d.center_x(ix), d.center_y(iy)) ? 1 : 0;
    }
  }
  BinarySet s(d, std::move(m));
  if (s.empty() || s.full()) {
    throw ConfigError(std::string("config: preset ") + preset_name(c.preset) + " gives an empty or full set on this grid");
  }
  return s;
}

}  // namespace flatflow
