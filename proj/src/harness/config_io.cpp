#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "fedsense/error.hpp"
#include "fedsense/harness.hpp"

namespace fedsense::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Value parsers throw std::invalid_argument; the caller attaches the line.
double read_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t read_count(std::string_view text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" +
                                std::string(text) + "'");
  }
  return v;
}

bool read_bool(std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(text) + "'");
}

struct Field {
  std::string_view key;
  std::function<std::string(const SimulationConfig&)> get;
  std::function<void(SimulationConfig&, std::string_view)> set;
};

Field real(std::string_view key, double SimulationConfig::*member) {
  return {key, [member](const SimulationConfig& c) { return format_double(c.*member); },
          [member](SimulationConfig& c, std::string_view v) { c.*member = read_double(v); }};
}

template <typename Get>
Field real(std::string_view key, Get access) {
  return {key,
          [access](const SimulationConfig& c) {
            return format_double(access(c));
          },
          [access](SimulationConfig& c, std::string_view v) { access(c) = read_double(v); }};
}

template <typename Get>
Field count(std::string_view key, Get access) {
  return {key,
          [access](const SimulationConfig& c) {
            return std::to_string(access(c));
          },
          [access](SimulationConfig& c, std::string_view v) {
            access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(
                read_count(v));
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      count("settings", [](auto& c) -> auto& { return c.settings; }),
      count("data_per_uav", [](auto& c) -> auto& { return c.data.data_per_uav; }),
      count("num_uavs", [](auto& c) -> auto& { return c.num_uavs; }),
      real("k_rician", [](auto& c) -> auto& { return c.radio.k_rician; }),
      real("ptx_dbm", [](auto& c) -> auto& { return c.radio.ptx_dbm; }),
      real("n0_dbm", [](auto& c) -> auto& { return c.radio.n0_dbm; }),
      count("m_samples", [](auto& c) -> auto& { return c.radio.m_samples; }),
      real("fs_hz", [](auto& c) -> auto& { return c.radio.fs_hz; }),
      real("fc_hz", [](auto& c) -> auto& { return c.radio.fc_hz; }),
      real("x_max", [](auto& c) -> auto& { return c.bounds.x_max; }),
      real("y_max", [](auto& c) -> auto& { return c.bounds.y_max; }),
      real("z_max", [](auto& c) -> auto& { return c.bounds.z_max; }),
      real("z_r", &SimulationConfig::radar_altitude),
      real("d_min", &SimulationConfig::d_min),
      real("vmax_mps", [](auto& c) -> auto& { return c.radio.vmax_mps; }),
      real("alpha", [](auto& c) -> auto& { return c.path_loss.alpha; }),
      real("theta0", [](auto& c) -> auto& { return c.path_loss.theta0; }),
      real("beta", [](auto& c) -> auto& { return c.path_loss.beta; }),
      real("zeta", [](auto& c) -> auto& { return c.path_loss.zeta; }),
      real("nu0", [](auto& c) -> auto& { return c.path_loss.nu0; }),
      real("eta", [](auto& c) -> auto& { return c.path_loss.eta; }),
      real("sigma0", [](auto& c) -> auto& { return c.path_loss.sigma0; }),
      real("p_h1", [](auto& c) -> auto& { return c.data.p_h1; }),
      real("test_fraction", [](auto& c) -> auto& { return c.data.test_fraction; }),
      real("lr", [](auto& c) -> auto& { return c.train.adam.lr; }),
      real("beta1", [](auto& c) -> auto& { return c.train.adam.beta1; }),
      real("beta2", [](auto& c) -> auto& { return c.train.adam.beta2; }),
      real("adam_eps", [](auto& c) -> auto& { return c.train.adam.eps; }),
      count("batch_size", [](auto& c) -> auto& { return c.train.batch_size; }),
      count("max_epochs", [](auto& c) -> auto& { return c.train.max_epochs; }),
      count("patience", [](auto& c) -> auto& { return c.train.patience; }),
      real("min_delta", [](auto& c) -> auto& { return c.train.min_delta; }),
      real("bn_momentum", [](auto& c) -> auto& { return c.train.bn_momentum; }),
      {"input_ref_dbm",
       [](const SimulationConfig& c) {
         return c.radio.input_ref_dbm ? format_double(*c.radio.input_ref_dbm)
                                      : std::string("noise");
       },
       [](SimulationConfig& c, std::string_view v) {
         if (v == "noise") {
           c.radio.input_ref_dbm.reset();
         } else {
           c.radio.input_ref_dbm = read_double(v);
         }
       }},
      {"n0_offsets_db",
       [](const SimulationConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.radio.n0_offsets_db.size(); ++i) {
           if (i > 0) out += ',';
           out += format_double(c.radio.n0_offsets_db[i]);
         }
         return out;
       },
       [](SimulationConfig& c, std::string_view v) {
         c.radio.n0_offsets_db.clear();
         while (!v.empty()) {
           const auto comma = v.find(',');
           c.radio.n0_offsets_db.push_back(read_double(trim(v.substr(0, comma))));
           if (comma == std::string_view::npos) break;
           v.remove_prefix(comma + 1);
         }
       }},
      {"aggregator",
       [](const SimulationConfig& c) { return std::string(to_string(c.aggregator)); },
       [](SimulationConfig& c, std::string_view v) {
         if (v != "fedavg" && v != "fedsnr") {
           throw std::invalid_argument("expected fedavg or fedsnr");
         }
         c.aggregator = parse_aggregator(v);
       }},
      {"fresh_init",
       [](const SimulationConfig& c) { return std::string(c.fresh_init ? "true" : "false"); },
       [](SimulationConfig& c, std::string_view v) { c.fresh_init = read_bool(v); }},
      count("seed", [](auto& c) -> auto& { return c.seed; }),
      count("repeats", [](auto& c) -> auto& { return c.repeats; }),
      count("workers", [](auto& c) -> auto& { return c.workers; }),
      count("packing_retries", [](auto& c) -> auto& { return c.packing_retries; }),
  };
  return table;
}

}  // namespace

SimulationConfig parse_config(std::string_view text, const SimulationConfig& base) {
  SimulationConfig cfg = base;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_no, "expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key");

    const Field* field = nullptr;
    for (const auto& f : fields()) {
      if (f.key == key) field = &f;
    }
    if (field == nullptr) {
      throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
    }
    if (!seen.emplace(key).second) {
      throw ParseError(line_no, "duplicate key '" + std::string(key) + "'");
    }
    try {
      field->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, std::string(key) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

SimulationConfig load_config(const std::filesystem::path& path,
                             const SimulationConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), base);
}

std::string serialize_config(const SimulationConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace fedsense::harness
