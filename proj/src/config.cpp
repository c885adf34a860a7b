#include "gcd/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <type_traits>
#include <sstream>

namespace gcd {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("bad value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ConfigError("bad boolean '" + std::string(text) + "' for key '" + std::string(key) + "'");
}

struct Field {
  std::string key;
  bool train_field;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

template <typename T>
Field number_field(std::string key, bool train_field, T RunConfig::*outer) {
  return {key, train_field, [outer](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*outer);
            else return std::to_string(c.*outer);
          },
          [outer, key](RunConfig& c, std::string_view v) { c.*outer = parse_value<T>(key, v); }};
}

template <typename T, typename Getter>
Field train_number(std::string key, Getter member) {
  return {key, true,
          [member](const RunConfig& c) {
            const T value = member(c);
            if constexpr (std::is_floating_point_v<T>) return format_double(value);
            else return std::to_string(value);
          },
          [member, key](RunConfig& c, std::string_view v) { member(c) = parse_value<T>(key, v); }};
}

template <typename Getter>
Field train_bool(std::string key, Getter member) {
  return {key, true, [member](const RunConfig& c) {
            return std::string(member(c) ? "1" : "0");
          },
          [member, key](RunConfig& c, std::string_view v) { member(c) = parse_bool(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"data", false, [](const RunConfig& c) { return c.data; },
                 [](RunConfig& c, std::string_view v) { c.data = std::string(v); }});
    f.push_back({"run_dir", false, [](const RunConfig& c) { return c.run_dir; },
                 [](RunConfig& c, std::string_view v) { c.run_dir = std::string(v); }});
    f.push_back(train_number<double>("alpha", [](auto& c) -> auto& { return c.train.alpha; }));
    f.push_back(train_number<double>("tau_sup", [](auto& c) -> auto& { return c.train.temps.tau_sup; }));
    f.push_back(train_number<double>("tau_u", [](auto& c) -> auto& { return c.train.temps.tau_u; }));
    f.push_back(train_number<double>("sinkhorn_epsilon",
                                     [](auto& c) -> auto& { return c.train.sinkhorn.epsilon; }));
    f.push_back(train_number<int>("sinkhorn_iters", [](auto& c) -> auto& { return c.train.sinkhorn.n_iters; }));
    f.push_back(train_number<double>("weak_noise_sigma",
                                     [](auto& c) -> auto& { return c.train.view.weak_noise_sigma; }));
    f.push_back(train_number<double>("strong_noise_sigma",
                                     [](auto& c) -> auto& { return c.train.view.strong_noise_sigma; }));
    f.push_back(train_number<double>("strong_mask_fraction",
                                     [](auto& c) -> auto& { return c.train.view.strong_mask_fraction; }));
    f.push_back(train_number<std::uint64_t>("view_seed",
                                            [](auto& c) -> auto& { return c.train.view.seed; }));
    f.push_back(train_number<int>("batch_size", [](auto& c) -> auto& { return c.train.batch_size; }));
    f.push_back(train_number<int>("epochs", [](auto& c) -> auto& { return c.train.epochs; }));
    f.push_back(train_number<double>("learning_rate",
                                     [](auto& c) -> auto& { return c.train.learning_rate; }));
    f.push_back(train_number<int>("k_proto", [](auto& c) -> auto& { return c.train.k_proto; }));
    f.push_back(train_number<int>("hidden_dim", [](auto& c) -> auto& { return c.train.hidden_dim; }));
    f.push_back(train_number<int>("out_dim", [](auto& c) -> auto& { return c.train.out_dim; }));
    f.push_back(train_number<std::uint64_t>("seed", [](auto& c) -> auto& { return c.train.seed; }));
    f.push_back(train_bool("use_sup", [](auto& c) -> auto& { return c.train.terms.sup; }));
    f.push_back(train_bool("use_js", [](auto& c) -> auto& { return c.train.terms.js; }));
    f.push_back(train_bool("use_swap", [](auto& c) -> auto& { return c.train.terms.swap; }));
    f.push_back(number_field("m", false, &RunConfig::neighbors));
    f.push_back(number_field("min_gain", false, &RunConfig::min_gain));
    return f;
  }();
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  if (neighbors < 1) throw ConfigError("m must be >= 1");
  if (!(min_gain > 0.0)) throw ConfigError("min_gain must be positive");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  find_field(key).set(config, trim(value));
}

std::string get_setting(const RunConfig& config, std::string_view key) {
  return find_field(key).get(config);
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_text(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + "=" + f.get(config) + "\n";
  return out;
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_text(config);
  if (!out) throw IoError("write failed for " + path.string());
}

std::string train_spec_text(const TrainSpec& spec) {
  RunConfig c;
  c.train = spec;
  std::string out;
  for (const auto& f : fields()) {
    if (f.train_field) out += f.key + "=" + f.get(c) + "\n";
  }
  return out;
}

}  // namespace gcd
