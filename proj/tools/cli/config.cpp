#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "ncgs/error.hpp"

namespace ncgs::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  fail(ErrorCode::kConfig, "key '" + key + "': expected " + expected + ", got '" + value + "'");
}

long long parse_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  const long long x = parse_integer(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) bad_value(key, v, "a 32-bit integer");
  return static_cast<int>(x);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    bad_value(key, v, "a number");
  }
  if (used != v.size() || !std::isfinite(x)) bad_value(key, v, "a finite number");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& v, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (item.empty()) bad_value(key, v, "a comma-separated list");
    out.push_back(parse(key, item));
  }
  return out;
}

float f32_bound(const std::string& key, const std::string& v) { return static_cast<float>(parse_double(key, v)); }

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> table = {
      {"K", [](Config& c, const std::string& k, const std::string& v) { c.K = parse_int(k, v); }},
      {"K_prime", [](Config& c, const std::string& k, const std::string& v) { c.K_prime = parse_int(k, v); }},
      {"C", [](Config& c, const std::string& k, const std::string& v) { c.C = parse_int(k, v); }},
      {"L", [](Config& c, const std::string& k, const std::string& v) { c.L = parse_int(k, v); }},
      {"scale", [](Config& c, const std::string& k, const std::string& v) { c.scale = parse_int(k, v); }},
      {"kernel", [](Config& c, const std::string& k, const std::string& v) { c.kernel = parse_int(k, v); }},
      {"head_width", [](Config& c, const std::string& k, const std::string& v) { c.head_width = parse_int(k, v); }},
      {"widths", [](Config& c, const std::string& k, const std::string& v) { c.widths = parse_list<int>(k, v, parse_int); }},
      {"N_feat", [](Config& c, const std::string& k, const std::string& v) { c.N_feat = parse_int(k, v); }},
      {"N_param", [](Config& c, const std::string& k, const std::string& v) { c.N_param = parse_int(k, v); }},
      {"quant_a", [](Config& c, const std::string& k, const std::string& v) { c.quant_a = f32_bound(k, v); }},
      {"quant_b", [](Config& c, const std::string& k, const std::string& v) { c.quant_b = f32_bound(k, v); }},
      {"lambda_reg", [](Config& c, const std::string& k, const std::string& v) { c.lambda_reg = parse_double(k, v); }},
      {"lambda1", [](Config& c, const std::string& k, const std::string& v) { c.lambda1 = parse_double(k, v); }},
      {"lambda2", [](Config& c, const std::string& k, const std::string& v) { c.lambda2 = parse_double(k, v); }},
      {"tau", [](Config& c, const std::string& k, const std::string& v) { c.tau = parse_double(k, v); }},
      {"epochs", [](Config& c, const std::string& k, const std::string& v) { c.epochs = parse_int(k, v); }},
      {"lr_fit", [](Config& c, const std::string& k, const std::string& v) { c.lr_fit = parse_double(k, v); }},
      {"lr_train", [](Config& c, const std::string& k, const std::string& v) { c.lr_train = parse_double(k, v); }},
      {"lr_add", [](Config& c, const std::string& k, const std::string& v) { c.lr_add = parse_double(k, v); }},
      {"lr_final_fraction",
       [](Config& c, const std::string& k, const std::string& v) { c.lr_final_fraction = parse_double(k, v); }},
      {"lr_horizon", [](Config& c, const std::string& k, const std::string& v) { c.lr_horizon = parse_int(k, v); }},
      {"max_iter", [](Config& c, const std::string& k, const std::string& v) { c.max_iter = parse_int(k, v); }},
      {"fit_samples", [](Config& c, const std::string& k, const std::string& v) { c.fit_samples = parse_int(k, v); }},
      {"fit_final_lr_fraction",
       [](Config& c, const std::string& k, const std::string& v) { c.fit_final_lr_fraction = parse_double(k, v); }},
      {"n_eval", [](Config& c, const std::string& k, const std::string& v) { c.n_eval = parse_int(k, v); }},
      {"seed",
       [](Config& c, const std::string& k, const std::string& v) {
         const long long s = parse_integer(k, v);
         if (s < 0) bad_value(k, v, "a non-negative integer");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"views", [](Config& c, const std::string& k, const std::string& v) { c.views = parse_list<double>(k, v, parse_double); }},
      {"lambda_rec", [](Config& c, const std::string& k, const std::string& v) { c.lambda_rec = parse_double(k, v); }},
      {"margin", [](Config& c, const std::string& k, const std::string& v) { c.margin = parse_double(k, v); }},
      {"normalize", [](Config& c, const std::string& k, const std::string& v) { c.normalize = parse_bool(k, v); }},
      {"rd_scales",
       [](Config& c, const std::string& k, const std::string& v) { c.rd_scales = parse_list<double>(k, v, parse_double); }},
      {"rd_baseline", [](Config& c, const std::string& k, const std::string& v) { c.rd_baseline = parse_bool(k, v); }},
      {"qdeepsdf_hidden",
       [](Config& c, const std::string& k, const std::string& v) { c.qdeepsdf_hidden = parse_int(k, v); }},
      {"qdeepsdf_batch",
       [](Config& c, const std::string& k, const std::string& v) { c.qdeepsdf_batch = parse_int(k, v); }},
      {"qdeepsdf_epochs",
       [](Config& c, const std::string& k, const std::string& v) { c.qdeepsdf_epochs = parse_int(k, v); }},
  };
  return table;
}

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::kConfig, message);
}

}  // namespace

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : schema()) out.push_back(k);
    return out;
  }();
  return names;
}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = schema().find(key);
  if (it == schema().end()) fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
  it->second(*this, key, value);
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config " + path.string());
  Config cfg;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kConfig, path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      fail(ErrorCode::kConfig, path.string() + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    try {
      cfg.set(key, value);
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

void Config::validate() const {
  require(K >= 8, "K must be at least 8");
  require(K_prime >= 1 && C >= 1 && L >= 0, "K_prime and C must be positive, L non-negative");
  require(scale >= 1 && kernel >= 1 && kernel % 2 == 1, "scale must be positive and kernel odd");
  require(head_width >= 1, "head_width must be positive");
  require(widths.empty() || static_cast<int>(widths.size()) == L, "widths must list exactly L values");
  for (int w : widths) require(w >= 1, "widths must be positive");
  require(N_feat >= 1 && N_feat <= 16 && N_param >= 1 && N_param <= 16, "quantization bits must lie in 1..16");
  require(quant_a < quant_b, "quant_a must be below quant_b");
  require(lambda_reg >= 0 && lambda1 >= 0 && lambda2 >= 0 && lambda_rec >= 0, "loss weights must be non-negative");
  require(tau > 0.0, "tau must be positive");
  require(epochs >= 0 && max_iter >= 1, "epochs must be non-negative and max_iter positive");
  require(lr_fit > 0 && lr_train > 0 && lr_add > 0, "learning rates must be positive");
  require(lr_final_fraction > 0 && lr_final_fraction <= 1, "lr_final_fraction must lie in (0, 1]");
  require(fit_final_lr_fraction > 0 && fit_final_lr_fraction <= 1, "fit_final_lr_fraction must lie in (0, 1]");
  require(lr_horizon >= 0, "lr_horizon must be non-negative");
  require(fit_samples >= 1 && n_eval >= 1, "sample counts must be positive");
  require(!views.empty(), "views must list at least one azimuth");
  require(margin >= 0.0 && margin < 1.0, "margin must lie in [0, 1)");
  require(!rd_scales.empty(), "rd_scales must not be empty");
  for (double s : rd_scales) require(s > 0.0, "rd_scales must be positive");
  require(qdeepsdf_hidden >= 1 && qdeepsdf_batch >= 2 && qdeepsdf_epochs >= 0, "invalid QuantDeepSDF settings");
  const DecoderArch a = arch();
  require(a.output_resolution() == K, "K_prime * scale^L = " + std::to_string(a.output_resolution()) +
                                          " does not equal K = " + std::to_string(K));
}

DecoderArch Config::arch() const {
  DecoderArch a;
  a.feature_resolution = K_prime;
  a.channels = C;
  a.head_width = head_width;
  a.kernel = kernel;
  for (int l = 0; l < L; ++l) a.modules.push_back({scale, widths.empty() ? 16 : widths[l]});
  return a;
}

TrainConfig Config::train_config() const {
  TrainConfig t;
  t.lambda1 = lambda1;
  t.lambda2 = lambda2;
  t.tau = tau;
  t.epochs = epochs;
  t.lr = lr_train;
  t.lr_final_fraction = lr_final_fraction;
  t.lr_horizon = lr_horizon;
  t.feature_quant = feature_quant();
  t.param_quant = param_quant();
  t.seed = seed;
  return t;
}

FitOptions Config::fit_options(std::uint64_t shape_seed) const {
  FitOptions f;
  f.max_iter = max_iter;
  f.lr = lr_fit;
  f.lambda_reg = lambda_reg;
  f.final_lr_fraction = fit_final_lr_fraction;
  f.seed = shape_seed;
  f.reference_samples = static_cast<std::size_t>(fit_samples);
  return f;
}

QDeepSdfConfig Config::qdeepsdf_config() const {
  QDeepSdfConfig q;
  q.epochs = qdeepsdf_epochs;
  q.batch = qdeepsdf_batch;
  q.lr = lr_train;
  q.tau = tau;
  q.feature_quant = feature_quant();
  q.param_quant = param_quant();
  q.seed = seed;
  return q;
}

std::vector<ViewSpec> Config::view_specs() const { return views_from_azimuths(views); }

}  // namespace ncgs::cli
