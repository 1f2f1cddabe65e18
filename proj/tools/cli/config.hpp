#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ncgs/decoder.hpp"
#include "ncgs/fit.hpp"
#include "ncgs/qdeepsdf.hpp"
#include "ncgs/render.hpp"
#include "ncgs/train.hpp"

namespace ncgs::cli {

/// Pipeline settings read from a `key=value` file. Every key is checked
/// against a closed schema; '#' starts a comment.
struct Config {
  int K = 128;
  int K_prime = 4;
  int C = 16;
  int L = 5;
  int scale = 2;
  int kernel = 3;
  int head_width = 32;
  std::vector<int> widths;  // one per module; empty means 16 each
  int N_feat = 8;
  int N_param = 8;
  double quant_a = -1.0;
  double quant_b = 1.0;

  double lambda_reg = 10.0;
  double lambda1 = 5.0;
  double lambda2 = 10.0;
  double tau = 2.0 / 3.0;
  int epochs = 400;
  double lr_fit = 0.01;
  double lr_train = 1e-3;
  double lr_add = 3e-2;  // feature-only fit in `add`
  double lr_final_fraction = 1.0;
  int lr_horizon = 0;
  int max_iter = 500;
  int fit_samples = 10000;
  double fit_final_lr_fraction = 0.05;

  int n_eval = 100000;
  std::uint64_t seed = 0;
  std::vector<double> views{0.0, 90.0, 180.0, 270.0};
  double lambda_rec = 10.0;
  double margin = 0.1;
  bool normalize = true;

  std::vector<double> rd_scales{0.5, 1.0, 2.0};
  bool rd_baseline = false;
  int qdeepsdf_hidden = 64;
  int qdeepsdf_batch = 4096;
  int qdeepsdf_epochs = 400;

  static Config load(const std::filesystem::path& path);
  /// Applies one `key=value` assignment; unknown keys and bad values throw.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  static const std::vector<std::string>& keys();

  DecoderArch arch() const;
  TrainConfig train_config() const;
  FitOptions fit_options(std::uint64_t shape_seed) const;
  QDeepSdfConfig qdeepsdf_config() const;
  QuantSpec feature_quant() const { return {quant_a, quant_b, N_feat}; }
  QuantSpec param_quant() const { return {quant_a, quant_b, N_param}; }
  std::vector<ViewSpec> view_specs() const;
};

}  // namespace ncgs::cli
