#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "ncgs/error.hpp"

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kInput = 2, kFormat = 3 };

struct Common {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

ncgs::cli::Config load_config(const Common& c) {
  ncgs::cli::Config cfg = c.config ? ncgs::cli::Config::load(*c.config) : ncgs::cli::Config{};
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) ncgs::fail(ncgs::ErrorCode::kConfig, "--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key=value config file");
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--set", c.overrides, "override one config key (key=value), repeatable");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = ncgs::cli;
  CLI::App app{"Neural compression of 3D mesh sets"};
  app.require_subcommand(1);
  Common common;
  std::string out;

  cli::FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit a TSDF-Def tensor to every .obj in a directory");
  fit_cmd->add_option("meshes", fit.mesh_dir, "directory of .obj files")->required();
  fit_cmd->add_option("--out", fit.out, "output tensor archive")->required();
  fit_cmd->add_option("--workers", fit.workers, "parallel fits")->check(CLI::PositiveNumber);
  add_common(fit_cmd, common);

  cli::TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train features and the shared decoder");
  train_cmd->add_option("tensors", train.tensors, "tensor archive from fit")->required();
  train_cmd->add_option("--out", train.out, "output model state")->required();
  train_cmd->add_option("--resume", train.resume, "continue from a model state");
  train_cmd->add_option("--loss-csv", train.loss_csv, "per-epoch loss CSV");
  add_common(train_cmd, common);

  std::string state_in;
  auto* compress_cmd = app.add_subcommand("compress", "quantize and entropy-code a model state");
  compress_cmd->add_option("state", state_in, "model state from train")->required();
  compress_cmd->add_option("--out", out, "output .ncgs")->required();

  std::string stream_in;
  auto* decompress_cmd = app.add_subcommand("decompress", "decode every shape of a .ncgs to OBJ");
  decompress_cmd->add_option("bitstream", stream_in, ".ncgs file")->required();
  decompress_cmd->add_option("--out", out, "output directory")->required();

  cli::AddArgs add;
  auto* add_cmd = app.add_subcommand("add", "append a new shape with frozen decoder parameters");
  add_cmd->add_option("mesh", add.mesh, "new .obj")->required();
  add_cmd->add_option("--state", add.state, "model state; the new feature is appended in place")->required();
  add_cmd->add_option("--in", add.in, "input .ncgs")->required();
  add_cmd->add_option("--out", add.out, "output .ncgs")->required();
  add_common(add_cmd, common);

  cli::EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "per-shape CD, NC and F-scores");
  eval_cmd->add_option("originals", eval.original_dir, "directory of reference .obj")->required();
  eval_cmd->add_option("recons", eval.recon_dir, "directory of reconstructed .obj")->required();
  eval_cmd->add_option("--out", eval.out, "output CSV")->required();
  eval_cmd->add_option("--label", eval.label, "label column");
  add_common(eval_cmd, common);

  cli::RdArgs rd;
  auto* rd_cmd = app.add_subcommand("rd", "rate-distortion sweep over decoder widths");
  rd_cmd->add_option("tensors", rd.tensors, "tensor archive from fit")->required();
  rd_cmd->add_option("meshes", rd.mesh_dir, "directory of reference .obj")->required();
  rd_cmd->add_option("--out", rd.out, "output CSV")->required();
  add_common(rd_cmd, common);

  int desk_res = 96;
  auto* desk_cmd = app.add_subcommand("gen-desk", "write the analytic test shapes as OBJ");
  desk_cmd->add_option("--out", out, "output directory")->required();
  desk_cmd->add_option("--resolution", desk_res, "extraction grid")->check(CLI::Range(8, 1024));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*fit_cmd) cli::cmd_fit(load_config(common), fit);
    else if (*train_cmd) cli::cmd_train(load_config(common), train);
    else if (*compress_cmd) cli::cmd_compress(state_in, out);
    else if (*decompress_cmd) cli::cmd_decompress(stream_in, out);
    else if (*add_cmd) cli::cmd_add(load_config(common), add);
    else if (*eval_cmd) cli::cmd_eval(load_config(common), eval);
    else if (*rd_cmd) cli::cmd_rd(load_config(common), rd);
    else if (*desk_cmd) cli::cmd_gen_desk(out, desk_res);
  } catch (const ncgs::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.is_format_error() ? kFormat : kInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternal;
  }
  return kOk;
}
