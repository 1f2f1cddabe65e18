#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "config.hpp"

namespace ncgs::cli {

namespace fs = std::filesystem;

struct FitArgs {
  fs::path mesh_dir;
  fs::path out;
  int workers = 1;
};

struct TrainArgs {
  fs::path tensors;
  fs::path out;
  std::optional<fs::path> resume;
  std::optional<fs::path> loss_csv;
};

struct AddArgs {
  fs::path mesh;
  fs::path state;
  fs::path in;
  fs::path out;
};

struct EvalArgs {
  fs::path original_dir;
  fs::path recon_dir;
  fs::path out;
  std::string label = "ncgs";
};

struct RdArgs {
  fs::path tensors;
  fs::path mesh_dir;
  fs::path out;
};

void cmd_fit(const Config& cfg, const FitArgs& args);
void cmd_train(const Config& cfg, const TrainArgs& args);
void cmd_compress(const fs::path& state, const fs::path& out);
void cmd_decompress(const fs::path& bitstream, const fs::path& out_dir);
void cmd_add(const Config& cfg, const AddArgs& args);
void cmd_eval(const Config& cfg, const EvalArgs& args);
void cmd_rd(const Config& cfg, const RdArgs& args);
void cmd_gen_desk(const fs::path& out_dir, int resolution);

}  // namespace ncgs::cli
