// Acceptance suite: one PASS/FAIL line per criterion.
//
//   ncgs_acceptance [--work DIR] [criterion numbers...]
//
// Criteria 6, 7 and 9 drive the ncgs binary on the analytic desk shapes and
// keep their artifacts under the work directory.

#include <sys/wait.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_checks.hpp"
#include "ncgs/bitstream.hpp"
#include "ncgs/dmc.hpp"
#include "ncgs/fit.hpp"
#include "ncgs/huffman.hpp"
#include "ncgs/metrics.hpp"
#include "ncgs/primitives.hpp"
#include "ncgs/tensor_archive.hpp"
#include "ncgs/train.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ncgs;

// Pinned tolerances.
constexpr double kGradTolerance = 1e-3;
constexpr int kGradInstances = 100;
constexpr double kMetricTolerance = 1e-9;
constexpr double kLossTolerance = 1e-12;
constexpr double kDeskCd = 1e-2;
constexpr double kDeskF1 = 0.8;
constexpr int kDeskShapesRequired = 7;
constexpr double kDeskRatio = 20.0;
constexpr double kAddCdFactor = 3.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// Library-level criteria

Outcome quantizer_exactness() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> xs(1'000'000);
  for (double& x : xs) x = dist(rng);
  std::string detail;
  bool ok = true;
  for (int bits : {2, 4, 8}) {
    const QuantSpec q{-1.0, 1.0, bits};
    const double half = q.step() / 2.0;
    std::set<double> lattice;
    std::size_t idem = 0, bound = 0;
    for (double x : xs) {
      const double y = quantize_value(x, q);
      idem += std::bit_cast<std::uint64_t>(quantize_value(y, q)) != std::bit_cast<std::uint64_t>(y);
      bound += std::abs(y - std::clamp(x, -1.0, 1.0)) > half;
      lattice.insert(y);
    }
    const bool zero = quantize_value(0.0, q) == 0.0;
    const bool size = lattice.size() == (std::size_t{1} << bits) + 1 && q.num_levels() == lattice.size();
    ok = ok && idem == 0 && bound == 0 && zero && size;
    detail += fmt("N=%d idem_fail=%zu bound_fail=%zu Q(0)=0:%s levels=%zu; ", bits, idem, bound, zero ? "yes" : "no",
                  lattice.size());
  }
  return {ok, detail};
}

Outcome coding_losslessness() {
  std::mt19937_64 rng(2);
  std::size_t mismatches = 0, nondeterministic = 0;
  for (int t = 0; t < 100; ++t) {
    const int bits = 2 + static_cast<int>(rng() % 9);
    const QuantSpec q{-1.0, 1.0, bits};
    // Laplacian-like values so the code is far from uniform.
    std::exponential_distribution<float> e(4.0f);
    std::vector<float> v(4096);
    for (float& x : v) x = quantize_value((rng() & 1 ? 1.0f : -1.0f) * e(rng), q);
    auto roundtrip = [&] {
      const auto levels = to_levels(v, q);
      const HuffmanTable table = huffman_build(histogram(levels, q.num_levels()));
      const auto bytes = huffman_encode(levels, table);
      const auto back = from_levels(huffman_decode(bytes, table, levels.size()), q);
      mismatches += back != v;
      return bytes;
    };
    nondeterministic += roundtrip() != roundtrip();
  }
  // Whole containers as well.
  const DecoderArch arch = testing::tiny_decoder_arch();
  std::vector<std::vector<float>> feats;
  for (int i = 0; i < 3; ++i) {
    const auto f = testing::random_vector(arch.feature_size(), 10 + i);
    feats.emplace_back(f.begin(), f.end());
  }
  const auto p = testing::random_vector(arch.param_count(), 20, -0.5, 0.5);
  const CompressedSet set = Bitstream::quantize(arch, {-1, 1, 8}, {-1, 1, 8}, feats, std::vector<float>(p.begin(), p.end()),
                                                {"a", "b", "c"}, {1, 2, 3});
  const auto b1 = Bitstream::encode(set), b2 = Bitstream::encode(set);
  const CompressedSet back = Bitstream::decode(b1);
  const bool container = b1 == b2 && back.features == set.features && back.params == set.params;
  return {mismatches == 0 && nondeterministic == 0 && container,
          fmt("100 tensors: mismatches=%zu nondeterministic=%zu container_roundtrip=%s", mismatches, nondeterministic,
              container ? "ok" : "FAILED")};
}

double max_radial_error(const TriangleMesh& m) {
  const SurfaceSamples s = sample_surface(m, 50000, 7);
  double worst = 0.0;
  for (const Vec3& p : s.points) worst = std::max(worst, std::abs(p.norm() - 0.5));
  for (const Vec3& v : m.vertices) worst = std::max(worst, std::abs(v.norm() - 0.5));
  return worst;
}

Outcome dmc_accuracy() {
  const GridSpec grid(32);
  const TriangleMesh sphere = uv_sphere(0.5, 64, 128);
  const TsdfDefTensor initial = init_tsdf_def(sphere, grid);
  const TriangleMesh m0 = dmc_extract(initial);
  double vertex_worst = 0.0;
  for (const Vec3& v : m0.vertices) vertex_worst = std::max(vertex_worst, std::abs(v.norm() - 0.5));
  FitOptions opt;
  opt.max_iter = 200;
  const FitResult fit = fit_tensor(sphere, grid, opt);
  const double before = max_radial_error(m0);
  const double after = max_radial_error(dmc_extract(fit.tensor));
  const bool ok = !m0.empty() && vertex_worst < grid.spacing() && after < before;
  return {ok, fmt("zero-deformation max |r-0.5| over vertices %.5f < h=%.5f; fitted max radial error %.5f -> %.5f",
                  vertex_worst, grid.spacing(), before, after)};
}

Outcome gradient_suite() {
  const std::vector<std::pair<const char*, testing::GradientReport>> reports{
      {"conv3d", testing::check_conv3d(kGradInstances, 101)},
      {"pixel_shuffle3d", testing::check_pixel_shuffle(kGradInstances, 102)},
      {"gelu", testing::check_gelu(kGradInstances, 103)},
      {"ssim3d", testing::check_ssim(kGradInstances, 104)},
      {"ste_quantize", testing::check_ste_interior(kGradInstances, 105)},
      {"dmc_vertex_jacobian", testing::check_dmc_jacobian(kGradInstances, 106)},
      {"qdeepsdf_forward", testing::check_qdeepsdf(kGradInstances, 107)},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, r] : reports) {
    ok = ok && r.instances >= kGradInstances && r.worst < kGradTolerance;
    detail += fmt("%s %d worst %.1e; ", name, r.instances, r.worst);
  }
  return {ok, detail};
}

Outcome metric_oracles() {
  const auto a = testing::random_samples(500, 31);
  const auto b = testing::random_samples(500, 32);
  const double cd = std::abs(chamfer_distance(a, b) - testing::brute_chamfer(a, b));
  const double nc = std::abs(normal_consistency(a, b) - testing::brute_normal_consistency(a, b));
  double fs = 0.0;
  bool monotone = true;
  double prev = -1.0;
  for (int i = 0; i < 10; ++i) {
    const double eps = 0.01 * std::pow(1.6, i);
    const double f = f_score(a, b, eps);
    fs = std::max(fs, std::abs(f - testing::brute_f_score(a, b, eps)));
    monotone = monotone && f >= prev;
    prev = f;
  }
  const bool ok = cd <= kMetricTolerance && nc <= kMetricTolerance && fs <= kMetricTolerance && monotone;
  return {ok, fmt("N=500 |dCD|=%.1e |dNC|=%.1e |dF|=%.1e monotone=%s", cd, nc, fs, monotone ? "yes" : "no")};
}

Outcome deformation_ablation() {
  const TriangleMesh plate = mesh_from_sdf(thin_plate_shape().sdf, 160);
  const GridSpec grid(32);
  FitOptions with;
  with.max_iter = 200;
  FitOptions frozen = with;
  frozen.optimize_deformation = false;
  const TriangleMesh a = dmc_extract(fit_tensor(plate, grid, with).tensor);
  const TriangleMesh b = dmc_extract(fit_tensor(plate, grid, frozen).tensor);
  const double cd_def = evaluate_pair(a, plate).cd;
  const double cd_tsdf = evaluate_pair(b, plate).cd;
  return {cd_def < cd_tsdf, fmt("thin plate K=32: TSDF-Def CD %.6f vs frozen-deformation TSDF CD %.6f", cd_def, cd_tsdf)};
}

Outcome loss_identities() {
  const auto v = testing::random_tensor<double>(8, 8, 8, 4, 41);
  const auto w = testing::random_tensor<double>(8, 8, 8, 4, 42);
  TrainConfig cfg;
  const double self = regression_loss<double>(v, v, cfg, false).total;
  cfg.tau = 1.0;
  const auto wide = regression_loss<double>(w, v, cfg, false);
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 0.0;
  const double plain = regression_loss<double>(w, v, cfg, false).total;
  double mae = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) mae += std::abs(w.values[i] - v.values[i]);
  mae /= static_cast<double>(v.size());
  const double e1 = std::abs(self), e2 = std::abs(wide.masked_l1 - wide.l1), e3 = std::abs(plain - mae);
  return {e1 <= kLossTolerance && e2 <= kLossTolerance && e3 <= kLossTolerance,
          fmt("|L(v,v)|=%.1e |masked-L1| at tau=1: %.1e |L-MAE| at lambda=0: %.1e", e1, e2, e3)};
}

// ---------------------------------------------------------------------------
// Desk pipeline through the CLI

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct EvalRow {
  double cd = 0.0;
  double f1_01 = 0.0;
};

std::map<std::string, EvalRow> read_eval(const fs::path& csv) {
  std::map<std::string, EvalRow> rows;
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string label, shape, cd, nc, f005, f01;
    std::getline(ss, label, ',');
    std::getline(ss, shape, ',');
    std::getline(ss, cd, ',');
    std::getline(ss, nc, ',');
    std::getline(ss, f005, ',');
    std::getline(ss, f01, ',');
    rows[shape] = {std::stod(cd), std::stod(f01)};
  }
  return rows;
}

double mean_cd(const std::map<std::string, EvalRow>& rows, const std::string& skip = {}) {
  double s = 0.0;
  int n = 0;
  for (const auto& [name, r] : rows) {
    if (name == skip) continue;
    s += r.cd;
    ++n;
  }
  return n ? s / n : INFINITY;
}

class Desk {
 public:
  explicit Desk(fs::path work) : work_(std::move(work)) {}

  const fs::path& work() const { return work_; }
  fs::path at(const std::string& name) const { return work_ / name; }

  /// Runs one CLI command, appending its output to the work log.
  void run(const std::string& args) const {
    const std::string cmd =
        std::string(NCGS_CLI_PATH) + " " + args + " >>" + (work_ / "pipeline.log").string() + " 2>&1";
    std::printf("  $ ncgs %s\n", args.c_str());
    std::fflush(stdout);
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw std::runtime_error("ncgs " + args + " failed; see " + (work_ / "pipeline.log").string());
    }
  }

  void ensure_meshes() {
    if (meshes_) return;
    fs::create_directories(work_);
    fs::remove_all(at("desk"));
    run("gen-desk --out " + at("desk").string() + " --resolution 96");
    meshes_ = true;
  }

  fs::path config(int k) const {
    const fs::path p = at("desk" + std::to_string(k) + ".cfg");
    std::ofstream out(p);
    out << "K=" << k << "\nK_prime=" << k / 8 << "\nC=8\nL=3\nwidths=24,24,8\nhead_width=32\n"
        << "N_feat=8\nN_param=8\nepochs=400\nlr_train=3e-3\nlr_final_fraction=0.01\nlr_add=0.1\n"
        << "normalize=false\nn_eval=100000\nseed=0\n";
    return p;
  }

  /// fit -> train -> compress -> decompress -> eval at resolution k.
  void pipeline(int k) {
    if (done_.count(k)) return;
    ensure_meshes();
    const std::string tag = std::to_string(k);
    const std::string cfg = " --config " + config(k).string();
    fs::remove_all(at("rec" + tag));
    run("fit " + at("desk").string() + " --out " + at("k" + tag + ".ncgt").string() + cfg);
    run("train " + at("k" + tag + ".ncgt").string() + " --out " + at("k" + tag + ".ncgm").string() + cfg +
        " --loss-csv " + at("loss" + tag + ".csv").string());
    run("compress " + at("k" + tag + ".ncgm").string() + " --out " + at("k" + tag + ".ncgs").string());
    run("decompress " + at("k" + tag + ".ncgs").string() + " --out " + at("rec" + tag).string());
    run("eval " + at("desk").string() + " " + at("rec" + tag).string() + " --out " + at("eval" + tag + ".csv").string() +
        cfg);
    done_.insert(k);
  }

  std::uint64_t desk_bytes() const {
    std::uint64_t total = 0;
    for (const auto& e : fs::directory_iterator(at("desk"))) total += fs::file_size(e.path());
    return total;
  }

 private:
  fs::path work_;
  bool meshes_ = false;
  std::set<int> done_;
};

Outcome desk_pipeline(Desk& desk) {
  desk.pipeline(32);
  const auto rows = read_eval(desk.at("eval32.csv"));
  int good = 0;
  std::string detail;
  for (const auto& [name, r] : rows) {
    const bool ok = r.cd < kDeskCd && r.f1_01 > kDeskF1;
    good += ok;
    detail += fmt("%s cd=%.4f f1=%.3f%s; ", name.c_str(), r.cd, r.f1_01, ok ? "" : " (miss)");
  }
  const double ratio =
      static_cast<double>(desk.desk_bytes()) / static_cast<double>(fs::file_size(desk.at("k32.ncgs")));
  const bool ok = rows.size() == 8 && good >= kDeskShapesRequired && ratio > kDeskRatio;
  return {ok, fmt("%d/8 shapes within CD<%.0e and F1@0.01>%.1f, ratio %.1f; ", good, kDeskCd, kDeskF1, ratio) + detail};
}

Outcome resolution_trend(Desk& desk) {
  desk.pipeline(32);
  desk.pipeline(64);
  const double cd32 = mean_cd(read_eval(desk.at("eval32.csv")));
  const double cd64 = mean_cd(read_eval(desk.at("eval64.csv")));
  return {cd64 <= cd32, fmt("mean CD K=32 %.6f, K=64 %.6f", cd32, cd64)};
}

Outcome dynamic_add(Desk& desk) {
  desk.ensure_meshes();
  const std::string held = "s7_slab_capsule";
  const std::string cfg = " --config " + desk.config(32).string();
  if (!fs::exists(desk.at("k32.ncgt"))) {
    desk.run("fit " + desk.at("desk").string() + " --out " + desk.at("k32.ncgt").string() + cfg);
  }
  TensorArchive archive = read_archive(desk.at("k32.ncgt"));
  const auto it = std::find(archive.names.begin(), archive.names.end(), held);
  if (it == archive.names.end()) return {false, "held-out shape missing from the archive"};
  const auto idx = static_cast<std::ptrdiff_t>(it - archive.names.begin());
  archive.tensors.erase(archive.tensors.begin() + idx);
  archive.names.erase(archive.names.begin() + idx);
  archive.source_bytes.erase(archive.source_bytes.begin() + idx);
  write_archive(archive, desk.at("k7.ncgt"));

  fs::remove_all(desk.at("rec_add"));
  desk.run("train " + desk.at("k7.ncgt").string() + " --out " + desk.at("k7.ncgm").string() + cfg);
  desk.run("compress " + desk.at("k7.ncgm").string() + " --out " + desk.at("k7.ncgs").string());
  fs::copy_file(desk.at("k7.ncgm"), desk.at("k7_add.ncgm"), fs::copy_options::overwrite_existing);
  desk.run("add " + (desk.at("desk") / (held + ".obj")).string() + " --state " + desk.at("k7_add.ncgm").string() +
           " --in " + desk.at("k7.ncgs").string() + " --out " + desk.at("k8.ncgs").string() + cfg);
  desk.run("decompress " + desk.at("k8.ncgs").string() + " --out " + desk.at("rec_add").string());
  desk.run("eval " + desk.at("desk").string() + " " + desk.at("rec_add").string() + " --out " +
           desk.at("eval_add.csv").string() + cfg);

  const auto before = slurp(desk.at("k7.ncgs"));
  const auto after = slurp(desk.at("k8.ncgs"));
  const auto lb = Bitstream::layout(before), la = Bitstream::layout(after);
  using L = BitstreamLayout;
  const bool same_params =
      lb.offsets[L::kNames] - lb.offsets[L::kParams] == la.offsets[L::kNames] - la.offsets[L::kParams] &&
      std::equal(before.begin() + static_cast<std::ptrdiff_t>(lb.offsets[L::kParams]),
                 before.begin() + static_cast<std::ptrdiff_t>(lb.offsets[L::kNames]),
                 after.begin() + static_cast<std::ptrdiff_t>(la.offsets[L::kParams]));
  const auto rows = read_eval(desk.at("eval_add.csv"));
  const double trained = mean_cd(rows, held);
  const double added = rows.count(held) ? rows.at(held).cd : INFINITY;
  const bool ok = same_params && added <= kAddCdFactor * trained;
  return {ok, fmt("decoder parameters byte-identical: %s; held-out CD %.6f vs %.1f x trained mean %.6f",
                  same_params ? "yes" : "NO", added, kAddCdFactor, trained)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::current_path() / "acceptance_work";
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      selected.insert(std::stoi(a));
    }
  }
  Desk desk(work);

  const std::vector<Criterion> criteria{
      {1, "quantizer exactness", 5, quantizer_exactness},
      {2, "coding losslessness", 10, coding_losslessness},
      {3, "DMC geometric accuracy", 120, dmc_accuracy},
      {4, "gradient suite", 120, gradient_suite},
      {5, "metric oracle equivalence", 30, metric_oracles},
      {6, "end-to-end desk pipeline", 1800, [&] { return desk_pipeline(desk); }},
      {7, "resolution trend", 3600, [&] { return resolution_trend(desk); }},
      {8, "deformation ablation", 300, deformation_ablation},
      {9, "dynamic add", 600, [&] { return dynamic_add(desk); }},
      {10, "loss identities", 1, loss_identities},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    std::printf("running [%d] %s\n", c.id, c.name);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    const std::string line = fmt("%s [%d] %s: ", pass ? "PASS" : "FAIL", c.id, c.name) + o.detail +
                             fmt(" (%.1fs, budget %.0fs%s)", secs, c.budget_seconds, in_time ? "" : ", OVER BUDGET");
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
