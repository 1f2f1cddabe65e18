#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "ncgs/bitstream.hpp"
#include "ncgs/dmc.hpp"
#include "ncgs/error.hpp"
#include "ncgs/fit.hpp"
#include "ncgs/metrics.hpp"
#include "ncgs/model_state.hpp"
#include "ncgs/primitives.hpp"
#include "ncgs/qdeepsdf.hpp"
#include "ncgs/render.hpp"
#include "ncgs/tensor_archive.hpp"
#include "ncgs/train.hpp"

namespace ncgs::cli {

namespace {

constexpr double kMegabyte = 1024.0 * 1024.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t shape_seed(std::uint64_t base, std::size_t index) { return splitmix64(base ^ splitmix64(index)); }

std::vector<fs::path> list_objs(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".obj") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  if (out.empty()) fail(ErrorCode::kIo, "no .obj files in " + dir.string());
  return out;
}

TriangleMesh prepare_mesh(const fs::path& path, const Config& cfg) {
  TriangleMesh mesh = load_obj(path);
  if (mesh.empty()) fail(ErrorCode::kStructural, path.string() + " has no triangles");
  return cfg.normalize ? normalize_unit_cube(mesh, cfg.margin) : mesh;
}

MetricsRecord evaluate_or_worst(const TriangleMesh& recon, const TriangleMesh& gt, const Config& cfg,
                                const std::string& name) {
  if (recon.empty()) {
    std::fprintf(stderr, "warning: %s: reconstruction is empty\n", name.c_str());
    return {std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0};
  }
  return evaluate_pair(recon, gt, static_cast<std::size_t>(cfg.n_eval), cfg.seed);
}

MetricsRecord mean_of(std::span<const MetricsRecord> rows) {
  MetricsRecord m;
  for (const auto& r : rows) {
    m.cd += r.cd;
    m.nc += r.nc;
    m.f1_005 += r.f1_005;
    m.f1_01 += r.f1_01;
  }
  const double n = static_cast<double>(rows.size());
  return {m.cd / n, m.nc / n, m.f1_005 / n, m.f1_01 / n};
}

void print_report(const CompressionReport& r) {
  std::printf("original %.6f MB, compressed %.6f MB, ratio %.3f\n", r.original_bytes / kMegabyte,
              r.compressed_bytes / kMegabyte, r.ratio());
}

TriangleMesh decode_shape(const CompressedSet& set, std::size_t i) {
  return dmc_extract(decode_feature(set.features[i], set.params, set.arch, {set.feature_quant, set.param_quant}));
}

TrainConfig train_config_for(const Config& cfg, const QuantSpec& fq, const QuantSpec& pq) {
  TrainConfig tc = cfg.train_config();
  tc.feature_quant = fq;
  tc.param_quant = pq;
  return tc;
}

void check_grid(const TensorArchive& archive, const Config& cfg) {
  if (archive.grid.resolution != cfg.K) {
    fail(ErrorCode::kShape, "archive resolution " + std::to_string(archive.grid.resolution) +
                                " does not match config K = " + std::to_string(cfg.K));
  }
}

}  // namespace

void cmd_fit(const Config& cfg, const FitArgs& args) {
  const auto files = list_objs(args.mesh_dir);
  const std::size_t n = files.size();
  const GridSpec grid(cfg.K);
  const auto views = cfg.view_specs();

  TensorArchive archive;
  archive.grid = grid;
  archive.tensors.resize(n);
  archive.names.resize(n);
  archive.source_bytes.resize(n);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const TriangleMesh mesh = prepare_mesh(files[i], cfg);
        FitResult r = fit_tensor(mesh, grid, cfg.fit_options(shape_seed(cfg.seed, i)));
        const ReconError rec = recon_error(dmc_extract(r.tensor), mesh, views, cfg.lambda_rec);
        archive.tensors[i] = std::move(r.tensor);
        archive.names[i] = files[i].stem().string();
        archive.source_bytes[i] = fs::file_size(files[i]);
        std::lock_guard lock(log_mutex);
        std::fprintf(stderr, "fit [%zu/%zu] %s: surrogate %.6g -> %.6g (best iter %d), E_rec %.6g\n", ++done, n,
                     archive.names[i].c_str(), r.initial.total, r.final.total, r.best_iteration, rec.total);
      } catch (...) {
        std::lock_guard lock(log_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };

  const int workers = std::clamp<int>(args.workers, 1, static_cast<int>(n));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  write_archive(archive, args.out);
  std::printf("fitted %zu shapes at K=%d -> %s\n", n, cfg.K, args.out.string().c_str());
}

void cmd_train(const Config& cfg, const TrainArgs& args) {
  const TensorArchive archive = read_archive(args.tensors);
  check_grid(archive, cfg);
  const TrainConfig tc = cfg.train_config();
  const DecoderArch arch = cfg.arch();

  ModelState state;
  if (args.resume) {
    state = read_model(*args.resume);
    if (!(state.arch == arch)) fail(ErrorCode::kShape, "checkpoint architecture differs from config");
    if (!(state.feature_quant == tc.feature_quant) || !(state.param_quant == tc.param_quant)) {
      fail(ErrorCode::kConfig, "checkpoint quantizers differ from config");
    }
    if (state.size() != archive.size()) fail(ErrorCode::kShape, "checkpoint shape count differs from archive");
  } else {
    state = init_model(arch, archive.size(), tc);
    state.names = archive.names;
    state.source_bytes = archive.source_bytes;
  }

  const int first = state.epoch;
  train_epochs(state, archive.tensors, tc, tc.epochs, [&](int epoch, double loss) {
    if (epoch == first + 1 || epoch % 10 == 0 || epoch == first + tc.epochs) {
      std::fprintf(stderr, "epoch %d loss %.6g\n", epoch, loss);
    }
  });
  write_model(state, args.out);

  if (args.loss_csv) {
    std::ofstream csv(*args.loss_csv);
    if (!csv) fail(ErrorCode::kIo, "cannot write " + args.loss_csv->string());
    csv << "epoch,loss\n";
    char buf[64];
    for (std::size_t e = 0; e < state.history.size(); ++e) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, state.history[e]);
      csv << buf;
    }
  }
  std::printf("trained %zu shapes to epoch %d -> %s\n", state.size(), state.epoch, args.out.string().c_str());
}

void cmd_compress(const fs::path& state_path, const fs::path& out) {
  const ModelState state = read_model(state_path);
  const CompressedSet set = Bitstream::quantize(state.arch, state.feature_quant, state.param_quant, state.features,
                                                state.params, state.names, state.source_bytes);
  print_report(write_bitstream(set, out));
}

void cmd_decompress(const fs::path& bitstream, const fs::path& out_dir) {
  const CompressedSet set = read_bitstream(bitstream);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const TriangleMesh mesh = decode_shape(set, i);
    if (mesh.empty()) std::fprintf(stderr, "warning: %s decodes to an empty surface\n", set.names[i].c_str());
    save_obj(mesh, out_dir / (set.names[i] + ".obj"));
  }
  std::printf("decompressed %zu shapes -> %s\n", set.size(), out_dir.string().c_str());
}

void cmd_add(const Config& cfg, const AddArgs& args) {
  const std::vector<std::uint8_t> input = [&] {
    std::ifstream in(args.in, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, "cannot open " + args.in.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
  }();
  const CompressedSet set = Bitstream::decode(input);
  ModelState state = read_model(args.state);
  if (!(state.arch == set.arch) || !(state.feature_quant == set.feature_quant) ||
      !(state.param_quant == set.param_quant) || state.size() != set.size()) {
    fail(ErrorCode::kStructural, "state does not match the bitstream");
  }
  const int k = set.arch.output_resolution();
  if (k != cfg.K) fail(ErrorCode::kShape, "bitstream resolution " + std::to_string(k) + " differs from config K");

  const std::string name = args.mesh.stem().string();
  if (std::find(set.names.begin(), set.names.end(), name) != set.names.end()) {
    fail(ErrorCode::kStructural, "shape '" + name + "' is already in the bitstream");
  }
  const TriangleMesh mesh = prepare_mesh(args.mesh, cfg);
  const FitResult fit = fit_tensor(mesh, GridSpec(k), cfg.fit_options(shape_seed(cfg.seed, set.size())));
  std::fprintf(stderr, "fit %s: surrogate %.6g -> %.6g\n", name.c_str(), fit.initial.total, fit.final.total);

  TrainConfig tc = train_config_for(cfg, set.feature_quant, set.param_quant);
  tc.lr = cfg.lr_add;
  std::vector<double> history;
  const std::vector<float> feature = fit_new_feature(fit.tensor, set.params, set.arch, tc, &history);
  if (!history.empty()) std::fprintf(stderr, "feature loss %.6g -> %.6g\n", history.front(), history.back());

  std::vector<std::vector<float>> features = set.features;
  features.push_back(feature);
  std::vector<std::string> names = set.names;
  names.push_back(name);
  std::vector<std::uint64_t> sizes = set.source_bytes;
  sizes.push_back(fs::file_size(args.mesh));
  const CompressedSet updated =
      Bitstream::quantize(set.arch, set.feature_quant, set.param_quant, features, set.params, names, sizes);

  CompressionReport report;
  const std::vector<std::uint8_t> output = Bitstream::encode(updated, &report);
  const BitstreamLayout before = Bitstream::layout(input);
  const BitstreamLayout after = Bitstream::layout(output);
  const auto section = [](const std::vector<std::uint8_t>& b, const BitstreamLayout& l) {
    return std::vector<std::uint8_t>(b.begin() + static_cast<std::ptrdiff_t>(l.offsets[BitstreamLayout::kParams]),
                                     b.begin() + static_cast<std::ptrdiff_t>(l.offsets[BitstreamLayout::kNames]));
  };
  if (section(input, before) != section(output, after)) {
    throw std::logic_error("parameter section changed while adding a shape");
  }
  {
    std::ofstream out(args.out, std::ios::binary);
    if (!out) fail(ErrorCode::kIo, "cannot write " + args.out.string());
    out.write(reinterpret_cast<const char*>(output.data()), static_cast<std::streamsize>(output.size()));
  }

  state.features.push_back(feature);
  state.feature_adam.emplace_back(feature.size(), tc.lr);
  state.names.push_back(name);
  state.source_bytes.push_back(sizes.back());
  write_model(state, args.state);

  const MetricsRecord m = evaluate_or_worst(decode_shape(updated, updated.size() - 1), mesh, cfg, name);
  print_report(report);
  std::printf("added %s as shape %zu: cd %.6g nc %.6g f1_005 %.6g f1_01 %.6g\n", name.c_str(), updated.size(), m.cd,
              m.nc, m.f1_005, m.f1_01);
}

void cmd_eval(const Config& cfg, const EvalArgs& args) {
  const auto originals = list_objs(args.original_dir);
  const auto recons = list_objs(args.recon_dir);
  if (originals.size() != recons.size()) {
    fail(ErrorCode::kStructural, "shape counts differ: " + std::to_string(originals.size()) + " originals, " +
                                     std::to_string(recons.size()) + " reconstructions");
  }
  std::map<std::string, fs::path> by_stem;
  for (const auto& p : recons) by_stem[p.stem().string()] = p;

  std::vector<ShapeMetrics> rows;
  std::vector<MetricsRecord> records;
  for (const auto& orig : originals) {
    const std::string stem = orig.stem().string();
    const auto it = by_stem.find(stem);
    if (it == by_stem.end()) fail(ErrorCode::kStructural, "no reconstruction named " + stem + ".obj");
    const TriangleMesh gt = prepare_mesh(orig, cfg);
    const MetricsRecord m = evaluate_or_worst(load_obj(it->second), gt, cfg, stem);
    rows.push_back({args.label, stem, m});
    records.push_back(m);
    std::printf("%s: cd %.6g nc %.6g f1_005 %.6g f1_01 %.6g\n", stem.c_str(), m.cd, m.nc, m.f1_005, m.f1_01);
  }
  emit_shape_metrics(rows, args.out);
  const MetricsRecord mean = mean_of(records);
  std::printf("mean: cd %.6g nc %.6g f1_005 %.6g f1_01 %.6g\n", mean.cd, mean.nc, mean.f1_005, mean.f1_01);
}

void cmd_rd(const Config& cfg, const RdArgs& args) {
  const TensorArchive archive = read_archive(args.tensors);
  check_grid(archive, cfg);
  const auto files = list_objs(args.mesh_dir);
  std::map<std::string, fs::path> by_stem;
  for (const auto& p : files) by_stem[p.stem().string()] = p;

  std::vector<TriangleMesh> gts;
  std::uint64_t original = 0;
  for (const auto& name : archive.names) {
    const auto it = by_stem.find(name);
    if (it == by_stem.end()) fail(ErrorCode::kStructural, "no mesh named " + name + ".obj in " + args.mesh_dir.string());
    gts.push_back(prepare_mesh(it->second, cfg));
    original += fs::file_size(it->second);
  }

  const auto evaluate_all = [&](auto&& decode_mesh) {
    std::vector<MetricsRecord> records;
    for (std::size_t i = 0; i < gts.size(); ++i) {
      records.push_back(evaluate_or_worst(decode_mesh(i), gts[i], cfg, archive.names[i]));
    }
    return mean_of(records);
  };

  std::vector<RdPoint> points;
  const TrainConfig tc = cfg.train_config();
  for (double scale : cfg.rd_scales) {
    const DecoderArch arch = cfg.arch().scaled_widths(scale);
    const ModelState state = train_set(archive.tensors, arch, tc);
    const CompressedSet set = Bitstream::quantize(arch, tc.feature_quant, tc.param_quant, state.features,
                                                  state.params, archive.names, archive.source_bytes);
    const std::size_t bytes = Bitstream::encode(set).size();
    RdPoint p;
    char label[64];
    std::snprintf(label, sizeof label, "ncgs_x%g", scale);
    p.label = label;
    p.ratio = static_cast<double>(original) / static_cast<double>(bytes);
    p.metrics = evaluate_all([&](std::size_t i) { return decode_shape(set, i); });
    std::printf("%s: params %zu, %zu bytes, ratio %.3f, cd %.6g f1_01 %.6g\n", label, arch.param_count(), bytes,
                p.ratio, p.metrics.cd, p.metrics.f1_01);
    points.push_back(std::move(p));

    if (cfg.rd_baseline) {
      QDeepSdfArch qarch;
      qarch.channels = cfg.C;
      qarch.hidden = std::max(1, static_cast<int>(std::lround(cfg.qdeepsdf_hidden * scale)));
      const QDeepSdfModel model = train_qdeepsdf(archive.tensors, qarch, cfg.qdeepsdf_config());
      RdPoint q;
      std::snprintf(label, sizeof label, "qdeepsdf_x%g", scale);
      q.label = label;
      const std::uint64_t qbytes = qdeepsdf_compressed_bytes(model);
      q.ratio = static_cast<double>(original) / static_cast<double>(qbytes);
      q.metrics = evaluate_all([&](std::size_t i) { return dmc_extract(qdeepsdf_decode(model, i, archive.grid)); });
      std::printf("%s: hidden %d, %llu bytes, ratio %.3f, cd %.6g f1_01 %.6g\n", label, qarch.hidden,
                  static_cast<unsigned long long>(qbytes), q.ratio, q.metrics.cd, q.metrics.f1_01);
      points.push_back(std::move(q));
    }
  }
  emit_rd(points, args.out);
}

void cmd_gen_desk(const fs::path& out_dir, int resolution) {
  fs::create_directories(out_dir);
  for (const auto& shape : desk_shapes()) {
    save_obj(mesh_from_sdf(shape.sdf, resolution), out_dir / (shape.name + ".obj"));
  }
  std::printf("wrote %zu shapes -> %s\n", desk_shapes().size(), out_dir.string().c_str());
}

}  // namespace ncgs::cli
