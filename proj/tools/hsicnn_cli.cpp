// hsicnn: command-line driver for the spectral-spatial 3D CNN pipeline.
//
//   hsicnn summary  --window 11 --bands 20 --classes 6
//   hsicnn synth    --out-cube c.hsic --out-labels l.hsil
//   hsicnn pca      --cube c.hsic --out pca.hsip --components 20
//   hsicnn train    --cube c.hsic --labels l.hsil --out run/
//   hsicnn evaluate --cube c.hsic --labels l.hsil --run run/
//   hsicnn predict  --cube c.hsic --run run/ --out map.pgm
//   hsicnn sweep    --cube c.hsic --labels l.hsil --out sweep/
//
// Errors are reported as a single line "error: <class>: <message>" with a
// nonzero exit status.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hsicnn.hpp"

namespace fs = std::filesystem;
using namespace hsicnn;

namespace {

struct RunConfig {
  std::string cube_path;
  std::string labels_path;
  std::string pca_path;
  std::string out;
  std::size_t window = 11;
  std::size_t components = 20;
  std::size_t epochs = 50;
  std::size_t batch = 256;
  double lr = 0.001;
  double dropout = 0.4;
  double train_frac = 0.35;
  double val_frac = 0.35;
  std::uint64_t seed = 0;
  std::string precision = "f32";
  std::string pca_fit = "all";
  std::size_t threads = 0;
  bool deterministic = false;

  std::size_t effective_threads() const {
    if (deterministic) return 1;
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

// "# key: value" lines recording every effective parameter of a command.
std::vector<std::pair<std::string, std::string>> echo(const std::string& command,
                                                      const RunConfig& cfg) {
  auto str = [](auto v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
  };
  return {{"command", command},
          {"cube", cfg.cube_path},
          {"labels", cfg.labels_path},
          {"window", str(cfg.window)},
          {"components", str(cfg.components)},
          {"epochs", str(cfg.epochs)},
          {"batch", str(cfg.batch)},
          {"lr", str(cfg.lr)},
          {"dropout", str(cfg.dropout)},
          {"train_frac", str(cfg.train_frac)},
          {"val_frac", str(cfg.val_frac)},
          {"seed", str(cfg.seed)},
          {"precision", cfg.precision},
          {"pca_fit", cfg.pca_fit},
          {"deterministic", cfg.deterministic ? "true" : "false"},
          {"threads", str(cfg.effective_threads())}};
}

std::string echo_block(const std::string& command, const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : echo(command, cfg)) out += "# " + k + ": " + v + "\n";
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  io::write_file(path.string(), text);
}

void print_percent_summary(const ConfusionMatrix& cm, std::ostream& os) {
  os << std::fixed << std::setprecision(2) << "OA " << 100.0 * overall_accuracy(cm) << "  AA "
     << 100.0 * average_accuracy(cm) << "  kappa " << 100.0 * kappa(cm) << '\n'
     << std::defaultfloat;
}

void validate(const RunConfig& cfg) {
  if (cfg.window % 2 == 0) throw Error(ErrorKind::config, "--window must be odd");
  if (cfg.batch == 0) throw Error(ErrorKind::config, "--batch must be at least 1");
  if (!(cfg.lr > 0.0)) throw Error(ErrorKind::config, "--lr must be positive");
  if (cfg.precision != "f32" && cfg.precision != "f64") {
    throw Error(ErrorKind::config, "--precision must be f32 or f64");
  }
  if (cfg.pca_fit != "all" && cfg.pca_fit != "train") {
    throw Error(ErrorKind::config, "--pca-fit must be all or train");
  }
}

DataConfig data_config(const RunConfig& cfg) {
  DataConfig dc;
  dc.window = cfg.window;
  dc.components = cfg.components;
  dc.train_frac = cfg.train_frac;
  dc.val_frac = cfg.val_frac;
  dc.seed = cfg.seed;
  dc.pca_on_train_only = cfg.pca_fit == "train";
  return dc;
}

// ---------------------------------------------------------------- summary

int cmd_summary(std::size_t window, std::size_t bands, std::size_t classes) {
  const auto rows = summarize({window, bands, classes, 0.4});
  auto shape = [](const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
    return out + ")";
  };
  std::cout << std::left << std::setw(22) << "Layer" << std::setw(20) << "Output Shape"
            << "# of Parameters\n";
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(22) << r.name << std::setw(20) << shape(r.output)
              << r.params << '\n';
  }
  std::cout << "Total trainable parameters: " << total_parameters(rows) << '\n';
  return 0;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const std::string& cube_out, const std::string& labels_out, std::size_t rows,
              std::size_t cols, std::size_t bands, double noise, std::uint64_t seed) {
  const auto scene = make_quadrant_scene(rows, cols, bands, noise, seed);
  save_cube(scene.cube, cube_out);
  save_labels(scene.gt, labels_out);
  std::cout << "wrote " << cube_out << " (" << rows << "x" << cols << "x" << bands << ") and "
            << labels_out << " (4 classes)\n";
  return 0;
}

// ---------------------------------------------------------------- pca

int cmd_pca(const RunConfig& cfg) {
  validate(cfg);
  const HsiCube cube = load_cube(cfg.cube_path);
  PcaAccumulator acc(cube.l);
  if (cfg.pca_fit == "train") {
    if (cfg.labels_path.empty()) throw Error(ErrorKind::config, "--pca-fit train needs --labels");
    const GroundTruth gt = load_labels(cfg.labels_path);
    check_paired(cube, gt);
    const auto split = stratified_split(gt, cfg.train_frac, cfg.val_frac, cfg.seed);
    fit_cube(acc, cube, 4096, &split.train);
  } else {
    fit_cube(acc, cube);
  }
  const PcaModel model = finalize(acc, cfg.components);
  save_pca(model, cfg.out);
  double total = 0.0, kept = 0.0;
  for (double v : model.all_eigenvalues) total += v;
  for (double v : model.eigenvalues) kept += v;
  std::cout << "pca: " << cube.l << " bands -> " << model.b << " components, "
            << std::setprecision(4) << 100.0 * kept / total << "% variance retained, wrote "
            << cfg.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOutcome {
  ConfusionMatrix test_cm{2};
  std::vector<EpochRecord> history;
};

template <typename T>
TrainOutcome run_train(const RunConfig& cfg, const HsiCube& cube, const GroundTruth& gt) {
  validate(cfg);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);

  PcaModel preset;
  const bool have_pca = !cfg.pca_path.empty();
  if (have_pca) preset = load_pca(cfg.pca_path);
  const PreparedData data = prepare_data(cube, gt, data_config(cfg), have_pca ? &preset : nullptr);
  save_pca(data.pca, (dir / "pca.hsip").string());

  std::cout << "train " << data.train.size() << " / val " << data.val.size() << " / test "
            << data.test.size() << " patches (border-skipped "
            << data.train.skipped + data.val.skipped + data.test.skipped << ")\n";

  Model<T> model({cfg.window, cfg.components, gt.c, cfg.dropout}, cfg.seed);
  TrainOptions opt;
  opt.epochs = cfg.epochs;
  opt.batch = cfg.batch;
  opt.adam.lr = cfg.lr;
  opt.seed = cfg.seed;
  opt.threads = cfg.effective_threads();
  opt.record_time = !cfg.deterministic;

  const std::string preamble = echo_block("train", cfg);
  std::ofstream hist(dir / "history.csv", std::ios::trunc);
  hist << preamble << history_header();
  const auto t0 = std::chrono::steady_clock::now();
  TrainOutcome outcome;
  outcome.history = train(model, data.train, data.val, opt, [&](const EpochRecord& r) {
    hist << format_epoch(r) << std::flush;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "epoch " << r.epoch << "/" << cfg.epochs << std::fixed << std::setprecision(4)
              << "  loss " << r.train_loss << "  acc " << r.train_acc << "  val_loss "
              << r.val_loss << "  val_acc " << r.val_acc << "  [" << std::setprecision(1)
              << wall << "s]\n"
              << std::defaultfloat;
  });
  save_checkpoint(model, (dir / "model.hsim").string());

  // Metrics on the test split with the final weights, as evaluate would.
  const Model<float> reloaded = load_checkpoint<float>((dir / "model.hsim").string());
  const auto pred = predict(reloaded, data.test, opt.threads);
  outcome.test_cm = accumulate(data.test.labels, pred, gt.c);
  write_text(dir / "test_report.txt", format_report(outcome.test_cm, preamble));
  std::cout << "test ";
  print_percent_summary(outcome.test_cm, std::cout);
  return outcome;
}

TrainOutcome dispatch_train(const RunConfig& cfg) {
  const HsiCube cube = load_cube(cfg.cube_path);
  const GroundTruth gt = load_labels(cfg.labels_path);
  if (cfg.precision == "f64") return run_train<double>(cfg, cube, gt);
  return run_train<float>(cfg, cube, gt);
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(RunConfig cfg, const std::string& run_dir, std::string report_path) {
  const fs::path dir(run_dir);
  const Model<float> model = load_checkpoint<float>((dir / "model.hsim").string());
  const PcaModel pca = load_pca(cfg.pca_path.empty() ? (dir / "pca.hsip").string() : cfg.pca_path);
  cfg.window = model.config().window;
  cfg.components = model.config().bands;
  cfg.dropout = model.config().dropout;
  const HsiCube cube = load_cube(cfg.cube_path);
  const GroundTruth gt = load_labels(cfg.labels_path);
  if (gt.c != model.config().classes) {
    throw Error(ErrorKind::checkpoint, "checkpoint has " + std::to_string(model.config().classes) +
                                           " classes, labels declare " + std::to_string(gt.c));
  }
  const PreparedData data = prepare_data(cube, gt, data_config(cfg), &pca);
  const auto pred = predict(model, data.test, cfg.effective_threads());
  const ConfusionMatrix cm = accumulate(data.test.labels, pred, gt.c);
  if (report_path.empty()) report_path = (dir / "evaluate_report.txt").string();
  write_text(report_path, format_report(cm, echo_block("evaluate", cfg)));
  std::cout << "test (" << data.test.size() << " patches) ";
  print_percent_summary(cm, std::cout);
  std::cout << "wrote " << report_path << '\n';
  return 0;
}

// ---------------------------------------------------------------- predict

int cmd_predict(RunConfig cfg, const std::string& run_dir, const std::string& map_path) {
  const fs::path dir(run_dir);
  const Model<float> model = load_checkpoint<float>((dir / "model.hsim").string());
  const PcaModel pca = load_pca(cfg.pca_path.empty() ? (dir / "pca.hsip").string() : cfg.pca_path);
  cfg.window = model.config().window;
  cfg.components = model.config().bands;
  const HsiCube cube = load_cube(cfg.cube_path);
  std::optional<GroundTruth> gt;
  if (!cfg.labels_path.empty()) {
    gt = load_labels(cfg.labels_path);
    check_paired(cube, *gt);
  }
  if (model.config().classes > 255) {
    throw Error(ErrorKind::config, "map format stores at most 255 classes");
  }
  const HsiCube reduced = transform(pca, cube, cfg.components);
  const auto map = predict_map(model, reduced, gt ? &*gt : nullptr, cfg.effective_threads());
  std::vector<std::string> comments;
  for (const auto& [k, v] : echo("predict", cfg)) comments.push_back(k + ": " + v);
  io::write_file(map_path, encode_pgm(map, cube.m, cube.n, comments));
  std::cout << "wrote " << map_path << " (" << cube.m << "x" << cube.n << ")\n";
  return 0;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(RunConfig cfg, const std::vector<std::size_t>& windows) {
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  std::ostringstream grid;
  grid << echo_block("sweep", cfg) << "# windows:";
  for (auto w : windows) grid << ' ' << w;
  grid << "\nwindow,oa,aa,kappa,seconds\n";
  std::cout << std::left << std::setw(10) << "Window" << std::setw(10) << "OA" << std::setw(10)
            << "AA" << "kappa\n";
  for (auto w : windows) {
    RunConfig sub = cfg;
    sub.window = w;
    sub.out = (dir / ("w" + std::to_string(w))).string();
    const auto t0 = std::chrono::steady_clock::now();
    const TrainOutcome res = dispatch_train(sub);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double oa = overall_accuracy(res.test_cm);
    const double aa = average_accuracy(res.test_cm);
    const double k = kappa(res.test_cm);
    grid << std::setprecision(17) << w << ',' << oa << ',' << aa << ',' << k << ','
         << std::setprecision(6) << (cfg.deterministic ? 0.0 : secs) << '\n';
    std::cout << std::left << std::fixed << std::setprecision(2) << std::setw(10)
              << (std::to_string(w) + "x" + std::to_string(w)) << std::setw(10) << 100 * oa
              << std::setw(10) << 100 * aa << 100 * k << '\n'
              << std::defaultfloat;
  }
  write_text(dir / "sweep.csv", grid.str());
  std::cout << "wrote " << (dir / "sweep.csv").string() << '\n';
  return 0;
}

void add_data_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--train-frac", cfg.train_frac, "Per-class training fraction")->capture_default_str();
  cmd->add_option("--val-frac", cfg.val_frac, "Per-class validation fraction")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Seed for split, init, shuffle and dropout")->capture_default_str();
  cmd->add_option("--threads", cfg.threads, "Worker threads (0 = hardware)")->capture_default_str();
  cmd->add_flag("--deterministic", cfg.deterministic,
                "Single-threaded, bitwise reproducible; history seconds recorded as 0");
}

void add_train_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--cube", cfg.cube_path, "HSIC cube file")->required();
  cmd->add_option("--labels", cfg.labels_path, "HSIL label file")->required();
  cmd->add_option("--pca", cfg.pca_path, "Use this HSIP model instead of fitting one");
  cmd->add_option("--window", cfg.window, "Spatial window S (odd)")->capture_default_str();
  cmd->add_option("--components,--bands", cfg.components, "Retained PCA components B")
      ->capture_default_str();
  cmd->add_option("--epochs", cfg.epochs)->capture_default_str();
  cmd->add_option("--batch", cfg.batch)->capture_default_str();
  cmd->add_option("--lr", cfg.lr)->capture_default_str();
  cmd->add_option("--dropout", cfg.dropout)->capture_default_str();
  cmd->add_option("--precision", cfg.precision, "f32 or f64")->capture_default_str();
  cmd->add_option("--pca-fit", cfg.pca_fit, "Fit PCA on 'all' pixels or 'train' pixels")
      ->capture_default_str();
  add_data_options(cmd, cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-spatial 3D CNN for hyperspectral image classification"};
  app.require_subcommand(1);

  std::size_t sum_window = 11, sum_bands = 20, sum_classes = 16;
  auto* summary = app.add_subcommand("summary", "Print the layer table for a configuration");
  summary->add_option("--window", sum_window)->capture_default_str();
  summary->add_option("--bands", sum_bands)->capture_default_str();
  summary->add_option("--classes", sum_classes)->capture_default_str();

  std::string synth_cube, synth_labels;
  std::size_t synth_rows = 40, synth_cols = 40, synth_bands = 30;
  double synth_noise = 0.1;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic four-quadrant scene");
  synth->add_option("--out-cube", synth_cube)->required();
  synth->add_option("--out-labels", synth_labels)->required();
  synth->add_option("--rows", synth_rows)->capture_default_str();
  synth->add_option("--cols", synth_cols)->capture_default_str();
  synth->add_option("--bands", synth_bands)->capture_default_str();
  synth->add_option("--noise", synth_noise, "Noise sigma as a fraction of signature norm")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();

  RunConfig pca_cfg;
  auto* pca = app.add_subcommand("pca", "Fit and write a PCA model");
  pca->add_option("--cube", pca_cfg.cube_path)->required();
  pca->add_option("--labels", pca_cfg.labels_path, "Needed with --pca-fit train");
  pca->add_option("--out", pca_cfg.out)->required();
  pca->add_option("--components,--bands", pca_cfg.components)->capture_default_str();
  pca->add_option("--pca-fit", pca_cfg.pca_fit)->capture_default_str();
  add_data_options(pca, pca_cfg);

  RunConfig train_cfg;
  auto* train_cmd = app.add_subcommand("train", "Train and write checkpoint, history and test report");
  add_train_options(train_cmd, train_cfg);
  train_cmd->add_option("--out", train_cfg.out, "Run directory")->required();

  RunConfig eval_cfg;
  std::string eval_run, eval_report;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Metrics report on the test split");
  evaluate_cmd->add_option("--cube", eval_cfg.cube_path)->required();
  evaluate_cmd->add_option("--labels", eval_cfg.labels_path)->required();
  evaluate_cmd->add_option("--run", eval_run, "Run directory holding model.hsim and pca.hsip")
      ->required();
  evaluate_cmd->add_option("--pca", eval_cfg.pca_path);
  evaluate_cmd->add_option("--report", eval_report, "Report path (default <run>/evaluate_report.txt)");
  add_data_options(evaluate_cmd, eval_cfg);

  RunConfig pred_cfg;
  std::string pred_run, pred_out;
  auto* predict_cmd = app.add_subcommand("predict", "Full-scene class map as binary PGM");
  predict_cmd->add_option("--cube", pred_cfg.cube_path)->required();
  predict_cmd->add_option("--labels", pred_cfg.labels_path, "Mask unlabeled pixels to 0");
  predict_cmd->add_option("--run", pred_run)->required();
  predict_cmd->add_option("--pca", pred_cfg.pca_path);
  predict_cmd->add_option("--out", pred_out)->required();
  predict_cmd->add_option("--threads", pred_cfg.threads)->capture_default_str();
  predict_cmd->add_flag("--deterministic", pred_cfg.deterministic);

  RunConfig sweep_cfg;
  std::vector<std::size_t> windows = kSweepWindows;
  auto* sweep = app.add_subcommand("sweep", "Train/evaluate over a list of window sizes");
  add_train_options(sweep, sweep_cfg);
  sweep->add_option("--out", sweep_cfg.out, "Output directory")->required();
  sweep->add_option("--windows", windows, "Window sizes")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*summary) return cmd_summary(sum_window, sum_bands, sum_classes);
    if (*synth) {
      return cmd_synth(synth_cube, synth_labels, synth_rows, synth_cols, synth_bands, synth_noise,
                       synth_seed);
    }
    if (*pca) return cmd_pca(pca_cfg);
    if (*train_cmd) {
      dispatch_train(train_cfg);
      return 0;
    }
    if (*evaluate_cmd) return cmd_evaluate(eval_cfg, eval_run, eval_report);
    if (*predict_cmd) return cmd_predict(pred_cfg, pred_run, pred_out);
    if (*sweep) return cmd_sweep(sweep_cfg, windows);
  } catch (const Error& e) {
    std::cerr << "error: " << kind_name(e.kind()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
