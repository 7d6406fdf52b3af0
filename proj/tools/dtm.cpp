#include <chrono>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "dtm/adam.hpp"
#include "dtm/checkpoint.hpp"
#include "dtm/config.hpp"
#include "dtm/errors.hpp"
#include "dtm/metrics.hpp"
#include "dtm/pgm.hpp"
#include "dtm/stgraph.hpp"
#include "dtm/synth.hpp"
#include "dtm/trainer.hpp"

namespace {

// Exit codes: 0 ok, 1 check failure, 2 config, 3 I/O, 4 numeric,
// 5 checkpoint mismatch.
enum ExitCode {
  kOk = 0,
  kCheckFailure = 1,
  kConfigError = 2,
  kIoError = 3,
  kNumericError = 4,
  kCheckpointError = 5,
};

struct CommonOpts {
  std::string config_path;
  dtm::Config cfg;

  void load() {
    if (!config_path.empty()) cfg = dtm::load_config(config_path);
  }
};

int run_synth(const dtm::Config& cfg, const std::string& out_dir) {
  dtm::SynthConfig sc = cfg.synth();
  dtm::synth_generate(sc, out_dir);
  std::printf("wrote %d sequences (%d frames, %dx%d) to %s\n", sc.sequences, sc.frames,
              sc.size, sc.size, out_dir.c_str());
  return kOk;
}

int run_train(const dtm::Config& cfg, const std::string& data_dir, const std::string& out_ckpt) {
  const std::vector<dtm::Sequence> data = dtm::load_dataset(data_dir, true);
  dtm::ParamStore params = dtm::init_params(cfg.model(), cfg.seed);
  dtm::TrainStats stats = dtm::train_model(cfg, data, params, &std::cout);
  dtm::save_checkpoint(out_ckpt, params);
  std::cerr << "saved checkpoint to " << out_ckpt << " after " << stats.steps
            << " optimizer steps\n";
  return kOk;
}

int run_infer(const dtm::Config& cfg, const std::string& data_dir, const std::string& ckpt,
              const std::string& out_dir) {
  const std::vector<dtm::Sequence> data = dtm::load_dataset(data_dir, false);
  dtm::ParamStore params = dtm::load_checkpoint(ckpt);
  dtm::validate_against(params, dtm::init_params(cfg.model(), cfg.seed));
  dtm::infer_dataset(cfg, params, data, out_dir);
  std::printf("wrote %zu sequences to %s\n", data.size(), out_dir.c_str());
  return kOk;
}

int run_eval(const dtm::Config& cfg, const std::string& pred_dir, const std::string& gt_dir,
             const std::string& report_path) {
  dtm::EvalReport rep = dtm::evaluate(pred_dir, gt_dir, cfg.boundary_tol, cfg.davis_tol);
  if (!report_path.empty()) dtm::write_file_atomic(report_path, dtm::report_csv(rep));
  std::printf("%s\n", dtm::global_row_csv(rep).c_str());
  return kOk;
}

int run_gradcheck_cmd(uint64_t seed, double eps, double tol) {
  const double err = dtm::run_gradcheck(seed, eps);
  std::printf("max_rel_err=%.9e\n", err);
  return err <= tol ? kOk : kCheckFailure;
}

int run_bench() {
  using clock = std::chrono::steady_clock;

  // gcf on a k=2 graph over a 16x16 grid, d=32.
  {
    dtm::GraphConfig gc;
    gc.k = 2;
    gc.w = 16;
    gc.h = 16;
    dtm::StGraphPtr g = dtm::make_graph(gc);
    dtm::Tape tape;
    dtm::Rng rng(7);
    dtm::Tensor vals = dtm::Tensor::zeros({static_cast<int>(g->edge_count())});
    for (double& v : vals.data) v = rng.uniform(0.1, 0.9);
    dtm::Tensor x = dtm::Tensor::zeros({g->n, 32});
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    dtm::Var values = tape.constant(vals);
    dtm::Var feats = tape.constant(x);
    dtm::NormalizedAdjacency norm = dtm::normalize(g, values);
    const int iters = 200;
    const auto t0 = clock::now();
    for (int i = 0; i < iters; ++i) (void)dtm::gcf(g, norm, feats);
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    std::printf("gcf: %.1f ops/sec (n=%d, nnz=%lld, d=32)\n", iters / secs, g->n,
                static_cast<long long>(g->edge_count()));
  }

  // sgru_step at d=32.
  {
    dtm::Rng rng(11);
    dtm::Tensor w = dtm::Tensor::zeros({32, 64});
    dtm::Tensor xv = dtm::Tensor::zeros({32}), hv = dtm::Tensor::zeros({32});
    for (double& v : w.data) v = rng.uniform(-0.3, 0.3);
    for (double& v : xv.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : hv.data) v = rng.uniform(-1.0, 1.0);
    const int iters = 20000;
    const auto t0 = clock::now();
    for (int i = 0; i < iters; ++i) {
      dtm::Tape tape;
      dtm::Var x = tape.constant(xv);
      dtm::Var h = tape.constant(hv);
      dtm::Var wm = tape.constant(w);
      (void)dtm::sgru_step(x, h, wm);
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    std::printf("sgru_step: %.1f ops/sec (d=32)\n", iters / secs);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual temporal memory video object segmentation"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string out_dir, data_dir, ckpt_path, pred_dir, gt_dir, report_path;
  uint64_t seed_flag = 0;
  bool seed_set = false;
  int epochs_flag = 0;
  bool epochs_set = false;
  int sequences_flag = 0, frames_flag = 0, size_flag = 0;
  double occlusion_flag = -1.0;
  std::string shapes_flag;
  bool disable_short = false, disable_long = false, unweighted = false;
  double tol_flag = -1.0;
  bool davis_flag = false;
  uint64_t gc_seed = 1234;
  double gc_eps = 1e-5, gc_tol = 1e-4;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "config file (key = value lines)");
  };
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_flag, "override the seed")->each([&](const std::string&) {
      seed_set = true;
    });
  };
  auto add_ablations = [&](CLI::App* cmd) {
    cmd->add_flag("--disable-short", disable_short, "short-term memory off");
    cmd->add_flag("--disable-long", disable_long, "long-term memory off");
    cmd->add_flag("--unweighted-adjacency", unweighted, "identity edge-weight projections");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", out_dir, "output dataset root")->required();
  add_config(synth);
  add_seed(synth);
  synth->add_option("--sequences", sequences_flag, "sequence count");
  synth->add_option("--frames", frames_flag, "frames per sequence");
  synth->add_option("--size", size_flag, "square frame size");
  synth->add_option("--occlusion-rate", occlusion_flag, "occlusion probability");
  synth->add_option("--shapes", shapes_flag, "disk, rectangle or both");

  CLI::App* train = app.add_subcommand("train", "train on a dataset");
  train->add_option("--data", data_dir, "dataset root")->required();
  train->add_option("--out", ckpt_path, "output checkpoint")->required();
  add_config(train);
  add_seed(train);
  train->add_option("--epochs", epochs_flag, "override epoch count")
      ->each([&](const std::string&) { epochs_set = true; });
  add_ablations(train);

  CLI::App* infer = app.add_subcommand("infer", "segment sequences with a checkpoint");
  infer->add_option("--data", data_dir, "dataset root (first-frame masks required)")->required();
  infer->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  infer->add_option("--out", out_dir, "output root for predicted masks")->required();
  add_config(infer);
  add_ablations(infer);

  CLI::App* eval = app.add_subcommand("eval", "evaluate predictions against ground truth");
  eval->add_option("--pred", pred_dir, "prediction root")->required();
  eval->add_option("--gt", gt_dir, "ground-truth root")->required();
  eval->add_option("--tol", tol_flag, "boundary tolerance in pixels");
  eval->add_flag("--davis-tol", davis_flag, "use 0.8% of the image diagonal");
  eval->add_option("--report", report_path, "CSV report path");
  add_config(eval);

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--seed", gc_seed, "toy model seed");
  gradcheck->add_option("--eps", gc_eps, "finite-difference step");
  gradcheck->add_option("--tol", gc_tol, "max relative error to accept");

  CLI::App* bench = app.add_subcommand("bench", "kernel throughput");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    common.load();
    if (seed_set) common.cfg.seed = seed_flag;
    if (epochs_set) common.cfg.epochs = epochs_flag;
    if (sequences_flag > 0) common.cfg.synth_sequences = sequences_flag;
    if (frames_flag > 0) common.cfg.synth_frames = frames_flag;
    if (size_flag > 0) common.cfg.synth_size = size_flag;
    if (occlusion_flag >= 0.0) common.cfg.synth_occlusion_rate = occlusion_flag;
    if (!shapes_flag.empty()) common.cfg.synth_shapes = shapes_flag;
    if (disable_short) common.cfg.disable_short = true;
    if (disable_long) common.cfg.disable_long = true;
    if (unweighted) common.cfg.unweighted_adjacency = true;
    if (tol_flag >= 0.0) common.cfg.boundary_tol = tol_flag;
    if (davis_flag) common.cfg.davis_tol = true;

    if (synth->parsed()) return run_synth(common.cfg, out_dir);
    if (train->parsed()) return run_train(common.cfg, data_dir, ckpt_path);
    if (infer->parsed()) return run_infer(common.cfg, data_dir, ckpt_path, out_dir);
    if (eval->parsed()) return run_eval(common.cfg, pred_dir, gt_dir, report_path);
    if (gradcheck->parsed()) return run_gradcheck_cmd(gc_seed, gc_eps, gc_tol);
    if (bench->parsed()) return run_bench();
  } catch (const dtm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const dtm::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const dtm::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kCheckpointError;
  } catch (const dtm::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const dtm::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailure;
  }
  return kOk;
}
