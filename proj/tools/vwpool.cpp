#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vw/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Second-order Voronoi pooling with shrinkage-regularized ZCA whitening"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  app.add_option("--config", config_path, "run config file (key = value lines)");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out, "output directory")->capture_default_str();

  CLI::App* c_gen = app.add_subcommand("gen-synth", "generate synthetic place/scan data");

  CLI::App* c_pool = app.add_subcommand("pool", "pool scans into a descriptor database");
  vw::cmd::PoolArgs pool_args;
  bool dump_cov = false;
  c_pool->add_option("--model", pool_args.model_path, "model checkpoint (.vwmd)")->required();
  c_pool->add_option("--scans", pool_args.scans_path, "scan set (.vwsc)")->required();
  c_pool->add_flag("--no-whiten", pool_args.no_whiten, "flatten the pooled matrix untouched");
  c_pool->add_option("--eps", pool_args.eps, "override the whitening ridge");
  c_pool->add_option("--sigma", pool_args.sigma, "override the descriptor scale");
  c_pool->add_flag("--dump-covariances", dump_cov, "also write per-scan covariance stages");

  CLI::App* c_grad = app.add_subcommand("gradcheck", "compare tape gradients to finite differences");
  vw::cmd::GradcheckArgs grad_args;
  c_grad->set_help_flag("--help", "print help");  // frees -h for the step size
  c_grad->add_option("--seeds", grad_args.seeds, "number of consecutive seeds")
      ->capture_default_str();
  c_grad->add_option("--h", grad_args.h, "finite-difference step")->capture_default_str();
  c_grad->add_option("--tolerance-core", grad_args.tol_core, "rel. err bound, no-whitening path")
      ->capture_default_str();
  c_grad->add_option("--tolerance-svdpi", grad_args.tol_svdpi, "rel. err bound, whitening path")
      ->capture_default_str();
  c_grad->add_flag("--no-svdpi-backward", grad_args.no_svdpi_backward,
                   "block the eigendecomposition gradient; the discrepancy must show");

  CLI::App* c_train = app.add_subcommand("train-toy", "triplet-train the towers end to end");
  vw::cmd::TrainToyArgs train_args;
  std::string ablate_name = "none";
  c_train->add_option("--scans", train_args.scans_path, "training scan set (.vwsc)")->required();
  c_train->add_option("--val", train_args.val_path, "held-out scan set for per-epoch r@1");
  c_train->add_option("--ablate", ablate_name, "none | rblw | svdpi | whiten")
      ->capture_default_str();
  c_train->add_option("--max-steps", train_args.max_steps, "stop after this many steps (0 = off)")
      ->capture_default_str();

  CLI::App* c_eval = app.add_subcommand("eval", "retrieval metrics of queries against a database");
  vw::cmd::EvalArgs eval_args;
  std::string metric_list = "r@1,r@1pct,map@10,f1max,mrr,roc";
  std::optional<double> radius_flag;
  c_eval->add_option("--db", eval_args.db_path, "database descriptors (.vwdb)")->required();
  c_eval->add_option("--queries", eval_args.queries_path, "query descriptors (.vwdb)")->required();
  c_eval->add_option("--radius", radius_flag, "geographic relevance radius in meters");
  c_eval->add_option("--metrics", metric_list, "comma-separated list")->capture_default_str();
  c_eval->add_flag("--exclude-self", eval_args.exclude_self, "drop same-id matches");

  CLI::App* c_an = app.add_subcommand("analyze", "rank spectra or cross-cell W2 reports");
  vw::cmd::AnalyzeArgs an_args;
  c_an->add_option("mode", an_args.mode, "ranks | w2")->required();
  c_an->add_option("--input", an_args.input_path, "covariance dump (.vwcv) or descriptors (.vwdb)")
      ->required();
  c_an->add_option("--compare", an_args.compare_path, "second descriptor DB for w2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int r = app.exit(e);
    return r == 0 ? 0 : 1;
  }

  try {
    vw::io::RunConfig cfg;
    if (!config_path.empty()) cfg = vw::io::load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    std::filesystem::create_directories(out);

    if (c_gen->parsed()) {
      vw::cmd::GenSynthArgs a;
      a.cfg = cfg;
      a.out_dir = out;
      return vw::cmd::gen_synth(a);
    }
    if (c_pool->parsed()) {
      pool_args.out_path = out + "/descriptors.vwdb";
      if (dump_cov) pool_args.dump_covariances = out + "/covariances.vwcv";
      return vw::cmd::pool(pool_args);
    }
    if (c_grad->parsed()) {
      grad_args.seed = cfg.seed;
      return vw::cmd::gradcheck(grad_args);
    }
    if (c_train->parsed()) {
      train_args.cfg = cfg;
      train_args.out_dir = out;
      train_args.ablate = vw::train::parse_ablate(ablate_name);
      return vw::cmd::train_toy(train_args);
    }
    if (c_eval->parsed()) {
      eval_args.radius = radius_flag.value_or(cfg.radius);
      eval_args.out_csv = out + "/metrics.csv";
      eval_args.metrics.clear();
      std::string cur;
      for (char ch : metric_list + ",") {
        if (ch == ',') {
          if (!cur.empty()) eval_args.metrics.push_back(cur);
          cur.clear();
        } else {
          cur += ch;
        }
      }
      if (eval_args.metrics.empty()) throw std::invalid_argument("eval: empty metric list");
      return vw::cmd::eval(eval_args);
    }
    if (c_an->parsed()) {
      an_args.out_csv = out + "/" + an_args.mode + ".csv";
      return vw::cmd::analyze(an_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
