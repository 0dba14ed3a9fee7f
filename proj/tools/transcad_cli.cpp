// Command-line surface for the sketch-extrude toolkit: dataset synthesis,
// surface sampling, perturbation, training, inference, retrieval and metric
// reports. Every subcommand is a pure function of (inputs, flags, seed).

#include <cstdint>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "transcad/model/train.hpp"
#include "transcad/pipeline.hpp"

namespace {

using namespace transcad;

int run_synth(const SynthOptions& opt) {
  const Manifest manifest = cmd_synth(opt);
  emit_run_config(opt.out_dir, "synth",
                  {{"count", opt.count},
                   {"seed", opt.seed},
                   {"points", opt.points},
                   {"train_frac", opt.train_frac},
                   {"val_frac", opt.val_frac},
                   {"jobs", opt.jobs}});
  std::cout << "wrote " << manifest.items.size() << " sequence/cloud pairs to " << opt.out_dir
            << " (digest " << manifest.digest << ")\n";
  return 0;
}

int run_sample(const std::string& in_dir, const std::string& out_dir, int points,
               std::uint64_t seed, int jobs) {
  const auto ids = list_ids(in_dir, ".json");
  if (ids.empty()) throw Error("sample: no sequence files in " + in_dir);
  fs::create_directories(out_dir);
  emit_run_config(out_dir, "sample",
                  {{"in", in_dir}, {"points", points}, {"seed", seed}, {"jobs", jobs}});
  std::vector<std::string> failures(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    const auto seq = load_sequence((fs::path(in_dir) / (ids[i] + ".json")).string());
    try {
      const auto cloud = sample_surface(seq, points, derive_seed(seed, fnv1a64(ids[i])));
      save_ply(cloud, (fs::path(out_dir) / (ids[i] + ".ply")).string());
    } catch (const EmptySolidError& e) {
      failures[i] = e.what();
    }
  });
  int rc = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!failures[i].empty()) {
      std::cerr << "sample: " << ids[i] << ": " << failures[i] << "\n";
      rc = 1;
    }
  }
  return rc;
}

int run_eval(const EvalOptions& opt, const std::string& out_csv, const std::string& out_json) {
  auto result = transcad::run_eval(opt);
  if (!out_csv.empty()) write_eval_csv(result.rows, out_csv);
  if (!out_json.empty()) {
    std::ofstream out(out_json, std::ios::binary);
    out << summary_to_json(result.summary, opt.scoring, opt.seed).dump(2) << "\n";
  }
  std::cout << "models " << result.summary.total << "  mean APCS " << result.summary.mean_apcs
            << "  median CD " << result.summary.median_cd_reported << "  IR "
            << result.summary.invalidity_ratio << "  macro F1 " << result.summary.macro_f1
            << "\n";
  return 0;
}

int run_train(const std::string& data_dir, const std::string& split, const std::string& preset,
              const std::string& variant, const std::string& out_checkpoint,
              const std::string& out_curve, TrainOptions opt, bool lr_set, bool warmup_set,
              bool batch_set) {
  ModelConfig cfg = ModelConfig::from_preset(preset);
  cfg.variant = model_variant_from_string(variant);
  // explicit flags override the preset defaults
  if (lr_set) cfg.lr = opt.lr; else opt.lr = cfg.lr;
  if (warmup_set) cfg.warmup_steps = opt.warmup_steps; else opt.warmup_steps = cfg.warmup_steps;
  if (batch_set) cfg.batch_size = opt.batch_size; else opt.batch_size = cfg.batch_size;

  const Manifest manifest = load_manifest((fs::path(data_dir) / "manifest.json").string());
  std::vector<std::string> ids;
  if (split == "all") {
    for (const auto& item : manifest.items) ids.push_back(item.id);
  } else {
    const auto it = manifest.splits.find(split);
    if (it == manifest.splits.end()) throw Error("train: manifest has no split '" + split + "'");
    ids = it->second;
  }
  if (ids.empty()) throw Error("train: empty split '" + split + "'");

  std::map<std::string, ManifestItem> by_id;
  for (const auto& item : manifest.items) by_id[item.id] = item;
  std::vector<TrainingExample> dataset;
  for (const auto& id : ids) {
    const auto& item = by_id.at(id);
    const auto seq = load_sequence((fs::path(data_dir) / item.sequence).string());
    const auto cloud = load_ply((fs::path(data_dir) / item.cloud).string());
    auto ex = make_training_example(cloud, seq, cfg);
    ex.id = id;
    dataset.push_back(std::move(ex));
  }

  TransCadNet net = TransCadNet::create(cfg, opt.seed);
  const std::string ckpt_dir = fs::path(out_checkpoint).has_parent_path()
                                   ? fs::path(out_checkpoint).parent_path().string()
                                   : std::string(".");
  emit_run_config(ckpt_dir, "train",
                  {{"data", data_dir},
                   {"split", split},
                   {"variant", variant},
                   {"steps", opt.steps},
                   {"batch", opt.batch_size},
                   {"lr", opt.lr},
                   {"warmup", opt.warmup_steps},
                   {"seed", opt.seed},
                   {"model", cfg.to_json()}});
  const TrainResult result = train(net, dataset, opt, &std::cout);
  save_model(net, out_checkpoint);
  if (!out_curve.empty()) write_loss_curve(result.curve, out_curve);
  std::cout << "checkpoint " << out_checkpoint << " final loss "
            << result.curve.back().total << "\n";
  return 0;
}

int run_infer(const std::string& checkpoint, const std::string& cloud_dir,
              const std::string& out_dir, int jobs) {
  const TransCadNet net = load_model(checkpoint);
  const auto ids = list_ids(cloud_dir, ".ply");
  if (ids.empty()) throw Error("infer: no clouds in " + cloud_dir);
  fs::create_directories(out_dir);
  emit_run_config(out_dir, "infer",
                  {{"checkpoint", checkpoint}, {"clouds", cloud_dir}, {"jobs", jobs}});
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    const auto cloud = load_ply((fs::path(cloud_dir) / (ids[i] + ".ply")).string());
    const CadSequence seq = net.infer(cloud);
    save_sequence(seq, (fs::path(out_dir) / (ids[i] + ".json")).string());
  });
  std::cout << "inferred " << ids.size() << " sequences to " << out_dir << "\n";
  return 0;
}

int run_report(const std::string& csv_path, const std::string& out_json, int bins) {
  std::ifstream in(csv_path);
  if (!in) throw Error("report: cannot open " + csv_path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<EvalRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EvalRow row;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() < 10) throw ParseError("report: malformed row: " + line);
    row.id = fields[0];
    row.apcs = std::stod(fields[1]);
    row.csss = std::stod(fields[2]);
    if (!fields[3].empty()) row.cd_reported = std::stod(fields[3]);
    row.valid = fields[4] == "1";
    row.acc_cmd = std::stod(fields[5]);
    row.acc_param = std::stod(fields[6]);
    row.f1 = std::stod(fields[7]);
    if (!fields[8].empty()) row.complexity_reported = std::stod(fields[8]);
    rows.push_back(std::move(row));
  }
  const auto summary = aggregate_report(rows, bins);
  const ScoringConfig scoring;
  if (!out_json.empty()) {
    std::ofstream out(out_json, std::ios::binary);
    out << summary_to_json(summary, scoring, 0).dump(2) << "\n";
  }
  std::cout << "models " << summary.total << "  mean APCS " << summary.mean_apcs
            << "  median CD " << summary.median_cd_reported << "  IR "
            << summary.invalidity_ratio << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sketch-extrude CAD sequence toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int jobs = 1;
  std::string preset = "toy";
  app.set_config("--config", "", "config file with long-option defaults (key=value tree)");
  app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
  app.add_option("--jobs", jobs, "worker threads for file-level parallelism")
      ->capture_default_str();
  app.add_option("--preset", preset, "model preset (toy|paper)")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic sequence/cloud dataset");
  SynthOptions synth_opt;
  synth->add_option("--count", synth_opt.count, "number of models")->capture_default_str();
  synth->add_option("--out", synth_opt.out_dir, "output directory")->required();
  synth->add_option("--points", synth_opt.points, "points per cloud")->capture_default_str();
  synth->add_option("--train-frac", synth_opt.train_frac, "train split fraction")
      ->capture_default_str();
  synth->add_option("--val-frac", synth_opt.val_frac, "val split fraction")
      ->capture_default_str();

  // sample
  auto* sample = app.add_subcommand("sample", "sample surface clouds for sequence files");
  std::string sample_in, sample_out;
  int sample_points = 4096;
  sample->add_option("--in", sample_in, "directory of sequence .json files")->required();
  sample->add_option("--out", sample_out, "output directory for .ply clouds")->required();
  sample->add_option("--points", sample_points, "points per cloud")->capture_default_str();

  // perturb
  auto* perturb = app.add_subcommand("perturb", "apply noise or hole perturbation to clouds");
  PerturbOptions perturb_opt;
  perturb->add_option("--in", perturb_opt.in_dir, "input cloud directory")->required();
  perturb->add_option("--out", perturb_opt.out_dir, "output cloud directory")->required();
  perturb->add_option("--mode", perturb_opt.mode, "noise|holes")->capture_default_str();
  perturb->add_option("--amplitude", perturb_opt.noise.amplitude, "noise amplitude bound")
      ->capture_default_str();
  perturb->add_option("--octaves", perturb_opt.noise.octaves, "noise octaves")
      ->capture_default_str();
  perturb->add_option("--max-holes", perturb_opt.holes.max_holes, "max holes per cloud")
      ->capture_default_str();
  perturb->add_option("--min-remaining", perturb_opt.holes.min_remaining,
                      "minimum points after hole punching")
      ->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate predicted sequences against ground truth");
  EvalOptions eval_opt;
  std::string eval_csv = "report.csv", eval_json = "summary.json";
  eval->add_option("--pred", eval_opt.pred_dir, "predicted sequence directory")->required();
  eval->add_option("--gt", eval_opt.gt_dir, "ground-truth sequence directory")->required();
  eval->add_option("--csv", eval_csv, "per-model CSV output")->capture_default_str();
  eval->add_option("--json", eval_json, "summary JSON output")->capture_default_str();
  eval->add_option("--cd-points", eval_opt.cd_points, "points per cloud for CD")
      ->capture_default_str();
  eval->add_option("--k", eval_opt.scoring.k, "scoring decay rate")->capture_default_str();
  eval->add_option("--eta", eval_opt.scoring.eta, "parameter accuracy tolerance (bins)")
      ->capture_default_str();
  eval->add_option("--complexity-bins", eval_opt.complexity_bins,
                   "equal-count complexity bins (needs --train-dir)")
      ->capture_default_str();
  eval->add_option("--train-dir", eval_opt.train_dir, "train cloud directory for complexity");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model on a synth dataset");
  std::string train_data, train_split = "train", train_variant = "hierarchical";
  std::string train_ckpt = "model.ckpt", train_curve = "loss.csv";
  TrainOptions train_opt;
  train_cmd->add_option("--data", train_data, "dataset directory (with manifest.json)")
      ->required();
  train_cmd->add_option("--split", train_split, "manifest split to train on (or 'all')")
      ->capture_default_str();
  train_cmd->add_option("--variant", train_variant, "hierarchical|no_refiner|flat")
      ->capture_default_str();
  train_cmd->add_option("--checkpoint", train_ckpt, "output checkpoint path")
      ->capture_default_str();
  train_cmd->add_option("--curve", train_curve, "loss curve CSV path")->capture_default_str();
  train_cmd->add_option("--steps", train_opt.steps, "training steps")->capture_default_str();
  auto* batch_opt = train_cmd->add_option("--batch", train_opt.batch_size,
                                          "batch size (default: preset)");
  auto* lr_opt = train_cmd->add_option("--lr", train_opt.lr, "learning rate (default: preset)");
  auto* warmup_opt = train_cmd->add_option("--warmup", train_opt.warmup_steps,
                                           "linear warm-up steps (default: preset)");
  train_cmd->add_option("--threads", train_opt.threads, "batch worker threads (0 = auto)")
      ->capture_default_str();

  // infer
  auto* infer = app.add_subcommand("infer", "predict sequences for cloud inputs");
  std::string infer_ckpt, infer_clouds, infer_out;
  infer->add_option("--checkpoint", infer_ckpt, "trained checkpoint")->required();
  infer->add_option("--clouds", infer_clouds, "input cloud directory")->required();
  infer->add_option("--out", infer_out, "output sequence directory")->required();

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "chamfer-distance retrieval baseline");
  RetrieveOptions retr_opt;
  retrieve->add_option("--queries", retr_opt.query_dir, "query cloud directory")->required();
  retrieve->add_option("--candidates", retr_opt.candidate_dir,
                       "candidate directory (paired .json/.ply)")
      ->required();
  retrieve->add_option("--out", retr_opt.out_dir, "output sequence directory")->required();

  // report
  auto* report = app.add_subcommand("report", "aggregate a per-model CSV report");
  std::string report_csv, report_json = "summary.json";
  int report_bins = 0;
  report->add_option("--csv", report_csv, "per-model CSV input")->required();
  report->add_option("--json", report_json, "summary JSON output")->capture_default_str();
  report->add_option("--bins", report_bins, "complexity bins")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      synth_opt.seed = seed;
      synth_opt.jobs = jobs;
      return run_synth(synth_opt);
    }
    if (sample->parsed()) return run_sample(sample_in, sample_out, sample_points, seed, jobs);
    if (perturb->parsed()) {
      perturb_opt.seed = seed;
      perturb_opt.jobs = jobs;
      const auto summary = cmd_perturb(perturb_opt);
      std::cout << "perturbed " << summary.processed.size() << " clouds";
      if (!summary.skipped.empty()) {
        std::cout << "; skipped (too small):";
        for (const auto& id : summary.skipped) std::cout << " " << id;
      }
      std::cout << "\n";
      return 0;
    }
    if (eval->parsed()) {
      eval_opt.seed = seed;
      eval_opt.jobs = jobs;
      return run_eval(eval_opt, eval_csv, eval_json);
    }
    if (train_cmd->parsed()) {
      train_opt.seed = seed;
      return run_train(train_data, train_split, preset, train_variant, train_ckpt, train_curve,
                       train_opt, lr_opt->count() > 0, warmup_opt->count() > 0,
                       batch_opt->count() > 0);
    }
    if (infer->parsed()) return run_infer(infer_ckpt, infer_clouds, infer_out, jobs);
    if (retrieve->parsed()) {
      retr_opt.jobs = jobs;
      cmd_retrieve(retr_opt);
      std::cout << "retrieved sequences to " << retr_opt.out_dir << "\n";
      return 0;
    }
    if (report->parsed()) return run_report(report_csv, report_json, report_bins);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
